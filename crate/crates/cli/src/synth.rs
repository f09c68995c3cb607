use std::fs;
use std::path::{Path, PathBuf};

use nbproc_core::corpus::{synthesize_corpus, Corpus, GroundTruth, SynthSettings};
use nbproc_core::distributions::RandomSource;
use serde::Serialize;

use crate::error::CliError;
use crate::runner::write_json;

pub const DOCWORD_FILE: &str = "docword.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Serialize)]
struct TruthFile<'a> {
    seed: u64,
    settings: &'a SynthSettings,
    truth: &'a GroundTruth,
}

/// Paths of the files written by [`write_synthetic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFiles {
    pub docword: PathBuf,
    pub vocab: PathBuf,
    pub truth: PathBuf,
}

/// Draw a corpus and write it as UCI bag-of-words files plus the ground truth.
pub fn write_synthetic(settings: &SynthSettings, seed: u64, out: &Path) -> Result<(Corpus, SynthFiles), CliError> {
    let (corpus, truth) = synthesize_corpus(settings, &mut RandomSource::new(seed))?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let files = SynthFiles {
        docword: out.join(DOCWORD_FILE),
        vocab: out.join(VOCAB_FILE),
        truth: out.join(TRUTH_FILE),
    };
    corpus.write_bag_of_words(&files.docword, &files.vocab)?;
    write_json(&files.truth, &TruthFile { seed, settings, truth: &truth })?;
    Ok((corpus, files))
}
