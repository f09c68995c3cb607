//! Bag-of-words corpora: UCI sparse format I/O, vocabulary filtering,
//! held-out token splits and synthetic corpora drawn from the gamma-NB model.

mod split;
mod synth;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::distributions::DistError;

pub use split::{split_train_test, HeldOutSplit};
pub use synth::{synthesize_corpus, GroundTruth, ParamPrior, SynthSettings};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("document {0} has no tokens")]
    EmptyDocument(usize),
    #[error("{param} out of domain: {value}")]
    Domain { param: &'static str, value: f64 },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Sparse document-term count matrix with its vocabulary.
///
/// Each document is a list of `(term, count)` pairs sorted by term with
/// strictly positive counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    vocab: Vec<String>,
    docs: Vec<Vec<(u32, u32)>>,
    total_tokens: u64,
}

impl Corpus {
    /// Build a corpus, sorting each document and merging repeated terms.
    pub fn new(vocab: Vec<String>, docs: Vec<Vec<(u32, u32)>>) -> Result<Self, CorpusError> {
        let v = vocab.len();
        let mut total_tokens = 0u64;
        let mut cleaned = Vec::with_capacity(docs.len());
        for (j, mut doc) in docs.into_iter().enumerate() {
            doc.sort_unstable_by_key(|&(t, _)| t);
            let mut merged: Vec<(u32, u32)> = Vec::with_capacity(doc.len());
            for (t, c) in doc {
                if t as usize >= v {
                    return Err(CorpusError::Invalid(format!("document {j}: term {t} >= vocabulary size {v}")));
                }
                if c == 0 {
                    continue;
                }
                total_tokens += c as u64;
                match merged.last_mut() {
                    Some(last) if last.0 == t => last.1 += c,
                    _ => merged.push((t, c)),
                }
            }
            cleaned.push(merged);
        }
        Ok(Self {
            vocab,
            docs: cleaned,
            total_tokens,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc(&self, j: usize) -> &[(u32, u32)] {
        &self.docs[j]
    }

    pub fn docs(&self) -> &[Vec<(u32, u32)>] {
        &self.docs
    }

    pub fn doc_len(&self, j: usize) -> u64 {
        self.docs[j].iter().map(|&(_, c)| c as u64).sum()
    }

    /// Token instances of document `j`, expanded in term order.
    pub fn tokens(&self, j: usize) -> Vec<u32> {
        self.docs[j]
            .iter()
            .flat_map(|&(t, c)| std::iter::repeat(t).take(c as usize))
            .collect()
    }

    /// Number of distinct documents each term occurs in.
    pub fn document_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0; self.vocab.len()];
        for doc in &self.docs {
            for &(t, _) in doc {
                df[t as usize] += 1;
            }
        }
        df
    }

    /// Write the corpus as a UCI docword file plus a one-term-per-line vocabulary.
    pub fn write_bag_of_words(&self, docword_path: &Path, vocab_path: &Path) -> Result<(), CorpusError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| CorpusError::Io { path, source }
        };
        let nnz: usize = self.docs.iter().map(Vec::len).sum();
        let mut out = BufWriter::new(File::create(docword_path).map_err(io_err(docword_path))?);
        let mut body = format!("{}\n{}\n{}\n", self.docs.len(), self.vocab.len(), nnz);
        for (j, doc) in self.docs.iter().enumerate() {
            for &(t, c) in doc {
                body.push_str(&format!("{} {} {}\n", j + 1, t + 1, c));
            }
        }
        out.write_all(body.as_bytes()).map_err(io_err(docword_path))?;
        out.flush().map_err(io_err(docword_path))?;

        let mut out = BufWriter::new(File::create(vocab_path).map_err(io_err(vocab_path))?);
        for term in &self.vocab {
            writeln!(out, "{term}").map_err(io_err(vocab_path))?;
        }
        out.flush().map_err(io_err(vocab_path))?;
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    BufReader::new(file)
        .lines()
        .map(|line| {
            line.map(|l| l.trim_end_matches('\r').to_string())
                .map_err(|source| CorpusError::Io {
                    path: path.display().to_string(),
                    source,
                })
        })
        .collect()
}

/// Load a UCI bag-of-words corpus (`D`, `W`, `NNZ` header, then 1-indexed
/// `docID wordID count` triples) with its vocabulary file.
pub fn load_bag_of_words(docword_path: &Path, vocab_path: &Path) -> Result<Corpus, CorpusError> {
    let dw_name = docword_path.display().to_string();
    let parse_err = |line: usize, message: String| CorpusError::Parse {
        path: dw_name.clone(),
        line,
        message,
    };

    let lines = read_lines(docword_path)?;
    let mut content = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut header = [0u64; 3];
    for (slot, name) in header.iter_mut().zip(["D", "W", "NNZ"]) {
        let (line, text) = content
            .next()
            .ok_or_else(|| parse_err(lines.len() + 1, format!("missing header field {name}")))?;
        *slot = text
            .parse()
            .map_err(|_| parse_err(line, format!("header field {name} is not a non-negative integer: {text:?}")))?;
    }
    let [num_docs, vocab_size, nnz] = header;

    let mut docs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); num_docs as usize];
    let mut seen = 0u64;
    let mut last_line = 3;
    for (line, text) in content {
        last_line = line;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, format!("expected `docID wordID count`, got {text:?}")));
        }
        let mut nums = [0i64; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(line, format!("not an integer: {field:?}")))?;
        }
        let [d, w, c] = nums;
        if d < 1 || d as u64 > num_docs {
            return Err(parse_err(line, format!("docID {d} outside 1..={num_docs}")));
        }
        if w < 1 || w as u64 > vocab_size {
            return Err(parse_err(line, format!("wordID {w} outside 1..={vocab_size}")));
        }
        if c <= 0 || c > u32::MAX as i64 {
            return Err(parse_err(line, format!("count must be positive, got {c}")));
        }
        let doc = &mut docs[(d - 1) as usize];
        let term = (w - 1) as u32;
        if doc.iter().any(|&(t, _)| t == term) {
            return Err(parse_err(line, format!("duplicate entry for docID {d}, wordID {w}")));
        }
        doc.push((term, c as u32));
        seen += 1;
    }
    if seen != nnz {
        return Err(parse_err(last_line, format!("header NNZ = {nnz} but {seen} entries were read")));
    }

    let vocab_lines = read_lines(vocab_path)?;
    let vocab_name = vocab_path.display().to_string();
    if vocab_lines.len() as u64 != vocab_size {
        return Err(CorpusError::Parse {
            path: vocab_name,
            line: vocab_lines.len(),
            message: format!("expected {vocab_size} terms (W), found {} lines", vocab_lines.len()),
        });
    }
    let mut vocab = Vec::with_capacity(vocab_lines.len());
    for (i, term) in vocab_lines.into_iter().enumerate() {
        let term = term.trim().to_string();
        if term.is_empty() {
            return Err(CorpusError::Parse {
                path: vocab_name,
                line: i + 1,
                message: "empty term".into(),
            });
        }
        vocab.push(term);
    }
    Corpus::new(vocab, docs)
}

/// Drop terms that occur in fewer than `min_doc_freq` documents, remap term
/// indices densely and drop documents left empty.
pub fn filter_vocabulary(corpus: &Corpus, min_doc_freq: usize) -> Result<Corpus, CorpusError> {
    if min_doc_freq == 0 {
        return Err(CorpusError::Domain {
            param: "min_doc_freq",
            value: 0.0,
        });
    }
    let df = corpus.document_frequencies();
    let mut remap = vec![None; corpus.vocab_size()];
    let mut vocab = Vec::new();
    for (t, &f) in df.iter().enumerate() {
        if f >= min_doc_freq {
            remap[t] = Some(vocab.len() as u32);
            vocab.push(corpus.vocab[t].clone());
        }
    }
    let mut docs = Vec::with_capacity(corpus.num_docs());
    for (j, doc) in corpus.docs.iter().enumerate() {
        let kept: Vec<(u32, u32)> = doc
            .iter()
            .filter_map(|&(t, c)| remap[t as usize].map(|nt| (nt, c)))
            .collect();
        if kept.is_empty() {
            log::warn!("dropping document {} (no tokens left after vocabulary filtering)", j + 1);
        } else {
            docs.push(kept);
        }
    }
    if docs.is_empty() || vocab.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Corpus::new(vocab, docs)
}
