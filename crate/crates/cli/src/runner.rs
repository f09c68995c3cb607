use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nbproc_core::corpus::{filter_vocabulary, load_bag_of_words, split_train_test, synthesize_corpus, Corpus};
use nbproc_core::distributions::RandomSource;
use nbproc_core::evaluation::{
    heldout_log_likelihood, summarize_parameters, write_parameter_csv, write_trace_csv, HeldOutLikelihood,
    ParameterSummary, SampleAccumulator, TraceRecord, TraceReport,
};
use nbproc_core::models::{count_active_topics, initialize, sweep, Documents, HyperParams, ModelKind, ModelState, SweepOptions};
use serde::Serialize;

use crate::config::{CorpusSource, RunConfig};
use crate::error::CliError;
use crate::COMMIT;

pub const TRACE_FILE: &str = "trace.csv";
pub const PARAMS_FILE: &str = "params.csv";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.json";
/// Present while a run is in progress or after it failed.
pub const SENTINEL_FILE: &str = "INCOMPLETE";

/// Result of fitting one train/test partition.
#[derive(Clone, Debug)]
pub struct PartitionFit {
    pub heldout: HeldOutLikelihood,
    pub active_topics: usize,
    pub trace: TraceReport,
    pub parameters: ParameterSummary,
    pub state: ModelState,
}

impl PartitionFit {
    pub fn perplexity(&self) -> f64 {
        self.heldout.perplexity()
    }
}

/// Split `corpus`, run the chain and score the held-out tokens with the
/// samples collected after burn-in. The split uses child source 0 of `rng`
/// and the chain child source 1.
pub fn fit_partition(
    kind: ModelKind,
    corpus: &Corpus,
    train_frac: f64,
    hyper: &HyperParams,
    workers: usize,
    rng: &RandomSource,
) -> Result<PartitionFit, CliError> {
    hyper.validate()?;
    let started = Instant::now();
    let split = split_train_test(corpus, train_frac, &mut rng.child(0))?;
    let docs = Documents::from_split(&split, corpus.vocab_size())?;
    let opts = SweepOptions { workers, fault: None };
    let mut chain = rng.child(1);

    let mut state = initialize(kind, &docs, hyper, &mut chain, &opts)?;
    let mut collected = SampleAccumulator::for_split(&split, corpus.vocab_size());
    let mut current = SampleAccumulator::for_split(&split, corpus.vocab_size());
    let mut trace = TraceReport::default();

    for it in 0..hyper.iters {
        sweep(&mut state, &docs, hyper, &mut chain, &opts)?;
        let perplexity = if it >= hyper.burnin {
            if (it - hyper.burnin) % hyper.collect_every == 0 {
                collected.accumulate(&state)?;
            }
            heldout_log_likelihood(&collected, &split)?.perplexity()
        } else {
            current.reset();
            current.accumulate(&state)?;
            heldout_log_likelihood(&current, &split)?.perplexity()
        };
        let record = TraceRecord::from_state(it + 1, perplexity, &state);
        if (it + 1) % 100 == 0 {
            log::info!(
                "{kind} iteration {}/{}: perplexity {:.2}, active topics {}",
                it + 1,
                hyper.iters,
                record.perplexity,
                record.active_topics
            );
        }
        trace.push(record);
    }

    let heldout = heldout_log_likelihood(&collected, &split)?;
    let active_topics = count_active_topics(&state);
    trace.final_perplexity = Some(heldout.perplexity());
    trace.final_active_topics = Some(active_topics);
    trace.runtime_seconds = Some(started.elapsed().as_secs_f64());
    Ok(PartitionFit {
        heldout,
        active_topics,
        trace,
        parameters: summarize_parameters(&state),
        state,
    })
}

/// Load the configured corpus and apply the vocabulary filter.
pub fn load_corpus(config: &RunConfig) -> Result<Corpus, CliError> {
    let corpus = match &config.corpus {
        CorpusSource::Files { docword, vocab } => load_bag_of_words(docword, vocab)?,
        CorpusSource::Synthetic { settings, seed } => synthesize_corpus(settings, &mut RandomSource::new(*seed))?.0,
    };
    if config.min_doc_freq > 1 {
        Ok(filter_vocabulary(&corpus, config.min_doc_freq)?)
    } else {
        Ok(corpus)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub partition: usize,
    pub perplexity: f64,
    pub log_likelihood: f64,
    pub test_tokens: usize,
    pub active_topics: usize,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub model: ModelKind,
    pub seed: u64,
    pub commit: String,
    pub config_hash: String,
    pub hyper: HyperParams,
    pub num_docs: usize,
    pub vocab_size: usize,
    /// Arithmetic mean of the partition perplexities.
    pub perplexity: f64,
    /// Perplexity of all partitions' held-out tokens taken together.
    pub pooled_perplexity: f64,
    /// Mean over partitions.
    pub active_topics: f64,
    pub partitions: Vec<PartitionReport>,
    pub runtime_seconds: f64,
}

/// Resolve `config`, fit every partition and write the artifacts into
/// `output_dir`. The sentinel file is removed only when everything succeeded.
pub fn run(config: RunConfig) -> Result<RunReport, CliError> {
    let config = config.resolve()?;
    let out = config
        .output_dir
        .clone()
        .ok_or_else(|| CliError::Usage("an output directory is required".into()))?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(out.display(), e))?;
    let sentinel = out.join(SENTINEL_FILE);
    fs::write(&sentinel, "run started; outputs in this directory are partial\n")
        .map_err(|e| CliError::io(sentinel.display(), e))?;
    let hash = config.config_hash.clone().expect("resolved config has a hash");
    write_json(&out.join(CONFIG_FILE), &config)?;

    let started = Instant::now();
    let corpus = load_corpus(&config)?;
    log::info!(
        "{}: {} documents, {} terms, {} tokens",
        config.model,
        corpus.num_docs(),
        corpus.vocab_size(),
        corpus.total_tokens()
    );
    let root = RandomSource::new(config.seed);
    let mut fits = Vec::with_capacity(config.partitions);
    for p in 0..config.partitions {
        let fit = fit_partition(
            config.model,
            &corpus,
            config.train_frac,
            &config.hyper,
            config.workers,
            &root.child(p as u64),
        )?;
        log::info!("partition {p}: perplexity {:.3}, active topics {}", fit.perplexity(), fit.active_topics);
        fits.push(fit);
    }

    let traces: Vec<_> = fits.iter().map(|f| f.trace.clone()).collect();
    write_csv_file(&out.join(TRACE_FILE), |w| write_trace_csv(w, &traces, &hash))?;
    let params: Vec<_> = fits.iter().map(|f| f.parameters.clone()).collect();
    write_csv_file(&out.join(PARAMS_FILE), |w| write_parameter_csv(w, &params, &hash))?;

    let n = fits.len() as f64;
    let total_ll: f64 = fits.iter().map(|f| f.heldout.log_likelihood).sum();
    let total_tokens: usize = fits.iter().map(|f| f.heldout.num_tokens).sum();
    let report = RunReport {
        model: config.model,
        seed: config.seed,
        commit: COMMIT.to_string(),
        config_hash: hash,
        hyper: config.hyper.clone(),
        num_docs: corpus.num_docs(),
        vocab_size: corpus.vocab_size(),
        perplexity: fits.iter().map(PartitionFit::perplexity).sum::<f64>() / n,
        pooled_perplexity: (-total_ll / total_tokens as f64).exp(),
        active_topics: fits.iter().map(|f| f.active_topics as f64).sum::<f64>() / n,
        partitions: fits
            .iter()
            .enumerate()
            .map(|(p, f)| PartitionReport {
                partition: p,
                perplexity: f.perplexity(),
                log_likelihood: f.heldout.log_likelihood,
                test_tokens: f.heldout.num_tokens,
                active_topics: f.active_topics,
            })
            .collect(),
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join(REPORT_FILE), &report)?;
    fs::remove_file(&sentinel).map_err(|e| CliError::io(sentinel.display(), e))?;
    Ok(report)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path.display(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn write_csv_file<F>(path: &PathBuf, write: F) -> Result<(), CliError>
where
    F: FnOnce(BufWriter<fs::File>) -> Result<(), nbproc_core::evaluation::EvalError>,
{
    let file = fs::File::create(path).map_err(|e| CliError::io(path.display(), e))?;
    write(BufWriter::new(file)).map_err(|e| CliError::io(path.display(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nbproc_core::corpus::{ParamPrior, SynthSettings};

    fn corpus() -> Corpus {
        let settings = SynthSettings {
            num_topics: 3,
            vocab_size: 20,
            num_docs: 15,
            topic_concentration: 0.1,
            dispersion: ParamPrior::Fixed { value: 2.0 },
            probability: ParamPrior::Fixed { value: 0.9 },
        };
        synthesize_corpus(&settings, &mut RandomSource::new(8)).unwrap().0
    }

    fn hyper() -> HyperParams {
        HyperParams { num_topics: 6, iters: 30, burnin: 10, init_iters: 3, ..HyperParams::default() }
    }

    #[test]
    fn trace_has_one_record_per_iteration() {
        let fit = fit_partition(ModelKind::GammaNb, &corpus(), 0.6, &hyper(), 1, &RandomSource::new(1)).unwrap();
        assert_eq!(fit.trace.records.len(), 30);
        assert!(fit.trace.records.iter().all(|r| r.perplexity.is_finite() && r.perplexity >= 1.0));
        assert_eq!(fit.trace.records.last().unwrap().perplexity, fit.perplexity());
        assert!(fit.perplexity() < 20.0);
    }

    #[test]
    fn collection_uses_post_burnin_samples() {
        let mut h = hyper();
        h.collect_every = 7;
        let fit = fit_partition(ModelKind::NbHdp, &corpus(), 0.6, &h, 1, &RandomSource::new(2)).unwrap();
        // Samples at iterations 10, 17 and 24 (zero-based); perplexity only
        // changes when a sample is added after burn-in.
        let ppl: Vec<f64> = fit.trace.records[10..].iter().map(|r| r.perplexity).collect();
        let changes = ppl.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 2);
    }

    #[test]
    fn same_source_same_fit() {
        let a = fit_partition(ModelKind::BetaNb, &corpus(), 0.5, &hyper(), 1, &RandomSource::new(3)).unwrap();
        let b = fit_partition(ModelKind::BetaNb, &corpus(), 0.5, &hyper(), 1, &RandomSource::new(3)).unwrap();
        assert_eq!(a.trace.records, b.trace.records);
        assert_eq!(a.heldout, b.heldout);
    }
}
