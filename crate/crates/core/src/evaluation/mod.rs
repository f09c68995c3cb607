//! Held-out prediction, run diagnostics and the Geweke correctness harness.

mod geweke;
mod summary;
mod trace;

use thiserror::Error;

use crate::corpus::HeldOutSplit;
use crate::models::{ModelError, ModelState};

pub use geweke::{geweke_check, GewekeReport, GewekeSettings, GewekeStatistic, GEWEKE_THRESHOLD};
pub use summary::{summarize_parameters, write_parameter_csv, ParameterRow, ParameterSummary, Scope};
pub use trace::{write_trace_csv, TraceRecord, TraceReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no samples have been accumulated")]
    NoSamples,
    #[error("the split has no held-out tokens")]
    NoTestTokens,
    #[error("document {doc}: held-out term {term} has zero predictive probability")]
    ZeroProbability { doc: usize, term: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("chain diverged: {0}")]
    Diverged(String),
    #[error("statistic `{0}` is not finite")]
    NonFinite(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    /// Every (document, term) cell.
    Dense,
    /// Per document, the sorted distinct terms whose cells are kept.
    Sparse(Vec<Vec<u32>>),
}

/// Running sums `Σ_s Σ_k ω_vk λ_jk` and `Σ_s Σ_k λ_jk` over collected samples.
///
/// Since every ω_k sums to one, the per-document denominator
/// `Σ_s Σ_v Σ_k ω_vk λ_jk` reduces to `Σ_s Σ_k λ_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleAccumulator {
    num_docs: usize,
    vocab_size: usize,
    samples: usize,
    layout: Layout,
    /// Dense: `j * V + v`. Sparse: concatenated per-document cells.
    cells: Vec<f64>,
    offsets: Vec<usize>,
    totals: Vec<f64>,
}

impl SampleAccumulator {
    /// Keeps all `J × V` cells.
    pub fn dense(num_docs: usize, vocab_size: usize) -> Self {
        Self {
            num_docs,
            vocab_size,
            samples: 0,
            layout: Layout::Dense,
            cells: vec![0.0; num_docs * vocab_size],
            offsets: (0..=num_docs).map(|j| j * vocab_size).collect(),
            totals: vec![0.0; num_docs],
        }
    }

    /// Keeps only the cells of held-out terms, which is all perplexity needs.
    pub fn for_split(split: &HeldOutSplit, vocab_size: usize) -> Self {
        let terms: Vec<Vec<u32>> = split
            .test()
            .iter()
            .map(|doc| {
                let mut t = doc.clone();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        let mut offsets = Vec::with_capacity(terms.len() + 1);
        offsets.push(0);
        for t in &terms {
            offsets.push(offsets.last().unwrap() + t.len());
        }
        Self {
            num_docs: terms.len(),
            vocab_size,
            samples: 0,
            cells: vec![0.0; *offsets.last().unwrap()],
            layout: Layout::Sparse(terms),
            offsets,
            totals: vec![0.0; split.num_docs()],
        }
    }

    pub fn num_samples(&self) -> usize {
        self.samples
    }

    pub fn reset(&mut self) {
        self.samples = 0;
        self.cells.iter_mut().for_each(|x| *x = 0.0);
        self.totals.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Add the current sample's `ω_vk λ_jk` products.
    pub fn accumulate(&mut self, state: &ModelState) -> Result<(), EvalError> {
        if state.num_docs != self.num_docs || state.vocab_size != self.vocab_size {
            return Err(EvalError::Dimension(format!(
                "accumulator has J={} V={}, state has J={} V={}",
                self.num_docs, self.vocab_size, state.num_docs, state.vocab_size
            )));
        }
        let k_max = state.num_topics;
        let v_max = self.vocab_size;
        for j in 0..self.num_docs {
            let lambda = state.lambda_row(j);
            self.totals[j] += lambda.iter().sum::<f64>();
            let cells = &mut self.cells[self.offsets[j]..self.offsets[j + 1]];
            match &self.layout {
                Layout::Dense => {
                    for (k, &lam) in lambda.iter().enumerate() {
                        if lam == 0.0 {
                            continue;
                        }
                        let row = &state.omega[k * v_max..(k + 1) * v_max];
                        for (cell, &w) in cells.iter_mut().zip(row) {
                            *cell += w * lam;
                        }
                    }
                }
                Layout::Sparse(terms) => {
                    for (cell, &v) in cells.iter_mut().zip(&terms[j]) {
                        *cell += (0..k_max).map(|k| state.omega[k * v_max + v as usize] * lambda[k]).sum::<f64>();
                    }
                }
            }
        }
        self.samples += 1;
        Ok(())
    }

    /// Combine with an accumulator over the same cells.
    pub fn merge(&mut self, other: &SampleAccumulator) -> Result<(), EvalError> {
        if self.layout != other.layout || self.num_docs != other.num_docs || self.vocab_size != other.vocab_size {
            return Err(EvalError::Dimension("accumulators cover different cells".into()));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.samples += other.samples;
        Ok(())
    }

    /// Predictive probability `f_jv`, or `None` if the cell is not kept.
    pub fn predictive(&self, j: usize, v: u32) -> Option<f64> {
        let idx = match &self.layout {
            Layout::Dense => ((v as usize) < self.vocab_size).then(|| self.offsets[j] + v as usize)?,
            Layout::Sparse(terms) => self.offsets[j] + terms[j].binary_search(&v).ok()?,
        };
        Some(self.cells[idx] / self.totals[j])
    }

    /// `Σ_s Σ_k λ_jk` for document `j`.
    pub fn total(&self, j: usize) -> f64 {
        self.totals[j]
    }
}

/// Per-word perplexity `exp(-(1/N) Σ ln f_{j,v})` over the held-out tokens.
pub fn heldout_perplexity(acc: &SampleAccumulator, split: &HeldOutSplit) -> Result<f64, EvalError> {
    Ok(heldout_log_likelihood(acc, split)?.perplexity())
}

/// Total held-out log predictive probability and token count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeldOutLikelihood {
    pub log_likelihood: f64,
    pub num_tokens: usize,
}

impl HeldOutLikelihood {
    pub fn perplexity(&self) -> f64 {
        (-self.log_likelihood / self.num_tokens as f64).exp()
    }
}

pub fn heldout_log_likelihood(acc: &SampleAccumulator, split: &HeldOutSplit) -> Result<HeldOutLikelihood, EvalError> {
    if acc.samples == 0 {
        return Err(EvalError::NoSamples);
    }
    if split.num_docs() != acc.num_docs {
        return Err(EvalError::Dimension(format!(
            "split has {} documents, accumulator {}",
            split.num_docs(),
            acc.num_docs
        )));
    }
    let mut log_likelihood = 0.0;
    let mut num_tokens = 0;
    for (j, doc) in split.test().iter().enumerate() {
        for &v in doc {
            let f = acc
                .predictive(j, v)
                .ok_or_else(|| EvalError::Dimension(format!("document {j}: term {v} not tracked")))?;
            if !(f > 0.0) {
                return Err(EvalError::ZeroProbability { doc: j, term: v });
            }
            log_likelihood += f.ln();
            num_tokens += 1;
        }
    }
    if num_tokens == 0 {
        return Err(EvalError::NoTestTokens);
    }
    Ok(HeldOutLikelihood { log_likelihood, num_tokens })
}
