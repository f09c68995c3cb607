//! Truncated negative binomial process topic models and their block Gibbs kernels.
//!
//! Every model shares the same skeleton: topic assignments `z` are drawn from
//! `ω_{v,k} λ_{jk}`, the model-specific count parameters are updated from
//! the resulting `n_jk` through CRT and gamma-Poisson augmentation, and the
//! topics `ω_k` are redrawn from their Dirichlet posteriors last.

mod common;
mod crf_hdp;
mod forward;
mod gamma_nb;
mod init;
mod lda;
mod marked;
mod nb_ftm;
mod nb_lda;
mod beta_nb;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::HeldOutSplit;
use crate::distributions::{DistError, RandomSource};

pub use common::{sample_topic_assignments, update_topics};
pub use crf_hdp::crf_hdp_sweep;
pub use forward::{sample_prior, simulate_data, ModelDims};
pub use gamma_nb::{gamma_nb_sweep, nb_hdp_sweep};
pub use init::initialize;
pub use lda::lda_sweep;
pub use marked::{marked_beta_nb_sweep, marked_gamma_nb_sweep};
pub use nb_ftm::nb_ftm_sweep;
pub use nb_lda::nb_lda_sweep;
pub use beta_nb::beta_nb_sweep;
pub use state::ModelState;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite value in `{variable}`")]
    NonFinite { variable: &'static str },
    #[error("document {doc}: every topic has zero weight for a token")]
    ZeroWeights { doc: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
    #[error("state does not match the documents: {0}")]
    Dimension(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Fixed scalars of a run. Defaults are the full-scale protocol: K = 400,
/// 2500 iterations of which the first 1000 are burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Gamma/beta process concentration.
    pub c: f64,
    /// Topic Dirichlet smoothing.
    pub eta: f64,
    pub a0: f64,
    pub b0: f64,
    pub e0: f64,
    pub f0: f64,
    /// Truncation level K.
    pub num_topics: usize,
    /// LDA / Dir-PFA proportions use `Dir(lda_alpha_total / K)`.
    pub lda_alpha_total: f64,
    pub iters: usize,
    pub burnin: usize,
    pub collect_every: usize,
    pub init_iters: usize,
    pub seed: u64,
    /// Sample γ₀ in CRF-HDP with the infinite-K auxiliary scheme (biased at finite K).
    pub crf_sample_gamma0: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            eta: 0.05,
            a0: 0.01,
            b0: 0.01,
            e0: 0.01,
            f0: 0.01,
            num_topics: 400,
            lda_alpha_total: 50.0,
            iters: 2500,
            burnin: 1000,
            collect_every: 1,
            init_iters: 50,
            seed: 0,
            crf_sample_gamma0: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("c", self.c),
            ("eta", self.eta),
            ("a0", self.a0),
            ("b0", self.b0),
            ("e0", self.e0),
            ("f0", self.f0),
            ("lda_alpha_total", self.lda_alpha_total),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::Hyper(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.num_topics == 0 {
            return Err(ModelError::Hyper("num_topics must be at least 1".into()));
        }
        if self.collect_every == 0 {
            return Err(ModelError::Hyper("collect_every must be at least 1".into()));
        }
        if self.burnin >= self.iters {
            return Err(ModelError::Hyper(format!(
                "burnin ({}) must be smaller than iters ({})",
                self.burnin, self.iters
            )));
        }
        Ok(())
    }
}

/// Model variants: the NB process family plus the LDA and CRF-HDP baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lda,
    DirPfa,
    NbLda,
    NbHdp,
    NbFtm,
    BetaNb,
    GammaNb,
    MarkedBetaNb,
    MarkedGammaNb,
    CrfHdp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Lda,
        ModelKind::DirPfa,
        ModelKind::NbLda,
        ModelKind::NbHdp,
        ModelKind::NbFtm,
        ModelKind::BetaNb,
        ModelKind::GammaNb,
        ModelKind::MarkedBetaNb,
        ModelKind::MarkedGammaNb,
        ModelKind::CrfHdp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::DirPfa => "dir-pfa",
            ModelKind::NbLda => "nb-lda",
            ModelKind::NbHdp => "nb-hdp",
            ModelKind::NbFtm => "nb-ftm",
            ModelKind::BetaNb => "beta-nb",
            ModelKind::GammaNb => "gamma-nb",
            ModelKind::MarkedBetaNb => "marked-beta-nb",
            ModelKind::MarkedGammaNb => "marked-gamma-nb",
            ModelKind::CrfHdp => "crf-hdp",
        }
    }

    /// Topic weights are normalized proportions `λ̃_j` rather than gamma rates.
    pub fn is_normalized(self) -> bool {
        matches!(self, ModelKind::Lda | ModelKind::DirPfa | ModelKind::CrfHdp)
    }

    /// Which count parameters the kernel infers.
    pub fn inferred(self) -> InferredParams {
        let none = InferredParams::default();
        match self {
            ModelKind::NbLda => InferredParams { r_j: true, p_j: true, ..none },
            ModelKind::NbHdp => InferredParams { r_k: true, ..none },
            ModelKind::NbFtm => InferredParams { r_k: true, pi_k: true, ..none },
            ModelKind::BetaNb => InferredParams { r_j: true, p_k: true, ..none },
            ModelKind::GammaNb => InferredParams { r_k: true, p_j: true, ..none },
            ModelKind::MarkedBetaNb | ModelKind::MarkedGammaNb => InferredParams { r_k: true, p_k: true, ..none },
            ModelKind::Lda | ModelKind::DirPfa | ModelKind::CrfHdp => none,
        }
    }

    /// Value at which `p_j` is held when the model fixes it.
    pub fn fixed_p_j(self) -> Option<f64> {
        match self {
            ModelKind::NbHdp | ModelKind::NbFtm => Some(0.5),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InferredParams {
    pub r_k: bool,
    pub r_j: bool,
    pub p_k: bool,
    pub p_j: bool,
    pub pi_k: bool,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown model `{s}` (expected one of: {})", names.join(", "))
            })
    }
}

/// Training tokens (term ids) per document, the only data a kernel sees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Documents {
    tokens: Vec<Vec<u32>>,
    vocab_size: usize,
}

impl Documents {
    pub fn new(tokens: Vec<Vec<u32>>, vocab_size: usize) -> Result<Self, ModelError> {
        for (j, doc) in tokens.iter().enumerate() {
            if let Some(&t) = doc.iter().find(|&&t| t as usize >= vocab_size) {
                return Err(ModelError::Dimension(format!(
                    "document {j}: term {t} outside vocabulary of size {vocab_size}"
                )));
            }
        }
        Ok(Self { tokens, vocab_size })
    }

    pub fn from_split(split: &HeldOutSplit, vocab_size: usize) -> Result<Self, ModelError> {
        Self::new(split.train().to_vec(), vocab_size)
    }

    pub fn num_docs(&self) -> usize {
        self.tokens.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn doc(&self, j: usize) -> &[u32] {
        &self.tokens[j]
    }

    pub fn len(&self, j: usize) -> usize {
        self.tokens[j].len()
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Deliberate kernel corruptions used to check that the Geweke harness has power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Adds one to the shape of the dispersion (or α / proportion) update.
    RShape,
    /// Doubles the concentration passed to every CRT draw.
    CrtShape,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r-shape" => Ok(Fault::RShape),
            "crt-shape" => Ok(Fault::CrtShape),
            other => Err(format!("unknown fault `{other}` (expected r-shape or crt-shape)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    /// More than one worker samples `z` per document in parallel on the global
    /// rayon pool with per-document child sources. This is a different chain
    /// from the single-worker one.
    pub workers: usize,
    pub fault: Option<Fault>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { workers: 1, fault: None }
    }
}

impl SweepOptions {
    pub(crate) fn shape_bump(&self) -> f64 {
        if self.fault == Some(Fault::RShape) {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn crt_scale(&self) -> f64 {
        if self.fault == Some(Fault::CrtShape) {
            2.0
        } else {
            1.0
        }
    }
}

/// One full block Gibbs sweep of the kernel selected by `state.kind`.
pub fn sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    state.check_dims(docs)?;
    match state.kind {
        ModelKind::Lda | ModelKind::DirPfa => lda_sweep(state, docs, hyper, rng, opts),
        ModelKind::NbLda => nb_lda_sweep(state, docs, hyper, rng, opts),
        ModelKind::NbHdp => nb_hdp_sweep(state, docs, hyper, rng, opts),
        ModelKind::NbFtm => nb_ftm_sweep(state, docs, hyper, rng, opts),
        ModelKind::BetaNb => beta_nb_sweep(state, docs, hyper, rng, opts),
        ModelKind::GammaNb => gamma_nb_sweep(state, docs, hyper, rng, opts),
        ModelKind::MarkedBetaNb => marked_beta_nb_sweep(state, docs, hyper, rng, opts),
        ModelKind::MarkedGammaNb => marked_gamma_nb_sweep(state, docs, hyper, rng, opts),
        ModelKind::CrfHdp => crf_hdp_sweep(state, docs, hyper, rng, opts),
    }
}

/// Number of topics with at least one assigned training token.
pub fn count_active_topics(state: &ModelState) -> usize {
    state.n_k.iter().filter(|&&n| n > 0).count()
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;

    use super::*;

    /// Two planted topics over disjoint halves of an 8-term vocabulary.
    pub(crate) fn toy_docs(num_docs: usize, seed: u64) -> Documents {
        let mut rng = RandomSource::new(seed);
        let tokens = (0..num_docs)
            .map(|j| {
                let len = 20 + rng.gen_range(0..20);
                let mut doc: Vec<u32> = (0..len)
                    .map(|_| {
                        let half = if rng.gen_bool(if j % 2 == 0 { 0.8 } else { 0.2 }) { 0 } else { 4 };
                        half + rng.gen_range(0..4)
                    })
                    .collect();
                doc.sort_unstable();
                doc
            })
            .collect();
        Documents::new(tokens, 8).unwrap()
    }

    pub(crate) fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    pub(crate) fn variance(xs: &[f64]) -> f64 {
        let m = mean(xs);
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    }

    pub(crate) fn small_hyper(num_topics: usize) -> HyperParams {
        HyperParams { num_topics, iters: 20, burnin: 10, init_iters: 5, ..HyperParams::default() }
    }

    pub(crate) fn fitted(kind: ModelKind, docs: &Documents, hyper: &HyperParams, seed: u64) -> (ModelState, RandomSource) {
        let mut rng = RandomSource::new(seed);
        let state = initialize(kind, docs, hyper, &mut rng, &SweepOptions::default()).unwrap();
        (state, rng)
    }
}


#[cfg(test)]
mod kernel_tests {
    use super::test_support::*;
    use super::*;

    fn run(kind: ModelKind, sweeps: usize, opts: &SweepOptions, seed: u64) -> Vec<ModelState> {
        let docs = toy_docs(6, 3);
        let hyper = small_hyper(5);
        let (mut state, mut rng) = fitted(kind, &docs, &hyper, seed);
        state.check_invariants(&docs).unwrap();
        let mut trace = vec![state.clone()];
        for it in 0..sweeps {
            sweep(&mut state, &docs, &hyper, &mut rng, opts).unwrap();
            if let Err(e) = state.check_invariants(&docs) {
                panic!("{kind} sweep {it}: {e}");
            }
            trace.push(state.clone());
        }
        trace
    }

    #[test]
    fn invariants_hold_after_every_sweep() {
        for kind in ModelKind::ALL {
            run(kind, 30, &SweepOptions::default(), 11);
        }
    }

    #[test]
    fn invariants_hold_with_parallel_assignments() {
        let opts = SweepOptions { workers: 4, fault: None };
        for kind in ModelKind::ALL {
            let a = run(kind, 5, &opts, 5);
            let b = run(kind, 5, &opts, 5);
            assert_eq!(a.last(), b.last(), "{kind}");
        }
    }

    #[test]
    fn same_seed_same_chain() {
        for kind in ModelKind::ALL {
            let a = run(kind, 5, &SweepOptions::default(), 21);
            let b = run(kind, 5, &SweepOptions::default(), 21);
            assert_eq!(a, b, "{kind}");
            let c = run(kind, 5, &SweepOptions::default(), 22);
            assert_ne!(a.last(), c.last(), "{kind}");
        }
    }

    #[test]
    fn activation_matches_sharing_table() {
        for kind in ModelKind::ALL {
            let trace = run(kind, 6, &SweepOptions::default(), 8);
            let first = &trace[1];
            let last = trace.last().unwrap();
            let expected = kind.inferred();
            let changed = |a: &[f64], b: &[f64]| !a.is_empty() && a != b;
            let observed = InferredParams {
                r_k: changed(&first.r_k, &last.r_k),
                r_j: changed(&first.r_j, &last.r_j),
                p_k: changed(&first.p_k, &last.p_k),
                p_j: changed(&first.p_j, &last.p_j),
                pi_k: changed(&first.pi_k, &last.pi_k),
            };
            assert_eq!(observed, expected, "{kind}");
            if let Some(p) = kind.fixed_p_j() {
                assert!(trace.iter().all(|s| s.p_j.iter().all(|&x| x == p)), "{kind}");
            }
        }
    }

    #[test]
    fn gamma_nb_and_nb_hdp_diverge() {
        let a = run(ModelKind::GammaNb, 5, &SweepOptions::default(), 4);
        let b = run(ModelKind::NbHdp, 5, &SweepOptions::default(), 4);
        let sum = |s: &ModelState| s.r_k.iter().sum::<f64>();
        assert_ne!(sum(a.last().unwrap()), sum(b.last().unwrap()));
    }

    #[test]
    fn active_topic_count() {
        let docs = Documents::new(vec![vec![0, 1, 1], vec![2]], 3).unwrap();
        let (mut state, _) = fitted(ModelKind::GammaNb, &docs, &small_hyper(4), 1);
        for z in state.z.iter_mut() {
            z.iter_mut().for_each(|k| *k = 2);
        }
        state.recompute_counts(&docs);
        assert_eq!(count_active_topics(&state), 1);

        let empty = Documents::new(vec![vec![], vec![]], 3).unwrap();
        let (state, _) = fitted(ModelKind::GammaNb, &empty, &small_hyper(4), 1);
        assert_eq!(count_active_topics(&state), 0);
    }

    #[test]
    fn single_topic_assigns_everything_to_it() {
        let docs = toy_docs(4, 9);
        for kind in ModelKind::ALL {
            let (state, _) = fitted(kind, &docs, &small_hyper(1), 2);
            assert!(state.z.iter().flatten().all(|&k| k == 0));
            for j in 0..docs.num_docs() {
                assert_eq!(state.n_jk[j] as usize, docs.len(j));
            }
        }
    }

    #[test]
    fn zero_count_topic_has_zero_tables() {
        let docs = Documents::new(vec![vec![0, 0, 1], vec![1, 1]], 4).unwrap();
        let hyper = small_hyper(3);
        let (mut state, mut rng) = fitted(ModelKind::GammaNb, &docs, &hyper, 3);
        // topic 2 can only generate term 3, which never occurs
        for k in 0..3 {
            let row: Vec<f64> = (0..4).map(|v| if (k == 2) == (v == 3) { 1.0 } else { 0.0 }).collect();
            let total: f64 = row.iter().sum();
            for v in 0..4 {
                state.omega[k * 4 + v] = row[v] / total;
            }
        }
        let opts = SweepOptions::default();
        sample_topic_assignments(&mut state, &docs, &mut rng, &opts).unwrap();
        assert_eq!(state.n_k[2], 0);
        gamma_nb_sweep(&mut state, &docs, &hyper, &mut rng, &opts).unwrap();
        for j in 0..2 {
            assert_eq!((state.n_jk[j * 3 + 2], state.l_jk[j * 3 + 2]), (0, 0));
        }
    }
}
