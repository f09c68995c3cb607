use rand::Rng;

use super::common::{gamma, positive, sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelKind, ModelState, SweepOptions};
use crate::distributions::{sample_beta, sample_dirichlet_into, RandomSource};

const INIT_P: f64 = 0.5;

/// Build a starting state for `kind`.
///
/// Topics, weights and assignments come from `init_iters` sweeps of a
/// Gamma-NB kernel with `r_k = 50/K` and `p_j = 0.5` held fixed, started from
/// uniform assignments and prior draws of ω and λ. Parameters that kernel
/// does not carry start at those fixed values (`r_k`, `p_j`), at one (`γ₀`),
/// at uniform (`r̃`), with every gate open, or as prior draws (`r_j`, `p_k`,
/// `π_k`, α).
pub fn initialize(
    kind: ModelKind,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<ModelState, ModelError> {
    hyper.validate()?;
    let j_max = docs.num_docs();
    let k_max = hyper.num_topics;
    let v_max = docs.vocab_size();
    let kf = k_max as f64;
    let r_init = hyper.lda_alpha_total / kf;

    let mut state = ModelState {
        kind,
        num_docs: j_max,
        num_topics: k_max,
        vocab_size: v_max,
        omega: vec![0.0; k_max * v_max],
        lambda: vec![0.0; j_max * k_max],
        z: (0..j_max)
            .map(|j| (0..docs.len(j)).map(|_| rng.gen_range(0..k_max as u32)).collect())
            .collect(),
        n_jk: Vec::new(),
        n_kv: Vec::new(),
        n_k: Vec::new(),
        r_k: Vec::new(),
        r_j: Vec::new(),
        p_k: Vec::new(),
        p_j: Vec::new(),
        pi_k: Vec::new(),
        b_jk: Vec::new(),
        gamma0: 1.0,
        alpha: 1.0,
        l_jk: Vec::new(),
        l_prime: Vec::new(),
        p_prime: Vec::new(),
        r_tilde: Vec::new(),
    };
    state.recompute_counts(docs);

    for k in 0..k_max {
        let row = &mut state.omega[k * v_max..(k + 1) * v_max];
        sample_dirichlet_into(std::iter::repeat(hyper.eta).take(v_max), row, rng)?;
    }
    // Gamma(r, p / (1 - p)) with p = 0.5
    for lam in state.lambda.iter_mut() {
        *lam = gamma("lambda", r_init, 1.0, rng)?;
    }

    for _ in 0..hyper.init_iters {
        sample_topic_assignments(&mut state, docs, rng, opts)?;
        for (lam, &n) in state.lambda.iter_mut().zip(&state.n_jk) {
            *lam = gamma("lambda", r_init + n as f64, INIT_P, rng)?;
        }
        update_topics(&mut state, hyper.eta, rng)?;
    }

    let beta_a = hyper.c / kf;
    let beta_b = positive(hyper.c * (1.0 - 1.0 / kf));
    match kind {
        ModelKind::Lda | ModelKind::DirPfa => {}
        ModelKind::GammaNb | ModelKind::NbHdp => {
            state.r_k = vec![r_init; k_max];
            state.p_j = vec![INIT_P; j_max];
        }
        ModelKind::NbLda => {
            state.p_j = vec![INIT_P; j_max];
            state.r_j = (0..j_max)
                .map(|_| gamma("r_j", state.gamma0, 1.0 / hyper.c, rng))
                .collect::<Result<_, _>>()?;
        }
        ModelKind::NbFtm => {
            state.r_k = vec![r_init; k_max];
            state.p_j = vec![INIT_P; j_max];
            state.pi_k = (0..k_max).map(|_| sample_beta(beta_a, beta_b, rng)).collect::<Result<_, _>>()?;
            state.b_jk = vec![true; j_max * k_max];
        }
        ModelKind::BetaNb => {
            state.p_k = (0..k_max).map(|_| sample_beta(beta_a, beta_b, rng)).collect::<Result<_, _>>()?;
            state.r_j = (0..j_max)
                .map(|_| gamma("r_j", hyper.e0, 1.0 / hyper.f0, rng))
                .collect::<Result<_, _>>()?;
        }
        ModelKind::MarkedBetaNb => {
            state.r_k = vec![r_init; k_max];
            state.p_k = (0..k_max).map(|_| sample_beta(beta_a, beta_b, rng)).collect::<Result<_, _>>()?;
        }
        ModelKind::MarkedGammaNb => {
            state.r_k = vec![r_init; k_max];
            state.p_k = (0..k_max).map(|_| sample_beta(hyper.a0, hyper.b0, rng)).collect::<Result<_, _>>()?;
        }
        ModelKind::CrfHdp => {
            state.r_tilde = vec![1.0 / kf; k_max];
            state.alpha = gamma("alpha", hyper.a0, 1.0 / hyper.b0, rng)?;
        }
    }
    if kind.is_normalized() {
        normalize_rows(&mut state.lambda, k_max);
    }
    Ok(state)
}

pub(crate) fn normalize_rows(values: &mut [f64], width: usize) {
    for row in values.chunks_mut(width) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x = positive(*x / total));
    }
}
