use super::common::{gamma, positive};
use super::init::normalize_rows;
use super::{Documents, HyperParams, ModelError, ModelKind, ModelState};
use crate::distributions::{
    draw_index, sample_bernoulli, sample_beta, sample_dirichlet_into, sample_poisson, RandomSource,
};

/// Upper bound on the tokens [`simulate_data`] will materialize.
const MAX_SIMULATED_TOKENS: u64 = 50_000_000;

/// Sizes of a forward simulation. `doc_len` fixes the number of tokens per
/// document for the normalized kinds (LDA, Dir-PFA, CRF-HDP), whose
/// generative models do not produce document lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub num_docs: usize,
    pub num_topics: usize,
    pub vocab_size: usize,
    pub doc_len: usize,
}

/// Draw every parameter of `kind` from its prior. Assignments and counts are
/// left empty until [`simulate_data`] fills them.
pub fn sample_prior(
    kind: ModelKind,
    dims: &ModelDims,
    hyper: &HyperParams,
    rng: &mut RandomSource,
) -> Result<ModelState, ModelError> {
    let ModelDims { num_docs: j_max, num_topics: k_max, vocab_size: v_max, .. } = *dims;
    if j_max == 0 || k_max == 0 || v_max == 0 {
        return Err(ModelError::Dimension(format!("empty dimensions {dims:?}")));
    }
    let kf = k_max as f64;
    let mut state = ModelState {
        kind,
        num_docs: j_max,
        num_topics: k_max,
        vocab_size: v_max,
        omega: vec![0.0; k_max * v_max],
        lambda: vec![0.0; j_max * k_max],
        z: vec![Vec::new(); j_max],
        n_jk: vec![0; j_max * k_max],
        n_kv: vec![0; k_max * v_max],
        n_k: vec![0; k_max],
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

    for k in 0..k_max {
        let row = &mut state.omega[k * v_max..(k + 1) * v_max];
        sample_dirichlet_into(std::iter::repeat(hyper.eta).take(v_max), row, rng)?;
    }

    let beta_a = hyper.c / kf;
    let beta_b = positive(hyper.c * (1.0 - 1.0 / kf));
    let odds = |p: f64| p / (1.0 - p);

    match kind {
        ModelKind::Lda | ModelKind::DirPfa => {
            let prior = hyper.lda_alpha_total / kf;
            for row in state.lambda.chunks_mut(k_max) {
                sample_dirichlet_into(std::iter::repeat(prior).take(k_max), row, rng)?;
            }
        }
        ModelKind::CrfHdp => {
            if hyper.crf_sample_gamma0 {
                state.gamma0 = gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng)?;
            }
            state.alpha = gamma("alpha", hyper.a0, 1.0 / hyper.b0, rng)?;
            state.r_tilde = vec![0.0; k_max];
            let base = positive(state.gamma0 / kf);
            sample_dirichlet_into(std::iter::repeat(base).take(k_max), &mut state.r_tilde, rng)?;
            for row in state.lambda.chunks_mut(k_max) {
                sample_dirichlet_into(state.r_tilde.iter().map(|&r| positive(state.alpha * r)), row, rng)?;
            }
        }
        ModelKind::GammaNb | ModelKind::NbHdp => {
            state.gamma0 = gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng)?;
            state.r_k = draw_n(k_max, || gamma("r_k", state.gamma0 / kf, 1.0 / hyper.c, rng))?;
            state.p_j = match kind.fixed_p_j() {
                Some(p) => vec![p; j_max],
                None => draw_n(j_max, || Ok(sample_beta(hyper.a0, hyper.b0, rng)?))?,
            };
            for j in 0..j_max {
                for k in 0..k_max {
                    state.lambda[j * k_max + k] = gamma("lambda", state.r_k[k], odds(state.p_j[j]), rng)?;
                }
            }
        }
        ModelKind::NbLda => {
            state.gamma0 = gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng)?;
            state.r_j = draw_n(j_max, || gamma("r_j", state.gamma0, 1.0 / hyper.c, rng))?;
            state.p_j = draw_n(j_max, || Ok(sample_beta(hyper.a0, hyper.b0, rng)?))?;
            for j in 0..j_max {
                for k in 0..k_max {
                    state.lambda[j * k_max + k] = gamma("lambda", state.r_j[j], odds(state.p_j[j]), rng)?;
                }
            }
        }
        ModelKind::NbFtm => {
            state.gamma0 = gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng)?;
            state.r_k = draw_n(k_max, || gamma("r_k", state.gamma0, 1.0 / hyper.c, rng))?;
            state.p_j = vec![0.5; j_max];
            state.pi_k = draw_n(k_max, || Ok(sample_beta(beta_a, beta_b, rng)?))?;
            state.b_jk = vec![false; j_max * k_max];
            for j in 0..j_max {
                for k in 0..k_max {
                    let idx = j * k_max + k;
                    state.b_jk[idx] = sample_bernoulli(state.pi_k[k], rng);
                    if state.b_jk[idx] {
                        state.lambda[idx] = gamma("lambda", state.r_k[k], 1.0, rng)?;
                    }
                }
            }
        }
        ModelKind::BetaNb => {
            state.p_k = draw_n(k_max, || Ok(sample_beta(beta_a, beta_b, rng)?))?;
            state.r_j = draw_n(j_max, || gamma("r_j", hyper.e0, 1.0 / hyper.f0, rng))?;
            for j in 0..j_max {
                for k in 0..k_max {
                    state.lambda[j * k_max + k] = gamma("lambda", state.r_j[j], odds(state.p_k[k]), rng)?;
                }
            }
        }
        ModelKind::MarkedBetaNb | ModelKind::MarkedGammaNb => {
            if kind == ModelKind::MarkedBetaNb {
                state.p_k = draw_n(k_max, || Ok(sample_beta(beta_a, beta_b, rng)?))?;
                state.r_k = draw_n(k_max, || gamma("r_k", hyper.e0, 1.0 / hyper.f0, rng))?;
            } else {
                state.gamma0 = gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng)?;
                state.r_k = draw_n(k_max, || gamma("r_k", state.gamma0 / kf, 1.0 / hyper.c, rng))?;
                state.p_k = draw_n(k_max, || Ok(sample_beta(hyper.a0, hyper.b0, rng)?))?;
            }
            for j in 0..j_max {
                for k in 0..k_max {
                    state.lambda[j * k_max + k] = gamma("lambda", state.r_k[k], odds(state.p_k[k]), rng)?;
                }
            }
        }
    }
    if kind.is_normalized() {
        normalize_rows(&mut state.lambda, k_max);
    }
    Ok(state)
}

fn draw_n<F>(n: usize, mut f: F) -> Result<Vec<f64>, ModelError>
where
    F: FnMut() -> Result<f64, ModelError>,
{
    (0..n).map(|_| f()).collect()
}

/// Draw assignments and tokens given the parameters in `state`, replacing
/// its `z` and counts.
///
/// Unnormalized kinds draw `n_jk ~ Pois(λ_jk)`; normalized kinds draw
/// `doc_len` assignments per document from `λ̃_j`. Each token's term comes
/// from `ω_{z}`. Tokens are returned sorted by term.
pub fn simulate_data(state: &mut ModelState, doc_len: usize, rng: &mut RandomSource) -> Result<Documents, ModelError> {
    let k_max = state.num_topics;
    let v_max = state.vocab_size;
    let mut n_jk = vec![0u64; state.num_docs * k_max];
    if state.kind.is_normalized() {
        for j in 0..state.num_docs {
            let row = state.lambda_row(j);
            let total: f64 = row.iter().sum();
            for _ in 0..doc_len {
                n_jk[j * k_max + draw_index(row, total, rng)] += 1;
            }
        }
    } else {
        let mut total = 0u64;
        for (n, &lam) in n_jk.iter_mut().zip(&state.lambda) {
            *n = sample_poisson(lam, rng)?;
            total += *n;
        }
        if total > MAX_SIMULATED_TOKENS {
            return Err(ModelError::Dimension(format!("simulated corpus has {total} tokens")));
        }
    }

    let mut tokens = Vec::with_capacity(state.num_docs);
    for j in 0..state.num_docs {
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for k in 0..k_max {
            let topic = &state.omega[k * v_max..(k + 1) * v_max];
            for _ in 0..n_jk[j * k_max + k] {
                pairs.push((draw_index(topic, 1.0, rng) as u32, k as u32));
            }
        }
        pairs.sort_unstable();
        state.z[j] = pairs.iter().map(|&(_, k)| k).collect();
        tokens.push(pairs.into_iter().map(|(v, _)| v).collect());
    }
    let docs = Documents::new(tokens, v_max)?;
    state.recompute_counts(&docs);
    Ok(docs)
}
