use super::common::{crt, ensure_finite, ensure_l_jk, gamma, sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{neg_log1m, sample_beta, RandomSource};

/// Gamma-NB process: shared dispersions `r_k`, document probabilities `p_j`.
pub fn gamma_nb_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    shared_dispersion_sweep(state, docs, hyper, rng, opts, true)
}

/// NB-HDP: the Gamma-NB kernel with every `p_j` held at 0.5.
pub fn nb_hdp_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    shared_dispersion_sweep(state, docs, hyper, rng, opts, false)
}

fn shared_dispersion_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
    learn_p: bool,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let j_max = state.num_docs;
    let kf = k_max as f64;

    sample_topic_assignments(state, docs, rng, opts)?;

    if learn_p {
        let r_sum: f64 = state.r_k.iter().sum();
        for j in 0..j_max {
            state.p_j[j] = sample_beta(hyper.a0 + docs.len(j) as f64, hyper.b0 + r_sum, rng)?;
        }
    }

    // Σ_j -ln(1 - p_j)
    let sum_neg_log: f64 = ensure_finite("p_j", state.p_j.iter().map(|&p| neg_log1m(p)).sum())?;
    let p_prime = sum_neg_log / (hyper.c + sum_neg_log);
    state.p_prime = vec![p_prime];

    ensure_l_jk(state);
    let mut l_k = vec![0u64; k_max];
    for j in 0..j_max {
        for k in 0..k_max {
            let idx = j * k_max + k;
            let l = crt(state.n_jk[idx] as u64, state.r_k[k], opts, rng);
            state.l_jk[idx] = l as u32;
            l_k[k] += l;
        }
    }

    let gamma0_over_k = state.gamma0 / kf;
    state.l_prime = l_k
        .iter()
        .map(|&l| crt(l, gamma0_over_k, opts, rng) as u32)
        .collect();
    let l_prime_sum: f64 = state.l_prime.iter().map(|&l| l as f64).sum();
    state.gamma0 = gamma("gamma0", hyper.e0 + l_prime_sum, 1.0 / (hyper.f0 + (sum_neg_log / hyper.c).ln_1p()), rng)?;

    let r_scale = 1.0 / (hyper.c + sum_neg_log);
    let bump = opts.shape_bump();
    for k in 0..k_max {
        state.r_k[k] = gamma("r_k", state.gamma0 / kf + l_k[k] as f64 + bump, r_scale, rng)?;
    }

    for j in 0..j_max {
        let p = state.p_j[j];
        for k in 0..k_max {
            let idx = j * k_max + k;
            state.lambda[idx] = gamma("lambda", state.r_k[k] + state.n_jk[idx] as f64, p, rng)?;
        }
    }

    update_topics(state, hyper.eta, rng)
}
