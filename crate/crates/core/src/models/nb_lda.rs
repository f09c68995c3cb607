use super::common::{crt, ensure_l_jk, gamma, sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{neg_log1m, sample_beta, RandomSource};

/// NB-LDA: document dispersions `r_j ~ Gamma(γ₀, 1/c)` and probabilities `p_j`,
/// with γ₀ shared across documents.
pub fn nb_lda_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let j_max = state.num_docs;
    let kf = k_max as f64;

    sample_topic_assignments(state, docs, rng, opts)?;

    for j in 0..j_max {
        state.p_j[j] = sample_beta(hyper.a0 + docs.len(j) as f64, hyper.b0 + kf * state.r_j[j], rng)?;
    }
    // -K ln(1 - p_j)
    let doc_rate: Vec<f64> = state.p_j.iter().map(|&p| kf * neg_log1m(p)).collect();
    state.p_prime = doc_rate.iter().map(|&q| q / (hyper.c + q)).collect();

    ensure_l_jk(state);
    let mut l_j = vec![0u64; j_max];
    for j in 0..j_max {
        for k in 0..k_max {
            let idx = j * k_max + k;
            let l = crt(state.n_jk[idx] as u64, state.r_j[j], opts, rng);
            state.l_jk[idx] = l as u32;
            l_j[j] += l;
        }
    }
    state.l_prime = l_j.iter().map(|&l| crt(l, state.gamma0, opts, rng) as u32).collect();

    let l_prime_sum: f64 = state.l_prime.iter().map(|&l| l as f64).sum();
    // -ln(1 - p'_j) = ln(1 + q_j / c)
    let rate: f64 = hyper.f0 + doc_rate.iter().map(|&q| (q / hyper.c).ln_1p()).sum::<f64>();
    state.gamma0 = gamma("gamma0", hyper.e0 + l_prime_sum, 1.0 / rate, rng)?;

    let bump = opts.shape_bump();
    for j in 0..j_max {
        state.r_j[j] = gamma("r_j", state.gamma0 + l_j[j] as f64 + bump, 1.0 / (hyper.c + doc_rate[j]), rng)?;
    }

    for j in 0..j_max {
        let (r, p) = (state.r_j[j], state.p_j[j]);
        for k in 0..k_max {
            let idx = j * k_max + k;
            state.lambda[idx] = gamma("lambda", r + state.n_jk[idx] as f64, p, rng)?;
        }
    }

    update_topics(state, hyper.eta, rng)
}
