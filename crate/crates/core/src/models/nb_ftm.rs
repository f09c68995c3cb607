use super::common::{crt, ensure_l_jk, gamma, sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{neg_log1m, sample_bernoulli, sample_beta, RandomSource, PROB_FLOOR};

const P_FIXED: f64 = 0.5;

/// NB-FTM: zero-inflated counts `n_jk ~ NB(r_k b_jk, 0.5)` with beta-Bernoulli
/// gates `b_jk ~ Bernoulli(π_k)`. A closed gate pins `λ_jk` to zero, which
/// removes topic `k` from document `j`'s assignment weights.
pub fn nb_ftm_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let j_max = state.num_docs;
    let kf = k_max as f64;
    let jf = j_max as f64;
    let ln_half = neg_log1m(P_FIXED);

    sample_topic_assignments(state, docs, rng, opts)?;

    for k in 0..k_max {
        let pi = state.pi_k[k];
        let on = pi * (1.0 - P_FIXED).powf(state.r_k[k]);
        let keep = on / (on + (1.0 - pi));
        for j in 0..j_max {
            let idx = j * k_max + k;
            state.b_jk[idx] = state.n_jk[idx] > 0 || sample_bernoulli(keep, rng);
        }
    }

    let mut open = vec![0.0f64; k_max];
    for j in 0..j_max {
        for k in 0..k_max {
            if state.b_jk[j * k_max + k] {
                open[k] += 1.0;
            }
        }
    }
    for k in 0..k_max {
        let b = hyper.c * (1.0 - 1.0 / kf) + jf - open[k];
        state.pi_k[k] = if b > 0.0 {
            sample_beta(hyper.c / kf + open[k], b, rng)?
        } else {
            // K = 1 with every gate open: the posterior is a point mass at one
            1.0 - PROB_FLOOR
        };
    }

    // -Σ_j b_jk ln(1 - 0.5)
    let topic_rate: Vec<f64> = open.iter().map(|&o| o * ln_half).collect();
    state.p_prime = topic_rate.iter().map(|&q| (q / (hyper.c + q)).max(PROB_FLOOR)).collect();

    ensure_l_jk(state);
    let mut l_k = vec![0u64; k_max];
    for j in 0..j_max {
        for k in 0..k_max {
            let idx = j * k_max + k;
            let l = if state.b_jk[idx] {
                crt(state.n_jk[idx] as u64, state.r_k[k], opts, rng)
            } else {
                0
            };
            state.l_jk[idx] = l as u32;
            l_k[k] += l;
        }
    }
    state.l_prime = l_k.iter().map(|&l| crt(l, state.gamma0, opts, rng) as u32).collect();

    let l_prime_sum: f64 = state.l_prime.iter().map(|&l| l as f64).sum();
    let rate = hyper.f0 + topic_rate.iter().map(|&q| (q / hyper.c).ln_1p()).sum::<f64>();
    state.gamma0 = gamma("gamma0", hyper.e0 + l_prime_sum, 1.0 / rate, rng)?;

    let bump = opts.shape_bump();
    for k in 0..k_max {
        state.r_k[k] = gamma("r_k", state.gamma0 + l_k[k] as f64 + bump, 1.0 / (hyper.c + topic_rate[k]), rng)?;
    }

    for j in 0..j_max {
        for k in 0..k_max {
            let idx = j * k_max + k;
            state.lambda[idx] = if state.b_jk[idx] {
                gamma("lambda", state.r_k[k] + state.n_jk[idx] as f64, P_FIXED, rng)?
            } else {
                0.0
            };
        }
    }

    update_topics(state, hyper.eta, rng)
}
