use super::common::{crt, ensure_l_jk, gamma, sample_topic_assignments, topic_count, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{neg_log1m, sample_beta, RandomSource};

/// Beta-NB process: shared topic probabilities `p_k` from a truncated beta
/// process, document dispersions `r_j ~ Gamma(e₀, 1/f₀)`.
pub fn beta_nb_sweep(
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

    let r_sum: f64 = state.r_j.iter().sum();
    for k in 0..k_max {
        state.p_k[k] = sample_beta(hyper.c / kf + topic_count(state, k), hyper.c * (1.0 - 1.0 / kf) + r_sum, rng)?;
    }

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

    let rate = hyper.f0 + state.p_k.iter().map(|&p| neg_log1m(p)).sum::<f64>();
    let bump = opts.shape_bump();
    for j in 0..j_max {
        state.r_j[j] = gamma("r_j", hyper.e0 + l_j[j] as f64 + bump, 1.0 / rate, rng)?;
    }

    for j in 0..j_max {
        let r = state.r_j[j];
        for k in 0..k_max {
            let idx = j * k_max + k;
            state.lambda[idx] = gamma("lambda", r + state.n_jk[idx] as f64, state.p_k[k], rng)?;
        }
    }

    update_topics(state, hyper.eta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::*;
    use crate::models::{sample_prior, simulate_data, ModelDims, ModelKind};

    #[test]
    fn unused_topic_probability_shrinks() {
        let docs = Documents::new(vec![vec![0; 12], vec![0; 7]], 2).unwrap();
        let hyper = HyperParams { e0: 2.0, f0: 2.0, ..small_hyper(2) };
        let (mut state, mut rng) = fitted(ModelKind::BetaNb, &docs, &hyper, 2);
        let mut t = Vec::new();
        for _ in 0..20_000 {
            state.omega = vec![1.0 - 1e-9, 1e-9, 1e-9, 1.0 - 1e-9];
            let r_sum: f64 = state.r_j.iter().sum();
            beta_nb_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            assert_eq!(state.n_k[1], 0);
            t.push(state.p_k[1] / ((hyper.c / 2.0) / (hyper.c + r_sum)));
        }
        assert!((mean(&t) - 1.0).abs() < 0.05, "{}", mean(&t));
    }

    #[test]
    fn topic_total_matches_nb_mean() {
        let hyper = HyperParams { c: 10.0, e0: 4.0, f0: 2.0, eta: 1.0, ..small_hyper(2) };
        let dims = ModelDims { num_docs: 3, num_topics: 2, vocab_size: 3, doc_len: 0 };
        let mut rng = RandomSource::new(8);
        let (mut observed, mut expected) = (Vec::new(), Vec::new());
        for _ in 0..40_000 {
            let mut state = sample_prior(ModelKind::BetaNb, &dims, &hyper, &mut rng).unwrap();
            simulate_data(&mut state, 0, &mut rng).unwrap();
            let r_sum: f64 = state.r_j.iter().sum();
            observed.push(state.n_k[0] as f64);
            expected.push(state.p_k[0] / (1.0 - state.p_k[0]) * r_sum);
        }
        let (o, e) = (mean(&observed), mean(&expected));
        assert!((o / e - 1.0).abs() < 0.15, "{o} vs {e}");
    }
}
