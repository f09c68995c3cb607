use super::common::{crt, ensure_l_jk, gamma, sample_topic_assignments, topic_count, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{neg_log1m, sample_beta, RandomSource};

/// Marked-beta-NB process: every beta-process atom `p_k` carries its own
/// dispersion mark `r_k ~ Gamma(e₀, 1/f₀)`.
pub fn marked_beta_nb_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let kf = k_max as f64;
    let jf = state.num_docs as f64;

    sample_topic_assignments(state, docs, rng, opts)?;

    for k in 0..k_max {
        state.p_k[k] = sample_beta(
            hyper.c / kf + topic_count(state, k),
            hyper.c * (1.0 - 1.0 / kf) + jf * state.r_k[k],
            rng,
        )?;
    }

    let l_k = topic_tables(state, opts, rng);

    let bump = opts.shape_bump();
    for k in 0..k_max {
        let rate = hyper.f0 + jf * neg_log1m(state.p_k[k]);
        state.r_k[k] = gamma("r_k", hyper.e0 + l_k[k] as f64 + bump, 1.0 / rate, rng)?;
    }

    topic_rates(state, rng)?;
    update_topics(state, hyper.eta, rng)
}

/// Marked-gamma-NB process: `r_k ~ Gamma(γ₀/K, 1/c)` marks on topic
/// probabilities `p_k ~ Beta(a₀, b₀)`, with γ₀ learned.
pub fn marked_gamma_nb_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let kf = k_max as f64;
    let jf = state.num_docs as f64;

    sample_topic_assignments(state, docs, rng, opts)?;

    for k in 0..k_max {
        state.p_k[k] = sample_beta(hyper.a0 + topic_count(state, k), hyper.b0 + jf * state.r_k[k], rng)?;
    }
    // -J ln(1 - p_k)
    let topic_rate: Vec<f64> = state.p_k.iter().map(|&p| jf * neg_log1m(p)).collect();
    state.p_prime = topic_rate.iter().map(|&q| q / (hyper.c + q)).collect();

    let l_k = topic_tables(state, opts, rng);
    let gamma0_over_k = state.gamma0 / kf;
    state.l_prime = l_k.iter().map(|&l| crt(l, gamma0_over_k, opts, rng) as u32).collect();

    let l_prime_sum: f64 = state.l_prime.iter().map(|&l| l as f64).sum();
    let rate = hyper.f0 + topic_rate.iter().map(|&q| (q / hyper.c).ln_1p()).sum::<f64>() / kf;
    state.gamma0 = gamma("gamma0", hyper.e0 + l_prime_sum, 1.0 / rate, rng)?;

    let bump = opts.shape_bump();
    for k in 0..k_max {
        state.r_k[k] = gamma(
            "r_k",
            state.gamma0 / kf + l_k[k] as f64 + bump,
            1.0 / (hyper.c + topic_rate[k]),
            rng,
        )?;
    }

    topic_rates(state, rng)?;
    update_topics(state, hyper.eta, rng)
}

/// `l_jk ~ CRT(n_jk, r_k)`, returning `Σ_j l_jk`.
fn topic_tables(state: &mut ModelState, opts: &SweepOptions, rng: &mut RandomSource) -> Vec<u64> {
    let k_max = state.num_topics;
    ensure_l_jk(state);
    let mut l_k = vec![0u64; k_max];
    for j in 0..state.num_docs {
        for k in 0..k_max {
            let idx = j * k_max + k;
            let l = crt(state.n_jk[idx] as u64, state.r_k[k], opts, rng);
            state.l_jk[idx] = l as u32;
            l_k[k] += l;
        }
    }
    l_k
}

/// `λ_jk ~ Gamma(r_k + n_jk, p_k)`.
fn topic_rates(state: &mut ModelState, rng: &mut RandomSource) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    for j in 0..state.num_docs {
        for k in 0..k_max {
            let idx = j * k_max + k;
            state.lambda[idx] = gamma("lambda", state.r_k[k] + state.n_jk[idx] as f64, state.p_k[k], rng)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_support::*;
    use crate::models::ModelKind;

    /// Mean and second moment of `p^(a-1) (1-p)^(b-1)` on (0, 1) by the midpoint rule.
    fn grid_moments(a: f64, b: f64) -> (f64, f64) {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = (i as f64 + 0.5) * h;
            let w = ((a - 1.0) * p.ln() + (b - 1.0) * (1.0 - p).ln()).exp();
            z += w;
            m1 += w * p;
            m2 += w * p * p;
        }
        (m1 / z, m2 / z)
    }

    #[test]
    fn single_atom_probability_matches_grid_posterior() {
        let docs = Documents::new(vec![vec![0; 5]], 1).unwrap();
        let hyper = HyperParams { e0: 10.0, f0: 1.0, ..small_hyper(1) };
        let (mut state, mut rng) = fitted(ModelKind::MarkedBetaNb, &docs, &hyper, 4);
        let (mut d1, mut d2) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            let r = state.r_k[0];
            marked_beta_nb_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            // prior Beta(c, 0) times NB likelihood p^n (1 - p)^r
            let (m1, m2) = grid_moments(hyper.c + 5.0, r);
            let p = state.p_k[0];
            d1.push(p - m1);
            d2.push(p * p - m2);
        }
        assert!(mean(&d1).abs() < 0.004, "{}", mean(&d1));
        assert!(mean(&d2).abs() < 0.004, "{}", mean(&d2));
    }

    #[test]
    fn unused_mark_reverts_to_prior() {
        let docs = Documents::new(vec![vec![0; 8], vec![0; 3]], 2).unwrap();
        let hyper = HyperParams { e0: 2.0, f0: 2.0, ..small_hyper(2) };
        let (mut state, mut rng) = fitted(ModelKind::MarkedBetaNb, &docs, &hyper, 5);
        let mut t = Vec::new();
        for _ in 0..20_000 {
            state.omega = vec![1.0 - 1e-9, 1e-9, 1e-9, 1.0 - 1e-9];
            marked_beta_nb_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            assert!(state.l_jk[1] == 0 && state.l_jk[3] == 0);
            t.push(state.r_k[1] * (hyper.f0 + 2.0 * neg_log1m(state.p_k[1])) / hyper.e0);
        }
        assert!((mean(&t) - 1.0).abs() < 0.05, "{}", mean(&t));
    }

    #[test]
    fn marked_gamma_concentration_shape() {
        let docs = toy_docs(4, 6);
        let hyper = small_hyper(3);
        let (mut state, mut rng) = fitted(ModelKind::MarkedGammaNb, &docs, &hyper, 6);
        let jf = 4.0;
        let mut t = Vec::new();
        for _ in 0..10_000 {
            marked_gamma_nb_sweep(&mut state, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
            let shape = hyper.e0 + state.l_prime.iter().map(|&l| l as f64).sum::<f64>();
            let rate = hyper.f0
                + state
                    .p_prime
                    .iter()
                    .map(|&p| -(1.0 - p).ln())
                    .sum::<f64>()
                    / 3.0;
            t.push(state.gamma0 * rate / shape);
            for (k, &pp) in state.p_prime.iter().enumerate() {
                let q = -jf * (1.0 - state.p_k[k]).ln();
                assert!((pp - q / (hyper.c + q)).abs() < 1e-9);
            }
        }
        assert!((mean(&t) - 1.0).abs() < 0.03, "{}", mean(&t));
    }
}
