use super::common::{crt, ensure_l_jk, gamma, positive, sample_topic_assignments, update_topics};
use super::{Documents, HyperParams, ModelError, ModelState, SweepOptions};
use crate::distributions::{sample_bernoulli, sample_beta, sample_dirichlet_into, RandomSource};

/// Direct-assignment HDP with shared weights `r̃ ~ Dir(γ₀/K)` and document
/// proportions `λ̃_j ~ Dir(α r̃)`. The concentration α is sampled through the
/// `w_j`, `s_j` auxiliaries; γ₀ stays at its current value unless
/// `crf_sample_gamma0` is set.
pub fn crf_hdp_sweep(
    state: &mut ModelState,
    docs: &Documents,
    hyper: &HyperParams,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let kf = k_max as f64;

    sample_topic_assignments(state, docs, rng, opts)?;

    ensure_l_jk(state);
    let mut l_k = vec![0u64; k_max];
    for j in 0..state.num_docs {
        for k in 0..k_max {
            let idx = j * k_max + k;
            let l = crt(state.n_jk[idx] as u64, state.alpha * state.r_tilde[k], opts, rng);
            state.l_jk[idx] = l as u32;
            l_k[k] += l;
        }
    }
    let l_total: u64 = l_k.iter().sum();

    let lengths: Vec<usize> = (0..state.num_docs).map(|j| docs.len(j)).collect();
    state.alpha = sample_alpha(state.alpha, l_total, &lengths, hyper, opts.shape_bump(), rng)?;

    if hyper.crf_sample_gamma0 {
        let active = l_k.iter().filter(|&&l| l > 0).count() as f64;
        state.gamma0 = sample_gamma0(state.gamma0, l_total, active, hyper, rng)?;
    }

    let base = state.gamma0 / kf;
    sample_dirichlet_into(l_k.iter().map(|&l| positive(base + l as f64)), &mut state.r_tilde, rng)?;

    for j in 0..state.num_docs {
        let counts = &state.n_jk[j * k_max..(j + 1) * k_max];
        let row = &mut state.lambda[j * k_max..(j + 1) * k_max];
        let conc = counts.iter().zip(&state.r_tilde).map(|(&n, &r)| positive(state.alpha * r + n as f64));
        sample_dirichlet_into(conc, row, rng)?;
    }

    update_topics(state, hyper.eta, rng)
}

/// One auxiliary-variable update of α given the table total `Σ_jk l_jk`:
/// `w_j ~ Beta(α + 1, N_j)`, `s_j ~ Bernoulli(N_j / (N_j + α))`, then
/// `α ~ Gamma(a₀ + Σ l − Σ s, 1 / (b₀ − Σ ln w_j))`. Empty documents carry no
/// auxiliaries.
pub(crate) fn sample_alpha(
    alpha: f64,
    l_total: u64,
    doc_lengths: &[usize],
    hyper: &HyperParams,
    shape_bump: f64,
    rng: &mut RandomSource,
) -> Result<f64, ModelError> {
    let mut s_total = 0u64;
    let mut log_w_total = 0.0;
    for &len in doc_lengths.iter().filter(|&&len| len > 0) {
        let n = len as f64;
        log_w_total += sample_beta(alpha + 1.0, n, rng)?.ln();
        if sample_bernoulli(n / (n + alpha), rng) {
            s_total += 1;
        }
    }
    let shape = hyper.a0 + l_total as f64 - s_total as f64 + shape_bump;
    gamma("alpha", shape, 1.0 / (hyper.b0 - log_w_total), rng)
}

/// Auxiliary-variable γ₀ update for the infinite model, applied at truncation
/// level K. It treats the active-topic count as the number of first-level
/// tables, so it does not leave the finite-K posterior exactly invariant.
fn sample_gamma0(
    gamma0: f64,
    l_total: u64,
    active: f64,
    hyper: &HyperParams,
    rng: &mut RandomSource,
) -> Result<f64, ModelError> {
    if l_total == 0 {
        return gamma("gamma0", hyper.e0, 1.0 / hyper.f0, rng);
    }
    let m = l_total as f64;
    let w0 = sample_beta(gamma0 + 1.0, m, rng)?;
    let rate = hyper.f0 - w0.ln();
    let odds = hyper.e0 + active - 1.0;
    let pi0 = odds / (odds + m * rate);
    let shape = if sample_bernoulli(pi0, rng) { hyper.e0 + active } else { hyper.e0 + active - 1.0 };
    gamma("gamma0", shape, 1.0 / rate, rng)
}
