use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::{Documents, ModelError, ModelState, SweepOptions};
use crate::distributions::{crt_unchecked, sample_dirichlet_into, sample_gamma, RandomSource};

pub(crate) fn ensure_finite(variable: &'static str, x: f64) -> Result<f64, ModelError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ModelError::NonFinite { variable })
    }
}

/// Concentrations reaching CRT or gamma draws are kept strictly positive.
#[inline]
pub(crate) fn positive(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE)
}

#[inline]
pub(crate) fn crt(m: u64, r: f64, opts: &SweepOptions, rng: &mut RandomSource) -> u64 {
    crt_unchecked(m, positive(r * opts.crt_scale()), rng)
}

/// Gamma draw whose shape and scale come from a posterior; names the variable
/// on failure.
pub(crate) fn gamma(variable: &'static str, shape: f64, scale: f64, rng: &mut RandomSource) -> Result<f64, ModelError> {
    ensure_finite(variable, shape)?;
    ensure_finite(variable, scale)?;
    Ok(sample_gamma(positive(shape), positive(scale), rng)?)
}

fn assign_document<R: Rng + ?Sized>(
    tokens: &[u32],
    z: &mut [u32],
    omega: &[f64],
    lambda_row: &[f64],
    vocab_size: usize,
    cumulative: &mut Vec<f64>,
    rng: &mut R,
    doc: usize,
) -> Result<(), ModelError> {
    let k_max = lambda_row.len();
    cumulative.resize(k_max, 0.0);
    let mut current_term = u32::MAX;
    let mut total = 0.0;
    for (&v, slot) in tokens.iter().zip(z.iter_mut()) {
        // tokens of the same term share a weight vector
        if v != current_term {
            current_term = v;
            total = 0.0;
            for k in 0..k_max {
                total += omega[k * vocab_size + v as usize] * lambda_row[k];
                cumulative[k] = total;
            }
            if !(total > 0.0 && total.is_finite()) {
                return Err(ModelError::ZeroWeights { doc });
            }
        }
        let u = rng.gen::<f64>() * total;
        let mut k = cumulative.partition_point(|&c| c <= u);
        if k >= k_max {
            // u rounded up to the total: take the last topic with positive weight
            k = (1..k_max).rev().find(|&i| cumulative[i] > cumulative[i - 1]).unwrap_or(0);
        }
        *slot = k as u32;
    }
    Ok(())
}

/// Draw every training token's topic from `ω_{v,k} λ_jk` and refresh the counts.
pub fn sample_topic_assignments(
    state: &mut ModelState,
    docs: &Documents,
    rng: &mut RandomSource,
    opts: &SweepOptions,
) -> Result<(), ModelError> {
    let k_max = state.num_topics;
    let v_max = state.vocab_size;
    let omega = &state.omega;
    let lambda = &state.lambda;
    if opts.workers > 1 {
        let base = RandomSource::new(rng.next_u64());
        state
            .z
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(j, z)| {
                let mut child = base.child(j as u64);
                let mut cumulative = Vec::with_capacity(k_max);
                assign_document(
                    docs.doc(j),
                    z,
                    omega,
                    &lambda[j * k_max..(j + 1) * k_max],
                    v_max,
                    &mut cumulative,
                    &mut child,
                    j,
                )
            })?;
    } else {
        let mut cumulative = Vec::with_capacity(k_max);
        for (j, z) in state.z.iter_mut().enumerate() {
            assign_document(
                docs.doc(j),
                z,
                omega,
                &lambda[j * k_max..(j + 1) * k_max],
                v_max,
                &mut cumulative,
                rng,
                j,
            )?;
        }
    }
    state.recompute_counts(docs);
    Ok(())
}

/// `ω_k ~ Dir(η + n_{k,1}, ..., η + n_{k,V})` for every topic.
pub fn update_topics(state: &mut ModelState, eta: f64, rng: &mut RandomSource) -> Result<(), ModelError> {
    let v_max = state.vocab_size;
    for k in 0..state.num_topics {
        let counts = &state.n_kv[k * v_max..(k + 1) * v_max];
        let row = &mut state.omega[k * v_max..(k + 1) * v_max];
        sample_dirichlet_into(counts.iter().map(|&n| eta + n as f64), row, rng)?;
    }
    Ok(())
}

/// `Σ_j n_jk` restricted to topic `k`, as `f64`.
pub(crate) fn topic_count(state: &ModelState, k: usize) -> f64 {
    state.n_k[k] as f64
}

pub(crate) fn ensure_l_jk(state: &mut ModelState) {
    if state.l_jk.len() != state.num_docs * state.num_topics {
        state.l_jk = vec![0; state.num_docs * state.num_topics];
    }
}
