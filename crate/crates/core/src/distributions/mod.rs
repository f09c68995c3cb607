//! Random variates and exact PMFs used by the Gibbs kernels.
//!
//! Every sampler takes any [`rand::Rng`]; the crate drives them with a
//! [`RandomSource`] so that chains are reproducible from a single seed.

mod rng;
mod stirling;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use thiserror::Error;

pub use rng::RandomSource;
pub use stirling::{crt_pmf, log_stirling_row, StirlingTriangle, DEFAULT_CRT_PMF_CAPACITY};

/// Probabilities produced by Beta draws are kept inside `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("parameter `{param}` out of domain: {value}")]
    Domain { param: &'static str, value: f64 },
    #[error("CRT PMF requested for m = {m}, beyond Stirling capacity {capacity}")]
    Capacity { m: u64, capacity: u64 },
    #[error("empty parameter vector")]
    Empty,
}

pub(crate) fn check_positive(param: &'static str, value: f64) -> Result<(), DistError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DistError::Domain { param, value })
    }
}

fn check_open_unit(param: &'static str, value: f64) -> Result<(), DistError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(DistError::Domain { param, value })
    }
}

/// `-ln(1 - p)` evaluated without cancellation for small `p`.
#[inline]
pub fn neg_log1m(p: f64) -> f64 {
    -(-p).ln_1p()
}

#[inline]
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Natural log of a `Gamma(shape, 1)` draw.
///
/// Shapes below one use `Gamma(shape) = Gamma(shape + 1) * U^(1/shape)`, kept in
/// log space so that tiny shapes do not underflow.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64, DistError> {
    check_positive("shape", shape)?;
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).map_err(|_| DistError::Domain { param: "shape", value: shape })?;
        return Ok(g.sample(rng).max(f64::MIN_POSITIVE).ln());
    }
    let g = Gamma::new(shape + 1.0, 1.0).map_err(|_| DistError::Domain { param: "shape", value: shape })?;
    let boosted = g.sample(rng).max(f64::MIN_POSITIVE).ln();
    // 1 - U lies in (0, 1]
    let u: f64 = 1.0 - rng.gen::<f64>();
    Ok(boosted + u.ln() / shape)
}

/// `Gamma(shape, scale)` draw with mean `shape * scale`. Underflow is clamped to
/// the smallest positive normal value.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64, DistError> {
    check_positive("scale", scale)?;
    let log_draw = sample_log_gamma(shape, rng)? + scale.ln();
    Ok(log_draw.exp().clamp(f64::MIN_POSITIVE, f64::MAX))
}

/// `Beta(a, b)` draw, clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64, DistError> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let la = sample_log_gamma(a, rng)?;
    let lb = sample_log_gamma(b, rng)?;
    // x = Ga / (Ga + Gb) = 1 / (1 + exp(lb - la))
    let x = 1.0 / (1.0 + (lb - la).exp());
    Ok(clamp_probability(x))
}

/// Dirichlet draw. Entries are strictly positive and sum to one within 1e-12.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>, DistError> {
    let mut out = vec![0.0; concentration.len()];
    sample_dirichlet_into(concentration.iter().copied(), &mut out, rng)?;
    Ok(out)
}

/// Dirichlet draw written into `out`; `concentration` must yield `out.len()` values.
pub fn sample_dirichlet_into<I, R>(concentration: I, out: &mut [f64], rng: &mut R) -> Result<(), DistError>
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    if out.is_empty() {
        return Err(DistError::Empty);
    }
    let mut max_log = f64::NEG_INFINITY;
    let mut filled = 0;
    for (slot, a) in out.iter_mut().zip(concentration) {
        let lg = sample_log_gamma(a, rng)?;
        max_log = max_log.max(lg);
        *slot = lg;
        filled += 1;
    }
    if filled != out.len() {
        return Err(DistError::Empty);
    }
    let mut total = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot - max_log).exp();
        total += *slot;
    }
    let mut renorm = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot / total).max(f64::MIN_POSITIVE);
        renorm += *slot;
    }
    if renorm != 1.0 {
        for slot in out.iter_mut() {
            *slot /= renorm;
        }
    }
    Ok(())
}

/// Index `k` with probability `weights[k] / sum(weights)`.
pub fn sample_discrete<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize, DistError> {
    let mut total = 0.0;
    for &w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(DistError::Domain { param: "weight", value: w });
        }
        total += w;
    }
    if weights.is_empty() {
        return Err(DistError::Empty);
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(DistError::Domain { param: "total weight", value: total });
    }
    Ok(draw_index(weights, total, rng))
}

/// Cumulative-scan draw; caller guarantees non-negative weights summing to `total > 0`.
#[inline]
pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>() * total;
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return k;
            }
            u -= w;
            last_positive = k;
        }
    }
    last_positive
}

pub fn sample_bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < p
}

pub fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64, DistError> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(DistError::Domain { param: "rate", value: rate });
    }
    if rate == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(rate).map_err(|_| DistError::Domain { param: "rate", value: rate })?;
    let draw: f64 = dist.sample(rng);
    Ok(draw as u64)
}

/// Logarithmic distribution, PMF `p^u / (-u ln(1-p))` for `u >= 1`, drawn by
/// chop-down inversion of the PMF.
pub fn sample_logarithmic<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64, DistError> {
    check_open_unit("p", p)?;
    let mut u: f64 = rng.gen();
    let mut term = p / neg_log1m(p);
    let mut k = 1u64;
    loop {
        if u < term {
            return Ok(k);
        }
        u -= term;
        let next = term * p * k as f64 / (k + 1) as f64;
        // Remaining mass below rounding resolution: the tail is exhausted.
        if next == 0.0 || u - next == u {
            return Ok(k + 1);
        }
        term = next;
        k += 1;
    }
}

/// Chinese restaurant table count as a sum of `Bernoulli(r / (n - 1 + r))`, `n = 1..=m`.
pub fn sample_crt<R: Rng + ?Sized>(m: u64, r: f64, rng: &mut R) -> Result<u64, DistError> {
    check_positive("r", r)?;
    Ok(crt_unchecked(m, r, rng))
}

#[inline]
pub(crate) fn crt_unchecked<R: Rng + ?Sized>(m: u64, r: f64, rng: &mut R) -> u64 {
    if m == 0 {
        return 0;
    }
    let mut tables = 1;
    for n in 1..m {
        if rng.gen::<f64>() * (n as f64 + r) < r {
            tables += 1;
        }
    }
    tables
}

/// `NB(r, p)` through its gamma-Poisson mixture.
pub fn sample_nb_direct<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> Result<u64, DistError> {
    check_positive("r", r)?;
    check_open_unit("p", p)?;
    let rate = sample_gamma(r, p / (1.0 - p), rng)?;
    sample_poisson(rate, rng)
}

/// `NB(r, p)` as a `Pois(-r ln(1-p))` number of `Log(p)` increments.
pub fn sample_nb_compound<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> Result<u64, DistError> {
    check_positive("r", r)?;
    check_open_unit("p", p)?;
    let l = sample_poisson(r * neg_log1m(p), rng)?;
    (0..l).try_fold(0u64, |acc, _| Ok(acc + sample_logarithmic(p, rng)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gamma_exponential_case() {
        let mut rng = RandomSource::new(1);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(1.0, 1.0, &mut rng).unwrap()).collect();
        let (m, _) = moments(&xs);
        assert!((0.98..=1.02).contains(&m), "{m}");
    }

    #[test]
    fn gamma_moments() {
        let mut rng = RandomSource::new(2);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(2.0, 3.0, &mut rng).unwrap()).collect();
        let (m, v) = moments(&xs);
        assert!((m - 6.0).abs() < 0.02 * 6.0, "{m}");
        assert!((v - 18.0).abs() < 0.05 * 18.0, "{v}");
    }

    #[test]
    fn gamma_tiny_shape_stays_positive() {
        let mut rng = RandomSource::new(3);
        for _ in 0..100_000 {
            let x = sample_gamma(1e-4, 1.0, &mut rng).unwrap();
            assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn gamma_small_shape_mean() {
        let mut rng = RandomSource::new(30);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_gamma(0.3, 2.0, &mut rng).unwrap()).collect();
        let (m, v) = moments(&xs);
        assert!((m - 0.6).abs() < 0.02 * 0.6, "{m}");
        assert!((v - 1.2).abs() < 0.05 * 1.2, "{v}");
    }

    #[test]
    fn gamma_domain_errors() {
        let mut rng = RandomSource::new(4);
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(1.0, -1.0, &mut rng).is_err());
        assert!(sample_gamma(f64::INFINITY, 1.0, &mut rng).is_err());
        assert!(sample_gamma(1.0, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn beta_uniform_and_moments() {
        let mut rng = RandomSource::new(5);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(1.0, 1.0, &mut rng).unwrap()).collect();
        let (m, _) = moments(&xs);
        assert!((0.497..=0.503).contains(&m), "{m}");

        let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(2.0, 2.0, &mut rng).unwrap()).collect();
        let (m, v) = moments(&xs);
        assert!((m - 0.5).abs() < 0.005, "{m}");
        assert!((v - 0.05).abs() < 0.05 * 0.05, "{v}");
    }

    #[test]
    fn beta_extreme_shapes_stay_open() {
        let mut rng = RandomSource::new(6);
        for _ in 0..100_000 {
            let x = sample_beta(0.01, 100.0, &mut rng).unwrap();
            assert!(x > 0.0 && x < 1.0);
        }
        assert!(sample_beta(0.0, 1.0, &mut rng).is_err());
        assert!(sample_beta(1.0, -2.0, &mut rng).is_err());
    }

    #[test]
    fn dirichlet_cases() {
        let mut rng = RandomSource::new(7);
        assert_eq!(sample_dirichlet(&[1.0], &mut rng).unwrap(), vec![1.0]);

        let first: Vec<f64> = (0..100_000)
            .map(|_| sample_dirichlet(&[5.0, 5.0], &mut rng).unwrap()[0])
            .collect();
        let (m, _) = moments(&first);
        assert!((m - 0.5).abs() < 0.005, "{m}");

        for _ in 0..1000 {
            let d = sample_dirichlet(&[0.05; 10], &mut rng).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&x| x > 0.0));
        }
        let tiny = sample_dirichlet(&[1e-3; 3000], &mut rng).unwrap();
        assert!((tiny.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(tiny.iter().all(|&x| x > 0.0));

        assert_eq!(sample_dirichlet(&[], &mut rng), Err(DistError::Empty));
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn discrete_cases() {
        let mut rng = RandomSource::new(8);
        for _ in 0..1000 {
            assert_eq!(sample_discrete(&[0.0, 3.0, 0.0], &mut rng).unwrap(), 1);
        }
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_discrete(&[1.0; 4], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01 * 0.25);
        }
        let w = [0.2, 0.3, 0.5];
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_discrete(&w, &mut rng).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(w) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
        assert!(sample_discrete(&[0.0, 0.0], &mut rng).is_err());
        assert!(sample_discrete(&[1.0, -0.1], &mut rng).is_err());
        assert!(sample_discrete(&[1.0, f64::NAN], &mut rng).is_err());
        assert!(sample_discrete(&[], &mut rng).is_err());
    }

    #[test]
    fn poisson_cases() {
        let mut rng = RandomSource::new(9);
        assert_eq!(sample_poisson(0.0, &mut rng).unwrap(), 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_poisson(4.0, &mut rng).unwrap() as f64).collect();
        let (m, v) = moments(&xs);
        assert!((m - 4.0).abs() < 0.04, "{m}");
        assert!((v - 4.0).abs() < 0.12, "{v}");
        let zeros = (0..100_000).filter(|_| sample_poisson(0.01, &mut rng).unwrap() == 0).count();
        assert!((zeros as f64 / 1e5 - (-0.01f64).exp()).abs() < 0.002);
        assert!(sample_poisson(-1.0, &mut rng).is_err());
        assert!(sample_poisson(f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn logarithmic_cases() {
        let mut rng = RandomSource::new(10);
        let ones = (0..100_000).filter(|_| sample_logarithmic(1e-6, &mut rng).unwrap() == 1).count();
        assert!(ones as f64 / 1e5 > 0.999);

        let ones = (0..100_000).filter(|_| sample_logarithmic(0.5, &mut rng).unwrap() == 1).count();
        assert!((ones as f64 / 1e5 - 0.5 / 2f64.ln()).abs() < 0.005);

        let xs: Vec<f64> = (0..100_000).map(|_| sample_logarithmic(0.9, &mut rng).unwrap() as f64).collect();
        let (m, _) = moments(&xs);
        let want = -1.0 / 0.1f64.ln() * (0.9 / 0.1);
        assert!((m - want).abs() < 0.02 * want, "{m} vs {want}");

        assert!(sample_logarithmic(0.0, &mut rng).is_err());
        assert!(sample_logarithmic(1.0, &mut rng).is_err());
    }

    #[test]
    fn crt_sampler_support() {
        let mut rng = RandomSource::new(11);
        assert_eq!(sample_crt(0, 2.0, &mut rng).unwrap(), 0);
        for _ in 0..1000 {
            assert_eq!(sample_crt(1, 0.3, &mut rng).unwrap(), 1);
            let l = sample_crt(30, 1.5, &mut rng).unwrap();
            assert!((1..=30).contains(&l));
        }
        assert!(sample_crt(3, 0.0, &mut rng).is_err());
    }

    #[test]
    fn nb_direct_cases() {
        let mut rng = RandomSource::new(12);
        let zeros = (0..100_000).filter(|_| sample_nb_direct(1.0, 0.5, &mut rng).unwrap() == 0).count();
        assert!((zeros as f64 / 1e5 - 0.5).abs() < 0.005);

        let zeros = (0..10_000).filter(|_| sample_nb_direct(1.0, 1e-9, &mut rng).unwrap() == 0).count();
        assert_eq!(zeros, 10_000);

        let xs: Vec<f64> = (0..100_000).map(|_| sample_nb_direct(2.0, 0.5, &mut rng).unwrap() as f64).collect();
        let (m, v) = moments(&xs);
        assert!((m - 2.0).abs() < 0.04, "{m}");
        assert!((v - 4.0).abs() < 0.2, "{v}");
        assert!(sample_nb_direct(1.0, 1.0, &mut rng).is_err());
        assert!(sample_nb_direct(0.0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn nb_compound_mean() {
        let mut rng = RandomSource::new(13);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_nb_compound(0.1, 0.9, &mut rng).unwrap() as f64).collect();
        let (m, _) = moments(&xs);
        assert!((m - 0.9).abs() < 0.05 * 0.9, "{m}");
        assert!(sample_nb_compound(1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn neg_log1m_small_p() {
        assert!((neg_log1m(1e-17) - 1e-17).abs() < 1e-30);
        assert!((neg_log1m(0.5) - 2f64.ln()).abs() < 1e-15);
    }
}
