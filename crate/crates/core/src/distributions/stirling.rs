use statrs::function::gamma::ln_gamma;

use super::{check_positive, DistError};

/// Largest `m` for which [`crt_pmf`] evaluates the exact PMF.
pub const DEFAULT_CRT_PMF_CAPACITY: u64 = 10_000;

/// Log-magnitudes of unsigned Stirling numbers of the first kind, `ln |s(m, j)|`
/// for `0 <= j <= m <= m_max`. Zero entries are stored as `-inf`.
#[derive(Clone, Debug)]
pub struct StirlingTriangle {
    m_max: u64,
    // row m occupies [m(m+1)/2, m(m+1)/2 + m]
    log_entries: Vec<f64>,
}

impl StirlingTriangle {
    pub fn new(m_max: u64) -> Self {
        let rows = m_max as usize + 1;
        let mut log_entries = Vec::with_capacity(rows * (rows + 1) / 2);
        let mut row = vec![0.0];
        log_entries.extend_from_slice(&row);
        for m in 0..m_max {
            row = next_row(&row, m);
            log_entries.extend_from_slice(&row);
        }
        Self { m_max, log_entries }
    }

    pub fn m_max(&self) -> u64 {
        self.m_max
    }

    /// `ln |s(m, j)|` for `j = 0..=m`.
    pub fn log_row(&self, m: u64) -> Result<&[f64], DistError> {
        if m > self.m_max {
            return Err(DistError::Capacity { m, capacity: self.m_max });
        }
        let m = m as usize;
        let start = m * (m + 1) / 2;
        Ok(&self.log_entries[start..=start + m])
    }

    pub fn log_abs(&self, m: u64, j: u64) -> Result<f64, DistError> {
        let row = self.log_row(m)?;
        Ok(row.get(j as usize).copied().unwrap_or(f64::NEG_INFINITY))
    }

    /// Chinese restaurant table PMF, `Pr(l = j | m, r)` for `j = 0..=m`.
    pub fn crt_pmf(&self, m: u64, r: f64) -> Result<Vec<f64>, DistError> {
        check_positive("r", r)?;
        Ok(crt_from_log_row(self.log_row(m)?, r))
    }
}

/// One step of `|s(m+1, j)| = m |s(m, j)| + |s(m, j-1)|` in log space.
fn next_row(row: &[f64], m: u64) -> Vec<f64> {
    let ln_m = (m as f64).ln();
    let mut next = vec![f64::NEG_INFINITY; row.len() + 1];
    for j in 0..next.len() {
        let stay = row.get(j).map_or(f64::NEG_INFINITY, |&s| s + ln_m);
        let open = if j > 0 { row[j - 1] } else { f64::NEG_INFINITY };
        next[j] = log_add_exp(stay, open);
    }
    next
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// `ln |s(m, j)|` for `j = 0..=m`, computed by a rolling recurrence in O(m) memory.
pub fn log_stirling_row(m: u64) -> Vec<f64> {
    let mut row = vec![0.0];
    for i in 0..m {
        row = next_row(&row, i);
    }
    row
}

fn crt_from_log_row(log_row: &[f64], r: f64) -> Vec<f64> {
    let m = (log_row.len() - 1) as f64;
    let log_norm = ln_gamma(r) - ln_gamma(m + r);
    let ln_r = r.ln();
    log_row
        .iter()
        .enumerate()
        .map(|(j, &ls)| {
            if ls == f64::NEG_INFINITY {
                0.0
            } else {
                (log_norm + ls + j as f64 * ln_r).exp()
            }
        })
        .collect()
}

/// Chinese restaurant table PMF `Γ(r)/Γ(m+r) |s(m,j)| r^j`, `j = 0..=m`.
///
/// Evaluated in log space; `m` above [`DEFAULT_CRT_PMF_CAPACITY`] is rejected.
/// Use [`super::sample_crt`] for draws at any `m`.
pub fn crt_pmf(m: u64, r: f64) -> Result<Vec<f64>, DistError> {
    check_positive("r", r)?;
    if m > DEFAULT_CRT_PMF_CAPACITY {
        return Err(DistError::Capacity {
            m,
            capacity: DEFAULT_CRT_PMF_CAPACITY,
        });
    }
    Ok(crt_from_log_row(&log_stirling_row(m), r))
}
