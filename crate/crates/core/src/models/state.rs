use super::{Documents, ModelError, ModelKind};

/// K-atom truncation of the random measures plus every latent count.
///
/// Dense matrices are row-major: `omega[k * V + v]`, `lambda[j * K + k]`,
/// `n_jk[j * K + k]`, `n_kv[k * V + v]`. Parameter vectors a model does not
/// use are left empty, except `p_j` which NB-HDP and NB-FTM hold at 0.5.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub kind: ModelKind,
    pub num_docs: usize,
    pub num_topics: usize,
    pub vocab_size: usize,

    /// Topics ω_k, each row a distribution over the vocabulary.
    pub omega: Vec<f64>,
    /// Topic weights λ_jk; for LDA, Dir-PFA and CRF-HDP each row holds the
    /// normalized proportions λ̃_j.
    pub lambda: Vec<f64>,
    /// Topic of every training token, aligned with [`Documents`].
    pub z: Vec<Vec<u32>>,
    pub n_jk: Vec<u32>,
    pub n_kv: Vec<u32>,
    pub n_k: Vec<u64>,

    pub r_k: Vec<f64>,
    pub r_j: Vec<f64>,
    pub p_k: Vec<f64>,
    pub p_j: Vec<f64>,
    pub pi_k: Vec<f64>,
    pub b_jk: Vec<bool>,
    pub gamma0: f64,
    pub alpha: f64,
    /// CRT table counts l_jk.
    pub l_jk: Vec<u32>,
    /// Second-level CRT counts: one per topic (Gamma-NB, NB-FTM,
    /// Marked-Gamma-NB) or per document (NB-LDA).
    pub l_prime: Vec<u32>,
    /// Probabilities of the marginal NB laws of the first-level CRT counts;
    /// length matches `l_prime` (a single entry for Gamma-NB).
    pub p_prime: Vec<f64>,
    /// Normalized shared weights r̃ (CRF-HDP).
    pub r_tilde: Vec<f64>,
}

impl ModelState {
    pub fn omega_row(&self, k: usize) -> &[f64] {
        &self.omega[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn lambda_row(&self, j: usize) -> &[f64] {
        &self.lambda[j * self.num_topics..(j + 1) * self.num_topics]
    }

    pub fn n_row(&self, j: usize) -> &[u32] {
        &self.n_jk[j * self.num_topics..(j + 1) * self.num_topics]
    }

    /// Σ_j n_jk.
    pub fn topic_totals(&self) -> &[u64] {
        &self.n_k
    }

    /// Σ_k n_jk.
    pub fn doc_totals(&self) -> Vec<u64> {
        (0..self.num_docs)
            .map(|j| self.n_row(j).iter().map(|&n| n as u64).sum())
            .collect()
    }

    pub(crate) fn check_dims(&self, docs: &Documents) -> Result<(), ModelError> {
        if docs.num_docs() != self.num_docs || docs.vocab_size() != self.vocab_size {
            return Err(ModelError::Dimension(format!(
                "state has J={} V={}, documents have J={} V={}",
                self.num_docs,
                self.vocab_size,
                docs.num_docs(),
                docs.vocab_size()
            )));
        }
        for j in 0..self.num_docs {
            if self.z[j].len() != docs.len(j) {
                return Err(ModelError::Dimension(format!(
                    "document {j}: {} assignments for {} tokens",
                    self.z[j].len(),
                    docs.len(j)
                )));
            }
        }
        Ok(())
    }

    /// Rebuild `n_jk`, `n_kv` and `n_k` from `z`.
    pub fn recompute_counts(&mut self, docs: &Documents) {
        let k_max = self.num_topics;
        let v_max = self.vocab_size;
        self.n_jk.clear();
        self.n_jk.resize(self.num_docs * k_max, 0);
        self.n_kv.clear();
        self.n_kv.resize(k_max * v_max, 0);
        self.n_k.clear();
        self.n_k.resize(k_max, 0);
        for j in 0..self.num_docs {
            for (&v, &k) in docs.doc(j).iter().zip(&self.z[j]) {
                let k = k as usize;
                self.n_jk[j * k_max + k] += 1;
                self.n_kv[k * v_max + v as usize] += 1;
                self.n_k[k] += 1;
            }
        }
    }

    /// Structural invariants that must hold after every sweep; returns the
    /// first violation found.
    pub fn check_invariants(&self, docs: &Documents) -> Result<(), String> {
        let k_max = self.num_topics;
        for k in 0..k_max {
            let s: f64 = self.omega_row(k).iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(format!("omega row {k} sums to {s}"));
            }
            if self.omega_row(k).iter().any(|&x| !(x > 0.0)) {
                return Err(format!("omega row {k} has a non-positive entry"));
            }
        }
        for j in 0..self.num_docs {
            let total: u64 = self.n_row(j).iter().map(|&n| n as u64).sum();
            if total != docs.len(j) as u64 {
                return Err(format!("doc {j}: sum_k n_jk = {total} but {} tokens", docs.len(j)));
            }
            if self.kind.is_normalized() {
                let s: f64 = self.lambda_row(j).iter().sum();
                if (s - 1.0).abs() > 1e-10 {
                    return Err(format!("lambda row {j} sums to {s}"));
                }
            }
        }
        let gated = !self.b_jk.is_empty();
        if !self.l_jk.is_empty() {
            for idx in 0..self.n_jk.len() {
                let (n, l) = (self.n_jk[idx], self.l_jk[idx]);
                if l > n {
                    return Err(format!("l_jk > n_jk at {idx}"));
                }
                let active = n > 0 && (!gated || self.b_jk[idx]);
                if (l == 0) == active {
                    return Err(format!("l_jk = {l} inconsistent with n_jk = {n} at {idx}"));
                }
            }
        }
        for (name, ps) in [("p_j", &self.p_j), ("p_k", &self.p_k), ("pi_k", &self.pi_k), ("p_prime", &self.p_prime)] {
            if let Some(p) = ps.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
                return Err(format!("{name} has {p} outside (0, 1)"));
            }
        }
        for (name, xs) in [("r_k", &self.r_k), ("r_j", &self.r_j), ("r_tilde", &self.r_tilde)] {
            if let Some(x) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(format!("{name} has non-positive entry {x}"));
            }
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) || !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(format!("gamma0 = {}, alpha = {}", self.gamma0, self.alpha));
        }
        if gated {
            for (idx, &b) in self.b_jk.iter().enumerate() {
                if self.n_jk[idx] > 0 && !b {
                    return Err(format!("b_jk = 0 with n_jk > 0 at {idx}"));
                }
                if !b && self.lambda[idx] != 0.0 {
                    return Err(format!("b_jk = 0 but lambda = {} at {idx}", self.lambda[idx]));
                }
            }
        }
        for (idx, &l) in self.lambda.iter().enumerate() {
            let gated_off = gated && !self.b_jk[idx];
            if !gated_off && !(l > 0.0 && l.is_finite()) {
                return Err(format!("lambda has non-positive entry {l} at {idx}"));
            }
        }
        Ok(())
    }
}
