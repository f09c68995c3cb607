use super::EvalError;
use crate::distributions::RandomSource;
use crate::models::{
    sample_prior, simulate_data, sweep, Fault, HyperParams, ModelDims, ModelKind, ModelState, SweepOptions,
};

/// Largest |z| a correct kernel is expected to produce.
pub const GEWEKE_THRESHOLD: f64 = 4.0;

/// Problem size, hyperparameters and kernel variant of a Geweke run.
#[derive(Clone, Debug, PartialEq)]
pub struct GewekeSettings {
    pub dims: ModelDims,
    pub hyper: HyperParams,
    /// Batches used for the batch-means variance of the Gibbs chain.
    pub num_batches: usize,
    pub fault: Option<Fault>,
    /// A Gibbs chain whose simulated corpus grows past this many tokens is
    /// stopped and reported as diverged.
    pub max_tokens: usize,
}

impl GewekeSettings {
    /// Three documents, two topics, three terms, with hyperparameters that
    /// keep every monitored quantity's fourth moment finite and documents
    /// short (a handful of tokens on average; ten for the normalized kinds).
    pub fn micro(kind: ModelKind) -> Self {
        let base = HyperParams {
            num_topics: 2,
            eta: 1.0,
            lda_alpha_total: 2.0,
            init_iters: 0,
            ..HyperParams::default()
        };
        let hyper = match kind {
            ModelKind::GammaNb | ModelKind::NbHdp | ModelKind::MarkedGammaNb => {
                HyperParams { a0: 5.0, b0: 12.0, e0: 8.0, f0: 2.0, c: 0.5, ..base }
            }
            ModelKind::NbLda | ModelKind::NbFtm => HyperParams { a0: 5.0, b0: 12.0, e0: 8.0, f0: 2.0, c: 1.0, ..base },
            ModelKind::BetaNb | ModelKind::MarkedBetaNb => HyperParams { e0: 4.0, f0: 2.0, c: 20.0, ..base },
            ModelKind::CrfHdp => HyperParams { a0: 4.0, b0: 2.0, ..base },
            ModelKind::Lda | ModelKind::DirPfa => base,
        };
        Self {
            dims: ModelDims { num_docs: 3, num_topics: 2, vocab_size: 3, doc_len: 10 },
            hyper,
            num_batches: 50,
            fault: None,
            max_tokens: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GewekeStatistic {
    pub name: String,
    pub forward_mean: f64,
    pub gibbs_mean: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GewekeReport {
    pub kind: ModelKind,
    pub fault: Option<Fault>,
    pub statistics: Vec<GewekeStatistic>,
    /// Set when the Gibbs chain stopped on an error (for example a corrupted
    /// kernel whose parameters ran off to infinity); such a run fails.
    pub diverged: Option<String>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        if self.diverged.is_some() {
            return f64::INFINITY;
        }
        self.statistics.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_abs_z() < GEWEKE_THRESHOLD
    }
}

/// Compare `num_forward` independent draws of (parameters, data) from the
/// prior with `num_gibbs` steps of a chain that alternates one kernel sweep
/// with a fresh draw of the data given the parameters. Both simulators target
/// the joint distribution, so first and second moments of the monitored
/// scalars must agree. Gibbs-side variances use batch means.
pub fn geweke_check(
    kind: ModelKind,
    settings: &GewekeSettings,
    num_forward: usize,
    num_gibbs: usize,
    rng: &mut RandomSource,
) -> Result<GewekeReport, EvalError> {
    if num_forward == 0 || num_gibbs == 0 {
        return Err(EvalError::Precondition("geweke_check needs at least one forward and one Gibbs draw".into()));
    }
    let batches = settings.num_batches.clamp(2, num_gibbs.max(2));
    if num_gibbs < batches {
        return Err(EvalError::Precondition(format!(
            "{num_gibbs} Gibbs draws cannot fill {batches} batches"
        )));
    }
    if settings.dims.num_topics != settings.hyper.num_topics {
        return Err(EvalError::Precondition("dims and hyper disagree on the number of topics".into()));
    }
    let mut forward_rng = rng.child(0);
    let mut gibbs_rng = rng.child(1);

    let (forward, gibbs) = rayon::join(
        || forward_draws(kind, settings, num_forward, &mut forward_rng),
        || gibbs_draws(kind, settings, num_gibbs, &mut gibbs_rng),
    );
    let (names, forward) = forward?;
    let gibbs = match gibbs {
        Ok((_, rows)) => rows,
        Err(e) => {
            return Ok(GewekeReport { kind, fault: settings.fault, statistics: Vec::new(), diverged: Some(e.to_string()) })
        }
    };

    let mut statistics = Vec::with_capacity(names.len());
    for (i, name) in names.into_iter().enumerate() {
        let f: Vec<f64> = forward.iter().map(|row| row[i]).collect();
        let g: Vec<f64> = gibbs.iter().map(|row| row[i]).collect();
        let (fm, fv) = mean_var(&f);
        let gm = mean(&g);
        let batch_len = g.len() / batches;
        let batch_means: Vec<f64> = g.chunks_exact(batch_len).take(batches).map(mean).collect();
        let (_, bv) = mean_var(&batch_means);
        let se = (fv / f.len() as f64 + bv / batches as f64).sqrt();
        let z = if se > 0.0 {
            (fm - gm) / se
        } else if fm == gm {
            0.0
        } else {
            f64::INFINITY
        };
        if !(fm.is_finite() && gm.is_finite()) {
            return Err(EvalError::NonFinite(name));
        }
        statistics.push(GewekeStatistic { name, forward_mean: fm, gibbs_mean: gm, z });
    }
    Ok(GewekeReport { kind, fault: settings.fault, statistics, diverged: None })
}

type Draws = (Vec<String>, Vec<Vec<f64>>);

fn forward_draws(kind: ModelKind, s: &GewekeSettings, n: usize, rng: &mut RandomSource) -> Result<Draws, EvalError> {
    let mut rows = Vec::with_capacity(n);
    let mut names = Vec::new();
    for _ in 0..n {
        let mut state = sample_prior(kind, &s.dims, &s.hyper, rng)?;
        simulate_data(&mut state, s.dims.doc_len, rng)?;
        let (nm, row) = monitored(&state, &s.hyper);
        names = nm;
        rows.push(row);
    }
    Ok((names, rows))
}

fn gibbs_draws(kind: ModelKind, s: &GewekeSettings, n: usize, rng: &mut RandomSource) -> Result<Draws, EvalError> {
    let opts = SweepOptions { workers: 1, fault: s.fault };
    let mut state = sample_prior(kind, &s.dims, &s.hyper, rng)?;
    let mut docs = simulate_data(&mut state, s.dims.doc_len, rng)?;
    let mut rows = Vec::with_capacity(n);
    let mut names = Vec::new();
    for _ in 0..n {
        sweep(&mut state, &docs, &s.hyper, rng, &opts)?;
        docs = simulate_data(&mut state, s.dims.doc_len, rng)?;
        if docs.total_tokens() > s.max_tokens {
            return Err(EvalError::Diverged(format!("simulated corpus reached {} tokens", docs.total_tokens())));
        }
        let (nm, row) = monitored(&state, &s.hyper);
        names = nm;
        rows.push(row);
    }
    Ok((names, rows))
}

/// Monitored scalars and their squares.
fn monitored(state: &ModelState, hyper: &HyperParams) -> (Vec<String>, Vec<f64>) {
    let kind = state.kind;
    let inferred = kind.inferred();
    let mut base: Vec<(&str, f64)> = Vec::new();
    if inferred.r_k {
        base.push(("mean_r_k", mean(&state.r_k)));
    }
    if inferred.r_j {
        base.push(("mean_r_j", mean(&state.r_j)));
    }
    if inferred.p_j {
        base.push(("mean_p_j", mean(&state.p_j)));
    }
    if inferred.p_k {
        base.push(("mean_p_k", mean(&state.p_k)));
    }
    if inferred.pi_k {
        base.push(("mean_pi_k", mean(&state.pi_k)));
    }
    let learns_gamma0 = match kind {
        ModelKind::GammaNb | ModelKind::NbHdp | ModelKind::NbLda | ModelKind::NbFtm | ModelKind::MarkedGammaNb => true,
        ModelKind::CrfHdp => hyper.crf_sample_gamma0,
        _ => false,
    };
    if learns_gamma0 {
        base.push(("gamma0", state.gamma0));
    }
    if kind == ModelKind::CrfHdp {
        base.push(("alpha", state.alpha));
        base.push(("r_tilde_0", state.r_tilde[0]));
    }
    if kind.is_normalized() {
        base.push(("lambda_00", state.lambda[0]));
    } else {
        base.push(("total_tokens", state.n_k.iter().sum::<u64>() as f64));
    }
    base.push(("topic0_tokens", state.n_k[0] as f64));
    base.push(("omega_00", state.omega[0]));

    let mut names = Vec::with_capacity(2 * base.len());
    let mut values = Vec::with_capacity(2 * base.len());
    for (name, x) in &base {
        names.push(name.to_string());
        values.push(*x);
    }
    for (name, x) in &base {
        names.push(format!("{name}^2"));
        values.push(x * x);
    }
    (names, values)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    } else {
        0.0
    };
    (m, v)
}
