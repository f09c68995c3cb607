use std::io::Write;

use serde::Serialize;

use super::EvalError;
use crate::models::{count_active_topics, ModelKind, ModelState};

/// Scalar diagnostics of one Gibbs iteration. Parameters the model does not
/// carry are left empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Held-out perplexity of the samples collected so far, or of the current
    /// sample alone during burn-in.
    pub perplexity: f64,
    pub active_topics: usize,
    pub r_sum: Option<f64>,
    pub alpha: Option<f64>,
    pub mean_p_j: Option<f64>,
    pub mean_p_k: Option<f64>,
    pub gamma0: Option<f64>,
}

impl TraceRecord {
    pub fn from_state(iteration: usize, perplexity: f64, state: &ModelState) -> Self {
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let sum = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>());
        let kind = state.kind;
        Self {
            iteration,
            perplexity,
            active_topics: count_active_topics(state),
            r_sum: sum(&state.r_k).or_else(|| sum(&state.r_j)),
            alpha: (kind == ModelKind::CrfHdp).then_some(state.alpha),
            mean_p_j: mean(&state.p_j),
            mean_p_k: mean(&state.p_k),
            gamma0: uses_gamma0(kind).then_some(state.gamma0),
        }
    }
}

fn uses_gamma0(kind: ModelKind) -> bool {
    matches!(
        kind,
        ModelKind::GammaNb
            | ModelKind::NbHdp
            | ModelKind::NbLda
            | ModelKind::NbFtm
            | ModelKind::MarkedGammaNb
            | ModelKind::CrfHdp
    )
}

/// Per-iteration records plus the final summary of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceReport {
    pub records: Vec<TraceRecord>,
    pub final_perplexity: Option<f64>,
    pub final_active_topics: Option<usize>,
    pub runtime_seconds: Option<f64>,
}

impl TraceReport {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    /// Write the records as CSV with a header row. Wall time is not written so
    /// the file depends only on the configuration.
    pub fn write_csv<W: Write>(&self, writer: W, config_hash: &str) -> Result<(), EvalError> {
        write_trace_csv(writer, std::slice::from_ref(self), config_hash)
    }
}

/// One CSV for several partitions; the `partition` column is the slice index.
pub fn write_trace_csv<W: Write>(writer: W, reports: &[TraceReport], config_hash: &str) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "partition",
        "iteration",
        "perplexity",
        "active_topics",
        "r_sum",
        "alpha",
        "mean_p_j",
        "mean_p_k",
        "gamma0",
        "config_hash",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for (partition, report) in reports.iter().enumerate() {
        for r in &report.records {
            out.write_record([
                partition.to_string(),
                r.iteration.to_string(),
                r.perplexity.to_string(),
                r.active_topics.to_string(),
                opt(r.r_sum),
                opt(r.alpha),
                opt(r.mean_p_j),
                opt(r.mean_p_k),
                opt(r.gamma0),
                config_hash.to_string(),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RandomSource;
    use crate::models::{initialize, Documents, HyperParams, SweepOptions};

    fn state(kind: ModelKind) -> ModelState {
        let docs = Documents::new(vec![vec![0, 1, 1], vec![2]], 3).unwrap();
        let hyper = HyperParams { num_topics: 3, init_iters: 2, ..HyperParams::default() };
        initialize(kind, &docs, &hyper, &mut RandomSource::new(2), &SweepOptions::default()).unwrap()
    }

    #[test]
    fn record_fields_follow_model() {
        let gnb = TraceRecord::from_state(0, 2.0, &state(ModelKind::GammaNb));
        assert!(gnb.r_sum.is_some() && gnb.mean_p_j.is_some() && gnb.gamma0.is_some());
        assert!(gnb.alpha.is_none() && gnb.mean_p_k.is_none());

        let crf = TraceRecord::from_state(0, 2.0, &state(ModelKind::CrfHdp));
        assert!(crf.alpha.is_some() && crf.r_sum.is_none());

        let lda = TraceRecord::from_state(0, 2.0, &state(ModelKind::Lda));
        assert!(lda.r_sum.is_none() && lda.gamma0.is_none() && lda.mean_p_j.is_none());

        let bnb = TraceRecord::from_state(0, 2.0, &state(ModelKind::BetaNb));
        assert!(bnb.r_sum.is_some() && bnb.mean_p_k.is_some());
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let s = state(ModelKind::NbHdp);
        let mut report = TraceReport::default();
        for i in 0..4 {
            report.push(TraceRecord::from_state(i, 3.0, &s));
        }
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[report.clone(), report], "abc").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[0].starts_with("partition,iteration,perplexity"));
        assert!(lines[1].starts_with("0,0,3,"));
        assert!(lines[8].starts_with("1,3,3,"));
        assert!(lines.iter().skip(1).all(|l| l.ends_with(",abc")));
        // NB-HDP fixes p_j, so the mean is exactly one half.
        assert!(lines[1].contains(",0.5,"));
    }
}
