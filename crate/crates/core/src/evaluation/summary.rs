use std::fmt;
use std::io::Write;

use super::EvalError;
use crate::models::ModelState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Topic,
    Document,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Topic => "topic",
            Scope::Document => "document",
        })
    }
}

/// Count parameters attached to one topic (`r_k`, `p_k`, `π_k`) or one
/// document (`r_j`, `p_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterRow {
    pub scope: Scope,
    /// Position after sorting by word count, starting at 0.
    pub rank: usize,
    pub index: usize,
    pub words: u64,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub pi: Option<f64>,
}

/// Topics then documents, each in decreasing order of assigned words.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterSummary {
    pub rows: Vec<ParameterRow>,
}

pub fn summarize_parameters(state: &ModelState) -> ParameterSummary {
    let pick = |xs: &[f64], i: usize| xs.get(i).copied();
    let mut rows = Vec::with_capacity(state.num_topics + state.num_docs);

    let topic_words = state.topic_totals();
    for (rank, k) in order_by_count(topic_words).into_iter().enumerate() {
        rows.push(ParameterRow {
            scope: Scope::Topic,
            rank,
            index: k,
            words: topic_words[k],
            r: pick(&state.r_k, k),
            p: pick(&state.p_k, k),
            pi: pick(&state.pi_k, k),
        });
    }
    let doc_words = state.doc_totals();
    for (rank, j) in order_by_count(&doc_words).into_iter().enumerate() {
        rows.push(ParameterRow {
            scope: Scope::Document,
            rank,
            index: j,
            words: doc_words[j],
            r: pick(&state.r_j, j),
            p: pick(&state.p_j, j),
            pi: None,
        });
    }
    ParameterSummary { rows }
}

/// Indices sorted by decreasing count; ties keep index order.
fn order_by_count(counts: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    order
}

impl ParameterSummary {
    pub fn topics(&self) -> impl Iterator<Item = &ParameterRow> {
        self.rows.iter().filter(|r| r.scope == Scope::Topic)
    }

    pub fn documents(&self) -> impl Iterator<Item = &ParameterRow> {
        self.rows.iter().filter(|r| r.scope == Scope::Document)
    }

    /// CSV with linear and base-10 log columns for every parameter.
    pub fn write_csv<W: Write>(&self, writer: W, config_hash: &str) -> Result<(), EvalError> {
        write_parameter_csv(writer, std::slice::from_ref(self), config_hash)
    }
}

/// One CSV for several partitions; the `partition` column is the slice index.
pub fn write_parameter_csv<W: Write>(
    writer: W,
    summaries: &[ParameterSummary],
    config_hash: &str,
) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "partition", "scope", "rank", "index", "words", "r", "log10_r", "p", "log10_p", "pi", "log10_pi", "config_hash",
    ])?;
    let lin = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let log = |x: Option<f64>| x.map(|v| v.log10().to_string()).unwrap_or_default();
    for (partition, summary) in summaries.iter().enumerate() {
        for row in &summary.rows {
            out.write_record([
                partition.to_string(),
                row.scope.to_string(),
                row.rank.to_string(),
                row.index.to_string(),
                row.words.to_string(),
                lin(row.r),
                log(row.r),
                lin(row.p),
                log(row.p),
                lin(row.pi),
                log(row.pi),
                config_hash.to_string(),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
