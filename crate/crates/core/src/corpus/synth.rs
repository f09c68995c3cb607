use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError};
use crate::distributions::{sample_beta, sample_dirichlet, sample_discrete, sample_gamma, sample_poisson};

const MAX_DOC_RETRIES: usize = 100;

/// How a ground-truth parameter is set for every topic or document.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamPrior {
    Fixed { value: f64 },
    Gamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
}

impl ParamPrior {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, CorpusError> {
        Ok(match *self {
            ParamPrior::Fixed { value } => value,
            ParamPrior::Gamma { shape, scale } => sample_gamma(shape, scale, rng)?,
            ParamPrior::Beta { a, b } => sample_beta(a, b, rng)?,
        })
    }
}

/// Generative settings for a synthetic gamma-NB corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSettings {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    /// Symmetric Dirichlet parameter for the true topics; smaller is sharper.
    pub topic_concentration: f64,
    /// Per-topic dispersion `r_k`.
    pub dispersion: ParamPrior,
    /// Per-document probability `p_j`.
    pub probability: ParamPrior,
}

impl SynthSettings {
    fn validate(&self) -> Result<(), CorpusError> {
        for (name, v) in [
            ("num_topics", self.num_topics),
            ("vocab_size", self.vocab_size),
            ("num_docs", self.num_docs),
        ] {
            if v == 0 {
                return Err(CorpusError::Domain { param: name, value: 0.0 });
            }
        }
        if !(self.topic_concentration > 0.0 && self.topic_concentration.is_finite()) {
            return Err(CorpusError::Domain {
                param: "topic_concentration",
                value: self.topic_concentration,
            });
        }
        if let ParamPrior::Fixed { value } = self.dispersion {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CorpusError::Domain { param: "dispersion", value });
            }
        }
        if let ParamPrior::Fixed { value } = self.probability {
            if !(value > 0.0 && value < 1.0) {
                return Err(CorpusError::Domain { param: "probability", value });
            }
        }
        Ok(())
    }
}

/// Parameters the synthetic corpus was drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `topics[k][v]`
    pub topics: Vec<Vec<f64>>,
    pub r_k: Vec<f64>,
    pub p_j: Vec<f64>,
    /// `lambda[j][k]`
    pub lambda: Vec<Vec<f64>>,
    /// `n_jk[j][k]`
    pub counts: Vec<Vec<u64>>,
}

/// Forward-simulate `n_jk ~ Pois(λ_jk)`, `λ_jk ~ Gamma(r_k, p_j/(1-p_j))`, with
/// `n_jk` tokens drawn from topic `k`. Documents that come out empty are
/// redrawn (fresh `p_j`, `λ_j`) a bounded number of times.
pub fn synthesize_corpus<R: Rng + ?Sized>(settings: &SynthSettings, rng: &mut R) -> Result<(Corpus, GroundTruth), CorpusError> {
    settings.validate()?;
    let k_true = settings.num_topics;
    let v = settings.vocab_size;

    let topics = (0..k_true)
        .map(|_| sample_dirichlet(&vec![settings.topic_concentration; v], rng))
        .collect::<Result<Vec<_>, _>>()?;
    let r_k = (0..k_true)
        .map(|_| settings.dispersion.draw(rng))
        .collect::<Result<Vec<_>, _>>()?;

    let mut p_j = Vec::with_capacity(settings.num_docs);
    let mut lambda = Vec::with_capacity(settings.num_docs);
    let mut counts = Vec::with_capacity(settings.num_docs);
    let mut docs = Vec::with_capacity(settings.num_docs);
    for j in 0..settings.num_docs {
        let mut attempt = 0;
        loop {
            let p = settings.probability.draw(rng)?;
            let scale = p / (1.0 - p);
            let lam = r_k
                .iter()
                .map(|&r| sample_gamma(r, scale, rng))
                .collect::<Result<Vec<_>, _>>()?;
            let n = lam
                .iter()
                .map(|&l| sample_poisson(l, rng))
                .collect::<Result<Vec<_>, _>>()?;
            if n.iter().sum::<u64>() > 0 {
                let mut term_counts = vec![0u32; v];
                for (k, &nk) in n.iter().enumerate() {
                    for _ in 0..nk {
                        term_counts[sample_discrete(&topics[k], rng)?] += 1;
                    }
                }
                docs.push(
                    term_counts
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(t, &c)| (t as u32, c))
                        .collect(),
                );
                p_j.push(p);
                lambda.push(lam);
                counts.push(n);
                break;
            }
            attempt += 1;
            if attempt >= MAX_DOC_RETRIES {
                return Err(CorpusError::Synthesis(format!(
                    "document {j} stayed empty after {MAX_DOC_RETRIES} draws"
                )));
            }
        }
    }
    let vocab = (0..v).map(|t| format!("term{t:05}")).collect();
    let corpus = Corpus::new(vocab, docs)?;
    Ok((
        corpus,
        GroundTruth {
            topics,
            r_k,
            p_j,
            lambda,
            counts,
        },
    ))
}
