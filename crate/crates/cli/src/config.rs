use std::path::{Path, PathBuf};

use nbproc_core::corpus::SynthSettings;
use nbproc_core::models::{HyperParams, ModelKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable that overrides [`RunConfig::workers`].
pub const THREADS_ENV: &str = "NBPROC_THREADS";

/// Where the documents come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// UCI bag-of-words `docword` and `vocab` files.
    Files { docword: PathBuf, vocab: PathBuf },
    /// A gamma-NB corpus drawn on the fly.
    Synthetic { settings: SynthSettings, seed: u64 },
}

/// Everything a run depends on. Two runs with equal hashes produce the same
/// trace when `workers` is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub corpus: CorpusSource,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    /// Terms seen in fewer documents are dropped before splitting.
    #[serde(default = "one")]
    pub min_doc_freq: usize,
    /// Independent train/test partitions, each fitted by its own chain.
    #[serde(default = "one")]
    pub partitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub hyper: HyperParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Written into the echoed config; ignored when read back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

fn default_train_frac() -> f64 {
    0.6
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn new(model: ModelKind, corpus: CorpusSource) -> Self {
        Self {
            model,
            corpus,
            train_frac: default_train_frac(),
            min_doc_freq: 1,
            partitions: 1,
            seed: 0,
            workers: 1,
            hyper: HyperParams::default(),
            output_dir: None,
            config_hash: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Apply the thread override, copy the seed into the hyperparameters and
    /// check every field.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if let Ok(raw) = std::env::var(THREADS_ENV) {
            self.workers = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
        }
        self.hyper.seed = self.seed;
        self.config_hash = None;
        self.validate()?;
        self.config_hash = Some(self.hash());
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.hyper.validate()?;
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(CliError::Usage(format!("train_frac must lie in (0, 1), got {}", self.train_frac)));
        }
        for (name, v) in [
            ("min_doc_freq", self.min_doc_freq),
            ("partitions", self.partitions),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return Err(CliError::Usage(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, leaving
    /// out the output directory and any stored hash.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
            map.remove("config_hash");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nbproc_core::corpus::ParamPrior;

    fn files() -> RunConfig {
        RunConfig::new(
            ModelKind::GammaNb,
            CorpusSource::Files { docword: "d.txt".into(), vocab: "v.txt".into() },
        )
    }

    #[test]
    fn defaults_are_full_scale_protocol() {
        let c: RunConfig = serde_json::from_str(
            r#"{"model":"gamma-nb","corpus":{"kind":"files","docword":"d","vocab":"v"}}"#,
        )
        .unwrap();
        assert_eq!(c.hyper.num_topics, 400);
        assert_eq!(c.hyper.iters, 2500);
        assert_eq!(c.hyper.burnin, 1000);
        assert_eq!(c.hyper.init_iters, 50);
        assert_eq!(c.hyper.eta, 0.05);
        assert_eq!(c.workers, 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            r#"{"model":"gamma-nb","corpus":{"kind":"files","docword":"d","vocab":"v"},"iterations":3}"#,
            r#"{"model":"gamma-nb","corpus":{"kind":"files","docword":"d","vocab":"v","x":1}}"#,
            r#"{"model":"gamma-nb","corpus":{"kind":"files","docword":"d","vocab":"v"},"hyper":{"k":3}}"#,
            r#"{"model":"gamma-np","corpus":{"kind":"files","docword":"d","vocab":"v"}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = files();
        let mut b = files();
        b.output_dir = Some("elsewhere".into());
        b.config_hash = Some("stale".into());
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);

        let mut c = files();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
        let mut d = files();
        d.hyper.eta = 0.1;
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::new(
            ModelKind::NbHdp,
            CorpusSource::Synthetic {
                settings: SynthSettings {
                    num_topics: 3,
                    vocab_size: 10,
                    num_docs: 4,
                    topic_concentration: 0.1,
                    dispersion: ParamPrior::Gamma { shape: 2.0, scale: 0.5 },
                    probability: ParamPrior::Beta { a: 2.0, b: 2.0 },
                },
                seed: 3,
            },
        );
        c.hyper.iters = 10;
        c.hyper.burnin = 5;
        let resolved = c.resolve().unwrap();
        let text = serde_json::to_string_pretty(&resolved).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, resolved);
        assert_eq!(back.hash(), resolved.config_hash.clone().unwrap());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut c = files();
        c.train_frac = 1.0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let mut c = files();
        c.hyper.burnin = c.hyper.iters;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let mut c = files();
        c.partitions = 0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }
}
