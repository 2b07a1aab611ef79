//! The run configuration file: a JSON tree whose every key is optional.
//!
//! ```json
//! {
//!   "types": ["Product", "Component", "Brand", "Attribute"],
//!   "expansion": { "enabled": true, "relations": ["compound"] },
//!   "bootstrap": { "k": 5, "max_iterations": 10, "max_phrase_len": 4 },
//!   "train": { "learning_rate": 0.1, "epochs": 20, "loss": "mae", "batch": 64,
//!              "seed": 0, "tau": 0.5, "prior": 0.01, "priors": {},
//!              "objective": "pu", "full_batch": false }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapConfig;
use crate::corpus::{TypeSet, DEFAULT_TYPES};
use crate::error::{Error, Result};
use crate::expansion::{RelationSet, DEFAULT_RELATIONS};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSection {
    pub enabled: bool,
    pub relations: Vec<String>,
}

impl Default for ExpansionSection {
    fn default() -> Self {
        ExpansionSection {
            enabled: true,
            relations: DEFAULT_RELATIONS.iter().map(|r| r.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub k: usize,
    pub max_iterations: usize,
    pub max_phrase_len: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        BootstrapSection {
            k: d.k,
            max_iterations: d.max_iterations,
            max_phrase_len: d.max_phrase_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub types: Vec<String>,
    pub expansion: ExpansionSection,
    pub bootstrap: BootstrapSection,
    pub train: TrainConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            types: DEFAULT_TYPES.iter().map(|t| t.to_string()).collect(),
            expansion: ExpansionSection::default(),
            bootstrap: BootstrapSection::default(),
            train: TrainConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn type_set(&self) -> Result<TypeSet> {
        TypeSet::new(&self.types)
    }

    pub fn relations(&self) -> RelationSet {
        RelationSet::new(&self.expansion.relations)
    }

    pub fn validate(&self) -> Result<()> {
        let types = self.type_set()?;
        for name in self.train.priors.keys() {
            types.get(name)?;
        }
        self.bootstrap_config().validate()
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            k: self.bootstrap.k,
            max_iterations: self.bootstrap.max_iterations,
            max_phrase_len: self.bootstrap.max_phrase_len,
            relations: self.relations(),
            expand: self.expansion.enabled,
            trainer: self.train.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::Loss;

    #[test]
    fn defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        let b = c.bootstrap_config();
        assert_eq!((b.k, b.max_iterations), (5, 10));
        assert_eq!(b.trainer.prior, 0.01);
        assert_eq!(b.trainer.loss, Loss::Mae);
        assert_eq!(b.trainer.tau, 0.5);
        assert!(b.relations.contains("compound"));
    }

    #[test]
    fn round_trip() {
        let mut c = Config::default();
        c.train.priors.insert("Brand".into(), 0.02);
        c.bootstrap.k = 3;
        assert_eq!(Config::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn partial_sections() {
        let c = Config::from_json(r#"{"train": {"tau": 0.7}, "bootstrap": {"k": 2}}"#).unwrap();
        assert_eq!(c.train.tau, 0.7);
        assert_eq!(c.train.epochs, 20);
        assert_eq!(c.bootstrap.k, 2);
        assert_eq!(c.bootstrap.max_iterations, 10);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_json(r#"{"trian": {}}"#).is_err());
        assert!(Config::from_json(r#"{"train": {"tau": 1.5}}"#).is_err());
        assert!(Config::from_json(r#"{"train": {"priors": {"Gadget": 0.1}}}"#).is_err());
        assert!(Config::from_json(r#"{"types": ["A", "A"]}"#).is_err());
        assert!(Config::from_json(r#"{"bootstrap": {"max_iterations": 0}}"#).is_err());
    }
}
