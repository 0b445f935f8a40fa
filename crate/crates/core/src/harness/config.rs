use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::AgingModel;
use crate::error::{Error, Result};
use crate::precoding::Scheme;
use crate::scenario::NetworkConfig;

pub const DEFAULT_PI_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub aging: AgingSpec,
    pub schemes: Vec<Scheme>,
    pub drops: usize,
    pub realizations_per_drop: usize,
    #[serde(default = "default_pi_samples")]
    pub pi_samples: usize,
    pub master_seed: u64,
    pub output_path: PathBuf,
}

fn default_pi_samples() -> usize {
    DEFAULT_PI_SAMPLES
}

/// `{"r": 0.9}`, `{"r": [[..K..], ..L..]}` or
/// `{"clarke": {"doppler_hz": .., "symbol_time_s": .., "delay_symbols": ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AgingSpec {
    R(RValue),
    Clarke(ClarkeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RValue {
    Uniform(f64),
    PerLink(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClarkeSpec {
    pub doppler_hz: f64,
    pub symbol_time_s: f64,
    pub delay_symbols: f64,
}

fn config_error(path: &str, message: impl ToString) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.to_string(),
    }
}

impl AgingSpec {
    pub fn model(&self, aps: usize, ues: usize) -> Result<AgingModel> {
        let model = match self {
            AgingSpec::R(RValue::Uniform(r)) => AgingModel::uniform(*r, aps, ues),
            AgingSpec::R(RValue::PerLink(rows)) => {
                if rows.len() != aps || rows.iter().any(|row| row.len() != ues) {
                    return Err(config_error("aging.r", format!("expected an {aps} x {ues} matrix")));
                }
                AgingModel::from_matrix(DMatrix::from_fn(aps, ues, |l, k| rows[l][k]))
            }
            AgingSpec::Clarke(c) => AgingModel::clarke(c.doppler_hz, c.symbol_time_s, c.delay_symbols, aps, ues),
        };
        model.map_err(|e| config_error("aging", e))
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(".", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate().map_err(|e| config_error("network", e))?;
        if self.drops < 1 {
            return Err(config_error("drops", "must be at least 1"));
        }
        if self.realizations_per_drop < 2 {
            return Err(config_error("realizations_per_drop", "must be at least 2"));
        }
        if self.pi_samples < 1 {
            return Err(config_error("pi_samples", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(config_error("schemes", "must name at least one scheme"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(config_error(&format!("schemes[{i}]"), format!("duplicate scheme {s}")));
            }
        }
        self.aging.model(self.network.num_aps, self.network.num_ues)?;
        Ok(())
    }

    /// `rates.csv` -> `rates.summary.json`
    pub fn summary_path(&self) -> PathBuf {
        self.output_path.with_extension("summary.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "network": {"L": 4, "N": 2, "K": 6},
        "aging": {"r": 0.9},
        "schemes": ["team_mmse", "centralized"],
        "drops": 2,
        "realizations_per_drop": 10,
        "pi_samples": 50,
        "master_seed": 1,
        "output_path": "out/rates.csv"
    }"#;

    fn err_path(text: &str) -> String {
        match ExperimentConfig::from_json_str(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_reference_config() {
        let c = ExperimentConfig::from_json_str(GOOD).unwrap();
        assert_eq!(c.network.num_ues, 6);
        assert_eq!(c.schemes, vec![Scheme::TeamMmse, Scheme::Centralized]);
        assert_eq!(c.summary_path(), PathBuf::from("out/rates.summary.json"));
        let r = c.aging.model(4, 6).unwrap();
        assert_eq!(r.r(3, 5), 0.9);
    }

    #[test]
    fn default_pi_samples_applies() {
        let c = ExperimentConfig::from_json_str(&GOOD.replace("\"pi_samples\": 50,", "")).unwrap();
        assert_eq!(c.pi_samples, DEFAULT_PI_SAMPLES);
    }

    #[test]
    fn unknown_keys_report_their_path() {
        assert!(err_path(&GOOD.replace("\"drops\"", "\"dropz\"")).contains("dropz"));
        let p = err_path(&GOOD.replace("\"K\": 6", "\"K\": 6, \"antenas\": 3"));
        assert!(p.starts_with("network"), "{p}");
    }

    #[test]
    fn invariants_are_checked() {
        assert_eq!(err_path(&GOOD.replace("\"drops\": 2", "\"drops\": 0")), "drops");
        assert_eq!(
            err_path(&GOOD.replace("\"realizations_per_drop\": 10", "\"realizations_per_drop\": 1")),
            "realizations_per_drop"
        );
        assert_eq!(err_path(&GOOD.replace("[\"team_mmse\", \"centralized\"]", "[]")), "schemes");
        assert_eq!(err_path(&GOOD.replace("\"centralized\"]", "\"team_mmse\"]")), "schemes[1]");
        assert!(err_path(&GOOD.replace("\"centralized\"", "\"zf\"")).starts_with("schemes"));
        assert_eq!(err_path(&GOOD.replace("0.9", "1.5")), "aging");
        assert_eq!(err_path(&GOOD.replace("\"L\": 4", "\"L\": 3")), "network");
    }

    #[test]
    fn aging_forms() {
        let per_link = GOOD.replace(
            "{\"r\": 0.9}",
            "{\"r\": [[1,1,1,1,1,1],[0,0,0,0,0,0],[0.5,0.5,0.5,0.5,0.5,0.5],[1,0,1,0,1,0]]}",
        );
        let c = ExperimentConfig::from_json_str(&per_link).unwrap();
        assert_eq!(c.aging.model(4, 6).unwrap().r(3, 1), 0.0);
        assert_eq!(err_path(&per_link.replace("[1,0,1,0,1,0]", "[1,0]")), "aging.r");

        let clarke = GOOD.replace(
            "{\"r\": 0.9}",
            "{\"clarke\": {\"doppler_hz\": 10, \"symbol_time_s\": 0.001, \"delay_symbols\": 10}}",
        );
        let c = ExperimentConfig::from_json_str(&clarke).unwrap();
        assert!((c.aging.model(4, 6).unwrap().r(0, 0) - 0.90368).abs() < 1e-4);
        assert!(err_path(&clarke.replace("delay_symbols", "delay")).starts_with("aging"));
    }
}
