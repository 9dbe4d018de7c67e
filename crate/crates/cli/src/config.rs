//! Experiment configs: schema validation, then typed parsing.

use crate::Failure;
use invbal_core::engine::EngineError;
use invbal_core::generators::{apply_negative_shocks, gen_random_mnl, with_geometric_durations, RandomMnlParams};
use invbal_core::stylized::{gen_stylized, StylizedParams};
use invbal_core::{Instance, PolicyKind};
use serde::Deserialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = include_str!("../../../docs/config.schema.json");

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    RandomMnl {
        #[serde(default)]
        params: RandomMnlParams,
    },
    Stylized {
        params: StylizedParams,
        target: Option<PolicyKind>,
    },
    Instance {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Variants {
    pub negative_shocks: bool,
    pub flip_prob: Option<f64>,
    pub stochastic_durations: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub stats: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub variants: Variants,
    pub policies: Vec<PolicyKind>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Outputs,
}

fn one() -> usize {
    1
}

pub const DEFAULT_FLIP_PROB: f64 = 0.2;

/// Reads and validates a config; relative instance paths resolve against the
/// config's directory.
pub fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::user(format!("{}: invalid JSON: {e}", path.display())))?;
    validate(&value)?;
    let mut cfg: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    if let Scenario::Instance { path: p } = &mut cfg.scenario {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

pub fn validate(value: &Value) -> Result<(), Failure> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| format!("  at '{}': {e}", e.instance_path()))
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::user(format!(
            "config does not match schema:\n{}",
            errors.join("\n")
        )))
    }
}

pub type Generator = Box<dyn Fn(u64) -> Result<Instance, EngineError> + Sync>;

/// Builds the replication-k instance generator for a config.
pub fn generator(cfg: &ExperimentConfig) -> Result<Generator, Failure> {
    let flip = cfg.variants.flip_prob.unwrap_or(DEFAULT_FLIP_PROB);
    let negative = cfg.variants.negative_shocks;
    let geometric = cfg.variants.stochastic_durations;
    let finish = move |inst: Instance, seed: u64| {
        let inst = if negative {
            apply_negative_shocks(&inst, flip, seed)
        } else {
            inst
        };
        if geometric {
            let mean = (inst.horizon as f64 / 3.0).max(1.0);
            with_geometric_durations(&inst, mean)
        } else {
            inst
        }
    };
    match &cfg.scenario {
        Scenario::RandomMnl { params } => {
            params.validate().map_err(Failure::user)?;
            let params = params.clone();
            Ok(Box::new(move |seed| {
                let p = RandomMnlParams { seed, ..params.clone() };
                Ok(finish(gen_random_mnl(&p), seed))
            }))
        }
        Scenario::Stylized { params, target } => {
            let target = target.clone().unwrap_or_else(|| params.default_target());
            let built = gen_stylized(params, &target).map_err(|e| Failure::user(e.to_string()))?;
            Ok(Box::new(move |seed| Ok(finish(built.instance.clone(), seed))))
        }
        Scenario::Instance { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
            let inst = Instance::from_json(&text).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
            Ok(Box::new(move |seed| Ok(finish(inst.clone(), seed))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn minimal_config_validates() {
        let v = json!({
            "scenario": {"kind": "random-mnl", "params": {"horizon": 30}},
            "policies": [{"kind": "greed"}]
        });
        validate(&v).unwrap();
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.replications, 1);
    }

    #[test]
    fn schema_rejects_bad_shapes() {
        for bad in [
            json!({"policies": [{"kind": "greed"}]}),
            json!({"scenario": {"kind": "random-mnl"}, "policies": []}),
            json!({"scenario": {"kind": "random-mnl"}, "policies": [{"kind": "bib"}]}),
            json!({"scenario": {"kind": "stylized"}, "policies": [{"kind": "greed"}]}),
            json!({"scenario": {"kind": "random-mnl"}, "policies": [{"kind": "greed"}], "extra": 1}),
            json!({"scenario": {"kind": "random-mnl"}, "policies": [{"kind": "greed", "penalty": {"kind": "step"}}]}),
        ] {
            assert!(validate(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn schema_and_serde_agree_on_policies() {
        let v = json!({
            "scenario": {"kind": "stylized", "params": {"family": "Gbar", "c": 5, "eps": 0.1}},
            "policies": [
                {"kind": "bib", "gamma": 2, "penalty": {"kind": "exponential"}},
                {"kind": "scib", "penalty": {"kind": "tabulated", "knots": [[0, 0], [1, 1]]}},
                {"kind": "greed"}
            ]
        });
        validate(&v).unwrap();
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.policies.len(), 3);
        assert_eq!(cfg.policies[0], PolicyKind::bib_exp(2));
    }
}
