//! Experiment configuration document.

use std::path::Path;

use serde::Deserialize;

use crate::channel::{GainLadder, SystemSpec, UserSpec};
use crate::entropy_power::{EntropyPowerModel, NoiseModel, PowerLawConstraint};
use crate::error::{Error, Result};
use crate::optimize::{PowerGrid, SpecTemplate};
use crate::rate::{EvalSettings, MethodChoice};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub ladder: LadderConfig,
    pub users: UsersConfig,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub experiment: Option<Experiment>,
}

fn default_eta() -> f64 {
    0.05
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub p: f64,
    pub noise: NoiseConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian { sigma2: f64 },
    Entropy { entropy: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub gains: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum UsersConfig {
    List(Vec<UserConfig>),
    Homogeneous(HomogeneousUsers),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub pi: Vec<f64>,
    pub g_bar: f64,
    pub g_max: f64,
    #[serde(default)]
    pub g_min: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousUsers {
    pub count: usize,
    pub pi: Vec<f64>,
    pub g_bar: f64,
    pub g_max: f64,
    #[serde(default)]
    pub g_min: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_points")]
    pub m: usize,
}

fn default_grid_points() -> usize {
    PowerGrid::DEFAULT_POINTS
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            m: PowerGrid::DEFAULT_POINTS,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub method: MethodChoice,
    pub samples: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub enumeration_cap: usize,
    pub buckets: usize,
    pub exact_max_users: Option<usize>,
    pub n0: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let d = EvalSettings::default();
        Self {
            method: d.method,
            samples: d.samples,
            seed: d.seed,
            tolerance: d.tolerance,
            enumeration_cap: d.enumeration_cap,
            buckets: d.buckets,
            exact_max_users: d.exact_max_users,
            n0: d.n0,
        }
    }
}

/// Default parameters for the subcommands; command-line flags win.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Policy,
    Evaluate,
    BestResponse {
        #[serde(default)]
        user: usize,
    },
    FindNstar {
        n_min: usize,
        n_max: usize,
    },
    Certificate,
    Bounds {
        #[serde(default = "default_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "default_orders")]
        orders: Vec<u32>,
    },
}

pub(crate) fn default_sizes() -> Vec<usize> {
    (4..=10).map(|e| 1usize << e).collect()
}

pub(crate) fn default_orders() -> Vec<u32> {
    vec![1, 2]
}

/// Validated objects built from a configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub spec: SystemSpec,
    pub template: SpecTemplate,
    pub grid: PowerGrid,
    pub settings: EvalSettings,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation("config", e.to_string()))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let constraint = PowerLawConstraint::new(self.model.p).map_err(|e| at("model.p", e))?;
        let noise = match self.model.noise {
            NoiseConfig::Gaussian { sigma2 } => NoiseModel::gaussian(sigma2),
            NoiseConfig::Entropy { entropy } => NoiseModel::from_entropy(entropy),
        }
        .map_err(|e| at("model.noise", e))?;
        let model = EntropyPowerModel::power_law(constraint, noise);
        let ladder = GainLadder::new(self.ladder.gains.clone()).map_err(|e| at("ladder.gains", e))?;
        let build = |path: String, pi: &[f64], g_bar: f64, g_max: f64, g_min: Option<f64>| {
            UserSpec::with_min_budget(pi.to_vec(), g_bar, g_max, g_min.unwrap_or(g_bar)).map_err(|e| nest(&path, e))
        };
        let (users, template_users) = match &self.users {
            UsersConfig::List(list) => {
                let users = list
                    .iter()
                    .enumerate()
                    .map(|(i, u)| build(format!("users[{i}]"), &u.pi, u.g_bar, u.g_max, u.g_min))
                    .collect::<Result<Vec<_>>>()?;
                (users.clone(), users)
            }
            UsersConfig::Homogeneous(h) => {
                let user = build("users".into(), &h.pi, h.g_bar, h.g_max, h.g_min)?;
                (vec![user.clone(); h.count], vec![user])
            }
        };
        if users.is_empty() {
            return Err(Error::validation("users", "at least one user is required"));
        }
        let spec = SystemSpec::new(ladder.clone(), users, model.clone(), self.eta)?;
        let template = SpecTemplate::cycle(ladder, template_users, model, self.eta)?;
        let grid = PowerGrid::uniform(self.grid.m, spec.max_g_max())?;
        let e = &self.eval;
        let settings = EvalSettings {
            method: e.method,
            samples: e.samples,
            seed: e.seed,
            enumeration_cap: e.enumeration_cap,
            buckets: e.buckets,
            exact_max_users: e.exact_max_users,
            n0: e.n0,
            tolerance: e.tolerance,
        };
        Ok(Resolved {
            spec,
            template,
            grid,
            settings,
        })
    }
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Validation { message, .. } | Error::Domain(message) => Error::validation(path, message),
        other => other,
    }
}

fn nest(prefix: &str, e: Error) -> Error {
    match e {
        Error::Validation { path, message } => Error::validation(format!("{prefix}.{path}"), message),
        Error::Domain(message) => Error::validation(prefix, message),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{
        "model": {"p": 1.0, "noise": {"kind": "gaussian", "sigma2": 1.0}},
        "ladder": {"gains": [0.0, 0.5, 1.0]},
        "users": {"count": 4, "pi": [0.2, 0.3, 0.5], "g_bar": 0.6, "g_max": 1.0},
        "eta": 0.5
    }"#;

    #[test]
    fn parses_homogeneous_fixture() {
        let c = ExperimentConfig::from_json(FIXTURE).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.spec.n_users(), 4);
        assert_eq!(r.grid.len(), 101);
        assert_eq!(r.settings.method, MethodChoice::Auto);
        assert_eq!(r.template.users.len(), 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = FIXTURE.replace("\"eta\": 0.5", "\"eta\": 0.5, \"colour\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = FIXTURE.replace("\"sigma2\": 1.0", "\"sigma2\": 1.0, \"mean\": 0");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = FIXTURE.replace("\"g_max\": 1.0}", "\"g_max\": 1.0, \"x\": 2}");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn user_errors_carry_field_paths() {
        let list = r#"{
            "model": {"p": 1.0, "noise": {"kind": "entropy", "entropy": 1.4}},
            "ladder": {"gains": [0.0, 1.0]},
            "users": [{"pi": [0.5, 0.5], "g_bar": 0.5, "g_max": 1.0},
                      {"pi": [0.5, 0.4], "g_bar": 0.5, "g_max": 1.0}]
        }"#;
        let err = ExperimentConfig::from_json(list).unwrap().resolve().unwrap_err();
        match err {
            Error::Validation { path, .. } => assert_eq!(path, "users[1].pi"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn experiment_section() {
        let with = FIXTURE.replace(
            "\"eta\": 0.5",
            "\"eta\": 0.5, \"experiment\": {\"kind\": \"find_nstar\", \"parameters\": {\"n_min\": 2, \"n_max\": 9}}",
        );
        let c = ExperimentConfig::from_json(&with).unwrap();
        assert!(matches!(c.experiment, Some(Experiment::FindNstar { n_min: 2, n_max: 9 })));
    }
}
