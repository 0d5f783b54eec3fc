use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::{NetSizes, SimConfig};
use crate::backend::{BackendConfig, ReferenceConfig};
use crate::beliefnet::TrainConfig;
use crate::data::io::read_json;
use crate::data::DEFAULT_FEATURE_DIM;
use crate::decision::{BlenderConfig, EmConfig};
use crate::error::{Error, Result};

/// The whole configuration document. Every section is optional and falls back
/// to its defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub data: DataConfig,
    pub backend: BackendConfig,
    pub reference: ReferenceConfig,
    pub population: PopulationConfig,
    pub net: NetSizes,
    pub train: TrainConfig,
    pub blender: BlenderConfig,
    pub decision: DecisionConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SimConfig,
}

/// Input files; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub problems: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    /// JSON-lines of `{participant_id, values}` for the human participants.
    pub profiles: Option<PathBuf>,
    pub profile_spec: Option<PathBuf>,
    pub feature_dim: usize,
    /// Problems held out from training and used for evaluation. When absent,
    /// every problem is used for both.
    pub test_problems: Option<Vec<String>>,
    /// Decisions to evaluate instead of the simulated ones.
    pub predicted: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            problems: None,
            responses: None,
            profiles: None,
            profile_spec: None,
            feature_dim: DEFAULT_FEATURE_DIM,
            test_problems: None,
            predicted: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationSource {
    /// Fresh profiles drawn from the profile spec.
    Sample,
    /// One digital twin per human participant, sharing the human's profile.
    Twins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub source: PopulationSource,
    /// Crowd size when sampling.
    pub n_virtual: usize,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            source: PopulationSource::Sample,
            n_virtual: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mean,
    Median,
    Majority,
    DawidSkene,
    Glad,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Median => "median",
            Method::Majority => "majority",
            Method::DawidSkene => "dawid_skene",
            Method::Glad => "glad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionConfig {
    pub methods: Vec<Method>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            methods: vec![
                Method::Mean,
                Method::Median,
                Method::Majority,
                Method::DawidSkene,
                Method::Glad,
            ],
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

impl DecisionConfig {
    pub fn em(&self) -> EmConfig {
        EmConfig {
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// LLM noise level `eta(t)` used by the interval calculators.
    pub eta: f64,
    /// Per-participant human noise variance.
    pub human_noise_var: f64,
    pub alpha: f64,
    /// Reference-quality bound; estimated from training problems when absent.
    pub kappa: Option<f64>,
    pub eps0: f64,
    pub resolution_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            eta: 0.0,
            human_noise_var: 0.0,
            alpha: 0.05,
            kappa: None,
            eps0: 0.0,
            resolution_threshold: 0.5,
        }
    }
}

impl Config {
    /// Read a config document and resolve its data paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let mut cfg: Config = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data.problems,
            &mut cfg.data.responses,
            &mut cfg.data.profiles,
            &mut cfg.data.profile_spec,
            &mut cfg.data.predicted,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.feature_dim == 0 {
            return Err(Error::InvalidArgument(
                "data.feature_dim must be > 0".into(),
            ));
        }
        if self.population.n_virtual == 0 {
            return Err(Error::InvalidArgument(
                "population.n_virtual must be >= 1".into(),
            ));
        }
        if self.decision.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "decision.methods must be nonempty".into(),
            ));
        }
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(Error::InvalidArgument(
                "analysis.alpha must lie in (0,1)".into(),
            ));
        }
        if !(a.eta >= 0.0
            && a.human_noise_var >= 0.0
            && a.eps0 >= 0.0
            && a.kappa.is_none_or(|k| k >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "analysis variances, eps0 and kappa must be >= 0".into(),
            ));
        }
        self.train.validate()?;
        self.blender.validate()
    }

    /// Snapshot recorded in reports and checkpoints.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.train.learning_rate, 0.001);
        assert_eq!(c.blender.j, 10);
        assert_eq!(c.decision.max_iter, 100);
        assert_eq!(c.sweep.repetitions, 10);
        assert_eq!(c.sweep.test_virtual_workers, 20);
    }

    #[test]
    fn round_trips_and_rejects_unknown_keys() {
        let c = Config::default();
        let back: Config = serde_json::from_value(c.snapshot()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Config>(r#"{"trian": {}}"#).is_err());
        assert!(serde_json::from_str::<Config>(r#"{"train": {"epoch": 3}}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"data": {"problems": "p.jsonl", "responses": "/abs/r.csv"}}"#,
        )
        .unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.data.problems.unwrap(), dir.path().join("p.jsonl"));
        assert_eq!(c.data.responses.unwrap(), PathBuf::from("/abs/r.csv"));
    }
}
