//! TOML run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gsnna_core::search::{SearchKind, TrainingProtocol};
use gsnna_core::space::Family;
use gsnna_core::{Activation, SplitSpec, Task};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DataSource {
    Eggbox,
    Bars,
    Csv,
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "builtin:eggbox" => Ok(Self::Eggbox),
            "builtin:bars" => Ok(Self::Bars),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown dataset source '{other}' (expected builtin:eggbox, builtin:bars or csv)")),
        }
    }
}

impl TryFrom<String> for DataSource {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<DataSource> for String {
    fn from(s: DataSource) -> String {
        s.to_string()
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eggbox => "builtin:eggbox",
            Self::Bars => "builtin:bars",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DataSource,
    /// CSV file; required for `csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Target column names of a CSV file.
    pub targets: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    /// Sample count of a generated dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Generator seed.
    pub seed: u64,
    /// Eggbox points on a lattice instead of uniformly at random.
    pub grid: bool,
    /// Image side of the bars dataset.
    pub side: usize,
    /// Pixel noise standard deviation of the bars dataset.
    pub noise: f64,
    /// `[height, width, channels]` of image rows in a CSV file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<[usize; 3]>,
    pub standardize_features: bool,
    pub standardize_targets: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Eggbox,
            path: None,
            targets: Vec::new(),
            task: None,
            count: None,
            seed: 0,
            grid: false,
            side: 8,
            noise: 0.3,
            image_shape: None,
            standardize_features: true,
            standardize_targets: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub kind: SearchKind,
    pub family: Family,
    pub evals_per_iteration: usize,
    pub depth_cap: usize,
    pub score_threshold: f64,
    pub master_seed: u64,
    /// Defaults to the number of available cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_concurrency: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_units: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activations: Option<Vec<Activation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_range: Option<[usize; 2]>,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            kind: SearchKind::Gsnna,
            family: Family::Mlp,
            evals_per_iteration: 25,
            depth_cap: 5,
            score_threshold: 0.99,
            master_seed: 0,
            max_concurrency: None,
            max_units: None,
            activations: None,
            batch_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs/latest") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub split: SplitSpec,
    pub search: SearchSection,
    pub training: TrainingProtocol,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), String> {
        let d = &self.dataset;
        match d.source {
            DataSource::Csv => {
                let path = d.path.as_ref().ok_or("csv source needs dataset.path")?;
                if !path.is_file() {
                    return Err(format!("dataset file {} does not exist", path.display()));
                }
                if d.targets.is_empty() {
                    return Err("csv source needs at least one dataset.targets column".into());
                }
                if d.task.is_none() {
                    return Err("csv source needs dataset.task".into());
                }
            }
            DataSource::Eggbox | DataSource::Bars => {
                if d.count == Some(0) {
                    return Err("dataset.count must be positive".into());
                }
            }
        }
        if d.source == DataSource::Bars && d.side < 2 {
            return Err("dataset.side must be at least 2".into());
        }
        let sp = &self.split;
        if !(sp.test_fraction > 0.0 && sp.test_fraction < 1.0 && sp.val_fraction > 0.0 && sp.val_fraction < 1.0) {
            return Err("split fractions must lie in (0, 1)".into());
        }
        let s = &self.search;
        if s.evals_per_iteration == 0 {
            return Err("search.evals_per_iteration must be at least 1".into());
        }
        if s.depth_cap == 0 {
            return Err("search.depth_cap must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&s.score_threshold) {
            return Err(format!("search.score_threshold {} outside [0, 1]", s.score_threshold));
        }
        if s.max_concurrency == Some(0) {
            return Err("search.max_concurrency must be at least 1".into());
        }
        if s.family == Family::Cnn && d.source == DataSource::Eggbox {
            return Err("the convolutional family needs image data".into());
        }
        if s.family == Family::Cnn && d.source == DataSource::Csv && d.image_shape.is_none() {
            return Err("the convolutional family on csv data needs dataset.image_shape".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.search.evals_per_iteration, 25);
        assert_eq!(cfg.dataset.source, DataSource::Eggbox);
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
[dataset]
source = "builtin:bars"
count = 500
seed = 3
noise = 0.25

[split]
test_fraction = 0.2
val_fraction = 0.1
stratified = true
seed = 9

[search]
kind = "random"
family = "cnn"
evals_per_iteration = 4
depth_cap = 2
score_threshold = 0.95
master_seed = 17
max_concurrency = 2
activations = ["relu", "tanh"]
batch_range = [10, 40]

[training]
max_epochs = 30

[output]
dir = "out/bars"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.search.activations.as_deref(), Some(&[Activation::Relu, Activation::Tanh][..]));
        assert_eq!(cfg.training.max_epochs, Some(30));
        assert_eq!(cfg.training.patience, 10);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[search]\nbogus = 1").is_err());
        assert!(RunConfig::from_toml("[dataset]\nsource = \"builtin:cifar\"").is_err());
        let mut cfg = RunConfig::default();
        cfg.search.score_threshold = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.dataset.source = DataSource::Csv;
        cfg.dataset.path = Some("/definitely/not/here.csv".into());
        cfg.dataset.targets = vec!["y".into()];
        cfg.dataset.task = Some(Task::Regression);
        assert!(cfg.validate().unwrap_err().contains("does not exist"));
        let mut cfg = RunConfig::default();
        cfg.search.family = Family::Cnn;
        assert!(cfg.validate().is_err());
    }
}
