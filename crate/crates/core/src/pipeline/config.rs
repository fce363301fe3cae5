use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, BaselineMethod};
use crate::classifiers::{ClassifierSpec, ForestConfig, LogRegConfig};
use crate::flow_data::{default_drop_columns, SyntheticSpec};
use crate::gan::GanConfig;
use crate::rng::derive_seed;
use crate::sensitivity::PerturbConfig;
use crate::{Error, Result};

/// Selector name of the GAN sensitivity ranking.
pub const GANFS: &str = "ganfs";

/// Where rows come from. Non-empty `paths` take precedence over `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub paths: Vec<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub drop_columns: Vec<String>,
    /// Per raw-label row cap applied before splitting.
    pub cap_per_class: Option<usize>,
    pub train_fraction: f64,
    pub stratified: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            paths: Vec::new(),
            synthetic: SyntheticSpec::default(),
            drop_columns: default_drop_columns(),
            cap_per_class: None,
            train_fraction: 0.8,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfigs {
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
}

impl ClassifierConfigs {
    pub fn specs(&self) -> [ClassifierSpec; 2] {
        [
            ClassifierSpec::Logreg(self.logreg),
            ClassifierSpec::Forest(self.forest),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub selectors: Vec<String>,
    /// Feature counts to evaluate; `None` means 5, 10, 20, 40 (those within
    /// `d`) plus `d` itself.
    pub k_sweep: Option<Vec<usize>>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            selectors: [GANFS, "mi", "chi2", "anova"].map(String::from).to_vec(),
            k_sweep: None,
        }
    }
}

impl EvaluateConfig {
    pub fn k_values(&self, d: usize) -> Vec<usize> {
        let mut ks = match &self.k_sweep {
            Some(ks) => ks.clone(),
            None => [5, 10, 20, 40]
                .into_iter()
                .filter(|&k| k <= d)
                .chain([d])
                .collect(),
        };
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Full experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
    pub out: PathBuf,
    /// Print a training progress line every this many epochs (0 disables).
    pub progress_every: usize,
    pub data: DataConfig,
    pub gan: GanConfig,
    pub perturb: PerturbConfig,
    pub baseline: BaselineConfig,
    pub classifiers: ClassifierConfigs,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("ganfs-out"),
            progress_every: 50,
            data: DataConfig::default(),
            gan: GanConfig::default(),
            perturb: PerturbConfig::default(),
            baseline: BaselineConfig::default(),
            classifiers: ClassifierConfigs::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

/// Stage names that receive a derived seed.
pub const SEEDED_STAGES: [&str; 7] = [
    "synthetic",
    "cap",
    "split",
    "gan",
    "perturb",
    "baseline",
    "classifier",
];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn stage_seeds(&self) -> BTreeMap<String, u64> {
        SEEDED_STAGES
            .iter()
            .map(|s| (s.to_string(), derive_seed(self.seed, s)))
            .collect()
    }

    /// Copy with every component seed replaced by its derived stage seed.
    pub fn resolved(&self) -> Self {
        let seeds = self.stage_seeds();
        let mut cfg = self.clone();
        cfg.data.synthetic.seed = seeds["synthetic"];
        cfg.gan.seed = seeds["gan"];
        cfg.perturb.seed = seeds["perturb"];
        cfg.baseline.forest.seed = seeds["baseline"];
        cfg.classifiers.forest.seed = seeds["classifier"];
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.data.paths {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        if self.data.paths.is_empty() {
            self.data.synthetic.validate()?;
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::Config(
                "data.train_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.data.cap_per_class == Some(0) {
            return Err(Error::Config("data.cap_per_class must be positive".into()));
        }
        self.gan.validate()?;
        self.perturb.validate()?;
        self.baseline.binning.validate()?;
        if self.classifiers.forest.n_trees == 0 || self.baseline.forest.n_trees == 0 {
            return Err(Error::Config("forests need at least one tree".into()));
        }
        if self.evaluate.selectors.is_empty() {
            return Err(Error::Config("evaluate.selectors is empty".into()));
        }
        for s in &self.evaluate.selectors {
            if s != GANFS {
                s.parse::<BaselineMethod>()?;
            }
        }
        if let Some(ks) = &self.evaluate.k_sweep {
            if ks.is_empty() || ks.contains(&0) {
                return Err(Error::Config(
                    "evaluate.k_sweep needs positive entries".into(),
                ));
            }
        }
        Ok(())
    }
}
