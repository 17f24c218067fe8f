use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::ThresholdRule;
use crate::forest::ForestParams;
use crate::imputation::ImputerConfig;
use crate::instruments::CesdScoring;
use crate::selection::CvConfig;

/// Where the cohort comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    /// Participant-level instrument answers; scored and labeled by the pipeline.
    Raw { data: PathBuf, codebook: PathBuf },
    /// Already-derived predictors plus a binary outcome column.
    Analysis { data: PathBuf, codebook: PathBuf, outcome: String },
    /// Generated from a [`SyntheticSpec`](super::SyntheticSpec) JSON file.
    /// With `render_raw` the cohort is expanded to instrument answers and
    /// goes through scoring and labeling like real data.
    Synthetic {
        spec: PathBuf,
        #[serde(default)]
        render_raw: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifeSatisfactionScale {
    /// One odds ratio per rung of the 1..10 ladder.
    #[default]
    Raw,
    /// One odds ratio across the full min-max scaled range.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMissing {
    /// Fill test cells from training-set neighbours.
    #[default]
    Impute,
    /// Evaluate on complete test rows only.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputationSettings {
    pub k_grid: Vec<usize>,
    pub mask_fraction: f64,
    pub repeats: usize,
}

impl Default for ImputationSettings {
    fn default() -> Self {
        let d = ImputerConfig::default();
        ImputationSettings { k_grid: d.k_grid, mask_fraction: d.mask_fraction, repeats: d.repeats }
    }
}

impl ImputationSettings {
    pub fn with_seed(&self, seed: u64) -> ImputerConfig {
        ImputerConfig { k_grid: self.k_grid.clone(), mask_fraction: self.mask_fraction, repeats: self.repeats, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestSettings {
    fn default() -> Self {
        let d = ForestParams::default();
        ForestSettings { n_trees: d.n_trees, mtry: d.mtry, min_leaf: d.min_leaf, max_depth: d.max_depth }
    }
}

impl ForestSettings {
    pub fn with_seed(&self, seed: u64) -> ForestParams {
        ForestParams { n_trees: self.n_trees, mtry: self.mtry, min_leaf: self.min_leaf, max_depth: self.max_depth, seed }
    }
}

/// Every knob of a run. Relative paths are resolved against the directory
/// of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    #[serde(default)]
    pub hgs_norms: Option<PathBuf>,
    #[serde(default)]
    pub prospective_rubric: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub imputer: ImputationSettings,
    #[serde(default)]
    pub forest: ForestSettings,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default = "default_alpha")]
    pub screening_alpha: f64,
    #[serde(default = "default_alpha")]
    pub significance_alpha: f64,
    #[serde(default = "default_threshold_rule")]
    pub threshold_rule: ThresholdRule,
    #[serde(default)]
    pub cesd8_scoring: CesdScoring,
    #[serde(default = "default_iadl_threshold")]
    pub iadl_threshold: usize,
    #[serde(default)]
    pub life_satisfaction_scale: LifeSatisfactionScale,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    #[serde(default)]
    pub test_missing: TestMissing,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_alpha() -> f64 {
    0.05
}
fn default_threshold_rule() -> ThresholdRule {
    ThresholdRule::YoudenJ
}
fn default_iadl_threshold() -> usize {
    4
}
fn default_n_boot() -> usize {
    2000
}

impl RunConfig {
    /// A config with defaults for everything but the input.
    pub fn new(input: InputSource) -> Self {
        serde_json::from_value(serde_json::json!({ "input": input })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.input {
            InputSource::Raw { data, codebook } | InputSource::Analysis { data, codebook, .. } => {
                fix(data);
                fix(codebook);
            }
            InputSource::Synthetic { spec, .. } => fix(spec),
        }
        if let Some(p) = &mut self.hgs_norms {
            fix(p);
        }
        if let Some(p) = &mut self.prospective_rubric {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, what: &str| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} = {v} must lie in (0, 1)")))
            }
        };
        unit(self.test_fraction, "test_fraction")?;
        unit(self.screening_alpha, "screening_alpha")?;
        unit(self.significance_alpha, "significance_alpha")?;
        self.imputer.with_seed(0).validate()?;
        if self.forest.n_trees == 0 || self.forest.min_leaf == 0 {
            return Err(Error::Config("forest needs n_trees >= 1 and min_leaf >= 1".into()));
        }
        if self.cv.folds < 2 || self.cv.repeats == 0 {
            return Err(Error::Config("cv needs folds >= 2 and repeats >= 1".into()));
        }
        if !(1..=4).contains(&self.iadl_threshold) {
            return Err(Error::Config(format!("iadl_threshold {} outside 1..=4", self.iadl_threshold)));
        }
        if self.n_boot < 100 {
            return Err(Error::Config(format!("n_boot {} < 100", self.n_boot)));
        }
        let needs_norms = match self.input {
            InputSource::Raw { .. } => true,
            InputSource::Synthetic { render_raw, .. } => render_raw,
            InputSource::Analysis { .. } => false,
        };
        if needs_norms && self.hgs_norms.is_none() {
            return Err(Error::Config("raw-level input needs `hgs_norms`".into()));
        }
        Ok(())
    }

    /// SHA-256 over the config (output location excluded) followed by every
    /// input file's bytes, in a fixed order.
    pub fn fingerprint(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.canonical())?);
        for path in self.input_files() {
            let bytes = std::fs::read(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(hex::encode(h.finalize()))
    }

    /// The config as hashed: no output location, no file paths.
    pub fn canonical(&self) -> serde_json::Value {
        let mut canonical = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = canonical.as_object_mut() {
            obj.remove("output_dir");
            strip_paths(obj);
        }
        canonical
    }

    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files = match &self.input {
            InputSource::Raw { data, codebook } | InputSource::Analysis { data, codebook, .. } => {
                vec![data.clone(), codebook.clone()]
            }
            InputSource::Synthetic { spec, .. } => vec![spec.clone()],
        };
        files.extend(self.hgs_norms.clone());
        files.extend(self.prospective_rubric.clone());
        files
    }
}

/// Paths only locate inputs whose bytes are hashed separately; dropping
/// them keeps the fingerprint independent of the checkout location.
fn strip_paths(obj: &mut serde_json::Map<String, serde_json::Value>) {
    for key in ["hgs_norms", "prospective_rubric"] {
        if let Some(v) = obj.get_mut(key) {
            if !v.is_null() {
                *v = serde_json::Value::Bool(true);
            }
        }
    }
    if let Some(serde_json::Value::Object(input)) = obj.get_mut("input") {
        for key in ["data", "codebook", "spec"] {
            input.remove(key);
        }
    }
}
