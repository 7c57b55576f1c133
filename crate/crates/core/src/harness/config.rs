//! Experiment configuration, read from TOML.
//!
//! Every section is optional; missing keys fall back to the study defaults.
//! A complete file with the defaults:
//!
//! ```toml
//! datasets = ["A", "B"]
//! algorithms = ["NNE", "CL", "EDL", "MCD", "GP", "DPMM"]
//! train_sizes = [250, 500, 1000, 2000, 3000, 5000, 10000]
//! seed = 1
//! output_dir = "results"
//! nonparametric_cap_c = 2000
//! spatial_lattice = 41
//! spatial_extent = 60.0
//! profile_bins = 30
//! profile_max_radius = 60.0
//!
//! [splits]
//! train = 10000
//! validation = 5000
//! test = 10000
//!
//! [neural]
//! size = "medium"
//! learning_rate = 0.001
//! weight_decay = 0.01
//! max_epochs = 200
//! patience = 20
//!
//! [ensemble]
//! members = 20
//! beta = 0.1
//!
//! [edl]
//! lambda0 = 0.002
//! candidates = 20
//!
//! [mcd]
//! dropout = 0.3
//! candidates = 20
//! passes = 500
//!
//! [gp]
//! optimize = true
//! restarts = 3
//! max_opt_points = 2000
//! max_evals_per_start = 120
//! mc_samples = 1000
//!
//! [dpmm]
//! truncation = 64
//! concentration = 1.0
//! kappa0 = 0.01
//! a0 = 1.0
//! chains = 4
//! burn_in = 900
//! samples = 300
//!
//! [grid]
//! train_sizes = [250, 1000, 10000]
//! sizes = ["small", "medium", "large"]
//! learning_rates = [0.01, 0.001, 0.0001]
//! weight_decays = [0.1, 0.01, 0.001]
//! betas = [0.1, 0.2, 0.5]
//! lambda0s = [0.0002, 0.002, 0.02]
//! dropouts = [0.1, 0.3, 0.5]
//! members = 20
//! candidates = 20
//! poor_fit_accuracy = 0.7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{Algorithm, NeuralConfig};
use crate::dpmm::{DpmmConfig, McmcBudget};
use crate::error::{Error, Result};
use crate::gp::{GpConfig, RbfKernel};
use crate::nn::NetworkSize;
use crate::rng::fnv1a64;
use crate::synthdata::{DatasetId, SplitSizes, STUDY_TRAIN_SIZES};

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "UQBENCH_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    pub members: usize,
    pub beta: f64,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self { members: 20, beta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdlSettings {
    pub lambda0: f64,
    pub candidates: usize,
}

impl Default for EdlSettings {
    fn default() -> Self {
        Self {
            lambda0: 0.002,
            candidates: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McdSettings {
    pub dropout: f64,
    pub candidates: usize,
    pub passes: usize,
}

impl Default for McdSettings {
    fn default() -> Self {
        Self {
            dropout: 0.3,
            candidates: 20,
            passes: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSettings {
    pub optimize: bool,
    pub restarts: usize,
    pub max_opt_points: usize,
    pub max_evals_per_start: usize,
    pub mc_samples: usize,
    pub initial_length_scale: f64,
    pub initial_output_std: f64,
}

impl Default for GpSettings {
    fn default() -> Self {
        let g = GpConfig::default();
        Self {
            optimize: g.optimize,
            restarts: g.restarts,
            max_opt_points: g.max_opt_points,
            max_evals_per_start: g.max_evals_per_start,
            mc_samples: g.mc_samples,
            initial_length_scale: g.initial.length_scale,
            initial_output_std: g.initial.output_std,
        }
    }
}

impl GpSettings {
    pub fn to_config(&self) -> GpConfig {
        GpConfig {
            optimize: self.optimize,
            initial: RbfKernel {
                length_scale: self.initial_length_scale,
                output_std: self.initial_output_std,
            },
            restarts: self.restarts,
            max_opt_points: self.max_opt_points,
            max_evals_per_start: self.max_evals_per_start,
            mc_samples: self.mc_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpmmSettings {
    pub truncation: usize,
    pub concentration: f64,
    pub kappa0: f64,
    pub a0: f64,
    pub chains: usize,
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for DpmmSettings {
    fn default() -> Self {
        let d = DpmmConfig::default();
        Self {
            truncation: d.truncation,
            concentration: d.concentration,
            kappa0: d.kappa0,
            a0: d.a0,
            chains: d.budget.chains,
            burn_in: d.budget.burn_in,
            samples: d.budget.samples,
        }
    }
}

impl DpmmSettings {
    pub fn to_config(&self) -> DpmmConfig {
        DpmmConfig {
            truncation: self.truncation,
            concentration: self.concentration,
            kappa0: self.kappa0,
            a0: self.a0,
            budget: McmcBudget {
                chains: self.chains,
                burn_in: self.burn_in,
                samples: self.samples,
            },
        }
    }

    fn set_budget(&mut self, b: McmcBudget) {
        self.chains = b.chains;
        self.burn_in = b.burn_in;
        self.samples = b.samples;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub train_sizes: Vec<usize>,
    pub sizes: Vec<NetworkSize>,
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
    pub betas: Vec<f64>,
    pub lambda0s: Vec<f64>,
    pub dropouts: Vec<f64>,
    pub members: usize,
    pub candidates: usize,
    pub poor_fit_accuracy: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            train_sizes: vec![250, 1000, 10000],
            sizes: NetworkSize::ALL.to_vec(),
            learning_rates: vec![0.01, 0.001, 0.0001],
            weight_decays: vec![0.1, 0.01, 0.001],
            betas: vec![0.1, 0.2, 0.5],
            lambda0s: vec![0.0002, 0.002, 0.02],
            dropouts: vec![0.1, 0.3, 0.5],
            members: 20,
            candidates: 20,
            poor_fit_accuracy: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitSettings {
    fn default() -> Self {
        let s = SplitSizes::default();
        Self {
            train: s.train,
            validation: s.validation,
            test: s.test,
        }
    }
}

impl SplitSettings {
    pub fn sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.train,
            validation: self.validation,
            test: self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetId>,
    pub algorithms: Vec<Algorithm>,
    pub train_sizes: Vec<usize>,
    /// Root of every random stream.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Training-set cap for GP and DPMM on dataset C.
    pub nonparametric_cap_c: usize,
    /// Points per side of the spatial lattice; 0 disables spatial output.
    pub spatial_lattice: usize,
    pub spatial_extent: f64,
    pub profile_bins: usize,
    pub profile_max_radius: f64,
    pub splits: SplitSettings,
    pub neural: NeuralConfig,
    pub ensemble: EnsembleSettings,
    pub edl: EdlSettings,
    pub mcd: McdSettings,
    pub gp: GpSettings,
    pub dpmm: DpmmSettings,
    pub grid: GridSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: vec![DatasetId::A, DatasetId::B],
            algorithms: Algorithm::ALL.to_vec(),
            train_sizes: STUDY_TRAIN_SIZES.to_vec(),
            seed: 1,
            output_dir: PathBuf::from("results"),
            nonparametric_cap_c: 2000,
            spatial_lattice: 41,
            spatial_extent: 60.0,
            profile_bins: 30,
            profile_max_radius: 60.0,
            splits: SplitSettings::default(),
            neural: NeuralConfig::default(),
            ensemble: EnsembleSettings::default(),
            edl: EdlSettings::default(),
            mcd: McdSettings::default(),
            gp: GpSettings::default(),
            dpmm: DpmmSettings::default(),
            grid: GridSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Malformed(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Malformed(format!("config: {e}")))
    }

    /// Desk-scale budget: sizes 250/1000/5000, 10 ensemble members and
    /// candidates, 2 × 150 Gibbs draws after 450 burn-in sweeps, and GP
    /// hyperparameters fitted on at most 1000 points.
    pub fn fast(mut self) -> Self {
        self.train_sizes = vec![250, 1000, 5000];
        self.ensemble.members = 10;
        self.edl.candidates = 10;
        self.mcd.candidates = 10;
        self.gp.max_opt_points = 1000;
        self.dpmm.set_budget(McmcBudget::fast());
        self.grid.members = 10;
        self.grid.candidates = 10;
        self
    }

    /// Output directory after applying the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Malformed(format!("config: {m}")));
        if self.datasets.is_empty() || self.algorithms.is_empty() || self.train_sizes.is_empty() {
            return bad("datasets, algorithms and train_sizes must be non-empty");
        }
        if let Some(&n) = self.train_sizes.iter().find(|&&n| n == 0 || n > self.splits.train) {
            return bad(&format!("train size {n} outside 1..={}", self.splits.train));
        }
        if self.splits.validation == 0 || self.splits.test == 0 {
            return bad("validation and test splits must be non-empty");
        }
        if self.ensemble.members < 2 || !self.ensemble.members.is_multiple_of(2) {
            return bad("ensemble members must be even and at least 2");
        }
        if self.edl.candidates == 0 || self.mcd.candidates == 0 || self.mcd.passes == 0 {
            return bad("candidates and passes must be positive");
        }
        if !(0.0..1.0).contains(&self.mcd.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.gp.mc_samples == 0 {
            return bad("GP mc_samples must be positive");
        }
        self.dpmm.to_config().validate().map_err(|e| Error::Malformed(format!("config: {e}")))?;
        Ok(())
    }

    /// Hyperparameters that determine the outcome of one algorithm.
    pub fn algorithm_hyperparameters(&self, algorithm: Algorithm) -> serde_json::Value {
        use serde_json::json;
        match algorithm {
            Algorithm::Nne => json!({"neural": self.neural, "members": self.ensemble.members}),
            Algorithm::Cl => json!({"neural": self.neural, "members": self.ensemble.members, "beta": self.ensemble.beta}),
            Algorithm::Edl => json!({"neural": self.neural, "lambda0": self.edl.lambda0, "candidates": self.edl.candidates}),
            Algorithm::Mcd => json!({"neural": self.neural, "dropout": self.mcd.dropout,
                "candidates": self.mcd.candidates, "passes": self.mcd.passes}),
            Algorithm::Gp => json!(self.gp.to_config()),
            Algorithm::Dpmm => json!(self.dpmm.to_config()),
        }
    }
}

/// Short stable hash of a JSON value (keys are sorted by serde_json).
pub fn fingerprint(value: &serde_json::Value) -> String {
    format!("{:016x}", fnv1a64(value.to_string().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.ensemble.members, 20);
        assert_eq!(cfg.mcd.passes, 500);
        assert_eq!(cfg.gp.mc_samples, 1000);
    }

    #[test]
    fn documented_example_parses_to_defaults() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = ExperimentConfig::from_toml_str(&example).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn round_trip_and_overrides() {
        let text = r#"
            datasets = ["C"]
            algorithms = ["GP", "dpmm"]
            train_sizes = [250]
            [ensemble]
            members = 4
        "#;
        let cfg = ExperimentConfig::from_toml_str(text);
        // algorithm names are case sensitive in files
        assert!(cfg.is_err());
        let cfg = ExperimentConfig::from_toml_str(&text.replace("dpmm", "DPMM")).unwrap();
        assert_eq!(cfg.datasets, vec![DatasetId::C]);
        assert_eq!(cfg.ensemble.members, 4);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn malformed_values_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("train_sizes = [0]").is_err());
        assert!(ExperimentConfig::from_toml_str("unknown_key = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[ensemble]\nmembers = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("seed = \"x\"").is_err());
    }

    #[test]
    fn fingerprints_track_hyperparameters() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.ensemble.beta = 0.2;
        let fa = fingerprint(&a.algorithm_hyperparameters(Algorithm::Cl));
        let fb = fingerprint(&b.algorithm_hyperparameters(Algorithm::Cl));
        assert_ne!(fa, fb);
        assert_eq!(
            fingerprint(&a.algorithm_hyperparameters(Algorithm::Nne)),
            fingerprint(&b.algorithm_hyperparameters(Algorithm::Nne))
        );
    }

    #[test]
    fn fast_mode_shrinks_budgets() {
        let f = ExperimentConfig::default().fast();
        assert_eq!(f.train_sizes, vec![250, 1000, 5000]);
        assert_eq!(f.ensemble.members, 10);
        assert_eq!(f.dpmm.to_config().budget, McmcBudget::fast());
    }
}
