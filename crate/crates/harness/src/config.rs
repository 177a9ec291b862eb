//! Experiment configuration files.
//!
//! A config is a TOML document with a top-level `id`, `seed` and an
//! `[experiment]` table whose `kind` selects the study:
//!
//! ```toml
//! id = "figure4"
//! seed = 20240501
//!
//! [experiment]
//! kind = "figure4"
//! m_values = [1, 10]
//! n_train = 10000
//! ```
//!
//! Every omitted field takes the default shown by `neuralbayes config <id>`.

use std::path::{Path, PathBuf};

use neuralbayes::bounds::TailModel;
use neuralbayes::neural::{InputTransform, Optimizer, Regularization};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Figure4(Figure4Config),
    Decomposition(DecompositionConfig),
    Linear(LinearConfig),
    Bounds(BoundsConfig),
}

/// Optimizer and epoch budget shared by every network fit in a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    /// Output clipping bound `B`; `inf` disables clipping.
    pub clip: f64,
    pub input_transform: InputTransform,
}

impl TrainingSettings {
    pub fn clip_bound(&self) -> Option<f64> {
        self.clip.is_finite().then_some(self.clip)
    }
}

impl TrainingSettings {
    /// Settings for exchangeable `dim`-variate logistic data.
    pub fn logistic(dim: usize) -> Self {
        TrainingSettings {
            input_transform: InputTransform::SortedLog { dim },
            ..Self::default()
        }
    }
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            optimizer: Optimizer::adam(1e-3),
            batch_size: 64,
            epochs: 100,
            clip: 1.0,
            input_transform: InputTransform::Log,
        }
    }
}

/// Architecture grid searched for the best network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub hidden: Vec<Vec<usize>>,
    pub regularizations: Vec<Regularization>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            hidden: vec![vec![32], vec![64, 64], vec![128, 64]],
            regularizations: vec![
                Regularization::None,
                Regularization::Dropout { rate: 0.2 },
                Regularization::EarlyStopping {
                    validation_fraction: 0.2,
                    patience: 10,
                },
            ],
        }
    }
}

impl GridConfig {
    pub fn points(&self) -> Vec<(Vec<usize>, Regularization)> {
        self.hidden
            .iter()
            .flat_map(|h| self.regularizations.iter().map(move |r| (h.clone(), r.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSettings {
    pub chain_len: usize,
    pub burn_in: usize,
    pub proposal_scale: f64,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            chain_len: 20_000,
            burn_in: 5_000,
            proposal_scale: 0.5,
        }
    }
}

/// Neural versus Bayes estimates on fresh test parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure4Config {
    pub d: usize,
    pub m_values: Vec<usize>,
    pub n_train: usize,
    /// Held-out records used to pick the grid-best network.
    pub n_validation: usize,
    pub n_test: usize,
    pub grid: GridConfig,
    /// `α` of the restricted class searched by the grid; `inf` trains
    /// unrestricted.
    pub restriction: f64,
    pub training: TrainingSettings,
    pub quadrature_nodes: usize,
    pub mcmc: McmcSettings,
    /// Directory with `figure4_m{m}.ckpt` files to use instead of training.
    pub checkpoints: Option<PathBuf>,
}

impl Default for Figure4Config {
    fn default() -> Self {
        Figure4Config {
            d: 5,
            m_values: vec![1, 10],
            n_train: 10_000,
            n_validation: 1_000,
            n_test: 500,
            grid: GridConfig::default(),
            restriction: 2.0,
            training: TrainingSettings::logistic(5),
            quadrature_nodes: 256,
            mcmc: McmcSettings::default(),
            checkpoints: None,
        }
    }
}

/// Risk decomposition over replicates `m` and training sizes `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub d: usize,
    pub m_values: Vec<usize>,
    pub n_values: Vec<usize>,
    /// Training size of the optimal-network proxy.
    pub n_optimal: usize,
    pub n_validation: usize,
    pub n_test: usize,
    /// Grid searched for the optimal-network proxy.
    pub grid: GridConfig,
    /// Hidden layout of the empirical risk minimizer and regularized fits.
    pub hidden: Vec<usize>,
    pub regularized: Regularization,
    /// `α` of the restricted class shared by every network in the study;
    /// `inf` trains unrestricted.
    pub restriction: f64,
    pub training: TrainingSettings,
    /// Epoch budget of the small-`N` fits.
    pub small_n_epochs: usize,
    pub quadrature_nodes: usize,
    pub sweep_m: usize,
    pub sweep_n: Vec<usize>,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            d: 5,
            m_values: (1..=10).collect(),
            n_values: vec![100, 1000],
            n_optimal: 10_000,
            n_validation: 1_000,
            n_test: 500,
            grid: GridConfig::default(),
            hidden: vec![64, 64],
            regularized: Regularization::Dropout { rate: 0.2 },
            restriction: 2.0,
            training: TrainingSettings::logistic(5),
            small_n_epochs: 200,
            quadrature_nodes: 256,
            sweep_m: 10,
            sweep_n: vec![100, 300, 1000, 3000],
        }
    }
}

/// Linear-Gaussian study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub k_fixed: usize,
    pub m_values: Vec<usize>,
    pub n_test: usize,
    pub erm_m_values: Vec<usize>,
    pub erm_n_values: Vec<usize>,
    pub sweep_m: usize,
    pub sweep_n: Vec<usize>,
    pub training: TrainingSettings,
    /// Small training sets get extra epochs until this many updates are made.
    pub min_updates: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            mu: 0.0,
            gamma: 1.0,
            sigma: 1.0,
            k_fixed: 10,
            m_values: vec![1, 2, 5, 10, 20, 50, 100, 200],
            n_test: 5_000,
            erm_m_values: vec![1, 2, 5, 10, 20, 40],
            erm_n_values: vec![100, 1000],
            sweep_m: 40,
            sweep_n: vec![50, 100, 300, 1000, 3000, 10_000],
            training: TrainingSettings {
                optimizer: Optimizer::adam(1e-3),
                batch_size: 32,
                epochs: 200,
                clip: f64::INFINITY,
                input_transform: InputTransform::Identity,
            },
            min_updates: 20_000,
        }
    }
}

/// Sweep of the closed-form bounds over training sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub param_bound: f64,
    pub p: usize,
    pub d: usize,
    pub m_values: Vec<usize>,
    pub layers: usize,
    pub delta: f64,
    pub n_values: Vec<f64>,
    pub tails: Vec<TailModel>,
    /// Target rate for the training-size lower bound column.
    pub epsilon: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            param_bound: 1.0,
            p: 1,
            d: 1,
            m_values: vec![2, 4],
            layers: 2,
            delta: 0.05,
            n_values: (3..=9).map(|e| 10f64.powi(e)).collect(),
            tails: vec![TailModel::Subgaussian { variance: 1.0 }, TailModel::Frechet],
            epsilon: 0.5,
        }
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(HarnessError::Config(format!("grid `{name}` must not be empty")));
    }
    Ok(())
}

fn matching_transform(t: InputTransform, d: usize) -> Result<()> {
    match t {
        InputTransform::SortedLog { dim } if dim != d => Err(HarnessError::Config(format!(
            "input transform sorts blocks of {dim} but the model has d = {d}"
        ))),
        _ => Ok(()),
    }
}

fn valid_restriction(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 1.0 {
        return Err(HarnessError::Config(format!(
            "restriction α = {alpha} must be at least 1"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(HarnessError::Config(format!("`{name}` must be positive")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Default configuration of a named figure.
    pub fn preset(figure: &str) -> Result<Self> {
        let (id, experiment) = match figure {
            "fig4" | "figure4" => ("figure4", Experiment::Figure4(Figure4Config::default())),
            "fig5" | "fig6" | "fig7" | "decomposition" => (
                "decomposition",
                Experiment::Decomposition(DecompositionConfig::default()),
            ),
            "fig8" | "fig9" | "fig10" | "linear" => ("linear", Experiment::Linear(LinearConfig::default())),
            "bounds" => ("bounds", Experiment::Bounds(BoundsConfig::default())),
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown figure `{other}`; expected fig4..fig10, decomposition, linear or bounds"
                )))
            }
        };
        Ok(ExperimentConfig {
            id: id.into(),
            seed: 20240501,
            experiment,
        })
    }

    /// SHA-256 of the canonical JSON rendering.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(HarnessError::Config(format!("invalid experiment id `{}`", self.id)));
        }
        match &self.experiment {
            Experiment::Figure4(c) => {
                non_empty("m_values", &c.m_values)?;
                non_empty("grid.hidden", &c.grid.hidden)?;
                non_empty("grid.regularizations", &c.grid.regularizations)?;
                positive("n_train", c.n_train)?;
                positive("n_validation", c.n_validation)?;
                positive("d", c.d)?;
                matching_transform(c.training.input_transform, c.d)?;
                valid_restriction(c.restriction)?;
                if c.n_test < 100 {
                    return Err(HarnessError::Config("n_test must be at least 100".into()));
                }
            }
            Experiment::Decomposition(c) => {
                non_empty("m_values", &c.m_values)?;
                non_empty("n_values", &c.n_values)?;
                non_empty("sweep_n", &c.sweep_n)?;
                non_empty("grid.hidden", &c.grid.hidden)?;
                non_empty("grid.regularizations", &c.grid.regularizations)?;
                positive("n_optimal", c.n_optimal)?;
                positive("n_validation", c.n_validation)?;
                positive("d", c.d)?;
                matching_transform(c.training.input_transform, c.d)?;
                valid_restriction(c.restriction)?;
                if c.n_test < 100 {
                    return Err(HarnessError::Config("n_test must be at least 100".into()));
                }
            }
            Experiment::Linear(c) => {
                non_empty("m_values", &c.m_values)?;
                non_empty("erm_m_values", &c.erm_m_values)?;
                non_empty("erm_n_values", &c.erm_n_values)?;
                non_empty("sweep_n", &c.sweep_n)?;
                positive("k_fixed", c.k_fixed)?;
                if c.n_test < 100 {
                    return Err(HarnessError::Config("n_test must be at least 100".into()));
                }
                if !(c.gamma > 0.0 && c.sigma > 0.0) {
                    return Err(HarnessError::Config("γ and σ must be positive".into()));
                }
            }
            Experiment::Bounds(c) => {
                non_empty("m_values", &c.m_values)?;
                non_empty("n_values", &c.n_values)?;
                non_empty("tails", &c.tails)?;
            }
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
