//! Parametric families `P_θ`, their priors and simulators.

pub mod brown_resnick;
pub mod grf;
pub mod linear;
pub mod logistic;
pub mod partitions;
pub mod prior;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use brown_resnick::{brown_resnick_sample, brown_resnick_spectral, BrownResnickSpec};
pub use grf::{grf_covariance, grf_sample, CovarianceFamily, GrfSpec};
pub use linear::linear_gaussian_sample;
pub use logistic::{logistic_cdf, logistic_logdensity, logistic_sample};
pub use prior::{sample_prior, Prior};

/// `m` replicates of a `d`-dimensional observation, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub m: usize,
    pub d: usize,
    pub theta: Vec<f64>,
    pub model: String,
    pub seed: u64,
}

impl Sample {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

/// A simulable parametric family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Model {
    /// `Z_j | θ ~ N(θ, σ²)`, scalar observations.
    LinearGaussian {
        sigma: f64,
    },
    GaussianField(GrfSpec),
    /// `d`-variate max-stable logistic model, `θ ∈ (0, 1)`.
    Logistic {
        d: usize,
    },
    BrownResnick(BrownResnickSpec),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::LinearGaussian { .. } => "linear-gaussian",
            Model::GaussianField(_) => "gaussian-field",
            Model::Logistic { .. } => "logistic",
            Model::BrownResnick(_) => "brown-resnick",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::LinearGaussian { sigma } if !(*sigma > 0.0) => {
                Err(Error::Config(format!("noise stdev must be positive, got {sigma}")))
            }
            Model::GaussianField(spec) => spec.validate(),
            Model::Logistic { d } if *d == 0 => Err(Error::Config("logistic dimension must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Observation dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Model::LinearGaussian { .. } => 1,
            Model::GaussianField(spec) => spec.dim(),
            Model::Logistic { d } => *d,
            Model::BrownResnick(spec) => spec.dim(),
        }
    }

    /// Parameter dimension `p`.
    pub fn param_dim(&self) -> usize {
        match self {
            Model::LinearGaussian { .. } | Model::Logistic { .. } => 1,
            Model::GaussianField(spec) => spec.param_dim(),
            Model::BrownResnick(_) => 2,
        }
    }

    /// Whether observations are strictly positive (max-stable families).
    pub fn positive_support(&self) -> bool {
        matches!(self, Model::Logistic { .. } | Model::BrownResnick(_))
    }

    /// `m` i.i.d. replicates from `P_θ`, row-major `m × d`.
    pub fn simulate(&self, theta: &[f64], m: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            Model::LinearGaussian { sigma } => {
                let [t] = theta else {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: theta.len(),
                    });
                };
                Ok((0..m)
                    .map(|_| t + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect())
            }
            Model::GaussianField(spec) => grf::simulate(spec, theta, m, rng),
            Model::Logistic { d } => {
                let [t] = theta else {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: theta.len(),
                    });
                };
                logistic::simulate(*d, *t, m, rng)
            }
            Model::BrownResnick(spec) => brown_resnick::simulate(spec, theta, m, rng),
        }
    }

    pub fn sample(&self, theta: &[f64], m: usize, seed: u64) -> Result<Sample> {
        let values = self.simulate(theta, m, &mut crate::rng::stream(seed, self.name(), 0))?;
        Ok(Sample {
            values,
            m,
            d: self.dim(),
            theta: theta.to_vec(),
            model: self.name().into(),
            seed,
        })
    }
}
