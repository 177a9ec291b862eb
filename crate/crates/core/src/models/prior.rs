use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Prior distribution over the parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prior {
    /// Independent uniform coordinates on `(lower, upper)`.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// Independent normal coordinates with means `mean` and stdevs `stdev`.
    Gaussian { mean: Vec<f64>, stdev: Vec<f64> },
}

impl Prior {
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let p = Prior::UniformBox { lower, upper };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(mean: Vec<f64>, stdev: Vec<f64>) -> Result<Self> {
        let p = Prior::Gaussian { mean, stdev };
        p.validate()?;
        Ok(p)
    }

    /// Uniform prior on `(0, 1)`.
    pub fn unit_interval() -> Self {
        Prior::UniformBox {
            lower: vec![0.0],
            upper: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::UniformBox { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::Config(
                        "uniform prior bounds must be non-empty and of equal length".into(),
                    ));
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
                {
                    return Err(Error::Config(format!(
                        "uniform prior requires finite lower < upper, got {lower:?} / {upper:?}"
                    )));
                }
            }
            Prior::Gaussian { mean, stdev } => {
                if mean.is_empty() || mean.len() != stdev.len() {
                    return Err(Error::Config(
                        "gaussian prior mean/stdev must be non-empty and of equal length".into(),
                    ));
                }
                if stdev.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                    return Err(Error::Config(format!(
                        "gaussian prior stdev must be positive, got {stdev:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::UniformBox { lower, .. } => lower.len(),
            Prior::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, upper } => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            Prior::Gaussian { mean, .. } => mean.clone(),
        }
    }

    /// Sum of coordinate variances: the risk of the constant prior-mean estimator.
    pub fn total_variance(&self) -> f64 {
        match self {
            Prior::UniformBox { lower, upper } => lower.iter().zip(upper).map(|(l, u)| (u - l).powi(2) / 12.0).sum(),
            Prior::Gaussian { stdev, .. } => stdev.iter().map(|s| s * s).sum(),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        match self {
            Prior::UniformBox { lower, upper } => {
                theta.len() == lower.len()
                    && theta
                        .iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(t, (l, u))| t > l && t < u)
            }
            Prior::Gaussian { mean, .. } => theta.len() == mean.len() && theta.iter().all(|t| t.is_finite()),
        }
    }

    /// Largest absolute coordinate value of the support, `None` when unbounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Prior::UniformBox { lower, upper } => {
                Some(lower.iter().chain(upper).fold(0.0f64, |acc, v| acc.max(v.abs())))
            }
            Prior::Gaussian { .. } => None,
        }
    }

    /// One draw from the prior.
    pub fn draw(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| loop {
                    // open interval: reject the (measure-zero) endpoint
                    let t = l + (u - l) * rng.random::<f64>();
                    if t > *l && t < *u {
                        break t;
                    }
                })
                .collect(),
            Prior::Gaussian { mean, stdev } => mean
                .iter()
                .zip(stdev)
                .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    }
}

/// `n` i.i.d. draws from `prior`, the i-th drawn from its own seed stream.
pub fn sample_prior(prior: &Prior, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    prior.validate()?;
    if n == 0 {
        return Err(Error::Config("sample_prior requires n >= 1".into()));
    }
    Ok((0..n as u64)
        .map(|i| prior.draw(&mut rng::stream(seed, "prior", i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn uniform_draws_are_in_support_and_reproducible() {
        let p = Prior::unit_interval();
        let a = sample_prior(&p, 3, 11).unwrap();
        let b = sample_prior(&p, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| t[0] > 0.0 && t[0] < 1.0));
    }

    #[test]
    fn gaussian_moments() {
        let p = Prior::gaussian(vec![0.0], vec![1.0]).unwrap();
        let xs: Vec<f64> = sample_prior(&p, 100_000, 5)
            .unwrap()
            .into_iter()
            .map(|t| t[0])
            .collect();
        assert!(stats::mean(&xs).abs() < 0.02);
        assert!((stats::std_dev(&xs) - 1.0).abs() < 0.02);
    }

    #[test]
    fn uniform_mean() {
        let xs: Vec<f64> = sample_prior(&Prior::unit_interval(), 100_000, 6)
            .unwrap()
            .into_iter()
            .map(|t| t[0])
            .collect();
        assert!((stats::mean(&xs) - 0.5).abs() < 0.01);
    }

    #[test]
    fn invalid_bounds_are_rejected() {
        assert!(matches!(Prior::uniform(vec![1.0], vec![0.0]), Err(Error::Config(_))));
        assert!(matches!(Prior::gaussian(vec![0.0], vec![0.0]), Err(Error::Config(_))));
        assert!(sample_prior(&Prior::unit_interval(), 0, 1).is_err());
    }
}
