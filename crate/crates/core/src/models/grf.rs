//! Stationary isotropic Gaussian random fields observed at fixed locations.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Sample;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "covariance", rename_all = "kebab-case")]
pub enum CovarianceFamily {
    /// `exp(-(h/λ)^α)`, free parameters `(λ, α)`.
    PoweredExponential,
    /// Matérn with fixed smoothness `nu`, free range `λ`.
    Matern { nu: f64 },
}

/// Gaussian random field at `locations`.
///
/// Parameter vector layout: `[τ]` first when `nugget` is set, then `λ`, then
/// `α` for the powered exponential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub locations: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub family: CovarianceFamily,
    #[serde(default)]
    pub nugget: bool,
}

/// Parameters of a field after unpacking the flat vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfParams {
    pub tau: f64,
    pub range: f64,
    pub power: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl GrfSpec {
    pub fn new(locations: Vec<Vec<f64>>, family: CovarianceFamily, nugget: bool) -> Result<Self> {
        let spec = GrfSpec {
            locations,
            family,
            nugget,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Regular `side × side` grid on `[0, 1]²`.
    pub fn unit_grid(side: usize, family: CovarianceFamily, nugget: bool) -> Result<Self> {
        let step = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
        let locations = (0..side)
            .flat_map(|i| (0..side).map(move |j| vec![i as f64 * step, j as f64 * step]))
            .collect();
        GrfSpec::new(locations, family, nugget)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.locations.first().map(Vec::len).unwrap_or(0);
        if k == 0 || self.locations.iter().any(|s| s.len() != k) {
            return Err(Error::Config(
                "locations must be non-empty points of a common dimension".into(),
            ));
        }
        if let CovarianceFamily::Matern { nu } = self.family {
            if !(nu > 0.0) {
                return Err(Error::Config(format!("Matérn smoothness must be positive, got {nu}")));
            }
            if half_integer_order(nu).is_none() {
                return Err(Error::Config(format!(
                    "Matérn smoothness {nu} unsupported: only 1/2, 3/2 and 5/2 are implemented"
                )));
            }
        }
        let mut distances: Vec<f64> = Vec::new();
        for i in 0..self.locations.len() {
            for j in 0..i {
                let h = distance(&self.locations[i], &self.locations[j]);
                if h > 0.0 && !distances.iter().any(|d| (d - h).abs() <= 1e-12 * h.max(1.0)) {
                    distances.push(h);
                }
            }
        }
        if distances.len() < 2 {
            return Err(Error::Config(
                "locations need at least two distinct non-zero pairwise distances".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.locations.len()
    }

    pub fn param_dim(&self) -> usize {
        let base = match self.family {
            CovarianceFamily::PoweredExponential => 2,
            CovarianceFamily::Matern { .. } => 1,
        };
        base + usize::from(self.nugget)
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<GrfParams> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        let (tau, rest) = if self.nugget {
            (theta[0], &theta[1..])
        } else {
            (0.0, theta)
        };
        let range = rest[0];
        let power = match self.family {
            CovarianceFamily::PoweredExponential => rest[1],
            CovarianceFamily::Matern { .. } => 1.0,
        };
        if !(range > 0.0) || !(tau >= 0.0) || !(power > 0.0 && power <= 2.0) {
            return Err(Error::model(theta, "parameter outside (λ > 0, 0 < α ≤ 2, τ ≥ 0)"));
        }
        Ok(GrfParams { tau, range, power })
    }

    /// Continuous part of the covariance at lag `h`.
    pub fn correlation(&self, params: &GrfParams, h: f64) -> f64 {
        match self.family {
            CovarianceFamily::PoweredExponential => (-(h / params.range).powf(params.power)).exp(),
            CovarianceFamily::Matern { nu } => matern_half_integer(nu, h, params.range),
        }
    }

    /// Covariance at lag `h` including the nugget at `h = 0`.
    pub fn covariance(&self, params: &GrfParams, h: f64) -> f64 {
        let c = self.correlation(params, h);
        if h == 0.0 {
            c + params.tau * params.tau
        } else {
            c
        }
    }
}

/// `Some(k)` when `nu = k + 1/2` for `k ∈ {0, 1, 2}`.
fn half_integer_order(nu: f64) -> Option<usize> {
    [0.5, 1.5, 2.5].iter().position(|v| (nu - v).abs() < 1e-12)
}

/// Matérn correlation for `ν ∈ {1/2, 3/2, 5/2}` in closed form.
pub fn matern_half_integer(nu: f64, h: f64, range: f64) -> f64 {
    let r = (2.0 * nu).sqrt() * h / range;
    let poly = match half_integer_order(nu) {
        Some(0) => 1.0,
        Some(1) => 1.0 + r,
        Some(2) => 1.0 + r + r * r / 3.0,
        _ => return f64::NAN,
    };
    poly * (-r).exp()
}

/// Covariance matrix `Σ_θ` over the configured locations.
pub fn grf_covariance(spec: &GrfSpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    let params = spec.unpack(theta)?;
    let d = spec.dim();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..d {
        cov[(i, i)] = spec.covariance(&params, 0.0);
        for j in 0..i {
            let h = distance(&spec.locations[i], &spec.locations[j]);
            let c = spec.covariance(&params, h);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    Ok(cov)
}

/// Lower Cholesky factor of `Σ_θ`.
pub fn grf_cholesky(spec: &GrfSpec, theta: &[f64]) -> Result<DMatrix<f64>> {
    let cov = grf_covariance(spec, theta)?;
    cov.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::model(theta, "covariance matrix is not numerically positive definite"))
}

/// Draws `m` rows `L ε` with `ε` standard normal, appended row-major to `out`.
pub(crate) fn simulate_with_factor(factor: &DMatrix<f64>, m: usize, rng: &mut Rng, out: &mut Vec<f64>) {
    let d = factor.nrows();
    let mut eps = vec![0.0; d];
    for _ in 0..m {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += factor[(i, j)] * eps[j];
            }
            out.push(acc);
        }
    }
}

pub(crate) fn simulate(spec: &GrfSpec, theta: &[f64], m: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let factor = grf_cholesky(spec, theta)?;
    let mut out = Vec::with_capacity(m * spec.dim());
    simulate_with_factor(&factor, m, rng, &mut out);
    Ok(out)
}

/// `m` i.i.d. draws of the field at the configured locations.
pub fn grf_sample(spec: &GrfSpec, theta: &[f64], m: usize, seed: u64) -> Result<Sample> {
    let values = simulate(spec, theta, m, &mut rng::stream(seed, "grf", 0))?;
    Ok(Sample {
        values,
        m,
        d: spec.dim(),
        theta: theta.to_vec(),
        model: "grf".into(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Vec<Vec<f64>> {
        points.iter().map(|x| vec![*x]).collect()
    }

    #[test]
    fn nugget_adds_to_diagonal() {
        let spec = GrfSpec::new(line(&[0.0, 1.0, 3.0]), CovarianceFamily::PoweredExponential, true).unwrap();
        let cov = grf_covariance(&spec, &[0.3, 1.7, 1.2]).unwrap();
        for i in 0..3 {
            assert!((cov[(i, i)] - 1.09).abs() < 1e-15);
        }
    }

    #[test]
    fn matern_half_equals_exponential() {
        let spec = GrfSpec::new(line(&[0.0, 1.0, 3.0]), CovarianceFamily::Matern { nu: 0.5 }, false).unwrap();
        let params = spec.unpack(&[2.0]).unwrap();
        assert!((spec.covariance(&params, 1.0) - 0.6065306597126334).abs() < 1e-12);
        for i in 0..50 {
            let h = 0.1 * i as f64;
            assert!((spec.correlation(&params, h) - (-h / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn powered_exponential_at_ln2() {
        let spec = GrfSpec::new(
            line(&[0.0, 2f64.ln(), 1.0]),
            CovarianceFamily::PoweredExponential,
            false,
        )
        .unwrap();
        let cov = grf_covariance(&spec, &[1.0, 1.0]).unwrap();
        assert!((cov[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn covariance_is_exactly_symmetric() {
        let spec = GrfSpec::unit_grid(3, CovarianceFamily::Matern { nu: 2.5 }, true).unwrap();
        let cov = grf_covariance(&spec, &[0.1, 0.4]).unwrap();
        assert_eq!(cov, cov.transpose());
        grf_cholesky(&spec, &[0.1, 0.4]).unwrap();
    }

    #[test]
    fn degenerate_locations_are_rejected() {
        assert!(GrfSpec::new(line(&[0.0, 1.0]), CovarianceFamily::PoweredExponential, false).is_err());
        assert!(GrfSpec::new(line(&[0.0, 1.0, 3.0]), CovarianceFamily::Matern { nu: 1.0 }, false).is_err());
    }

    #[test]
    fn non_positive_definite_reports_theta() {
        // two coincident locations give a singular matrix without nugget
        let spec = GrfSpec {
            locations: line(&[0.0, 0.0, 1.0, 3.0]),
            family: CovarianceFamily::PoweredExponential,
            nugget: false,
        };
        match grf_cholesky(&spec, &[1.0, 1.0]) {
            Err(Error::Model { theta, .. }) => assert_eq!(theta, vec![1.0, 1.0]),
            other => panic!("expected model error, got {other:?}"),
        }
    }

    #[test]
    fn sample_shape_and_determinism() {
        let spec = GrfSpec::unit_grid(2, CovarianceFamily::Matern { nu: 1.5 }, false).unwrap();
        let a = grf_sample(&spec, &[0.2], 1, 9).unwrap();
        assert_eq!((a.m, a.d, a.values.len()), (1, 4, 4));
        let b = grf_sample(&spec, &[0.2], 5, 9).unwrap();
        let c = grf_sample(&spec, &[0.2], 5, 9).unwrap();
        assert_eq!(b.values, c.values);
    }

    #[test]
    fn empirical_covariance_matches() {
        let spec = GrfSpec::unit_grid(2, CovarianceFamily::Matern { nu: 1.5 }, false).unwrap();
        let cov = grf_covariance(&spec, &[0.2]).unwrap();
        let m = 20_000;
        let s = grf_sample(&spec, &[0.2], m, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e: f64 = (0..m).map(|r| s.values[r * 4 + i] * s.values[r * 4 + j]).sum::<f64>() / m as f64;
                assert!(
                    (e - cov[(i, j)]).abs() < 0.05,
                    "entry ({i},{j}): {e} vs {}",
                    cov[(i, j)]
                );
            }
        }
    }
}
