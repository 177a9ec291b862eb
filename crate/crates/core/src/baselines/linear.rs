//! Closed forms for the linear-Gaussian model `θ ~ N(μ, γ²)`,
//! `Z_j | θ ~ N(θ, σ²)`.

use crate::baselines::{Diagnostics, Method, PosteriorSummary};
use crate::error::{Error, Result};

fn check_scales(gamma: f64, sigma: f64) -> Result<()> {
    if gamma > 0.0 && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "γ and σ must be positive, got γ = {gamma}, σ = {sigma}"
        )))
    }
}

/// Optimal linear estimator using only `k` replicates: common slope and
/// intercept `(γ²/(kγ²+σ²), μσ²/(kγ²+σ²))`.
pub fn sparse_linear_optimal(mu: f64, gamma: f64, sigma: f64, k: usize) -> (f64, f64) {
    let g2 = gamma * gamma;
    let s2 = sigma * sigma;
    let denom = k as f64 * g2 + s2;
    (g2 / denom, mu * s2 / denom)
}

/// Posterior mean `b* + A* Σ_j z_j`.
pub fn linear_bayes(z: &[f64], mu: f64, gamma: f64, sigma: f64) -> Result<PosteriorSummary> {
    check_scales(gamma, sigma)?;
    let (slope, intercept) = sparse_linear_optimal(mu, gamma, sigma, z.len());
    Ok(PosteriorSummary {
        method: Method::ClosedForm,
        posterior_mean: vec![intercept + slope * z.iter().sum::<f64>()],
        diagnostics: Diagnostics::default(),
    })
}

/// Risks of the linear-Gaussian model with `m` replicates when the
/// approximating class uses `k ≤ m` of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRisks {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub m: usize,
    pub k: usize,
    /// `(γ²σ⁴ + mσ²γ⁴)/(mγ²+σ²)²`.
    pub bayes_risk: f64,
    /// Risk of the best `k`-sparse linear estimator minus the Bayes risk.
    pub approx_error: f64,
}

fn integrated_risk(gamma: f64, sigma: f64, k: usize) -> f64 {
    let (g2, s2) = (gamma * gamma, sigma * sigma);
    let k = k as f64;
    (g2 * s2 * s2 + k * s2 * g2 * g2) / (k * g2 + s2).powi(2)
}

impl LinearRisks {
    /// Risk of the Bayes estimator at a fixed `θ`.
    pub fn pointwise_risk(&self, theta: f64) -> f64 {
        let (g2, s2) = (self.gamma * self.gamma, self.sigma * self.sigma);
        let m = self.m as f64;
        let denom = (m * g2 + s2).powi(2);
        (self.mu - theta).powi(2) * s2 * s2 / denom + m * s2 * g2 * g2 / denom
    }

    /// Integrated risk of the best `k`-sparse linear estimator.
    pub fn sparse_risk(&self) -> f64 {
        integrated_risk(self.gamma, self.sigma, self.k)
    }
}

pub fn linear_bayes_risks(mu: f64, gamma: f64, sigma: f64, m: usize, k: usize) -> Result<LinearRisks> {
    check_scales(gamma, sigma)?;
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k must satisfy 1 <= k <= m = {m}, got {k}")));
    }
    let bayes_risk = integrated_risk(gamma, sigma, m);
    Ok(LinearRisks {
        mu,
        gamma,
        sigma,
        m,
        k,
        bayes_risk,
        approx_error: integrated_risk(gamma, sigma, k) - bayes_risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_mean_examples() {
        assert_eq!(linear_bayes(&[1.0], 0.0, 1.0, 1.0).unwrap().posterior_mean, vec![0.5]);
        for m in 1..6 {
            let z = vec![2.5; m];
            let mean = linear_bayes(&z, 2.5, 0.7, 1.3).unwrap().posterior_mean[0];
            assert!((mean - 2.5).abs() < 1e-14);
        }
        let z = [0.3, -1.2, 4.0, 2.2];
        let zbar = z.iter().sum::<f64>() / 4.0;
        let mean = linear_bayes(&z, 0.0, 1e3, 1.0).unwrap().posterior_mean[0];
        assert!((mean - zbar).abs() < 1e-4);
    }

    #[test]
    fn risk_examples() {
        let r = linear_bayes_risks(0.0, 1.0, 1.0, 1, 1).unwrap();
        assert!((r.bayes_risk - 0.5).abs() < 1e-12);
        let r = linear_bayes_risks(0.0, 1.0, 1.0, 2, 1).unwrap();
        assert!((r.approx_error - 1.0 / 6.0).abs() < 1e-12);
        let r = linear_bayes_risks(1.0, 2.0, 0.5, 7, 7).unwrap();
        assert_eq!(r.approx_error, 0.0);
        assert!(linear_bayes_risks(0.0, 1.0, 1.0, 2, 3).is_err());
        assert!(linear_bayes_risks(0.0, 1.0, 1.0, 2, 0).is_err());
    }

    #[test]
    fn pointwise_risk_integrates_to_bayes_risk() {
        // E (μ-θ)² = γ² under the prior
        let r = linear_bayes_risks(0.4, 1.5, 0.8, 3, 3).unwrap();
        let (g2, s2, m) = (1.5f64.powi(2), 0.8f64.powi(2), 3.0);
        let integrated = g2 * s2 * s2 / (m * g2 + s2).powi(2) + r.pointwise_risk(0.4);
        assert!((integrated - r.bayes_risk).abs() < 1e-14);
    }
}
