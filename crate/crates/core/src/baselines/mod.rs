//! Reference Bayes estimators and the covariance-separation test.

pub mod linear;
pub mod mcmc;
pub mod quadrature;
pub mod separation;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use linear::{linear_bayes, linear_bayes_risks, sparse_linear_optimal, LinearRisks};
pub use mcmc::{logistic_posterior_mcmc, McmcConfig};
pub use quadrature::{gauss_legendre, logistic_posterior_quadrature, GaussLegendre};
pub use separation::{covariance_separation_test, empirical_covariance, Decision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    /// Batch-means Monte Carlo standard error of the chain mean.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    /// Change of the posterior mean when the node count is doubled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Posterior mean of `θ` together with how it was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub method: Method,
    pub posterior_mean: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl PosteriorSummary {
    /// One JSON-lines record.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_shape() {
        let s = linear_bayes(&[1.0], 0.0, 1.0, 1.0).unwrap();
        let line = s.to_json_line().unwrap();
        assert_eq!(
            line,
            r#"{"method":"closed-form","posterior_mean":[0.5],"diagnostics":{}}"#
        );
        let back: PosteriorSummary = serde_json::from_str(&line).unwrap();
        assert_eq!(back, s);
    }
}
