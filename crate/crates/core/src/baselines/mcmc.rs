//! Random-walk Metropolis for the logistic model's posterior, run on the
//! logit scale under a uniform prior on `(0, 1)`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::quadrature::{canonical_log_rows, log_likelihood};
use crate::baselines::{Diagnostics, Method, PosteriorSummary};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total iterations, burn-in included.
    pub chain_len: usize,
    pub burn_in: usize,
    /// Proposal standard deviation on the logit scale.
    pub proposal_scale: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            chain_len: 20_000,
            burn_in: 5_000,
            proposal_scale: 0.5,
            seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln θ(1−θ)` for `θ = sigmoid(η)`, stable for large `|η|`.
fn log_jacobian(eta: f64) -> f64 {
    -eta.abs() - 2.0 * (-eta.abs()).exp().ln_1p()
}

/// Posterior mean by random-walk Metropolis on `η = logit θ`.
pub fn logistic_posterior_mcmc(data: &[f64], d: usize, cfg: &McmcConfig) -> Result<PosteriorSummary> {
    if cfg.burn_in >= cfg.chain_len {
        return Err(Error::Config(format!(
            "burn-in {} must be shorter than the chain {}",
            cfg.burn_in, cfg.chain_len
        )));
    }
    if !(cfg.proposal_scale > 0.0) {
        return Err(Error::Config("proposal scale must be positive".into()));
    }
    let rows = canonical_log_rows(data, d)?;
    let log_target = |eta: f64| {
        let theta = sigmoid(eta);
        if theta <= 0.0 || theta >= 1.0 {
            return f64::NEG_INFINITY;
        }
        log_likelihood(&rows, theta) + log_jacobian(eta)
    };
    let mut rng = rng::stream(cfg.seed, "mcmc", 0);
    let mut eta = 0.0;
    let mut current = log_target(eta);
    let mut accepted = 0usize;
    let mut kept = Vec::with_capacity(cfg.chain_len - cfg.burn_in);
    for it in 0..cfg.chain_len {
        let proposal = eta + cfg.proposal_scale * rng.sample::<f64, _>(StandardNormal);
        let candidate = log_target(proposal);
        let u: f64 = rng.random();
        if candidate.is_finite() && u.ln() < candidate - current {
            eta = proposal;
            current = candidate;
            accepted += 1;
        }
        if it >= cfg.burn_in {
            kept.push(sigmoid(eta));
        }
    }
    if accepted == 0 {
        return Err(Error::SamplerFailure("no proposal was accepted".into()));
    }
    let acceptance = accepted as f64 / cfg.chain_len as f64;
    let mut warnings = Vec::new();
    if !(0.1..=0.7).contains(&acceptance) {
        warnings.push(format!("acceptance rate {acceptance:.3} outside [0.1, 0.7]"));
    }
    // batch means with 30 batches
    let batches = 30.min(kept.len());
    let size = kept.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| stats::mean(&kept[b * size..(b + 1) * size]))
        .collect();
    Ok(PosteriorSummary {
        method: Method::Mcmc,
        posterior_mean: vec![stats::mean(&kept)],
        diagnostics: Diagnostics {
            chain_length: Some(cfg.chain_len),
            burn_in: Some(cfg.burn_in),
            acceptance_rate: Some(acceptance),
            mc_stderr: Some(stats::std_err(&means)),
            warnings,
            ..Diagnostics::default()
        },
    })
}
