//! The max-stable logistic model with unit Fréchet margins.
//!
//! Distribution function `F(z) = exp(-V(z))` with exponent measure
//! `V(z) = T^θ`, `T = Σ_j z_j^{-1/θ}`, `θ ∈ (0, 1)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng as _;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::models::partitions;
use crate::models::Sample;
use crate::rng::{self, Rng};
use crate::stats::log_sum_exp;

/// Largest dimension for which the density is evaluated (`B_8 = 4140`).
pub const MAX_DENSITY_DIM: usize = 8;

/// Lower clamp applied to observations before taking `z^{-1/θ}`.
pub const Z_FLOOR: f64 = 1e-12;

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "logistic dependence parameter must lie in (0, 1), got {theta}"
        )))
    }
}

fn check_positive(z: &[f64]) -> Result<()> {
    if z.iter().all(|v| *v > 0.0) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "logistic model requires strictly positive observations, got {z:?}"
        )))
    }
}

/// `ln T = ln Σ_j z_j^{-1/θ}` from log-observations.
fn log_t(log_z: &[f64], theta: f64) -> f64 {
    let terms: Vec<f64> = log_z.iter().map(|lz| -lz / theta).collect();
    log_sum_exp(&terms)
}

/// Joint distribution function `exp(-(Σ z_j^{-1/θ})^θ)`.
///
/// `θ = 1` is accepted here as the independence limit.
pub fn logistic_cdf(z: &[f64], theta: f64) -> Result<f64> {
    check_positive(z)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!(
            "logistic dependence parameter must lie in (0, 1], got {theta}"
        )));
    }
    let log_z: Vec<f64> = z.iter().map(|v| v.max(Z_FLOOR).ln()).collect();
    Ok((-(theta * log_t(&log_z, theta)).exp()).exp())
}

/// `ln Π_{i=1}^{k-1} (i - θ)/θ`.
fn log_block_coefficient(k: usize, theta: f64) -> f64 {
    (1..k).map(|i| ((i as f64 - theta) / theta).ln()).sum()
}

fn profiles() -> &'static [Vec<(Vec<usize>, u64)>] {
    static CACHE: OnceLock<Vec<Vec<(Vec<usize>, u64)>>> = OnceLock::new();
    CACHE.get_or_init(|| (0..=MAX_DENSITY_DIM).map(partitions::block_size_profile).collect())
}

/// Log-density of the logistic model in dimension `d = z.len() ≤ 8`.
///
/// The density is `exp(-V) Σ_P Π_{b∈P} (-∂_b V)` over all set partitions `P`.
/// For a block of size `k`,
/// `-∂_b V = T^{θ-k} Π_{j∈b} z_j^{-1/θ-1} Π_{i=1}^{k-1} (i-θ)/θ`; the product of
/// the `z` factors over a partition is the same for every partition, so the
/// partition sum is accumulated over block-size profiles.
pub fn logistic_logdensity(z: &[f64], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_positive(z)?;
    let d = z.len();
    if d == 0 || d > MAX_DENSITY_DIM {
        return Err(Error::UnsupportedDimension {
            dim: d,
            max: MAX_DENSITY_DIM,
        });
    }
    let log_z: Vec<f64> = z.iter().map(|v| v.max(Z_FLOOR).ln()).collect();
    Ok(logdensity_from_logs(&log_z, theta))
}

/// Log-density from precomputed `ln z` (already clamped); no validation.
pub(crate) fn logdensity_from_logs(log_z: &[f64], theta: f64) -> f64 {
    let d = log_z.len();
    let lt = log_t(log_z, theta);
    let mut terms = Vec::with_capacity(profiles()[d].len());
    let mut coef = [0.0; MAX_DENSITY_DIM + 1];
    for (k, c) in coef.iter_mut().enumerate().skip(1) {
        *c = log_block_coefficient(k, theta);
    }
    for (sizes, count) in &profiles()[d] {
        let n_blocks = sizes.len() as f64;
        let log_coef: f64 = sizes.iter().map(|&k| coef[k]).sum();
        terms.push((*count as f64).ln() + log_coef + (n_blocks * theta - d as f64) * lt);
    }
    let z_factor: f64 = log_z.iter().map(|lz| (-1.0 / theta - 1.0) * lz).sum();
    -(theta * lt).exp() + z_factor + log_sum_exp(&terms)
}

/// Partition-by-partition evaluation of the same density, without grouping
/// partitions by block sizes.
pub fn logistic_logdensity_enumerated(z: &[f64], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    check_positive(z)?;
    let d = z.len();
    if d == 0 || d > MAX_DENSITY_DIM {
        return Err(Error::UnsupportedDimension {
            dim: d,
            max: MAX_DENSITY_DIM,
        });
    }
    let log_z: Vec<f64> = z.iter().map(|v| v.max(Z_FLOOR).ln()).collect();
    let lt = log_t(&log_z, theta);
    let terms: Vec<f64> = partitions::RestrictedGrowth::new(d)
        .map(|rgs| {
            partitions::blocks(&rgs)
                .iter()
                .map(|b| {
                    let k = b.len();
                    (theta - k as f64) * lt
                        + b.iter().map(|&j| (-1.0 / theta - 1.0) * log_z[j]).sum::<f64>()
                        + log_block_coefficient(k, theta)
                })
                .sum()
        })
        .collect();
    Ok(-(theta * lt).exp() + log_sum_exp(&terms))
}

/// `ln S` for a positive θ-stable `S` with Laplace transform `exp(-s^θ)`,
/// drawn by Kanter's representation.
pub fn log_positive_stable(theta: f64, rng: &mut Rng) -> f64 {
    let u = loop {
        let u: f64 = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = rng.sample(Exp1);
    let a = theta;
    (a * u).sin().ln() - (u.sin().ln()) / a + (1.0 - a) / a * (((1.0 - a) * u).sin().ln() - e.ln())
}

pub fn positive_stable(theta: f64, rng: &mut Rng) -> f64 {
    log_positive_stable(theta, rng).exp()
}

pub(crate) fn simulate(d: usize, theta: f64, m: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    check_theta(theta)?;
    if d == 0 {
        return Err(Error::Config("logistic dimension must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(m * d);
    for _ in 0..m {
        let log_s = log_positive_stable(theta, rng);
        for _ in 0..d {
            let e: f64 = rng.sample(Exp1);
            out.push((theta * (log_s - e.ln())).exp());
        }
    }
    Ok(out)
}

/// `m` i.i.d. draws `Z_j = (S/E_j)^θ` from the `d`-variate logistic model.
pub fn logistic_sample(d: usize, theta: f64, m: usize, seed: u64) -> Result<Sample> {
    let values = simulate(d, theta, m, &mut rng::stream(seed, "logistic", 0))?;
    Ok(Sample {
        values,
        m,
        d,
        theta: vec![theta],
        model: "logistic".into(),
        seed,
    })
}
