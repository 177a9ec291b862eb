use crate::error::{Error, Result};
use crate::estimation::{make_training_set, TrainingSet};
use crate::models::{Model, Prior};

/// `n` pairs `(z ∈ R^m, θ)` with `θ ~ N(μ, γ²)` and `z_j | θ ~ N(θ, σ²)`.
pub fn linear_gaussian_sample(mu: f64, gamma: f64, sigma: f64, m: usize, n: usize, seed: u64) -> Result<TrainingSet> {
    if !(gamma > 0.0 && sigma > 0.0) {
        return Err(Error::Config(format!(
            "γ and σ must be positive, got γ = {gamma}, σ = {sigma}"
        )));
    }
    let prior = Prior::gaussian(vec![mu], vec![gamma])?;
    make_training_set(&Model::LinearGaussian { sigma }, &prior, m, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn moments_follow_conjugacy() {
        let ts = linear_gaussian_sample(0.0, 1.0, 1.0, 1, 100_000, 21).unwrap();
        let z: Vec<f64> = ts.x.clone();
        let t: Vec<f64> = ts.theta.clone();
        assert!((stats::variance(&z) - 2.0).abs() < 0.05);
        assert!((stats::correlation(&z, &t) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
    }

    #[test]
    fn reproducible() {
        let a = linear_gaussian_sample(1.0, 2.0, 0.5, 3, 50, 4).unwrap();
        let b = linear_gaussian_sample(1.0, 2.0, 0.5, 3, 50, 4).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.theta, b.theta);
        assert!(linear_gaussian_sample(0.0, 0.0, 1.0, 1, 1, 0).is_err());
    }
}
