//! Test for a hypothesized covariance matrix based on the entrywise maximum
//! deviation of the empirical covariance.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Unbiased empirical covariance of an `m × d` row-major sample.
pub fn empirical_covariance(samples: &[f64], d: usize) -> DMatrix<f64> {
    let m = samples.len() / d;
    let mut mean = vec![0.0; d];
    for row in samples.chunks(d) {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut cov = DMatrix::zeros(d, d);
    for row in samples.chunks(d) {
        for i in 0..d {
            let a = row[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += a * (row[j] - mean[j]);
            }
        }
    }
    let denom = (m.max(2) - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Rejects iff `max_ij |Σ̂_ij − Σ₀_ij| > δ`.
pub fn covariance_separation_test(samples: &[f64], sigma0: &DMatrix<f64>, delta: f64) -> Decision {
    let d = sigma0.nrows();
    let cov = empirical_covariance(samples, d);
    let dev = (&cov - sigma0).abs().max();
    if dev > delta {
        Decision::Reject
    } else {
        Decision::Accept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{grf_covariance, grf_sample, CovarianceFamily, GrfSpec};

    #[test]
    fn covariance_of_known_rows() {
        let cov = empirical_covariance(&[1.0, 2.0, 3.0, 6.0], 2);
        assert_eq!(cov[(0, 0)], 2.0);
        assert_eq!(cov[(1, 1)], 8.0);
        assert_eq!(cov[(0, 1)], 4.0);
    }

    #[test]
    fn two_rows_do_not_crash() {
        let spec = GrfSpec::unit_grid(2, CovarianceFamily::Matern { nu: 0.5 }, false).unwrap();
        let s = grf_sample(&spec, &[0.3], 2, 1).unwrap();
        let sigma0 = grf_covariance(&spec, &[0.3]).unwrap();
        let _ = covariance_separation_test(&s.values, &sigma0, 0.1);
    }
}
