//! Exact simulation of Brown–Resnick processes by extremal functions.
//!
//! The spectral function is `Y(s) = exp(V(s) - γ(s - s₀))` where `V` is a
//! centred Gaussian field with `V(s₀) = 0` and
//! `Cov(V(s), V(t)) = γ(s - s₀) + γ(t - s₀) - γ(s - t)` for the semivariogram
//! `γ(h) = c‖h‖^α`. Then `Var V(s) = 2γ(s - s₀)` and `E Y(s) = 1`.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Sample;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownResnickSpec {
    pub locations: Vec<Vec<f64>>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn semivariogram(c: f64, alpha: f64, h: f64) -> f64 {
    c * h.powf(alpha)
}

fn check_theta(theta: &[f64]) -> Result<(f64, f64)> {
    match theta {
        [c, a] if *c > 0.0 && c.is_finite() && *a > 0.0 && *a < 2.0 => Ok((*c, *a)),
        [_, _] => Err(Error::Domain(format!(
            "Brown–Resnick parameters must satisfy c > 0, 0 < α < 2, got {theta:?}"
        ))),
        _ => Err(Error::DimensionMismatch {
            expected: 2,
            got: theta.len(),
        }),
    }
}

/// Gaussian factors for the spectral functions anchored at each location.
struct AnchoredFactors {
    // factor k: lower Cholesky factor over all locations except k, with the
    // index map of the retained locations
    factors: Vec<(DMatrix<f64>, Vec<usize>)>,
    // γ(s_i - s_k) for all i, per anchor k
    drift: Vec<Vec<f64>>,
}

impl BrownResnickSpec {
    pub fn new(locations: Vec<Vec<f64>>) -> Result<Self> {
        let k = locations.first().map(Vec::len).unwrap_or(0);
        if k == 0 || locations.iter().any(|s| s.len() != k) {
            return Err(Error::Config(
                "locations must be non-empty points of a common dimension".into(),
            ));
        }
        Ok(BrownResnickSpec { locations })
    }

    pub fn dim(&self) -> usize {
        self.locations.len()
    }

    /// Covariance of `V` at `points` for a field anchored at `origin`.
    fn anchored_covariance(&self, c: f64, alpha: f64, origin: &[f64], points: &[&[f64]]) -> DMatrix<f64> {
        let n = points.len();
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = semivariogram(c, alpha, distance(points[i], origin))
                    + semivariogram(c, alpha, distance(points[j], origin))
                    - semivariogram(c, alpha, distance(points[i], points[j]));
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        cov
    }

    fn factors(&self, theta: &[f64]) -> Result<AnchoredFactors> {
        let (c, alpha) = check_theta(theta)?;
        let d = self.dim();
        let mut factors = Vec::with_capacity(d);
        let mut drift = Vec::with_capacity(d);
        for k in 0..d {
            let keep: Vec<usize> = (0..d).filter(|&i| i != k).collect();
            let points: Vec<&[f64]> = keep.iter().map(|&i| self.locations[i].as_slice()).collect();
            let cov = self.anchored_covariance(c, alpha, &self.locations[k], &points);
            let l = if keep.is_empty() {
                DMatrix::zeros(0, 0)
            } else {
                cov.cholesky()
                    .ok_or_else(|| Error::model(theta, "degenerate anchored covariance (duplicate locations?)"))?
                    .l()
            };
            factors.push((l, keep));
            drift.push(
                (0..d)
                    .map(|i| semivariogram(c, alpha, distance(&self.locations[i], &self.locations[k])))
                    .collect(),
            );
        }
        Ok(AnchoredFactors { factors, drift })
    }
}

fn draw_anchored(f: &AnchoredFactors, anchor: usize, rng: &mut Rng, out: &mut [f64]) {
    let (l, keep) = &f.factors[anchor];
    let n = keep.len();
    let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    out[anchor] = 1.0;
    for (r, &i) in keep.iter().enumerate() {
        let mut v = 0.0;
        for j in 0..=r {
            v += l[(r, j)] * eps[j];
        }
        out[i] = (v - f.drift[anchor][i]).exp();
    }
}

fn simulate_one(f: &AnchoredFactors, d: usize, rng: &mut Rng, z: &mut [f64], y: &mut [f64]) {
    z.iter_mut().for_each(|v| *v = 0.0);
    for n in 0..d {
        let mut gamma: f64 = rng.sample(Exp1);
        let mut zeta = 1.0 / gamma;
        while zeta > z[n] {
            draw_anchored(f, n, rng, y);
            if (0..n).all(|k| zeta * y[k] < z[k]) {
                for (zi, yi) in z.iter_mut().zip(y.iter()) {
                    *zi = zi.max(zeta * yi);
                }
            }
            let e: f64 = rng.sample(Exp1);
            gamma += e;
            zeta = 1.0 / gamma;
        }
    }
}

pub(crate) fn simulate(spec: &BrownResnickSpec, theta: &[f64], m: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let d = spec.dim();
    let f = spec.factors(theta)?;
    let mut out = vec![0.0; m * d];
    let mut y = vec![0.0; d];
    for row in out.chunks_mut(d) {
        simulate_one(&f, d, rng, row, &mut y);
    }
    Ok(out)
}

/// `m` exact draws of `(W(s₁), …, W(s_d))`.
pub fn brown_resnick_sample(spec: &BrownResnickSpec, theta: &[f64], m: usize, seed: u64) -> Result<Sample> {
    let values = simulate(spec, theta, m, &mut rng::stream(seed, "brown-resnick", 0))?;
    Ok(Sample {
        values,
        m,
        d: spec.dim(),
        theta: theta.to_vec(),
        model: "brown-resnick".into(),
        seed,
    })
}

/// `n` draws of the spectral function `exp(V(s) - γ(s - origin))` at the
/// configured locations, with `V(origin) = 0`. Row-major `n × d`.
pub fn brown_resnick_spectral(
    spec: &BrownResnickSpec,
    theta: &[f64],
    origin: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (c, alpha) = check_theta(theta)?;
    let points: Vec<&[f64]> = spec.locations.iter().map(Vec::as_slice).collect();
    let cov = spec.anchored_covariance(c, alpha, origin, &points);
    let l = cov
        .cholesky()
        .ok_or_else(|| Error::model(theta, "degenerate spectral covariance"))?
        .l();
    let drift: Vec<f64> = points
        .iter()
        .map(|s| semivariogram(c, alpha, distance(s, origin)))
        .collect();
    let d = spec.dim();
    let mut rng = rng::stream(seed, "brown-resnick-spectral", 0);
    let mut out = Vec::with_capacity(n * d);
    let mut eps = vec![0.0; d];
    for _ in 0..n {
        eps.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
        for i in 0..d {
            let v: f64 = (0..=i).map(|j| l[(i, j)] * eps[j]).sum();
            out.push((v - drift[i]).exp());
        }
    }
    Ok(out)
}
