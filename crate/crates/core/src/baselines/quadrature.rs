//! Gauss–Legendre quadrature and the quadrature posterior mean for the
//! logistic model under a uniform prior on `(0, 1)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::baselines::{Diagnostics, Method, PosteriorSummary};
use crate::error::{Error, Result};
use crate::models::logistic::{logdensity_from_logs, MAX_DENSITY_DIM, Z_FLOOR};
use crate::stats::log_sum_exp;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the usual cosine initial guesses.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n and P_{n-1}
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 0 {
                    1.0
                } else if n == 1 {
                    x
                } else {
                    p1
                };
                let pn1 = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pn1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        (
            self.nodes.iter().map(|x| mid + half * x).collect(),
            self.weights.iter().map(|w| half * w).collect(),
        )
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = self.on_interval(a, b);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Cached `n`-point rule.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
        .clone()
}

/// Clamped log-observations of an `m × d` data matrix, rows sorted so the
/// result does not depend on the order of the replicates.
pub(crate) fn canonical_log_rows(data: &[f64], d: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 || d > MAX_DENSITY_DIM {
        return Err(Error::UnsupportedDimension {
            dim: d,
            max: MAX_DENSITY_DIM,
        });
    }
    if data.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: data.len() % d,
        });
    }
    if data.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("logistic data must be strictly positive".into()));
    }
    let mut rows: Vec<Vec<f64>> = data
        .chunks(d)
        .map(|r| r.iter().map(|v| v.max(Z_FLOOR).ln()).collect())
        .collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

pub(crate) fn log_likelihood(rows: &[Vec<f64>], theta: f64) -> f64 {
    rows.iter().map(|r| logdensity_from_logs(r, theta)).sum()
}

fn posterior_mean_with(rows: &[Vec<f64>], nodes: usize) -> f64 {
    let rule = gauss_legendre(nodes);
    let (x, w) = rule.on_interval(0.0, 1.0);
    let log_w: Vec<f64> = x
        .iter()
        .zip(&w)
        .map(|(t, w)| w.ln() + log_likelihood(rows, *t))
        .collect();
    let log_num: Vec<f64> = log_w.iter().zip(&x).map(|(lw, t)| lw + t.ln()).collect();
    (log_sum_exp(&log_num) - log_sum_exp(&log_w)).exp()
}

/// Largest node count tried before giving up on refinement.
pub const MAX_NODES: usize = 4096;

/// Posterior mean of `θ` under a uniform prior on `(0, 1)` for logistic data
/// (`m × d`, row-major), by Gauss–Legendre quadrature with log-sum-exp
/// weights. The rule is doubled until the mean moves by less than `1e-8`.
pub fn logistic_posterior_quadrature(data: &[f64], d: usize, nodes: usize) -> Result<PosteriorSummary> {
    if nodes < 64 {
        return Err(Error::Config(format!(
            "quadrature needs at least 64 nodes, got {nodes}"
        )));
    }
    let rows = canonical_log_rows(data, d)?;
    let mut n = nodes;
    let mut current = posterior_mean_with(&rows, n);
    loop {
        let refined = posterior_mean_with(&rows, 2 * n);
        let delta = (refined - current).abs();
        if !refined.is_finite() {
            return Err(Error::OracleFailure("non-finite posterior mean".into()));
        }
        if delta < 1e-8 {
            return Ok(PosteriorSummary {
                method: Method::Quadrature,
                posterior_mean: vec![current],
                diagnostics: Diagnostics {
                    quadrature_nodes: Some(n),
                    refinement_delta: Some(delta),
                    ..Diagnostics::default()
                },
            });
        }
        if 2 * n >= MAX_NODES {
            return Err(Error::OracleFailure(format!(
                "posterior mean still moved by {delta:e} between {n} and {} nodes",
                2 * n
            )));
        }
        n *= 2;
        current = refined;
    }
}
