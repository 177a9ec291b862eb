//! Closed-form generalization bounds for restricted neural estimators and
//! the rate schedules that make them vanish.
//!
//! All quantities with exponential growth (`α(N)^L`, the covering number
//! `K`) are evaluated in log-space; a value that does not fit in an `f64`
//! is reported as `+∞` alongside its finite logarithm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Bound on `P(‖Z‖_∞ > M)` for the simulated inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailModel {
    /// Centred Gaussian coordinates with variance at most `variance`:
    /// union bound `2·n·(1 − Φ(M/√S))` over the `n` input coordinates.
    Subgaussian { variance: f64 },
    /// Unit Fréchet coordinates: `n·(1 − exp(−1/M))`.
    Frechet,
}

impl TailModel {
    /// Tail probability bound for `coords` input coordinates, capped at 1.
    pub fn tail_probability(&self, coords: usize, radius: f64) -> f64 {
        let n = coords as f64;
        let p = match *self {
            TailModel::Subgaussian { variance } => 2.0 * n * stats::normal_sf(radius / variance.sqrt()),
            TailModel::Frechet => n * -(-1.0 / radius).exp_m1(),
        };
        p.min(1.0)
    }

    pub fn label(&self) -> String {
        match self {
            TailModel::Subgaussian { variance } => format!("subgaussian({variance})"),
            TailModel::Frechet => "frechet".into(),
        }
    }
}

/// Inputs shared by the bound calculators. The loss bound `E = 4pB²` is
/// always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Bound `B` on every parameter coordinate (and network output).
    pub param_bound: f64,
    /// Parameter dimension `p`.
    pub p: usize,
    /// Observation dimension `d`.
    pub d: usize,
    /// Replicates `m`; the network input dimension is `D = m·d`.
    pub m: usize,
    /// Number of layers `L`.
    pub layers: usize,
    pub tail: Option<TailModel>,
}

impl BoundInputs {
    pub fn input_dim(&self) -> usize {
        self.m * self.d
    }

    /// Maximal quadratic loss `E = 4pB²`.
    pub fn loss_bound(&self) -> f64 {
        4.0 * self.p as f64 * self.param_bound * self.param_bound
    }

    fn validate(&self) -> Result<()> {
        if !(self.param_bound > 0.0) || self.p == 0 || self.d == 0 || self.m == 0 || self.layers == 0 {
            return Err(Error::Domain("bound inputs B, p, d, m, L must all be positive".into()));
        }
        Ok(())
    }
}

/// Covering number bound `⌈2B/γ⌉^p · ⌈2M/γ⌉^D`, kept in log-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringNumber {
    pub ln_value: f64,
}

impl CoveringNumber {
    /// The count itself; `+∞` beyond `f64` range.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    /// Whether the count is large enough that only its logarithm is
    /// reported (above `10^300`).
    pub fn is_huge(&self) -> bool {
        self.ln_value > 300.0 * std::f64::consts::LN_10
    }
}

pub fn covering_number_bound(
    param_bound: f64,
    p: usize,
    radius: f64,
    input_dim: usize,
    gamma: f64,
) -> Result<CoveringNumber> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("covering radius must be positive, got {gamma}")));
    }
    let cells = |extent: f64| (2.0 * extent / gamma).ceil().max(1.0);
    Ok(CoveringNumber {
        ln_value: p as f64 * cells(param_bound).ln() + input_dim as f64 * cells(radius).ln(),
    })
}

/// `√((2K·log 2 + 2·log(2/δ))/N)` with `K = exp(ln_k)`.
fn covering_term(ln_k: f64, delta: f64, n: f64) -> f64 {
    let log_term = 2.0 * (2.0 / delta).ln();
    // 2K log 2 may overflow even when the square root would not
    let ln_a = std::f64::consts::LN_2.ln() + std::f64::consts::LN_2 + ln_k;
    if ln_a < 700.0 {
        ((2.0 * ln_k.exp() * std::f64::consts::LN_2 + log_term) / n).sqrt()
    } else {
        (0.5 * (ln_a - n.ln())).exp()
    }
}

fn hoeffding_term(delta: f64, n: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n)).sqrt()
}

fn check_delta_n(delta: f64, n: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("N must be at least 1, got {n}")));
    }
    Ok(())
}

/// High-probability bound on `|R(A_S) − R_N(A_S)|` for a pseudo-robust
/// algorithm:
/// `ε + E·(p_out + √(log(2/δ)/(2N)) + √((2K·log 2 + 2·log(2/δ))/N))`.
pub fn pseudo_robustness_bound(epsilon: f64, loss_bound: f64, p_out: f64, k: f64, delta: f64, n: f64) -> Result<f64> {
    check_delta_n(delta, n)?;
    Ok(pseudo_robustness_bound_ln_k(
        epsilon,
        loss_bound,
        p_out,
        k.ln(),
        delta,
        n,
    ))
}

fn pseudo_robustness_bound_ln_k(epsilon: f64, loss_bound: f64, p_out: f64, ln_k: f64, delta: f64, n: f64) -> f64 {
    if loss_bound == 0.0 {
        return epsilon;
    }
    epsilon + loss_bound * (p_out + hoeffding_term(delta, n) + covering_term(ln_k, delta, n))
}

/// Robustness constant `c = 4Bp(α^L + 1)`.
pub fn robustness_constant(param_bound: f64, p: usize, alpha: f64, layers: usize) -> Result<f64> {
    if layers == 0 {
        return Err(Error::Domain("the network needs at least one layer".into()));
    }
    if !(alpha >= 1.0) {
        return Err(Error::Domain(format!("α must be at least 1, got {alpha}")));
    }
    Ok(4.0 * param_bound * p as f64 * (alpha.powi(layers as i32) + 1.0))
}

/// Rate exponents and the resulting `N`-dependent radius, covering scale and
/// weight bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedules {
    pub xi: f64,
    pub kappa: f64,
    /// `M(N) = N^{(1−2ξ)/(D+p) − ξ − κ}`.
    pub radius: f64,
    /// `γ(N) = N^{−ξ−κ}`.
    pub gamma: f64,
    /// `α(N) = N^{κ/L}`.
    pub alpha: f64,
    /// `|(1−2ξ)/(D+p) − ξ − κ − κ|`, zero up to rounding for the midpoint choice.
    pub identity_residual: f64,
}

/// Midpoint choices `ξ = 1/(2(D+p))`, `κ = (1 − 2/(D+p))/(4(D+p))` and the
/// schedules they induce at training size `n`.
pub fn schedules(n: f64, input_dim: usize, p: usize, layers: usize) -> Result<Schedules> {
    let total = (input_dim + p) as f64;
    if input_dim + p <= 2 {
        return Err(Error::Domain(format!(
            "degenerate rates: D + p = {} gives κ <= 0",
            input_dim + p
        )));
    }
    if layers == 0 {
        return Err(Error::Domain("the network needs at least one layer".into()));
    }
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("N must be at least 1, got {n}")));
    }
    let xi = 1.0 / (2.0 * total);
    let kappa = (1.0 - 2.0 / total) / (4.0 * total);
    let radius_exp = (1.0 - 2.0 * xi) / total - xi - kappa;
    let ln_n = n.ln();
    Ok(Schedules {
        xi,
        kappa,
        radius: (radius_exp * ln_n).exp(),
        gamma: (-(xi + kappa) * ln_n).exp(),
        alpha: (kappa / layers as f64 * ln_n).exp(),
        identity_residual: (radius_exp - kappa).abs(),
    })
}

/// The four terms of `ζ₁` and the combined bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaTerms {
    /// `4pB(α^L + 1)γ`.
    pub robustness: f64,
    /// `4pB² P(‖Z‖_∞ > M)`.
    pub tail: f64,
    /// `4pB² √(log(2/δ)/(2N))`.
    pub hoeffding: f64,
    /// `4pB² √((2K log 2 + 2 log(2/δ))/N)`.
    pub covering: f64,
    pub ln_k: f64,
    pub tail_probability: f64,
}

impl ZetaTerms {
    pub fn zeta1(&self) -> f64 {
        self.robustness + self.tail + self.hoeffding + self.covering
    }
}

/// `ζ₁` from explicit ingredients: weight bound `α`, covering scale `γ`,
/// outlier probability `p_out` and log covering number `ln K`.
#[allow(clippy::too_many_arguments)]
pub fn zeta1_from_parts(
    param_bound: f64,
    p: usize,
    layers: usize,
    alpha: f64,
    gamma: f64,
    p_out: f64,
    ln_k: f64,
    delta: f64,
    n: f64,
) -> Result<ZetaTerms> {
    check_delta_n(delta, n)?;
    let loss_bound = 4.0 * p as f64 * param_bound * param_bound;
    let ln_alpha_l = layers as f64 * alpha.ln();
    Ok(ZetaTerms {
        robustness: 4.0 * p as f64 * param_bound * (ln_alpha_l.exp() + 1.0) * gamma,
        tail: loss_bound * p_out,
        hoeffding: loss_bound * hoeffding_term(delta, n),
        covering: loss_bound * covering_term(ln_k, delta, n),
        ln_k,
        tail_probability: p_out,
    })
}

/// `ζ₂ = pB² √(8 log(2/δ)/N)`, the Hoeffding bound on `R_N(φ*) − R(φ*)`.
pub fn zeta2(param_bound: f64, p: usize, delta: f64, n: f64) -> Result<f64> {
    check_delta_n(delta, n)?;
    Ok(p as f64 * param_bound * param_bound * (8.0 * (2.0 / delta).ln() / n).sqrt())
}

/// `ζ₁(δ, N)`, `ζ₂(δ, N)` and `ζ = ζ₁(δ/2, N) + ζ₂(δ/2, N)` under the rate
/// schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zeta {
    pub schedules: Schedules,
    pub terms: ZetaTerms,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta: f64,
}

fn zeta1_scheduled(delta: f64, n: f64, inputs: &BoundInputs, s: &Schedules) -> Result<ZetaTerms> {
    let tail = inputs
        .tail
        .ok_or_else(|| Error::Config("a tail model is required for ζ".into()))?;
    let dim = inputs.input_dim();
    let k = covering_number_bound(inputs.param_bound, inputs.p, s.radius, dim, s.gamma)?;
    zeta1_from_parts(
        inputs.param_bound,
        inputs.p,
        inputs.layers,
        s.alpha,
        s.gamma,
        tail.tail_probability(dim, s.radius),
        k.ln_value,
        delta,
        n,
    )
}

pub fn zeta(delta: f64, n: f64, inputs: &BoundInputs) -> Result<Zeta> {
    inputs.validate()?;
    check_delta_n(delta, n)?;
    let s = schedules(n, inputs.input_dim(), inputs.p, inputs.layers)?;
    let terms = zeta1_scheduled(delta, n, inputs, &s)?;
    let half = zeta1_scheduled(delta / 2.0, n, inputs, &s)?;
    Ok(Zeta {
        schedules: s,
        terms,
        zeta1: terms.zeta1(),
        zeta2: zeta2(inputs.param_bound, inputs.p, delta, n)?,
        zeta: half.zeta1() + zeta2(inputs.param_bound, inputs.p, delta / 2.0, n)?,
    })
}

/// `ln N(m)` for `N(m) ≥ ε^{−(md+p)} exp(log 2 · (md+p)²)`.
pub fn ln_training_size_lower_bound(epsilon: f64, m: usize, d: usize, p: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let total = (m * d + p) as f64;
    Ok(-total * epsilon.ln() + std::f64::consts::LN_2 * total * total)
}

/// Training size sufficient for the generalization error to decay at rate
/// `ε`; returned unrounded, `+∞` when it exceeds `f64` range.
pub fn training_size_lower_bound(epsilon: f64, m: usize, d: usize, p: usize) -> Result<f64> {
    Ok(ln_training_size_lower_bound(epsilon, m, d, p)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn covering_examples() {
        let k = covering_number_bound(1.0, 1, 2.0, 2, 1.0).unwrap();
        assert!((k.value() - 32.0).abs() < 1e-9);
        assert!((covering_number_bound(1.0, 1, 2.0, 2, 4.0).unwrap().value() - 1.0).abs() < 1e-12);
        assert!(covering_number_bound(1.0, 1, 2.0, 2, 0.0).is_err());
        let big = covering_number_bound(1.0, 1, 100.0, 500, 1e-3).unwrap();
        assert!(big.is_huge() && big.ln_value.is_finite());
    }

    #[test]
    fn covering_monotone_in_radius() {
        for b in [0.3, 1.0, 2.5] {
            for m in [0.5, 2.0, 7.0] {
                let mut gamma = 8.0;
                let mut last = covering_number_bound(b, 2, m, 3, gamma).unwrap().ln_value;
                for _ in 0..12 {
                    gamma /= 2.0;
                    let next = covering_number_bound(b, 2, m, 3, gamma).unwrap().ln_value;
                    assert!(next >= last);
                    last = next;
                }
            }
        }
    }

    #[test]
    fn robustness_bound_examples() {
        let delta = 2.0 / E;
        let expected = (1.0f64 / 200.0).sqrt() + ((2.0 * LN_2 + 2.0) / 100.0).sqrt();
        let got = pseudo_robustness_bound(0.0, 1.0, 0.0, 1.0, delta, 100.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(pseudo_robustness_bound(0.37, 0.0, 0.2, 9.0, 0.1, 10.0).unwrap(), 0.37);
        let a = pseudo_robustness_bound(0.0, 1.0, 0.0, 3.0, 0.1, 50.0).unwrap();
        let b = pseudo_robustness_bound(0.0, 1.0, 0.0, 3.0, 0.1, 200.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(pseudo_robustness_bound(0.0, 1.0, 0.0, 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn robustness_bound_is_monotone() {
        let base = [0.1, 1.0, 0.05, 4.0, 0.1, 100.0];
        let f = |v: [f64; 6]| pseudo_robustness_bound(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap();
        let b0 = f(base);
        for (idx, increasing) in [(0, true), (1, true), (2, true), (3, true), (4, false), (5, false)] {
            let mut v = base;
            v[idx] *= 1.5;
            let b1 = f(v);
            if increasing {
                assert!(b1 >= b0, "coordinate {idx}");
            } else {
                assert!(b1 <= b0, "coordinate {idx}");
            }
            assert!(b1 >= 0.0);
        }
    }

    #[test]
    fn robustness_constant_examples() {
        assert_eq!(robustness_constant(1.0, 1, 1.0, 3).unwrap(), 8.0);
        assert_eq!(robustness_constant(1.0, 2, 2.0, 2).unwrap(), 40.0);
        assert!(robustness_constant(1.0, 1, 1.0, 0).is_err());
    }

    #[test]
    fn schedule_examples() {
        let s = schedules(2f64.powi(36), 2, 1, 2).unwrap();
        assert!((s.xi - 1.0 / 6.0).abs() < 1e-15);
        assert!((s.kappa - 1.0 / 36.0).abs() < 1e-15);
        assert!((s.radius - 2.0).abs() < 1e-12);
        let s = schedules(2f64.powi(72), 2, 1, 2).unwrap();
        assert!((s.alpha - 2.0).abs() < 1e-12);
        assert!(schedules(10.0, 1, 1, 1).is_err());
        for dim in 1..40 {
            for p in 1..5 {
                if dim + p > 2 {
                    assert!(schedules(1e4, dim, p, 2).unwrap().identity_residual < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zeta2_example() {
        assert!((zeta2(1.0, 1, 2.0 / E, 8.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeta1_with_trivial_parts() {
        let (b, p, delta, n) = (0.8, 2, 0.05, 5000.0);
        let terms = zeta1_from_parts(b, p, 2, 1.5, 0.01, 0.0, 0.0, delta, n).unwrap();
        let e = 4.0 * p as f64 * b * b;
        let expected = 4.0 * p as f64 * b * (1.5f64.powi(2) + 1.0) * 0.01
            + e * ((2.0 / delta).ln() / (2.0 * n)).sqrt()
            + e * ((2.0 * LN_2 + 2.0 * (2.0 / delta).ln()) / n).sqrt();
        assert!((terms.zeta1() - expected).abs() < 1e-12);
    }

    #[test]
    fn zeta_decreases_for_both_tails() {
        for tail in [TailModel::Subgaussian { variance: 1.0 }, TailModel::Frechet] {
            let inputs = BoundInputs {
                param_bound: 1.0,
                p: 1,
                d: 2,
                m: 1,
                layers: 2,
                tail: Some(tail),
            };
            let values: Vec<f64> = (3..=9)
                .map(|e| zeta(0.05, 10f64.powi(e), &inputs).unwrap().zeta)
                .collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
            assert!(values.iter().all(|v| *v >= 0.0));
        }
        let inputs = BoundInputs {
            param_bound: 1.0,
            p: 1,
            d: 2,
            m: 1,
            layers: 2,
            tail: None,
        };
        assert!(matches!(zeta(0.05, 1e3, &inputs), Err(Error::Config(_))));
    }

    #[test]
    fn training_size_examples() {
        assert!((training_size_lower_bound(0.5, 2, 1, 1).unwrap() - 4096.0).abs() < 1e-9);
        let limit = (LN_2 * 9.0).exp();
        assert!((training_size_lower_bound(1.0 - 1e-12, 2, 1, 1).unwrap() / limit - 1.0).abs() < 1e-9);
        // log-bound: quadratic in (md+p) plus linear times log(1/ε)
        for total in 2..20usize {
            let lb = ln_training_size_lower_bound(0.3, total - 1, 1, 1).unwrap();
            let t = total as f64;
            assert!((lb - (LN_2 * t * t + t * (1.0f64 / 0.3).ln())).abs() < 1e-9 * lb.abs());
        }
    }
}
