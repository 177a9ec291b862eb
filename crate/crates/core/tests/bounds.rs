use neuralbayes::bounds::{
    covering_number_bound, pseudo_robustness_bound, robustness_constant, schedules, training_size_lower_bound, zeta,
    zeta1_from_parts, zeta2, BoundInputs, TailModel,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn inputs(m: usize, tail: TailModel) -> BoundInputs {
    BoundInputs {
        param_bound: 1.0,
        p: 1,
        d: 1,
        m,
        layers: 2,
        tail: Some(tail),
    }
}

#[test]
fn covering_number_matches_direct_counting() {
    for (b, p, m, d, g) in [
        (1.0, 1, 2.0, 2, 1.0),
        (0.7, 2, 3.3, 3, 0.4),
        (2.0, 1, 1.0, 4, 0.25),
        (1.0, 3, 5.0, 1, 2.5),
    ] {
        let cells = |r: f64| (2.0 * r / g as f64).ceil();
        let exact = cells(b).powi(p as i32) * cells(m).powi(d as i32);
        let k = covering_number_bound(b, p, m, d, g).unwrap();
        assert!((k.value() - exact).abs() <= 1e-9 * exact, "{} vs {exact}", k.value());
    }
    assert_eq!(
        covering_number_bound(1.0, 1, 2.0, 2, 1.0).unwrap().value().round(),
        32.0
    );
    assert_eq!(covering_number_bound(1.0, 2, 3.0, 2, 6.0).unwrap().value().round(), 1.0);
}

#[test]
fn pseudo_robustness_by_hand() {
    let delta = 2.0 / std::f64::consts::E;
    let hand = (1.0f64 / 200.0).sqrt() + ((2.0 * 2f64.ln() + 2.0) / 100.0).sqrt();
    let value = pseudo_robustness_bound(0.0, 1.0, 0.0, 1.0, delta, 100.0).unwrap();
    assert!((value - hand).abs() <= 1e-12);
    assert!((value - 0.25472954566).abs() <= 1e-6);
    assert_eq!(pseudo_robustness_bound(0.3, 0.0, 0.2, 5.0, 0.1, 50.0).unwrap(), 0.3);
    let a = pseudo_robustness_bound(0.0, 1.0, 0.0, 3.0, 0.1, 100.0).unwrap();
    let b = pseudo_robustness_bound(0.0, 1.0, 0.0, 3.0, 0.1, 400.0).unwrap();
    assert!((b - a / 2.0).abs() <= 1e-15);
}

#[test]
fn pseudo_robustness_is_monotone() {
    let base = [0.1, 1.0, 0.05, 4.0, 0.1, 200.0];
    let f = |v: [f64; 6]| pseudo_robustness_bound(v[0], v[1], v[2], v[3], v[4], v[5]).unwrap();
    let b0 = f(base);
    for (i, increasing) in [(0, true), (1, true), (2, true), (3, true), (4, false), (5, false)] {
        let mut v = base;
        v[i] *= 1.5;
        let b1 = f(v);
        if increasing {
            assert!(b1 >= b0, "argument {i}");
        } else {
            assert!(b1 <= b0, "argument {i}");
        }
    }
}

#[test]
fn robustness_constant_examples() {
    assert_eq!(robustness_constant(1.0, 1, 1.0, 3).unwrap(), 8.0);
    assert_eq!(robustness_constant(1.0, 2, 2.0, 2).unwrap(), 40.0);
    assert!(robustness_constant(1.0, 1, 2.0, 0).is_err());
}

#[test]
fn schedule_exponent_identity_on_a_grid() {
    for dim in 1..=12 {
        for p in 1..=4 {
            if dim + p <= 2 {
                assert!(schedules(1e4, dim, p, 2).is_err());
                continue;
            }
            let s = schedules(1e4, dim, p, 2).unwrap();
            let n = (dim + p) as f64;
            assert!((s.xi - 1.0 / (2.0 * n)).abs() <= 1e-15);
            assert!((s.kappa - (1.0 - 2.0 / n) / (4.0 * n)).abs() <= 1e-15);
            assert!(((1.0 - 2.0 * s.xi) / n - s.xi - s.kappa - s.kappa).abs() <= 1e-12);
            assert!(s.identity_residual.abs() <= 1e-12);
        }
    }
    let s = schedules(2f64.powi(36), 2, 1, 2).unwrap();
    assert!((s.xi - 1.0 / 6.0).abs() <= 1e-12 && (s.kappa - 1.0 / 36.0).abs() <= 1e-12);
    assert!((s.radius - 2.0).abs() <= 1e-12);
    assert!((schedules(2f64.powi(72), 2, 1, 2).unwrap().alpha - 2.0).abs() <= 1e-12);
}

#[test]
fn zeta_terms_from_independent_arithmetic() {
    let delta = 0.05;
    let n = 1e6;
    for (m, tail) in [(2, TailModel::Subgaussian { variance: 1.0 }), (4, TailModel::Frechet)] {
        let inp = inputs(m, tail);
        let z = zeta(delta, n, &inp).unwrap();
        let dim = m as f64;
        let total = dim + 1.0;
        let xi = 1.0 / (2.0 * total);
        let kappa = (1.0 - 2.0 / total) / (4.0 * total);
        let radius = n.powf(kappa);
        let gamma = n.powf(-xi - kappa);
        let alpha = n.powf(kappa / 2.0);
        let p_out = match tail {
            TailModel::Subgaussian { .. } => 2.0 * dim * (1.0 - Normal::standard().cdf(radius)),
            TailModel::Frechet => dim * (1.0 - (-1.0 / radius).exp()),
        }
        .min(1.0);
        let ln_k = (2.0 / gamma).ceil().ln() + dim * (2.0 * radius / gamma).ceil().ln();
        let e = 4.0;
        let l = (2.0 / delta).ln();
        let a = 4.0 * (alpha * alpha + 1.0) * gamma;
        let b = e * p_out;
        let c = e * (l / (2.0 * n)).sqrt();
        let d = e * ((2.0 * ln_k.exp() * 2f64.ln() + 2.0 * l) / n).sqrt();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        assert!(rel(z.terms.robustness, a) < 1e-9);
        assert!(rel(z.terms.tail, b) < 1e-9);
        assert!(rel(z.terms.hoeffding, c) < 1e-12);
        assert!(rel(z.terms.ln_k, ln_k) < 1e-12);
        if d.is_finite() {
            assert!(rel(z.terms.covering, d) < 1e-9);
        }
        assert!(rel(z.zeta2, (8.0 * l / n).sqrt()) < 1e-12);
    }
}

#[test]
fn zeta1_collapses_without_tail_and_covering() {
    let (delta, n) = (0.1, 5e3);
    let t = zeta1_from_parts(1.5, 2, 3, 1.2, 0.01, 0.0, 0.0, delta, n).unwrap();
    let e = 4.0 * 2.0 * 1.5 * 1.5;
    let l = (2.0f64 / delta).ln();
    let hand = 4.0 * 2.0 * 1.5 * (1.2f64.powi(3) + 1.0) * 0.01
        + e * (l / (2.0 * n)).sqrt()
        + e * ((2.0 * 2f64.ln() + 2.0 * l) / n).sqrt();
    assert!((t.zeta1() - hand).abs() <= 1e-12);
    assert!((zeta2(1.0, 1, 2.0 / std::f64::consts::E, 8.0).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn zeta_decreases_to_zero_for_both_tails() {
    for tail in [TailModel::Subgaussian { variance: 1.0 }, TailModel::Frechet] {
        let inp = inputs(2, tail);
        let values: Vec<f64> = (3..=40)
            .map(|k| zeta(0.05, 10f64.powi(k), &inp).unwrap().zeta)
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{tail:?}: {values:?}");
        assert!(values.iter().all(|v| *v >= 0.0));
        let far = zeta(0.05, 1e300, &inp).unwrap().zeta;
        assert!(far < 1e-2 * values[0], "{tail:?}: ζ(1e300) = {far}");
    }
    let mut none = inputs(2, TailModel::Frechet);
    none.tail = None;
    assert!(zeta(0.05, 1e4, &none).is_err());
}

#[test]
fn training_size_bound_examples() {
    assert!((training_size_lower_bound(0.5, 2, 1, 1).unwrap() - 4096.0).abs() <= 1e-9);
    let limit = (2f64.ln() * 9.0).exp();
    assert!((training_size_lower_bound(1.0 - 1e-12, 2, 1, 1).unwrap() - limit).abs() < 1e-6 * limit);
}
