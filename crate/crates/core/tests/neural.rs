use neuralbayes::estimation::{evaluate_on, fit_neural_estimator, make_training_set};
use neuralbayes::models::{linear_gaussian_sample, Model, Prior};
use neuralbayes::neural::{
    backward, loss, max_row_l1, train_from, Architecture, InputTransform, Network, Optimizer, TrainConfig,
};
use neuralbayes::rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

fn random_batch(d: usize, p: usize, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, "batch", 0);
    let xs = (0..n * d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let ts = (0..n * p).map(|_| r.sample::<f64, _>(StandardNormal) * 0.5).collect();
    (xs, ts)
}

/// ReLU and clip activation pattern over a batch; a change means the
/// perturbation crossed a kink.
fn pattern(net: &Network, xs: &[f64]) -> Vec<bool> {
    let d = net.input_dim();
    let mut out = Vec::new();
    for x in xs.chunks(d) {
        out.extend(net.hidden_preactivations(x).iter().map(|v| *v > 0.0));
        if let Some(b) = net.clip {
            for y in net.forward_unclipped(x).unwrap() {
                out.push(y > b);
                out.push(y > -b);
            }
        }
    }
    out
}

#[test]
fn backprop_matches_central_differences() {
    let layouts: [&[usize]; 5] = [&[3, 1], &[4, 5, 2], &[2, 6, 4, 1], &[5, 3, 3], &[3, 8, 2]];
    let mut checked = 0;
    for k in 0..20u64 {
        let dims = layouts[k as usize % layouts.len()];
        let clip = (k % 2 == 1).then_some(1.5);
        let net = Network::init(dims, clip, 1000 + k).unwrap();
        let (d, p) = (dims[0], *dims.last().unwrap());
        let (xs, ts) = random_batch(d, p, 7, 2000 + k);
        let grad: Vec<f64> = backward(&net, &xs, &ts).unwrap().values().collect();
        let base = net.params();
        let base_pattern = pattern(&net, &xs);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let shifted = |delta: f64| {
                let mut q = base.clone();
                q[i] += delta;
                let mut n2 = net.clone();
                n2.set_params(&q).unwrap();
                n2
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            if pattern(&plus, &xs) != base_pattern || pattern(&minus, &xs) != base_pattern {
                continue;
            }
            let fd = (loss(&plus, &xs, &ts).unwrap() - loss(&minus, &xs, &ts).unwrap()) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(
            worst <= 1e-5,
            "net {k} ({dims:?}, clip {clip:?}): worst relative error {worst}"
        );
    }
    assert!(checked > 300);
}

#[test]
fn clipped_outputs_stay_in_bounds() {
    let b = 0.75;
    let net = Network::init(&[4, 16, 16, 2], Some(b), 5).unwrap();
    let mut r = rng::stream(6, "inputs", 0);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| r.sample::<f64, _>(StandardNormal) * 20.0).collect();
        let y = net.forward(&x).unwrap();
        let raw = net.forward_unclipped(&x).unwrap();
        for (yi, ri) in y.iter().zip(&raw) {
            assert!(yi.abs() <= b);
            assert!((yi - ri.clamp(-b, b)).abs() <= 1e-12);
        }
    }
}

#[test]
fn linear_network_recovers_the_bayes_slope() {
    let data = linear_gaussian_sample(0.0, 1.0, 1.0, 1, 100_000, 31).unwrap();
    let mut cfg = TrainConfig::new(256, 20, 32);
    cfg.optimizer = Optimizer::adam(1e-2);
    let ck = fit_neural_estimator(&data, &Architecture::new(vec![]), &cfg).unwrap();
    let layer = &ck.network.layers[0];
    assert!((layer.weights[0] - 0.5).abs() <= 0.03, "slope {}", layer.weights[0]);
    assert!(layer.biases[0].abs() <= 0.03, "intercept {}", layer.biases[0]);
    let test = make_training_set(
        &Model::LinearGaussian { sigma: 1.0 },
        &Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
        1,
        5_000,
        33,
    )
    .unwrap();
    let f = |x: &[f64]| ck.network.forward(x).unwrap();
    let est = evaluate_on(&f, &test).unwrap();
    assert!(
        (est.risk - 0.5).abs() <= 3.0 * est.stderr,
        "risk {} ± {}",
        est.risk,
        est.stderr
    );
}

#[test]
fn projected_training_respects_the_row_budget() {
    let data = make_training_set(&Model::Logistic { d: 2 }, &Prior::unit_interval(), 3, 400, 41).unwrap();
    let mut cfg = TrainConfig::new(32, 15, 42);
    cfg.optimizer = Optimizer::adam(5e-2);
    cfg.restriction = Some(5.0);
    let arch = Architecture::new(vec![16, 8])
        .clipped(1.0)
        .with_input_transform(InputTransform::Log);
    let ck = fit_neural_estimator(&data, &arch, &cfg).unwrap();
    for layer in &ck.network.layers {
        for r in 0..layer.outputs {
            let l1: f64 = layer.row(r).iter().map(|v| v.abs()).sum();
            assert!(l1 <= 5.0 + 1e-12, "row L1 {l1}");
        }
    }
    assert!(max_row_l1(&ck.network) <= 5.0 + 1e-12);
}

#[test]
fn keep_best_train_returns_the_lowest_training_risk_iterate() {
    let data = make_training_set(&Model::Logistic { d: 2 }, &Prior::unit_interval(), 2, 200, 51).unwrap();
    let mut cfg = TrainConfig::new(16, 30, 52);
    cfg.optimizer = Optimizer::adam(0.3);
    cfg.keep_best_train = true;
    let arch = Architecture::new(vec![8]).clipped(1.0);
    let ck = fit_neural_estimator(&data, &arch, &cfg).unwrap();
    let min = ck.train_trace.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(ck.train_risk, min);
    assert_eq!(ck.train_trace[ck.best_epoch], min);
    let recomputed = loss(&ck.network, &data.x, &data.theta).unwrap();
    assert!((recomputed - min).abs() <= 1e-12);

    cfg.keep_best_train = false;
    let last = fit_neural_estimator(&data, &arch, &cfg).unwrap();
    assert_eq!(last.best_epoch, last.epochs - 1);
    assert_eq!(last.train_trace, ck.train_trace);
}

#[test]
fn warm_start_continues_from_the_given_network() {
    let data = make_training_set(&Model::Logistic { d: 2 }, &Prior::unit_interval(), 2, 200, 61).unwrap();
    let cfg = TrainConfig::new(20, 5, 62);
    let arch = Architecture::new(vec![6]).clipped(1.0);
    let first = fit_neural_estimator(&data, &arch, &cfg).unwrap();
    let again = train_from(&data, first.network.clone(), &cfg, 0).unwrap();
    assert_eq!(again.epochs, 5);
    assert!(again.train_risk.is_finite());
    assert_ne!(again.network, first.network);
}

#[test]
fn sorted_log_transform_ignores_replicate_and_coordinate_order() {
    let t = InputTransform::SortedLog { dim: 3 };
    let x = [1.0, 5.0, 2.0, 0.5, 0.5, 9.0, 3.0, 1.0, 4.0];
    let y = [9.0, 0.5, 0.5, 4.0, 1.0, 3.0, 2.0, 1.0, 5.0];
    let (mut a, mut b) = (Vec::new(), Vec::new());
    t.apply(&x, &mut a);
    t.apply(&y, &mut b);
    assert_eq!(a, b);
    let expected: Vec<f64> = [9.0, 0.5, 0.5, 5.0, 2.0, 1.0, 4.0, 3.0, 1.0]
        .iter()
        .map(|v: &f64| v.ln())
        .collect();
    assert_eq!(a, expected);
    assert_eq!(InputTransform::parse(&t.label()).unwrap(), t);
}
