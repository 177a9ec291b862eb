//! The amortized estimation pipeline: simulated training sets, fitted neural
//! estimators, Monte Carlo risks and the risk decomposition.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Model, Prior};
use crate::neural::{self, Architecture, Checkpoint, Regularization, TrainConfig};
use crate::rng;
use crate::stats;

/// `N` simulated pairs `(Z_i, θ_i)`.
///
/// Row `i` of `x` is the flattened sample `z¹ … zᵐ` (replicate-major, then
/// coordinate), of length `m·d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub p: usize,
    pub seed: u64,
    /// Stream label the records were drawn from.
    pub purpose: String,
}

impl TrainingSet {
    pub fn input_dim(&self) -> usize {
        self.m * self.d
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        let dim = self.input_dim();
        &self.x[i * dim..(i + 1) * dim]
    }

    pub fn theta_row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.p..(i + 1) * self.p]
    }

    /// Seed-stream identifiers of record `i` (parameter draw, data draw).
    pub fn stream_ids(&self, i: u64) -> (u64, u64) {
        (
            rng::stream_id(&format!("{}-theta", self.purpose), i),
            rng::stream_id(&format!("{}-data", self.purpose), i),
        )
    }

    /// The first `n` records.
    pub fn head(&self, n: usize) -> TrainingSet {
        let n = n.min(self.n);
        TrainingSet {
            x: self.x[..n * self.input_dim()].to_vec(),
            theta: self.theta[..n * self.p].to_vec(),
            n,
            ..self.clone()
        }
    }

    /// Keeps only the first `k` replicates of every record.
    pub fn first_replicates(&self, k: usize) -> TrainingSet {
        let k = k.min(self.m);
        let x = (0..self.n)
            .flat_map(|i| self.x_row(i)[..k * self.d].iter().copied())
            .collect();
        TrainingSet {
            x,
            m: k,
            ..self.clone()
        }
    }
}

/// Draws `n` records from the `purpose` streams of `seed`.
pub fn make_set(model: &Model, prior: &Prior, m: usize, n: usize, seed: u64, purpose: &str) -> Result<TrainingSet> {
    model.validate()?;
    prior.validate()?;
    if n == 0 {
        return Err(Error::Config("training set needs N >= 1".into()));
    }
    if prior.dim() != model.param_dim() {
        return Err(Error::Config(format!(
            "prior dimension {} does not match model parameter dimension {}",
            prior.dim(),
            model.param_dim()
        )));
    }
    let theta_label = format!("{purpose}-theta");
    let data_label = format!("{purpose}-data");
    let records: Vec<(Vec<f64>, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let theta = prior.draw(&mut rng::stream(seed, &theta_label, i));
            let z = model.simulate(&theta, m, &mut rng::stream(seed, &data_label, i))?;
            Ok((theta, z))
        })
        .collect::<Result<_>>()?;
    let mut x = Vec::with_capacity(n * m * model.dim());
    let mut theta = Vec::with_capacity(n * model.param_dim());
    for (t, z) in records {
        theta.extend(t);
        x.extend(z);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("simulator produced non-finite values".into()));
    }
    Ok(TrainingSet {
        x,
        theta,
        n,
        m,
        d: model.dim(),
        p: model.param_dim(),
        seed,
        purpose: purpose.into(),
    })
}

/// Training data: `N` i.i.d. pairs with `θ_i ~ prior`, `Z_i ~ P_{θ_i}^m`.
pub fn make_training_set(model: &Model, prior: &Prior, m: usize, n: usize, seed: u64) -> Result<TrainingSet> {
    make_set(model, prior, m, n, seed, "train")
}

/// Test data, drawn from streams disjoint from every training stream.
pub fn make_test_set(model: &Model, prior: &Prior, m: usize, n: usize, seed: u64) -> Result<TrainingSet> {
    make_set(model, prior, m, n, seed, "test")
}

/// Which estimator family a fitted network belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorLabel {
    Erm,
    Restricted { alpha: f64 },
    Regularized,
}

impl EstimatorLabel {
    pub fn of(cfg: &TrainConfig) -> Self {
        match (&cfg.regularization, cfg.restriction) {
            (Regularization::None, Some(alpha)) => EstimatorLabel::Restricted { alpha },
            (Regularization::None, None) => EstimatorLabel::Erm,
            _ => EstimatorLabel::Regularized,
        }
    }
}

impl std::fmt::Display for EstimatorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorLabel::Erm => write!(f, "erm"),
            EstimatorLabel::Restricted { alpha } => write!(f, "restricted({alpha})"),
            EstimatorLabel::Regularized => write!(f, "regularized"),
        }
    }
}

/// Trains a network on `data` and labels the checkpoint by estimator family.
pub fn fit_neural_estimator(data: &TrainingSet, arch: &Architecture, cfg: &TrainConfig) -> Result<Checkpoint> {
    let mut ck = neural::train(data, arch, cfg)?;
    ck.label = EstimatorLabel::of(cfg).to_string();
    Ok(ck)
}

/// Monte Carlo risk estimate with per-record losses.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    pub risk: f64,
    pub stderr: f64,
    pub losses: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub estimates: Vec<Vec<f64>>,
}

impl RiskEstimate {
    pub fn n(&self) -> usize {
        self.losses.len()
    }
}

/// Squared-error risk of `estimator` over the records of `set`.
pub fn evaluate_on<F>(estimator: &F, set: &TrainingSet) -> Result<RiskEstimate>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + ?Sized,
{
    let estimates: Vec<Vec<f64>> = (0..set.n)
        .into_par_iter()
        .map(|i| {
            let est = estimator(set.x_row(i));
            if est.len() != set.p || est.iter().any(|v| !v.is_finite()) {
                Err(Error::Evaluation { row: i })
            } else {
                Ok(est)
            }
        })
        .collect::<Result<_>>()?;
    let losses: Vec<f64> = estimates
        .iter()
        .enumerate()
        .map(|(i, e)| e.iter().zip(set.theta_row(i)).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    Ok(RiskEstimate {
        risk: stats::mean(&losses),
        stderr: stats::std_err(&losses),
        thetas: (0..set.n).map(|i| set.theta_row(i).to_vec()).collect(),
        losses,
        estimates,
    })
}

/// Monte Carlo estimate of `R(f) = E_{θ∼Π} E_θ ‖f(Z) − θ‖²` on `n_test`
/// fresh test records.
pub fn evaluate_risk<F>(
    estimator: &F,
    model: &Model,
    prior: &Prior,
    m: usize,
    n_test: usize,
    seed: u64,
) -> Result<RiskEstimate>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + ?Sized,
{
    if n_test < 100 {
        return Err(Error::Config(format!("n_test must be at least 100, got {n_test}")));
    }
    let set = make_test_set(model, prior, m, n_test, seed)?;
    evaluate_on(estimator, &set)
}

/// Losses of a network on a shared test set and its empirical risk on the
/// training set of the trained estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRisks {
    pub test_losses: Vec<f64>,
    /// `R_N` on the training set `S` of the trained estimator.
    pub empirical_risk: f64,
}

/// One row of the decomposition table; all population risks are paired
/// Monte Carlo means over the same test records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub bayes_risk: f64,
    pub optimal_risk: f64,
    pub trained_risk: f64,
    /// `R(φ*) − R(f*)`.
    pub approximation_error: f64,
    /// `R(φ^N) − R(φ*)`.
    pub generalization_error: f64,
    /// `R(φ^N) − R_N(φ^N)`.
    pub generalization_gap: f64,
    /// `R_N(φ^N) − R_N(φ*)`.
    pub empirical_excess: f64,
    /// `R_N(φ*) − R(φ*)`.
    pub optimal_sampling_error: f64,
    pub bayes_stderr: f64,
    pub approximation_stderr: f64,
    pub generalization_stderr: f64,
    pub n_test: usize,
}

fn paired_stderr(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    stats::std_err(&diff)
}

/// Splits the trained estimator's risk into Bayes risk, approximation error
/// and generalization error, and the generalization error further into the
/// train/test gap, the empirical excess over the optimal network, and the
/// optimal network's sampling error.
pub fn decompose(bayes: Option<&[f64]>, optimal: &PairedRisks, trained: &PairedRisks) -> Result<Decomposition> {
    let bayes = bayes.ok_or_else(|| Error::Config("decomposition needs a Bayes baseline".into()))?;
    let n = bayes.len();
    if n == 0 || optimal.test_losses.len() != n || trained.test_losses.len() != n {
        return Err(Error::Config(
            "decomposition inputs must share one non-empty test set".into(),
        ));
    }
    let bayes_risk = stats::mean(bayes);
    let optimal_risk = stats::mean(&optimal.test_losses);
    let trained_risk = stats::mean(&trained.test_losses);
    Ok(Decomposition {
        bayes_risk,
        optimal_risk,
        trained_risk,
        approximation_error: optimal_risk - bayes_risk,
        generalization_error: trained_risk - optimal_risk,
        generalization_gap: trained_risk - trained.empirical_risk,
        empirical_excess: trained.empirical_risk - optimal.empirical_risk,
        optimal_sampling_error: optimal.empirical_risk - optimal_risk,
        bayes_stderr: stats::std_err(bayes),
        approximation_stderr: paired_stderr(&optimal.test_losses, bayes),
        generalization_stderr: paired_stderr(&trained.test_losses, &optimal.test_losses),
        n_test: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEntry {
    pub train_risk: f64,
    pub test_risk: f64,
    pub stderr: f64,
    pub n_test: usize,
}

/// Risks keyed by `(estimator label, m, N)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskReport {
    pub entries: BTreeMap<(String, usize, usize), RiskEntry>,
}

impl RiskReport {
    pub fn insert(&mut self, label: &str, m: usize, n: usize, entry: RiskEntry) {
        self.entries.insert((label.to_string(), m, n), entry);
    }

    pub fn get(&self, label: &str, m: usize, n: usize) -> Option<&RiskEntry> {
        self.entries.get(&(label.to_string(), m, n))
    }

    /// CSV with columns `label,m,N,train_risk,test_risk,stderr`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "m", "N", "train_risk", "test_risk", "stderr"])?;
        for ((label, m, n), e) in &self.entries {
            w.write_record([
                label.clone(),
                m.to_string(),
                n.to_string(),
                format!("{:?}", e.train_risk),
                format!("{:?}", e.test_risk),
                format!("{:?}", e.stderr),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::linear_bayes;

    fn logistic() -> Model {
        Model::Logistic { d: 5 }
    }

    #[test]
    fn logistic_training_set_shape() {
        let ts = make_training_set(&logistic(), &Prior::unit_interval(), 10, 100, 1).unwrap();
        assert_eq!(ts.x.len(), 100 * 50);
        assert_eq!(ts.theta.len(), 100);
        assert!(ts.theta.iter().all(|t| *t > 0.0 && *t < 1.0));
        let other = make_training_set(&logistic(), &Prior::unit_interval(), 10, 100, 2).unwrap();
        assert_ne!(ts.x, other.x);
        let again = make_training_set(&logistic(), &Prior::unit_interval(), 10, 100, 1).unwrap();
        assert_eq!(
            crate::io::encode_training_set(&ts),
            crate::io::encode_training_set(&again)
        );
    }

    #[test]
    fn train_and_test_streams_are_disjoint() {
        let train = make_training_set(&logistic(), &Prior::unit_interval(), 1, 50, 3).unwrap();
        let test = make_test_set(&logistic(), &Prior::unit_interval(), 1, 50, 3).unwrap();
        let train_ids: Vec<_> = (0..50)
            .flat_map(|i| {
                let (a, b) = train.stream_ids(i);
                [a, b]
            })
            .collect();
        for i in 0..50 {
            let (a, b) = test.stream_ids(i);
            assert!(!train_ids.contains(&a) && !train_ids.contains(&b));
        }
        assert_ne!(train.theta, test.theta);
    }

    #[test]
    fn constant_estimator_has_prior_variance_risk() {
        let est = |_: &[f64]| vec![0.5];
        let r = evaluate_risk(&est, &logistic(), &Prior::unit_interval(), 1, 20_000, 4).unwrap();
        assert!((r.risk - 1.0 / 12.0).abs() < 3.0 * r.stderr);
        let again = evaluate_risk(&est, &logistic(), &Prior::unit_interval(), 1, 20_000, 4).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn linear_bayes_risk_by_monte_carlo() {
        let model = Model::LinearGaussian { sigma: 1.0 };
        let prior = Prior::gaussian(vec![0.0], vec![1.0]).unwrap();
        let est = |z: &[f64]| vec![linear_bayes(z, 0.0, 1.0, 1.0).unwrap().posterior_mean[0]];
        let r = evaluate_risk(&est, &model, &prior, 1, 100_000, 5).unwrap();
        assert!((r.risk - 0.5).abs() < 3.0 * r.stderr, "{} ± {}", r.risk, r.stderr);
    }

    #[test]
    fn evaluation_errors() {
        let est = |_: &[f64]| vec![f64::NAN];
        assert!(matches!(
            evaluate_risk(&est, &logistic(), &Prior::unit_interval(), 1, 100, 4),
            Err(Error::Evaluation { row: 0 })
        ));
        assert!(evaluate_risk(&|_: &[f64]| vec![0.5], &logistic(), &Prior::unit_interval(), 1, 99, 4).is_err());
    }

    #[test]
    fn self_decomposition_is_zero() {
        let losses = vec![0.1, 0.3, 0.2, 0.05];
        let pr = PairedRisks {
            test_losses: losses.clone(),
            empirical_risk: 0.2,
        };
        let dec = decompose(Some(&losses), &pr, &pr).unwrap();
        assert_eq!(dec.approximation_error, 0.0);
        assert_eq!(dec.generalization_error, 0.0);
        assert_eq!(dec.empirical_excess, 0.0);
        assert!(decompose(None, &pr, &pr).is_err());
    }

    #[test]
    fn decomposition_terms_sum() {
        let bayes = vec![0.1, 0.2, 0.3];
        let opt = PairedRisks {
            test_losses: vec![0.15, 0.22, 0.31],
            empirical_risk: 0.21,
        };
        let trained = PairedRisks {
            test_losses: vec![0.4, 0.2, 0.5],
            empirical_risk: 0.12,
        };
        let d = decompose(Some(&bayes), &opt, &trained).unwrap();
        let total = d.bayes_risk + d.approximation_error + d.generalization_error;
        assert!((total - d.trained_risk).abs() < 1e-12);
        let split = d.generalization_gap + d.empirical_excess + d.optimal_sampling_error;
        assert!((split - d.generalization_error).abs() < 1e-12);
    }

    #[test]
    fn report_csv() {
        let mut r = RiskReport::default();
        r.insert(
            "erm",
            2,
            100,
            RiskEntry {
                train_risk: 0.5,
                test_risk: 0.75,
                stderr: 0.1,
                n_test: 500,
            },
        );
        let text = String::from_utf8(r.to_csv().unwrap()).unwrap();
        assert_eq!(text, "label,m,N,train_risk,test_risk,stderr\nerm,2,100,0.5,0.75,0.1\n");
    }
}
