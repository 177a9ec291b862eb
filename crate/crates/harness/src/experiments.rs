//! The four studies: neural versus Bayes estimates, the risk decomposition,
//! the linear-Gaussian study and the bound sweep.
//!
//! Every runner is a pure function of its configuration: all randomness is
//! drawn from seeds derived from the master seed and a job label, so the
//! produced tables do not depend on thread scheduling.

use std::collections::BTreeMap;
use std::path::Path;

use neuralbayes::baselines::{
    linear_bayes_risks, logistic_posterior_mcmc, logistic_posterior_quadrature, sparse_linear_optimal, McmcConfig,
};
use neuralbayes::bounds::{self, BoundInputs};
use neuralbayes::estimation::{
    decompose, evaluate_on, fit_neural_estimator, make_set, make_test_set, make_training_set, PairedRisks, RiskEntry,
    RiskReport, TrainingSet,
};
use neuralbayes::models::{Model, Prior};
use neuralbayes::neural::{self, Architecture, Checkpoint, Network, Regularization, TrainConfig};
use neuralbayes::{rng, stats};
use rayon::prelude::*;

use crate::config::{
    BoundsConfig, DecompositionConfig, Experiment, ExperimentConfig, Figure4Config, GridConfig, LinearConfig,
    TrainingSettings,
};
use crate::error::{HarnessError, Result};
use crate::svg::{Chart, Series};
use crate::table::{num, Table};

/// Everything a run produces, before it touches the file system.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// CSV tables by file name.
    pub tables: BTreeMap<String, Table>,
    /// Other files (checkpoints) by file name.
    pub extra: BTreeMap<String, Vec<u8>>,
    /// Every derived seed, by job label.
    pub seeds: BTreeMap<String, u64>,
}

impl Artifacts {
    fn seed(&mut self, master: u64, label: &str) -> u64 {
        let s = rng::derive_seed(master, label, 0);
        self.seeds.insert(label.to_string(), s);
        s
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    match &cfg.experiment {
        Experiment::Figure4(c) => run_figure4(c, cfg.seed),
        Experiment::Decomposition(c) => run_decomposition(c, cfg.seed),
        Experiment::Linear(c) => run_linear_appendix(c, cfg.seed),
        Experiment::Bounds(c) => run_bounds_sweep(c),
    }
}

fn train_config(
    settings: &TrainingSettings,
    regularization: Regularization,
    restriction: Option<f64>,
    n: usize,
    seed: u64,
) -> TrainConfig {
    TrainConfig {
        optimizer: settings.optimizer.clone(),
        batch_size: settings.batch_size.min(n),
        epochs: settings.epochs,
        regularization,
        restriction,
        seed,
        keep_best_train: false,
    }
}

fn architecture(settings: &TrainingSettings, hidden: &[usize]) -> Architecture {
    Architecture {
        hidden: hidden.to_vec(),
        clip: settings.clip_bound(),
        input_transform: settings.input_transform,
    }
}

fn hidden_label(hidden: &[usize]) -> String {
    if hidden.is_empty() {
        "linear".into()
    } else {
        hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("x")
    }
}

fn predict(net: &Network) -> impl Fn(&[f64]) -> Vec<f64> + Sync + '_ {
    move |x| net.forward(x).unwrap_or_else(|_| vec![f64::NAN; net.output_dim()])
}

/// Empirical risk `R_N` of a network on a data set, with its standard error.
fn empirical_risk(net: &Network, data: &TrainingSet) -> Result<(f64, f64)> {
    let est = evaluate_on(&predict(net), data)?;
    Ok((est.risk, est.stderr))
}

/// One fitted grid point.
#[derive(Debug, Clone)]
pub struct GridFit {
    pub hidden: Vec<usize>,
    pub regularization: Regularization,
    pub checkpoint: Checkpoint,
    pub validation_risk: f64,
}

/// Fits every grid point and returns them with the index of the one with the
/// lowest held-out risk (earliest on ties).
pub fn fit_grid(
    train: &TrainingSet,
    validation: &TrainingSet,
    grid: &GridConfig,
    settings: &TrainingSettings,
    restriction: Option<f64>,
    seed: u64,
) -> Result<(Vec<GridFit>, usize)> {
    let fits = grid
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(i, (hidden, regularization))| {
            let cfg = train_config(
                settings,
                regularization.clone(),
                restriction,
                train.n,
                rng::derive_seed(seed, "grid", i as u64),
            );
            let checkpoint = fit_neural_estimator(train, &architecture(settings, &hidden), &cfg)?;
            let (validation_risk, _) = empirical_risk(&checkpoint.network, validation)?;
            Ok(GridFit {
                hidden,
                regularization,
                checkpoint,
                validation_risk,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = fits.iter().enumerate().fold(0, |best, (i, f)| {
        if f.validation_risk < fits[best].validation_risk {
            i
        } else {
            best
        }
    });
    Ok((fits, best))
}

/// Quadrature posterior means of every record with the largest node-doubling
/// change observed.
fn quadrature_estimates(set: &TrainingSet, nodes: usize) -> Result<(Vec<f64>, f64)> {
    let out = (0..set.n)
        .into_par_iter()
        .map(|i| {
            let s = logistic_posterior_quadrature(set.x_row(i), set.d, nodes)?;
            Ok((s.posterior_mean[0], s.diagnostics.refinement_delta.unwrap_or(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = out.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok((out.into_iter().map(|o| o.0).collect(), delta))
}

fn squared_losses(estimates: &[f64], set: &TrainingSet) -> Vec<f64> {
    estimates.iter().zip(&set.theta).map(|(e, t)| (e - t).powi(2)).collect()
}

fn load_checkpoint(dir: &Path, m: usize, input: usize) -> Result<Checkpoint> {
    let path = dir.join(format!("figure4_m{m}.ckpt"));
    if !path.exists() {
        return Err(HarnessError::Orchestration(format!(
            "missing trained checkpoint {}",
            path.display()
        )));
    }
    Ok(Checkpoint::load_expecting(&path, input, 1)?)
}

pub fn run_figure4(cfg: &Figure4Config, seed: u64) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let model = Model::Logistic { d: cfg.d };
    let prior = Prior::unit_interval();
    let mut grid_table = Table::new(&[
        "m",
        "hidden",
        "regularization",
        "train_risk",
        "validation_risk",
        "epochs",
        "best_epoch",
        "selected",
    ]);
    let mut summary = Table::new(&[
        "m",
        "n_train",
        "hidden",
        "regularization",
        "bayes_risk",
        "bayes_stderr",
        "mcmc_risk",
        "mcmc_stderr",
        "neural_risk",
        "neural_stderr",
        "neural_bayes_mean_sq_gap",
        "mcmc_bayes_max_abs_gap",
        "max_refinement_delta",
        "min_acceptance",
        "max_acceptance",
    ]);
    for &m in &cfg.m_values {
        let test = make_test_set(
            &model,
            &prior,
            m,
            cfg.n_test,
            art.seed(seed, &format!("figure4-test-m{m}")),
        )?;
        let (net, hidden, reg) = match &cfg.checkpoints {
            Some(dir) => {
                let ck = load_checkpoint(dir, m, m * cfg.d)?;
                (ck.network, "checkpoint".to_string(), ck.label)
            }
            None => {
                let train = make_training_set(
                    &model,
                    &prior,
                    m,
                    cfg.n_train,
                    art.seed(seed, &format!("figure4-train-m{m}")),
                )?;
                let validation = make_set(
                    &model,
                    &prior,
                    m,
                    cfg.n_validation,
                    art.seed(seed, &format!("figure4-validation-m{m}")),
                    "validation",
                )?;
                let grid_seed = art.seed(seed, &format!("figure4-grid-m{m}"));
                let restriction = cfg.restriction.is_finite().then_some(cfg.restriction);
                let (fits, best) = fit_grid(&train, &validation, &cfg.grid, &cfg.training, restriction, grid_seed)?;
                for (i, f) in fits.iter().enumerate() {
                    grid_table.push(vec![
                        m.to_string(),
                        hidden_label(&f.hidden),
                        f.regularization.label(),
                        num(f.checkpoint.train_risk),
                        num(f.validation_risk),
                        f.checkpoint.epochs.to_string(),
                        f.checkpoint.best_epoch.to_string(),
                        u8::from(i == best).to_string(),
                    ]);
                }
                let chosen = fits.into_iter().nth(best).expect("grid is non-empty");
                art.extra
                    .insert(format!("figure4_m{m}.ckpt"), chosen.checkpoint.to_text().into_bytes());
                (
                    chosen.checkpoint.network,
                    hidden_label(&chosen.hidden),
                    chosen.regularization.label(),
                )
            }
        };

        let (bayes, max_delta) = quadrature_estimates(&test, cfg.quadrature_nodes)?;
        let mcmc_seed = art.seed(seed, &format!("figure4-mcmc-m{m}"));
        let mcmc = (0..test.n)
            .into_par_iter()
            .map(|i| {
                let mc = McmcConfig {
                    chain_len: cfg.mcmc.chain_len,
                    burn_in: cfg.mcmc.burn_in,
                    proposal_scale: cfg.mcmc.proposal_scale,
                    seed: rng::derive_seed(mcmc_seed, "row", i as u64),
                };
                let s = logistic_posterior_mcmc(test.x_row(i), cfg.d, &mc)?;
                Ok((s.posterior_mean[0], s.diagnostics.acceptance_rate.unwrap_or(0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        let neural_est = evaluate_on(&predict(&net), &test)?;
        let neural: Vec<f64> = neural_est.estimates.iter().map(|e| e[0]).collect();

        let mut rows = Table::new(&["theta", "bayes_estimate", "mcmc_estimate", "neural_estimate"]);
        for i in 0..test.n {
            rows.push(vec![num(test.theta[i]), num(bayes[i]), num(mcmc[i].0), num(neural[i])]);
        }
        art.tables.insert(format!("figure4_m{m}.csv"), rows);

        let mcmc_means: Vec<f64> = mcmc.iter().map(|r| r.0).collect();
        let bayes_losses = squared_losses(&bayes, &test);
        let mcmc_losses = squared_losses(&mcmc_means, &test);
        let gaps: Vec<f64> = neural.iter().zip(&bayes).map(|(a, b)| (a - b).powi(2)).collect();
        let max_mcmc_gap = mcmc_means
            .iter()
            .zip(&bayes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let acc = mcmc.iter().map(|r| r.1);
        summary.push(vec![
            m.to_string(),
            cfg.n_train.to_string(),
            hidden,
            reg,
            num(stats::mean(&bayes_losses)),
            num(stats::std_err(&bayes_losses)),
            num(stats::mean(&mcmc_losses)),
            num(stats::std_err(&mcmc_losses)),
            num(neural_est.risk),
            num(neural_est.stderr),
            num(stats::mean(&gaps)),
            num(max_mcmc_gap),
            num(max_delta),
            num(acc.clone().fold(f64::INFINITY, f64::min)),
            num(acc.fold(f64::NEG_INFINITY, f64::max)),
        ]);
    }
    if !grid_table.rows.is_empty() {
        art.tables.insert("figure4_grid.csv".into(), grid_table);
    }
    art.tables.insert("figure4_summary.csv".into(), summary);
    Ok(art)
}

/// Per-`m` results of the decomposition study.
struct MResult {
    m: usize,
    decomposition: Vec<Vec<String>>,
    risks: Vec<(String, usize, RiskEntry)>,
    grid: Vec<Vec<String>>,
}

fn small_n_settings(cfg: &DecompositionConfig, n: usize) -> TrainingSettings {
    let mut s = cfg.training.clone();
    if n <= 1000 {
        s.epochs = cfg.small_n_epochs;
    }
    s
}

/// Restricted empirical risk minimizer on `data`, returning the
/// lowest-training-risk iterate of a fresh start. When that fit has a higher
/// training risk than `warm`, training continues from `warm` instead, and
/// `warm` itself is returned if that does not help either.
fn restricted_erm(
    data: &TrainingSet,
    cfg: &DecompositionConfig,
    warm: Option<&Network>,
    seed: u64,
) -> Result<(Checkpoint, &'static str)> {
    let settings = small_n_settings(cfg, data.n);
    let restriction = cfg.restriction.is_finite().then_some(cfg.restriction);
    let mut tc = train_config(&settings, Regularization::None, restriction, data.n, seed);
    tc.keep_best_train = true;
    let arch = architecture(&settings, &cfg.hidden);
    let fresh = fit_neural_estimator(data, &arch, &tc)?;
    let fresh_risk = empirical_risk(&fresh.network, data)?.0;
    let Some(start) = warm else {
        return Ok((fresh, "fresh"));
    };
    let start_risk = empirical_risk(start, data)?.0;
    if fresh_risk <= start_risk {
        return Ok((fresh, "fresh"));
    }
    let mut warm_fit = neural::train_from(data, start.clone(), &tc, tc.hash(&arch))?;
    warm_fit.label = fresh.label.clone();
    let warm_risk = empirical_risk(&warm_fit.network, data)?.0;
    if warm_risk <= start_risk {
        return Ok((warm_fit, "warm"));
    }
    let mut ck = warm_fit;
    ck.network = start.clone();
    ck.train_risk = start_risk;
    ck.epochs = 0;
    ck.best_epoch = 0;
    ck.train_trace = vec![start_risk];
    Ok((ck, "initial"))
}

fn regularized_fit(data: &TrainingSet, cfg: &DecompositionConfig, seed: u64) -> Result<Checkpoint> {
    let settings = small_n_settings(cfg, data.n);
    let restriction = cfg.restriction.is_finite().then_some(cfg.restriction);
    let tc = train_config(&settings, cfg.regularized.clone(), restriction, data.n, seed);
    Ok(fit_neural_estimator(data, &architecture(&settings, &cfg.hidden), &tc)?)
}

struct Optimal {
    network: Network,
    test_losses: Vec<f64>,
    train_risk: f64,
    train_stderr: f64,
    grid: Vec<Vec<String>>,
}

fn optimal_proxy(
    cfg: &DecompositionConfig,
    m: usize,
    test: &TrainingSet,
    seeds: &BTreeMap<String, u64>,
) -> Result<Optimal> {
    let model = Model::Logistic { d: cfg.d };
    let prior = Prior::unit_interval();
    let train = make_training_set(
        &model,
        &prior,
        m,
        cfg.n_optimal,
        seeds[&format!("decomposition-optimal-m{m}")],
    )?;
    let validation = make_set(
        &model,
        &prior,
        m,
        cfg.n_validation,
        seeds[&format!("decomposition-validation-m{m}")],
        "validation",
    )?;
    let restriction = cfg.restriction.is_finite().then_some(cfg.restriction);
    let (fits, best) = fit_grid(
        &train,
        &validation,
        &cfg.grid,
        &cfg.training,
        restriction,
        seeds[&format!("decomposition-grid-m{m}")],
    )?;
    let grid = fits
        .iter()
        .enumerate()
        .map(|(i, f)| {
            vec![
                m.to_string(),
                hidden_label(&f.hidden),
                f.regularization.label(),
                num(f.checkpoint.train_risk),
                num(f.validation_risk),
                u8::from(i == best).to_string(),
            ]
        })
        .collect();
    let network = fits
        .into_iter()
        .nth(best)
        .expect("grid is non-empty")
        .checkpoint
        .network;
    let test_losses = evaluate_on(&predict(&network), test)?.losses;
    let (train_risk, train_stderr) = empirical_risk(&network, &train)?;
    Ok(Optimal {
        network,
        test_losses,
        train_risk,
        train_stderr,
        grid,
    })
}

fn decomposition_for_m(cfg: &DecompositionConfig, m: usize, seeds: &BTreeMap<String, u64>) -> Result<MResult> {
    let model = Model::Logistic { d: cfg.d };
    let prior = Prior::unit_interval();
    let test = make_test_set(
        &model,
        &prior,
        m,
        cfg.n_test,
        seeds[&format!("decomposition-test-m{m}")],
    )?;
    let (bayes_est, _) = quadrature_estimates(&test, cfg.quadrature_nodes)?;
    let bayes_losses = squared_losses(&bayes_est, &test);
    let opt = optimal_proxy(cfg, m, &test, seeds)?;
    let opt_test = stats::mean(&opt.test_losses);
    let opt_se = stats::std_err(&opt.test_losses);

    let mut decomposition = Vec::new();
    let mut risks = vec![(
        "optimal_proxy".to_string(),
        cfg.n_optimal,
        RiskEntry {
            train_risk: opt.train_risk,
            test_risk: opt_test,
            stderr: opt_se,
            n_test: cfg.n_test,
        },
    )];
    for &n in &cfg.n_values {
        let data = make_training_set(&model, &prior, m, n, seeds[&format!("decomposition-train-m{m}-N{n}")])?;
        let (bayes_train, _) = quadrature_estimates(&data, cfg.quadrature_nodes)?;
        let bayes_train_risk = stats::mean(&squared_losses(&bayes_train, &data));
        risks.push((
            "bayes".into(),
            n,
            RiskEntry {
                train_risk: bayes_train_risk,
                test_risk: stats::mean(&bayes_losses),
                stderr: stats::std_err(&bayes_losses),
                n_test: cfg.n_test,
            },
        ));
        let optimal = PairedRisks {
            test_losses: opt.test_losses.clone(),
            empirical_risk: empirical_risk(&opt.network, &data)?.0,
        };
        let fit_seed = seeds[&format!("decomposition-fit-m{m}-N{n}")];
        let (erm, start) = restricted_erm(&data, cfg, Some(&opt.network), rng::derive_seed(fit_seed, "erm", 0))?;
        let reg = regularized_fit(&data, cfg, rng::derive_seed(fit_seed, "regularized", 0))?;
        for (label, ck, start) in [("erm", &erm, start), ("regularized", &reg, "fresh")] {
            let est = evaluate_on(&predict(&ck.network), &test)?;
            let trained = PairedRisks {
                test_losses: est.losses.clone(),
                empirical_risk: empirical_risk(&ck.network, &data)?.0,
            };
            let dec = decompose(Some(&bayes_losses), &optimal, &trained)?;
            decomposition.push(vec![
                m.to_string(),
                n.to_string(),
                label.to_string(),
                start.to_string(),
                num(dec.bayes_risk),
                num(dec.bayes_stderr),
                num(dec.optimal_risk),
                num(opt_se),
                num(opt.train_risk),
                num(opt.train_stderr),
                num(optimal.empirical_risk),
                num(trained.empirical_risk),
                num(dec.trained_risk),
                num(est.stderr),
                num(dec.approximation_error),
                num(dec.approximation_stderr),
                num(dec.generalization_error),
                num(dec.generalization_stderr),
                num(dec.generalization_gap),
                num(dec.empirical_excess),
                num(dec.optimal_sampling_error),
            ]);
            risks.push((
                label.to_string(),
                n,
                RiskEntry {
                    train_risk: trained.empirical_risk,
                    test_risk: est.risk,
                    stderr: est.stderr,
                    n_test: cfg.n_test,
                },
            ));
        }
    }
    Ok(MResult {
        m,
        decomposition,
        risks,
        grid: opt.grid,
    })
}

pub const DECOMPOSITION_COLUMNS: [&str; 21] = [
    "m",
    "N",
    "label",
    "start",
    "bayes_risk",
    "bayes_stderr",
    "optimal_test_risk",
    "optimal_test_stderr",
    "optimal_train_risk",
    "optimal_train_stderr",
    "optimal_empirical_risk",
    "train_risk",
    "test_risk",
    "test_stderr",
    "approximation_error",
    "approximation_stderr",
    "generalization_error",
    "generalization_stderr",
    "generalization_gap",
    "empirical_excess",
    "optimal_sampling_error",
];

pub fn run_decomposition(cfg: &DecompositionConfig, seed: u64) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let mut ms = cfg.m_values.clone();
    if !ms.contains(&cfg.sweep_m) {
        ms.push(cfg.sweep_m);
    }
    for &m in &ms {
        for label in ["test", "optimal", "validation", "grid", "sweep"] {
            art.seed(seed, &format!("decomposition-{label}-m{m}"));
        }
        for &n in &cfg.n_values {
            art.seed(seed, &format!("decomposition-train-m{m}-N{n}"));
            art.seed(seed, &format!("decomposition-fit-m{m}-N{n}"));
        }
    }
    let seeds = art.seeds.clone();
    let results = cfg
        .m_values
        .par_iter()
        .map(|&m| decomposition_for_m(cfg, m, &seeds))
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(&DECOMPOSITION_COLUMNS);
    let mut grid = Table::new(&[
        "m",
        "hidden",
        "regularization",
        "train_risk",
        "validation_risk",
        "selected",
    ]);
    let mut report = RiskReport::default();
    for r in results {
        for row in r.decomposition {
            table.push(row);
        }
        for row in r.grid {
            grid.push(row);
        }
        for (label, n, entry) in r.risks {
            report.insert(&label, r.m, n, entry);
        }
    }
    art.tables.insert("decomposition.csv".into(), table);
    art.tables.insert("decomposition_grid.csv".into(), grid);

    // training-size sweep at fixed m
    let m = cfg.sweep_m;
    let model = Model::Logistic { d: cfg.d };
    let prior = Prior::unit_interval();
    let test = make_test_set(
        &model,
        &prior,
        m,
        cfg.n_test,
        seeds[&format!("decomposition-test-m{m}")],
    )?;
    let (bayes_est, _) = quadrature_estimates(&test, cfg.quadrature_nodes)?;
    let bayes_losses = squared_losses(&bayes_est, &test);
    let sweep_seed = seeds[&format!("decomposition-sweep-m{m}")];
    let sweep_rows = cfg
        .sweep_n
        .par_iter()
        .map(|&n| {
            let data = make_training_set(&model, &prior, m, n, rng::derive_seed(sweep_seed, "train", n as u64))?;
            let (erm, _) = restricted_erm(&data, cfg, None, rng::derive_seed(sweep_seed, "erm", n as u64))?;
            let reg = regularized_fit(&data, cfg, rng::derive_seed(sweep_seed, "regularized", n as u64))?;
            let mut rows = Vec::new();
            for (label, ck) in [("erm", &erm), ("regularized", &reg)] {
                let est = evaluate_on(&predict(&ck.network), &test)?;
                let (train_risk, train_se) = empirical_risk(&ck.network, &data)?;
                rows.push(vec![
                    label.to_string(),
                    n.to_string(),
                    num(train_risk),
                    num(train_se),
                    num(est.risk),
                    num(est.stderr),
                    num(stats::mean(&bayes_losses)),
                ]);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = Table::new(&[
        "label",
        "N",
        "train_risk",
        "train_stderr",
        "test_risk",
        "test_stderr",
        "bayes_risk",
    ]);
    for rows in sweep_rows {
        for row in rows {
            sweep.push(row);
        }
    }
    art.tables.insert("decomposition_sweep.csv".into(), sweep);
    art.tables.insert("risks.csv".into(), risk_table(&report)?);
    Ok(art)
}

fn risk_table(report: &RiskReport) -> Result<Table> {
    Table::from_csv(&report.to_csv()?)
}

fn linear_net_fit(
    cfg: &LinearConfig,
    m: usize,
    n: usize,
    seed: u64,
    test: &TrainingSet,
) -> Result<(f64, f64, f64, f64, Network)> {
    let model = Model::LinearGaussian { sigma: cfg.sigma };
    let prior = Prior::gaussian(vec![cfg.mu], vec![cfg.gamma])?;
    let data = make_training_set(&model, &prior, m, n, seed)?;
    let mut tc = train_config(
        &cfg.training,
        Regularization::None,
        None,
        n,
        rng::derive_seed(seed, "fit", 0),
    );
    let per_epoch = n.div_ceil(tc.batch_size);
    tc.epochs = tc.epochs.max(cfg.min_updates.div_ceil(per_epoch));
    let ck = fit_neural_estimator(&data, &architecture(&cfg.training, &[]), &tc)?;
    let (train_risk, _) = empirical_risk(&ck.network, &data)?;
    let est = evaluate_on(&predict(&ck.network), test)?;
    Ok((train_risk, est.risk, est.stderr, ck.train_risk, ck.network))
}

pub fn run_linear_appendix(cfg: &LinearConfig, seed: u64) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let model = Model::LinearGaussian { sigma: cfg.sigma };
    let prior = Prior::gaussian(vec![cfg.mu], vec![cfg.gamma])?;
    let (mu, gamma, sigma) = (cfg.mu, cfg.gamma, cfg.sigma);

    let mut all_m: Vec<usize> = cfg.m_values.iter().chain(&cfg.erm_m_values).copied().collect();
    all_m.push(cfg.sweep_m);
    all_m.sort_unstable();
    all_m.dedup();
    let mut tests = BTreeMap::new();
    for &m in &all_m {
        let s = art.seed(seed, &format!("linear-test-m{m}"));
        tests.insert(m, make_test_set(&model, &prior, m, cfg.n_test, s)?);
    }

    let mut sparse = Table::new(&[
        "m",
        "curve",
        "k",
        "mc_risk",
        "stderr",
        "closed_form_risk",
        "bayes_risk",
        "approx_error",
    ]);
    for &m in &cfg.m_values {
        let test = &tests[&m];
        for (curve, k) in [("k=m", m), ("k=fixed", cfg.k_fixed.min(m))] {
            let (slope, intercept) = sparse_linear_optimal(mu, gamma, sigma, k);
            let f = move |z: &[f64]| vec![intercept + slope * z[..k].iter().sum::<f64>()];
            let est = evaluate_on(&f, test)?;
            let closed = linear_bayes_risks(mu, gamma, sigma, m, k)?;
            sparse.push(vec![
                m.to_string(),
                curve.to_string(),
                k.to_string(),
                num(est.risk),
                num(est.stderr),
                num(closed.sparse_risk()),
                num(closed.bayes_risk),
                num(closed.approx_error),
            ]);
        }
    }
    art.tables.insert("linear_sparse.csv".into(), sparse);

    let jobs: Vec<(usize, usize, u64)> = cfg
        .erm_m_values
        .iter()
        .flat_map(|&m| cfg.erm_n_values.iter().map(move |&n| (m, n)))
        .map(|(m, n)| (m, n, art.seed(seed, &format!("linear-train-m{m}-N{n}"))))
        .collect();
    let fits = jobs
        .par_iter()
        .map(|&(m, n, s)| linear_net_fit(cfg, m, n, s, &tests[&m]).map(|r| (m, n, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut erm = Table::new(&[
        "m",
        "N",
        "train_risk",
        "test_risk",
        "stderr",
        "bayes_risk",
        "mean_slope",
        "intercept",
    ]);
    for (m, n, (train_risk, test_risk, se, _, net)) in fits {
        let layer = &net.layers[0];
        let mean_slope = stats::mean(&layer.weights);
        erm.push(vec![
            m.to_string(),
            n.to_string(),
            num(train_risk),
            num(test_risk),
            num(se),
            num(linear_bayes_risks(mu, gamma, sigma, m, m)?.bayes_risk),
            num(mean_slope),
            num(layer.biases[0]),
        ]);
    }
    art.tables.insert("linear_erm.csv".into(), erm);

    let m = cfg.sweep_m;
    let jobs: Vec<(usize, u64)> = cfg
        .sweep_n
        .iter()
        .map(|&n| (n, art.seed(seed, &format!("linear-sweep-m{m}-N{n}"))))
        .collect();
    let fits = jobs
        .par_iter()
        .map(|&(n, s)| linear_net_fit(cfg, m, n, s, &tests[&m]).map(|r| (n, r)))
        .collect::<Result<Vec<_>>>()?;
    let bayes = linear_bayes_risks(mu, gamma, sigma, m, m)?.bayes_risk;
    let mut sweep = Table::new(&["N", "train_risk", "test_risk", "stderr", "bayes_risk"]);
    for (n, (train_risk, test_risk, se, _, _)) in fits {
        sweep.push(vec![
            n.to_string(),
            num(train_risk),
            num(test_risk),
            num(se),
            num(bayes),
        ]);
    }
    art.tables.insert("linear_sweep.csv".into(), sweep);
    Ok(art)
}

pub const BOUNDS_COLUMNS: [&str; 27] = [
    "m",
    "D",
    "p",
    "L",
    "B",
    "delta",
    "tail",
    "N",
    "xi",
    "kappa",
    "M",
    "gamma",
    "alpha",
    "identity_residual",
    "ln_K",
    "K",
    "term_a",
    "term_b",
    "term_c",
    "term_d",
    "tail_probability",
    "zeta1",
    "zeta2",
    "zeta",
    "robustness_constant",
    "ln_training_size_bound",
    "epsilon",
];

pub fn run_bounds_sweep(cfg: &BoundsConfig) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    let mut table = Table::new(&BOUNDS_COLUMNS);
    for &m in &cfg.m_values {
        for tail in &cfg.tails {
            let inputs = BoundInputs {
                param_bound: cfg.param_bound,
                p: cfg.p,
                d: cfg.d,
                m,
                layers: cfg.layers,
                tail: Some(*tail),
            };
            for &n in &cfg.n_values {
                let z = bounds::zeta(cfg.delta, n, &inputs)?;
                let s = z.schedules;
                let k = bounds::CoveringNumber { ln_value: z.terms.ln_k };
                table.push(vec![
                    m.to_string(),
                    inputs.input_dim().to_string(),
                    cfg.p.to_string(),
                    cfg.layers.to_string(),
                    num(cfg.param_bound),
                    num(cfg.delta),
                    tail.label(),
                    num(n),
                    num(s.xi),
                    num(s.kappa),
                    num(s.radius),
                    num(s.gamma),
                    num(s.alpha),
                    num(s.identity_residual),
                    num(z.terms.ln_k),
                    if k.is_huge() { "log-only".into() } else { num(k.value()) },
                    num(z.terms.robustness),
                    num(z.terms.tail),
                    num(z.terms.hoeffding),
                    num(z.terms.covering),
                    num(z.terms.tail_probability),
                    num(z.zeta1),
                    num(z.zeta2),
                    num(z.zeta),
                    num(bounds::robustness_constant(
                        cfg.param_bound,
                        cfg.p,
                        s.alpha,
                        cfg.layers,
                    )?),
                    num(bounds::ln_training_size_lower_bound(cfg.epsilon, m, cfg.d, cfg.p)?),
                    num(cfg.epsilon),
                ]);
            }
        }
    }
    art.tables.insert("bounds.csv".into(), table);
    Ok(art)
}

/// Charts derived from one CSV table; a pure function of the table.
pub fn charts_for(name: &str, t: &Table) -> Result<Vec<(String, Chart)>> {
    let stem = name.trim_end_matches(".csv");
    let pairs = |xs: &[f64], ys: &[f64]| xs.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
    let mut out = Vec::new();
    if stem.starts_with("figure4_m") {
        let theta = t.floats("theta")?;
        out.push((
            format!("{stem}.svg"),
            Chart {
                title: format!("Estimates versus true θ ({})", stem.trim_start_matches("figure4_")),
                x_label: "θ".into(),
                y_label: "estimate".into(),
                series: vec![
                    Series::scatter("Bayes (quadrature)", pairs(&theta, &t.floats("bayes_estimate")?)),
                    Series::scatter("MCMC", pairs(&theta, &t.floats("mcmc_estimate")?)),
                    Series::scatter("neural", pairs(&theta, &t.floats("neural_estimate")?)),
                    Series::line("identity", vec![(0.0, 0.0), (1.0, 1.0)]),
                ],
                ..Chart::default()
            },
        ));
    } else if stem == "decomposition" {
        let ns: std::collections::BTreeSet<usize> = t.floats("N")?.iter().map(|n| *n as usize).collect();
        for n in ns {
            let sub = t.filter("N", &n.to_string())?;
            let erm = sub.filter("label", "erm")?;
            let reg = sub.filter("label", "regularized")?;
            let m = erm.floats("m")?;
            out.push((
                format!("decomposition_N{n}.svg"),
                Chart {
                    title: format!("Risks in the decomposition, N = {n}"),
                    x_label: "m".into(),
                    y_label: "risk".into(),
                    log_y: true,
                    series: vec![
                        Series::line("Bayes", pairs(&m, &erm.floats("bayes_risk")?)),
                        Series::line("optimal proxy", pairs(&m, &erm.floats("optimal_test_risk")?)),
                        Series::line("ERM test", pairs(&m, &erm.floats("test_risk")?)),
                        Series::line("ERM train", pairs(&m, &erm.floats("train_risk")?)),
                        Series::line("regularized test", pairs(&reg.floats("m")?, &reg.floats("test_risk")?)),
                        Series::line(
                            "regularized train",
                            pairs(&reg.floats("m")?, &reg.floats("train_risk")?),
                        ),
                    ],
                    ..Chart::default()
                },
            ));
        }
    } else if stem == "decomposition_sweep" {
        let mut series = Vec::new();
        for label in ["erm", "regularized"] {
            let sub = t.filter("label", label)?;
            let n = sub.floats("N")?;
            series.push(Series::line(
                &format!("{label} test"),
                pairs(&n, &sub.floats("test_risk")?),
            ));
            series.push(Series::line(
                &format!("{label} train"),
                pairs(&n, &sub.floats("train_risk")?),
            ));
        }
        let n = t.floats("N")?;
        series.push(Series::line("Bayes", pairs(&n, &t.floats("bayes_risk")?)));
        out.push((
            "decomposition_sweep.svg".into(),
            Chart {
                title: "Training and test risks versus N".into(),
                x_label: "N".into(),
                y_label: "risk".into(),
                log_x: true,
                log_y: true,
                series,
                ..Chart::default()
            },
        ));
    } else if stem == "linear_sparse" {
        let km = t.filter("curve", "k=m")?;
        let kf = t.filter("curve", "k=fixed")?;
        out.push((
            "linear_sparse.svg".into(),
            Chart {
                title: "Risk of k-sparse linear estimators".into(),
                x_label: "m".into(),
                y_label: "risk".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    Series::line(
                        "Bayes (closed form)",
                        pairs(&km.floats("m")?, &km.floats("bayes_risk")?),
                    ),
                    Series::scatter("k = m (Monte Carlo)", pairs(&km.floats("m")?, &km.floats("mc_risk")?)),
                    Series::line(
                        "k fixed (closed form)",
                        pairs(&kf.floats("m")?, &kf.floats("closed_form_risk")?),
                    ),
                    Series::scatter("k fixed (Monte Carlo)", pairs(&kf.floats("m")?, &kf.floats("mc_risk")?)),
                ],
                ..Chart::default()
            },
        ));
    } else if stem == "linear_erm" {
        let ns: std::collections::BTreeSet<usize> = t.floats("N")?.iter().map(|n| *n as usize).collect();
        let mut series = Vec::new();
        let first = t.filter("N", &ns.iter().next().copied().unwrap_or(0).to_string())?;
        series.push(Series::line(
            "Bayes",
            pairs(&first.floats("m")?, &first.floats("bayes_risk")?),
        ));
        for n in ns {
            let sub = t.filter("N", &n.to_string())?;
            series.push(Series::line(
                &format!("ERM N = {n}"),
                pairs(&sub.floats("m")?, &sub.floats("test_risk")?),
            ));
        }
        out.push((
            "linear_erm.svg".into(),
            Chart {
                title: "Linear ERM test risk versus m".into(),
                x_label: "m".into(),
                y_label: "risk".into(),
                log_y: true,
                series,
                ..Chart::default()
            },
        ));
    } else if stem == "linear_sweep" {
        let n = t.floats("N")?;
        out.push((
            "linear_sweep.svg".into(),
            Chart {
                title: "Linear ERM risk versus N".into(),
                x_label: "N".into(),
                y_label: "risk".into(),
                log_x: true,
                series: vec![
                    Series::line("test", pairs(&n, &t.floats("test_risk")?)),
                    Series::line("train", pairs(&n, &t.floats("train_risk")?)),
                    Series::line("Bayes", pairs(&n, &t.floats("bayes_risk")?)),
                ],
                ..Chart::default()
            },
        ));
    } else if stem == "bounds" {
        let mut series = Vec::new();
        let ms: std::collections::BTreeSet<usize> = t.floats("m")?.iter().map(|m| *m as usize).collect();
        let tails: std::collections::BTreeSet<&str> = t.strings("tail")?.into_iter().collect();
        for m in ms {
            let sub = t.filter("m", &m.to_string())?;
            for tail in &tails {
                let s = sub.filter("tail", tail)?;
                series.push(Series::line(
                    &format!("m = {m}, {tail}"),
                    pairs(&s.floats("N")?, &s.floats("zeta")?),
                ));
            }
        }
        out.push((
            "bounds.svg".into(),
            Chart {
                title: "ζ(δ, N) under the rate schedules".into(),
                x_label: "N".into(),
                y_label: "ζ".into(),
                log_x: true,
                log_y: true,
                series,
                ..Chart::default()
            },
        ));
    }
    Ok(out)
}
