//! Minibatch first-order training with optional projection, dropout and
//! early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::TrainingSet;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::network::{loss, Gradient, InputTransform, Network, Workspace};
use crate::neural::project::project_in_place;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd {
        step: f64,
    },
    Adam {
        step: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam(step: f64) -> Self {
        Optimizer::Adam {
            step,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::adam(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regularization {
    #[default]
    None,
    EarlyStopping {
        validation_fraction: f64,
        patience: usize,
    },
    Dropout {
        rate: f64,
    },
}

impl Regularization {
    pub fn label(&self) -> String {
        match self {
            Regularization::None => "none".into(),
            Regularization::EarlyStopping { .. } => "early-stopping".into(),
            Regularization::Dropout { rate } => format!("dropout-{rate}"),
        }
    }
}

/// Hidden layout and output handling of a network family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub clip: Option<f64>,
    #[serde(default = "default_transform")]
    pub input_transform: InputTransform,
}

fn default_transform() -> InputTransform {
    InputTransform::Identity
}

impl Architecture {
    pub fn new(hidden: Vec<usize>) -> Self {
        Architecture {
            hidden,
            clip: None,
            input_transform: InputTransform::Identity,
        }
    }

    pub fn clipped(mut self, bound: f64) -> Self {
        self.clip = Some(bound);
        self
    }

    pub fn with_input_transform(mut self, t: InputTransform) -> Self {
        self.input_transform = t;
        self
    }

    pub fn layer_dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(output);
        dims
    }

    pub fn label(&self) -> String {
        if self.hidden.is_empty() {
            "linear".into()
        } else {
            self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("x")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default)]
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub regularization: Regularization,
    /// `α` of the restricted class; weights are projected after every update.
    #[serde(default)]
    pub restriction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Without a validation split, return the iterate with the lowest
    /// end-of-epoch training risk instead of the last one.
    #[serde(default)]
    pub keep_best_train: bool,
}

impl TrainConfig {
    pub fn new(batch_size: usize, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer: Optimizer::default(),
            batch_size,
            epochs,
            regularization: Regularization::None,
            restriction: None,
            seed,
            keep_best_train: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::Config(format!(
                "batch size {} must lie in 1..={n}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        match self.regularization {
            Regularization::EarlyStopping {
                validation_fraction, ..
            } if !(0.0..=0.5).contains(&validation_fraction) => {
                return Err(Error::Config(format!(
                    "validation fraction must lie in [0, 0.5], got {validation_fraction}"
                )))
            }
            Regularization::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                return Err(Error::Config(format!("dropout rate must lie in [0, 1), got {rate}")))
            }
            _ => {}
        }
        if let Some(alpha) = self.restriction {
            if !(alpha >= 1.0) {
                return Err(Error::Config(format!("restriction α must be at least 1, got {alpha}")));
            }
        }
        match self.optimizer {
            Optimizer::Sgd { step } | Optimizer::Adam { step, .. } if !(step > 0.0) => {
                Err(Error::Config(format!("step size must be positive, got {step}")))
            }
            _ => Ok(()),
        }
    }

    /// Stable hash of the configuration and architecture.
    pub fn hash(&self, arch: &Architecture) -> u64 {
        let text = serde_json::to_string(&(self, arch)).unwrap_or_default();
        rng::label_hash(&text)
    }
}

enum OptimizerState {
    Sgd {
        step: f64,
    },
    Adam {
        step: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

impl OptimizerState {
    fn new(opt: &Optimizer, n_params: usize) -> Self {
        match *opt {
            Optimizer::Sgd { step } => OptimizerState::Sgd { step },
            Optimizer::Adam {
                step,
                beta1,
                beta2,
                epsilon,
            } => OptimizerState::Adam {
                step,
                beta1,
                beta2,
                epsilon,
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                t: 0,
            },
        }
    }

    fn apply(&mut self, net: &mut Network, grad: &Gradient) {
        match self {
            OptimizerState::Sgd { step } => {
                let step = *step;
                net.update_with(grad, |_, w, g| *w -= step * g);
            }
            OptimizerState::Adam {
                step,
                beta1,
                beta2,
                epsilon,
                m,
                v,
                t,
            } => {
                *t += 1;
                let (b1, b2, eps) = (*beta1, *beta2, *epsilon);
                let c1 = 1.0 - b1.powi(*t);
                let c2 = 1.0 - b2.powi(*t);
                let lr = *step;
                net.update_with(grad, |i, w, g| {
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    *w -= lr * mh / (vh.sqrt() + eps);
                });
            }
        }
    }
}

/// Trains a freshly initialized network of the given architecture.
pub fn train(data: &TrainingSet, arch: &Architecture, cfg: &TrainConfig) -> Result<Checkpoint> {
    let dims = arch.layer_dims(data.input_dim(), data.p);
    let net = Network::init(&dims, arch.clip, rng::derive_seed(cfg.seed, "init", 0))?
        .with_input_transform(arch.input_transform);
    train_from(data, net, cfg, cfg.hash(arch))
}

/// Trains starting from `initial`.
pub fn train_from(data: &TrainingSet, initial: Network, cfg: &TrainConfig, config_hash: u64) -> Result<Checkpoint> {
    let d = data.input_dim();
    let p = data.p;
    if initial.input_dim() != d || initial.output_dim() != p {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: initial.input_dim(),
        });
    }
    let n = data.n;
    let n_val = match cfg.regularization {
        Regularization::EarlyStopping {
            validation_fraction, ..
        } => ((validation_fraction * n as f64).round() as usize).min(n.saturating_sub(1)),
        _ => 0,
    };
    let n_train = n - n_val;
    cfg.validate(n_train)?;
    let (x_train, x_val) = data.x.split_at(n_train * d);
    let (t_train, t_val) = data.theta.split_at(n_train * p);

    let mut net = initial;
    if let Some(alpha) = cfg.restriction {
        project_in_place(&mut net, alpha)?;
    }
    let mut state = OptimizerState::new(&cfg.optimizer, net.n_params());
    let mut grad = Gradient::zeros_like(&net);
    let mut ws = Workspace::new(&net);
    let mut order: Vec<usize> = (0..n_train).collect();
    let dropout_rate = match cfg.regularization {
        Regularization::Dropout { rate } if rate > 0.0 => Some(rate),
        _ => None,
    };

    let mut train_trace = Vec::with_capacity(cfg.epochs);
    let mut val_trace = Vec::new();
    let mut best: Option<(f64, usize, Network)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, "shuffle", epoch as u64));
        let mut drop_rng = rng::stream(cfg.seed, "dropout", epoch as u64);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill_zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let dropout = dropout_rate.map(|r| (r, &mut drop_rng));
                net.accumulate_gradient(
                    &x_train[i * d..(i + 1) * d],
                    &t_train[i * p..(i + 1) * p],
                    scale,
                    &mut ws,
                    &mut grad,
                    dropout,
                );
            }
            state.apply(&mut net, &grad);
            if let Some(alpha) = cfg.restriction {
                project_in_place(&mut net, alpha)?;
            }
        }
        let train_risk = loss(&net, x_train, t_train)?;
        if !train_risk.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        train_trace.push(train_risk);
        if n_val == 0 && cfg.keep_best_train && best.as_ref().is_none_or(|(b, _, _)| train_risk < *b) {
            best = Some((train_risk, epoch, net.clone()));
        }
        if n_val > 0 {
            let val_risk = loss(&net, x_val, t_val)?;
            if !val_risk.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            val_trace.push(val_risk);
            let improved = best.as_ref().is_none_or(|(b, _, _)| val_risk < *b);
            if improved {
                best = Some((val_risk, epoch, net.clone()));
            } else if let (Regularization::EarlyStopping { patience, .. }, Some((_, best_epoch, _))) =
                (&cfg.regularization, &best)
            {
                if epoch - best_epoch >= *patience {
                    break;
                }
            }
        }
    }

    let epochs_run = train_trace.len();
    let (net, best_epoch) = match best {
        Some((_, e, best_net)) => (best_net, e),
        None => (net, epochs_run - 1),
    };
    let train_risk = train_trace[best_epoch];
    let validation_risk = if n_val > 0 {
        val_trace.get(best_epoch).copied()
    } else {
        None
    };
    Ok(Checkpoint {
        network: net,
        label: "erm".into(),
        seed: cfg.seed,
        config_hash,
        train_risk,
        validation_risk,
        epochs: epochs_run,
        best_epoch,
        train_trace,
        validation_trace: val_trace,
    })
}
