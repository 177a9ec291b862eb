//! Amortized neural Bayes estimation at desk scale.
//!
//! The crate is split along the lines of the estimation workflow:
//!
//! * [`models`]: priors and simulators for the linear-Gaussian model, Gaussian
//!   random fields, the max-stable logistic model and Brown–Resnick processes.
//! * [`neural`]: a small fully connected ReLU network with output clipping,
//!   exact backpropagation, first-order training and L1 row projection.
//! * [`estimation`]: training-set generation, estimator fitting, Monte Carlo
//!   risk evaluation and the risk decomposition table.
//! * [`baselines`]: closed-form, quadrature and MCMC Bayes estimators plus the
//!   covariance-separation test.
//! * [`bounds`]: covering numbers, pseudo-robustness bounds, rate schedules and
//!   the training-size lower bound.

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod estimation;
pub mod io;
pub mod models;
pub mod neural;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
