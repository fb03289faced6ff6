//! Unbiased low-variance gradients for Bernoulli latent variables.
//!
//! The crate implements the augment-REINFORCE-merge (ARM) estimator next to
//! its AR and REINFORCE relatives, exact enumeration oracles for small
//! problems, closed-form univariate variance formulas, and ARM
//! backpropagation through multi-layer stochastic binary networks.
//!
//! ```
//! use arm_core::{arm_grad, exact_gradient, LogitVector, RngStream, ToyProblem};
//!
//! let toy = ToyProblem::new(0.49).unwrap();
//! let phi = LogitVector::scalar(0.0).unwrap();
//! let mut rng = RngStream::new(7, 0).sampler();
//! let g = arm_grad(&toy, &phi, &mut rng).unwrap();
//! assert_eq!(g.values.len(), 1);
//! assert!((exact_gradient(&toy, &phi).unwrap().values()[0] - 0.005).abs() < 1e-15);
//! ```

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod sbn;
pub mod stats;

pub use analytic::{
    ar_variance_univariate, arm_snr_univariate, arm_variance_univariate, reinforce_variance_univariate,
    true_grad_univariate, AnalyticPoint, ToyProblem,
};
pub use error::{ArmError, Result};
pub use estimators::{
    antisym_baseline, ar_at, ar_const_baseline_at, ar_const_baseline_grad, ar_grad, arm_at, arm_grad,
    correlation_report, k_sample, reinforce_at, reinforce_grad, CorrelationReport, Estimator, EstimatorKind,
    GradEstimate,
};
pub use oracle::{
    draw_estimates, estimator_moments, exact_expectation, exact_gradient, CountingObjective, EstimatorReport,
    ExactGradient, FnObjective, Objective, TableObjective,
};
pub use rng::{RngStream, Sampler};
pub use sampling::{
    antithetic_sample, exponential_race_sample, sigmoid, threshold_sample, BinarySample, LogitVector, UniformDraw,
};
pub use stats::{Moments, SampleMatrix};
