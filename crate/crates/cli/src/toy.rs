//! Gradient ascent on `E[(z − p0)²]`, `z ~ Bernoulli(σ(φ))`.

use std::path::PathBuf;

use arm_core::sbn::{adam_step, OptimizerState, Parameters};
use arm_core::{
    ar_variance_univariate, arm_variance_univariate, estimator_moments, k_sample, reinforce_variance_univariate,
    sigmoid, EstimatorKind, LogitVector, RngStream, ToyProblem,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, GradientSource, ToyOptimizer};
use crate::error::{ensure_finite, Result};
use crate::output::{num, opt, output_path, write_manifest, CsvTable, Stopwatch};

pub const TOY_HEADER: [&str; 10] = [
    "iteration",
    "wall_time_ms",
    "estimator",
    "p0",
    "phi",
    "sigma",
    "grad",
    "grad_variance",
    "grad_variance_se",
    "analytic_variance",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyRow {
    pub iteration: u64,
    pub wall_time_ms: String,
    pub estimator: GradientSource,
    pub phi: f64,
    pub sigma: f64,
    pub grad: f64,
    pub grad_variance: Option<f64>,
    pub grad_variance_se: Option<f64>,
    pub analytic_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyTrace {
    pub estimator: GradientSource,
    pub final_phi: f64,
    pub final_sigma: f64,
    #[serde(skip)]
    pub rows: Vec<ToyRow>,
}

/// Fixed per-estimator stream slot, so adding an estimator to a run does
/// not change the draws of the others.
pub(crate) fn slot(g: GradientSource) -> u64 {
    match g {
        GradientSource::True => 0,
        GradientSource::Estimator(EstimatorKind::Reinforce) => 1,
        GradientSource::Estimator(EstimatorKind::Ar) => 2,
        GradientSource::Estimator(EstimatorKind::Arm) => 3,
        GradientSource::Estimator(EstimatorKind::ArConstBaseline) => 4,
    }
}

/// Closed-form single-sample variance of `g` at `phi`, where one exists.
pub fn analytic_variance(g: GradientSource, toy: &ToyProblem, phi: f64) -> Option<f64> {
    let (f1, f0) = (toy.f1(), toy.f0());
    match g {
        GradientSource::True => Some(0.0),
        GradientSource::Estimator(EstimatorKind::Arm) => Some(arm_variance_univariate(f1, f0, phi)),
        GradientSource::Estimator(EstimatorKind::Ar) => Some(ar_variance_univariate(f1, f0, phi)),
        GradientSource::Estimator(EstimatorKind::Reinforce) => Some(reinforce_variance_univariate(f1, f0, phi)),
        GradientSource::Estimator(EstimatorKind::ArConstBaseline) => None,
    }
}

#[derive(Clone)]
struct ScalarLogit(Vec<f64>);

impl Parameters for ScalarLogit {
    fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        vec![("phi".to_string(), vec![1])]
    }

    fn tensors(&self) -> Vec<&Vec<f64>> {
        vec![&self.0]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![&mut self.0]
    }
}

/// Runs one ascent trajectory. Rows cover iterations `0..=iterations`; the
/// last row records the final logit and a gradient that is not applied.
pub fn run_toy_trace(cfg: &ExperimentConfig, source: GradientSource) -> Result<ToyTrace> {
    let toy = ToyProblem::new(cfg.p0)?;
    let estimator = source.estimator(cfg.baseline);
    let mut rng = RngStream::new(cfg.seed, 0).split(slot(source)).sampler();
    let variance_root = RngStream::new(cfg.seed, 1).split(slot(source));
    let clock = Stopwatch::new(cfg.timing);

    let mut phi = ScalarLogit(vec![cfg.phi0]);
    let mut adam = OptimizerState::new(cfg.stepsize, true);
    let mut rows = Vec::with_capacity(cfg.iterations as usize + 1);
    for it in 0..=cfg.iterations {
        let x = ensure_finite("phi", phi.0[0])?;
        let lv = LogitVector::scalar(x)?;
        let grad = match &estimator {
            None => toy.true_grad(x),
            Some(est) => k_sample(est, &toy, &lv, 1, &mut rng)?.values[0],
        };
        let grad = ensure_finite("gradient", grad)?;

        let log_variance = it % cfg.variance_every == 0 || it == cfg.iterations;
        let (var, var_se) = match (&estimator, log_variance) {
            (_, false) => (None, None),
            (None, true) => (Some(0.0), Some(0.0)),
            (Some(est), true) => {
                let r = estimator_moments(est, &toy, &lv, cfg.variance_samples, variance_root.split(it))?;
                (Some(r.variance[0]), Some(r.variance_se[0]))
            }
        };
        rows.push(ToyRow {
            iteration: it,
            wall_time_ms: clock.ms(),
            estimator: source,
            phi: x,
            sigma: sigmoid(x)?,
            grad,
            grad_variance: var,
            grad_variance_se: var_se,
            analytic_variance: if log_variance {
                analytic_variance(source, &toy, x)
            } else {
                None
            },
        });
        if it == cfg.iterations {
            break;
        }
        match cfg.optimizer {
            ToyOptimizer::Sgd => phi.0[0] += cfg.stepsize * grad,
            ToyOptimizer::Adam => adam_step(&mut phi, &ScalarLogit(vec![grad]), &mut adam)?,
        }
    }
    let last = rows.last().expect("at least one row");
    Ok(ToyTrace {
        estimator: source,
        final_phi: last.phi,
        final_sigma: last.sigma,
        rows,
    })
}

pub fn run_toy(cfg: &ExperimentConfig) -> Result<Vec<ToyTrace>> {
    cfg.estimators.iter().map(|&g| run_toy_trace(cfg, g)).collect()
}

/// Runs the toy experiment and writes `toy.csv` plus its manifest.
pub fn write_toy(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let traces = run_toy(cfg)?;
    let path = output_path(cfg, "csv");
    let mut table = CsvTable::create(&path, &TOY_HEADER)?;
    for trace in &traces {
        for r in &trace.rows {
            table.row(&[
                r.iteration.to_string(),
                r.wall_time_ms.clone(),
                r.estimator.to_string(),
                num(cfg.p0),
                num(r.phi),
                num(r.sigma),
                num(r.grad),
                opt(r.grad_variance),
                opt(r.grad_variance_se),
                opt(r.analytic_variance),
            ])?;
        }
    }
    let csv = table.finish()?;
    let manifest = write_manifest(cfg, std::slice::from_ref(&csv), &traces)?;
    Ok(vec![csv, manifest])
}
