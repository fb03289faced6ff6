//! Empirical mean, spread and SNR of single-sample estimates across a grid
//! of logits, next to the closed forms.

use std::path::PathBuf;

use arm_core::analytic::phi_grid;
use arm_core::{arm_snr_univariate, estimator_moments, LogitVector, RngStream, ToyProblem};
use serde::Serialize;

use crate::config::{ExperimentConfig, GradientSource};
use crate::error::{ensure_finite, Result};
use crate::output::{num, opt, output_path, write_manifest, CsvTable, Stopwatch};
use crate::toy::{analytic_variance, slot};

pub const VARIANCE_HEADER: [&str; 14] = [
    "phi",
    "wall_time_ms",
    "estimator",
    "p0",
    "k",
    "mean",
    "std",
    "snr",
    "std_err",
    "variance",
    "variance_se",
    "true_grad",
    "analytic_std",
    "analytic_snr",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub phi: f64,
    pub wall_time_ms: String,
    pub estimator: GradientSource,
    pub p0: f64,
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub snr: f64,
    pub std_err: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub true_grad: f64,
    pub analytic_std: Option<f64>,
    pub analytic_snr: Option<f64>,
}

pub fn run_variance_report(cfg: &ExperimentConfig) -> Result<Vec<VarianceRow>> {
    let toy = ToyProblem::new(cfg.p0)?;
    let grid = phi_grid(cfg.grid.lo, cfg.grid.hi, cfg.grid.step);
    let root = RngStream::new(cfg.seed, 2);
    let clock = Stopwatch::new(cfg.timing);
    let mut rows = Vec::new();
    for (i, &phi) in grid.iter().enumerate() {
        let lv = LogitVector::scalar(phi)?;
        let true_grad = toy.true_grad(phi);
        for &source in &cfg.estimators {
            let Some(est) = source.estimator(cfg.baseline) else {
                continue;
            };
            let stream = root.split(i as u64 * 8 + slot(source));
            let r = estimator_moments(&est, &toy, &lv, cfg.k, stream)?;
            let std = r.variance[0].sqrt();
            let analytic_std = analytic_variance(source, &toy, phi).map(f64::sqrt);
            let analytic_snr = match source {
                GradientSource::Estimator(arm_core::EstimatorKind::Arm) => Some(arm_snr_univariate(phi)),
                _ => analytic_std.map(|s| true_grad.abs() / s),
            };
            rows.push(VarianceRow {
                phi,
                wall_time_ms: clock.ms(),
                estimator: source,
                p0: cfg.p0,
                k: cfg.k,
                mean: ensure_finite("mean", r.mean[0])?,
                std: ensure_finite("std", std)?,
                snr: r.snr[0],
                std_err: r.std_err[0],
                variance: r.variance[0],
                variance_se: r.variance_se[0],
                true_grad,
                analytic_std,
                analytic_snr,
            });
        }
    }
    Ok(rows)
}

pub fn write_variance_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let rows = run_variance_report(cfg)?;
    let path = output_path(cfg, "csv");
    let mut table = CsvTable::create(&path, &VARIANCE_HEADER)?;
    for r in &rows {
        table.row(&[
            num(r.phi),
            r.wall_time_ms.clone(),
            r.estimator.to_string(),
            num(r.p0),
            r.k.to_string(),
            num(r.mean),
            num(r.std),
            num(r.snr),
            num(r.std_err),
            num(r.variance),
            num(r.variance_se),
            num(r.true_grad),
            opt(r.analytic_std),
            opt(r.analytic_snr),
        ])?;
    }
    let csv = table.finish()?;
    let manifest = write_manifest(
        cfg,
        std::slice::from_ref(&csv),
        serde_json::json!({ "rows": rows.len() }),
    )?;
    Ok(vec![csv, manifest])
}
