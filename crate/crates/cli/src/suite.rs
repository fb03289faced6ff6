//! Statistical property checks of the estimators against the enumeration
//! oracle and the closed-form variances. Each check yields one row per
//! compared quantity.

use std::path::PathBuf;

use arm_core::analytic::{agreement, arm_variance_peak, phi_grid, sup_over, worst_case_ratio_bound};
use arm_core::{
    antisym_baseline, ar_at, arm_at, arm_variance_univariate, estimator_moments, exact_gradient, k_sample,
    reinforce_variance_univariate, Estimator, EstimatorKind, LogitVector, Moments, RngStream, SampleMatrix, Sampler,
    TableObjective, ToyProblem, UniformDraw,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, GradientSource};
use crate::error::Result;
use crate::output::{num, output_path, write_manifest, CsvTable};
use crate::toy::analytic_variance;

pub const SUITE_HEADER: [&str; 9] = [
    "check",
    "case",
    "estimator",
    "coordinate",
    "value",
    "reference",
    "tolerance",
    "pass",
    "detail",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub case: usize,
    pub estimator: String,
    pub coordinate: usize,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

/// Fraction of passing rows.
pub fn pass_rate(rows: &[CheckRow]) -> f64 {
    rows.iter().filter(|r| r.pass).count() as f64 / rows.len().max(1) as f64
}

/// The paper-reported peak of the ARM variance per unit `(f1 − f0)²`.
pub const REPORTED_PEAK: f64 = 0.039788;

/// A random problem: arity in `1..=max_arity`, table values uniform in
/// `[0, 1)`, logits uniform in `[−3, 3)`.
pub fn random_instance(rng: &mut Sampler, max_arity: usize) -> (TableObjective, LogitVector) {
    let v = 1 + rng.index(max_arity);
    let values = (0..1usize << v).map(|_| rng.uniform()).collect();
    let phi = (0..v).map(|_| -3.0 + 6.0 * rng.uniform()).collect();
    (
        TableObjective::new(v, values).expect("valid table"),
        LogitVector::new(phi).expect("finite logits"),
    )
}

const MONTE_CARLO: [EstimatorKind; 3] = [EstimatorKind::Reinforce, EstimatorKind::Ar, EstimatorKind::Arm];

/// Mean of `n` single-sample estimates vs the exact gradient, within 4 SE.
pub fn unbiasedness_checks(seed: u64, instances: usize, n: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for i in 0..instances {
        let (f, phi) = random_instance(&mut RngStream::new(seed, 10).split(i as u64).sampler(), 6);
        let exact = exact_gradient(&f, &phi)?;
        for (j, kind) in MONTE_CARLO.iter().enumerate() {
            let stream = RngStream::new(seed, 11).split((i * 4 + j) as u64);
            let r = estimator_moments(&Estimator::from(*kind), &f, &phi, n, stream)?;
            for v in 0..phi.len() {
                let tol = 4.0 * r.std_err[v];
                rows.push(CheckRow {
                    check: "unbiased",
                    case: i,
                    estimator: kind.to_string(),
                    coordinate: v,
                    value: r.mean[v],
                    reference: exact.values()[v],
                    tolerance: tol,
                    pass: (r.mean[v] - exact.values()[v]).abs() <= tol,
                    detail: format!("V={} n={n}", phi.len()),
                });
            }
        }
    }
    Ok(rows)
}

/// Empirical single-sample variances on the toy problem vs the closed forms,
/// within `rel_tol` relative.
pub fn variance_checks(seed: u64, p0: f64, phis: &[f64], n: usize, rel_tol: f64) -> Result<Vec<CheckRow>> {
    let toy = ToyProblem::new(p0)?;
    let mut rows = Vec::new();
    for (i, &phi) in phis.iter().enumerate() {
        let lv = LogitVector::scalar(phi)?;
        for (j, kind) in MONTE_CARLO.iter().enumerate() {
            let stream = RngStream::new(seed, 12).split((i * 4 + j) as u64);
            let r = estimator_moments(&Estimator::from(*kind), &toy, &lv, n, stream)?;
            let analytic = analytic_variance(GradientSource::Estimator(*kind), &toy, phi).expect("closed form");
            rows.push(CheckRow {
                check: "variance",
                case: i,
                estimator: kind.to_string(),
                coordinate: 0,
                value: r.variance[0],
                reference: analytic,
                tolerance: rel_tol * analytic,
                pass: (r.variance[0] - analytic).abs() <= rel_tol * analytic,
                detail: format!("phi={phi} p0={p0} se={}", r.variance_se[0]),
            });
        }
    }
    Ok(rows)
}

/// The ARM variance peak and the worst-case ratio bound on `pairs` random
/// sign-definite `(f1, f0)`.
pub fn peak_and_bound_checks(seed: u64, pairs: usize) -> Vec<CheckRow> {
    let (t_star, coeff) = arm_variance_peak();
    let mut rows = vec![CheckRow {
        check: "peak_value",
        case: 0,
        estimator: "arm".into(),
        coordinate: 0,
        value: coeff,
        reference: REPORTED_PEAK,
        tolerance: 1e-5 * REPORTED_PEAK,
        pass: (coeff - REPORTED_PEAK).abs() <= 1e-5 * REPORTED_PEAK,
        detail: "max over t of var/(f1-f0)^2".into(),
    }];
    let grid = phi_grid(0.0, 6.0, 1e-5);
    let argmax = grid
        .iter()
        .copied()
        .max_by(|a, b| arm_variance_univariate(1.0, 0.0, *a).total_cmp(&arm_variance_univariate(1.0, 0.0, *b)))
        .unwrap_or(0.0);
    let t_grid = agreement(argmax);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    rows.push(CheckRow {
        check: "peak_location",
        case: 0,
        estimator: "arm".into(),
        coordinate: 0,
        value: t_grid,
        reference: golden,
        tolerance: 1e-4,
        pass: (t_grid - golden).abs() <= 1e-4 && (t_star - golden).abs() <= 1e-15,
        detail: format!("grid argmax phi={argmax}"),
    });

    let mut rng = RngStream::new(seed, 13).sampler();
    let phis = phi_grid(-10.0, 10.0, 1e-3);
    for i in 0..pairs {
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        let f1 = sign * (0.01 + rng.uniform());
        let f0 = sign * (0.01 + rng.uniform());
        let arm = sup_over(&phis, |p| arm_variance_univariate(f1, f0, p));
        let reinforce = sup_over(&phis, |p| reinforce_variance_univariate(f1, f0, p));
        let bound = worst_case_ratio_bound(f1, f0);
        let ratio = arm / reinforce;
        rows.push(CheckRow {
            check: "ratio_bound",
            case: i,
            estimator: "arm/reinforce".into(),
            coordinate: 0,
            value: ratio,
            reference: bound,
            tolerance: 0.0,
            pass: ratio <= bound,
            detail: format!("f1={f1} f0={f0}"),
        });
    }
    rows
}

/// Largest `|ARM(u) − ½(AR(u) + AR(1 − u))|` over `draws` random problems and uniforms.
pub fn merge_identity_checks(seed: u64, draws: usize) -> Result<Vec<CheckRow>> {
    let mut rng = RngStream::new(seed, 14).sampler();
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (f, phi) = random_instance(&mut rng, 6);
        let u = rng.uniform_draw(phi.len());
        let arm = arm_at(&f, &phi, &u)?;
        let a = ar_at(&f, &phi, &u)?;
        let b = ar_at(&f, &phi, &u.reflect())?;
        for v in 0..phi.len() {
            worst = worst.max((arm[v] - 0.5 * (a[v] + b[v])).abs());
        }
    }
    Ok(vec![CheckRow {
        check: "merge_identity",
        case: 0,
        estimator: "arm".into(),
        coordinate: 0,
        value: worst,
        reference: 0.0,
        tolerance: 1e-15,
        pass: worst <= 1e-15,
        detail: format!("draws={draws}"),
    }])
}

fn k_sample_moments(
    est: &Estimator,
    f: &TableObjective,
    phi: &LogitVector,
    k: usize,
    reps: usize,
    stream: RngStream,
) -> Result<Vec<Moments>> {
    let mut rng = stream.sampler();
    let mut m = SampleMatrix::with_capacity(phi.len(), reps);
    for _ in 0..reps {
        m.push(&k_sample(est, f, phi, k, &mut rng)?.values);
    }
    Ok(m.summary())
}

/// `var(ARM_K) ≤ var(AR_2K) + 3·SE` for non-negative objectives.
pub fn ordering_checks(seed: u64, instances: usize, ks: &[usize], reps: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for i in 0..instances {
        let (f, phi) = random_instance(&mut RngStream::new(seed, 15).split(i as u64).sampler(), 6);
        for (j, &k) in ks.iter().enumerate() {
            let base = RngStream::new(seed, 16).split((i * 16 + j * 2) as u64);
            let arm = k_sample_moments(&Estimator::Arm, &f, &phi, k, reps, base.split(0))?;
            let ar = k_sample_moments(
                &Estimator::Ar,
                &f,
                &phi,
                EstimatorKind::Ar.matched_budget(k),
                reps,
                base.split(1),
            )?;
            for v in 0..phi.len() {
                let tol = 3.0 * arm[v].variance_se.hypot(ar[v].variance_se);
                rows.push(CheckRow {
                    check: "arm_vs_ar_matched",
                    case: i,
                    estimator: format!("arm_{k}"),
                    coordinate: v,
                    value: arm[v].variance,
                    reference: ar[v].variance,
                    tolerance: tol,
                    pass: arm[v].variance <= ar[v].variance + tol,
                    detail: format!("K={k} reps={reps}"),
                });
            }
        }
    }
    Ok(rows)
}

/// Largest `|AR(u) − b(u) − ARM(u)|` over `draws` random problems.
pub fn baseline_identity_checks(seed: u64, draws: usize) -> Result<Vec<CheckRow>> {
    let mut rng = RngStream::new(seed, 17).sampler();
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (f, phi) = random_instance(&mut rng, 6);
        let u: UniformDraw = rng.uniform_draw(phi.len());
        let arm = arm_at(&f, &phi, &u)?;
        let ar = ar_at(&f, &phi, &u)?;
        let b = antisym_baseline(&f, &phi, &u)?;
        for v in 0..phi.len() {
            worst = worst.max((ar[v] - b[v] - arm[v]).abs());
        }
    }
    Ok(vec![CheckRow {
        check: "baseline_identity",
        case: 0,
        estimator: "ar-antisym".into(),
        coordinate: 0,
        value: worst,
        reference: 0.0,
        tolerance: 1e-12,
        pass: worst <= 1e-12,
        detail: format!("draws={draws}"),
    }])
}

/// `var(AR with constant baseline c) ≥ var(ARM) − 3·SE` on a grid of `c`
/// spanning `[−2 max f, 2 max f]`, for the toy objective.
pub fn baseline_grid_checks(seed: u64, p0: f64, phis: &[f64], cells: usize, n: usize) -> Result<Vec<CheckRow>> {
    let toy = ToyProblem::new(p0)?;
    let max_f = toy.f1().max(toy.f0());
    let mut rows = Vec::new();
    for (i, &phi) in phis.iter().enumerate() {
        let lv = LogitVector::scalar(phi)?;
        let root = RngStream::new(seed, 18).split(i as u64);
        let arm = estimator_moments(&Estimator::Arm, &toy, &lv, n, root.split(0))?;
        for c_idx in 0..cells {
            let c = -2.0 * max_f + 4.0 * max_f * c_idx as f64 / (cells - 1).max(1) as f64;
            let est = Estimator::ArConstBaseline(vec![c]);
            let r = estimator_moments(&est, &toy, &lv, n, root.split(1 + c_idx as u64))?;
            let tol = 3.0 * arm.variance_se[0].hypot(r.variance_se[0]);
            rows.push(CheckRow {
                check: "constant_baseline",
                case: i * cells + c_idx,
                estimator: EstimatorKind::ArConstBaseline.to_string(),
                coordinate: 0,
                value: r.variance[0],
                reference: arm.variance[0],
                tolerance: tol,
                pass: r.variance[0] >= arm.variance[0] - tol,
                detail: format!("phi={phi} c={c}"),
            });
        }
    }
    Ok(rows)
}

/// All checks at the sizes configured in `cfg` (`samples` sets the
/// Monte Carlo size of the unbiasedness checks).
pub fn run_property_suite(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let s = cfg.seed;
    let mut rows = unbiasedness_checks(s, 50, cfg.samples)?;
    rows.extend(variance_checks(
        s,
        cfg.p0,
        &[-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
        1_000_000,
        0.05,
    )?);
    rows.extend(peak_and_bound_checks(s, 20));
    rows.extend(merge_identity_checks(s, 10_000)?);
    rows.extend(ordering_checks(s, 10, &[1, 4], 20_000)?);
    rows.extend(baseline_identity_checks(s, 10_000)?);
    rows.extend(baseline_grid_checks(s, cfg.p0, &[0.0, 1.0], 21, 200_000)?);
    Ok(rows)
}

pub fn write_property_suite(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let rows = run_property_suite(cfg)?;
    let path = output_path(cfg, "csv");
    let mut table = CsvTable::create(&path, &SUITE_HEADER)?;
    for r in &rows {
        table.row(&[
            r.check.to_string(),
            r.case.to_string(),
            r.estimator.clone(),
            r.coordinate.to_string(),
            num(r.value),
            num(r.reference),
            num(r.tolerance),
            r.pass.to_string(),
            r.detail.clone(),
        ])?;
    }
    let csv = table.finish()?;
    let mut by_check: Vec<(&str, usize, usize)> = Vec::new();
    for r in &rows {
        match by_check.iter_mut().find(|(c, _, _)| *c == r.check) {
            Some(e) => {
                e.1 += usize::from(r.pass);
                e.2 += 1;
            }
            None => by_check.push((r.check, usize::from(r.pass), 1)),
        }
    }
    let summary: Vec<_> = by_check
        .iter()
        .map(|(c, p, t)| serde_json::json!({ "check": c, "passed": p, "total": t }))
        .collect();
    let manifest = write_manifest(cfg, std::slice::from_ref(&csv), summary)?;
    Ok(vec![csv, manifest])
}
