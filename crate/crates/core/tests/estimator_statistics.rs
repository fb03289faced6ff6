use arm_core::analytic::agreement;
use arm_core::stats::pearson;
use arm_core::{
    ar_variance_univariate, arm_variance_univariate, correlation_report, draw_estimates, estimator_moments,
    exact_gradient, exponential_race_sample, k_sample, reinforce_variance_univariate, sigmoid, CountingObjective,
    Estimator, EstimatorKind, LogitVector, Moments, RngStream, TableObjective, ToyProblem,
};

fn random_table(arity: usize, seed: u64, lo: f64, hi: f64) -> TableObjective {
    let mut s = RngStream::new(seed, 99).sampler();
    let values = (0..1 << arity).map(|_| lo + (hi - lo) * s.uniform()).collect();
    TableObjective::new(arity, values).unwrap()
}

#[test]
fn every_estimator_is_unbiased_on_random_tables() {
    let cases = [
        (1, vec![0.7]),
        (3, vec![-1.0, 0.2, 1.5]),
        (5, vec![0.0, -2.0, 0.5, 1.0, -0.3]),
    ];
    for (i, (arity, phi)) in cases.into_iter().enumerate() {
        let f = random_table(arity, 10 + i as u64, -1.0, 2.0);
        let phi = LogitVector::new(phi).unwrap();
        let exact = exact_gradient(&f, &phi).unwrap();
        let baseline = Estimator::ArConstBaseline(vec![0.4; arity]);
        for (j, est) in [Estimator::Reinforce, Estimator::Ar, Estimator::Arm, baseline]
            .iter()
            .enumerate()
        {
            let stream = RngStream::new(2024, (i * 10 + j) as u64);
            let r = estimator_moments(est, &f, &phi, 100_000, stream).unwrap();
            for v in 0..arity {
                let dev = (r.mean[v] - exact.values()[v]).abs();
                assert!(
                    dev <= 4.0 * r.std_err[v],
                    "{:?} V={arity} v={v}: mean {} exact {} se {}",
                    est.kind(),
                    r.mean[v],
                    exact.values()[v],
                    r.std_err[v]
                );
            }
        }
    }
}

#[test]
fn arm_zero_frequency_matches_agreement_probability() {
    let toy = ToyProblem::new(0.49).unwrap();
    for (k, phi) in [-1.0, 0.3, 1.5].into_iter().enumerate() {
        let samples = draw_estimates(
            &Estimator::Arm,
            &toy,
            &LogitVector::scalar(phi).unwrap(),
            200_000,
            RngStream::new(8, k as u64),
        )
        .unwrap();
        let n = samples.rows() as f64;
        let zeros = samples.column(0).filter(|&g| g == 0.0).count() as f64;
        let t = agreement(phi);
        let se = (t * (1.0 - t) / n).sqrt();
        assert!((zeros / n - t).abs() <= 4.0 * se, "phi={phi}: {} vs {t}", zeros / n);
    }
}

#[test]
fn arm_skips_evaluations_when_samples_agree() {
    let f = CountingObjective::new(random_table(3, 4, 0.0, 1.0));
    let phi = LogitVector::new(vec![2.0, -2.5, 3.0]).unwrap();
    let mut rng = RngStream::new(6, 0).sampler();
    let n = 20_000;
    let mut zero_draws = 0;
    for _ in 0..n {
        let g = arm_core::arm_grad(&f, &phi, &mut rng).unwrap();
        if g.values.iter().all(|&x| x == 0.0) {
            zero_draws += 1;
        }
    }
    assert!(zero_draws > 0);
    assert_eq!(f.calls(), 2 * (n - zero_draws));
}

#[test]
fn univariate_variances_match_closed_forms() {
    let toy = ToyProblem::new(0.49).unwrap();
    let (f1, f0) = (toy.f1(), toy.f0());
    for (k, phi) in [-2.0, 0.0, 1.5].into_iter().enumerate() {
        let lv = LogitVector::scalar(phi).unwrap();
        let checks: [(Estimator, f64); 3] = [
            (Estimator::Arm, arm_variance_univariate(f1, f0, phi)),
            (Estimator::Reinforce, reinforce_variance_univariate(f1, f0, phi)),
            (Estimator::Ar, ar_variance_univariate(f1, f0, phi)),
        ];
        for (j, (est, analytic)) in checks.into_iter().enumerate() {
            let r = estimator_moments(&est, &toy, &lv, 1_000_000, RngStream::new(31, (k * 3 + j) as u64)).unwrap();
            assert!(
                (r.variance[0] - analytic).abs() <= 4.0 * r.variance_se[0],
                "{:?} phi={phi}: {} vs {analytic} (se {})",
                est.kind(),
                r.variance[0],
                r.variance_se[0]
            );
        }
    }
}

#[test]
fn k_sample_variance_scales_inversely_with_k() {
    let f = random_table(3, 21, 0.0, 1.0);
    let phi = LogitVector::new(vec![0.5, -0.5, 1.0]).unwrap();
    let single = estimator_moments(&Estimator::Arm, &f, &phi, 400_000, RngStream::new(3, 0)).unwrap();
    let k = 10;
    let reps = 40_000;
    let mut rng = RngStream::new(3, 1).sampler();
    let mut rows = arm_core::SampleMatrix::with_capacity(3, reps);
    for _ in 0..reps {
        rows.push(&k_sample(&Estimator::Arm, &f, &phi, k, &mut rng).unwrap().values);
    }
    for (v, m) in rows.summary().iter().enumerate() {
        let expected = single.variance[v] / k as f64;
        assert!(
            (m.variance / expected - 1.0).abs() <= 0.10,
            "v={v}: {} vs {expected}",
            m.variance
        );
    }
}

#[test]
fn correlation_predicts_variance_ratio() {
    let f = random_table(2, 77, 0.0, 1.0);
    let phi = LogitVector::new(vec![1.0, 1.0]).unwrap();
    let n = 400_000;
    let report = correlation_report(&f, &phi, n, &mut RngStream::new(12, 0).sampler()).unwrap();
    let arm = estimator_moments(&Estimator::Arm, &f, &phi, n, RngStream::new(12, 1)).unwrap();
    let mut rng = RngStream::new(12, 2).sampler();
    let mut ar2 = arm_core::SampleMatrix::with_capacity(2, n);
    for _ in 0..n {
        ar2.push(
            &k_sample(&Estimator::Ar, &f, &phi, EstimatorKind::Ar.matched_budget(1), &mut rng)
                .unwrap()
                .values,
        );
    }
    let ar2 = ar2.summary();
    for v in 0..2 {
        let predicted = report.variance_ratio[v].unwrap();
        let measured = arm.variance[v] / ar2[v].variance;
        assert!(
            (predicted / measured - 1.0).abs() <= 0.10,
            "v={v}: {predicted} vs {measured}"
        );
    }
}

#[test]
fn arm_beats_matched_budget_ar_for_nonnegative_objectives() {
    for seed in 0..4 {
        let f = random_table(3, 100 + seed, 0.0, 1.0);
        let phi = LogitVector::new(vec![-1.0, 0.4, 2.0]).unwrap();
        let n = 100_000;
        let r = correlation_report(&f, &phi, n, &mut RngStream::new(seed, 0).sampler()).unwrap();
        for rho in r.rho.iter().flatten() {
            assert!(*rho >= -4.0 / (n as f64).sqrt(), "seed={seed}: rho={rho}");
        }
    }
}

#[test]
fn exponential_race_agrees_with_threshold_sampling() {
    let n = 400_000;
    for (k, phi) in [-2.0, -0.3, 0.8, 3.0].into_iter().enumerate() {
        let mut a = RngStream::new(40, k as u64).sampler();
        let mut b = RngStream::new(41, k as u64).sampler();
        let p = sigmoid(phi).unwrap();
        let race = (0..n)
            .map(|_| exponential_race_sample(&mut a, phi).unwrap() as usize)
            .sum::<usize>() as f64;
        let thr = (0..n).filter(|_| b.uniform() < p).count() as f64;
        let (pa, pb) = (race / n as f64, thr / n as f64);
        let pooled = 0.5 * (pa + pb);
        let se = (2.0 * pooled * (1.0 - pooled) / n as f64).sqrt();
        assert!((pa - pb).abs() <= 4.0 * se, "phi={phi}: race {pa} threshold {pb}");
    }
}

#[test]
fn split_streams_are_uncorrelated() {
    let root = RngStream::new(5, 0);
    let n = 100_000;
    let draws: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let mut s = root.split(i).sampler();
            (0..n).map(|_| s.uniform()).collect()
        })
        .collect();
    for i in 0..4 {
        let m = Moments::from_slice(&draws[i]);
        assert!((m.mean - 0.5).abs() <= 4.0 * m.std_err());
        for j in i + 1..4 {
            let r = pearson(&draws[i], &draws[j]).unwrap();
            assert!(r.abs() <= 4.0 / (n as f64).sqrt(), "streams {i},{j}: r={r}");
        }
    }
}

#[test]
fn replaying_a_stream_reproduces_estimates() {
    let f = random_table(4, 1, -1.0, 1.0);
    let phi = LogitVector::new(vec![0.1, 0.2, -0.3, 0.4]).unwrap();
    let a = draw_estimates(&Estimator::Arm, &f, &phi, 1000, RngStream::new(9, 3)).unwrap();
    let b = draw_estimates(&Estimator::Arm, &f, &phi, 1000, RngStream::new(9, 3)).unwrap();
    assert_eq!(a, b);
}
