use arm_core::analytic::{arm_variance_peak, phi_grid, sup_over, worst_case_ratio_bound};
use arm_core::{
    ar_variance_univariate, arm_snr_univariate, arm_variance_univariate, reinforce_variance_univariate,
    true_grad_univariate, ToyProblem,
};

#[test]
fn arm_variance_is_even_and_bounded() {
    let (f1, f0) = (0.3, -1.2);
    let bound = (f1 - f0) * (f1 - f0) / 25.0;
    for phi in phi_grid(-12.0, 12.0, 0.01) {
        let a = arm_variance_univariate(f1, f0, phi);
        let b = arm_variance_univariate(f1, f0, -phi);
        assert!((a - b).abs() <= 1e-15 * bound.max(a));
        assert!(a >= 0.0 && a <= bound, "phi={phi}: {a}");
    }
}

#[test]
fn peak_location_and_height() {
    let (t, coeff) = arm_variance_peak();
    // (√5 − 1)/2 and its peak coefficient to 16 digits.
    assert!((t - 0.618_033_988_749_894_8).abs() <= 1e-15);
    assert!((coeff - 0.039_788_126_171_885_95).abs() <= 1e-15);
    assert!(coeff < 1.0 / 25.0);
    let sup = sup_over(&phi_grid(-5.0, 5.0, 1e-4), |phi| arm_variance_univariate(1.0, 0.0, phi));
    assert!((sup - coeff).abs() <= 1e-9);
}

#[test]
fn reinforce_variance_at_zero_logit() {
    for (f1, f0) in [(1.0, 0.0), (0.51 * 0.51, 0.49 * 0.49), (-2.0, 3.0)] {
        let expected = (f1 + f0) * (f1 + f0) / 16.0;
        assert!((reinforce_variance_univariate(f1, f0, 0.0) - expected).abs() <= 1e-15);
    }
}

#[test]
fn ar_variance_mirrors_under_swapped_outcomes() {
    let (f1, f0) = (0.8, 0.1);
    for phi in phi_grid(-4.0, 4.0, 0.25) {
        let a = ar_variance_univariate(f1, f0, phi);
        let b = ar_variance_univariate(f0, f1, -phi);
        assert!((a - b).abs() <= 1e-14);
    }
}

#[test]
fn arm_snr_value_and_parity() {
    assert!((arm_snr_univariate(0.0) - 48f64.sqrt() / 4.0).abs() <= 1e-12);
    for phi in phi_grid(0.0, 6.0, 0.1) {
        assert!((arm_snr_univariate(phi) - arm_snr_univariate(-phi)).abs() <= 1e-12);
    }
}

#[test]
fn toy_gradient_matches_closed_form() {
    let toy = ToyProblem::new(0.49).unwrap();
    for phi in phi_grid(-3.0, 3.0, 0.5) {
        let s = 1.0 / (1.0 + (-phi).exp());
        let expected = (1.0 - 2.0 * 0.49) * s * (1.0 - s);
        let g = true_grad_univariate(toy.f1(), toy.f0(), phi);
        assert!((g - expected).abs() <= 1e-15);
        assert_eq!(g, toy.true_grad(phi));
    }
}

#[test]
fn worst_case_ratio_bound_holds_for_the_toy() {
    let toy = ToyProblem::new(0.49).unwrap();
    let grid = phi_grid(-6.0, 6.0, 0.001);
    let arm = sup_over(&grid, |phi| arm_variance_univariate(toy.f1(), toy.f0(), phi));
    let reinforce = sup_over(&grid, |phi| reinforce_variance_univariate(toy.f1(), toy.f0(), phi));
    let bound = worst_case_ratio_bound(toy.f1(), toy.f0());
    assert!(arm / reinforce <= bound, "{} > {bound}", arm / reinforce);
}
