mod common;

#[test]
fn every_loss_matches_finite_differences() {
    let report = common::gradient_suite(11);
    assert_eq!(report.cases.len(), 17);
    assert!(report.min_params() >= 200);
    for (label, worst, _) in &report.cases {
        assert!(*worst < 1e-6, "{label}: worst relative error {worst:e}");
    }
}

#[test]
fn student_loss_reduces_to_ppo() {
    let gap = common::reduction_gap(12, 200);
    assert!(gap <= 1e-12, "largest per-sample difference {gap:e}");
}

#[test]
fn clipping_algebra_holds() {
    let c = common::clipping_algebra(13, 10_000);
    assert_eq!(c.eps_prime_out_of_range, 0);
    assert!(c.max_shift_error < 1e-12, "shift error {:e}", c.max_shift_error);
    assert_eq!(c.switch_monotonicity_violations, 0);
}
