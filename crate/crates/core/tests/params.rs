use proptest::prelude::*;
use proxpda::params::{
    convex_coefficient_bound, convex_coefficient_threshold, descent_coefficient_curvature, descent_coefficient_step,
    inexact_bounds, inexact_params, ip_coefficient, mf_conditions, mf_min_beta, mf_suggest, nonconvex_params,
    penalty_bound, proximal_coefficient_bound, DEFAULT_MARGIN,
};
use proxpda::{ErrorSchedule, ParamError, PenaltySchedule};

proptest! {
    #[test]
    fn penalty_bound_guarantees_step_descent(
        c in 0.1..50.0f64,
        l in 0.01..10.0f64,
        sigma in 0.01..10.0f64,
    ) {
        let b = penalty_bound(c, l, sigma).unwrap();
        // β·coefficient is ½β² − (L/2 + cL)β − 2L²/σ; its positive root
        let a = 2.0 * c + 1.0;
        let root = 0.5 * (l * a + (l * l * a * a + 16.0 * l * l / sigma).sqrt());
        prop_assert!(b >= root * (1.0 - 1e-12));
        prop_assert!(descent_coefficient_step(c, b * 1.001, l, sigma) > 0.0);
        prop_assert!(descent_coefficient_step(c, root * 0.999, l, sigma) < 0.0);
        if l >= 1.0 {
            let display = 0.5 * l * (a + (a * a + 16.0 * l * l / sigma).sqrt());
            prop_assert!((b - display).abs() < 1e-12 * b);
        } else {
            prop_assert!((b - root).abs() < 1e-12 * b);
        }
        prop_assert!(b > l);
    }

    #[test]
    fn nonconvex_params_give_positive_descent(
        delta in 0.0..5.0f64,
        l in 0.01..10.0f64,
        norm_btb in 0.0..20.0f64,
        sigma in 0.01..10.0f64,
        margin in 1.001..2.0f64,
    ) {
        prop_assume!(delta > 0.0 || norm_btb > 0.0);
        let p = nonconvex_params(delta, l, norm_btb, sigma, margin).unwrap();
        prop_assert!(descent_coefficient_step(p.c, p.beta, l, sigma) > 0.0);
        if norm_btb > 0.0 {
            prop_assert!(descent_coefficient_curvature(p.c, p.beta, norm_btb, sigma) > 0.0);
        }
        prop_assert!(p.c * l >= delta * (1.0 - 1e-12));
        prop_assert!((p.c - margin * (delta / l).max(4.0 * norm_btb / sigma)).abs() < 1e-12 * p.c);
    }

    #[test]
    fn curvature_coefficient_vanishes_at_threshold(
        beta in 0.1..100.0f64,
        norm_btb in 0.1..20.0f64,
        sigma in 0.01..10.0f64,
    ) {
        let c0 = 4.0 * norm_btb / sigma;
        prop_assert!(descent_coefficient_curvature(c0, beta, norm_btb, sigma).abs() < 1e-9 * beta * c0);
        prop_assert!(descent_coefficient_curvature(c0 * 1.01, beta, norm_btb, sigma) > 0.0);
    }

    #[test]
    fn convex_bound_dominates_each_term(
        beta in 0.001..100.0f64,
        l in 0.0..10.0f64,
        sigma in 0.01..10.0f64,
        norm_btb in 0.0..20.0f64,
        delta in 0.0..5.0f64,
    ) {
        let t = convex_coefficient_threshold(beta, l, sigma, norm_btb, delta).unwrap();
        let c = convex_coefficient_bound(beta, l, sigma, norm_btb, delta).unwrap();
        prop_assert!(t >= 2.0 * l / (beta * sigma) && t >= 4.0 * norm_btb / sigma && t >= delta / beta);
        let m = [2.0 * l / (beta * sigma), 4.0 * norm_btb / sigma, delta / beta];
        prop_assert!(m.iter().any(|v| *v == t));
        prop_assert!((c - DEFAULT_MARGIN * t).abs() <= 1e-15 * c.max(1.0));
    }

    #[test]
    fn inexact_penalty_uses_shifted_lipschitz(
        delta in 0.0..5.0f64,
        l in 0.01..10.0f64,
        norm_btb in 0.1..20.0f64,
        sigma in 0.01..10.0f64,
    ) {
        let raw = inexact_bounds(delta, l, norm_btb, sigma).unwrap();
        prop_assert_eq!(raw.c, (delta / l).max(6.0 * norm_btb / sigma));
        // same closed form as the exact bound with L replaced by L + 1
        let b = penalty_bound(raw.c, l + 1.0, sigma).unwrap();
        prop_assert!((raw.beta - b).abs() < 1e-12 * b);
        let p = inexact_params(delta, l, norm_btb, sigma, 1.05).unwrap();
        prop_assert_eq!(p.c, raw.c);
        prop_assert!((p.beta - 1.05 * raw.beta).abs() < 1e-12 * p.beta);
    }

    #[test]
    fn power_schedule_meets_its_conditions(beta0 in 0.01..10.0f64, alpha in 0.05..1.0f64) {
        let s = PenaltySchedule::power(beta0, alpha).unwrap();
        let a = s.audit(2000, None);
        prop_assert!(a.monotone && a.increments_bounded, "{a:?}");
        prop_assert!((s.beta(0) - beta0).abs() < 1e-15 * beta0);
        // the largest increment is the first one for a concave power rule
        prop_assert!((a.max_increment - (s.beta(1) - s.beta(0))).abs() < 1e-12 * beta0);
        let direct: f64 = (0..=2000).map(|r| 1.0 / (beta0 * ((1 + r) as f64).powf(alpha))).sum();
        prop_assert!((a.reciprocal_sum - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn error_tail_bound_dominates_partial_sums(
        eps0 in 0.01..10.0f64,
        p in 0.55..3.0f64,
        h in 1usize..200,
    ) {
        let e = ErrorSchedule::new(eps0, p).unwrap();
        let partial = e.square_sum(h, h + 20_000);
        prop_assert!(partial <= e.tail_bound(h) * (1.0 + 1e-12));
        prop_assert!(e.eps(h + 1) < e.eps(h));
        let diff: f64 = (h..=h + 10).map(|r| (e.eps(r + 1) - e.eps(r)).powi(2)).sum();
        prop_assert!((e.difference_square_sum(h, h + 10) - diff).abs() <= 1e-15 * diff.max(1e-300));
    }

    #[test]
    fn ip_coefficient_is_min_of_two_terms(
        l in 0.01..10.0f64,
        omega in 0.01..5.0f64,
        norm_btb in 1.01..20.0f64,
    ) {
        let c = ip_coefficient(l, omega, norm_btb).unwrap();
        prop_assert!(c <= 1.0 / (4.0 * l) && c <= 1.0 / (12.0 * omega * norm_btb));
        prop_assert!(c == 1.0 / (4.0 * l) || c == 1.0 / (12.0 * omega * norm_btb));
    }

    #[test]
    fn mf_suggestion_passes_and_is_nearly_minimal(
        tau in 0.1..20.0f64,
        gamma in 0.0..2.0f64,
        sigma in 0.05..3.0f64,
        norm_btb in 1.0..8.0f64,
        nu in 0.01..2.0f64,
    ) {
        let p = mf_suggest(tau, gamma, sigma, norm_btb, nu).unwrap();
        prop_assert!(mf_conditions(p.beta, p.c, p.d, tau, gamma, sigma, norm_btb).passed());
        prop_assert!((p.c - (4.0 * norm_btb / sigma + nu)).abs() < 1e-12 * p.c);
        prop_assert!(p.d >= 4.0_f64.max(2.0 * p.c * tau) * (1.0 - 1e-12));
        let b = mf_min_beta(p.c, p.d, tau, gamma, sigma, norm_btb).unwrap();
        prop_assert_eq!(b, p.beta);
        // 1% resolution of the search
        prop_assert!(!mf_conditions(p.beta / 1.0101, p.c, p.d, tau, gamma, sigma, norm_btb).passed());
    }
}

#[test]
fn mf_conditions_match_hand_evaluation() {
    // β = 100, c = 2, d = 10, τ = 1, γ = 0.5, σ = 0.5, ‖BᵀB‖ = 0.4
    let r = mf_conditions(100.0, 2.0, 10.0, 1.0, 0.5, 0.5, 0.4).residuals;
    let expect = [
        101.0 / 2.0 - 8.0 * 2.0 / 50.0 - 10.0,
        0.5 - 8.0 / 50.0 - 0.2,
        0.5 - 8.0 / 50.0 - 0.2,
        100.0 - 2.0 * 100.0 * 0.4 / 0.5,
    ];
    for k in 0..4 {
        assert!((r[k] - expect[k]).abs() < 1e-12, "{k}: {} vs {}", r[k], expect[k]);
    }
    let failing = mf_conditions(1.0, 0.1, 1.0, 1.0, 0.0, 1.0, 1.0);
    assert!(!failing.passed());
    assert!(failing.failed().contains(&3));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(penalty_bound(0.0, 1.0, 1.0).is_err());
    assert!(penalty_bound(1.0, -1.0, 1.0).is_err());
    assert!(proximal_coefficient_bound(-1.0, 1.0, 1.0, 1.0).is_err());
    assert!(proximal_coefficient_bound(1.0, 1.0, 1.0, 0.0).is_err());
    // δ = 0 and no signless term leaves c = 0
    assert!(nonconvex_params(0.0, 1.0, 0.0, 1.0, 1.01).is_err());
    assert!(nonconvex_params(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    assert!(convex_coefficient_threshold(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
    assert!(ip_coefficient(1.0, 0.0, 2.0).is_err());
    assert_eq!(PenaltySchedule::power(1.0, 1.5), Err(ParamError::BadExponent(1.5)));
    assert!(PenaltySchedule::power(0.0, 0.5).is_err());
    assert!(PenaltySchedule::constant(-1.0).is_err());
    assert_eq!(ErrorSchedule::new(1.0, 0.5), Err(ParamError::BadErrorExponent(0.5)));
    assert!(ErrorSchedule::zero().is_exact());
    assert!(mf_suggest(0.0, 0.1, 1.0, 1.0, 1.0).is_err());
    assert!(mf_suggest(1.0, 0.1, 1.0, 1.0, 0.0).is_err());
    let c = PenaltySchedule::constant(3.0).unwrap();
    assert_eq!(c.omega(), 0.0);
    let a = c.audit(100, None);
    assert!(a.monotone && a.increments_bounded && !a.decayed);
}
