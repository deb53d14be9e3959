mod common;

use common::*;
use weylcalc::fsring::{resum_evaluate, sharp, sharp_power, CutoffConfig, FormalSeries, Strategy};
use weylcalc::parametrix::{
    hypoellipticity_profile, minus_difference, one_minus_lambda_q, parametrix, polar_grid, resolvent_parametrix,
    verify_left_identity, verify_right_identity,
};
use weylcalc::weights::WeightSequence;
use weylcalc::{Error, PhasePoint, Registry, SymExpr};

/// Solves `(q # a)_j = 0` order by order with the sequence-sum sharp oracle.
fn oracle_parametrix(a: &SymExpr, n: usize) -> Vec<SymExpr> {
    let reg = a.registry().clone();
    let q0 = a.try_inverse().unwrap();
    let mut q = vec![q0.clone()];
    let mut aa = vec![a.clone()];
    aa.resize(n, SymExpr::zero(&reg));
    for j in 1..n {
        let mut trial = q.clone();
        trial.resize(n, SymExpr::zero(&reg));
        let rest = naive_sharp(&trial, &aa, j + 1)[j].clone();
        q.push(-&q0.mul(&rest).unwrap());
    }
    q
}

#[test]
fn oscillator_parametrix_terms() {
    let reg = osc_registry();
    let a = ex(&reg, "a");
    let q = parametrix(&a, 4).unwrap();
    assert_eq!(q.term(0), &ex(&reg, "a^-1"));
    assert!(q.term(1).is_zero());
    assert_eq!(q.term(2), &ex(&reg, "-a^-3 + 2*(x^2 + xi^2)*a^-4"));
    assert_eq!(q.terms(), oracle_parametrix(&a, 4).as_slice());
}

#[test]
fn q1_vanishes_for_other_symbols() {
    let reg = Registry::builder(1)
        .base("b", "2 + x^4 + x^2*xi^2 + 3*xi^2")
        .unwrap()
        .build()
        .unwrap();
    let b = ex(&reg, "b^(3/2)");
    let q = parametrix(&b, 3).unwrap();
    assert!(q.term(1).is_zero());
    assert_eq!(q.terms(), oracle_parametrix(&b, 3).as_slice());
    assert!(verify_left_identity(&q, &b, 3).unwrap().is_zero());
}

#[test]
fn left_and_right_identities() {
    let reg = osc_registry();
    let a = ex(&reg, "a");
    let q = parametrix(&a, 4).unwrap();
    assert!(verify_left_identity(&q, &a, 4).unwrap().is_zero());
    assert!(verify_right_identity(&q, &a, 4).unwrap().is_zero());
    let two = ex(&reg, "2");
    let q = parametrix(&two, 3).unwrap();
    assert_eq!(q.term(0), &ex(&reg, "1/2"));
    assert!(verify_left_identity(&q, &two, 3).unwrap().is_zero());
}

#[test]
fn non_invertible_symbol_is_rejected() {
    let reg = osc_registry();
    assert!(matches!(
        parametrix(&ex(&reg, "x^2 + xi^2 + 2"), 2),
        Err(Error::InvalidInput(_))
    ));
    let lam = reg.param("lambda").unwrap();
    assert!(resolvent_parametrix(&ex(&reg, "2 + x^2 + xi^2"), lam, 2).is_err());
}

#[test]
fn resolvent_terms() {
    let reg = osc_registry();
    let lam = reg.param("lambda").unwrap();
    let a0 = ex(&reg, "a");
    let ql = resolvent_parametrix(&a0, lam, 3).unwrap();
    assert_eq!(ql.term(0), &ex(&reg, "al^-1"));
    assert!(ql.term(1).is_zero());
    assert_eq!(ql.term(2), &ex(&reg, "-al^-3 + 2*(x^2 + xi^2)*al^-4"));
    let q = parametrix(&a0, 3).unwrap();
    for w in [PhasePoint::d1(0.3, 1.7), PhasePoint::d1(-4.0, 2.0)] {
        for j in 0..3 {
            let lhs = ql.term(j).evaluate(&w.clone().with("lambda", 0.0)).unwrap();
            let rhs = q.term(j).evaluate(&w).unwrap();
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }
}

#[test]
fn resolvent_algebra() {
    let reg = osc_registry();
    let lam = reg.param("lambda").unwrap();
    let mu = reg.param("mu").unwrap();
    let a0 = ex(&reg, "a");
    let n = 3;
    let ql = resolvent_parametrix(&a0, lam, n).unwrap();
    let qm = resolvent_parametrix(&a0, mu, n).unwrap();

    let lm = sharp(&ql, &qm, n).unwrap();
    let rhs = lm.mul_expr(&minus_difference(lam, mu, &reg)).unwrap();
    assert!(ql.sub(&qm).unwrap().sub(&rhs).unwrap().is_zero(), "resolvent identity");
    assert!(lm.sub(&sharp(&qm, &ql, n).unwrap()).unwrap().is_zero(), "commutation");

    let a0s = FormalSeries::single(a0.clone(), n);
    let target = one_minus_lambda_q(&ql, lam).unwrap();
    assert!(sharp(&a0s, &ql, n).unwrap().sub(&target).unwrap().is_zero());
    assert!(sharp(&ql, &a0s, n).unwrap().sub(&target).unwrap().is_zero());

    for k in 1..=3u32 {
        let g = sharp_power(&ql, k, n).unwrap();
        let g1 = sharp_power(&ql, k + 1, n).unwrap();
        for j in 0..n {
            let lhs = g.term(j).derivative(lam);
            let rhs = g1.term(j).scale(&c(-(k as i64), 0, 1));
            assert_eq!(lhs, rhs, "k = {k}, j = {j}");
        }
    }
}

#[test]
fn resummed_parametrix_near_inverse() {
    let reg = osc_registry();
    let a = ex(&reg, "a");
    let q = parametrix(&a, 6).unwrap();
    let ws = WeightSequence::gevrey(1.0, 20).unwrap();
    let cfg = CutoffConfig::from_weights(4.0, &ws).unwrap();
    let r = (99.0f64).sqrt();
    for k in 0..12 {
        let th = k as f64 * 0.5;
        let w = PhasePoint::d1(r * th.cos(), r * th.sin());
        assert!((w.japanese() - 10.0).abs() < 1e-12);
        let inv = 1.0 / a.evaluate(&w).unwrap().re;
        let q2 = q.term(2).evaluate(&w).unwrap().norm();
        for s in [Strategy::Cutoff, Strategy::SmallestTerm] {
            let v = resum_evaluate(&q, &cfg, &w, s).unwrap();
            assert!((v.re - inv).abs() <= 2.0 * q2, "{s:?}: {} vs {inv}", v.re);
        }
    }
    let origin = PhasePoint::d1(0.0, 0.0);
    let v = resum_evaluate(&q, &cfg, &origin, Strategy::Cutoff).unwrap();
    assert_eq!(v.re, 1.0);
}

#[test]
fn hypoellipticity_of_the_oscillator() {
    let reg = osc_registry();
    let ws = WeightSequence::gevrey(2.0, 20).unwrap();
    let grid = polar_grid(&[1.0, 3.0, 10.0, 30.0], 16);
    let prof = hypoellipticity_profile(&ex(&reg, "a"), &ws, 1.0, &grid, 4).unwrap();
    assert!(prof.fitted_h.is_finite() && prof.fitted_h > 0.0);
    assert!(prof.fitted_c >= prof.max_ratio_at(0));
    assert!(prof.ratio_table.iter().all(|e| e.ratio.is_finite() && e.ratio >= 0.0));
    assert!(prof.lower_bound_ok);

    let prof = hypoellipticity_profile(&ex(&reg, "1"), &ws, 1.0, &grid, 3).unwrap();
    assert_eq!(prof.fitted_c, 1.0);
    for k in 1..=3 {
        assert_eq!(prof.max_ratio_at(k), 0.0);
    }

    let err = hypoellipticity_profile(&ex(&reg, "x^2 + xi^2"), &ws, 1.0, &grid, 2).unwrap_err();
    assert!(matches!(err, Error::DomainViolation(_)));
}

#[test]
fn exponential_symbol_has_half_decay() {
    // e^{a^{1/4}} written as the atom e^{-t a^{1/4}} at t = -1.
    let reg = Registry::builder(1)
        .param("t")
        .unwrap()
        .base("a", "1 + x^2 + xi^2")
        .unwrap()
        .exp_atom("t", "a^(1/4)")
        .unwrap()
        .build()
        .unwrap();
    let e = ex(&reg, "exp");
    let ws = WeightSequence::gevrey(2.0, 20).unwrap();
    let ring = |r: f64| -> Vec<PhasePoint> {
        polar_grid(&[r], 12)
            .into_iter()
            .skip(1)
            .map(|p| p.with("t", -1.0))
            .collect()
    };
    let max_at = |rho: f64, r: f64, k: u32| {
        hypoellipticity_profile(&e, &ws, rho, &ring(r), 3)
            .unwrap()
            .max_ratio_at(k)
    };
    for k in 1..=3 {
        let half: Vec<f64> = [100.0, 1000.0, 10000.0].iter().map(|&r| max_at(0.5, r, k)).collect();
        let full: Vec<f64> = [100.0, 1000.0, 10000.0].iter().map(|&r| max_at(1.0, r, k)).collect();
        // Log-log slope over the last decade: ~0 at ρ = 1/2, ~k/2 at ρ = 1.
        let slope = |v: &[f64]| (v[2] / v[1]).log10();
        assert!(slope(&half).abs() < 0.15, "k = {k}: {half:?}");
        assert!((slope(&full) - 0.5 * k as f64).abs() < 0.15, "k = {k}: {full:?}");
    }
}
