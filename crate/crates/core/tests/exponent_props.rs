//! Structural properties of the exponent formulas and optimal thresholds.

use exlab::exponents::{
    lambda1_exponents, optimal_exponents, psi_error_exponent, psi_list_exponent, GeneralThreshold, OutputThreshold,
};
use exlab::optimizer::{
    f_pair_ge, i_le, minimize_pair, minimize_single, Constraint, Objective, PairObjective, SearchOptions,
};
use exlab::thresholds::{critical_rate_low, g_star, h_star, optimal_list_exponent, Class, GStarMemo};
use exlab::typespace::mutual_information;
use exlab::{Channel, InputDistribution, Model};
use proptest::prelude::*;

fn model(ch: Channel) -> Model {
    Model::new(ch, InputDistribution::uniform(2).unwrap()).unwrap()
}

fn binary_model() -> impl Strategy<Value = Model> {
    (0.01..0.4f64, 0.01..0.4f64).prop_map(|(a, b)| model(Channel::binary(a, b).unwrap()))
}

fn opts() -> SearchOptions {
    SearchOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn general_error_exponent_is_nonincreasing_in_rate(m in binary_model(), t in -0.1..0.1f64) {
        let h = GeneralThreshold::scaled_ml(&m, t);
        let imax = m.max_rate();
        let mut prev = f64::INFINITY;
        for k in 0..5 {
            let r = imax * k as f64 / 4.0;
            let ee = psi_error_exponent(&m, r, &h, &opts()).unwrap().value.0;
            let el = psi_list_exponent(&m, r, &h, &opts()).unwrap().value.0;
            prop_assert!(ee >= 0.0 && el >= -r - 1e-12, "R = {r}: E_e = {ee}, E_l = {el}");
            prop_assert!(ee <= prev + 1e-6, "R = {r}: {ee} > {prev}");
            prev = ee;
        }
    }

    #[test]
    fn output_only_error_exponent_ignores_rate(m in binary_model(), c in -1.0..-0.05f64) {
        let g = OutputThreshold::new("affine", move |q| c + 0.3 * q.prob(0));
        let (a, _) = lambda1_exponents(&m, 0.0, &g, &opts()).unwrap();
        let (b, lb) = lambda1_exponents(&m, 0.5 * m.max_rate(), &g, &opts()).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!(b.value.0 >= 0.0 && lb.value.0 >= -0.5 * m.max_rate() - 1e-12);
    }
}

/// Best list exponents at a matched target are ordered: each simplified
/// family is at most the general family, which is at most the optimal rule.
#[test]
fn class_ordering_at_matched_target() {
    for (ch, t) in [(Channel::w1(), 0.05), (Channel::w2(), -0.05)] {
        let m = model(ch);
        for k in 1..4 {
            let r = m.max_rate() * k as f64 / 5.0;
            let (ee, el) = optimal_exponents(&m, r, t, &opts()).unwrap();
            let e = ee.value.0;
            let get = |c| optimal_list_exponent(&m, c, r, e, &opts()).unwrap().value.0;
            let (psi, l1, l2) = (get(Class::Psi), get(Class::Lambda1), get(Class::Lambda2));
            assert!(l1 <= psi + 2e-3, "R = {r}: output-only {l1} > general {psi}");
            assert!(l2 <= psi + 2e-3, "R = {r}: scaled ML {l2} > general {psi}");
            assert!(psi <= el.value.0 + 2e-3, "R = {r}: general {psi} > optimal {}", el.value);
        }
    }
}

/// Along the general family's optimal list-exponent witness, the largest
/// threshold over low-information types of the same output marginal never
/// exceeds the threshold at the witness.
#[test]
fn low_information_maximum_stays_below_threshold_at_witness() {
    let m = model(Channel::w1());
    let memo = GStarMemo::new(&m, &opts());
    for (r, e) in [(0.1, 0.3), (0.25, 0.2), (0.4, 0.05)] {
        let res = optimal_list_exponent(&m, Class::Psi, r, e, &opts()).unwrap();
        let qt = res.tilde.expect("witness");
        let qy = qt.marginal();
        let memo2 = memo.clone();
        let max = minimize_single(
            &m,
            &Objective::new(move |q, _| -memo2.h_star(q, r, e)),
            // Shrink by the feasibility tolerance so I(Q') never exceeds R.
            &[i_le(r - opts().feas_tol)],
            Some(&qy),
            &opts(),
        )
        .unwrap();
        let v_star = -max.value.0;
        let g = g_star(&m, &qy, e, &opts()).unwrap().0;
        // Same memo on both sides; when I(Q~) <= R the two are equal.
        let h = memo.h_star(&qt, r, e);
        assert!((h - h_star(&m, &qt, r, e, &opts()).unwrap().0).abs() < 1e-4);
        assert!((v_star - g).abs() < 1e-3, "max {v_star} vs g* {g}");
        assert!(v_star <= h + 1e-6, "R = {r}, E = {e}: {v_star} > {h}, I(Q~) = {}", mutual_information(&qt).0);
    }
}

/// With a zero offset the rate-free pair problem is solved on the diagonal.
#[test]
fn lower_critical_rate_at_zero_offset_has_diagonal_witness() {
    for ch in [Channel::w1(), Channel::w2()] {
        let m = model(ch);
        let cr = critical_rate_low(&m, 0.0, &opts()).unwrap();
        assert!(cr.value.0 > 0.0 && cr.value.0 <= m.max_rate() + 1e-9);
        assert!((mutual_information(&cr.witness).0 - cr.value.0).abs() < 1e-12);
        let obj = PairObjective { tilde: Objective::d(), single: Objective::i() };
        let res = minimize_pair(&m, &obj, &[Constraint::MarginalEq, f_pair_ge(0.0)], &opts()).unwrap();
        let (qt, q) = (res.tilde_witness().unwrap(), res.single_witness().unwrap());
        let dist = qt.kernel_distance(q);
        assert!(dist < 1e-3, "witnesses differ by {dist}");
        assert!(qt.kernel_distance(&cr.witness) < 1e-9);
    }
}
