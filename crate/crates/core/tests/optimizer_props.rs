//! Constraint relaxation, witness feasibility and refinement of the nested
//! search on random binary channels.

use exlab::optimizer::{
    f_ge, f_pair_ge, i_ge, minimize_pair, minimize_single, Bound, Constraint, Objective, PairObjective, SearchOptions,
};
use exlab::typespace::mutual_information;
use exlab::{Channel, InputDistribution, Model};
use proptest::prelude::*;

const FEAS: f64 = 1e-6;

fn binary_model() -> impl Strategy<Value = Model> {
    (0.01..0.45f64, 0.01..0.45f64, 0.2..0.8f64).prop_map(|(a, b, p)| {
        Model::new(Channel::binary(a, b).unwrap(), InputDistribution::new(vec![p, 1.0 - p]).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxing_constraints_never_increases_the_minimum(m in binary_model(), rf in 0.0..0.9f64, c in -1.2..-0.05f64) {
        let opts = SearchOptions::default();
        let r = rf * m.max_rate();
        let obj = Objective::d();
        let all = [i_ge(r), f_ge(Bound::Const(c))];
        let full = minimize_single(&m, &obj, &all, None, &opts).unwrap();
        let one = minimize_single(&m, &obj, &all[..1], None, &opts).unwrap();
        let none = minimize_single(&m, &obj, &[], None, &opts).unwrap();
        prop_assert!(one.value.0 <= full.value.0 + 1e-9, "{} > {}", one.value, full.value);
        prop_assert!(none.value.0 <= one.value.0 + 1e-9);

        // Witness feasibility and value.
        if full.feasible {
            let q = full.single_witness().unwrap();
            let e = m.evals(q);
            prop_assert!(e.i >= r - FEAS && e.f >= c - FEAS, "I = {}, f = {}", e.i, e.f);
            prop_assert!((e.d - full.value.0).abs() < 1e-12);
        } else {
            prop_assert_eq!(full.value.0, f64::INFINITY);
        }
    }

    #[test]
    fn pair_witnesses_are_feasible(m in binary_model(), rf in 0.0..0.9f64, t in -0.1..0.1f64) {
        let opts = SearchOptions::default();
        let r = rf * m.max_rate();
        let obj = PairObjective { tilde: Objective::d(), single: Objective::i() };
        let res = minimize_pair(&m, &obj, &[Constraint::MarginalEq, f_pair_ge(t), i_ge(r)], &opts).unwrap();
        prop_assert!(res.feasible);
        let (qt, q) = (res.tilde_witness().unwrap(), res.single_witness().unwrap());
        for (a, b) in qt.marginal_probs().iter().zip(q.marginal_probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(m.f(q) + t >= m.f(qt) - FEAS);
        prop_assert!(mutual_information(q).0 >= r - FEAS);
        prop_assert!((m.d(qt) + mutual_information(q).0 - res.value.0).abs() < 1e-12);
    }

    #[test]
    fn halving_the_final_step_stays_within_the_gap(m in binary_model(), rf in 0.05..0.9f64) {
        let r = rf * m.max_rate();
        let coarse = SearchOptions::default();
        let fine = SearchOptions { fine: coarse.fine / 2.0, ..coarse };
        let obj = PairObjective { tilde: Objective::d(), single: Objective::i() };
        let cons = [Constraint::MarginalEq, f_pair_ge(0.0), i_ge(r)];
        let a = minimize_pair(&m, &obj, &cons, &coarse).unwrap();
        let b = minimize_pair(&m, &obj, &cons, &fine).unwrap();
        let gap = a.gap_estimate.max(b.gap_estimate);
        prop_assert!((a.value.0 - b.value.0).abs() <= gap + 1e-9, "{} vs {} (gap {gap})", a.value, b.value);
    }
}
