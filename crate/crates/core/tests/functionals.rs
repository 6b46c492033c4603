//! Identities and convexity of the type functionals on random inputs.

use exlab::typespace::{cond_divergence, f_functional, mutual_information};
use exlab::{Channel, InputDistribution, JointType};
use proptest::prelude::*;

fn normalize(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn rows(raw: &[f64], k: usize) -> Vec<Vec<f64>> {
    raw.chunks(k).map(normalize).collect()
}

/// Input distribution, channel and two kernels, for `k`-ary alphabets.
fn setup(k: usize) -> impl Strategy<Value = (InputDistribution, Channel, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let cell = 0.02..1.0f64;
    (
        prop::collection::vec(cell.clone(), k),
        prop::collection::vec(cell.clone(), k * k),
        prop::collection::vec(cell.clone(), k * k),
        prop::collection::vec(cell, k * k),
    )
        .prop_map(move |(p, w, a, b)| {
            (
                InputDistribution::new(normalize(&p)).unwrap(),
                Channel::new(rows(&w, k)).unwrap(),
                rows(&a, k),
                rows(&b, k),
            )
        })
}

/// Shift joint mass around the cycle `(x0,y0) (x0,y1) (x1,y1) (x1,y0)`.
/// Both marginals stay fixed.
fn coupled(px: &InputDistribution, q: &JointType, cycle: (usize, usize, usize, usize), s: f64) -> Option<JointType> {
    let (x0, x1, y0, y1) = cycle;
    if x0 == x1 || y0 == y1 {
        return None;
    }
    let k = q.output_size();
    let mut joint: Vec<Vec<f64>> = (0..q.input_size()).map(|x| (0..k).map(|y| q.joint(x, y)).collect()).collect();
    let room = joint[x0][y1].min(joint[x1][y0]);
    let d = s * room;
    joint[x0][y0] += d;
    joint[x1][y1] += d;
    joint[x0][y1] -= d;
    joint[x1][y0] -= d;
    let kernel: Vec<Vec<f64>> = joint.iter().enumerate().map(|(x, r)| r.iter().map(|v| v / px.prob(x)).collect()).collect();
    JointType::from_kernel(px, &kernel).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exchange_identity(
        ((px, w, a, _), cycle) in (2usize..=3).prop_flat_map(|k| (setup(k), (0..k, 0..k, 0..k, 0..k))),
        s in 0.05..0.95f64,
    ) {
        let q = JointType::from_kernel(&px, &a).unwrap();
        if let Some(qt) = coupled(&px, &q, cycle, s) {
            prop_assert!(qt.kernel_distance(&q) > 0.0);
            let lhs = cond_divergence(&qt, &w).unwrap().0 + mutual_information(&q).0;
            let rhs = cond_divergence(&q, &w).unwrap().0 + mutual_information(&qt).0
                + f_functional(&q, &w).unwrap().0 - f_functional(&qt, &w).unwrap().0;
            prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn f_is_linear((px, w, a, b) in setup(3), alpha in 0.0..=1.0f64) {
        let (q0, q1) = (JointType::from_kernel(&px, &a).unwrap(), JointType::from_kernel(&px, &b).unwrap());
        let m = q0.mix(&q1, alpha).unwrap();
        let f = |q: &JointType| f_functional(q, &w).unwrap().0;
        prop_assert!((f(&m) - (alpha * f(&q0) + (1.0 - alpha) * f(&q1))).abs() <= 1e-12);
    }

    #[test]
    fn divergence_and_information_are_convex((px, w, a, b) in setup(3)) {
        let (q0, q1) = (JointType::from_kernel(&px, &a).unwrap(), JointType::from_kernel(&px, &b).unwrap());
        let m = q0.mix(&q1, 0.5).unwrap();
        let d = |q: &JointType| cond_divergence(q, &w).unwrap().0;
        let i = |q: &JointType| mutual_information(q).0;
        prop_assert!(d(&m) <= 0.5 * (d(&q0) + d(&q1)) + 1e-12);
        prop_assert!(i(&m) <= 0.5 * (i(&q0) + i(&q1)) + 1e-12);
    }

    #[test]
    fn f_is_nonpositive((px, w, a, _) in setup(2)) {
        let q = JointType::from_kernel(&px, &a).unwrap();
        prop_assert!(f_functional(&q, &w).unwrap().0 <= 0.0);
    }
}
