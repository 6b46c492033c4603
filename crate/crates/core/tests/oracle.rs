//! Optimizer and exponent values against the independent dense-grid oracle.

mod common;

use common::Bin;
use exlab::exponents::{e_a, e_b};
use exlab::optimizer::SearchOptions;
use exlab::{Channel, InputDistribution, Model};

fn model(ch: Channel) -> Model {
    Model::new(ch, InputDistribution::uniform(2).unwrap()).unwrap()
}

fn check(name: &str, ours: f64, oracle: f64, tol: f64) {
    println!("{name}: optimizer {ours:.6} oracle {oracle:.6} diff {:.2e}", ours - oracle);
    assert!((ours - oracle).abs() <= tol, "{name}: {ours} vs {oracle}");
}

#[test]
fn e_a_matches_dense_grid() {
    let o = SearchOptions::default();
    let m = model(Channel::w1());
    for (r, t) in [(0.2, 0.05), (0.3, 0.05)] {
        check(&format!("E_a W1 R={r} T={t}"), e_a(&m, r, t, &o).unwrap().value.0, common::e_a(&Bin::bsc(0.01), r, t), 2e-3);
    }
}

#[test]
fn e_b_matches_dense_grid() {
    let o = SearchOptions::default();
    check("E_b W1 R=0.2 T=0.05", e_b(&model(Channel::w1()), 0.2, 0.05, &o).unwrap().value.0, common::e_b(&Bin::bsc(0.01), 0.2, 0.05), 2e-3);
    check("E_b W2 R=0.3 T=-0.05", e_b(&model(Channel::w2()), 0.3, -0.05, &o).unwrap().value.0, common::e_b(&Bin::w2(), 0.3, -0.05), 2e-3);
}

