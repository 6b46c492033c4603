//! Matched-target comparison of decoder families along a rate grid.
//!
//! At each rate the optimal decoder's error exponent `E_e*(R, T)` becomes the
//! target `E`, and each simplified family gets the best list-size exponent it
//! can reach while keeping its error exponent at least `E`.

use crate::error::{Error, Result};
use crate::exponents::{e_a, e_b, lambda2_list_exponent, Branch};
use crate::optimizer::{sweep, SearchOptions};
use crate::thresholds::{optimal_list_exponent, t_star, Class};
use crate::typespace::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub rate: f64,
    pub t: f64,
    /// `E_a(R, T)`.
    pub e_a: f64,
    /// `E_b(R, T)`.
    pub e_b: f64,
    pub branch: Branch,
    /// `E_e*(R, T)`, also the target for the families below.
    pub ee_star: f64,
    /// `E_l*(R, T) = E_e* + T`.
    pub el_star: f64,
    pub psi: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Scaled-ML offset that meets the target.
    pub t_star: f64,
}

/// `n` evenly spaced rates on `[lo, hi]`, both ends included.
pub fn rate_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || lo.is_nan() || hi.is_nan() || lo < 0.0 || hi < lo {
        return Err(Error::InvalidArgument(format!("bad rate grid {lo}:{hi}:{n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

/// One row; `classes` selects which families to evaluate (the others are NaN).
pub fn figure_row(model: &Model, r: f64, t: f64, classes: &[Class], opts: &SearchOptions) -> Result<FigureRow> {
    let a = e_a(model, r, t, opts)?.value.0;
    let b = e_b(model, r, t, opts)?.value.0;
    let (ee, branch) = if b < a { (b, Branch::B) } else { (a, Branch::A) };
    let mut row = FigureRow {
        rate: r,
        t,
        e_a: a,
        e_b: b,
        branch,
        ee_star: ee,
        el_star: ee + t,
        psi: f64::NAN,
        lambda1: f64::NAN,
        lambda2: f64::NAN,
        t_star: f64::NAN,
    };
    for class in classes {
        match class {
            Class::Psi => row.psi = optimal_list_exponent(model, Class::Psi, r, ee, opts)?.value.0,
            Class::Lambda1 => row.lambda1 = optimal_list_exponent(model, Class::Lambda1, r, ee, opts)?.value.0,
            Class::Lambda2 => {
                let ts = t_star(model, r, ee, opts)?.0;
                row.t_star = ts;
                row.lambda2 = lambda2_list_exponent(model, r, ts, opts)?.value.0;
            }
        }
    }
    Ok(row)
}

/// All three families at every rate, rows in grid order.
pub fn figure(model: &Model, t: f64, rates: &[f64], opts: &SearchOptions) -> Result<Vec<FigureRow>> {
    figure_with(model, t, rates, &[Class::Psi, Class::Lambda1, Class::Lambda2], opts)
}

pub fn figure_with(model: &Model, t: f64, rates: &[f64], classes: &[Class], opts: &SearchOptions) -> Result<Vec<FigureRow>> {
    opts.validate()?;
    sweep(rates, |&r| figure_row(model, r, t, classes, opts))?.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typespace::{Channel, InputDistribution};

    #[test]
    fn grid_endpoints() {
        let g = rate_grid(0.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(rate_grid(0.3, 0.3, 1).unwrap(), vec![0.3]);
        assert!(rate_grid(0.0, 1.0, 0).is_err());
        assert!(rate_grid(0.5, 0.1, 3).is_err());
    }

    #[test]
    fn row_is_consistent() {
        let m = Model::new(Channel::w1(), InputDistribution::uniform(2).unwrap()).unwrap();
        let row = figure_row(&m, 0.2, 0.05, &[Class::Lambda2], &SearchOptions::default()).unwrap();
        assert_eq!(row.el_star, row.ee_star + 0.05);
        assert_eq!(row.ee_star, row.e_a.min(row.e_b));
        assert!(row.psi.is_nan() && row.lambda1.is_nan());
        assert!((row.lambda2 - row.el_star).abs() < 2e-3, "{row:?}");
    }
}
