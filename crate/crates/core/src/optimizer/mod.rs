//! Constrained minimization over joint types `P_X × Q_{Y|X}` and over
//! coupled pairs `(Q̃, Q)` sharing an output marginal.
//!
//! The search is nested, one coordinate per level: the shared output
//! marginal first, then the coordinates of `Q̃` on its marginal slice, then
//! those of `Q`. Each level runs a coarse grid of step `coarse`, refines the
//! best local minima by golden section down to `fine`, and polishes toward
//! constraint boundaries by bisection. Bounds that depend only on the
//! marginal (or only on `Q̃`) are evaluated once per value of that
//! coordinate block, which is what keeps nested `max` sub-problems cheap.
//!
//! Cost is roughly `(1/coarse + 40·candidates)^levels` functional
//! evaluations, where a binary single problem has 2 levels and a binary pair
//! problem 3. A `3×3` pair problem has 10 levels and is out of reach at the
//! default resolution; fix the marginal or coarsen the grid for larger
//! alphabets.

mod param;
mod problem;
mod search;

pub use problem::{
    d_le, f_ge, f_le, f_pair_ge, i_ge, i_le, minimize_pair, minimize_single, sweep, Bound, Cmp, Constraint,
    Functional, JointFn, MarginalFn, Member, MinResult, Objective, PairObjective, TildeFn, Witness,
};

/// Resolutions and tolerances of the nested search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Coarse grid step per coordinate.
    pub coarse: f64,
    /// Final bracket width of the golden-section refinement.
    pub fine: f64,
    /// Number of local minima of the coarse grid that get refined.
    pub candidates: usize,
    /// Constraint violation still counted as feasible.
    pub feas_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { coarse: 0.02, fine: 1e-5, candidates: 2, feas_tol: 1e-6 }
    }
}

impl SearchOptions {
    pub fn with_resolution(coarse: f64, fine: f64) -> Self {
        Self { coarse, fine, ..Self::default() }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.coarse > 0.0
            && self.coarse <= 0.5
            && self.fine > 0.0
            && self.fine < self.coarse
            && self.feas_tol >= 0.0
            && self.candidates >= 1;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!("bad search options {self:?}")))
        }
    }
}
