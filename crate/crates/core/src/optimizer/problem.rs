use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::typespace::{Evals, JointType, Marginal, Model, Nats};

use super::param::{marginal_dim, marginal_from_coords, slice_dim, slice_point, Coords, Probs};
use super::search::{search_1d, Eval, Key};
use super::SearchOptions;

/// Scalar function of a joint type, given its precomputed functionals.
pub type JointFn = Arc<dyn Fn(&JointType, &Evals) -> f64 + Send + Sync>;
/// Scalar function of the shared output marginal.
pub type MarginalFn = Arc<dyn Fn(&Marginal) -> f64 + Send + Sync>;
/// Bound computed from `Q̃` (and its functionals); the first argument is the
/// value of the optional marginal part of the bound, or 0.
pub type TildeFn = Arc<dyn Fn(f64, &JointType, &Evals) -> f64 + Send + Sync>;

/// Left-hand side of a scalar constraint.
#[derive(Clone)]
pub enum Functional {
    F,
    I,
    D,
    Custom(JointFn),
}

impl Functional {
    #[inline]
    fn eval(&self, q: &JointType, e: &Evals) -> f64 {
        match self {
            Functional::F => e.f,
            Functional::I => e.i,
            Functional::D => e.d,
            Functional::Custom(h) => h(q, e),
        }
    }
}

/// Which member of a coupled pair a constraint applies to. Single-type
/// problems only have `Single`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    Single,
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
}

/// Right-hand side of a scalar constraint.
#[derive(Clone)]
pub enum Bound {
    Const(f64),
    /// Evaluated once per output marginal.
    OfMarginal(MarginalFn),
    /// Evaluated once per `Q̃`; only valid on `Single` constraints of pair
    /// problems.
    OfTilde { marginal: Option<MarginalFn>, combine: TildeFn },
}

#[derive(Clone)]
pub enum Constraint {
    Scalar { member: Member, functional: Functional, cmp: Cmp, bound: Bound },
    /// `Q_Y = Q̃_Y`. Pair problems always impose it through the
    /// parameterization; listing it is accepted and has no further effect.
    MarginalEq,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Functional::F => "f",
            Functional::I => "I",
            Functional::D => "D",
            Functional::Custom(_) => "custom",
        })
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Const(c) => write!(f, "{c}"),
            Bound::OfMarginal(_) => f.write_str("bound(Q_Y)"),
            Bound::OfTilde { .. } => f.write_str("bound(Q~)"),
        }
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Scalar { member, functional, cmp, bound } => {
                let op = if *cmp == Cmp::Ge { ">=" } else { "<=" };
                write!(f, "{member:?}: {functional:?} {op} {bound:?}")
            }
            Constraint::MarginalEq => f.write_str("Q_Y = Q~_Y"),
        }
    }
}

fn single(functional: Functional, cmp: Cmp, bound: Bound) -> Constraint {
    Constraint::Scalar { member: Member::Single, functional, cmp, bound }
}

/// `f(Q) ≥ bound`.
pub fn f_ge(bound: Bound) -> Constraint {
    single(Functional::F, Cmp::Ge, bound)
}

/// `f(Q) ≤ bound`.
pub fn f_le(bound: Bound) -> Constraint {
    single(Functional::F, Cmp::Le, bound)
}

/// `f(Q) + c ≥ f(Q̃)`.
pub fn f_pair_ge(c: f64) -> Constraint {
    single(
        Functional::F,
        Cmp::Ge,
        Bound::OfTilde { marginal: None, combine: Arc::new(move |_, _, e: &Evals| e.f - c) },
    )
}

/// `I(Q) ≥ r`.
pub fn i_ge(r: f64) -> Constraint {
    single(Functional::I, Cmp::Ge, Bound::Const(r))
}

/// `I(Q) ≤ r`.
pub fn i_le(r: f64) -> Constraint {
    single(Functional::I, Cmp::Le, Bound::Const(r))
}

/// `D(Q_{Y|X} || W | P_X) ≤ e`.
pub fn d_le(e: f64) -> Constraint {
    single(Functional::D, Cmp::Le, Bound::Const(e))
}

/// Objective over one joint type.
#[derive(Clone)]
pub struct Objective(JointFn);

impl Objective {
    pub fn new(f: impl Fn(&JointType, &Evals) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn f() -> Self {
        Self::new(|_, e| e.f)
    }

    pub fn i() -> Self {
        Self::new(|_, e| e.i)
    }

    pub fn d() -> Self {
        Self::new(|_, e| e.d)
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
    }

    #[inline]
    pub fn eval(&self, q: &JointType, e: &Evals) -> f64 {
        (self.0)(q, e)
    }
}

/// Separable objective `tilde(Q̃) + single(Q)` of a coupled pair.
#[derive(Clone)]
pub struct PairObjective {
    pub tilde: Objective,
    pub single: Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    None,
    Single(JointType),
    Pair { tilde: JointType, single: JointType },
}

#[derive(Debug, Clone)]
pub struct MinResult {
    pub value: Nats,
    pub witness: Witness,
    pub feasible: bool,
    /// Change of the optimum over the last refinement stage.
    pub gap_estimate: f64,
    pub evaluations: u64,
}

impl MinResult {
    pub fn single_witness(&self) -> Option<&JointType> {
        match &self.witness {
            Witness::Single(q) => Some(q),
            Witness::Pair { single, .. } => Some(single),
            Witness::None => None,
        }
    }

    pub fn tilde_witness(&self) -> Option<&JointType> {
        match &self.witness {
            Witness::Pair { tilde, .. } => Some(tilde),
            _ => None,
        }
    }
}

#[derive(Clone)]
enum Slot {
    Const(f64),
    Marg(usize),
    Tilde(Option<usize>, TildeFn),
}

struct Cons {
    functional: Functional,
    cmp: Cmp,
    slot: Slot,
}

#[inline]
fn violation(v: f64, cmp: Cmp, b: f64) -> f64 {
    if v.is_nan() || b.is_nan() {
        return f64::INFINITY;
    }
    match cmp {
        Cmp::Ge if v >= b => 0.0,
        Cmp::Ge => b - v,
        Cmp::Le if v <= b => 0.0,
        Cmp::Le => v - b,
    }
}

struct Ctx {
    coords: Coords,
    marginal: Probs,
    marg_vals: SmallVec<[f64; 4]>,
    tilde_viol: f64,
    tilde_value: f64,
    single_bounds: SmallVec<[f64; 4]>,
}

struct Solver<'a> {
    model: &'a Model,
    opts: SearchOptions,
    ny: usize,
    n_marg: usize,
    n_tilde: usize,
    n_single: usize,
    fixed_marginal: Option<Probs>,
    tilde_obj: Option<&'a Objective>,
    single_obj: &'a Objective,
    tilde_cons: Vec<Cons>,
    single_cons: Vec<Cons>,
    marg_fns: Vec<MarginalFn>,
    separable: bool,
    evaluations: Cell<u64>,
}

type Leaf<'s, 'a> = dyn FnMut(&'s Solver<'a>, &mut Ctx) -> Eval + 's;

impl<'a> Solver<'a> {
    fn new(
        model: &'a Model,
        tilde_obj: Option<&'a Objective>,
        single_obj: &'a Objective,
        constraints: &[Constraint],
        fixed_marginal: Option<&Marginal>,
        opts: &SearchOptions,
    ) -> Result<Self> {
        opts.validate()?;
        let nx = model.input_size();
        let ny = model.output_size();
        let pair = tilde_obj.is_some();
        let fixed = match fixed_marginal {
            Some(m) if m.len() != ny => {
                return Err(Error::DimensionMismatch(format!("marginal has {} entries, channel has {ny} outputs", m.len())))
            }
            Some(m) => Some(Probs::from_slice(m.probs())),
            None => None,
        };
        let mut marg_fns = Vec::new();
        let mut tilde_cons = Vec::new();
        let mut single_cons = Vec::new();
        let mut separable = true;
        for c in constraints {
            let Constraint::Scalar { member, functional, cmp, bound } = c else { continue };
            if *member == Member::Tilde && !pair {
                return Err(Error::InvalidArgument("constraint on Q~ in a single-type problem".into()));
            }
            let slot = match bound {
                Bound::Const(v) => Slot::Const(*v),
                Bound::OfMarginal(f) => {
                    marg_fns.push(f.clone());
                    Slot::Marg(marg_fns.len() - 1)
                }
                Bound::OfTilde { marginal, combine } => {
                    if !pair || *member == Member::Tilde {
                        return Err(Error::InvalidArgument(
                            "a bound depending on Q~ is only valid on Q in a pair problem".into(),
                        ));
                    }
                    separable = false;
                    let mi = marginal.as_ref().map(|f| {
                        marg_fns.push(f.clone());
                        marg_fns.len() - 1
                    });
                    Slot::Tilde(mi, combine.clone())
                }
            };
            let cons = Cons { functional: functional.clone(), cmp: *cmp, slot };
            match member {
                Member::Single => single_cons.push(cons),
                Member::Tilde => tilde_cons.push(cons),
            }
        }
        Ok(Self {
            model,
            opts: *opts,
            ny,
            n_marg: if fixed.is_some() { 0 } else { marginal_dim(ny) },
            n_tilde: if pair { slice_dim(nx, ny) } else { 0 },
            n_single: slice_dim(nx, ny),
            fixed_marginal: fixed,
            tilde_obj,
            single_obj,
            tilde_cons,
            single_cons,
            marg_fns,
            separable,
            evaluations: Cell::new(0),
        })
    }

    fn total(&self) -> usize {
        self.n_marg + self.n_tilde + self.n_single
    }

    fn marginal_of(&self, coords: &[f64]) -> Probs {
        match &self.fixed_marginal {
            Some(q) => q.clone(),
            None => marginal_from_coords(&coords[..self.n_marg], self.ny),
        }
    }

    fn slot_value(&self, slot: &Slot, ctx: &Ctx, tilde: Option<(&JointType, &Evals)>) -> f64 {
        match slot {
            Slot::Const(v) => *v,
            Slot::Marg(i) => ctx.marg_vals[*i],
            Slot::Tilde(mi, f) => {
                let (t, e) = tilde.expect("tilde bounds are evaluated with Q~ set");
                f(mi.map_or(0.0, |i| ctx.marg_vals[i]), t, e)
            }
        }
    }

    fn marginal_hook(&self, ctx: &mut Ctx) {
        ctx.marginal = self.marginal_of(&ctx.coords);
        if !self.marg_fns.is_empty() {
            let m = Marginal::from_raw(ctx.marginal.to_vec());
            ctx.marg_vals = self.marg_fns.iter().map(|f| f(&m)).collect();
        }
        ctx.tilde_viol = 0.0;
        ctx.tilde_value = 0.0;
        if self.separable {
            let b: SmallVec<[f64; 4]> =
                self.single_cons.iter().map(|c| self.slot_value(&c.slot, ctx, None)).collect();
            ctx.single_bounds = b;
        }
    }

    fn tilde_eval(&self, ctx: &Ctx) -> (JointType, Evals, f64, f64) {
        let t0 = self.n_marg;
        let t = slice_point(self.model.px().probs(), &ctx.marginal, &ctx.coords[t0..t0 + self.n_tilde]);
        let e = self.model.evals(&t);
        self.evaluations.set(self.evaluations.get() + 1);
        let mut viol = 0.0f64;
        for c in &self.tilde_cons {
            let b = self.slot_value(&c.slot, ctx, None);
            viol = viol.max(violation(c.functional.eval(&t, &e), c.cmp, b));
        }
        let value = self.tilde_obj.map_or(0.0, |o| o.eval(&t, &e));
        (t, e, viol, value)
    }

    fn tilde_hook(&self, ctx: &mut Ctx) {
        let (t, e, viol, value) = self.tilde_eval(ctx);
        ctx.tilde_viol = viol;
        ctx.tilde_value = value;
        let b: SmallVec<[f64; 4]> =
            self.single_cons.iter().map(|c| self.slot_value(&c.slot, ctx, Some((&t, &e)))).collect();
        ctx.single_bounds = b;
    }

    fn single_leaf(&self, ctx: &mut Ctx) -> Eval {
        let s0 = self.n_marg + self.n_tilde;
        let q = slice_point(self.model.px().probs(), &ctx.marginal, &ctx.coords[s0..s0 + self.n_single]);
        let e = self.model.evals(&q);
        self.evaluations.set(self.evaluations.get() + 1);
        let mut viol = ctx.tilde_viol;
        for (c, &b) in self.single_cons.iter().zip(&ctx.single_bounds) {
            viol = viol.max(violation(c.functional.eval(&q, &e), c.cmp, b));
        }
        let value = ctx.tilde_value + self.single_obj.eval(&q, &e);
        Eval { key: Key::new(viol, value), gap: 0.0, coords: ctx.coords.clone() }
    }

    fn search_block<'s>(&'s self, start: usize, len: usize, ctx: &mut Ctx, leaf: &mut Leaf<'s, 'a>) -> Eval {
        if len == 0 {
            return leaf(self, ctx);
        }
        let out = search_1d(
            &mut |u| {
                ctx.coords[start] = u;
                self.search_block(start + 1, len - 1, ctx, leaf)
            },
            &self.opts,
        );
        let mut e = out.eval;
        e.gap = out.gap;
        e
    }

    fn solve(&self) -> Eval {
        let mut ctx = Ctx {
            coords: SmallVec::from_elem(0.0, self.total()),
            marginal: Probs::new(),
            marg_vals: SmallVec::new(),
            tilde_viol: 0.0,
            tilde_value: 0.0,
            single_bounds: SmallVec::new(),
        };
        let pair = self.tilde_obj.is_some();
        let t0 = self.n_marg;
        let s0 = self.n_marg + self.n_tilde;
        let (nt, ns) = (self.n_tilde, self.n_single);
        self.search_block(0, self.n_marg, &mut ctx, &mut |s, ctx| {
            s.marginal_hook(ctx);
            if !pair {
                return s.search_block(s0, ns, ctx, &mut |s, ctx| s.single_leaf(ctx));
            }
            if s.separable {
                // No constraint on Q refers to Q~, so the two minimizations
                // decouple once the marginal is fixed.
                let inner = s.search_block(s0, ns, ctx, &mut |s, ctx| s.single_leaf(ctx));
                let outer = s.search_block(t0, nt, ctx, &mut |s, ctx| {
                    let (_, _, viol, value) = s.tilde_eval(ctx);
                    Eval { key: Key::new(viol, value), gap: 0.0, coords: ctx.coords.clone() }
                });
                let mut coords = outer.coords.clone();
                coords[s0..].copy_from_slice(&inner.coords[s0..]);
                return Eval {
                    key: Key::new(outer.key.viol.max(inner.key.viol), outer.key.value + inner.key.value),
                    gap: outer.gap + inner.gap,
                    coords,
                };
            }
            s.search_block(t0, nt, ctx, &mut |s, ctx| {
                s.tilde_hook(ctx);
                s.search_block(s0, ns, ctx, &mut |s, ctx| s.single_leaf(ctx))
            })
        })
    }

    fn result(&self, best: Eval) -> MinResult {
        let feasible = best.key.feasible(self.opts.feas_tol);
        let evaluations = self.evaluations.get();
        if !feasible {
            return MinResult {
                value: Nats::INFINITY,
                witness: Witness::None,
                feasible,
                gap_estimate: 0.0,
                evaluations,
            };
        }
        let q = self.marginal_of(&best.coords);
        let px = self.model.px().probs();
        let s0 = self.n_marg + self.n_tilde;
        let single = slice_point(px, &q, &best.coords[s0..s0 + self.n_single]);
        let witness = if self.tilde_obj.is_some() {
            let t0 = self.n_marg;
            let tilde = slice_point(px, &q, &best.coords[t0..t0 + self.n_tilde]);
            Witness::Pair { tilde, single }
        } else {
            Witness::Single(single)
        };
        MinResult { value: Nats(best.key.value), witness, feasible, gap_estimate: best.gap, evaluations }
    }
}

/// Minimize `objective(Q)` over kernels `Q_{Y|X}` (with `Q_X = P_X`),
/// optionally restricted to `Q_Y = fixed_marginal`. An empty feasible set
/// gives `+inf` with `feasible == false`.
pub fn minimize_single(
    model: &Model,
    objective: &Objective,
    constraints: &[Constraint],
    fixed_marginal: Option<&Marginal>,
    opts: &SearchOptions,
) -> Result<MinResult> {
    let s = Solver::new(model, None, objective, constraints, fixed_marginal, opts)?;
    let best = s.solve();
    Ok(s.result(best))
}

/// Minimize `objective.tilde(Q̃) + objective.single(Q)` over pairs with
/// `Q_Y = Q̃_Y`.
pub fn minimize_pair(
    model: &Model,
    objective: &PairObjective,
    constraints: &[Constraint],
    opts: &SearchOptions,
) -> Result<MinResult> {
    let s = Solver::new(model, Some(&objective.tilde), &objective.single, constraints, None, opts)?;
    let best = s.solve();
    let r = s.result(best);
    log::debug!("pair problem: value {} after {} evaluations", r.value, r.evaluations);
    Ok(r)
}

/// Evaluate `f` at every grid point in parallel; output order follows the
/// grid. Per-point failures stay in their slot.
pub fn sweep<P, T, F>(grid: &[P], f: F) -> Result<Vec<T>>
where
    P: Sync,
    T: Send,
    F: Fn(&P) -> T + Sync + Send,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    Ok(grid.par_iter().map(f).collect())
}
