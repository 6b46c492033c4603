//! Single-letter error and list-size exponents of the fixed-composition
//! ensemble for four decoder families:
//!
//! * the optimal likelihood-ratio decoder with threshold `T`;
//! * the general threshold family, which accepts `m` when
//!   `f(Q̂_m) ≥ max_{l≠m} h(Q̂_l)` for a threshold function `h` of the joint
//!   type;
//! * the output-only family (`h(Q) = g(Q_Y)`);
//! * the scaled maximum-likelihood family (`h(Q) = f(Q) + T`).
//!
//! Every exponent is a nested minimization solved by [`crate::optimizer`].
//! Infeasible minimizations are worth `+inf`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{pos_part, sub_or_inf};
use crate::optimizer::{
    f_ge, f_le, f_pair_ge, i_ge, i_le, minimize_pair, minimize_single, Bound, Cmp, Constraint, Functional, Member,
    MinResult, Objective, PairObjective, SearchOptions,
};
use crate::typespace::{mutual_information, JointType, Marginal, Model, Nats};

type HFn = Arc<dyn Fn(&JointType) -> f64 + Send + Sync>;
type GFn = Arc<dyn Fn(&Marginal) -> f64 + Send + Sync>;

/// Threshold function `h` over joint types, `+inf` outside its domain.
#[derive(Clone)]
pub struct GeneralThreshold {
    label: String,
    h: HFn,
    domain: Option<Arc<dyn Fn(&JointType) -> bool + Send + Sync>>,
}

impl GeneralThreshold {
    pub fn new(label: impl Into<String>, h: impl Fn(&JointType) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), h: Arc::new(h), domain: None }
    }

    /// Restrict to a compact domain; outside it the threshold is `+inf`.
    pub fn with_domain(mut self, domain: impl Fn(&JointType) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(domain));
        self
    }

    /// `h(Q) = f(Q) + t` with the model's decoder metric.
    pub fn scaled_ml(model: &Model, t: f64) -> Self {
        let metric = model.metric_arc();
        Self::new(format!("f+{t}"), move |q| crate::typespace::f_functional(q, &metric).map_or(f64::NAN, |v| v.0) + t)
    }

    /// `h(Q) = g(Q_Y)`.
    pub fn from_output(g: &OutputThreshold) -> Self {
        let g = g.clone();
        Self::new(format!("g:{}", g.label), move |q| g.eval(&q.marginal()))
    }

    #[inline]
    pub fn eval(&self, q: &JointType) -> f64 {
        if let Some(d) = &self.domain {
            if !d(q) {
                return f64::INFINITY;
            }
        }
        let v = (self.h)(q);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Threshold function `g` of the output marginal, `+inf` outside its domain.
#[derive(Clone)]
pub struct OutputThreshold {
    label: String,
    g: GFn,
    domain: Option<Arc<dyn Fn(&Marginal) -> bool + Send + Sync>>,
}

impl OutputThreshold {
    pub fn new(label: impl Into<String>, g: impl Fn(&Marginal) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), g: Arc::new(g), domain: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c)
    }

    pub fn with_domain(mut self, domain: impl Fn(&Marginal) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(domain));
        self
    }

    #[inline]
    pub fn eval(&self, q: &Marginal) -> f64 {
        if let Some(d) = &self.domain {
            if !d(q) {
                return f64::INFINITY;
            }
        }
        let v = (self.g)(q);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Decoder family together with its threshold.
#[derive(Clone)]
pub enum ThresholdSpec {
    /// Likelihood-ratio decoder with threshold `T`.
    Optimal { t: f64 },
    /// General threshold family with function `h(Q)`.
    General(GeneralThreshold),
    /// Output-only family with function `g(Q_Y)`.
    OutputOnly(OutputThreshold),
    /// Scaled maximum-likelihood family with offset `T`.
    ScaledMl { t: f64 },
}

impl fmt::Debug for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdSpec::Optimal { t } => write!(f, "Optimal(T={t})"),
            ThresholdSpec::General(h) => write!(f, "General({})", h.label),
            ThresholdSpec::OutputOnly(g) => write!(f, "OutputOnly({})", g.label),
            ThresholdSpec::ScaledMl { t } => write!(f, "ScaledMl(T={t})"),
        }
    }
}

/// Which sub-minimum produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The `I(Q) ≥ R` branch of the optimal decoder's error exponent.
    A,
    /// The set-restricted divergence branch of the optimal decoder.
    B,
    /// A single formula without branches.
    Direct,
}

#[derive(Debug, Clone)]
pub struct ExponentResult {
    pub value: Nats,
    /// Minimizing `Q̃` (the transmitted codeword's joint type), if any.
    pub tilde: Option<JointType>,
    /// Minimizing `Q` (a competitor's joint type), if any.
    pub single: Option<JointType>,
    pub branch: Branch,
    pub feasible: bool,
    pub gap_estimate: f64,
}

impl ExponentResult {
    fn from_min(m: MinResult, offset: f64, branch: Branch) -> Self {
        let value = if m.feasible { Nats(m.value.0 - offset) } else { Nats::INFINITY };
        Self {
            value,
            tilde: m.tilde_witness().cloned(),
            single: m.single_witness().cloned(),
            branch,
            feasible: m.feasible,
            gap_estimate: m.gap_estimate,
        }
    }

    /// Same witnesses, shifted value.
    pub fn shifted(&self, by: f64) -> Self {
        let mut r = self.clone();
        r.value = Nats(self.value.0 + by);
        r
    }
}

pub(crate) fn check_rate(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("rate must be nonnegative, got {r}")));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_nan() {
        return Err(Error::InvalidArgument(format!("{name} is NaN")));
    }
    Ok(())
}

fn pair_obj(single: Objective) -> PairObjective {
    PairObjective { tilde: Objective::d(), single }
}

/// `max { objective(Q') : Q'_Y = q, I(Q') ≤ r }`, which is always feasible
/// through the product type.
pub(crate) fn max_on_slice(
    model: &Model,
    q: &Marginal,
    r: f64,
    objective: impl Fn(&JointType, &crate::typespace::Evals) -> f64 + Send + Sync + 'static,
    opts: &SearchOptions,
) -> f64 {
    let neg = Objective::new(move |q, e| {
        let v = objective(q, e);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            -v
        }
    });
    match minimize_single(model, &neg, &[i_le(r)], Some(q), opts) {
        Ok(m) if m.feasible => -m.value.0,
        _ => f64::NEG_INFINITY,
    }
}

/// Error exponent branch with `I(Q) ≥ R`:
/// `min D(Q̃) + I(Q) - R` over pairs with `f(Q) + T ≥ f(Q̃)` and `I(Q) ≥ R`.
pub fn e_a(model: &Model, r: f64, t: f64, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    check_finite("T", t)?;
    let m = minimize_pair(model, &pair_obj(Objective::i()), &[Constraint::MarginalEq, f_pair_ge(t), i_ge(r)], opts)?;
    let mut res = ExponentResult::from_min(m, r, Branch::A);
    // I(Q) >= R makes the value nonnegative; clear rounding residue.
    res.value = Nats(res.value.0.max(0.0));
    Ok(res)
}

/// Error exponent branch `min D(Q̃)` over
/// `f(Q̃) ≤ R + T + max{ f(Q) - I(Q) : Q_Y = Q̃_Y, I(Q) ≤ R }`.
pub fn e_b(model: &Model, r: f64, t: f64, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    check_finite("T", t)?;
    let inner_model = model.clone();
    let inner_opts = *opts;
    let bound = Bound::OfMarginal(Arc::new(move |q: &Marginal| {
        let beta = max_on_slice(&inner_model, q, r, |_, e| sub_or_neg_inf(e.f, e.i), &inner_opts);
        r + t + beta
    }));
    let m = minimize_single(model, &Objective::d(), &[f_le(bound)], None, opts)?;
    let mut res = ExponentResult::from_min(m, 0.0, Branch::B);
    res.tilde = res.single.take();
    Ok(res)
}

#[inline]
fn sub_or_neg_inf(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.is_nan() {
        f64::NEG_INFINITY
    } else {
        d
    }
}

/// Optimal decoder: `E_e* = min(E_a, E_b)` (ties reported as `A`) and
/// `E_l* = E_e* + T`.
pub fn optimal_exponents(
    model: &Model,
    r: f64,
    t: f64,
    opts: &SearchOptions,
) -> Result<(ExponentResult, ExponentResult)> {
    let a = e_a(model, r, t, opts)?;
    let b = e_b(model, r, t, opts)?;
    let ee = if b.value.0 < a.value.0 { b } else { a };
    let el = ee.shifted(t);
    Ok((ee, el))
}

/// General threshold family, error exponent:
/// `min D(Q̃) + [I(Q) - R]+` over pairs with `h(Q) ≥ f(Q̃)`.
pub fn psi_error_exponent(model: &Model, r: f64, h: &GeneralThreshold, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    let hh = h.clone();
    let cons = Constraint::Scalar {
        member: Member::Single,
        functional: Functional::Custom(Arc::new(move |q, _| hh.eval(q))),
        cmp: Cmp::Ge,
        bound: Bound::OfTilde { marginal: None, combine: Arc::new(|_, _, e| e.f) },
    };
    let obj = pair_obj(Objective::new(move |_, e| pos_part(e.i - r)));
    let m = minimize_pair(model, &obj, &[Constraint::MarginalEq, cons], opts)?;
    Ok(ExponentResult::from_min(m, 0.0, Branch::Direct))
}

/// General threshold family, list-size exponent:
/// `min D(Q̃) + I(Q) - R` over pairs with `f(Q) ≥ max{V(Q_Y, R), h(Q̃)}`,
/// where `V(Q_Y, R)` is the largest `h` on the marginal slice with
/// `I ≤ R`.
pub fn psi_list_exponent(model: &Model, r: f64, h: &GeneralThreshold, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    let (hv, ht) = (h.clone(), h.clone());
    let inner_model = model.clone();
    let inner_opts = *opts;
    let v: Arc<dyn Fn(&Marginal) -> f64 + Send + Sync> =
        Arc::new(move |q: &Marginal| max_on_slice(&inner_model, q, r, { let hv = hv.clone(); move |q, _| hv.eval(q) }, &inner_opts));
    let cons = f_ge(Bound::OfTilde { marginal: Some(v), combine: Arc::new(move |v, t, _| v.max(ht.eval(t))) });
    let m = minimize_pair(model, &pair_obj(Objective::i()), &[Constraint::MarginalEq, cons], opts)?;
    Ok(ExponentResult::from_min(m, r, Branch::Direct))
}

/// Output-only family: `(E_e, E_l)` with
/// `E_e = min { D(Q) : g(Q_Y) ≥ f(Q) }` (independent of the rate) and
/// `E_l = min D(Q̃) + I(Q) - R` over pairs with `f(Q) ≥ g(Q_Y)`.
pub fn lambda1_exponents(
    model: &Model,
    r: f64,
    g: &OutputThreshold,
    opts: &SearchOptions,
) -> Result<(ExponentResult, ExponentResult)> {
    check_rate(r)?;
    let ee = lambda1_error_exponent(model, g, opts)?;
    let el = lambda1_list_exponent(model, r, g, opts)?;
    Ok((ee, el))
}

pub fn lambda1_error_exponent(model: &Model, g: &OutputThreshold, opts: &SearchOptions) -> Result<ExponentResult> {
    let gg = g.clone();
    let m = minimize_single(model, &Objective::d(), &[f_le(Bound::OfMarginal(Arc::new(move |q| gg.eval(q))))], None, opts)?;
    let mut res = ExponentResult::from_min(m, 0.0, Branch::Direct);
    res.tilde = res.single.take();
    Ok(res)
}

pub fn lambda1_list_exponent(model: &Model, r: f64, g: &OutputThreshold, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    let gg = g.clone();
    let cons = f_ge(Bound::OfMarginal(Arc::new(move |q| gg.eval(q))));
    let m = minimize_pair(model, &pair_obj(Objective::i()), &[Constraint::MarginalEq, cons], opts)?;
    Ok(ExponentResult::from_min(m, r, Branch::Direct))
}

/// Scaled maximum-likelihood family: `(E_e, E_l)` with
/// `E_e = min D(Q̃) + [I(Q) - R]+` over `f(Q) + T ≥ f(Q̃)` and
/// `E_l = min D(Q̃) + I(Q) - R` over `f(Q) ≥ T + max{V_(Q_Y, R), f(Q̃)}`,
/// `V_(Q_Y, R)` being the largest `f` on the marginal slice with `I ≤ R`.
pub fn lambda2_exponents(
    model: &Model,
    r: f64,
    t: f64,
    opts: &SearchOptions,
) -> Result<(ExponentResult, ExponentResult)> {
    Ok((lambda2_error_exponent(model, r, t, opts)?, lambda2_list_exponent(model, r, t, opts)?))
}

pub fn lambda2_error_exponent(model: &Model, r: f64, t: f64, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    if t == f64::INFINITY {
        // Nothing is ever accepted.
        return Ok(ExponentResult {
            value: Nats::ZERO,
            tilde: Some(model.channel_joint()),
            single: None,
            branch: Branch::Direct,
            feasible: true,
            gap_estimate: 0.0,
        });
    }
    check_finite("T", t)?;
    let obj = pair_obj(Objective::new(move |_, e| pos_part(e.i - r)));
    let m = minimize_pair(model, &obj, &[Constraint::MarginalEq, f_pair_ge(t)], opts)?;
    Ok(ExponentResult::from_min(m, 0.0, Branch::Direct))
}

pub fn lambda2_list_exponent(model: &Model, r: f64, t: f64, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    if t == f64::INFINITY {
        return Ok(ExponentResult {
            value: Nats::INFINITY,
            tilde: None,
            single: None,
            branch: Branch::Direct,
            feasible: false,
            gap_estimate: 0.0,
        });
    }
    check_finite("T", t)?;
    let inner_model = model.clone();
    let inner_opts = *opts;
    let v: Arc<dyn Fn(&Marginal) -> f64 + Send + Sync> =
        Arc::new(move |q: &Marginal| max_on_slice(&inner_model, q, r, |_, e| e.f, &inner_opts));
    let cons = f_ge(Bound::OfTilde { marginal: Some(v), combine: Arc::new(move |v, _, e| t + v.max(e.f)) });
    let m = minimize_pair(model, &pair_obj(Objective::i()), &[Constraint::MarginalEq, cons], opts)?;
    Ok(ExponentResult::from_min(m, r, Branch::Direct))
}

/// `(E_e, E_l)` of any decoder family.
pub fn exponents_for(
    model: &Model,
    r: f64,
    spec: &ThresholdSpec,
    opts: &SearchOptions,
) -> Result<(ExponentResult, ExponentResult)> {
    match spec {
        ThresholdSpec::Optimal { t } => optimal_exponents(model, r, *t, opts),
        ThresholdSpec::General(h) => Ok((psi_error_exponent(model, r, h, opts)?, psi_list_exponent(model, r, h, opts)?)),
        ThresholdSpec::OutputOnly(g) => lambda1_exponents(model, r, g, opts),
        ThresholdSpec::ScaledMl { t } => lambda2_exponents(model, r, *t, opts),
    }
}

/// Value of the error-exponent objective at a witness pair, for checking
/// that witnesses reproduce reported values.
pub fn pair_value(model: &Model, tilde: &JointType, single: &JointType, r: f64, positive_part: bool) -> f64 {
    let d = model.d(tilde);
    let i = mutual_information(single).0 - r;
    sub_or_inf(d + if positive_part { pos_part(i) } else { i }, 0.0)
}
