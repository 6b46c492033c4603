//! Largest thresholds that still guarantee a target error exponent `E`, the
//! list-size exponents they achieve, the critical rates beyond which the
//! simplified families lose nothing, and the compound-channel threshold.
//!
//! * `g*(Q_Y, E) = min { f(Q') : Q'_Y = Q_Y, D(Q'_{Y|X}||W|P_X) ≤ E }`,
//!   `+inf` when `E < 0`;
//! * `h*(Q, R, E) = g*(Q_Y, E - [I(Q) - R]+)`;
//! * `T*(R, E) = min_Q { h*(Q, R, E) - f(Q) }`.

use std::sync::Arc;

use dashmap::DashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exponents::{
    check_rate, lambda2_list_exponent, ExponentResult, GeneralThreshold, OutputThreshold, ThresholdSpec,
};
use crate::numeric::{pos_part, sub_or_inf};
use crate::optimizer::{
    d_le, f_ge, minimize_pair, minimize_single, Bound, Constraint, Objective, PairObjective, SearchOptions,
};
use crate::typespace::{mutual_information, Channel, JointType, Marginal, Model, Nats};

/// Quantization step of the output marginal in the `g*` memo.
pub const MEMO_QUANTUM: f64 = 1e-4;

/// `g*(Q_Y, E)`, solved afresh.
pub fn g_star(model: &Model, qy: &Marginal, e: f64, opts: &SearchOptions) -> Result<Nats> {
    if qy.len() != model.output_size() {
        return Err(Error::DimensionMismatch(format!(
            "marginal has {} entries, channel has {} outputs",
            qy.len(),
            model.output_size()
        )));
    }
    Ok(Nats(g_star_raw(model, qy, e, opts)))
}

pub(crate) fn g_star_raw(model: &Model, qy: &Marginal, e: f64, opts: &SearchOptions) -> f64 {
    if e.is_nan() || e < 0.0 {
        return f64::INFINITY;
    }
    match minimize_single(model, &Objective::f(), &[d_le(e)], Some(qy), opts) {
        Ok(m) if m.feasible => m.value.0,
        _ => f64::INFINITY,
    }
}

/// `h*(Q, R, E)`, solved afresh.
pub fn h_star(model: &Model, q: &JointType, r: f64, e: f64, opts: &SearchOptions) -> Result<Nats> {
    check_rate(r)?;
    let budget = e - pos_part(mutual_information(q).0 - r);
    g_star(model, &q.marginal(), budget, opts)
}

/// Memoized `g*` keyed by the output marginal rounded to [`MEMO_QUANTUM`]
/// and the exact budget. Values are computed at the rounded marginal, so
/// concurrent inserts of the same key always agree.
#[derive(Clone)]
pub struct GStarMemo {
    model: Model,
    opts: SearchOptions,
    memo: Arc<DashMap<(SmallVec<[i64; 4]>, u64), f64>>,
}

impl GStarMemo {
    pub fn new(model: &Model, opts: &SearchOptions) -> Self {
        Self { model: model.clone(), opts: *opts, memo: Arc::new(DashMap::new()) }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn eval(&self, qy: &[f64], e: f64) -> f64 {
        if e.is_nan() || e < 0.0 {
            return f64::INFINITY;
        }
        let key_q: SmallVec<[i64; 4]> = qy.iter().map(|&p| (p / MEMO_QUANTUM).round() as i64).collect();
        let key = (key_q, e.to_bits());
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let mut probs: Vec<f64> = key.0.iter().map(|&k| (k as f64 * MEMO_QUANTUM).max(0.0)).collect();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let v = g_star_raw(&self.model, &Marginal::from_raw(probs), e, &self.opts);
        self.memo.insert(key, v);
        v
    }

    /// `h*(Q, R, E)` through the memo.
    pub fn h_star(&self, q: &JointType, r: f64, e: f64) -> f64 {
        self.eval(q.marginal_probs(), e - pos_part(mutual_information(q).0 - r))
    }
}

/// Which optimal threshold an [`OptimalThreshold`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    GStar,
    HStar,
    TStar,
}

/// An optimal threshold bound to the `(R, E)` and model it was built for.
#[derive(Clone)]
pub struct OptimalThreshold {
    pub kind: ThresholdKind,
    pub rate: f64,
    pub target: f64,
    memo: GStarMemo,
    t_star: f64,
}

impl OptimalThreshold {
    pub fn g_star(model: &Model, e: f64, opts: &SearchOptions) -> Self {
        Self { kind: ThresholdKind::GStar, rate: 0.0, target: e, memo: GStarMemo::new(model, opts), t_star: f64::NAN }
    }

    pub fn h_star(model: &Model, r: f64, e: f64, opts: &SearchOptions) -> Result<Self> {
        check_rate(r)?;
        Ok(Self { kind: ThresholdKind::HStar, rate: r, target: e, memo: GStarMemo::new(model, opts), t_star: f64::NAN })
    }

    pub fn t_star(model: &Model, r: f64, e: f64, opts: &SearchOptions) -> Result<Self> {
        let t = t_star(model, r, e, opts)?.0;
        Ok(Self { kind: ThresholdKind::TStar, rate: r, target: e, memo: GStarMemo::new(model, opts), t_star: t })
    }

    /// Threshold value at a joint type (`T*` for the scalar kind).
    pub fn eval(&self, q: &JointType) -> f64 {
        match self.kind {
            ThresholdKind::GStar => self.memo.eval(q.marginal_probs(), self.target),
            ThresholdKind::HStar => self.memo.h_star(q, self.rate, self.target),
            ThresholdKind::TStar => self.t_star,
        }
    }

    pub fn output_threshold(&self) -> OutputThreshold {
        let memo = self.memo.clone();
        let e = self.target;
        OutputThreshold::new(format!("g*(E={e})"), move |q| memo.eval(q.probs(), e))
    }

    pub fn general_threshold(&self) -> GeneralThreshold {
        let memo = self.memo.clone();
        let (r, e) = (self.rate, self.target);
        GeneralThreshold::new(format!("h*(R={r},E={e})"), move |q| memo.h_star(q, r, e))
    }

    /// Decoder family using this threshold.
    pub fn spec(&self) -> ThresholdSpec {
        match self.kind {
            ThresholdKind::GStar => ThresholdSpec::OutputOnly(self.output_threshold()),
            ThresholdKind::HStar => ThresholdSpec::General(self.general_threshold()),
            ThresholdKind::TStar => ThresholdSpec::ScaledMl { t: self.t_star },
        }
    }
}

/// `T*(R, E) = min_Q { h*(Q, R, E) - f(Q) }`; `+inf` when `E < 0`.
pub fn t_star(model: &Model, r: f64, e: f64, opts: &SearchOptions) -> Result<Nats> {
    check_rate(r)?;
    if e.is_nan() || e < 0.0 {
        return Ok(Nats::INFINITY);
    }
    let memo = GStarMemo::new(model, opts);
    let obj = Objective::new(move |q, ev| sub_or_inf(memo.eval(q.marginal_probs(), e - pos_part(ev.i - r)), ev.f));
    let m = minimize_single(model, &obj, &[], None, opts)?;
    Ok(if m.feasible { m.value } else { Nats::INFINITY })
}

/// Decoder family for [`optimal_list_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    /// Output-only thresholds.
    Lambda1,
    /// General thresholds of the joint type.
    Psi,
    /// Scaled maximum likelihood.
    Lambda2,
}

/// Best list-size exponent of a family subject to error exponent `≥ E`.
pub fn optimal_list_exponent(model: &Model, class: Class, r: f64, e: f64, opts: &SearchOptions) -> Result<ExponentResult> {
    check_rate(r)?;
    let obj = PairObjective { tilde: Objective::d(), single: Objective::i() };
    let m = match class {
        Class::Lambda1 => {
            let (mm, o) = (model.clone(), *opts);
            let g = Bound::OfMarginal(Arc::new(move |q: &Marginal| g_star_raw(&mm, q, e, &o)));
            minimize_pair(model, &obj, &[Constraint::MarginalEq, f_ge(g)], opts)?
        }
        Class::Psi => {
            let (mm, o) = (model.clone(), *opts);
            let bound = Bound::OfTilde {
                marginal: None,
                combine: Arc::new(move |_, t: &JointType, te| g_star_raw(&mm, &t.marginal(), e - pos_part(te.i - r), &o)),
            };
            minimize_pair(model, &obj, &[Constraint::MarginalEq, f_ge(bound)], opts)?
        }
        Class::Lambda2 => {
            let t = t_star(model, r, e, opts)?.0;
            return lambda2_list_exponent(model, r, t, opts);
        }
    };
    let value = if m.feasible { Nats(m.value.0 - r) } else { Nats::INFINITY };
    Ok(ExponentResult {
        value,
        tilde: m.tilde_witness().cloned(),
        single: m.single_witness().cloned(),
        branch: crate::exponents::Branch::Direct,
        feasible: m.feasible,
        gap_estimate: m.gap_estimate,
    })
}

/// A rate defined as the mutual information of an optimizing `Q̃*`.
#[derive(Debug, Clone)]
pub struct CriticalRate {
    pub value: Nats,
    pub witness: JointType,
    /// `I(Q̃*)` of the problem solved at the caller's starting rate, before
    /// any fixed-point iteration.
    pub raw: Nats,
    pub iterations: usize,
}

/// Upper critical rate `R̄_cr(E)`: the fixed point of `R ← I(Q̃*(R))`, with
/// `Q̃*` the optimizing `Q̃` of the output-only family's best list
/// exponent at rate `R`, started from `r0`.
pub fn critical_rate_high(model: &Model, e: f64, r0: f64, opts: &SearchOptions) -> Result<CriticalRate> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::InvalidArgument(format!("target error exponent must be nonnegative, got {e}")));
    }
    check_rate(r0)?;
    let mut r = r0;
    let mut trace = Vec::new();
    let mut raw = None;
    for it in 1..=100 {
        let res = optimal_list_exponent(model, Class::Lambda1, r, e, opts)?;
        let w = res
            .tilde
            .ok_or_else(|| Error::Infeasible(format!("output-only list exponent has no optimizer at E = {e}")))?;
        let next = mutual_information(&w).0;
        raw.get_or_insert(next);
        trace.push(next);
        if (next - r).abs() < 1e-4 {
            return Ok(CriticalRate { value: Nats(next), witness: w, raw: Nats(raw.unwrap_or(next)), iterations: it });
        }
        r = next;
    }
    Err(Error::NoConvergence { iterations: 100, trace })
}

/// Lower critical rate `R̲_cr(T) = I(Q̃*)` for the optimizer of
/// `min D(Q̃) + I(Q)` over pairs with `f(Q) + T ≥ f(Q̃)`.
pub fn critical_rate_low(model: &Model, t: f64, opts: &SearchOptions) -> Result<CriticalRate> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {t}")));
    }
    let obj = PairObjective { tilde: Objective::d(), single: Objective::i() };
    let m = minimize_pair(model, &obj, &[Constraint::MarginalEq, crate::optimizer::f_pair_ge(t)], opts)?;
    let w = m.tilde_witness().cloned().ok_or_else(|| Error::Infeasible("rate-free pair problem".into()))?;
    let v = mutual_information(&w);
    Ok(CriticalRate { value: v, witness: w, raw: v, iterations: 1 })
}

/// `min_W g*_W(Q_Y, E)` over a finite channel set. The decoder metric stays
/// the model's; each channel only changes the divergence constraint.
pub fn compound_g_star(
    model: &Model,
    qy: &Marginal,
    e: f64,
    channels: &[Channel],
    opts: &SearchOptions,
) -> Result<Nats> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("empty channel set".into()));
    }
    let mut best = f64::INFINITY;
    for w in channels {
        let m = model.with_truth(w.clone())?;
        best = best.min(g_star(&m, qy, e, opts)?.0);
    }
    Ok(Nats(best))
}

/// Output threshold `min_W g*_W(·, E)` with a memo per channel.
pub fn compound_threshold(model: &Model, e: f64, channels: &[Channel], opts: &SearchOptions) -> Result<OutputThreshold> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("empty channel set".into()));
    }
    let memos = channels
        .iter()
        .map(|w| Ok(GStarMemo::new(&model.with_truth(w.clone())?, opts)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutputThreshold::new(format!("compound g*(E={e})"), move |q| {
        memos.iter().map(|m| m.eval(q.probs(), e)).fold(f64::INFINITY, f64::min)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typespace::InputDistribution;

    fn w1() -> Model {
        Model::new(Channel::w1(), InputDistribution::uniform(2).unwrap()).unwrap()
    }

    #[test]
    fn g_star_examples() {
        let m = w1();
        let o = SearchOptions::default();
        let half = Marginal::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(g_star(&m, &half, -0.1, &o).unwrap(), Nats::INFINITY);
        // D <= 0 pins Q' to the channel; the feasibility tolerance on D
        // leaves a sliver of width ~sqrt(tol) around it.
        let g0 = g_star(&m, &half, 0.0, &o).unwrap().0;
        let f_w = m.f(&m.channel_joint());
        assert!(g0 <= f_w + 1e-12 && f_w - g0 < 1e-3, "{g0}");
        let off = Marginal::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(g_star(&m, &off, 0.0, &o).unwrap(), Nats::INFINITY);
        let ginf = g_star(&m, &half, f64::INFINITY, &o).unwrap().0;
        assert!((ginf - 0.01f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn h_star_budget() {
        let m = w1();
        let o = SearchOptions::default();
        let q = JointType::channel_joint(m.px(), &Channel::bsc(0.3).unwrap()).unwrap();
        let i = mutual_information(&q).0;
        // I(Q) <= R leaves the budget untouched.
        let a = h_star(&m, &q, i + 0.1, 0.1, &o).unwrap();
        assert_eq!(a, g_star(&m, &q.marginal(), 0.1, &o).unwrap());
        // A rate excess above the budget makes the threshold infinite.
        assert_eq!(h_star(&m, &q, 0.0, i / 2.0, &o).unwrap(), Nats::INFINITY);
    }

    #[test]
    fn t_star_infinite_for_negative_target() {
        let m = w1();
        assert_eq!(t_star(&m, 0.2, -0.01, &SearchOptions::default()).unwrap(), Nats::INFINITY);
    }

    #[test]
    fn compound_examples() {
        let m = w1();
        let o = SearchOptions::default();
        let q = Marginal::new(vec![0.4, 0.6]).unwrap();
        let single = g_star(&m, &q, 0.05, &o).unwrap();
        assert_eq!(compound_g_star(&m, &q, 0.05, &[Channel::w1()], &o).unwrap(), single);
        assert_eq!(compound_g_star(&m, &q, 0.05, &[Channel::w1(), Channel::w1()], &o).unwrap(), single);
        assert!(compound_g_star(&m, &q, 0.05, &[], &o).is_err());
    }

    #[test]
    fn memo_is_close_to_exact() {
        let m = w1();
        let o = SearchOptions::default();
        let memo = GStarMemo::new(&m, &o);
        let q = Marginal::new(vec![0.423456, 0.576544]).unwrap();
        let a = memo.eval(q.probs(), 0.3);
        let b = g_star(&m, &q, 0.3, &o).unwrap().0;
        assert!(a.is_finite() && (a - b).abs() < 1e-3, "{a} {b}");
        assert_eq!(memo.eval(q.probs(), 0.3), a);
        assert_eq!(memo.len(), 1);
    }
}
