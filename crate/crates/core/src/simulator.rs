//! Finite-blocklength ground truth: fixed-composition random codebooks,
//! executable list/erasure decision rules, exact ensemble enumeration for tiny
//! blocklengths and Monte Carlo beyond, plus a Neyman–Pearson dominance check
//! against the likelihood-ratio (Forney) decoder.
//!
//! By symmetry of the ensemble, averages condition on message 0 being sent.
//! Every decoder accepts with a non-strict comparison, so ties enlarge the
//! list; decisions within [`TIE_TOL`] of the boundary are counted as ties.

use std::collections::HashMap;
use std::fmt;

use dashmap::DashMap;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponents::{GeneralThreshold, OutputThreshold, ThresholdSpec};
use crate::numeric::CompensatedSum;
use crate::typespace::{EmpiricalJoint, InputDistribution, Marginal, Model};

/// Per-letter slack of every acceptance comparison.
pub const TIE_TOL: f64 = 1e-9;

/// Default cap on `|type class|^M · |Y|^n` for exact enumeration.
pub const DEFAULT_BUDGET: f64 = 2e7;

/// Monte Carlo trials per independently seeded stream.
const CHUNK: usize = 1024;

/// Nearest `n`-type to `px` in total variation, as symbol counts. Ties go to
/// the lexicographically smaller count vector.
pub fn quantize_composition(px: &InputDistribution, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    let k = px.len();
    let ranges: Vec<(usize, usize)> = px
        .probs()
        .iter()
        .map(|&p| {
            let c = p * n as f64;
            ((c.floor() as usize).saturating_sub(1), (c.ceil() as usize + 1).min(n))
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cur = vec![0usize; k];
    fn rec(
        i: usize,
        left: usize,
        n: usize,
        px: &[f64],
        ranges: &[(usize, usize)],
        cur: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if i == px.len() {
            if left != 0 {
                return;
            }
            let tv = 0.5 * cur.iter().zip(px).map(|(&c, &p)| (c as f64 / n as f64 - p).abs()).sum::<f64>();
            let better = match best {
                None => true,
                Some((b, v)) => tv < *b - 1e-12 || ((tv - *b).abs() <= 1e-12 && cur < v),
            };
            if better {
                *best = Some((tv, cur.clone()));
            }
            return;
        }
        let (lo, hi) = ranges[i];
        for c in lo..=hi.min(left) {
            cur[i] = c;
            rec(i + 1, left - c, n, px, ranges, cur, best);
        }
    }
    rec(0, n, n, px.probs(), &ranges, &mut cur, &mut best);
    match best {
        Some((tv, counts)) if tv <= 0.5 / n as f64 + 1e-12 => Ok(counts),
        _ => Err(Error::NoNearbyType { n, tol: 0.5 / n as f64 }),
    }
}

/// `M = round(exp(nR))`, which must be at least 2.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::InvalidArgument(format!("rate must be nonnegative, got {rate}")));
    }
    let m = (n as f64 * rate).exp().round();
    if !m.is_finite() || m > 1e9 {
        return Err(Error::InvalidArgument(format!("exp(nR) = {m} codewords is too many")));
    }
    let m = m as usize;
    if m < 2 {
        return Err(Error::TooFewCodewords { rate, n, m });
    }
    Ok(m)
}

/// All sequences with the given symbol counts, in lexicographic order.
pub fn type_class(counts: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = counts.iter().sum();
    let mut out = Vec::new();
    let mut left = counts.to_vec();
    let mut cur = Vec::with_capacity(n);
    fn rec(left: &mut [usize], cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in 0..left.len() {
            if left[s] > 0 {
                left[s] -= 1;
                cur.push(s);
                rec(left, cur, n, out);
                cur.pop();
                left[s] += 1;
            }
        }
    }
    rec(&mut left, &mut cur, n, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub n: usize,
    /// Symbol counts shared by every codeword.
    pub composition: Vec<usize>,
    pub codewords: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// `ln(M) / n`.
    pub fn rate(&self) -> f64 {
        (self.codewords.len() as f64).ln() / self.n as f64
    }
}

/// Fixed-composition codebook with `M = round(exp(nR))` codewords drawn
/// independently and uniformly from the type class nearest to `px`.
pub fn sample_codebook(n: usize, rate: f64, px: &InputDistribution, seed: u64) -> Result<Codebook> {
    Ensemble::new(n, rate, px)?.sample_codebook(seed)
}

/// A decision rule executable on a received sequence.
#[derive(Clone)]
pub enum Decoder {
    /// `P(y|x_m) ≥ e^{nT} Σ_{l≠m} P(y|x_l)`.
    Forney { t: f64 },
    /// `n f(Q̂_m) ≥ nT + max_Q { ln N_m(Q|y) + n f(Q) }` where `N_m(Q|y)`
    /// counts competitors of joint type `Q`.
    TypeBased { t: f64 },
    /// `f(Q̂_m) ≥ max_{l≠m} h(Q̂_l)`.
    Psi(GeneralThreshold),
    /// `f(Q̂_m) ≥ g(Q̂_y)`.
    Lambda1(OutputThreshold),
    /// `f(Q̂_m) ≥ T + max_{l≠m} f(Q̂_l)`.
    Lambda2 { t: f64 },
}

impl Decoder {
    pub fn from_spec(spec: &ThresholdSpec) -> Self {
        match spec {
            ThresholdSpec::Optimal { t } => Decoder::Forney { t: *t },
            ThresholdSpec::General(h) => Decoder::Psi(h.clone()),
            ThresholdSpec::OutputOnly(g) => Decoder::Lambda1(g.clone()),
            ThresholdSpec::ScaledMl { t } => Decoder::Lambda2 { t: *t },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Decoder::Forney { .. } => "forney",
            Decoder::TypeBased { .. } => "type_based",
            Decoder::Psi(_) => "psi",
            Decoder::Lambda1(_) => "lambda1",
            Decoder::Lambda2 { .. } => "lambda2",
        }
    }

    pub fn params(&self) -> String {
        match self {
            Decoder::Forney { t } | Decoder::TypeBased { t } | Decoder::Lambda2 { t } => format!("T={t}"),
            Decoder::Psi(h) => h.label().to_string(),
            Decoder::Lambda1(g) => g.label().to_string(),
        }
    }

    fn needs_types(&self) -> bool {
        matches!(self, Decoder::TypeBased { .. } | Decoder::Psi(_))
    }
}

impl fmt::Debug for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.params())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Accepted codeword indices, ascending.
    pub list: Vec<usize>,
    pub erased: bool,
    /// Some decision fell within the tie tolerance.
    pub tie: bool,
}

/// Decode one received sequence.
pub fn decode(y: &[usize], cb: &Codebook, decoder: &Decoder, model: &Model) -> Result<DecodeOutcome> {
    if y.len() != cb.n {
        return Err(Error::LengthMismatch(y.len(), cb.n));
    }
    if let Some(&s) = y.iter().find(|&&s| s >= model.output_size()) {
        return Err(Error::SymbolOutOfRange { symbol: s, size: model.output_size() });
    }
    for cw in &cb.codewords {
        if cw.len() != cb.n {
            return Err(Error::LengthMismatch(cw.len(), cb.n));
        }
        if let Some(&s) = cw.iter().find(|&&s| s >= model.input_size()) {
            return Err(Error::SymbolOutOfRange { symbol: s, size: model.input_size() });
        }
    }
    let eng = Engine::new(model, decoder, cb.n);
    let scores: Vec<Score> = cb.codewords.iter().map(|x| eng.score(x, y)).collect();
    let g_y = eng.output_threshold(y);
    let mut scratch = Scratch::default();
    let mut list = Vec::new();
    let mut tie = false;
    eng.decide(&scores, g_y, &mut scratch, |m, accepted, t| {
        tie |= t;
        if accepted {
            list.push(m);
        }
    });
    Ok(DecodeOutcome { erased: list.is_empty(), list, tie })
}

/// Per-codeword quantities a decision needs.
#[derive(Debug, Clone, Copy)]
struct Score {
    /// Decoding-metric log-likelihood `n f(Q̂)`.
    l: f64,
    /// Interned joint type, for grouping.
    key: u32,
    /// `h(Q̂)` for the general family.
    h: f64,
}

#[derive(Default)]
struct Scratch {
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    groups: HashMap<u32, (usize, f64)>,
}

struct Engine<'a> {
    model: &'a Model,
    decoder: &'a Decoder,
    n: usize,
    types: DashMap<Vec<u16>, (u32, f64)>,
    outputs: DashMap<Vec<u16>, f64>,
}

fn lse2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

impl<'a> Engine<'a> {
    fn new(model: &'a Model, decoder: &'a Decoder, n: usize) -> Self {
        Self { model, decoder, n, types: DashMap::new(), outputs: DashMap::new() }
    }

    fn score(&self, x: &[usize], y: &[usize]) -> Score {
        let ny = self.model.output_size();
        let l = x.iter().zip(y).map(|(&a, &b)| self.model.metric().ln_prob(a, b)).sum::<f64>();
        if !self.decoder.needs_types() {
            return Score { l, key: 0, h: f64::NAN };
        }
        let mut counts = vec![0u16; self.model.input_size() * ny];
        for (&a, &b) in x.iter().zip(y) {
            counts[a * ny + b] += 1;
        }
        let (key, h) = self.intern(counts);
        Score { l, key, h }
    }

    fn intern(&self, counts: Vec<u16>) -> (u32, f64) {
        if let Some(v) = self.types.get(&counts) {
            return *v;
        }
        let h = match self.decoder {
            Decoder::Psi(h) => {
                let emp = EmpiricalJoint {
                    n: self.n,
                    nx: self.model.input_size(),
                    ny: self.model.output_size(),
                    counts: counts.iter().map(|&c| c as usize).collect(),
                };
                h.eval(&emp.to_joint_type())
            }
            _ => f64::NAN,
        };
        let next = self.types.len() as u32;
        *self.types.entry(counts).or_insert((next, h))
    }

    fn output_threshold(&self, y: &[usize]) -> f64 {
        let Decoder::Lambda1(g) = self.decoder else { return f64::NAN };
        let mut counts = vec![0u16; self.model.output_size()];
        for &b in y {
            counts[b] += 1;
        }
        if let Some(v) = self.outputs.get(&counts) {
            return *v;
        }
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        let v = Marginal::new(probs).map(|q| g.eval(&q)).unwrap_or(f64::INFINITY);
        self.outputs.insert(counts, v);
        v
    }

    /// Report `(index, accepted, tied)` for every codeword.
    fn decide(&self, s: &[Score], g_y: f64, scratch: &mut Scratch, mut emit: impl FnMut(usize, bool, bool)) {
        let n = self.n as f64;
        let m = s.len();
        let mut verdict = |i: usize, lhs: f64, rhs: f64| {
            // Non-strict comparison with sentinel-safe arithmetic.
            let accepted = lhs >= rhs - TIE_TOL || (lhs == rhs);
            let tie = lhs.is_finite() && rhs.is_finite() && (lhs - rhs).abs() <= TIE_TOL;
            emit(i, accepted, tie);
        };
        match self.decoder {
            Decoder::Forney { t } => {
                forney_margins(s, scratch);
                for i in 0..m {
                    verdict(i, scratch.prefix[i], *t);
                }
            }
            Decoder::Lambda2 { t } => {
                let (best, second) = top_two(s.iter().map(|x| x.l));
                for (i, x) in s.iter().enumerate() {
                    let other = if i == best.0 { second.1 } else { best.1 };
                    verdict(i, x.l / n, t + other / n);
                }
            }
            Decoder::Psi(_) => {
                let (best, second) = top_two(s.iter().map(|x| x.h));
                for (i, x) in s.iter().enumerate() {
                    let other = if i == best.0 { second.1 } else { best.1 };
                    verdict(i, x.l / n, other);
                }
            }
            Decoder::Lambda1(_) => {
                for (i, x) in s.iter().enumerate() {
                    verdict(i, x.l / n, g_y);
                }
            }
            Decoder::TypeBased { t } => {
                scratch.groups.clear();
                for x in s {
                    let e = scratch.groups.entry(x.key).or_insert((0, x.l));
                    e.0 += 1;
                }
                // Two largest ln N + n f over groups, and their keys.
                let mut top: [(u32, f64); 2] = [(u32::MAX, f64::NEG_INFINITY); 2];
                for (&k, &(c, l)) in &scratch.groups {
                    let v = (c as f64).ln() + l;
                    if v > top[0].1 || (v == top[0].1 && k < top[0].0) {
                        top[1] = top[0];
                        top[0] = (k, v);
                    } else if v > top[1].1 || (v == top[1].1 && k < top[1].0) {
                        top[1] = (k, v);
                    }
                }
                for (i, x) in s.iter().enumerate() {
                    let (c, l) = scratch.groups[&x.key];
                    let own = if c > 1 { ((c - 1) as f64).ln() + l } else { f64::NEG_INFINITY };
                    let other = if top[0].0 == x.key { top[1].1 } else { top[0].1 };
                    verdict(i, x.l / n, t + own.max(other) / n);
                }
            }
        }
    }
}

/// `(index, value)` of the largest and second-largest entries.
fn top_two(values: impl Iterator<Item = f64>) -> ((usize, f64), (usize, f64)) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    let mut second = (usize::MAX, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 || best.0 == usize::MAX {
            second = best;
            best = (i, v);
        } else if v > second.1 || second.0 == usize::MAX {
            second = (i, v);
        }
    }
    (best, second)
}

/// Per-letter `(ln P(y|x_m) - ln Σ_{l≠m} P(y|x_l)) / n` into `scratch.prefix`.
fn forney_margins(s: &[Score], scratch: &mut Scratch) {
    let m = s.len();
    scratch.suffix.clear();
    scratch.suffix.resize(m + 1, f64::NEG_INFINITY);
    for i in (0..m).rev() {
        scratch.suffix[i] = lse2(scratch.suffix[i + 1], s[i].l);
    }
    let mut pre = f64::NEG_INFINITY;
    scratch.prefix.clear();
    scratch.prefix.resize(m, 0.0);
    for i in 0..m {
        let others = lse2(pre, scratch.suffix[i + 1]);
        scratch.prefix[i] = if others == f64::NEG_INFINITY {
            f64::INFINITY
        } else if s[i].l == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            s[i].l - others
        };
        pre = lse2(pre, s[i].l);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub n: usize,
    pub m: usize,
    /// `ln(M) / n`.
    pub rate: f64,
    pub composition: Vec<usize>,
    /// Probability that the sent codeword is not on the list.
    pub p_e: f64,
    /// Expected number of wrong codewords on the list.
    pub list_size: f64,
    pub stderr_pe: f64,
    pub stderr_list: f64,
    /// Probability mass of outcomes with a tied decision.
    pub tie_rate: f64,
    pub mode: Mode,
    /// Monte Carlo trials, or enumerated cells.
    pub samples: u64,
}

/// Blocklength, codebook size and composition of a fixed-composition ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    pub n: usize,
    pub m: usize,
    pub composition: Vec<usize>,
}

impl Ensemble {
    /// `M = round(exp(nR)) ≥ 2`.
    pub fn new(n: usize, rate: f64, px: &InputDistribution) -> Result<Self> {
        let composition = quantize_composition(px, n)?;
        Ok(Self { n, m: codebook_size(n, rate)?, composition })
    }

    /// Explicit codebook size; `M = 1` is allowed.
    pub fn with_size(n: usize, m: usize, px: &InputDistribution) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("codebook must have at least one codeword".into()));
        }
        Ok(Self { n, m, composition: quantize_composition(px, n)? })
    }

    pub fn rate(&self) -> f64 {
        (self.m as f64).ln() / self.n as f64
    }

    /// `|type class|^M · |Y|^n`.
    pub fn enumeration_cost(&self, ny: usize) -> f64 {
        let class = multinomial(&self.composition);
        class.powi(self.m as i32) * (ny as f64).powi(self.n as i32)
    }

    pub fn sample_codebook(&self, seed: u64) -> Result<Codebook> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = base_word(&self.composition);
        let codewords = (0..self.m)
            .map(|_| {
                let mut w = base.clone();
                w.shuffle(&mut rng);
                w
            })
            .collect();
        Ok(Codebook { n: self.n, composition: self.composition.clone(), codewords })
    }

    fn check(&self, model: &Model) -> Result<()> {
        if self.composition.len() != model.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "composition has {} symbols, channel has {} inputs",
                self.composition.len(),
                model.input_size()
            )));
        }
        Ok(())
    }

    /// Exact `P̄_e` and `L̄` by summing over every codebook and output.
    pub fn exact(&self, model: &Model, decoder: &Decoder, budget: f64) -> Result<EnsembleEstimate> {
        let stats = self.run_exact(model, decoder, budget, |_, _, _| {})?;
        Ok(self.estimate(stats.0, Mode::Exact))
    }

    /// Sampled `P̄_e` and `L̄` with standard errors, deterministic in `seed`.
    pub fn monte_carlo(&self, model: &Model, decoder: &Decoder, trials: usize, seed: u64) -> Result<EnsembleEstimate> {
        let stats = self.run_mc(model, decoder, trials, seed, |_, _, _| {})?;
        Ok(self.estimate(stats.0, Mode::MonteCarlo))
    }

    fn estimate(&self, s: Stats, mode: Mode) -> EnsembleEstimate {
        let (pe, list) = (s.err.value(), s.list.value());
        let (se_pe, se_list) = match mode {
            Mode::Exact => (0.0, 0.0),
            Mode::MonteCarlo => {
                let k = s.samples as f64;
                let var = |sum2: f64, mean: f64| {
                    if k > 1.0 {
                        ((sum2 - k * mean * mean) / (k - 1.0)).max(0.0)
                    } else {
                        0.0
                    }
                };
                ((var(s.err2.value(), pe) / k).sqrt(), (var(s.list2.value(), list) / k).sqrt())
            }
        };
        EnsembleEstimate {
            n: self.n,
            m: self.m,
            rate: self.rate(),
            composition: self.composition.clone(),
            p_e: pe.clamp(0.0, 1.0),
            list_size: list.clamp(0.0, (self.m - 1) as f64),
            stderr_pe: se_pe,
            stderr_list: se_list,
            tie_rate: s.ties.value(),
            mode,
            samples: s.samples,
        }
    }

    /// Enumerate `(weight, scores)` cells, feeding the decoder statistics and
    /// `extra` with the Forney margins of every index.
    fn run_exact(
        &self,
        model: &Model,
        decoder: &Decoder,
        budget: f64,
        extra: impl Fn(&mut Curve, f64, &[f64]) + Sync,
    ) -> Result<(Stats, Curve)> {
        self.check(model)?;
        let ny = model.output_size();
        let cost = self.enumeration_cost(ny);
        if cost > budget {
            return Err(Error::BudgetExceeded { cost, budget });
        }
        let class = type_class(&self.composition);
        let eng = Engine::new(model, decoder, self.n);
        let ys = (ny as u64).pow(self.n as u32);
        let norm = (class.len() as f64).powi(self.m as i32);
        let parts: Vec<(Stats, Curve)> = (0..ys)
            .into_par_iter()
            .map(|yi| {
                let y = digits(yi, ny, self.n);
                let scores: Vec<Score> = class.iter().map(|x| eng.score(x, &y)).collect();
                let truth: Vec<f64> = class
                    .iter()
                    .map(|x| x.iter().zip(&y).map(|(&a, &b)| model.truth().ln_prob(a, b)).sum::<f64>().exp())
                    .collect();
                let g_y = eng.output_threshold(&y);
                let mut stats = Stats::default();
                let mut curve = Curve::default();
                let mut scratch = Scratch::default();
                let mut margins_scratch = Scratch::default();
                let mut idx = vec![0usize; self.m];
                let mut cell: Vec<Score> = vec![scores[0]; self.m];
                loop {
                    for (c, &i) in cell.iter_mut().zip(&idx) {
                        *c = scores[i];
                    }
                    let w = truth[idx[0]] / norm;
                    if w > 0.0 {
                        stats.add(&eng, &cell, g_y, w, &mut scratch);
                        forney_margins(&cell, &mut margins_scratch);
                        let per_letter: Vec<f64> = margins_scratch.prefix.iter().map(|v| v / self.n as f64).collect();
                        extra(&mut curve, w, &per_letter);
                    }
                    if !odometer(&mut idx, class.len()) {
                        break;
                    }
                }
                (stats, curve)
            })
            .collect();
        let mut stats = Stats::default();
        let mut curve = Curve::default();
        for (s, c) in parts {
            stats.merge(&s);
            curve.merge(&c);
        }
        stats.samples = cost as u64;
        Ok((stats, curve))
    }

    fn run_mc(
        &self,
        model: &Model,
        decoder: &Decoder,
        trials: usize,
        seed: u64,
        extra: impl Fn(&mut Curve, f64, &[f64]) + Sync,
    ) -> Result<(Stats, Curve)> {
        self.check(model)?;
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        let eng = Engine::new(model, decoder, self.n);
        let rows: Vec<WeightedIndex<f64>> = (0..model.input_size())
            .map(|x| WeightedIndex::new(model.truth().row(x)).map_err(|e| Error::InvalidArgument(e.to_string())))
            .collect::<Result<_>>()?;
        let base = base_word(&self.composition);
        let chunks = trials.div_ceil(CHUNK);
        let w = 1.0 / trials as f64;
        let parts: Vec<(Stats, Curve)> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let count = CHUNK.min(trials - k * CHUNK);
                let mut stats = Stats::default();
                let mut curve = Curve::default();
                let mut scratch = Scratch::default();
                let mut margins_scratch = Scratch::default();
                let mut words = vec![base.clone(); self.m];
                let mut y = vec![0usize; self.n];
                let mut cell: Vec<Score> = Vec::with_capacity(self.m);
                for _ in 0..count {
                    for word in words.iter_mut() {
                        word.shuffle(&mut rng);
                    }
                    for (yi, &x) in y.iter_mut().zip(&words[0]) {
                        *yi = rows[x].sample(&mut rng);
                    }
                    cell.clear();
                    cell.extend(words.iter().map(|x| eng.score(x, &y)));
                    let g_y = eng.output_threshold(&y);
                    stats.add(&eng, &cell, g_y, w, &mut scratch);
                    forney_margins(&cell, &mut margins_scratch);
                    let per_letter: Vec<f64> = margins_scratch.prefix.iter().map(|v| v / self.n as f64).collect();
                    extra(&mut curve, w, &per_letter);
                }
                stats.samples = count as u64;
                (stats, curve)
            })
            .collect();
        let mut stats = Stats::default();
        let mut curve = Curve::default();
        for (s, c) in parts {
            stats.merge(&s);
            curve.merge(&c);
        }
        Ok((stats, curve))
    }
}

fn multinomial(counts: &[usize]) -> f64 {
    let mut v = 1.0;
    let mut k = 0usize;
    for &c in counts {
        for j in 1..=c {
            k += 1;
            v = v * k as f64 / j as f64;
        }
    }
    v
}

fn base_word(counts: &[usize]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c)).collect()
}

fn digits(mut v: u64, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    for d in out.iter_mut().rev() {
        *d = (v % base as u64) as usize;
        v /= base as u64;
    }
    out
}

/// Advance a little-endian counter; false once it wraps.
fn odometer(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

#[derive(Default, Clone)]
struct Stats {
    err: CompensatedSum,
    err2: CompensatedSum,
    list: CompensatedSum,
    list2: CompensatedSum,
    ties: CompensatedSum,
    samples: u64,
}

impl Stats {
    fn add(&mut self, eng: &Engine, cell: &[Score], g_y: f64, w: f64, scratch: &mut Scratch) {
        let mut sent_ok = false;
        let mut wrong = 0usize;
        let mut tie = false;
        eng.decide(cell, g_y, scratch, |i, acc, t| {
            tie |= t;
            if i == 0 {
                sent_ok = acc;
            } else if acc {
                wrong += 1;
            }
        });
        let e = if sent_ok { 0.0 } else { 1.0 };
        let c = wrong as f64;
        self.err.add(w * e);
        self.err2.add(e);
        self.list.add(w * c);
        self.list2.add(c * c);
        if tie {
            self.ties.add(w);
        }
    }

    fn merge(&mut self, o: &Stats) {
        self.err.add(o.err.value());
        self.err2.add(o.err2.value());
        self.list.add(o.list.value());
        self.list2.add(o.list2.value());
        self.ties.add(o.ties.value());
        self.samples += o.samples;
    }
}

/// Mass of Forney margins, for the sent index and for the others, keyed by
/// the per-letter margin rounded to the tie tolerance.
#[derive(Default, Clone)]
struct Curve {
    mass: HashMap<i64, (f64, f64)>,
}

fn margin_key(v: f64) -> i64 {
    if v == f64::INFINITY {
        i64::MAX
    } else if v == f64::NEG_INFINITY {
        i64::MIN
    } else {
        (v / TIE_TOL).round() as i64
    }
}

fn key_value(k: i64) -> f64 {
    match k {
        i64::MAX => f64::INFINITY,
        i64::MIN => f64::NEG_INFINITY,
        _ => k as f64 * TIE_TOL,
    }
}

impl Curve {
    fn record(&mut self, w: f64, margins: &[f64]) {
        for (i, &v) in margins.iter().enumerate() {
            let e = self.mass.entry(margin_key(v)).or_insert((0.0, 0.0));
            if i == 0 {
                e.0 += w;
            } else {
                e.1 += w;
            }
        }
    }

    fn merge(&mut self, o: &Curve) {
        let mut keys: Vec<&i64> = o.mass.keys().collect();
        keys.sort();
        for k in keys {
            let (a, b) = o.mass[k];
            let e = self.mass.entry(*k).or_insert((0.0, 0.0));
            e.0 += a;
            e.1 += b;
        }
    }

    /// Trade-off points of the Forney decoder as `T` sweeps every distinct
    /// margin: `(T, P_e, L, tie mass of the sent index, tie mass of others)`.
    fn points(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        let mut keys: Vec<i64> = self.mass.keys().copied().collect();
        keys.sort();
        let total_list: f64 = keys.iter().map(|k| self.mass[k].1).sum();
        let mut below_sent = 0.0;
        let mut at_or_above_list = total_list;
        let mut out = Vec::with_capacity(keys.len() + 1);
        for k in keys {
            let (a, b) = self.mass[&k];
            out.push((key_value(k), below_sent, at_or_above_list, a, b));
            below_sent += a;
            at_or_above_list -= b;
        }
        out.push((f64::INFINITY, below_sent, 0.0f64.max(at_or_above_list), 0.0, 0.0));
        out
    }
}

/// Result of comparing a decoder against the Forney trade-off curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub candidate: EnsembleEstimate,
    pub dominated: bool,
    /// Forney threshold of the dominating decoder.
    pub threshold: Option<f64>,
    /// Fraction of outcomes tied exactly at the threshold that are accepted;
    /// 1 is the plain non-strict rule, anything else a randomized tie break.
    pub tie_inclusion: f64,
    /// `(P_e, L)` of the dominating decoder.
    pub forney: Option<(f64, f64)>,
    pub tolerance: f64,
}

/// How a dominance check averages over the ensemble.
#[derive(Debug, Clone, Copy)]
pub enum Averaging {
    Exact { budget: f64 },
    MonteCarlo { trials: usize, seed: u64 },
}

/// Look for a Forney decoder with `P_e` and `L` both no larger than the
/// candidate's. Both are evaluated on the same outcomes. Exactly tied
/// margins may be split at random, which keeps the decoder in the
/// likelihood-ratio family and traces the full lower boundary.
pub fn dominance_check(
    ens: &Ensemble,
    model: &Model,
    candidate: &Decoder,
    averaging: Averaging,
) -> Result<DominanceReport> {
    let record = |c: &mut Curve, w: f64, m: &[f64]| c.record(w, m);
    let (stats, curve, mode) = match averaging {
        Averaging::Exact { budget } => {
            let (s, c) = ens.run_exact(model, candidate, budget, record)?;
            (s, c, Mode::Exact)
        }
        Averaging::MonteCarlo { trials, seed } => {
            let (s, c) = ens.run_mc(model, candidate, trials, seed, record)?;
            (s, c, Mode::MonteCarlo)
        }
    };
    let est = ens.estimate(stats, mode);
    let tol = match mode {
        Mode::Exact => 1e-12 + 1e-9 * (est.p_e + est.list_size),
        Mode::MonteCarlo => 3.0 * est.stderr_pe.max(est.stderr_list) + 1e-12,
    };
    let (pc, lc) = (est.p_e, est.list_size);
    let mut found: Option<(f64, f64, f64, f64)> = None;
    for (t, pe, l, tie_sent, tie_list) in curve.points() {
        // Accept all ties at t.
        if pe <= pc + tol && l <= lc + tol {
            found = Some((t, 1.0, pe, l));
            break;
        }
        // Reject a fraction of the ties at t: P_e grows, L shrinks.
        if tie_sent > 0.0 || tie_list > 0.0 {
            let theta_min = if tie_sent > 0.0 { (1.0 - (pc + tol - pe) / tie_sent).max(0.0) } else { 0.0 };
            if theta_min <= 1.0 {
                let p = pe + (1.0 - theta_min) * tie_sent;
                let ll = l - (1.0 - theta_min) * tie_list;
                if p <= pc + tol && ll <= lc + tol {
                    found = Some((t, theta_min, p, ll));
                    break;
                }
            }
        }
    }
    Ok(match found {
        Some((t, theta, p, l)) => DominanceReport {
            candidate: est,
            dominated: true,
            threshold: Some(t),
            tie_inclusion: theta,
            forney: Some((p, l)),
            tolerance: tol,
        },
        None => DominanceReport {
            candidate: est,
            dominated: false,
            threshold: None,
            tie_inclusion: 1.0,
            forney: None,
            tolerance: tol,
        },
    })
}

/// `P̄_e` from exact enumeration at one blocklength.
pub fn exact_ensemble_average(n: usize, rate: f64, model: &Model, decoder: &Decoder) -> Result<EnsembleEstimate> {
    Ensemble::new(n, rate, model.px())?.exact(model, decoder, DEFAULT_BUDGET)
}

pub fn monte_carlo_average(
    n: usize,
    rate: f64,
    model: &Model,
    decoder: &Decoder,
    trials: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    Ensemble::new(n, rate, model.px())?.monte_carlo(model, decoder, trials, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub n: usize,
    pub m: usize,
    pub rate: f64,
    pub p_e: f64,
    /// `-(1/n) ln P̄_e`.
    pub exponent: f64,
}

/// Exact `-(1/n) ln P̄_e` over a range of blocklengths at a nominal rate.
/// Finite-`n` values carry polynomial prefactors and rate rounding, so they
/// only indicate a trend toward the single-letter exponent.
pub fn exponent_trend(model: &Model, rate: f64, decoder: &Decoder, ns: &[usize], budget: f64) -> Result<Vec<TrendPoint>> {
    ns.iter()
        .map(|&n| {
            let est = Ensemble::new(n, rate, model.px())?.exact(model, decoder, budget)?;
            Ok(TrendPoint { n, m: est.m, rate: est.rate, p_e: est.p_e, exponent: -est.p_e.ln() / n as f64 })
        })
        .collect()
}
