//! One-dimensional search on `[0, 1]` used at every nesting level: a coarse
//! grid, golden-section refinement around the best local minima, and a
//! bisection polish toward the nearest infeasible neighbour so that minima
//! sitting on a constraint boundary are located precisely.

use super::param::Coords;
use super::SearchOptions;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Ranking of a trial point. Feasible points (violation within tolerance)
/// are ordered by value, infeasible ones by violation, and any feasible point
/// beats any infeasible one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key {
    pub viol: f64,
    pub value: f64,
}

impl Key {
    pub fn new(viol: f64, value: f64) -> Self {
        let viol = if viol.is_nan() { f64::INFINITY } else { viol.max(0.0) };
        let value = if value.is_nan() { f64::INFINITY } else { value };
        Self { viol, value }
    }

    #[inline]
    pub fn feasible(&self, tol: f64) -> bool {
        self.viol <= tol
    }

    #[inline]
    pub fn better(&self, other: &Key, tol: f64) -> bool {
        match (self.feasible(tol), other.feasible(tol)) {
            (true, true) => self.value < other.value,
            (true, false) => true,
            (false, true) => false,
            (false, false) => self.viol < other.viol,
        }
    }
}

/// Result of evaluating a point, including the best inner coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub key: Key,
    pub gap: f64,
    pub coords: Coords,
}

pub(crate) struct Outcome {
    pub eval: Eval,
    /// Change of the best value over the final refinement stage plus the
    /// inner levels' own estimates at the optimum.
    pub gap: f64,
}

fn finite_gap(coarse: &Key, fine: &Key, tol: f64) -> f64 {
    if coarse.feasible(tol) && fine.feasible(tol) && coarse.value.is_finite() && fine.value.is_finite() {
        (coarse.value - fine.value).abs()
    } else {
        0.0
    }
}

pub(crate) fn search_1d(f: &mut dyn FnMut(f64) -> Eval, o: &SearchOptions) -> Outcome {
    let tol = o.feas_tol;
    let n = ((1.0 / o.coarse).round() as usize).max(2);
    let mut pts: Vec<(f64, Eval)> = Vec::with_capacity(n + 1 + 64);
    for j in 0..=n {
        let u = j as f64 / n as f64;
        let e = f(u);
        pts.push((u, e));
    }
    let mut best = 0;
    for j in 1..=n {
        if pts[j].1.key.better(&pts[best].1.key, tol) {
            best = j;
        }
    }
    if pts[best].1.key.feasible(tol) && pts[best].1.key.value == f64::NEG_INFINITY {
        let (_, e) = pts.swap_remove(best);
        let gap = e.gap;
        return Outcome { eval: e, gap };
    }

    // Local minima of the grid, best first; neighbours of a chosen
    // candidate are skipped so that plateaus are refined only once.
    let mut cands: Vec<usize> = (0..=n)
        .filter(|&j| {
            let k = &pts[j].1.key;
            (j == 0 || !pts[j - 1].1.key.better(k, tol)) && (j == n || !pts[j + 1].1.key.better(k, tol))
        })
        .collect();
    cands.sort_by(|&a, &b| {
        let (ka, kb) = (&pts[a].1.key, &pts[b].1.key);
        if ka.better(kb, tol) {
            std::cmp::Ordering::Less
        } else if kb.better(ka, tol) {
            std::cmp::Ordering::Greater
        } else {
            a.cmp(&b)
        }
    });
    let mut chosen: Vec<usize> = Vec::with_capacity(o.candidates);
    for c in cands {
        if chosen.len() >= o.candidates.max(1) {
            break;
        }
        if chosen.iter().any(|&d: &usize| d.abs_diff(c) <= 1) {
            continue;
        }
        chosen.push(c);
    }

    let mut best_u = pts[best].0;
    let mut best_e = pts[best].1.clone();
    let mut stage_key = best_e.key;
    let stage_width = 32.0 * o.fine;

    for &c in &chosen {
        let mut a = if c == 0 { 0.0 } else { (c - 1) as f64 / n as f64 };
        let mut b = if c == n { 1.0 } else { (c + 1) as f64 / n as f64 };
        let mut x1 = b - GOLDEN * (b - a);
        let mut x2 = a + GOLDEN * (b - a);
        let mut e1 = f(x1);
        let mut e2 = f(x2);
        let consider = |u: f64, e: &Eval, width: f64, best_u: &mut f64, best_e: &mut Eval, stage: &mut Key| {
            if e.key.better(&best_e.key, tol) || (!best_e.key.better(&e.key, tol) && u < *best_u && e.key == best_e.key) {
                *best_u = u;
                *best_e = e.clone();
            }
            if width > stage_width && e.key.better(stage, tol) {
                *stage = e.key;
            }
        };
        consider(x1, &e1, b - a, &mut best_u, &mut best_e, &mut stage_key);
        consider(x2, &e2, b - a, &mut best_u, &mut best_e, &mut stage_key);
        while b - a > o.fine {
            if !e2.key.better(&e1.key, tol) {
                b = x2;
                x2 = x1;
                e2 = e1;
                x1 = b - GOLDEN * (b - a);
                e1 = f(x1);
                pts.push((x1, e1.clone()));
                consider(x1, &e1, b - a, &mut best_u, &mut best_e, &mut stage_key);
            } else {
                a = x1;
                x1 = x2;
                e1 = e2;
                x2 = a + GOLDEN * (b - a);
                e2 = f(x2);
                pts.push((x2, e2.clone()));
                consider(x2, &e2, b - a, &mut best_u, &mut best_e, &mut stage_key);
            }
        }
    }

    // Polish: bisect toward the nearest infeasible evaluated point on each
    // side of the incumbent, accepting feasible improvements.
    if best_e.key.feasible(tol) {
        let left = pts
            .iter()
            .filter(|(u, e)| *u < best_u && !e.key.feasible(tol))
            .map(|(u, _)| *u)
            .fold(f64::NEG_INFINITY, f64::max);
        let right = pts
            .iter()
            .filter(|(u, e)| *u > best_u && !e.key.feasible(tol))
            .map(|(u, _)| *u)
            .fold(f64::INFINITY, f64::min);
        for far in [left, right] {
            if !far.is_finite() {
                continue;
            }
            let mut lo = best_u;
            let mut hi = far;
            for _ in 0..60 {
                if (hi - lo).abs() <= o.fine * 1e-2 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let e = f(mid);
                if e.key.feasible(tol) {
                    lo = mid;
                    if e.key.better(&best_e.key, tol) {
                        best_u = mid;
                        best_e = e;
                    }
                } else {
                    hi = mid;
                }
            }
        }
    }

    let gap = finite_gap(&stage_key, &best_e.key, tol) + best_e.gap;
    Outcome { eval: best_e, gap }
}
