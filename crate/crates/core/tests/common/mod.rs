//! Independent brute-force evaluators used as test oracles. They share no
//! code with the library: functionals are recomputed from scratch on a
//! dense kernel grid for binary channels with a uniform input.

#![allow(dead_code)]

pub const GRID: usize = 400;

/// Binary channel given as `[[W(0|0), W(1|0)], [W(0|1), W(1|1)]]`.
#[derive(Clone, Copy)]
pub struct Bin {
    pub w: [[f64; 2]; 2],
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::NEG_INFINITY
    } else {
        x * y.ln()
    }
}

impl Bin {
    pub fn bsc(p: f64) -> Self {
        Bin { w: [[1.0 - p, p], [p, 1.0 - p]] }
    }

    pub fn w2() -> Self {
        Bin { w: [[0.6, 0.4], [0.01, 0.99]] }
    }

    /// Kernel `(a, b) = (Q(1|0), Q(1|1))`.
    pub fn f(&self, a: f64, b: f64) -> f64 {
        0.5 * (xlogy(1.0 - a, self.w[0][0]) + xlogy(a, self.w[0][1]) + xlogy(1.0 - b, self.w[1][0]) + xlogy(b, self.w[1][1]))
    }

    pub fn d(&self, a: f64, b: f64) -> f64 {
        let kl = |p: f64, w1: f64| {
            let t0 = if 1.0 - p == 0.0 { 0.0 } else if 1.0 - w1 == 0.0 { f64::INFINITY } else { (1.0 - p) * ((1.0 - p) / (1.0 - w1)).ln() };
            let t1 = if p == 0.0 { 0.0 } else if w1 == 0.0 { f64::INFINITY } else { p * (p / w1).ln() };
            t0 + t1
        };
        0.5 * (kl(a, self.w[0][1]) + kl(b, self.w[1][1]))
    }
}

pub fn mi(a: f64, b: f64) -> f64 {
    let q1 = 0.5 * (a + b);
    let h = |p: f64| -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p));
    (h(q1) - 0.5 * (h(a) + h(b))).max(0.0)
}

pub fn g(i: usize) -> f64 {
    i as f64 / GRID as f64
}


/// Functionals of one kernel `(a, b)`.
#[derive(Clone, Copy, Debug)]
pub struct K {
    pub a: f64,
    pub b: f64,
    pub f: f64,
    pub d: f64,
    pub i: f64,
}

pub fn kernel(ch: &Bin, a: f64, b: f64) -> K {
    K { a, b, f: ch.f(a, b), d: ch.d(a, b), i: mi(a, b) }
}

fn in_unit(x: f64) -> bool {
    (-1e-15..=1.0 + 1e-15).contains(&x)
}

/// Coupled-pair minimum: tilde kernel `(a, b)`, single kernel `(c, a + b - c)`.
/// Exhaustive grid at step 1/400, then `levels` rounds of local zoom around
/// the best few cells.
pub fn pair_min(ch: &Bin, feasible: impl Fn(&K, &K) -> bool, obj: impl Fn(&K, &K) -> f64) -> f64 {
    let n = GRID + 1;
    let table: Vec<K> = (0..n * n).map(|k| kernel(ch, g(k / n), g(k % n))).collect();
    let mut top: Vec<(f64, [f64; 3])> = Vec::new();
    let push = |v: f64, p: [f64; 3], top: &mut Vec<(f64, [f64; 3])>| {
        top.push((v, p));
        if top.len() > 64 {
            top.sort_by(|x, y| x.0.total_cmp(&y.0));
            top.truncate(8);
        }
    };
    for s in 0..=2 * GRID {
        let lo = s.saturating_sub(GRID);
        let hi = s.min(GRID);
        for ta in lo..=hi {
            let t = &table[ta * n + (s - ta)];
            for qa in lo..=hi {
                let q = &table[qa * n + (s - qa)];
                if feasible(t, q) {
                    push(obj(t, q), [t.a, t.b, q.a], &mut top);
                }
            }
        }
    }
    top.sort_by(|x, y| x.0.total_cmp(&y.0));
    top.truncate(8);
    let mut best = top.first().map_or(f64::INFINITY, |t| t.0);
    for &(_, centre) in &top {
        let mut c = centre;
        let mut step = 1.0 / GRID as f64;
        for _ in 0..4 {
            let fine = step / 10.0;
            let mut local = (f64::INFINITY, c);
            for i in -20..=20 {
                for j in -20..=20 {
                    for k in -20..=20 {
                        let (a, b, cc) = (c[0] + i as f64 * fine, c[1] + j as f64 * fine, c[2] + k as f64 * fine);
                        let dd = a + b - cc;
                        if !(in_unit(a) && in_unit(b) && in_unit(cc) && in_unit(dd)) {
                            continue;
                        }
                        let (t, q) = (kernel(ch, a, b), kernel(ch, cc, dd));
                        if feasible(&t, &q) {
                            let v = obj(&t, &q);
                            if v < local.0 {
                                local = (v, [a, b, cc]);
                            }
                        }
                    }
                }
            }
            if local.0 < best {
                best = local.0;
            }
            c = local.1;
            step = fine;
        }
    }
    best
}

/// Single-kernel minimum with the same grid-then-zoom scheme.
pub fn single_min(ch: &Bin, feasible: impl Fn(&K) -> bool, obj: impl Fn(&K) -> f64) -> f64 {
    let n = GRID + 1;
    let mut top: Vec<(f64, [f64; 2])> = Vec::new();
    for ia in 0..n {
        for ib in 0..n {
            let k = kernel(ch, g(ia), g(ib));
            if feasible(&k) {
                top.push((obj(&k), [k.a, k.b]));
            }
        }
    }
    top.sort_by(|x, y| x.0.total_cmp(&y.0));
    top.truncate(8);
    let mut best = top.first().map_or(f64::INFINITY, |t| t.0);
    for &(_, centre) in &top {
        let mut c = centre;
        let mut step = 1.0 / GRID as f64;
        for _ in 0..4 {
            let fine = step / 10.0;
            let mut local = (f64::INFINITY, c);
            for i in -20..=20 {
                for j in -20..=20 {
                    let (a, b) = (c[0] + i as f64 * fine, c[1] + j as f64 * fine);
                    if !(in_unit(a) && in_unit(b)) {
                        continue;
                    }
                    let k = kernel(ch, a, b);
                    if feasible(&k) {
                        let v = obj(&k);
                        if v < local.0 {
                            local = (v, [a, b]);
                        }
                    }
                }
            }
            if local.0 < best {
                best = local.0;
            }
            c = local.1;
            step = fine;
        }
    }
    best
}

/// Maximum of `obj` over kernels with `a + b = s` and `feasible`, by a fine
/// one-dimensional scan.
pub fn line_max(ch: &Bin, s: f64, feasible: impl Fn(&K) -> bool, obj: impl Fn(&K) -> f64) -> f64 {
    let lo = (s - 1.0).max(0.0);
    let hi = s.min(1.0);
    let steps = 4000;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        let a = lo + (hi - lo) * i as f64 / steps as f64;
        let k = kernel(ch, a, s - a);
        if feasible(&k) {
            best = best.max(obj(&k));
        }
    }
    best
}

/// `E_a(R, T)`.
pub fn e_a(ch: &Bin, r: f64, t: f64) -> f64 {
    pair_min(ch, |tk, q| q.f + t >= tk.f && q.i >= r, |tk, q| tk.d + q.i) - r
}

/// `E_b(R, T)`.
pub fn e_b(ch: &Bin, r: f64, t: f64) -> f64 {
    let memo = std::cell::RefCell::new(std::collections::HashMap::new());
    let beta = |s: f64| {
        let key = (s * 1e9).round() as i64;
        if let Some(&v) = memo.borrow().get(&key) {
            return v;
        }
        let v = line_max(ch, s, |k| k.i <= r, |k| k.f - k.i);
        memo.borrow_mut().insert(key, v);
        v
    };
    single_min(ch, |k| k.f <= r + t + beta(k.a + k.b), |k| k.d)
}

/// Smallest `f` over kernels with output marginal `q1 = Q_Y(1)` and `D <= e`.
pub fn g_star(ch: &Bin, q1: f64, e: f64) -> f64 {
    -line_max(ch, 2.0 * q1, |k| k.d <= e, |k| -k.f)
}
