//! Coordinates on the probability simplex and on the transport polytope of
//! joint types with a fixed output marginal. Every coordinate lives in
//! `[0, 1]`, so a box grid covers the whole feasible set.

use smallvec::SmallVec;

use crate::typespace::JointType;

pub(crate) type Coords = SmallVec<[f64; 16]>;
pub(crate) type Probs = SmallVec<[f64; 4]>;

/// Number of coordinates of the output-marginal simplex.
#[inline]
pub(crate) fn marginal_dim(ny: usize) -> usize {
    ny.saturating_sub(1)
}

/// Number of coordinates of the slice `{Q : Q_Y = q}`.
#[inline]
pub(crate) fn slice_dim(nx: usize, ny: usize) -> usize {
    nx.saturating_sub(1) * ny.saturating_sub(1)
}

/// Stick-breaking map from `[0,1]^{ny-1}` onto the simplex.
pub(crate) fn marginal_from_coords(u: &[f64], ny: usize) -> Probs {
    let mut q = Probs::with_capacity(ny);
    let mut rest = 1.0f64;
    for &c in u.iter().take(ny - 1) {
        let v = (c * rest).clamp(0.0, rest);
        q.push(v);
        rest = (rest - v).max(0.0);
    }
    q.push(rest);
    q
}

/// Joint type with input distribution `px`, output marginal `q`, built by
/// filling the free cells row by row. Each cell ranges between the bounds
/// that keep the remaining rows and columns completable, so every `u` maps
/// to a valid joint type and every valid joint type is reachable.
pub(crate) fn slice_point(px: &[f64], q: &[f64], u: &[f64]) -> JointType {
    let nx = px.len();
    let ny = q.len();
    let mut joint: SmallVec<[f64; 16]> = SmallVec::from_elem(0.0, nx * ny);
    let mut col_rem: Probs = SmallVec::from_slice(q);
    let mut rows_after: f64 = px.iter().skip(1).sum();
    let mut k = 0;
    for x in 0..nx.saturating_sub(1) {
        let mut r = px[x];
        let mut cols_after: f64 = col_rem.iter().skip(1).sum();
        for y in 0..ny - 1 {
            let lo = 0f64.max(r - cols_after).max(col_rem[y] - rows_after);
            let hi = r.min(col_rem[y]);
            let j = if hi > lo { lo + u[k] * (hi - lo) } else { hi.max(0.0) };
            k += 1;
            joint[x * ny + y] = j;
            r = (r - j).max(0.0);
            col_rem[y] = (col_rem[y] - j).max(0.0);
            cols_after = (cols_after - col_rem[y + 1]).max(0.0);
        }
        // Remaining mass of the row goes to the last column.
        let last = ny - 1;
        let j = r.min(col_rem[last]).max(0.0);
        joint[x * ny + last] = j;
        col_rem[last] = (col_rem[last] - j).max(0.0);
        rows_after = (rows_after - px[x + 1]).max(0.0);
    }
    let x = nx - 1;
    for y in 0..ny {
        joint[x * ny + y] = col_rem[y];
    }
    JointType::from_joint_parts(px, joint, q, ny)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_slice_covers_segment() {
        let px = [0.5, 0.5];
        let q = [0.3, 0.7];
        let a = slice_point(&px, &q, &[0.0]);
        let b = slice_point(&px, &q, &[1.0]);
        assert_eq!(a.joint(0, 0), 0.0);
        assert!((b.joint(0, 0) - 0.3).abs() < 1e-15);
        assert!((b.joint(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn marginal_map_endpoints() {
        assert_eq!(marginal_from_coords(&[0.0], 2).as_slice(), &[0.0, 1.0]);
        assert_eq!(marginal_from_coords(&[1.0, 0.5], 3).as_slice(), &[1.0, 0.0, 0.0]);
        let q = marginal_from_coords(&[0.5, 0.5], 3);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            let mut p: Vec<f64> = v.iter().map(|x| (x + 1e-9 / v.len() as f64) / s).collect();
            let t: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= t);
            p
        })
    }

    proptest! {
        #[test]
        fn slice_points_have_requested_marginals(
            nx in 2usize..4, ny in 2usize..4,
            seed_px in simplex(3), seed_q in simplex(3),
            u in prop::collection::vec(0.0f64..=1.0, 4)
        ) {
            let renorm = |v: &[f64], n: usize| { let s: f64 = v[..n].iter().sum(); v[..n].iter().map(|x| x / s).collect::<Vec<_>>() };
            let px = renorm(&seed_px, nx);
            let q = renorm(&seed_q, ny);
            let t = slice_point(&px, &q, &u[..slice_dim(nx, ny)]);
            for x in 0..nx {
                let row: f64 = (0..ny).map(|y| t.joint(x, y)).sum();
                prop_assert!((row - px[x]).abs() < 1e-12);
                for y in 0..ny { prop_assert!(t.joint(x, y) >= 0.0); }
            }
            for y in 0..ny {
                let col: f64 = (0..nx).map(|x| t.joint(x, y)).sum();
                prop_assert!((col - q[y]).abs() < 1e-12);
            }
        }
    }
}
