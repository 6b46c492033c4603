use smallvec::SmallVec;

use crate::error::{Error, Result};

use super::{Channel, InputDistribution, Marginal, NORM_TOL};

pub(crate) type Small = SmallVec<[f64; 16]>;

/// Joint type `Q = P_X × Q_{Y|X}`.
///
/// The input marginal is always the ensemble's `P_X`, so only the kernel is
/// free. The joint masses and the output marginal are derived once at
/// construction; values are never mutated afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct JointType {
    nx: usize,
    ny: usize,
    px: SmallVec<[f64; 4]>,
    kernel: Small,
    joint: Small,
    marginal: SmallVec<[f64; 4]>,
}

impl JointType {
    /// Build from kernel rows `Q(.|x)`, each summing to one.
    pub fn from_kernel(px: &InputDistribution, kernel: &[Vec<f64>]) -> Result<Self> {
        if kernel.len() != px.len() {
            return Err(Error::DimensionMismatch(format!(
                "kernel has {} rows, input distribution has {} symbols",
                kernel.len(),
                px.len()
            )));
        }
        let ny = kernel.first().map_or(0, Vec::len);
        if ny == 0 {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        let mut flat = Small::new();
        for (x, row) in kernel.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::DimensionMismatch(format!("kernel row {x} has {} entries", row.len())));
            }
            for &v in row {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidProbability { what: format!("kernel row {x}"), value: v });
                }
            }
            let s: f64 = crate::numeric::sum_compensated(row.iter().copied());
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized { what: format!("kernel row {x}"), sum: s, tol: NORM_TOL });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self::from_kernel_flat(px.probs(), flat, ny))
    }

    pub(crate) fn from_kernel_flat(px: &[f64], kernel: Small, ny: usize) -> Self {
        let nx = px.len();
        let mut joint = Small::with_capacity(nx * ny);
        let mut marginal: SmallVec<[f64; 4]> = SmallVec::from_elem(0.0, ny);
        for x in 0..nx {
            for y in 0..ny {
                let j = px[x] * kernel[x * ny + y];
                joint.push(j);
                marginal[y] += j;
            }
        }
        Self { nx, ny, px: SmallVec::from_slice(px), kernel, joint, marginal }
    }

    /// Build from joint masses whose row sums are `px` (up to rounding) and
    /// whose column sums are `marginal`. Rows with `P_X(x) = 0` get the
    /// marginal as their kernel.
    pub(crate) fn from_joint_parts(px: &[f64], joint: Small, marginal: &[f64], ny: usize) -> Self {
        let nx = px.len();
        let mut kernel = Small::with_capacity(nx * ny);
        for x in 0..nx {
            if px[x] > 0.0 {
                for y in 0..ny {
                    kernel.push((joint[x * ny + y] / px[x]).clamp(0.0, 1.0));
                }
            } else {
                kernel.extend_from_slice(marginal);
            }
        }
        Self {
            nx,
            ny,
            px: SmallVec::from_slice(px),
            kernel,
            joint,
            marginal: SmallVec::from_slice(marginal),
        }
    }

    /// The product type `P_X × Q_Y` (every kernel row equals `qy`).
    pub fn product(px: &InputDistribution, qy: &Marginal) -> Self {
        let ny = qy.len();
        let mut kernel = Small::new();
        for _ in 0..px.len() {
            kernel.extend_from_slice(qy.probs());
        }
        Self::from_kernel_flat(px.probs(), kernel, ny)
    }

    /// `P_X × W`.
    pub fn channel_joint(px: &InputDistribution, ch: &Channel) -> Result<Self> {
        if px.len() != ch.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "input distribution has {} symbols, channel has {} inputs",
                px.len(),
                ch.input_size()
            )));
        }
        Ok(Self::from_kernel_flat(px.probs(), ch.rows().concat().into(), ch.output_size()))
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn output_size(&self) -> usize {
        self.ny
    }

    /// `Q_{Y|X}(y|x)`.
    #[inline]
    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        self.kernel[x * self.ny + y]
    }

    /// `Q(x, y) = P_X(x) Q_{Y|X}(y|x)`.
    #[inline]
    pub fn joint(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.ny + y]
    }

    #[inline]
    pub fn input_prob(&self, x: usize) -> f64 {
        self.px[x]
    }

    pub fn input_probs(&self) -> &[f64] {
        &self.px
    }

    pub fn kernel_flat(&self) -> &[f64] {
        &self.kernel
    }

    pub fn joint_flat(&self) -> &[f64] {
        &self.joint
    }

    pub fn kernel_rows(&self) -> Vec<Vec<f64>> {
        self.kernel.chunks(self.ny).map(<[f64]>::to_vec).collect()
    }

    /// Output marginal `Q_Y` as raw probabilities.
    pub fn marginal_probs(&self) -> &[f64] {
        &self.marginal
    }

    pub fn marginal(&self) -> Marginal {
        Marginal::from_raw(self.marginal.to_vec())
    }

    /// Largest absolute kernel difference; `+inf` on shape mismatch.
    pub fn kernel_distance(&self, other: &JointType) -> f64 {
        if self.nx != other.nx || self.ny != other.ny {
            return f64::INFINITY;
        }
        self.kernel.iter().zip(&other.kernel).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Convex combination `α·self + (1-α)·other` of two types with the same
    /// input distribution.
    pub fn mix(&self, other: &JointType, alpha: f64) -> Result<JointType> {
        if self.nx != other.nx || self.ny != other.ny || self.px != other.px {
            return Err(Error::DimensionMismatch("mixing joint types of different shape".into()));
        }
        let kernel: Small =
            self.kernel.iter().zip(&other.kernel).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        Ok(Self::from_kernel_flat(&self.px, kernel, self.ny))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_is_consistent() {
        let px = InputDistribution::new(vec![0.3, 0.7]).unwrap();
        let q = JointType::from_kernel(&px, &[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert!((q.marginal_probs()[0] - (0.27 + 0.14)).abs() < 1e-15);
        assert!((q.joint(1, 1) - 0.56).abs() < 1e-15);
        let s: f64 = q.marginal_probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_kernels() {
        let px = InputDistribution::uniform(2).unwrap();
        assert!(JointType::from_kernel(&px, &[vec![0.5, 0.5]]).is_err());
        assert!(JointType::from_kernel(&px, &[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn product_rows_equal_marginal() {
        let px = InputDistribution::uniform(3).unwrap();
        let qy = Marginal::new(vec![0.2, 0.8]).unwrap();
        let q = JointType::product(&px, &qy);
        for x in 0..3 {
            assert_eq!(q.kernel(x, 1), 0.8);
        }
        assert!((q.marginal_probs()[1] - 0.8).abs() < 1e-15);
    }
}
