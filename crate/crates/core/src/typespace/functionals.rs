use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

use super::{Channel, InputDistribution, JointType, Nats};

fn check_dims(q: &JointType, w: &Channel) -> Result<()> {
    if q.input_size() != w.input_size() || q.output_size() != w.output_size() {
        return Err(Error::DimensionMismatch(format!(
            "joint type is {}x{}, channel is {}x{}",
            q.input_size(),
            q.output_size(),
            w.input_size(),
            w.output_size()
        )));
    }
    Ok(())
}

/// `Σ Q(x,y) ln W(y|x)`; `-inf` when `Q` charges a zero of `W`.
#[inline]
pub(crate) fn f_raw(q: &JointType, w: &Channel) -> f64 {
    let logs = w.logs();
    let mut acc = CompensatedSum::new();
    for (j, &l) in q.joint_flat().iter().zip(logs) {
        if *j > 0.0 {
            if l == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc.add(j * l);
        }
    }
    acc.value()
}

/// Returns `(D(Q_{Y|X}||W|P_X), I(Q))` sharing the `ln Q_{Y|X}` terms.
#[inline]
pub(crate) fn d_and_i_raw(q: &JointType, w: &Channel) -> (f64, f64) {
    let ny = q.output_size();
    let logs = w.logs();
    let mq = q.marginal_probs();
    let mut d = CompensatedSum::new();
    let mut i = CompensatedSum::new();
    let mut d_inf = false;
    for (idx, (&j, &k)) in q.joint_flat().iter().zip(q.kernel_flat()).enumerate() {
        if j <= 0.0 {
            continue;
        }
        let lk = k.ln();
        let lw = logs[idx];
        if lw == f64::NEG_INFINITY {
            d_inf = true;
        } else {
            d.add(j * (lk - lw));
        }
        i.add(j * (lk - mq[idx % ny].ln()));
    }
    let dv = if d_inf { f64::INFINITY } else { d.value().max(0.0) };
    (dv, i.value().max(0.0))
}

#[inline]
pub(crate) fn i_raw(q: &JointType) -> f64 {
    let ny = q.output_size();
    let mq = q.marginal_probs();
    let mut i = CompensatedSum::new();
    for (idx, (&j, &k)) in q.joint_flat().iter().zip(q.kernel_flat()).enumerate() {
        if j > 0.0 {
            i.add(j * (k.ln() - mq[idx % ny].ln()));
        }
    }
    i.value().max(0.0)
}

/// Normalized log-likelihood `f(Q) = Σ Q(x,y) ln W(y|x)`.
///
/// Passing a decoder metric channel instead of the true channel gives the
/// mismatched metric.
pub fn f_functional(q: &JointType, w: &Channel) -> Result<Nats> {
    check_dims(q, w)?;
    Ok(Nats(f_raw(q, w)))
}

/// Conditional divergence `D(Q_{Y|X} || W | P_X)`.
pub fn cond_divergence(q: &JointType, w: &Channel) -> Result<Nats> {
    check_dims(q, w)?;
    Ok(Nats(d_and_i_raw(q, w).0))
}

/// Mutual information `I(Q)` of the joint type.
pub fn mutual_information(q: &JointType) -> Nats {
    Nats(i_raw(q))
}

/// Joint symbol counts of a pair of sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalJoint {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    /// Row-major `nx × ny` counts.
    pub counts: Vec<usize>,
}

impl EmpiricalJoint {
    pub fn count(&self, x: usize, y: usize) -> usize {
        self.counts[x * self.ny + y]
    }

    pub fn freq(&self, x: usize, y: usize) -> f64 {
        self.count(x, y) as f64 / self.n as f64
    }

    /// Composition of the first sequence.
    pub fn input_composition(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.count(x, y)).sum::<usize>() as f64 / self.n as f64)
            .collect()
    }

    /// Relative frequencies as a joint type whose input distribution is the
    /// composition of the first sequence.
    pub fn to_joint_type(&self) -> JointType {
        let px = self.input_composition();
        let joint: super::joint::Small = self.counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        let mut marg = vec![0.0; self.ny];
        for x in 0..self.nx {
            for (y, m) in marg.iter_mut().enumerate() {
                *m += self.count(x, y) as f64;
            }
        }
        let marg: Vec<f64> = marg.into_iter().map(|c| c / self.n as f64).collect();
        JointType::from_joint_parts(&px, joint, &marg, self.ny)
    }

    /// Same counts, but over the given input distribution (which must match
    /// the composition for the masses to be consistent).
    pub fn with_input(&self, px: &InputDistribution) -> JointType {
        let joint: super::joint::Small = self.counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        let mut marg = vec![0.0; self.ny];
        for x in 0..self.nx {
            for (y, m) in marg.iter_mut().enumerate() {
                *m += self.freq(x, y);
            }
        }
        JointType::from_joint_parts(px.probs(), joint, &marg, self.ny)
    }
}

/// Count the joint occurrences of `(x_i, y_i)`.
pub fn empirical_joint(x_seq: &[usize], y_seq: &[usize], nx: usize, ny: usize) -> Result<EmpiricalJoint> {
    if x_seq.len() != y_seq.len() {
        return Err(Error::LengthMismatch(x_seq.len(), y_seq.len()));
    }
    if x_seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0usize; nx * ny];
    for (&x, &y) in x_seq.iter().zip(y_seq) {
        if x >= nx {
            return Err(Error::SymbolOutOfRange { symbol: x, size: nx });
        }
        if y >= ny {
            return Err(Error::SymbolOutOfRange { symbol: y, size: ny });
        }
        counts[x * ny + y] += 1;
    }
    Ok(EmpiricalJoint { n: x_seq.len(), nx, ny, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_nats(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn f_of_bsc_is_minus_binary_entropy() {
        let px = InputDistribution::uniform(2).unwrap();
        let w = Channel::bsc(0.01).unwrap();
        let q = JointType::channel_joint(&px, &w).unwrap();
        let f = f_functional(&q, &w).unwrap().0;
        assert!((f + h_nats(0.01)).abs() < 1e-15);
        assert!((f + 0.0560015).abs() < 1e-7);
    }

    #[test]
    fn f_noiseless_and_support_violation() {
        let px = InputDistribution::uniform(2).unwrap();
        let w = Channel::identity(2).unwrap();
        let q = JointType::channel_joint(&px, &w).unwrap();
        assert_eq!(f_functional(&q, &w).unwrap().0, 0.0);
        let q = JointType::from_kernel(&px, &[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f_functional(&q, &w).unwrap().0, f64::NEG_INFINITY);
    }

    #[test]
    fn divergence_examples() {
        let px = InputDistribution::uniform(2).unwrap();
        let w = Channel::bsc(0.01).unwrap();
        let same = JointType::channel_joint(&px, &w).unwrap();
        assert!(cond_divergence(&same, &w).unwrap().0.abs() < 1e-15);
        let q = JointType::channel_joint(&px, &Channel::bsc(0.1).unwrap()).unwrap();
        let d = cond_divergence(&q, &w).unwrap().0;
        let closed = 0.1 * (0.1f64 / 0.01).ln() + 0.9 * (0.9f64 / 0.99).ln();
        assert!((d - closed).abs() < 1e-14);
        assert!((d - 0.1444793).abs() < 1e-7);
        let id = Channel::identity(2).unwrap();
        assert_eq!(cond_divergence(&q, &id).unwrap().0, f64::INFINITY);
    }

    #[test]
    fn mutual_information_examples() {
        let px = InputDistribution::uniform(2).unwrap();
        let q = JointType::channel_joint(&px, &Channel::bsc(0.01).unwrap()).unwrap();
        let i = mutual_information(&q).0;
        assert!((i - (2f64.ln() - h_nats(0.01))).abs() < 1e-14);
        assert!((i - 0.637146).abs() < 1e-6);
        let id = JointType::channel_joint(&px, &Channel::identity(2).unwrap()).unwrap();
        assert!((mutual_information(&id).0 - 2f64.ln()).abs() < 1e-15);
        let prod = JointType::from_kernel(&px, &[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(mutual_information(&prod).0.abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let px = InputDistribution::uniform(2).unwrap();
        let q = JointType::channel_joint(&px, &Channel::w1()).unwrap();
        let w3 = Channel::identity(3).unwrap();
        assert!(matches!(f_functional(&q, &w3), Err(Error::DimensionMismatch(_))));
        assert!(matches!(cond_divergence(&q, &w3), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn empirical_examples() {
        let e = empirical_joint(&[0, 0, 1, 1], &[0, 1, 0, 1], 2, 2).unwrap();
        assert!(e.counts.iter().all(|&c| c == 1));
        let e = empirical_joint(&[0, 0, 0, 0], &[0, 0, 0, 0], 2, 2).unwrap();
        assert_eq!(e.counts, vec![4, 0, 0, 0]);
        assert_eq!(e.to_joint_type().joint(0, 0), 1.0);
        let e = empirical_joint(&[0, 1, 0, 1], &[1, 1, 0, 0], 2, 2).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(e.freq(x, y), 0.25);
            }
        }
        assert_eq!(e.input_composition(), vec![0.5, 0.5]);
        assert!(matches!(empirical_joint(&[0], &[0, 1], 2, 2), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(empirical_joint(&[], &[], 2, 2), Err(Error::EmptySequence)));
        assert!(empirical_joint(&[2], &[0], 2, 2).is_err());
    }
}
