//! Alphabets, channels, distributions and joint types, plus the three scalar
//! functionals every exponent is assembled from:
//!
//! * `f(Q) = Σ Q(x,y) ln W(y|x)`, the normalized log-likelihood,
//! * `D(Q_{Y|X} || W | P_X)`, the conditional divergence,
//! * `I(Q)`, the mutual information of the joint type.
//!
//! All logarithms are natural, so every quantity is in nats.

mod channel;
mod functionals;
mod joint;
mod model;
mod nats;

pub use channel::{Alphabet, Channel, InputDistribution, Marginal};
pub use functionals::{cond_divergence, empirical_joint, f_functional, mutual_information, EmpiricalJoint};
pub use nats::{format_value, parse_value};
pub use joint::JointType;
pub use model::{set_mismatch, Evals, Model};
pub use nats::Nats;

/// Row-sum and normalization tolerance for user-supplied distributions.
pub const NORM_TOL: f64 = 1e-12;
