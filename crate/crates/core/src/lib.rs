//! Exact random-coding error and list-size exponents for erasure/list
//! decoders on discrete memoryless channels, for the optimal likelihood-ratio
//! decoder and three simplified threshold families, together with optimal
//! threshold synthesis and a finite-blocklength simulator to cross-check them.
//!
//! Layout:
//!
//! * [`typespace`]: channels, joint types and the functionals `f`, `I`, `D`;
//! * [`optimizer`]: constrained minimization over joint types and coupled
//!   pairs sharing an output marginal;
//! * [`exponents`]: the single-letter exponent formulas;
//! * [`thresholds`]: optimal thresholds and critical rates;
//! * [`simulator`]: random codebooks, decoders, exact and Monte Carlo
//!   ensemble averages;
//! * [`protocol`]: the rate sweep that compares all decoder families at a
//!   matched error exponent.

pub mod error;
pub mod exponents;
pub mod numeric;
pub mod optimizer;
pub mod protocol;
pub mod simulator;
pub mod thresholds;
pub mod typespace;

pub use error::{Error, Result};
pub use typespace::{Channel, InputDistribution, JointType, Marginal, Model, Nats};
