//! Weakly equilibrium Cantor sets `K(γ)` and Widom factors on them.
//!
//! The crate builds the nested approximants `E_s` of `K(γ)` from a parameter
//! sequence `γ`, evaluates the associated Chebyshev and residual polynomials,
//! and computes capacities, Green functions and Harnack distances together
//! with certified brackets. On top of that it evaluates the three Widom-factor
//! families (sup-norm, `L²` with respect to the equilibrium measure, residual)
//! at dyadic degrees and checks the lower bounds they satisfy when `γ` is
//! derived from a regular subexponential sequence.
//!
//! Every magnitude that can leave the `f64` range lives in [`LogScalar`].

pub mod cantor;
pub mod error;
pub mod expr;
pub mod invariants;
pub mod numerics;
pub mod oracle;
pub mod potential;
pub mod sequences;
pub mod widom;

pub use cantor::{CantorModel, Gamma, GapLocation, Level, TailCertificate};
pub use error::{Error, Result};
pub use expr::ExactReal;
pub use numerics::{LogScalar, PrecisionPolicy, Sign};
pub use sequences::{RegularizedSequence, SequenceSpec};
