//! Numerical lab for the supercritical Fujita equation `u_t = Δu + u^p`
//! restricted to radial solutions.

// `!(x > y)` is the NaN-rejecting guard throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod odecore;
pub mod output;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod specfun;
pub mod spectrum;
pub mod steady;
pub mod zeronum;

pub use dynamics::{BlowupReport, BlowupType, EvolutionState, Grid, LimitVerdict};
pub use error::{Error, Result};
pub use odecore::{Frame, RadialIvp, RadialSolution, Termination};
pub use params::{ExponentTable, ExtReal, ProblemParams, Regime};
pub use profile::{RadialFn, RadialProfile};
pub use spectrum::SpectralFrame;
pub use steady::{SteadyKind, SteadyState};
pub use zeronum::ZeroCount;
