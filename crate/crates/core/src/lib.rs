//! Resolvent of fractional operator powers, `(I + h L^alpha)^{-1} b`, computed
//! with Gauss-Laguerre quadrature applied to a two-integral representation.
//!
//! The crate is organised bottom-up:
//!
//! * [`laguerre`]: Gauss-Laguerre rules and tail truncation indices.
//! * [`integrands`]: problem parameters, the two integrand families and the
//!   exact scalar resolvent.
//! * [`estimates`]: a-priori scalar and operator error estimates.
//! * [`planner`]: balancing of the two rule sizes, truncation thresholds and
//!   the combined node budget ([`planner::Plan`]).
//! * [`apply`]: mapping nodes to shifted solves and applying the method to an
//!   operator.
//! * [`oracle`]: independent references (exact diagonal resolvent, adaptive
//!   quadrature of the integral representation, error sweeps).
//! * [`io`]: plain-text readers and writers for matrices and vectors.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apply;
pub mod error;
pub mod estimates;
pub mod integrands;
pub mod io;
pub mod laguerre;
pub mod oracle;
pub mod planner;

pub use apply::{apply_resolvent, scalar_approx, Mode, OperatorHandle, ShiftedSolver};
pub use error::{Error, Result};
pub use integrands::Params;
pub use laguerre::{gauss_laguerre, QuadratureRule};
pub use planner::{make_plan, Plan};
