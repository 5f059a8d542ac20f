//! Dense interior-point solver for the two convex problem shapes a
//! beamforming optimizer typically emits: QCQPs with convex quadratic
//! constraints, and small SDPs with linear equalities and PSD blocks.
//!
//! Complex problems are handled by the caller through re/im stacking; the
//! [`HermitianLmiBuilder`] helps with the PSD blocks.
//!
//! The method is a primal log-barrier path follower with a phase-I
//! feasibility search. Problems stay small (a few hundred variables), so
//! every Newton system is solved densely.

mod error;
mod lmi;
mod problem;
mod solver;

pub use error::ProblemError;
pub use lmi::{hermitian_from_embedding, HermitianLmiBuilder, LmiBuilder};
pub use problem::{min_eigenvalue, ConicProblem, LinearEq, LinearIneq, LinearRow, Lmi, QuadForm, QuadraticFn};
pub use solver::{solve, solve_from, ConicSolution, Settings, Status};
