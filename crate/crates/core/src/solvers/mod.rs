//! Numerical building blocks: Hermitian eigensolver, conic interior-point
//! solver, closed-form ball problems and the fixed-diagonal PSD projection.

pub mod ball;
pub mod conic;
pub mod eig;
pub mod proj;

pub use conic::{
    solve_conic, ComplexVar, ConicProblem, ConicSolution, Constraint, Dual, HermVar, LinExpr,
    SolveStatus, SolverSettings,
};
pub use eig::{herm_eig, principal_eigvec, HermEig};
pub use proj::{project_fixed_diag_psd, FixedDiagProjection};
