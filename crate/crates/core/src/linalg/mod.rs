//! Sparse matrices, Krylov solvers and a direct solver.

pub mod csr;
pub mod direct;
pub mod krylov;
pub mod mmio;

pub use csr::CsrMatrix;
pub use direct::{direct_solve, is_spd, SparseLu};
pub use krylov::{
    cg, fgmres, gmres, IdentityPreconditioner, Jacobi, KrylovConfig, KrylovOutcome, LinearOperator, Preconditioner,
};
