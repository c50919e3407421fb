//! Sparse LU factorization, backed by faer.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::{LltError, LuError};
use faer::sparse::{SparseColMat, Triplet};

use super::csr::CsrMatrix;
use super::krylov::{norm, Preconditioner};
use crate::{Error, Result};

/// Refinement steps applied after each triangular solve.
const REFINEMENT_STEPS: usize = 2;

/// Factorized square sparse matrix.
pub struct SparseLu {
    matrix: CsrMatrix,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, got: m });
        }
        if let Some((i, _, _)) = a.triplets().find(|t| !t.2.is_finite()) {
            return Err(Error::SingularMatrix { pivot: Some(i) });
        }
        // An empty row makes the matrix structurally singular.
        if let Some(i) = (0..n).find(|&i| a.row(i).1.iter().all(|&v| v == 0.0)) {
            return Err(Error::SingularMatrix { pivot: Some(i) });
        }
        let lu = to_faer(a)?
            .sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularMatrix { pivot: Some(index) },
            LuError::Generic(_) => Error::SingularMatrix { pivot: None },
        })?;
        Ok(Self { matrix: a.clone(), lu })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    /// Solves `A x = b` with a few steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let mut x = self.raw_solve(b);
        let mut r = vec![0.0; b.len()];
        for _ in 0..REFINEMENT_STEPS {
            self.matrix.mul_vec_into(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            if norm(&r) <= 1e-15 * norm(b) {
                break;
            }
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { pivot: Some(i) });
        }
        Ok(x)
    }
}

fn to_faer(a: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let triplets: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
        .map_err(|e| Error::InvalidMesh(format!("sparse matrix construction failed: {e:?}")))
}

/// Symmetric to relative tolerance `sym_tol` and admits a sparse Cholesky
/// factorization with positive pivots.
pub fn is_spd(a: &CsrMatrix, sym_tol: f64) -> Result<bool> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::DimensionMismatch { expected: n, got: m });
    }
    if a.asymmetry() > sym_tol || a.triplets().any(|t| !t.2.is_finite()) {
        return Ok(false);
    }
    match to_faer(a)?.sp_cholesky(faer::Side::Lower) {
        Ok(_) => Ok(true),
        Err(LltError::Numeric(_)) => Ok(false),
        Err(LltError::Generic(e)) => Err(Error::Factorization(format!("{e:?}"))),
    }
}

/// One-shot factor and solve.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::new(a)?.solve(b)
}

impl Preconditioner for SparseLu {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(&self.solve(r)?);
        Ok(())
    }
}
