//! Block upper-triangular preconditioner in field order `(J, φ, A, r)`:
//!
//! ```text
//!     | M̂   2Gᵀ  K    0   |
//! P = | 0   −Q̂   0    0   |
//!     | 0    0   F̂_w  2Bᵀ |
//!     | 0    0   0    −L  |
//! ```
//!
//! applied by back substitution from the last field to the first.

pub mod constraint;

use serde::{Deserialize, Serialize};

use crate::assembly::BlockSystem;
use crate::linalg::{cg, gmres, CsrMatrix, Jacobi, KrylovConfig, Preconditioner, SparseLu};
use crate::{Error, Result};

pub use constraint::{
    build_constraint_preconditioner_dense, verify_unit_eigenvalue_multiplicity, ConstraintSystem, SpectrumReport,
    DEFAULT_DENSE_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSolver {
    Direct,
    Krylov,
}

impl std::str::FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(InnerSolver::Direct),
            "krylov" => Ok(InnerSolver::Krylov),
            other => Err(Error::Config(format!("unknown inner solver {other:?}, expected direct or krylov"))),
        }
    }
}

/// Inner solver for each diagonal block. `Krylov` means CG+Jacobi for `L`
/// and `M̂`, GMRES+Jacobi for `F̂_w`, and a fixed number of Jacobi-CG steps
/// for `Q̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub l: InnerSolver,
    pub fw_hat: InnerSolver,
    pub q_hat: InnerSolver,
    pub m_hat: InnerSolver,
    /// Relative tolerance `ε₀` of the tolerance-driven inner solves.
    pub tol: f64,
    pub q_iterations: usize,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self::uniform(InnerSolver::Krylov)
    }
}

impl InnerConfig {
    pub fn uniform(kind: InnerSolver) -> Self {
        Self { l: kind, fw_hat: kind, q_hat: kind, m_hat: kind, tol: 1e-3, q_iterations: 5, max_iter: 5000 }
    }
}

enum Inner {
    Direct(SparseLu),
    Cg(Jacobi),
    Gmres(Jacobi),
    FixedCg(Jacobi, usize),
}

impl Inner {
    fn new(a: &CsrMatrix, kind: InnerSolver, krylov: fn(Jacobi) -> Inner) -> Result<Self> {
        Ok(match kind {
            InnerSolver::Direct => Inner::Direct(SparseLu::new(a)?),
            InnerSolver::Krylov => krylov(Jacobi::new(a)?),
        })
    }

    /// Solves `a x = b` and returns the inner iteration count.
    fn solve(&mut self, a: &CsrMatrix, b: &[f64], x: &mut [f64], cfg: &InnerConfig) -> Result<usize> {
        let tol_cfg = KrylovConfig { rel_tol: cfg.tol, max_iter: cfg.max_iter, ..KrylovConfig::default() };
        let out = match self {
            Inner::Direct(lu) => {
                x.copy_from_slice(&lu.solve(b)?);
                return Ok(1);
            }
            Inner::Cg(j) => cg(a, &mut *j, b, &tol_cfg)?.require_converged()?,
            Inner::Gmres(j) => gmres(a, &mut *j, b, &tol_cfg)?.require_converged()?,
            Inner::FixedCg(j, n) => cg(a, &mut *j, b, &KrylovConfig::fixed(*n))?,
        };
        x.copy_from_slice(&out.x);
        Ok(out.iterations)
    }
}

/// Cumulative inner iteration counts per step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerStats {
    pub applications: usize,
    /// Steps 1 to 4: `L`, `F̂_w`, `Q̂`, `M̂`.
    pub iterations: [usize; 4],
}

pub struct BlockPreconditioner<'a> {
    sys: &'a BlockSystem,
    cfg: InnerConfig,
    solvers: [Inner; 4],
    pub stats: InnerStats,
}

impl<'a> BlockPreconditioner<'a> {
    pub fn new(sys: &'a BlockSystem, cfg: InnerConfig) -> Result<Self> {
        if cfg.q_iterations == 0 || !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return Err(Error::Config(format!("inner tolerance must lie in (0, 1), got {}", cfg.tol)));
        }
        let step = |i: usize, r: Result<Inner>| r.map_err(|e| Error::InnerSolve { step: i, source: Box::new(e) });
        let q_iter = cfg.q_iterations;
        let solvers = [
            step(1, Inner::new(&sys.l, cfg.l, Inner::Cg))?,
            step(2, Inner::new(&sys.fw_hat, cfg.fw_hat, Inner::Gmres))?,
            step(
                3,
                match cfg.q_hat {
                    InnerSolver::Direct => SparseLu::new(&sys.q_hat).map(Inner::Direct),
                    InnerSolver::Krylov => Jacobi::new(&sys.q_hat).map(|j| Inner::FixedCg(j, q_iter)),
                },
            )?,
            step(4, Inner::new(&sys.m_hat, cfg.m_hat, Inner::Cg))?,
        ];
        Ok(Self { sys, cfg, solvers, stats: InnerStats::default() })
    }

    fn solve_step(&mut self, step: usize, b: &[f64], x: &mut [f64]) -> Result<()> {
        let a = match step {
            1 => &self.sys.l,
            2 => &self.sys.fw_hat,
            3 => &self.sys.q_hat,
            _ => &self.sys.m_hat,
        };
        let its = self.solvers[step - 1]
            .solve(a, b, x, &self.cfg)
            .map_err(|e| Error::InnerSolve { step, source: Box::new(e) })?;
        self.stats.iterations[step - 1] += its;
        Ok(())
    }

    /// The preconditioner as an explicit sparse matrix.
    pub fn explicit_matrix(sys: &BlockSystem) -> CsrMatrix {
        let gt2 = sys.gt.scaled(2.0);
        let bt2 = sys.bt.scaled(2.0);
        let q = sys.q_hat.scaled(-1.0);
        let l = sys.l.scaled(-1.0);
        CsrMatrix::from_blocks(&[
            vec![Some(&sys.m_hat), Some(&gt2), Some(&sys.k), None],
            vec![None, Some(&q), None, None],
            vec![None, None, Some(&sys.fw_hat), Some(&bt2)],
            vec![None, None, None, Some(&l)],
        ])
        .expect("block shapes are consistent by construction")
    }
}

impl Preconditioner for BlockPreconditioner<'_> {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let sys = self.sys;
        if r.len() != sys.dim() || z.len() != sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), got: r.len() });
        }
        let o = sys.offsets();
        let [r_j, r_phi, r_a, r_r] = sys.split(r);
        let (z_j, rest) = z.split_at_mut(o[1]);
        let (z_phi, rest) = rest.split_at_mut(o[2] - o[1]);
        let (z_a, z_r) = rest.split_at_mut(o[3] - o[2]);

        let neg: Vec<f64> = r_r.iter().map(|v| -v).collect();
        self.solve_step(1, &neg, z_r)?;

        let mut rhs_a = r_a.to_vec();
        sys.bt.mul_vec_add(-2.0, z_r, &mut rhs_a);
        self.solve_step(2, &rhs_a, z_a)?;

        let neg: Vec<f64> = r_phi.iter().map(|v| -v).collect();
        self.solve_step(3, &neg, z_phi)?;

        let mut rhs_j = r_j.to_vec();
        sys.gt.mul_vec_add(-2.0, z_phi, &mut rhs_j);
        sys.k.mul_vec_add(-1.0, z_a, &mut rhs_j);
        self.solve_step(4, &rhs_j, z_j)?;
        self.stats.applications += 1;
        Ok(())
    }
}
