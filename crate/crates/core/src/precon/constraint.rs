//! Dense spectral check of constraint preconditioning on small meshes.
//!
//! With unknowns reordered to `(J, A | φ, r)`,
//!
//! ```text
//! Ã = | Z  Nᵀ |   P̃ = | Z̃  Nᵀ |   Z = | M  K |   Z̃ = | M  K   |   N = | G  0 |
//!     | N  0  |       | N  0  |       | X  F |       | 0  F_w |       | 0  B |
//! ```
//!
//! `P̃⁻¹Ã` has the eigenvalue 1 with multiplicity `2 N_L`, and its other
//! `N_F − N_L` eigenvalues are those of `(VᵀZ̃V)⁻¹ VᵀZV` where the columns of
//! `V` are an orthonormal basis of `ker N`.
//!
//! The unit eigenvalue is defective, so a dense QR of `P̃⁻¹Ã` resolves
//! eigenvalues near 1 only to about the cube root of machine precision. The
//! spectrum used for matching comes instead from `Ã − P̃ = U Cᵀ`, supported on
//! a few rows: `spec(P̃⁻¹Ã) = {1}^(N−k) ∪ (1 + spec(Cᵀ P̃⁻¹ U))` with `k` the
//! number of nonzero rows.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::assembly::BlockSystem;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Largest dense dimension accepted by default.
pub const DEFAULT_DENSE_CAP: usize = 2000;

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub a_tilde: DMatrix<f64>,
    pub p_tilde: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub z_tilde: DMatrix<f64>,
    pub n: DMatrix<f64>,
    /// `perm[k]` is the `(J, φ, A, r)` index of row/column `k` of `Ã`.
    pub perm: Vec<usize>,
    pub n_f: usize,
    pub n_l: usize,
}

/// Builds `Ã` and `P̃` densely from an assembled system.
pub fn build_constraint_preconditioner_dense(sys: &BlockSystem, cap: usize) -> Result<ConstraintSystem> {
    let [nj, nphi, na, nr] = sys.sizes;
    let (n_f, n_l) = (nj + na, nphi + nr);
    if n_f + n_l > cap {
        return Err(Error::TooLargeForDense { size: n_f + n_l, cap });
    }
    let zero = |r: usize, c: usize| CsrMatrix::zeros(r, c);
    let z_ja = zero(na, nj);
    let z = CsrMatrix::from_blocks(&[vec![Some(&sys.m), Some(&sys.k)], vec![Some(&sys.x), Some(&sys.f)]])?;
    let z_tilde = CsrMatrix::from_blocks(&[vec![Some(&sys.m), Some(&sys.k)], vec![Some(&z_ja), Some(&sys.fw)]])?;
    let n = CsrMatrix::from_blocks(&[vec![Some(&sys.g), Some(&zero(nphi, na))], vec![Some(&zero(nr, nj)), Some(&sys.b)]])?;
    let (z, z_tilde, n) = (z.to_dense(), z_tilde.to_dense(), n.to_dense());

    let saddle = |top: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(n_f + n_l, n_f + n_l);
        m.view_mut((0, 0), (n_f, n_f)).copy_from(top);
        m.view_mut((0, n_f), (n_f, n_l)).copy_from(&n.transpose());
        m.view_mut((n_f, 0), (n_l, n_f)).copy_from(&n);
        m
    };
    let o = sys.offsets();
    let perm: Vec<usize> = (o[0]..o[1]).chain(o[2]..o[3]).chain(o[1]..o[2]).chain(o[3]..o[4]).collect();
    Ok(ConstraintSystem { a_tilde: saddle(&z), p_tilde: saddle(&z_tilde), z, z_tilde, n, perm, n_f, n_l })
}

impl ConstraintSystem {
    /// Replaces `Z̃` by `Z`, so that `P̃ = Ã`.
    pub fn with_exact_block(mut self) -> Self {
        self.z_tilde = self.z.clone();
        self.p_tilde = self.a_tilde.clone();
        self
    }

    /// `Ã` permuted back to `(J, φ, A, r)` order.
    pub fn a_original_order(&self) -> DMatrix<f64> {
        let n = self.perm.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, &pi) in self.perm.iter().enumerate() {
            for (j, &pj) in self.perm.iter().enumerate() {
                out[(pi, pj)] = self.a_tilde[(i, j)];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub n_f: usize,
    pub n_l: usize,
    pub rank_n: usize,
    /// Eigenvalues of `P̃⁻¹Ã` within the tolerance of 1.
    pub unit_count: usize,
    /// `max |N V|`.
    pub null_space_residual: f64,
    /// Largest distance in the matching of the low-rank spectrum of `P̃⁻¹Ã`
    /// against `{1}^(2 N_L) ∪ spec(S)`.
    pub match_error: f64,
    /// The same matching with the dense QR spectrum, for information.
    pub qr_match_error: f64,
    pub tolerance: f64,
    /// Dense QR spectrum of `P̃⁻¹Ã`.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Spectrum of `P̃⁻¹Ã` from the low-rank form.
    pub low_rank_eigenvalues: Vec<Complex<f64>>,
    pub s_eigenvalues: Vec<Complex<f64>>,
}

impl SpectrumReport {
    pub fn multiplicity_ok(&self) -> bool {
        self.unit_count >= 2 * self.n_l
    }

    pub fn spectrum_matches(&self) -> bool {
        self.match_error <= self.tolerance
    }
}

/// Dense nonsymmetric eigenvalues, computed by faer's Hessenberg QR.
fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let ev = fm.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(ev.iter().map(|z| Complex::new(z.re, z.im)).collect())
}

/// Greedy nearest-neighbour matching; returns the worst pair distance.
/// Values farthest from 1 are matched first, so the unit cluster, whose
/// members are interchangeable, is matched last.
fn match_multisets(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let one = Complex::new(1.0, 0.0);
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| (a[j] - one).norm().partial_cmp(&(a[i] - one).norm()).unwrap());
    for i in order {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, z)| (k, (z - a[i]).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .expect("same length");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// `1 + spec(Cᵀ P̃⁻¹ U)` padded with ones, where `U Cᵀ = Ã − P̃`.
fn low_rank_spectrum(cs: &ConstraintSystem) -> Result<Vec<Complex<f64>>> {
    let e = &cs.a_tilde - &cs.p_tilde;
    let n = e.nrows();
    let rows: Vec<usize> = (0..n).filter(|&i| e.row(i).amax() > 0.0).collect();
    let one = Complex::new(1.0, 0.0);
    let mut out = vec![one; n - rows.len()];
    if rows.is_empty() {
        return Ok(out);
    }
    let u = DMatrix::from_fn(n, rows.len(), |i, k| if i == rows[k] { 1.0 } else { 0.0 });
    let ct = DMatrix::from_fn(rows.len(), n, |k, j| e[(rows[k], j)]);
    let pu = cs.p_tilde.clone().lu().solve(&u).ok_or(Error::SingularMatrix { pivot: None })?;
    out.extend(eigenvalues(ct * pu)?.into_iter().map(|z| z + one));
    Ok(out)
}

pub fn verify_unit_eigenvalue_multiplicity(cs: &ConstraintSystem, tol: f64) -> Result<SpectrumReport> {
    let (n_f, n_l) = (cs.n_f, cs.n_l);

    let nt_n = cs.n.transpose() * &cs.n;
    let eig = SymmetricEigen::new(nt_n);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-10 * max;
    let rank_n = eig.eigenvalues.iter().filter(|&&v| v > cut).count();
    if rank_n != n_l {
        return Err(Error::Eigen(format!("constraint matrix has rank {rank_n}, expected full row rank {n_l}")));
    }
    let null_cols: Vec<usize> = (0..n_f).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    let v = DMatrix::from_fn(n_f, null_cols.len(), |i, j| eig.eigenvectors[(i, null_cols[j])]);
    let null_space_residual = (&cs.n * &v).amax();

    let vz = v.transpose() * &cs.z * &v;
    let vzt = v.transpose() * &cs.z_tilde * &v;
    let s = vzt.lu().solve(&vz).ok_or(Error::SingularMatrix { pivot: None })?;
    let s_eigenvalues = eigenvalues(s)?;

    let pa = cs.p_tilde.clone().lu().solve(&cs.a_tilde).ok_or(Error::SingularMatrix { pivot: None })?;
    let eigenvalues = eigenvalues(pa)?;

    let low_rank_eigenvalues = low_rank_spectrum(cs)?;

    let one = Complex::new(1.0, 0.0);
    let unit_count = eigenvalues.iter().filter(|z| (*z - one).norm() <= tol).count();
    let mut predicted = vec![one; 2 * n_l];
    predicted.extend_from_slice(&s_eigenvalues);
    if predicted.len() != eigenvalues.len() {
        return Err(Error::DimensionMismatch { expected: eigenvalues.len(), got: predicted.len() });
    }
    let match_error = match_multisets(&low_rank_eigenvalues, &predicted);
    let qr_match_error = match_multisets(&eigenvalues, &predicted);

    Ok(SpectrumReport {
        n_f,
        n_l,
        rank_n,
        unit_count,
        null_space_residual,
        match_error,
        qr_match_error,
        tolerance: tol,
        eigenvalues,
        low_rank_eigenvalues,
        s_eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::assembly::benchmark_case_example2;
    use crate::fe::Spaces;
    use crate::mesh::TetMesh;

    fn coarse() -> BlockSystem {
        let s = Spaces::new(Arc::new(TetMesh::unit_cube(0).unwrap()));
        BlockSystem::assemble(&s, &benchmark_case_example2(50.0)).unwrap()
    }

    #[test]
    fn layout_and_permutation() {
        let sys = coarse();
        let cs = build_constraint_preconditioner_dense(&sys, DEFAULT_DENSE_CAP).unwrap();
        let lower = cs.a_tilde.view((cs.n_f, cs.n_f), (cs.n_l, cs.n_l));
        assert!(lower.iter().all(|&v| v == 0.0));
        let diff = cs.a_original_order() - sys.full_matrix().to_dense();
        assert!(diff.amax() <= 1e-12);
        assert_eq!(cs.n.rank(1e-10), cs.n_l);
    }

    #[test]
    fn size_cap_is_enforced() {
        let sys = coarse();
        assert!(matches!(build_constraint_preconditioner_dense(&sys, 100), Err(Error::TooLargeForDense { .. })));
    }

    #[test]
    fn exact_block_gives_unit_spectrum() {
        let sys = coarse();
        let cs = build_constraint_preconditioner_dense(&sys, DEFAULT_DENSE_CAP).unwrap().with_exact_block();
        let rep = verify_unit_eigenvalue_multiplicity(&cs, 1e-8).unwrap();
        assert_eq!(rep.unit_count, cs.n_f + cs.n_l);
        assert!(rep.null_space_residual <= 1e-10);
        assert!(rep.spectrum_matches(), "{}", rep.match_error);
    }

    #[test]
    fn low_rank_and_qr_spectra_agree_away_from_one() {
        let sys = coarse();
        let cs = build_constraint_preconditioner_dense(&sys, DEFAULT_DENSE_CAP).unwrap();
        let qr = eigenvalues(cs.p_tilde.clone().lu().solve(&cs.a_tilde).unwrap()).unwrap();
        let lr = low_rank_spectrum(&cs).unwrap();
        let one = Complex::new(1.0, 0.0);
        let far = |v: &[Complex<f64>]| v.iter().filter(|z| (*z - one).norm() > 1e-3).count();
        assert_eq!(far(&qr), far(&lr));
        assert!(far(&lr) > 0);
        assert!(match_multisets(&qr, &lr) <= 1e-3);
    }

    #[test]
    fn greedy_matching_of_multisets() {
        let c = |r: f64| Complex::new(r, 0.0);
        assert_eq!(match_multisets(&[c(1.0), c(2.0)], &[c(2.0), c(1.0)]), 0.0);
        assert!((match_multisets(&[c(1.0), c(1.0)], &[c(1.0), c(3.0)]) - 2.0).abs() < 1e-15);
        assert_eq!(match_multisets(&[c(1.0), c(5.0), c(1.0)], &[c(1.0), c(1.0), c(5.0)]), 0.0);
    }
}
