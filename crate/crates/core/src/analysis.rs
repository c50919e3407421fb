//! Post-processing of discrete solutions: error norms, divergence,
//! helicity, multiplier size and convergence orders.

use serde::{Deserialize, Serialize};

use crate::assembly::{expand, BlockSystem, ExactSolution, PhysicsCase};
use crate::fe::{CellBasis, Spaces};
use crate::quadrature::{tet_rule, ERROR_DEGREE};
use crate::{Error, Point, Result, Vec3};

/// Discrete fields as full coefficient vectors on `V2, V3, V1, V0`, with
/// the boundary data of `A` on the constrained `V1` DOFs.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSolution {
    pub j: Vec<f64>,
    pub phi: Vec<f64>,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
}

impl FieldSolution {
    /// Un-reduces a concatenated solution of `sys`.
    pub fn from_reduced(spaces: &Spaces, sys: &BlockSystem, x: &[f64]) -> Result<Self> {
        if x.len() != sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), got: x.len() });
        }
        let [j, phi, a, r] = sys.split(x);
        Ok(Self {
            j: j.to_vec(),
            phi: phi.to_vec(),
            a: expand(&spaces.v1, a, Some(&sys.a_lift)),
            r: expand(&spaces.v0, r, None),
        })
    }

    /// Coefficientwise `self − other`.
    pub fn difference(&self, other: &FieldSolution) -> Result<FieldSolution> {
        let sub = |a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
            }
            Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
        };
        Ok(Self {
            j: sub(&self.j, &other.j)?,
            phi: sub(&self.phi, &other.phi)?,
            a: sub(&self.a, &other.a)?,
            r: sub(&self.r, &other.r)?,
        })
    }

    pub fn zeros(spaces: &Spaces) -> Self {
        Self {
            j: vec![0.0; spaces.v2.n_dofs()],
            phi: vec![0.0; spaces.v3.n_dofs()],
            a: vec![0.0; spaces.v1.n_dofs()],
            r: vec![0.0; spaces.v0.n_dofs()],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub j_l2: f64,
    pub j_hdiv: f64,
    pub phi_l2: f64,
    pub a_l2: f64,
    pub a_hcurl: f64,
}

/// Computes `Σ_cells Σ_points w |det| f(cell basis, reference point, x)`.
fn integrate(spaces: &Spaces, degree: usize, mut f: impl FnMut(usize, &CellBasis, &Vec3, &Point) -> f64) -> Result<f64> {
    let rule = tet_rule(degree);
    let mesh = &spaces.mesh;
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        let scale = cb.map.det.abs();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            total += w * scale * f(c, &cb, &Vec3::from(*p), &cb.map.to_physical(p));
        }
    }
    Ok(total)
}

pub fn error_norms(spaces: &Spaces, sol: &FieldSolution, exact: &ExactSolution) -> Result<ErrorNorms> {
    let rule = tet_rule(ERROR_DEGREE);
    let mesh = &spaces.mesh;
    let (mut j2, mut dj2, mut p2, mut a2, mut ca2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        let scale = cb.map.det.abs();
        let jf = spaces.v2.local_field(&cb, &sol.j, c);
        let af = spaces.v1.local_field(&cb, &sol.a, c);
        let phi_h = sol.phi[spaces.v3.local_dofs(c)[0]];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (xr, x) = (Vec3::from(*p), cb.map.to_physical(p));
            let ws = w * scale;
            j2 += ws * ((exact.j)(&x) - jf.eval(&xr)).norm_squared();
            dj2 += ws * ((exact.j_div)(&x) - jf.div).powi(2);
            p2 += ws * ((exact.phi)(&x) - phi_h).powi(2);
            a2 += ws * ((exact.a)(&x) - af.eval(&xr)).norm_squared();
            ca2 += ws * ((exact.a_curl)(&x) - af.curl).norm_squared();
        }
    }
    Ok(ErrorNorms { j_l2: j2.sqrt(), j_hdiv: (j2 + dj2).sqrt(), phi_l2: p2.sqrt(), a_l2: a2.sqrt(), a_hcurl: (a2 + ca2).sqrt() })
}

/// Norms of the discrete fields themselves, `r` included in `L²`.
pub fn field_norms(spaces: &Spaces, sol: &FieldSolution) -> Result<(ErrorNorms, f64)> {
    let zero_v = std::sync::Arc::new(|_: &Point| Vec3::zeros());
    let zero_s = std::sync::Arc::new(|_: &Point| 0.0);
    let zero = ExactSolution {
        j: zero_v.clone(),
        j_div: zero_s.clone(),
        phi: zero_s.clone(),
        a: zero_v.clone(),
        a_curl: zero_v,
        r: zero_s,
    };
    Ok((error_norms(spaces, sol, &zero)?, multiplier_norm(spaces, &sol.r)?))
}

/// `‖div J_h‖_{L²}`; the divergence is constant on each cell.
pub fn divergence_norm(spaces: &Spaces, j: &[f64]) -> Result<f64> {
    let mesh = &spaces.mesh;
    let mut s = 0.0;
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        let d = spaces.v2.local_field(&cb, j, c).div;
        s += cb.map.volume() * d * d;
    }
    Ok(s.sqrt())
}

/// `V2` coefficients of `B_h = curl A_h`.
pub fn magnetic_field(spaces: &Spaces, a: &[f64]) -> Result<Vec<f64>> {
    let mesh = &spaces.mesh;
    let curls: Vec<Vec3> = (0..mesh.num_cells())
        .map(|c| CellBasis::of_cell(mesh, c).map(|cb| spaces.v1.local_field(&cb, a, c).curl))
        .collect::<Result<_>>()?;
    Ok(spaces.v2.interpolate_vector_cellwise(|c, _| curls[c]))
}

/// `‖div B_h‖_{L²}` with `B_h = curl A_h` represented in `V2`.
pub fn div_b_norm(spaces: &Spaces, a: &[f64]) -> Result<f64> {
    divergence_norm(spaces, &magnetic_field(spaces, a)?)
}

/// Largest difference between `curl A_h` and its `V2` representative,
/// measured at the quadrature points. Zero iff `curl A_h` has continuous
/// normal components.
pub fn magnetic_field_defect(spaces: &Spaces, a: &[f64]) -> Result<f64> {
    let b = magnetic_field(spaces, a)?;
    let rule = tet_rule(2);
    let mesh = &spaces.mesh;
    let mut worst: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        let curl = spaces.v1.local_field(&cb, a, c).curl;
        let bf = spaces.v2.local_field(&cb, &b, c);
        for p in &rule.points {
            worst = worst.max((bf.eval(&Vec3::from(*p)) - curl).norm());
        }
    }
    Ok(worst)
}

/// `∫ J_h · curl A_h`.
pub fn helicity(spaces: &Spaces, j: &[f64], a: &[f64]) -> Result<f64> {
    integrate(spaces, 2, |c, cb, xr, _| {
        let jf = spaces.v2.local_field(cb, j, c);
        let af = spaces.v1.local_field(cb, a, c);
        jf.eval(xr).dot(&af.curl)
    })
}

/// `‖r_h‖_{L²}`.
pub fn multiplier_norm(spaces: &Spaces, r: &[f64]) -> Result<f64> {
    let s = integrate(spaces, 4, |c, cb, xr, _| {
        let (v, _) = cb.p2(&[xr.x, xr.y, xr.z]);
        let dofs = spaces.v0.local_dofs(c);
        let val: f64 = dofs.iter().zip(&v).map(|(&d, s)| r[d] * s).sum();
        val * val
    })?;
    Ok(s.sqrt())
}

/// Electric field `E = ηJ − w × B` at a reference point of a cell.
pub fn electric_field(spaces: &Spaces, case: &PhysicsCase, sol: &FieldSolution, cell: usize, xr: &[f64; 3]) -> Result<Vec3> {
    let cb = CellBasis::of_cell(&spaces.mesh, cell)?;
    let x = cb.map.to_physical(xr);
    let jv = spaces.v2.local_field(&cb, &sol.j, cell).eval(&Vec3::from(*xr));
    let b = spaces.v1.local_field(&cb, &sol.a, cell).curl;
    Ok(jv * case.eta() - (case.velocity)(&x).cross(&b))
}

/// Observed order between consecutive levels: `log(e_c/e_f) / log(h_c/h_f)`.
/// `None` when an error is zero or not finite.
pub fn convergence_orders(h: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(h.len(), errors.len());
    h.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| {
            let ok = e.iter().all(|v| v.is_finite() && *v > 0.0);
            ok.then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect()
}

/// Everything recorded about one solve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub level: u32,
    pub h: f64,
    /// Full DOF counts `(J, φ, A, r)`, boundary DOFs included.
    pub dofs: [usize; 4],
    pub rm: f64,
    pub sigma: f64,
    pub errors: Option<ErrorNorms>,
    pub div_j_l2: f64,
    pub div_b_l2: f64,
    pub helicity: f64,
    pub r_l2: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
    pub wall_time_s: f64,
    /// Set when the solve failed outright.
    pub failure: Option<String>,
}

impl SolveReport {
    /// Fills the solution-derived fields.
    pub fn measure(&mut self, spaces: &Spaces, case: &PhysicsCase, sol: &FieldSolution) -> Result<()> {
        self.errors = case.exact.as_ref().map(|ex| error_norms(spaces, sol, ex)).transpose()?;
        self.div_j_l2 = divergence_norm(spaces, &sol.j)?;
        self.div_b_l2 = div_b_norm(spaces, &sol.a)?;
        self.helicity = helicity(spaces, &sol.j, &sol.a)?;
        self.r_l2 = multiplier_norm(spaces, &sol.r)?;
        Ok(())
    }
}
