//! Pointwise checks of the discrete sequence inclusions
//! `grad V0 ⊆ V1`, `curl V1 ⊆ V2`, `div V2 ⊆ V3`, and of inter-element
//! trace continuity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellBasis, ShapeDiff, ShapeValue, Spaces};
use crate::quadrature::{tet_rule, triangle_rule};
use crate::Vec3;

#[derive(Clone, Debug, Default)]
pub struct InclusionReport {
    pub samples: usize,
    /// Largest pointwise gap between `grad s_h` and its `V1` interpolant.
    pub grad_in_v1: f64,
    /// Largest pointwise gap between `curl a_h` and its `V2` interpolant.
    pub curl_in_v2: f64,
    /// Largest gap between `div v_h` and its `V3` interpolant.
    pub div_in_v3: f64,
    /// Largest `|curl I₁(grad s_h)|`.
    pub curl_grad: f64,
    /// Largest `|div I₂(curl a_h)|`.
    pub div_curl: f64,
    pub tolerance: f64,
}

impl InclusionReport {
    pub fn grad_ok(&self) -> bool {
        self.grad_in_v1 <= self.tolerance
    }

    pub fn curl_ok(&self) -> bool {
        self.curl_in_v2 <= self.tolerance
    }

    pub fn div_ok(&self) -> bool {
        self.div_in_v3 <= self.tolerance
    }

    pub fn curl_grad_ok(&self) -> bool {
        self.curl_grad <= self.tolerance
    }

    pub fn div_curl_ok(&self) -> bool {
        self.div_curl <= self.tolerance
    }

    pub fn all_ok(&self) -> bool {
        self.grad_ok() && self.curl_ok() && self.div_ok() && self.curl_grad_ok() && self.div_curl_ok()
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Draws `samples` random members of each space and compares their
/// differentials with the interpolants in the next space at quadrature
/// points of every cell. With `samples == 0` only the zero field is used.
pub fn complex_inclusion_check(spaces: &Spaces, samples: usize, seed: u64) -> InclusionReport {
    let mesh = &spaces.mesh;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rule = tet_rule(3);
    let bases: Vec<CellBasis> =
        (0..mesh.num_cells()).map(|c| CellBasis::of_cell(mesh, c).expect("valid cell")).collect();
    let mut report = InclusionReport { samples, tolerance: 1e-10, ..Default::default() };

    for _ in 0..samples.max(1) {
        let zero = samples == 0;
        let draw = |rng: &mut ChaCha8Rng, n: usize| if zero { vec![0.0; n] } else { random_vector(rng, n) };

        // grad V0 ⊆ V1 and curl ∘ grad = 0
        let s = draw(&mut rng, spaces.v0.n_dofs());
        let grad_of = |cell: usize, x: crate::Point| {
            let xr = bases[cell].map.to_reference(&x);
            match spaces.v0.eval_with(&bases[cell], &s, cell, &xr).1 {
                ShapeDiff::Grad(g) => g,
                _ => unreachable!(),
            }
        };
        let gi = spaces.v1.interpolate_vector_cellwise(grad_of);
        for (c, cb) in bases.iter().enumerate() {
            let f = spaces.v1.local_field(cb, &gi, c);
            report.curl_grad = report.curl_grad.max(f.curl.norm());
            for p in &rule.points {
                let x = cb.map.to_physical(p);
                let gap = (f.eval(&Vec3::from(*p)) - grad_of(c, x)).norm();
                report.grad_in_v1 = report.grad_in_v1.max(gap);
            }
        }

        // curl V1 ⊆ V2
        let a = draw(&mut rng, spaces.v1.n_dofs());
        let curls: Vec<Vec3> = bases.iter().enumerate().map(|(c, cb)| spaces.v1.local_field(cb, &a, c).curl).collect();
        let ci = spaces.v2.interpolate_vector_cellwise(|c, _| curls[c]);
        for (c, cb) in bases.iter().enumerate() {
            let f = spaces.v2.local_field(cb, &ci, c);
            report.div_curl = report.div_curl.max(f.div.abs());
            for p in &rule.points {
                report.curl_in_v2 = report.curl_in_v2.max((f.eval(&Vec3::from(*p)) - curls[c]).norm());
            }
        }

        // div V2 ⊆ V3
        let v = draw(&mut rng, spaces.v2.n_dofs());
        let divs: Vec<f64> = bases.iter().enumerate().map(|(c, cb)| spaces.v2.local_field(cb, &v, c).div).collect();
        let di = spaces.v3.interpolate_scalar_cellwise(|c, _| divs[c]);
        for (c, cb) in bases.iter().enumerate() {
            for p in &rule.points {
                let (val, _) = spaces.v3.eval_with(cb, &di, c, p);
                let ShapeValue::Scalar(val) = val else { unreachable!() };
                report.div_in_v3 = report.div_in_v3.max((val - divs[c]).abs());
            }
        }
    }
    report
}

#[derive(Clone, Debug, Default)]
pub struct TraceReport {
    pub interior_faces: usize,
    /// Largest jump of a `V0` member across an interior face.
    pub v0_jump: f64,
    /// Largest jump of the tangential part of a `V1` member.
    pub v1_tangential_jump: f64,
    /// Largest jump of the normal component of a `V2` member.
    pub v2_normal_jump: f64,
    pub tolerance: f64,
}

impl TraceReport {
    pub fn all_ok(&self) -> bool {
        self.v0_jump.max(self.v1_tangential_jump).max(self.v2_normal_jump) <= self.tolerance
    }
}

/// Evaluates random members from both sides of every interior face at
/// face quadrature points and records the largest trace jumps.
pub fn trace_continuity_check(spaces: &Spaces, samples: usize, seed: u64) -> TraceReport {
    let mesh = &spaces.mesh;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rule = triangle_rule(3);
    let bases: Vec<CellBasis> =
        (0..mesh.num_cells()).map(|c| CellBasis::of_cell(mesh, c).expect("valid cell")).collect();
    let mut report = TraceReport { tolerance: 1e-10, ..Default::default() };

    for _ in 0..samples {
        let s = random_vector(&mut rng, spaces.v0.n_dofs());
        let a = random_vector(&mut rng, spaces.v1.n_dofs());
        let v = random_vector(&mut rng, spaces.v2.n_dofs());
        report.interior_faces = 0;
        for (f, tri) in mesh.faces().iter().enumerate() {
            let cells: Vec<usize> = mesh.face_cells(f).collect();
            let &[c0, c1] = cells.as_slice() else { continue };
            report.interior_faces += 1;
            let x: Vec<crate::Point> = tri.iter().map(|&i| mesh.vertices()[i as usize]).collect();
            let n = (x[1] - x[0]).cross(&(x[2] - x[0])).normalize();
            for [xi, eta] in &rule.points {
                let p = x[0] * (1.0 - xi - eta) + x[1] * *xi + x[2] * *eta;
                let side = |c: usize| {
                    let cb = &bases[c];
                    let xr = cb.map.to_reference(&p);
                    let ShapeValue::Scalar(sv) = spaces.v0.eval_with(cb, &s, c, &xr).0 else { unreachable!() };
                    let av = spaces.v1.local_field(cb, &a, c).eval(&Vec3::from(xr));
                    let vv = spaces.v2.local_field(cb, &v, c).eval(&Vec3::from(xr));
                    (sv, av - n * av.dot(&n), vv.dot(&n))
                };
                let (s0, a0, v0) = side(c0);
                let (s1, a1, v1) = side(c1);
                report.v0_jump = report.v0_jump.max((s0 - s1).abs());
                report.v1_tangential_jump = report.v1_tangential_jump.max((a0 - a1).norm());
                report.v2_normal_jump = report.v2_normal_jump.max((v0 - v1).abs());
            }
        }
    }
    report
}
