//! Shape functions on the reference tetrahedron `{0, e1, e2, e3}`.
//!
//! The edge and face elements are the full linear spaces `P1(K)^3`, with
//! DOFs given by tangential edge moments against `{1, 2s - 1}` and normal
//! face moments against `{1, ξ, η}`. The shape functions are the dual basis
//! of those functionals, obtained by inverting the functional matrix applied
//! to the vector monomials.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Vector3};

use crate::mesh::{LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature::{line_rule, triangle_rule};
use crate::{Mat3, Vec3};

/// Vertices of the reference tetrahedron.
pub const REF_VERTICES: [[f64; 3]; 4] = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Gradients of the barycentric coordinates on the reference cell.
pub const REF_BARY_GRADS: [[f64; 3]; 4] =
    [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn vertex(i: usize) -> Vec3 {
    Vec3::from(REF_VERTICES[i])
}

pub fn barycentric(x: &[f64; 3]) -> [f64; 4] {
    [1.0 - x[0] - x[1] - x[2], x[0], x[1], x[2]]
}

/// Vector field `u(x) = constant + gradient · x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineField {
    pub constant: Vec3,
    pub gradient: Mat3,
}

impl AffineField {
    pub fn zero() -> Self {
        Self { constant: Vec3::zeros(), gradient: Mat3::zeros() }
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        self.constant + self.gradient * x
    }

    /// Constant curl of the field.
    pub fn curl(&self) -> Vec3 {
        let g = &self.gradient;
        Vec3::new(g[(2, 1)] - g[(1, 2)], g[(0, 2)] - g[(2, 0)], g[(1, 0)] - g[(0, 1)])
    }

    pub fn div(&self) -> f64 {
        self.gradient.trace()
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &AffineField) {
        self.constant += alpha * other.constant;
        self.gradient += alpha * other.gradient;
    }

    /// `M · u`, as a new affine field.
    pub fn left_mul(&self, m: &Mat3) -> Self {
        Self { constant: m * self.constant, gradient: m * self.gradient }
    }
}

/// The twelve vector monomials `e_c`, `e_c x`, `e_c y`, `e_c z`.
fn vector_monomials() -> [AffineField; 12] {
    std::array::from_fn(|m| {
        let comp = m / 4;
        let t = m % 4;
        let mut f = AffineField::zero();
        if t == 0 {
            f.constant[comp] = 1.0;
        } else {
            f.gradient[(comp, t - 1)] = 1.0;
        }
        f
    })
}

/// Tangential moments of `u` on the six reference edges: entry `2k + q`.
pub fn edge_moments(u: &AffineField) -> [f64; 12] {
    let rule = line_rule(3);
    let mut out = [0.0; 12];
    for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        let (va, vb) = (vertex(*a), vertex(*b));
        let t = vb - va;
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let ut = u.eval(&(va + *s * t)).dot(&t);
            out[2 * k] += w * ut;
            out[2 * k + 1] += w * ut * (2.0 * s - 1.0);
        }
    }
    out
}

/// Normal moments of `u` on the four reference faces: entry `3k + q`.
pub fn face_moments(u: &AffineField) -> [f64; 12] {
    let rule = triangle_rule(4);
    let mut out = [0.0; 12];
    for (k, [a, b, c]) in LOCAL_FACES.iter().enumerate() {
        let (va, vb, vc) = (vertex(*a), vertex(*b), vertex(*c));
        let n = (vb - va).cross(&(vc - va));
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let un = u.eval(&(va + p[0] * (vb - va) + p[1] * (vc - va))).dot(&n);
            out[3 * k] += w * un;
            out[3 * k + 1] += w * un * p[0];
            out[3 * k + 2] += w * un * p[1];
        }
    }
    out
}

fn functional_matrix(moments: fn(&AffineField) -> [f64; 12]) -> DMatrix<f64> {
    let basis = vector_monomials();
    let mut d = DMatrix::zeros(12, 12);
    for (m, p) in basis.iter().enumerate() {
        for (i, v) in moments(p).iter().enumerate() {
            d[(i, m)] = *v;
        }
    }
    d
}

fn dual_basis(moments: fn(&AffineField) -> [f64; 12]) -> [AffineField; 12] {
    let d = functional_matrix(moments);
    let c = d.try_inverse().expect("moment functionals are unisolvent on P1^3");
    let mono = vector_monomials();
    std::array::from_fn(|j| {
        let mut f = AffineField::zero();
        for (m, p) in mono.iter().enumerate() {
            f.scaled_add(c[(m, j)], p);
        }
        f
    })
}

/// Reference shape functions of the four spaces.
pub struct ReferenceBasis {
    pub edge: [AffineField; 12],
    pub face: [AffineField; 12],
}

impl ReferenceBasis {
    pub fn get() -> &'static ReferenceBasis {
        static BASIS: OnceLock<ReferenceBasis> = OnceLock::new();
        BASIS.get_or_init(|| ReferenceBasis { edge: dual_basis(edge_moments), face: dual_basis(face_moments) })
    }

    /// Functional matrix of the edge DOFs applied to the vector monomials.
    pub fn edge_functional_matrix() -> DMatrix<f64> {
        functional_matrix(edge_moments)
    }

    pub fn face_functional_matrix() -> DMatrix<f64> {
        functional_matrix(face_moments)
    }
}

/// Quadratic Lagrange shape functions at a reference point: values and
/// reference gradients. Order: four vertices, then the six edge midpoints.
pub fn p2_tabulate(x: &[f64; 3]) -> ([f64; 10], [Vec3; 10]) {
    let l = barycentric(x);
    let g = REF_BARY_GRADS.map(Vector3::from);
    let mut val = [0.0; 10];
    let mut grad = [Vec3::zeros(); 10];
    for i in 0..4 {
        val[i] = l[i] * (2.0 * l[i] - 1.0);
        grad[i] = (4.0 * l[i] - 1.0) * g[i];
    }
    for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        val[4 + k] = 4.0 * l[*a] * l[*b];
        grad[4 + k] = 4.0 * (l[*a] * g[*b] + l[*b] * g[*a]);
    }
    (val, grad)
}

/// Lagrange nodes of the quadratic element, in shape function order.
pub fn p2_nodes() -> [[f64; 3]; 10] {
    let mut nodes = [[0.0; 3]; 10];
    nodes[..4].copy_from_slice(&REF_VERTICES);
    for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        let m = 0.5 * (vertex(*a) + vertex(*b));
        nodes[4 + k] = [m.x, m.y, m.z];
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_basis_is_dual_to_edge_moments() {
        let basis = ReferenceBasis::get();
        for (j, phi) in basis.edge.iter().enumerate() {
            let m = edge_moments(phi);
            for (i, v) in m.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "edge dof {i} of basis {j}: {v}");
            }
        }
    }

    #[test]
    fn face_basis_is_dual_to_face_moments() {
        let basis = ReferenceBasis::get();
        for (j, phi) in basis.face.iter().enumerate() {
            let m = face_moments(phi);
            for (i, v) in m.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "face dof {i} of basis {j}: {v}");
            }
        }
    }

    #[test]
    fn functional_matrices_are_well_conditioned() {
        for d in [ReferenceBasis::edge_functional_matrix(), ReferenceBasis::face_functional_matrix()] {
            let sv = d.singular_values();
            let cond = sv.max() / sv.min();
            assert!(cond < 1e6, "condition number {cond}");
            assert_eq!(d.rank(1e-12), 12);
        }
    }

    #[test]
    fn p2_is_lagrange_at_its_nodes() {
        for (i, node) in p2_nodes().iter().enumerate() {
            let (val, _) = p2_tabulate(node);
            for (j, v) in val.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        let x = [0.21, 0.17, 0.33];
        let (_, grad) = p2_tabulate(&x);
        let h = 1e-6;
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let (vp, _) = p2_tabulate(&xp);
            let (vm, _) = p2_tabulate(&xm);
            for j in 0..10 {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                assert!((fd - grad[j][d]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn curl_and_div_of_affine_fields() {
        // u = (-y, x, 0): curl = (0, 0, 2), div = 0
        let mut u = AffineField::zero();
        u.gradient[(0, 1)] = -1.0;
        u.gradient[(1, 0)] = 1.0;
        assert_eq!(u.curl(), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(u.div(), 0.0);
    }
}
