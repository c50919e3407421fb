//! Quadrature rules on the reference interval, triangle and tetrahedron.
//!
//! Simplex rules are conical products of Gauss–Jacobi rules (Stroud): with
//! `n` points per direction they integrate every polynomial of total degree
//! `2n - 1` exactly. Nodes come from the Golub–Welsch eigenvalue problem.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^alpha`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    // Recurrence on [-1, 1] for the weight (1 - x)^a (1 + x)^b with b = 0.
    let (a, b) = (alpha, 0.0f64);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let diag = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            jac[(k, k + 1)] = beta.sqrt();
            jac[(k + 1, k)] = beta.sqrt();
        }
    }
    // mu0 = ∫_{-1}^{1} (1 - x)^a dx = 2^(a+1) / (a+1)
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // x in [-1, 1] -> t = (1 + x) / 2, (1 - x)^a = 2^a (1 - t)^a, dx = 2 dt
    let scale = 2f64.powf(a + 1.0);
    let nodes = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let weights = pairs.iter().map(|p| p.1 / scale).collect();
    (nodes, weights)
}

#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre on `[0, 1]`, exact to degree `2n - 1`.
pub fn line_rule(n: usize) -> LineRule {
    let (points, weights) = gauss_jacobi_unit(n, 0.0);
    LineRule { points, weights }
}

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Rule on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}` exact to `degree`.
/// Weights sum to `1/2`.
pub fn triangle_rule(degree: usize) -> TriangleRule {
    let n = degree / 2 + 1;
    let (u, wu) = gauss_jacobi_unit(n, 0.0);
    let (v, wv) = gauss_jacobi_unit(n, 1.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &vj) in v.iter().enumerate() {
        for (i, &ui) in u.iter().enumerate() {
            points.push([ui * (1.0 - vj), vj]);
            weights.push(wu[i] * wv[j]);
        }
    }
    TriangleRule { points, weights }
}

#[derive(Clone, Debug)]
pub struct TetRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule on the reference tetrahedron with vertices `0, e1, e2, e3`, exact to
/// `degree`. Weights sum to `1/6`.
pub fn tet_rule(degree: usize) -> TetRule {
    let n = degree / 2 + 1;
    let (u, wu) = gauss_jacobi_unit(n, 0.0);
    let (v, wv) = gauss_jacobi_unit(n, 1.0);
    let (w, ww) = gauss_jacobi_unit(n, 2.0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (k, &wk) in w.iter().enumerate() {
        for (j, &vj) in v.iter().enumerate() {
            for (i, &ui) in u.iter().enumerate() {
                let z = wk;
                let y = vj * (1.0 - wk);
                let x = ui * (1.0 - vj) * (1.0 - wk);
                points.push([x, y, z]);
                weights.push(wu[i] * wv[j] * ww[k]);
            }
        }
    }
    TetRule { points, weights, degree: 2 * n - 1 }
}

/// Default rule for element integrals.
pub const ASSEMBLY_DEGREE: usize = 7;
/// Rule for error norms, two degrees above assembly.
pub const ERROR_DEGREE: usize = 9;

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn line_rule_integrates_monomials() {
        let r = line_rule(4);
        for p in 0..8 {
            let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        let r = triangle_rule(6);
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                let q: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn tet_rule_integrates_monomials_to_its_degree() {
        for degree in [1, 2, 4, ASSEMBLY_DEGREE, ERROR_DEGREE] {
            let r = tet_rule(degree);
            assert!(r.degree >= degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    for c in 0..=(degree as u32 - a - b) {
                        let q: f64 = r
                            .points
                            .iter()
                            .zip(&r.weights)
                            .map(|(p, w)| {
                                w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                            })
                            .sum();
                        let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                        assert!((q - exact).abs() < 1e-14, "x^{a} y^{b} z^{c} with degree {degree}");
                    }
                }
            }
        }
    }

    #[test]
    fn tet_points_lie_inside() {
        let r = tet_rule(ERROR_DEGREE);
        for p in &r.points {
            assert!(p.iter().all(|&x| x > 0.0) && p.iter().sum::<f64>() < 1.0);
        }
        assert!(r.weights.iter().all(|&w| w > 0.0));
    }
}
