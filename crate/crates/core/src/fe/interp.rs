//! Canonical interpolation through the DOF functionals.

use super::reference::p2_nodes;
use super::{CellMap, FeSpace, SpaceKind};
use crate::mesh::{LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature::{line_rule, tet_rule, triangle_rule, ASSEMBLY_DEGREE};
use crate::{Point, Vec3};

fn cell_map(space: &FeSpace, cell: usize) -> CellMap {
    CellMap::of_cell(space.mesh(), cell).expect("mesh cells have positive volume")
}

pub(super) fn interpolate_scalar(space: &FeSpace, f: impl Fn(usize, Point) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let mut out = vec![0.0; space.n_dofs()];
    match space.kind() {
        SpaceKind::V0 => {
            let nodes = p2_nodes();
            let mut done = vec![false; space.n_dofs()];
            for c in 0..mesh.num_cells() {
                let map = cell_map(space, c);
                for (k, &d) in space.local_dofs(c).iter().enumerate() {
                    if !done[d] {
                        out[d] = f(c, map.to_physical(&nodes[k]));
                        done[d] = true;
                    }
                }
            }
        }
        SpaceKind::V3 => {
            let rule = tet_rule(ASSEMBLY_DEGREE);
            for (c, slot) in out.iter_mut().enumerate() {
                let map = cell_map(space, c);
                // reference weights sum to 1/6
                *slot = 6.0 * rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(c, map.to_physical(p))).sum::<f64>();
            }
        }
        _ => panic!("interpolate_scalar needs V0 or V3"),
    }
    out
}

pub(super) fn interpolate_vector(space: &FeSpace, f: impl Fn(usize, Point) -> Vec3) -> Vec<f64> {
    let mesh = space.mesh();
    let mut out = vec![0.0; space.n_dofs()];
    let mut done = vec![false; space.n_dofs()];
    match space.kind() {
        SpaceKind::V1 => {
            let rule = line_rule(5);
            for c in 0..mesh.num_cells() {
                let p = mesh.sorted_cell_points(c);
                let dofs = space.local_dofs(c);
                for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                    if done[dofs[2 * k]] {
                        continue;
                    }
                    let t = p[*b] - p[*a];
                    let (mut m0, mut m1) = (0.0, 0.0);
                    for (s, w) in rule.points.iter().zip(&rule.weights) {
                        let ut = f(c, p[*a] + *s * t).dot(&t);
                        m0 += w * ut;
                        m1 += w * ut * (2.0 * s - 1.0);
                    }
                    out[dofs[2 * k]] = m0;
                    out[dofs[2 * k + 1]] = m1;
                    done[dofs[2 * k]] = true;
                }
            }
        }
        SpaceKind::V2 => {
            let rule = triangle_rule(8);
            for c in 0..mesh.num_cells() {
                let p = mesh.sorted_cell_points(c);
                let dofs = space.local_dofs(c);
                for (k, [a, b, cc]) in LOCAL_FACES.iter().enumerate() {
                    if done[dofs[3 * k]] {
                        continue;
                    }
                    let (e1, e2) = (p[*b] - p[*a], p[*cc] - p[*a]);
                    let n = e1.cross(&e2);
                    let mut m = [0.0; 3];
                    for (q, w) in rule.points.iter().zip(&rule.weights) {
                        let un = f(c, p[*a] + q[0] * e1 + q[1] * e2).dot(&n);
                        m[0] += w * un;
                        m[1] += w * un * q[0];
                        m[2] += w * un * q[1];
                    }
                    for (i, v) in m.iter().enumerate() {
                        out[dofs[3 * k + i]] = *v;
                    }
                    done[dofs[3 * k]] = true;
                }
            }
        }
        _ => panic!("interpolate_vector needs V1 or V2"),
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fe::{ShapeDiff, ShapeValue};
    use crate::mesh::TetMesh;
    use crate::quadrature::tet_rule;

    fn mesh() -> Arc<TetMesh> {
        Arc::new(TetMesh::unit_cube(0).unwrap())
    }

    #[test]
    fn constant_edge_field_is_reproduced() {
        let m = mesh();
        let v1 = FeSpace::new(&m, SpaceKind::V1);
        let c = Vec3::new(0.3, -1.2, 2.5);
        let coeffs = v1.interpolate_vector(|_| c);
        let rule = tet_rule(4);
        for cell in 0..m.num_cells() {
            for p in &rule.points {
                let (v, d) = v1.eval_function(&coeffs, cell, p).unwrap();
                let ShapeValue::Vector(v) = v else { panic!() };
                assert!((v - c).norm() < 1e-12);
                let ShapeDiff::Curl(curl) = d else { panic!() };
                assert!(curl.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_face_field_is_reproduced() {
        let m = mesh();
        let v2 = FeSpace::new(&m, SpaceKind::V2);
        let f = |x: Point| Vec3::new(1.0 + x.y, 2.0 * x.z - x.x, 0.5 * x.x);
        let coeffs = v2.interpolate_vector(f);
        for cell in 0..m.num_cells() {
            let map = CellMap::of_cell(&m, cell).unwrap();
            let xr = [0.2, 0.3, 0.1];
            let (v, d) = v2.eval_function(&coeffs, cell, &xr).unwrap();
            let ShapeValue::Vector(v) = v else { panic!() };
            assert!((v - f(map.to_physical(&xr))).norm() < 1e-12);
            let ShapeDiff::Div(div) = d else { panic!() };
            assert!(div.abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_scalar_is_reproduced() {
        let m = mesh();
        let v0 = FeSpace::new(&m, SpaceKind::V0);
        let s = |x: Point| x.x * (1.0 - x.x);
        let coeffs = v0.interpolate_scalar(s);
        for cell in 0..m.num_cells() {
            let map = CellMap::of_cell(&m, cell).unwrap();
            for xr in [[0.1, 0.1, 0.1], [0.5, 0.25, 0.2], [0.0, 0.0, 0.9]] {
                let (v, _) = v0.eval_function(&coeffs, cell, &xr).unwrap();
                let ShapeValue::Scalar(v) = v else { panic!() };
                assert!((v - s(map.to_physical(&xr))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p0_interpolant_is_cell_mean() {
        let m = mesh();
        let v3 = FeSpace::new(&m, SpaceKind::V3);
        let coeffs = v3.interpolate_scalar(|x| x.z);
        for cell in 0..m.num_cells() {
            let p = m.cell_points(cell);
            let centroid_z = p.iter().map(|q| q.z).sum::<f64>() / 4.0;
            assert!((coeffs[cell] - centroid_z).abs() < 1e-13);
        }
    }
}
