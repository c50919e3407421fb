//! The four conforming spaces of the discrete de Rham sequence on a
//! tetrahedral mesh:
//!
//! | space | element | DOFs | field |
//! |-------|---------|------|-------|
//! | `V0` | quadratic Lagrange | vertices + edge midpoints | multiplier `r` |
//! | `V1` | linear edge element, full `P1` | 2 per edge | vector potential `A` |
//! | `V2` | linear face element, full `P1` | 3 per face | current density `J` |
//! | `V3` | piecewise constants | 1 per cell | electric potential `φ` |
//!
//! Each cell is parameterised from the reference tetrahedron by the affine
//! map through its vertices sorted by global index. In that frame every
//! local edge and face carries the global orientation, so the Piola-mapped
//! reference shape functions are directly dual to the global DOFs.

pub mod reference;

mod complex;
mod interp;

use std::sync::Arc;

pub use complex::{complex_inclusion_check, trace_continuity_check, InclusionReport, TraceReport};

use crate::mesh::TetMesh;
use crate::{Error, Mat3, Point, Result, Vec3};
use reference::{p2_tabulate, AffineField, ReferenceBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    V0,
    V1,
    V2,
    V3,
}

impl SpaceKind {
    pub fn local_dim(self) -> usize {
        match self {
            SpaceKind::V0 => 10,
            SpaceKind::V1 | SpaceKind::V2 => 12,
            SpaceKind::V3 => 1,
        }
    }
}

/// Affine map `x = origin + jac · x̂` from the reference cell onto a cell,
/// with the cell's vertices taken in sorted global order. `det` may be
/// negative.
#[derive(Clone, Copy, Debug)]
pub struct CellMap {
    pub origin: Point,
    pub jac: Mat3,
    pub inv: Mat3,
    pub det: f64,
}

impl CellMap {
    pub fn new(p: &[Point; 4]) -> Result<Self> {
        let jac = Mat3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
        let det = jac.determinant();
        let scale = jac.norm();
        if det.abs() <= 1e-14 * scale.powi(3) {
            return Err(Error::DegenerateCell { cell: usize::MAX, volume: det / 6.0 });
        }
        let inv = jac.try_inverse().ok_or(Error::DegenerateCell { cell: usize::MAX, volume: det / 6.0 })?;
        Ok(Self { origin: p[0], jac, inv, det })
    }

    pub fn of_cell(mesh: &TetMesh, cell: usize) -> Result<Self> {
        Self::new(&mesh.sorted_cell_points(cell)).map_err(|e| match e {
            Error::DegenerateCell { volume, .. } => Error::DegenerateCell { cell, volume },
            other => other,
        })
    }

    pub fn to_physical(&self, xr: &[f64; 3]) -> Point {
        self.origin + self.jac * Vec3::from(*xr)
    }

    pub fn to_reference(&self, x: &Point) -> [f64; 3] {
        let r = self.inv * (x - self.origin);
        [r.x, r.y, r.z]
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }

    /// Inverse transpose, the covariant Piola factor.
    pub fn inv_t(&self) -> Mat3 {
        self.inv.transpose()
    }

    /// Physical gradient from a reference gradient.
    pub fn grad(&self, g: &Vec3) -> Vec3 {
        self.inv.transpose() * g
    }
}

/// Shape functions of every space on one physical cell. The vector-valued
/// functions are stored as affine fields in the reference coordinate, i.e.
/// `u(x(x̂)) = constant + gradient · x̂`.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub map: CellMap,
    pub edge: [AffineField; 12],
    pub edge_curl: [Vec3; 12],
    pub face: [AffineField; 12],
    pub face_div: [f64; 12],
}

impl CellBasis {
    pub fn new(map: CellMap) -> Self {
        let rb = ReferenceBasis::get();
        let inv_t = map.inv_t();
        let contra = map.jac / map.det;
        let edge = rb.edge.map(|f| f.left_mul(&inv_t));
        let edge_curl = rb.edge.map(|f| map.jac * f.curl() / map.det);
        let face = rb.face.map(|f| f.left_mul(&contra));
        let face_div = rb.face.map(|f| f.div() / map.det);
        Self { map, edge, edge_curl, face, face_div }
    }

    pub fn of_cell(mesh: &TetMesh, cell: usize) -> Result<Self> {
        Ok(Self::new(CellMap::of_cell(mesh, cell)?))
    }

    /// Quadratic Lagrange values and physical gradients.
    pub fn p2(&self, xr: &[f64; 3]) -> ([f64; 10], [Vec3; 10]) {
        let (v, g) = p2_tabulate(xr);
        (v, g.map(|gi| self.map.grad(&gi)))
    }
}

/// Value of one shape function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeValue {
    Scalar(f64),
    Vector(Vec3),
}

/// The differential carried by a space: grad on `V0`, curl on `V1`, div on
/// `V2`, none on `V3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeDiff {
    Grad(Vec3),
    Curl(Vec3),
    Div(f64),
    None,
}

#[derive(Clone, Debug)]
pub struct BasisEval {
    pub values: Vec<ShapeValue>,
    pub diffs: Vec<ShapeDiff>,
}

/// A finite element space with its global DOF map.
#[derive(Clone, Debug)]
pub struct FeSpace {
    kind: SpaceKind,
    mesh: Arc<TetMesh>,
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    constrained: Vec<bool>,
}

impl FeSpace {
    /// DOF numbering: `V0` vertex `i -> i`, edge `e -> V + e`; `V1` edge
    /// `e -> 2e, 2e+1`; `V2` face `f -> 3f, 3f+1, 3f+2`; `V3` cell `c -> c`.
    pub fn new(mesh: &Arc<TetMesh>, kind: SpaceKind) -> Self {
        let counts = mesh.entity_counts();
        let nloc = kind.local_dim();
        let mut cell_dofs = Vec::with_capacity(counts.cells * nloc);
        for c in 0..counts.cells {
            let sc = mesh.sorted_cell(c);
            match kind {
                SpaceKind::V0 => {
                    cell_dofs.extend(sc.vertices.iter().map(|&v| v as usize));
                    cell_dofs.extend(sc.edges.iter().map(|&e| counts.vertices + e as usize));
                }
                SpaceKind::V1 => {
                    for &e in &sc.edges {
                        cell_dofs.extend([2 * e as usize, 2 * e as usize + 1]);
                    }
                }
                SpaceKind::V2 => {
                    for &f in &sc.faces {
                        let f = 3 * f as usize;
                        cell_dofs.extend([f, f + 1, f + 2]);
                    }
                }
                SpaceKind::V3 => cell_dofs.push(c),
            }
        }
        let n_dofs = match kind {
            SpaceKind::V0 => counts.vertices + counts.edges,
            SpaceKind::V1 => 2 * counts.edges,
            SpaceKind::V2 => 3 * counts.faces,
            SpaceKind::V3 => counts.cells,
        };
        let bnd = mesh.boundary();
        let constrained = match kind {
            SpaceKind::V0 => bnd.vertices.iter().chain(bnd.edges.iter()).copied().collect(),
            SpaceKind::V1 => bnd.edges.iter().flat_map(|&b| [b, b]).collect(),
            SpaceKind::V2 | SpaceKind::V3 => vec![false; n_dofs],
        };
        Self { kind, mesh: Arc::clone(mesh), n_dofs, cell_dofs, constrained }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn local_dofs(&self, cell: usize) -> &[usize] {
        let n = self.kind.local_dim();
        &self.cell_dofs[cell * n..(cell + 1) * n]
    }

    /// DOFs carrying essential boundary conditions.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    /// Unconstrained DOFs in increasing order; position in this list is the
    /// reduced index.
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| !self.constrained[i]).collect()
    }

    /// Full index → reduced index, `None` for constrained DOFs.
    pub fn reduced_index(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.constrained
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }

    /// Shape functions of a cell evaluated at a point of the reference cell.
    pub fn eval_basis(&self, cell: usize, xr: &[f64; 3]) -> Result<BasisEval> {
        let cb = CellBasis::of_cell(&self.mesh, cell)?;
        let x = Vec3::from(*xr);
        Ok(match self.kind {
            SpaceKind::V0 => {
                let (v, g) = cb.p2(xr);
                BasisEval {
                    values: v.iter().map(|&s| ShapeValue::Scalar(s)).collect(),
                    diffs: g.iter().map(|&d| ShapeDiff::Grad(d)).collect(),
                }
            }
            SpaceKind::V1 => BasisEval {
                values: cb.edge.iter().map(|f| ShapeValue::Vector(f.eval(&x))).collect(),
                diffs: cb.edge_curl.iter().map(|&c| ShapeDiff::Curl(c)).collect(),
            },
            SpaceKind::V2 => BasisEval {
                values: cb.face.iter().map(|f| ShapeValue::Vector(f.eval(&x))).collect(),
                diffs: cb.face_div.iter().map(|&d| ShapeDiff::Div(d)).collect(),
            },
            SpaceKind::V3 => BasisEval { values: vec![ShapeValue::Scalar(1.0)], diffs: vec![ShapeDiff::None] },
        })
    }

    /// Evaluates the discrete function with coefficient vector `coeffs` on
    /// `cell` at a reference point: its value and differential.
    pub fn eval_function(&self, coeffs: &[f64], cell: usize, xr: &[f64; 3]) -> Result<(ShapeValue, ShapeDiff)> {
        let cb = CellBasis::of_cell(&self.mesh, cell)?;
        Ok(self.eval_with(&cb, coeffs, cell, xr))
    }

    /// As [`FeSpace::eval_function`] with a precomputed cell basis.
    pub fn eval_with(&self, cb: &CellBasis, coeffs: &[f64], cell: usize, xr: &[f64; 3]) -> (ShapeValue, ShapeDiff) {
        let dofs = self.local_dofs(cell);
        let x = Vec3::from(*xr);
        match self.kind {
            SpaceKind::V0 => {
                let (v, g) = cb.p2(xr);
                let mut s = 0.0;
                let mut grad = Vec3::zeros();
                for (k, &d) in dofs.iter().enumerate() {
                    s += coeffs[d] * v[k];
                    grad += coeffs[d] * g[k];
                }
                (ShapeValue::Scalar(s), ShapeDiff::Grad(grad))
            }
            SpaceKind::V1 => {
                let f = self.local_field(cb, coeffs, cell);
                (ShapeValue::Vector(f.eval(&x)), ShapeDiff::Curl(f.curl))
            }
            SpaceKind::V2 => {
                let f = self.local_field(cb, coeffs, cell);
                (ShapeValue::Vector(f.eval(&x)), ShapeDiff::Div(f.div))
            }
            SpaceKind::V3 => (ShapeValue::Scalar(coeffs[dofs[0]]), ShapeDiff::None),
        }
    }

    /// The restriction of a `V1` or `V2` function to a cell, as an affine
    /// field in the reference coordinate.
    pub fn local_field(&self, cb: &CellBasis, coeffs: &[f64], cell: usize) -> LocalField {
        let dofs = self.local_dofs(cell);
        let mut value = AffineField::zero();
        let mut diff = Vec3::zeros();
        let mut div = 0.0;
        match self.kind {
            SpaceKind::V1 => {
                for (k, &d) in dofs.iter().enumerate() {
                    value.scaled_add(coeffs[d], &cb.edge[k]);
                    diff += coeffs[d] * cb.edge_curl[k];
                }
            }
            SpaceKind::V2 => {
                for (k, &d) in dofs.iter().enumerate() {
                    value.scaled_add(coeffs[d], &cb.face[k]);
                    div += coeffs[d] * cb.face_div[k];
                }
            }
            _ => panic!("local_field needs a vector-valued space"),
        }
        LocalField { value, curl: diff, div }
    }

    /// Canonical interpolant of a scalar field (`V0`, `V3`).
    pub fn interpolate_scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        interp::interpolate_scalar(self, |_, x| f(x))
    }

    /// Canonical interpolant of a vector field (`V1`, `V2`).
    pub fn interpolate_vector(&self, f: impl Fn(Point) -> Vec3) -> Vec<f64> {
        interp::interpolate_vector(self, |_, x| f(x))
    }

    /// Interpolant of a cellwise-defined scalar field `f(cell, x)`.
    pub fn interpolate_scalar_cellwise(&self, f: impl Fn(usize, Point) -> f64) -> Vec<f64> {
        interp::interpolate_scalar(self, f)
    }

    /// Interpolant of a cellwise-defined vector field `f(cell, x)`. Each
    /// entity moment is taken from one cell that contains the entity.
    pub fn interpolate_vector_cellwise(&self, f: impl Fn(usize, Point) -> Vec3) -> Vec<f64> {
        interp::interpolate_vector(self, f)
    }
}

/// A `V1`/`V2` function restricted to one cell.
#[derive(Clone, Copy, Debug)]
pub struct LocalField {
    /// Value as an affine field of the reference coordinate.
    pub value: AffineField,
    /// Physical curl (only meaningful for `V1`).
    pub curl: Vec3,
    /// Physical divergence (only meaningful for `V2`).
    pub div: f64,
}

impl LocalField {
    pub fn eval(&self, xr: &Vec3) -> Vec3 {
        self.value.eval(xr)
    }
}

/// All four spaces on one mesh.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub mesh: Arc<TetMesh>,
    pub v0: FeSpace,
    pub v1: FeSpace,
    pub v2: FeSpace,
    pub v3: FeSpace,
}

impl Spaces {
    pub fn new(mesh: Arc<TetMesh>) -> Self {
        Self {
            v0: FeSpace::new(&mesh, SpaceKind::V0),
            v1: FeSpace::new(&mesh, SpaceKind::V1),
            v2: FeSpace::new(&mesh, SpaceKind::V2),
            v3: FeSpace::new(&mesh, SpaceKind::V3),
            mesh,
        }
    }

    /// Assembles spaces built separately; they must share one mesh.
    pub fn from_parts(v0: FeSpace, v1: FeSpace, v2: FeSpace, v3: FeSpace) -> Result<Self> {
        let mesh = Arc::clone(v0.mesh());
        for s in [&v1, &v2, &v3] {
            if !Arc::ptr_eq(&mesh, s.mesh()) {
                return Err(Error::MeshMismatch);
            }
        }
        if v0.kind() != SpaceKind::V0 || v1.kind() != SpaceKind::V1 || v2.kind() != SpaceKind::V2 || v3.kind() != SpaceKind::V3 {
            return Err(Error::Config("spaces passed in the wrong order".into()));
        }
        Ok(Self { mesh, v0, v1, v2, v3 })
    }

    /// `(V2, V3, V1, V0)` DOF counts, i.e. `(J, φ, A, r)`.
    pub fn dof_counts(&self) -> [usize; 4] {
        [self.v2.n_dofs(), self.v3.n_dofs(), self.v1.n_dofs(), self.v0.n_dofs()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts_on_coarsest_mesh() {
        let mesh = Arc::new(TetMesh::unit_cube(0).unwrap());
        let s = Spaces::new(mesh);
        assert_eq!(s.dof_counts(), [360, 48, 196, 125]);
    }

    #[test]
    fn constrained_dofs_follow_boundary() {
        let mesh = Arc::new(TetMesh::unit_cube(0).unwrap());
        let s = Spaces::new(mesh.clone());
        let be = mesh.boundary().edge_count();
        let bv = mesh.boundary().vertex_count();
        assert_eq!(s.v1.n_constrained(), 2 * be);
        assert_eq!(s.v0.n_constrained(), bv + be);
        assert_eq!(s.v2.n_constrained(), 0);
        assert_eq!(s.v3.n_constrained(), 0);
        // one interior vertex of the 3x3x3 grid
        assert_eq!(s.v0.free_dofs().len(), 1 + (98 - be));
    }

    #[test]
    fn p0_basis_is_one() {
        let mesh = Arc::new(TetMesh::unit_cube(0).unwrap());
        let v3 = FeSpace::new(&mesh, SpaceKind::V3);
        let e = v3.eval_basis(5, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(e.values, vec![ShapeValue::Scalar(1.0)]);
        assert_eq!(e.diffs, vec![ShapeDiff::None]);
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let m1 = Arc::new(TetMesh::unit_cube(0).unwrap());
        let m2 = Arc::new(TetMesh::unit_cube(0).unwrap());
        let r = Spaces::from_parts(
            FeSpace::new(&m1, SpaceKind::V0),
            FeSpace::new(&m2, SpaceKind::V1),
            FeSpace::new(&m1, SpaceKind::V2),
            FeSpace::new(&m1, SpaceKind::V3),
        );
        assert!(matches!(r, Err(Error::MeshMismatch)));
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let p = [Point::zeros(), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0), Point::new(1.0, 1.0, 0.0)];
        assert!(matches!(CellMap::new(&p), Err(Error::DegenerateCell { .. })));
    }
}
