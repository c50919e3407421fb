//! Structured tetrahedral meshes of the unit cube with full entity topology.
//!
//! Every cube of an `n × n × n` grid is split into six tetrahedra that all
//! share the cube diagonal from its lowest to its highest corner (Kuhn
//! subdivision). Because every cube uses the same diagonal direction, the
//! face diagonals of neighbouring cubes coincide and the triangulation is
//! conforming.
//!
//! Global orientation: an edge is stored with its lower vertex index first
//! and a face with its three vertex indices sorted ascending. The normal of a
//! face `(a, b, c)` is `(x_b - x_a) × (x_c - x_a)`.

use std::io::Write;

use crate::{Error, Point, Result};

/// Largest supported refinement level. At level 8 (`n = 512`) the face count
/// `≈ 12 n³` still fits the `u32` entity index type; level 9 would not.
pub const MAX_LEVEL: u32 = 8;

/// Local edges of a tetrahedron as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces; face `k` is opposite local vertex `k`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

const NO_CELL: u32 = u32::MAX;

/// A local entity of a cell mapped to its global entity, with the relative
/// orientation (`+1` agrees with the global convention, `-1` opposes it).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub index: u32,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryFlags {
    pub vertices: Vec<bool>,
    pub edges: Vec<bool>,
    pub faces: Vec<bool>,
}

impl BoundaryFlags {
    pub fn face_count(&self) -> usize {
        self.faces.iter().filter(|&&b| b).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&b| b).count()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.iter().filter(|&&b| b).count()
    }
}

/// Cell entities seen from the frame in which the four local vertices are
/// sorted by global index. In this frame each local edge and face carries
/// exactly the global orientation, so finite element DOFs need no sign
/// bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SortedCell {
    pub vertices: [u32; 4],
    /// Global edge of local pair `LOCAL_EDGES[k]`.
    pub edges: [u32; 6],
    /// Global face opposite sorted local vertex `k`.
    pub faces: [u32; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntityCounts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub cells: usize,
}

impl EntityCounts {
    /// `V - E + F - T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64 - self.cells as i64
    }
}

#[derive(Clone, Debug)]
pub struct TetMesh {
    level: Option<u32>,
    cubes_per_axis: usize,
    vertices: Vec<Point>,
    edges: Vec<[u32; 2]>,
    faces: Vec<[u32; 3]>,
    cells: Vec<[u32; 4]>,
    cell_edges: Vec<[Incidence; 6]>,
    cell_faces: Vec<[Incidence; 4]>,
    sorted_cells: Vec<SortedCell>,
    face_cells: Vec<[u32; 2]>,
    edge_cell: Vec<u32>,
    boundary: BoundaryFlags,
    h: f64,
}

fn signed_volume(x: &[Point; 4]) -> f64 {
    (x[1] - x[0]).cross(&(x[2] - x[0])).dot(&(x[3] - x[0])) / 6.0
}

impl TetMesh {
    /// Mesh `T_{level+1}` of the unit cube: `n = 2^(level+1)` cubes per axis,
    /// six tetrahedra per cube.
    pub fn unit_cube(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooLarge { level, max: MAX_LEVEL });
        }
        let n = 1usize << (level + 1);
        let np = n + 1;
        let id = |i: usize, j: usize, k: usize| (i + np * (j + np * k)) as u32;
        let step = 1.0 / n as f64;

        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push(Point::new(i as f64 * step, j as f64 * step, k as f64 * step));
                }
            }
        }

        const PERMUTATIONS: [[usize; 3]; 6] =
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMUTATIONS {
                        let mut p = [i, j, k];
                        let mut tet = [id(i, j, k); 4];
                        for (slot, &axis) in perm.iter().enumerate() {
                            p[axis] += 1;
                            tet[slot + 1] = id(p[0], p[1], p[2]);
                        }
                        cells.push(tet);
                    }
                }
            }
        }

        let mut mesh = Self::from_cells(vertices, cells)?;
        mesh.level = Some(level);
        mesh.cubes_per_axis = n;
        Ok(mesh)
    }

    /// The reference tetrahedron as a one-cell mesh.
    pub fn single_tet() -> Self {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        Self::from_cells(vertices, vec![[0, 1, 2, 3]]).expect("reference tetrahedron is valid")
    }

    /// Builds the full topology from a vertex list and cell connectivity.
    /// Cells with negative orientation are reordered; zero-volume cells are
    /// rejected.
    pub fn from_cells(vertices: Vec<Point>, mut cells: Vec<[u32; 4]>) -> Result<Self> {
        let nv = vertices.len();
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v as usize >= nv) {
                return Err(Error::InvalidMesh(format!("cell {c} references a missing vertex")));
            }
            let x = cell.map(|v| vertices[v as usize]);
            let vol = signed_volume(&x);
            let scale = (x[1] - x[0]).norm().max((x[2] - x[0]).norm()).max((x[3] - x[0]).norm());
            if vol.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                cell.swap(2, 3);
            }
        }

        let mut edges: Vec<[u32; 2]> = Vec::with_capacity(cells.len() * 6);
        let mut faces: Vec<[u32; 3]> = Vec::with_capacity(cells.len() * 4);
        for cell in &cells {
            for [a, b] in LOCAL_EDGES {
                let (p, q) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                edges.push([p, q]);
            }
            for f in LOCAL_FACES {
                let mut t = f.map(|i| cell[i]);
                t.sort_unstable();
                faces.push(t);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        faces.sort_unstable();
        faces.dedup();
        if edges.len() > u32::MAX as usize || faces.len() > u32::MAX as usize {
            return Err(Error::InvalidMesh("entity count overflows u32".into()));
        }

        let edge_of = |a: u32, b: u32| -> u32 {
            let key = [a.min(b), a.max(b)];
            edges.binary_search(&key).expect("edge exists") as u32
        };
        let face_of = |mut t: [u32; 3]| -> u32 {
            t.sort_unstable();
            faces.binary_search(&t).expect("face exists") as u32
        };

        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_faces = Vec::with_capacity(cells.len());
        let mut sorted_cells = Vec::with_capacity(cells.len());
        let mut face_cells = vec![[NO_CELL; 2]; faces.len()];
        let mut edge_cell = vec![NO_CELL; edges.len()];

        for (c, cell) in cells.iter().enumerate() {
            let x = cell.map(|v| vertices[v as usize]);
            let ce = LOCAL_EDGES.map(|[a, b]| Incidence {
                index: edge_of(cell[a], cell[b]),
                sign: if cell[a] < cell[b] { 1 } else { -1 },
            });
            let mut cf = [Incidence { index: 0, sign: 1 }; 4];
            for (k, f) in LOCAL_FACES.iter().enumerate() {
                let fid = face_of(f.map(|i| cell[i]));
                let [a, b, cc] = faces[fid as usize].map(|v| vertices[v as usize]);
                let normal = (b - a).cross(&(cc - a));
                let outward = normal.dot(&(a - x[k])) > 0.0;
                cf[k] = Incidence { index: fid, sign: if outward { 1 } else { -1 } };
                let slot = &mut face_cells[fid as usize];
                if slot[0] == NO_CELL {
                    slot[0] = c as u32;
                } else if slot[1] == NO_CELL {
                    slot[1] = c as u32;
                } else {
                    return Err(Error::InvalidMesh(format!("face {fid} shared by more than two cells")));
                }
            }
            for e in &ce {
                if edge_cell[e.index as usize] == NO_CELL {
                    edge_cell[e.index as usize] = c as u32;
                }
            }

            let mut sv = *cell;
            sv.sort_unstable();
            let sorted = SortedCell {
                vertices: sv,
                edges: LOCAL_EDGES.map(|[a, b]| edge_of(sv[a], sv[b])),
                faces: LOCAL_FACES.map(|f| face_of(f.map(|i| sv[i]))),
            };
            cell_edges.push(ce);
            cell_faces.push(cf);
            sorted_cells.push(sorted);
        }

        let h = edges
            .iter()
            .map(|&[a, b]| (vertices[a as usize] - vertices[b as usize]).norm())
            .fold(0.0, f64::max);

        let mut mesh = Self {
            level: None,
            cubes_per_axis: 0,
            vertices,
            edges,
            faces,
            cells,
            cell_edges,
            cell_faces,
            sorted_cells,
            face_cells,
            edge_cell,
            boundary: BoundaryFlags { vertices: vec![], edges: vec![], faces: vec![] },
            h,
        };
        mesh.boundary = mesh.classify_boundary();
        Ok(mesh)
    }

    /// A face is on the boundary iff exactly one cell touches it; edges and
    /// vertices are on the boundary iff they belong to a boundary face.
    pub fn classify_boundary(&self) -> BoundaryFlags {
        let mut flags = BoundaryFlags {
            vertices: vec![false; self.vertices.len()],
            edges: vec![false; self.edges.len()],
            faces: vec![false; self.faces.len()],
        };
        for (f, adj) in self.face_cells.iter().enumerate() {
            if adj[1] != NO_CELL {
                continue;
            }
            flags.faces[f] = true;
            let [a, b, c] = self.faces[f];
            for v in [a, b, c] {
                flags.vertices[v as usize] = true;
            }
            for (p, q) in [(a, b), (a, c), (b, c)] {
                let e = self.edge_index(p, q).expect("face edge exists");
                flags.edges[e] = true;
            }
        }
        flags
    }

    pub fn entity_counts(&self) -> EntityCounts {
        EntityCounts {
            vertices: self.vertices.len(),
            edges: self.edges.len(),
            faces: self.faces.len(),
            cells: self.cells.len(),
        }
    }

    /// Longest edge length; `√3 / n` for the cube meshes.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn cubes_per_axis(&self) -> usize {
        self.cubes_per_axis
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn cells(&self) -> &[[u32; 4]] {
        &self.cells
    }

    pub fn cell_edges(&self) -> &[[Incidence; 6]] {
        &self.cell_edges
    }

    pub fn cell_faces(&self) -> &[[Incidence; 4]] {
        &self.cell_faces
    }

    pub fn sorted_cell(&self, cell: usize) -> &SortedCell {
        &self.sorted_cells[cell]
    }

    pub fn boundary(&self) -> &BoundaryFlags {
        &self.boundary
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cells adjacent to a face: one for boundary faces, two otherwise.
    pub fn face_cells(&self, face: usize) -> impl Iterator<Item = usize> + '_ {
        self.face_cells[face].iter().filter(|&&c| c != NO_CELL).map(|&c| c as usize)
    }

    /// Some cell containing the edge.
    pub fn edge_cell(&self, edge: usize) -> usize {
        self.edge_cell[edge] as usize
    }

    pub fn edge_index(&self, a: u32, b: u32) -> Option<usize> {
        self.edges.binary_search(&[a.min(b), a.max(b)]).ok()
    }

    pub fn face_index(&self, mut t: [u32; 3]) -> Option<usize> {
        t.sort_unstable();
        self.faces.binary_search(&t).ok()
    }

    /// Coordinates of a cell's vertices in stored (positively oriented) order.
    pub fn cell_points(&self, cell: usize) -> [Point; 4] {
        self.cells[cell].map(|v| self.vertices[v as usize])
    }

    /// Coordinates of a cell's vertices sorted by global index.
    pub fn sorted_cell_points(&self, cell: usize) -> [Point; 4] {
        self.sorted_cells[cell].vertices.map(|v| self.vertices[v as usize])
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        signed_volume(&self.cell_points(cell))
    }

    /// Text dump: one section per entity kind, one entity per line.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        writeln!(out, "edges {}", self.edges.len())?;
        for [a, b] in &self.edges {
            writeln!(out, "{a} {b}")?;
        }
        writeln!(out, "faces {}", self.faces.len())?;
        for [a, b, c] in &self.faces {
            writeln!(out, "{a} {b} {c}")?;
        }
        writeln!(out, "cells {}", self.cells.len())?;
        for [a, b, c, d] in &self.cells {
            writeln!(out, "{a} {b} {c} {d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tet_counts() {
        let m = TetMesh::single_tet();
        let c = m.entity_counts();
        assert_eq!((c.vertices, c.edges, c.faces, c.cells), (4, 6, 4, 1));
        assert_eq!(m.boundary().face_count(), 4);
        assert!(m.boundary().vertices.iter().all(|&b| b));
    }

    #[test]
    fn coarsest_cube_mesh() {
        let m = TetMesh::unit_cube(0).unwrap();
        let c = m.entity_counts();
        assert_eq!((c.vertices, c.edges, c.faces, c.cells), (27, 98, 120, 48));
        assert_eq!(c.euler_characteristic(), 1);
        assert_eq!(m.boundary().face_count(), 48);
        assert!((m.mesh_size() - 0.86603).abs() < 5e-6);
    }

    #[test]
    fn second_level_counts() {
        let m = TetMesh::unit_cube(1).unwrap();
        let c = m.entity_counts();
        assert_eq!((c.vertices, c.edges, c.faces, c.cells), (125, 604, 864, 384));
        assert_eq!(m.boundary().face_count(), 192);
        assert!((m.mesh_size() - 0.43301).abs() < 5e-6);
    }

    #[test]
    fn mesh_size_matches_table_values() {
        for (level, h) in [(0, 0.86603), (3, 0.10825), (4, 0.05413)] {
            let m = TetMesh::unit_cube(level).unwrap();
            assert!((m.mesh_size() - h).abs() < 5e-6, "level {level}");
            let n = m.cubes_per_axis() as f64;
            assert!((m.mesh_size() - 3f64.sqrt() / n).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_oversized_level() {
        assert!(matches!(TetMesh::unit_cube(MAX_LEVEL + 1), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn rejects_flat_cell() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ];
        assert!(matches!(TetMesh::from_cells(v, vec![[0, 1, 2, 3]]), Err(Error::DegenerateCell { .. })));
    }

    #[test]
    fn stored_orientation_conventions() {
        let m = TetMesh::unit_cube(1).unwrap();
        assert!(m.edges().iter().all(|e| e[0] < e[1]));
        assert!(m.faces().iter().all(|f| f[0] < f[1] && f[1] < f[2]));
        for c in 0..m.num_cells() {
            assert!(m.cell_volume(c) > 0.0);
        }
        let total: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_faces_have_opposite_normals() {
        let m = TetMesh::unit_cube(1).unwrap();
        let mut signs = vec![Vec::new(); m.faces().len()];
        for cf in m.cell_faces() {
            for inc in cf {
                signs[inc.index as usize].push(inc.sign);
            }
        }
        for (f, s) in signs.iter().enumerate() {
            match s.len() {
                1 => assert!(m.boundary().faces[f]),
                2 => assert_eq!(s[0], -s[1]),
                k => panic!("face {f} has {k} cells"),
            }
        }
    }

    #[test]
    fn dump_has_one_line_per_entity() {
        let m = TetMesh::unit_cube(0).unwrap();
        let mut buf = Vec::new();
        m.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4 + 27 + 98 + 120 + 48);
        assert!(text.starts_with("vertices 27\n"));
    }
}
