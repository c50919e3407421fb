//! Property checks shared by the property suite and the acceptance runner.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mhd_core::assembly::{benchmark_case_example2, BlockSystem};
use mhd_core::fe::reference::ReferenceBasis;
use mhd_core::fe::{
    complex_inclusion_check, trace_continuity_check, CellBasis, ShapeValue, SpaceKind, Spaces,
};
use mhd_core::linalg::{is_spd, CsrMatrix};
use mhd_core::mesh::TetMesh;
use mhd_core::{Point, Vec3};

pub type Check = Result<(), String>;

pub fn spaces(level: u32) -> Spaces {
    Spaces::new(Arc::new(TetMesh::unit_cube(level).expect("supported level")))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Euler characteristic, Kuhn counts, face sharing and total volume.
pub fn mesh_topology(level: u32) -> Check {
    let mesh = TetMesh::unit_cube(level).map_err(|e| e.to_string())?;
    let n = mesh.cubes_per_axis();
    let c = mesh.entity_counts();
    ensure(c.euler_characteristic() == 1, || format!("level {level}: V-E+F-T = {}", c.euler_characteristic()))?;
    ensure(c.cells == 6 * n.pow(3) && c.vertices == (n + 1).pow(3), || format!("level {level}: counts {c:?}"))?;
    let mut boundary = 0;
    for f in 0..c.faces {
        match mesh.face_cells(f).count() {
            1 => boundary += 1,
            2 => {}
            k => return Err(format!("level {level}: face {f} has {k} cells")),
        }
    }
    ensure(boundary == 12 * n * n && mesh.boundary().face_count() == boundary, || {
        format!("level {level}: {boundary} boundary faces, expected {}", 12 * n * n)
    })?;
    let vol: f64 = (0..c.cells).map(|k| mesh.cell_volume(k)).sum();
    ensure((vol - 1.0).abs() <= 1e-12, || format!("level {level}: total volume {vol}"))?;
    ensure((0..c.cells).all(|k| mesh.cell_volume(k) > 0.0), || format!("level {level}: nonpositive cell volume"))
}

/// Boundary faces as sets of vertex coordinates, independent of labels.
fn boundary_signature(mesh: &TetMesh) -> BTreeSet<[[i64; 3]; 3]> {
    let key = |p: &Point| [p.x, p.y, p.z].map(|v| (v * 1e6).round() as i64);
    mesh.faces()
        .iter()
        .enumerate()
        .filter(|(f, _)| mesh.boundary().faces[*f])
        .map(|(_, t)| {
            let mut k = t.map(|v| key(&mesh.vertices()[v as usize]));
            k.sort();
            k
        })
        .collect()
}

/// Relabels vertices and reorders cells, then rebuilds the topology.
pub fn permutation_stability(level: u32, seed: u64) -> Check {
    let mesh = TetMesh::unit_cube(level).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = mesh.vertices().len();
    let mut relabel: Vec<u32> = (0..nv as u32).collect();
    relabel.shuffle(&mut rng);
    let mut vertices = vec![Point::zeros(); nv];
    for (old, &new) in relabel.iter().enumerate() {
        vertices[new as usize] = mesh.vertices()[old];
    }
    let mut cells: Vec<[u32; 4]> =
        mesh.cells().iter().map(|c| {
            let mut c = c.map(|v| relabel[v as usize]);
            c.shuffle(&mut rng);
            c
        }).collect();
    cells.shuffle(&mut rng);
    let other = TetMesh::from_cells(vertices, cells).map_err(|e| e.to_string())?;
    ensure(other.entity_counts() == mesh.entity_counts(), || format!("level {level}: counts changed under relabeling"))?;
    let (b0, b1) = (mesh.boundary(), other.boundary());
    ensure(
        (b0.vertex_count(), b0.edge_count(), b0.face_count()) == (b1.vertex_count(), b1.edge_count(), b1.face_count()),
        || format!("level {level}: boundary counts changed under relabeling"),
    )?;
    ensure(boundary_signature(&mesh) == boundary_signature(&other), || {
        format!("level {level}: boundary classification changed under relabeling")
    })
}

/// `grad V0 ⊆ V1`, `curl V1 ⊆ V2`, `div V2 ⊆ V3`, `curl∘grad = 0`, `div∘curl = 0`.
pub fn complex_inclusions(level: u32, samples: usize, seed: u64) -> Check {
    let r = complex_inclusion_check(&spaces(level), samples, seed);
    ensure(r.all_ok(), || format!("level {level}: {r:?}"))
}

pub fn trace_continuity(level: u32, samples: usize, seed: u64) -> Check {
    let r = trace_continuity_check(&spaces(level), samples, seed);
    ensure(r.all_ok(), || format!("level {level}: {r:?}"))
}

/// Reference functional matrices are well conditioned, and on every cell of
/// the mesh the DOF functionals reproduce any member of each space.
pub fn unisolvence(level: u32, seed: u64) -> Check {
    for (name, d) in [
        ("edge", ReferenceBasis::edge_functional_matrix()),
        ("face", ReferenceBasis::face_functional_matrix()),
    ] {
        let sv = d.singular_values();
        let cond = sv.max() / sv.min();
        ensure(cond < 1e6, || format!("{name} functional matrix condition {cond:e}"))?;
    }
    let s = spaces(level);
    let mesh = &s.mesh;
    let bases: Vec<CellBasis> = (0..mesh.num_cells()).map(|c| CellBasis::of_cell(mesh, c).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for space in [&s.v0, &s.v1, &s.v2, &s.v3] {
        let coeffs: Vec<f64> = (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let back = match space.kind() {
            SpaceKind::V0 | SpaceKind::V3 => space.interpolate_scalar_cellwise(|c, x| {
                let xr = bases[c].map.to_reference(&x);
                match space.eval_with(&bases[c], &coeffs, c, &xr).0 {
                    ShapeValue::Scalar(v) => v,
                    ShapeValue::Vector(_) => unreachable!(),
                }
            }),
            SpaceKind::V1 | SpaceKind::V2 => space.interpolate_vector_cellwise(|c, x| {
                let xr = bases[c].map.to_reference(&x);
                space.local_field(&bases[c], &coeffs, c).eval(&Vec3::from(xr))
            }),
        };
        let err = coeffs.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        ensure(err <= 1e-10, || format!("level {level}: {:?} interpolant misses its own member by {err:e}", space.kind()))?;
    }
    Ok(())
}

fn quadratic_form(a: &CsrMatrix, x: &[f64]) -> f64 {
    a.spmv(x).unwrap().iter().zip(x).map(|(y, x)| y * x).sum()
}

/// Mass-type, preconditioner and multiplier blocks are SPD; `F` is
/// symmetric positive semidefinite.
pub fn spd_blocks(level: u32, seed: u64) -> Check {
    let s = spaces(level);
    let sys = BlockSystem::assemble(&s, &benchmark_case_example2(50.0)).map_err(|e| e.to_string())?;
    for (name, a) in [("M", &sys.m), ("Q", &sys.q), ("Q_hat", &sys.q_hat), ("L", &sys.l), ("M_hat", &sys.m_hat)] {
        let ok = is_spd(a, 1e-12).map_err(|e| e.to_string())?;
        ensure(ok, || format!("level {level}: {name} fails the positive-pivot check"))?;
    }
    ensure(sys.f.asymmetry() <= 1e-12, || format!("level {level}: F is not symmetric"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = sys.f.frobenius_norm();
    for _ in 0..5 {
        let x: Vec<f64> = (0..sys.f.nrows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = quadratic_form(&sys.f, &x);
        let xx: f64 = x.iter().map(|v| v * v).sum();
        ensure(q >= -1e-12 * scale * xx, || format!("level {level}: xᵀFx = {q:e} < 0"))?;
    }
    Ok(())
}
