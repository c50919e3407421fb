//! Sub-block matrices and right-hand sides of the discrete kinematics
//! system in field order `(J, φ, A, r)`:
//!
//! ```text
//! | M   Gᵀ  K   0  | |J|   |b_J|
//! | G   0   0   0  | |φ| = |b_φ|
//! | X   0   F   Bᵀ | |A|   |b_A|
//! | 0   0   B   0  | |r|   |b_r|
//! ```
//!
//! Essential conditions on `A` and `r` are imposed by eliminating the
//! boundary DOFs of `V1` and `V0`; nonzero tangential data for `A` is lifted
//! to the right-hand side.

mod case;

use std::path::Path;

pub use case::{
    benchmark_case, benchmark_case_example2, manufactured_case, manufactured_case_example1, rotating_velocity,
    ExactSolution, PhysicsCase, ScalarFn, VectorFn,
};

use crate::fe::reference::REF_VERTICES;
use crate::fe::{CellBasis, FeSpace, Spaces};
use crate::linalg::{mmio, CsrMatrix};
use crate::mesh::LOCAL_FACES;
use crate::quadrature::{tet_rule, triangle_rule, TetRule, ASSEMBLY_DEGREE};
use crate::{Error, Result, Vec3};

/// Exact degree for products of two shape functions whose derivatives or
/// values are at most linear.
const POLY_DEGREE: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockName {
    M,
    Gt,
    G,
    K,
    X,
    F,
    Bt,
    B,
    Fw,
    FwHat,
    MHat,
    Q,
    QHat,
    L,
}

impl BlockName {
    pub const ALL: [BlockName; 14] = [
        BlockName::M,
        BlockName::Gt,
        BlockName::G,
        BlockName::K,
        BlockName::X,
        BlockName::F,
        BlockName::Bt,
        BlockName::B,
        BlockName::Fw,
        BlockName::FwHat,
        BlockName::MHat,
        BlockName::Q,
        BlockName::QHat,
        BlockName::L,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockName::M => "M",
            BlockName::Gt => "Gt",
            BlockName::G => "G",
            BlockName::K => "K",
            BlockName::X => "X",
            BlockName::F => "F",
            BlockName::Bt => "Bt",
            BlockName::B => "B",
            BlockName::Fw => "Fw",
            BlockName::FwHat => "Fw_hat",
            BlockName::MHat => "M_hat",
            BlockName::Q => "Q",
            BlockName::QHat => "Q_hat",
            BlockName::L => "L",
        }
    }

    fn spaces<'a>(self, s: &'a Spaces) -> (&'a FeSpace, &'a FeSpace) {
        match self {
            BlockName::M | BlockName::MHat => (&s.v2, &s.v2),
            BlockName::Gt => (&s.v2, &s.v3),
            BlockName::G => (&s.v3, &s.v2),
            BlockName::K => (&s.v2, &s.v1),
            BlockName::X => (&s.v1, &s.v2),
            BlockName::F | BlockName::Fw | BlockName::FwHat => (&s.v1, &s.v1),
            BlockName::Bt => (&s.v1, &s.v0),
            BlockName::B => (&s.v0, &s.v1),
            BlockName::Q | BlockName::QHat => (&s.v3, &s.v3),
            BlockName::L => (&s.v0, &s.v0),
        }
    }
}

/// Loops over cells and scatters the local matrices `rows.local_dim ×
/// cols.local_dim` (row-major) produced by `kernel`.
fn assemble_cells(
    rows: &FeSpace,
    cols: &FeSpace,
    mut kernel: impl FnMut(usize, &CellBasis, &mut [f64]),
) -> Result<CsrMatrix> {
    let mesh = rows.mesh();
    if !std::sync::Arc::ptr_eq(mesh, cols.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let (nr, nc) = (rows.kind().local_dim(), cols.kind().local_dim());
    let mut local = vec![0.0; nr * nc];
    let mut trip = Vec::with_capacity(mesh.num_cells() * nr * nc);
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        local.iter_mut().for_each(|v| *v = 0.0);
        kernel(c, &cb, &mut local);
        let (rd, cd) = (rows.local_dofs(c), cols.local_dofs(c));
        for (i, &gi) in rd.iter().enumerate() {
            for (j, &gj) in cd.iter().enumerate() {
                let v = local[i * nc + j];
                if v != 0.0 {
                    trip.push((gi, gj, v));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(rows.n_dofs(), cols.n_dofs(), trip))
}

fn vec3(p: &[f64; 3]) -> Vec3 {
    Vec3::from(*p)
}

/// Shape-function values of a vector space at every point of `rule`.
fn tabulate(fields: &[crate::fe::reference::AffineField; 12], rule: &TetRule) -> Vec<[Vec3; 12]> {
    rule.points.iter().map(|p| fields.map(|f| f.eval(&vec3(p)))).collect()
}

/// `(u_j, u_i)` for the face (`face = true`) or edge shape functions.
fn vector_mass(space: &FeSpace, face: bool) -> Result<CsrMatrix> {
    let rule = tet_rule(POLY_DEGREE);
    assemble_cells(space, space, |_, cb, local| {
        let vals = tabulate(if face { &cb.face } else { &cb.edge }, &rule);
        let scale = cb.map.det.abs();
        for (v, w) in vals.iter().zip(&rule.weights) {
            for i in 0..12 {
                for j in 0..12 {
                    local[i * 12 + j] += w * scale * v[i].dot(&v[j]);
                }
            }
        }
    })
}

fn graddiv(spaces: &Spaces) -> Result<CsrMatrix> {
    assemble_cells(&spaces.v2, &spaces.v2, |_, cb, local| {
        let vol = cb.map.volume();
        for i in 0..12 {
            for j in 0..12 {
                local[i * 12 + j] = vol * cb.face_div[i] * cb.face_div[j];
            }
        }
    })
}

/// `(ψ_j, div φ_i)`, rows `V2`, columns `V3`.
fn div_pairing(spaces: &Spaces) -> Result<CsrMatrix> {
    assemble_cells(&spaces.v2, &spaces.v3, |_, cb, local| {
        let vol = cb.map.volume();
        for i in 0..12 {
            local[i] = vol * cb.face_div[i];
        }
    })
}

/// `(curl a_j, curl a_i)`.
fn curl_curl(spaces: &Spaces) -> Result<CsrMatrix> {
    assemble_cells(&spaces.v1, &spaces.v1, |_, cb, local| {
        let vol = cb.map.volume();
        for i in 0..12 {
            for j in 0..12 {
                local[i * 12 + j] = vol * cb.edge_curl[i].dot(&cb.edge_curl[j]);
            }
        }
    })
}

/// `(curl a_j, w × a_i)`.
fn w_coupling(spaces: &Spaces, case: &PhysicsCase) -> Result<CsrMatrix> {
    let rule = tet_rule(ASSEMBLY_DEGREE);
    assemble_cells(&spaces.v1, &spaces.v1, |_, cb, local| {
        let vals = tabulate(&cb.edge, &rule);
        let scale = cb.map.det.abs();
        for ((p, v), w) in rule.points.iter().zip(&vals).zip(&rule.weights) {
            let wx = (case.velocity)(&cb.map.to_physical(p));
            if wx == Vec3::zeros() {
                continue;
            }
            for i in 0..12 {
                let wa = wx.cross(&v[i]) * (w * scale);
                for j in 0..12 {
                    local[i * 12 + j] += cb.edge_curl[j].dot(&wa);
                }
            }
        }
    })
}

/// `K_ij = (curl a_j × w, φ_i)`, rows `V2`, columns `V1`.
fn k_coupling(spaces: &Spaces, case: &PhysicsCase) -> Result<CsrMatrix> {
    let rule = tet_rule(ASSEMBLY_DEGREE);
    assemble_cells(&spaces.v2, &spaces.v1, |_, cb, local| {
        let vals = tabulate(&cb.face, &rule);
        let scale = cb.map.det.abs();
        for ((p, v), w) in rule.points.iter().zip(&vals).zip(&rule.weights) {
            let wx = (case.velocity)(&cb.map.to_physical(p));
            if wx == Vec3::zeros() {
                continue;
            }
            let cw: [Vec3; 12] = cb.edge_curl.map(|c| c.cross(&wx) * (w * scale));
            for i in 0..12 {
                for j in 0..12 {
                    local[i * 12 + j] += cw[j].dot(&v[i]);
                }
            }
        }
    })
}

/// `(φ_j, a_i)`, rows `V1`, columns `V2`.
fn edge_face_mass(spaces: &Spaces) -> Result<CsrMatrix> {
    let rule = tet_rule(POLY_DEGREE);
    assemble_cells(&spaces.v1, &spaces.v2, |_, cb, local| {
        let ev = tabulate(&cb.edge, &rule);
        let fv = tabulate(&cb.face, &rule);
        let scale = cb.map.det.abs();
        for ((e, f), w) in ev.iter().zip(&fv).zip(&rule.weights) {
            for i in 0..12 {
                for j in 0..12 {
                    local[i * 12 + j] += w * scale * e[i].dot(&f[j]);
                }
            }
        }
    })
}

/// `(∇s_j, a_i)`, rows `V1`, columns `V0`.
fn grad_pairing(spaces: &Spaces) -> Result<CsrMatrix> {
    let rule = tet_rule(POLY_DEGREE);
    assemble_cells(&spaces.v1, &spaces.v0, |_, cb, local| {
        let ev = tabulate(&cb.edge, &rule);
        let scale = cb.map.det.abs();
        for ((p, e), w) in rule.points.iter().zip(&ev).zip(&rule.weights) {
            let (_, g) = cb.p2(p);
            for i in 0..12 {
                for j in 0..10 {
                    local[i * 10 + j] += w * scale * e[i].dot(&g[j]);
                }
            }
        }
    })
}

fn p0_mass(spaces: &Spaces) -> Result<CsrMatrix> {
    assemble_cells(&spaces.v3, &spaces.v3, |_, cb, local| local[0] = cb.map.volume())
}

fn p2_stiffness(spaces: &Spaces) -> Result<CsrMatrix> {
    let rule = tet_rule(POLY_DEGREE);
    assemble_cells(&spaces.v0, &spaces.v0, |_, cb, local| {
        let scale = cb.map.det.abs();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (_, g) = cb.p2(p);
            for i in 0..10 {
                for j in 0..10 {
                    local[i * 10 + j] += w * scale * g[i].dot(&g[j]);
                }
            }
        }
    })
}

/// Unreduced block on the full DOF sets of its row and column spaces.
pub fn assemble_full_block(name: BlockName, spaces: &Spaces, case: &PhysicsCase) -> Result<CsrMatrix> {
    case.validate()?;
    let (eta, nu, sigma) = (case.eta(), case.nu_m(), case.sigma);
    Ok(match name {
        BlockName::M => vector_mass(&spaces.v2, true)?.scaled(eta),
        BlockName::Gt => div_pairing(spaces)?.scaled(-1.0),
        BlockName::G => div_pairing(spaces)?.scaled(-1.0).transpose(),
        BlockName::K => k_coupling(spaces, case)?,
        BlockName::X => edge_face_mass(spaces)?.scaled(-1.0),
        BlockName::F => curl_curl(spaces)?.scaled(nu),
        BlockName::Bt => grad_pairing(spaces)?,
        BlockName::B => grad_pairing(spaces)?.transpose(),
        BlockName::Fw => curl_curl(spaces)?.scaled(nu).add(sigma, &w_coupling(spaces, case)?)?,
        BlockName::FwHat => curl_curl(spaces)?
            .scaled(nu)
            .add(sigma, &w_coupling(spaces, case)?)?
            .add(1.0, &vector_mass(&spaces.v1, false)?)?,
        BlockName::MHat => vector_mass(&spaces.v2, true)?.add(1.0, &graddiv(spaces)?)?.scaled(1.0 / sigma),
        BlockName::Q => p0_mass(spaces)?,
        BlockName::QHat => p0_mass(spaces)?.scaled(sigma),
        BlockName::L => p2_stiffness(spaces)?,
    })
}

/// Removes constrained rows and columns.
pub fn reduce(m: &CsrMatrix, rows: &FeSpace, cols: &FeSpace) -> CsrMatrix {
    let free = rows.free_dofs();
    let map = cols.reduced_index();
    let ncols = cols.n_dofs() - cols.n_constrained();
    m.select(&free, &map, ncols)
}

/// Block on the reduced DOF layout.
pub fn assemble_block(name: BlockName, spaces: &Spaces, case: &PhysicsCase) -> Result<CsrMatrix> {
    let (r, c) = name.spaces(spaces);
    Ok(reduce(&assemble_full_block(name, spaces, case)?, r, c))
}

/// Load vector `(f, v_i)` of a vector field against the `V1` or `V2`
/// shape functions.
pub fn vector_load(space: &FeSpace, f: &VectorFn) -> Result<Vec<f64>> {
    let rule = tet_rule(ASSEMBLY_DEGREE);
    let face = match space.kind() {
        crate::fe::SpaceKind::V2 => true,
        crate::fe::SpaceKind::V1 => false,
        other => return Err(Error::Config(format!("vector load needs V1 or V2, got {other:?}"))),
    };
    let mesh = space.mesh();
    let mut out = vec![0.0; space.n_dofs()];
    for c in 0..mesh.num_cells() {
        let cb = CellBasis::of_cell(mesh, c)?;
        let fields = if face { &cb.face } else { &cb.edge };
        let scale = cb.map.det.abs();
        let dofs = space.local_dofs(c);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(&cb.map.to_physical(p)) * (w * scale);
            let xr = vec3(p);
            for (k, &d) in dofs.iter().enumerate() {
                out[d] += fields[k].eval(&xr).dot(&fx);
            }
        }
    }
    Ok(out)
}

/// `∫_Γ φ_b (v_i · n)` over the boundary faces, for `v_i ∈ V2`.
pub fn boundary_flux_load(spaces: &Spaces, phi_b: &ScalarFn) -> Result<Vec<f64>> {
    let mesh = &spaces.mesh;
    let rule = triangle_rule(ASSEMBLY_DEGREE);
    let mut out = vec![0.0; spaces.v2.n_dofs()];
    for (f, _) in mesh.boundary().faces.iter().enumerate().filter(|(_, &b)| b) {
        let c = mesh.face_cells(f).next().expect("boundary face has a cell");
        let cb = CellBasis::of_cell(mesh, c)?;
        let sc = mesh.sorted_cell(c);
        let k = sc.faces.iter().position(|&g| g as usize == f).expect("face belongs to its cell");
        let [a, b, cc] = LOCAL_FACES[k].map(|i| vec3(&REF_VERTICES[i]));
        let [xa, xb, xc] = [a, b, cc].map(|v| cb.map.to_physical(&c3(&v)));
        let opposite = cb.map.to_physical(&REF_VERTICES[k]);
        let mut n = (xb - xa).cross(&(xc - xa));
        if n.dot(&(xa - opposite)) < 0.0 {
            n = -n;
        }
        let dofs = spaces.v2.local_dofs(c);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let xr = a + p[0] * (b - a) + p[1] * (cc - a);
            let x = cb.map.to_physical(&c3(&xr));
            let phin = n * (w * phi_b(&x));
            for (kk, &d) in dofs.iter().enumerate() {
                out[d] += cb.face[kk].eval(&xr).dot(&phin);
            }
        }
    }
    Ok(out)
}

fn c3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// `V1` coefficient vector that carries the tangential boundary data on the
/// constrained DOFs and vanishes elsewhere.
pub fn boundary_lift(spaces: &Spaces, a_b: &VectorFn) -> Vec<f64> {
    let mut lift = spaces.v1.interpolate_vector(|x| a_b(&x));
    for (v, &c) in lift.iter_mut().zip(spaces.v1.constrained()) {
        if !c {
            *v = 0.0;
        }
    }
    lift
}

/// Right-hand sides `(b_J, b_φ, b_A, b_r)` on the reduced layout.
pub fn assemble_rhs(spaces: &Spaces, case: &PhysicsCase) -> Result<[Vec<f64>; 4]> {
    let k = k_coupling(spaces, case)?;
    let f = curl_curl(spaces)?.scaled(case.nu_m());
    let bt = grad_pairing(spaces)?;
    rhs_from_blocks(spaces, case, &k, &f, &bt).map(|(r, _)| r)
}

fn rhs_from_blocks(
    spaces: &Spaces,
    case: &PhysicsCase,
    k: &CsrMatrix,
    f: &CsrMatrix,
    bt: &CsrMatrix,
) -> Result<([Vec<f64>; 4], Vec<f64>)> {
    case.validate()?;
    let lift = boundary_lift(spaces, &case.a_boundary);
    let mut b_j = vector_load(&spaces.v2, &case.f1)?;
    let flux = boundary_flux_load(spaces, &case.phi_boundary)?;
    b_j.iter_mut().zip(&flux).for_each(|(b, g)| *b -= g);
    k.mul_vec_add(-1.0, &lift, &mut b_j);

    let b_phi = vec![0.0; spaces.v3.n_dofs()];

    let mut b_a_full = vector_load(&spaces.v1, &case.g)?;
    f.mul_vec_add(-1.0, &lift, &mut b_a_full);
    let b_a = spaces.v1.free_dofs().iter().map(|&i| b_a_full[i]).collect();

    let mut b_r_full = vec![0.0; spaces.v0.n_dofs()];
    bt.transpose().mul_vec_add(-1.0, &lift, &mut b_r_full);
    let b_r = spaces.v0.free_dofs().iter().map(|&i| b_r_full[i]).collect();
    Ok(([b_j, b_phi, b_a, b_r], lift))
}

/// All blocks and right-hand sides on the reduced layout.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub m: CsrMatrix,
    pub gt: CsrMatrix,
    pub g: CsrMatrix,
    pub k: CsrMatrix,
    pub x: CsrMatrix,
    pub f: CsrMatrix,
    pub bt: CsrMatrix,
    pub b: CsrMatrix,
    pub fw: CsrMatrix,
    pub fw_hat: CsrMatrix,
    pub m_hat: CsrMatrix,
    pub q: CsrMatrix,
    pub q_hat: CsrMatrix,
    pub l: CsrMatrix,
    /// `(b_J, b_φ, b_A, b_r)`.
    pub rhs: [Vec<f64>; 4],
    /// Full `V1` vector with the boundary data on constrained DOFs.
    pub a_lift: Vec<f64>,
    /// Reduced `(J, φ, A, r)` sizes.
    pub sizes: [usize; 4],
}

impl BlockSystem {
    pub fn assemble(spaces: &Spaces, case: &PhysicsCase) -> Result<Self> {
        case.validate()?;
        let (eta, nu, sigma) = (case.eta(), case.nu_m(), case.sigma);
        let (v0, v1, v2, v3) = (&spaces.v0, &spaces.v1, &spaces.v2, &spaces.v3);

        let mass2 = vector_mass(v2, true)?;
        let gd = graddiv(spaces)?;
        let gt_full = div_pairing(spaces)?.scaled(-1.0);
        let k_full = k_coupling(spaces, case)?;
        let x_full = edge_face_mass(spaces)?.scaled(-1.0);
        let f_full = curl_curl(spaces)?.scaled(nu);
        let w_full = w_coupling(spaces, case)?;
        let mass1 = vector_mass(v1, false)?;
        let bt_full = grad_pairing(spaces)?;
        let q_full = p0_mass(spaces)?;
        let l_full = p2_stiffness(spaces)?;

        let f = reduce(&f_full, v1, v1);
        let fw = f.add(sigma, &reduce(&w_full, v1, v1))?;
        let fw_hat = fw.add(1.0, &reduce(&mass1, v1, v1))?;
        let gt = gt_full;
        let g = gt.transpose();
        let bt = reduce(&bt_full, v1, v0);
        let b = bt.transpose();
        let (rhs, a_lift) = rhs_from_blocks(spaces, case, &k_full, &f_full, &bt_full)?;
        let sizes = [v2.n_dofs(), v3.n_dofs(), v1.n_dofs() - v1.n_constrained(), v0.n_dofs() - v0.n_constrained()];
        Ok(Self {
            m: mass2.scaled(eta),
            m_hat: mass2.add(1.0, &gd)?.scaled(1.0 / sigma),
            gt,
            g,
            k: reduce(&k_full, v2, v1),
            x: reduce(&x_full, v1, v2),
            f,
            bt,
            b,
            fw,
            fw_hat,
            q_hat: q_full.scaled(sigma),
            q: q_full,
            l: reduce(&l_full, v0, v0),
            rhs,
            a_lift,
            sizes,
        })
    }

    pub fn block(&self, name: BlockName) -> &CsrMatrix {
        match name {
            BlockName::M => &self.m,
            BlockName::Gt => &self.gt,
            BlockName::G => &self.g,
            BlockName::K => &self.k,
            BlockName::X => &self.x,
            BlockName::F => &self.f,
            BlockName::Bt => &self.bt,
            BlockName::B => &self.b,
            BlockName::Fw => &self.fw,
            BlockName::FwHat => &self.fw_hat,
            BlockName::MHat => &self.m_hat,
            BlockName::Q => &self.q,
            BlockName::QHat => &self.q_hat,
            BlockName::L => &self.l,
        }
    }

    /// Start of each field in the concatenated vector, plus the total.
    pub fn offsets(&self) -> [usize; 5] {
        let s = self.sizes;
        [0, s[0], s[0] + s[1], s[0] + s[1] + s[2], s.iter().sum()]
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn full_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_blocks(&[
            vec![Some(&self.m), Some(&self.gt), Some(&self.k), None],
            vec![Some(&self.g), None, None, None],
            vec![Some(&self.x), None, Some(&self.f), Some(&self.bt)],
            vec![None, None, Some(&self.b), None],
        ])
        .expect("block shapes are consistent by construction")
    }

    pub fn rhs_vector(&self) -> Vec<f64> {
        self.rhs.concat()
    }

    /// Splits a concatenated vector into its four fields.
    pub fn split<'a>(&self, x: &'a [f64]) -> [&'a [f64]; 4] {
        let o = self.offsets();
        [&x[o[0]..o[1]], &x[o[1]..o[2]], &x[o[2]..o[3]], &x[o[3]..o[4]]]
    }

    /// Writes every block, the full matrix and the right-hand side as
    /// Matrix Market files into `dir`.
    pub fn export_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        for name in BlockName::ALL {
            mmio::write_matrix(self.block(name), open(&format!("{}.mtx", name.as_str()))?)?;
        }
        mmio::write_matrix(&self.full_matrix(), open("A.mtx")?)?;
        mmio::write_vector(&self.rhs_vector(), open("b.mtx")?)?;
        Ok(())
    }
}

/// Inserts reduced coefficients into a full vector whose constrained
/// entries come from `fixed`.
pub fn expand(space: &FeSpace, reduced: &[f64], fixed: Option<&[f64]>) -> Vec<f64> {
    let mut full = match fixed {
        Some(f) => f.to_vec(),
        None => vec![0.0; space.n_dofs()],
    };
    for (v, &i) in reduced.iter().zip(&space.free_dofs()) {
        full[i] = *v;
    }
    full
}
