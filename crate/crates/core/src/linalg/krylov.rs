//! Restarted (flexible) GMRES and preconditioned CG.

use super::csr::CsrMatrix;
use crate::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Approximate inverse: `z ≈ A⁻¹ r`. May change between applications.
pub trait Preconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

/// Diagonal scaling by the inverse diagonal.
#[derive(Clone, Debug)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::SingularMatrix { pivot: Some(i) });
        }
        Ok(Self { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
        Ok(())
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for &mut P {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) -> Result<()> {
        (**self).apply(r, z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Run exactly this many iterations and ignore the tolerance.
    pub fixed_iterations: Option<usize>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 1000, restart: 200, fixed_iterations: None }
    }
}

impl KrylovConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn fixed(iterations: usize) -> Self {
        Self { rel_tol: 0.0, max_iter: iterations, restart: 200, fixed_iterations: Some(iterations) }
    }

    fn validate(&self) -> Result<()> {
        if self.fixed_iterations.is_none() && !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("relative tolerance must be positive, got {}", self.rel_tol)));
        }
        if self.restart == 0 {
            return Err(Error::Config("restart length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual norms, starting with the initial one (1 for `x0 = 0`).
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// True relative residual `‖b − Ax‖/‖b‖` of the returned iterate.
    pub final_residual: f64,
}

impl KrylovOutcome {
    /// Turns a non-converged outcome into an error.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.final_residual })
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn residual<A: LinearOperator + ?Sized>(a: &A, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn check_dims<A: LinearOperator + ?Sized>(a: &A, b: &[f64]) -> Result<()> {
    if a.dim() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.len() });
    }
    Ok(())
}

/// Flexible GMRES with right preconditioning. The preconditioner may differ
/// between iterations.
pub fn fgmres<A, P>(a: &A, mut m: P, b: &[f64], cfg: &KrylovConfig) -> Result<KrylovOutcome>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner,
{
    gmres_core(a, &mut m, b, cfg, true)
}

/// Right-preconditioned GMRES with a fixed preconditioner.
pub fn gmres<A, P>(a: &A, mut m: P, b: &[f64], cfg: &KrylovConfig) -> Result<KrylovOutcome>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner,
{
    gmres_core(a, &mut m, b, cfg, false)
}

/// Orthogonality loss that triggers a second Gram–Schmidt pass.
const REORTH_THRESHOLD: f64 = 1e-8;

fn gmres_core<A, P>(a: &A, m: &mut P, b: &[f64], cfg: &KrylovConfig, flexible: bool) -> Result<KrylovOutcome>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    cfg.validate()?;
    check_dims(a, b)?;
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome { x, iterations: 0, residual_history: vec![0.0], converged: true, final_residual: 0.0 });
    }
    let max_iter = cfg.fixed_iterations.unwrap_or(cfg.max_iter);
    let tol = if cfg.fixed_iterations.is_some() { 0.0 } else { cfg.rel_tol };
    let m_dim = cfg.restart.min(max_iter.max(1));

    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut converged = false;

    'outer: while iterations < max_iter {
        residual(a, &x, b, &mut r);
        let beta = norm(&r);
        if beta / bnorm <= tol {
            converged = true;
            break;
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m_dim + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(if flexible { m_dim } else { 0 });
        // Hessenberg columns after Givens rotations (upper triangular R).
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m_dim);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(m_dim);
        let mut g = vec![beta];
        let mut zj = vec![0.0; n];

        let mut k = 0;
        while k < m_dim && iterations < max_iter {
            m.apply(&v[k], &mut zj)?;
            a.apply(&zj, &mut w);
            if flexible {
                z.push(zj.clone());
            }
            let mut hk = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                hk[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let wn = norm(&w);
            let loss = v.iter().map(|vi| dot(&w, vi).abs()).fold(0.0, f64::max);
            if wn > 0.0 && loss / wn > REORTH_THRESHOLD {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    hk[i] += c;
                    axpy(-c, vi, &mut w);
                }
            }
            let wn = norm(&w);
            hk[k + 1] = wn;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (p, q) = (hk[i], hk[i + 1]);
                hk[i] = c * p + s * q;
                hk[i + 1] = -s * p + c * q;
            }
            let (p, q) = (hk[k], hk[k + 1]);
            let rho = p.hypot(q);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (p / rho, q / rho) };
            hk[k] = rho;
            hk[k + 1] = 0.0;
            cs.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            h.push(hk);
            iterations += 1;
            k += 1;
            let rel = g[k].abs() / bnorm;
            history.push(rel);
            let breakdown = wn <= f64::EPSILON * beta;
            if rel <= tol || breakdown {
                update(&mut x, &h, &g, k, if flexible { &z } else { &v }, flexible, m)?;
                if breakdown && rel > tol {
                    continue 'outer;
                }
                converged = true;
                break 'outer;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        update(&mut x, &h, &g, k, if flexible { &z } else { &v }, flexible, m)?;
    }

    residual(a, &x, b, &mut r);
    let final_residual = norm(&r) / bnorm;
    if cfg.fixed_iterations.is_some() {
        converged = true;
    }
    Ok(KrylovOutcome { x, iterations, residual_history: history, converged, final_residual })
}

/// Adds the Krylov correction `x += Z y` (flexible) or `x += M⁻¹ V y`.
fn update<P: Preconditioner + ?Sized>(
    x: &mut [f64],
    h: &[Vec<f64>],
    g: &[f64],
    k: usize,
    basis: &[Vec<f64>],
    flexible: bool,
    m: &mut P,
) -> Result<()> {
    if k == 0 {
        return Ok(());
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
    }
    if flexible {
        for (yj, zj) in y.iter().zip(basis) {
            axpy(*yj, zj, x);
        }
    } else {
        let mut t = vec![0.0; x.len()];
        for (yj, vj) in y.iter().zip(basis) {
            axpy(*yj, vj, &mut t);
        }
        let mut zt = vec![0.0; x.len()];
        m.apply(&t, &mut zt)?;
        axpy(1.0, &zt, x);
    }
    Ok(())
}

/// Preconditioned conjugate gradients for SPD operators.
pub fn cg<A, P>(a: &A, mut m: P, b: &[f64], cfg: &KrylovConfig) -> Result<KrylovOutcome>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner,
{
    cfg.validate()?;
    check_dims(a, b)?;
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome { x, iterations: 0, residual_history: vec![0.0], converged: true, final_residual: 0.0 });
    }
    let fixed = cfg.fixed_iterations;
    let max_iter = fixed.unwrap_or(cfg.max_iter);
    let tol = if fixed.is_some() { 0.0 } else { cfg.rel_tol };

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            if norm(&p) == 0.0 {
                converged = true;
                break;
            }
            return Err(Error::Indefinite { iteration: iterations, curvature: pq });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            converged = true;
            break;
        }
        m.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    residual(a, &x, b, &mut r);
    let final_residual = norm(&r) / bnorm;
    if fixed.is_some() {
        converged = true;
    }
    Ok(KrylovOutcome { x, iterations, residual_history: history, converged, final_residual })
}
