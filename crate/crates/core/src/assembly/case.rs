use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result, Vec3};

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>;

/// Closed-form solution `(J, φ, A, r)` with the derivatives needed by the
/// error norms.
#[derive(Clone)]
pub struct ExactSolution {
    pub j: VectorFn,
    pub j_div: ScalarFn,
    pub phi: ScalarFn,
    pub a: VectorFn,
    pub a_curl: VectorFn,
    pub r: ScalarFn,
}

/// Coefficients and data of one kinematic problem:
///
/// ```text
/// σ⁻¹ J + ∇φ − w × curl A = f1,   div J = 0,
/// −J + Rm⁻¹ curl curl A + ∇r = g,  div A = 0,
/// φ = φ_b and A × n = A_b × n on the boundary.
/// ```
#[derive(Clone)]
pub struct PhysicsCase {
    pub name: String,
    pub sigma: f64,
    pub rm: f64,
    pub velocity: VectorFn,
    pub g: VectorFn,
    pub f1: VectorFn,
    pub phi_boundary: ScalarFn,
    pub a_boundary: VectorFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for PhysicsCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysicsCase")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .field("rm", &self.rm)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

fn zero_vector() -> VectorFn {
    Arc::new(|_| Vec3::zeros())
}

fn zero_scalar() -> ScalarFn {
    Arc::new(|_| 0.0)
}

impl PhysicsCase {
    /// `η = 1/σ`.
    pub fn eta(&self) -> f64 {
        1.0 / self.sigma
    }

    /// `ν_m = 1/Rm`.
    pub fn nu_m(&self) -> f64 {
        1.0 / self.rm
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.rm > 0.0 && self.rm.is_finite()) {
            return Err(Error::Config(format!("Rm must be positive, got {}", self.rm)));
        }
        Ok(())
    }

    /// All data zero, `w = 0`.
    pub fn homogeneous(sigma: f64, rm: f64) -> Self {
        Self {
            name: "homogeneous".into(),
            sigma,
            rm,
            velocity: zero_vector(),
            g: zero_vector(),
            f1: zero_vector(),
            phi_boundary: zero_scalar(),
            a_boundary: zero_vector(),
            exact: None,
        }
    }

    pub fn with_velocity(mut self, w: VectorFn) -> Self {
        self.velocity = w;
        self
    }
}

/// Manufactured smooth solution with `σ = Rm = 1`.
pub fn manufactured_case_example1() -> PhysicsCase {
    manufactured_case(1.0, 1.0)
}

/// Manufactured smooth solution on the unit cube with `w = (x, y, z)`:
/// `J = (sin y, 0, x²)`, `φ = z`, `A = (0, cos x, 0)`, `r = 0`.
pub fn manufactured_case(sigma: f64, rm: f64) -> PhysicsCase {
    let j = |p: &Point| Vec3::new(p.y.sin(), 0.0, p.x * p.x);
    let a = |p: &Point| Vec3::new(0.0, p.x.cos(), 0.0);
    let a_curl = |p: &Point| Vec3::new(0.0, 0.0, -p.x.sin());
    let curl_curl_a = |p: &Point| Vec3::new(0.0, p.x.cos(), 0.0);
    let grad_phi = Vec3::new(0.0, 0.0, 1.0);
    let f1 = move |p: &Point| j(p) / sigma + grad_phi - p.cross(&a_curl(p));
    let g = move |p: &Point| -j(p) + curl_curl_a(p) / rm;
    PhysicsCase {
        name: format!("example1-sigma{sigma}-rm{rm}"),
        sigma,
        rm,
        velocity: Arc::new(|p| *p),
        g: Arc::new(g),
        f1: Arc::new(f1),
        phi_boundary: Arc::new(|p| p.z),
        a_boundary: Arc::new(a),
        exact: Some(ExactSolution {
            j: Arc::new(j),
            j_div: Arc::new(|_| 0.0),
            phi: Arc::new(|p| p.z),
            a: Arc::new(a),
            a_curl: Arc::new(a_curl),
            r: zero_scalar(),
        }),
    }
}

/// Rotating flow `w = 16x(1−x)y(1−y)(−sin θ, cos θ, 0)` about the `z` axis,
/// with `θ` the polar angle of `(x, y)`. `w = 0` on the axis.
pub fn rotating_velocity(p: &Point) -> Vec3 {
    let rho = p.x.hypot(p.y);
    if rho == 0.0 {
        return Vec3::zeros();
    }
    let s = 16.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y);
    Vec3::new(-s * p.y / rho, s * p.x / rho, 0.0)
}

/// Driven cavity benchmark with `σ = 1`.
pub fn benchmark_case_example2(rm: f64) -> PhysicsCase {
    benchmark_case(1.0, rm)
}

/// Driven cavity: rotating flow, `A_b = (0, 0, y)` so that the applied field
/// is `curl A_b = (1, 0, 0)`, zero sources and `φ_b = 0`.
pub fn benchmark_case(sigma: f64, rm: f64) -> PhysicsCase {
    PhysicsCase {
        name: format!("example2-sigma{sigma}-rm{rm}"),
        sigma,
        rm,
        velocity: Arc::new(rotating_velocity),
        g: zero_vector(),
        f1: zero_vector(),
        phi_boundary: zero_scalar(),
        a_boundary: Arc::new(|p| Vec3::new(0.0, 0.0, p.y)),
        exact: None,
    }
}
