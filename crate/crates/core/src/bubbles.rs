//! Scalar and spinor bubbles, the interaction density `V = U²|Φ|²`, residuals
//! of the coupled system on finite-difference grids, and the energies.
//!
//! With `x = y − ξ` and `ρ = λ² + |x|²`:
//!
//! * `Ū = 3^{1/4} λ^{1/2} ρ^{-1/2}`, `U = 3^{1/4} Ū`
//! * `Φ = (√3/2) · 2λ ρ^{-3/2} (λa − x·a)`
//! * `V = U²|Φ|² = 9λ³ ρ^{-3}`
//!
//! They satisfy `−ΔU = |Φ|²U` and `DΦ = U²Φ`.

use num_complex::Complex64;
use thiserror::Error;

use crate::clifford::{clifford_mul, dirac_apply, Spinor};
use crate::geometry::PointR3;
use crate::grid::{Grid3, GridError};
use crate::quadrature::{integrate_adaptive, radial_breaks, QuadratureSpec};

/// Coupling constants of the rescaled system `−Δu = λ₁|φ|²u`, `Dφ = μ₁u²φ`.
pub const LAMBDA1: f64 = 0.75;
pub const MU1: f64 = 1.5;

/// Unit-norm tolerance for the spinor parameter.
pub const SPINOR_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BubbleError {
    #[error("invalid bubble parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("quadrature not converged: error estimate {error:e} exceeds tolerance {tol:e}")]
    QuadratureNotConverged { error: f64, tol: f64 },
}

/// A point `(λ, ξ, a)` of the bubble manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleParams {
    lambda: f64,
    xi: PointR3,
    a: Spinor,
}

impl BubbleParams {
    pub fn new(lambda: f64, xi: PointR3, a: Spinor) -> Result<Self, BubbleError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(BubbleError::InvalidParams(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !xi.0.iter().all(|c| c.is_finite()) || !a.is_finite() {
            return Err(BubbleError::InvalidParams("non-finite input".into()));
        }
        if (a.norm() - 1.0).abs() > SPINOR_NORM_TOL {
            return Err(BubbleError::InvalidParams(format!(
                "spinor parameter must have unit norm, got {}",
                a.norm()
            )));
        }
        Ok(Self { lambda, xi, a })
    }

    /// `λ = 1`, `ξ = 0`, `a = (1, 0)`.
    pub fn standard() -> Self {
        Self {
            lambda: 1.0,
            xi: PointR3::ORIGIN,
            a: Spinor::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }

    pub fn with_scale(lambda: f64, xi: [f64; 3]) -> Result<Self, BubbleError> {
        Self::new(lambda, PointR3(xi), Self::standard().a)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi(&self) -> PointR3 {
        self.xi
    }

    pub fn a(&self) -> Spinor {
        self.a
    }

    fn offset(&self, y: PointR3) -> [f64; 3] {
        [y.0[0] - self.xi.0[0], y.0[1] - self.xi.0[1], y.0[2] - self.xi.0[2]]
    }

    fn rho(&self, x: &[f64; 3]) -> f64 {
        self.lambda * self.lambda + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }
}

/// Cubic box of half-width `half_width` centred on the bubble, `n` nodes per
/// axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub const MIN_NODES: usize = 16;

    pub fn new(half_width: f64, n: usize) -> Result<Self, BubbleError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(BubbleError::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n < Self::MIN_NODES {
            return Err(GridError::GridTooSmall(format!(
                "need at least {} nodes per axis, got {n}",
                Self::MIN_NODES
            ))
            .into());
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    fn sample<T, F>(&self, center: PointR3, f: F) -> Grid3<T>
    where
        T: Copy + Send + Sync,
        F: Fn(PointR3) -> T + Sync,
    {
        let origin = center.0.map(|c| c - self.half_width);
        Grid3::from_fn([self.n; 3], self.spacing(), origin, |y| f(PointR3(y)))
    }
}

pub fn ubar(p: &BubbleParams, y: PointR3) -> f64 {
    let x = p.offset(y);
    3f64.powf(0.25) * p.lambda.sqrt() / p.rho(&x).sqrt()
}

pub fn u_bubble(p: &BubbleParams, y: PointR3) -> f64 {
    3f64.sqrt() * p.lambda.sqrt() / p.rho(&p.offset(y)).sqrt()
}

/// Unnormalized spinor bubble `Φ̄`, with `|Φ̄| = 2λ/ρ`.
pub fn phibar_bubble(p: &BubbleParams, y: PointR3) -> Spinor {
    let x = p.offset(y);
    let g = 2.0 * p.lambda * p.rho(&x).powf(-1.5);
    (p.a.scale(p.lambda) - clifford_mul(x, &p.a)).scale(g)
}

pub fn phi_bubble(p: &BubbleParams, y: PointR3) -> Spinor {
    phibar_bubble(p, y).scale(0.5 * 3f64.sqrt())
}

/// `V_{λ,ξ}(y) = 9λ³ / (λ² + |y − ξ|²)³`.
pub fn v_kernel(lambda: f64, xi: PointR3, y: PointR3) -> f64 {
    let x = [y.0[0] - xi.0[0], y.0[1] - xi.0[1], y.0[2] - xi.0[2]];
    let rho = lambda * lambda + x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    9.0 * lambda.powi(3) / (rho * rho * rho)
}

/// Sup-norm residuals over interior nodes of
/// `−Δu − α|φ|²u` and `Dφ − βu²φ`.
fn residuals<U, P>(
    g: &GridSpec,
    center: PointR3,
    u: U,
    phi: P,
    alpha: f64,
    beta: f64,
) -> Result<(f64, f64), BubbleError>
where
    U: Fn(PointR3) -> f64 + Sync,
    P: Fn(PointR3) -> Spinor + Sync,
{
    let us = g.sample(center, &u);
    let phis = g.sample(center, &phi);
    let lap = us.laplacian()?;
    let dphi = dirac_apply(&phis)?;
    let [n0, n1, n2] = lap.dims();
    let mut scalar = 0.0f64;
    let mut spinor = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            for k in 0..n2 {
                let uu = us.get(i + 1, j + 1, k + 1);
                let ph = phis.get(i + 1, j + 1, k + 1);
                let r_s = -lap.get(i, j, k) - alpha * ph.norm_sq() * uu;
                let r_p = dphi.get(i, j, k) - ph.scale(beta * uu * uu);
                scalar = scalar.max(r_s.abs());
                spinor = spinor.max(r_p.norm());
            }
        }
    }
    Ok((scalar, spinor))
}

/// Residuals `(‖−ΔU − |Φ|²U‖_∞, ‖DΦ − U²Φ‖_∞)` on the grid centred at ξ.
pub fn residual_system(p: &BubbleParams, g: &GridSpec) -> Result<(f64, f64), BubbleError> {
    residual_pair(p, p, g)
}

/// Residuals with `U` taken from `pu` and `Φ` from `pphi`; the grid is
/// centred on `pu`. Mismatched parameters give a negative control.
pub fn residual_pair(
    pu: &BubbleParams,
    pphi: &BubbleParams,
    g: &GridSpec,
) -> Result<(f64, f64), BubbleError> {
    residuals(
        g,
        pu.xi,
        |y| u_bubble(pu, y),
        |y| phi_bubble(pphi, y),
        1.0,
        1.0,
    )
}

/// Residuals of `W̃ = (μ₁^{-1/2} U, λ₁^{-1/2} Φ)` in the system
/// `−Δu = λ₁|φ|²u`, `Dφ = μ₁u²φ`.
pub fn residual_rescaled(p: &BubbleParams, g: &GridSpec) -> Result<(f64, f64), BubbleError> {
    let cu = MU1.powf(-0.5);
    let cphi = LAMBDA1.powf(-0.5);
    residuals(
        g,
        p.xi,
        |y| cu * u_bubble(p, y),
        |y| phi_bubble(p, y).scale(cphi),
        LAMBDA1,
        MU1,
    )
}

/// A pair `(u, φ)` with the derivative data the energies need.
pub trait FieldPair: Sync {
    fn u(&self, y: PointR3) -> f64;
    fn grad_u(&self, y: PointR3) -> [f64; 3];
    fn phi(&self, y: PointR3) -> Spinor;
    fn dirac_phi(&self, y: PointR3) -> Spinor;
    /// Concentration point and length scale, used to place quadrature panels.
    fn center(&self) -> PointR3;
    fn scale(&self) -> f64;
}

impl FieldPair for BubbleParams {
    fn u(&self, y: PointR3) -> f64 {
        u_bubble(self, y)
    }

    fn grad_u(&self, y: PointR3) -> [f64; 3] {
        let x = self.offset(y);
        let c = -3f64.sqrt() * self.lambda.sqrt() * self.rho(&x).powf(-1.5);
        x.map(|xi| c * xi)
    }

    fn phi(&self, y: PointR3) -> Spinor {
        phi_bubble(self, y)
    }

    fn dirac_phi(&self, y: PointR3) -> Spinor {
        // D(gψ) = ∇g·ψ + g Dψ with D(λa − x·a) = 3a
        let x = self.offset(y);
        let rho = self.rho(&x);
        let g = 2.0 * self.lambda * rho.powf(-1.5);
        let dg = x.map(|xi| -6.0 * self.lambda * xi * rho.powf(-2.5));
        let psi = self.a.scale(self.lambda) - clifford_mul(x, &self.a);
        (clifford_mul(dg, &psi) + self.a.scale(3.0 * g)).scale(0.5 * 3f64.sqrt())
    }

    fn center(&self) -> PointR3 {
        self.xi
    }

    fn scale(&self) -> f64 {
        self.lambda
    }
}

fn integrate_fields<W, G>(w: &W, q: &QuadratureSpec, g: G) -> Result<f64, BubbleError>
where
    W: FieldPair,
    G: Fn(PointR3) -> f64 + Sync,
{
    let (c, s) = (w.center(), w.scale());
    let breaks = radial_breaks(&[1.0, q.radius]);
    let s3 = s * s * s;
    let integrand = |z: [f64; 3]| {
        let y = PointR3([c.0[0] + s * z[0], c.0[1] + s * z[1], c.0[2] + s * z[2]]);
        [s3 * g(y)]
    };
    let out = integrate_adaptive(&integrand, &breaks, q.per_panel(breaks.len() + 1), q.n_a, q.tol, q.max_refine);
    if !out.converged {
        return Err(BubbleError::QuadratureNotConverged {
            error: out.error,
            tol: q.tol,
        });
    }
    Ok(out.value[0])
}

/// `J₀(u, φ) = ½∫ |∇u|² + Re⟨Dφ, φ⟩ − u²|φ|²`.
pub fn energy_j0<W: FieldPair>(w: &W, q: &QuadratureSpec) -> Result<f64, BubbleError> {
    q.validate().map_err(BubbleError::InvalidParams)?;
    integrate_fields(w, q, |y| {
        let du = w.grad_u(y);
        let u = w.u(y);
        let phi = w.phi(y);
        let kinetic = du[0] * du[0] + du[1] * du[1] + du[2] * du[2];
        0.5 * (kinetic + w.dirac_phi(y).inner(&phi).re - u * u * phi.norm_sq())
    })
}

/// `G(u, φ) = ½∫ h u²|φ|²`.
pub fn energy_g<W, H>(h: H, w: &W, q: &QuadratureSpec) -> Result<f64, BubbleError>
where
    W: FieldPair,
    H: Fn(PointR3) -> f64 + Sync,
{
    q.validate().map_err(BubbleError::InvalidParams)?;
    integrate_fields(w, q, |y| {
        let u = w.u(y);
        0.5 * h(y) * u * u * w.phi(y).norm_sq()
    })
}

/// `J_ε = J₀ − εG`.
pub fn energy_jeps<W, H>(epsilon: f64, h: H, w: &W, q: &QuadratureSpec) -> Result<f64, BubbleError>
where
    W: FieldPair,
    H: Fn(PointR3) -> f64 + Sync,
{
    let j0 = energy_j0(w, q)?;
    if epsilon == 0.0 {
        return Ok(j0);
    }
    Ok(j0 - epsilon * energy_g(h, w, q)?)
}
