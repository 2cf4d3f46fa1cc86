//! Brouwer degree of vector fields on balls in ℝⁿ, `n ∈ {2, 3, 4}`.
//!
//! Two independent methods:
//!
//! * [`kronecker_degree`] integrates the pullback of the normalized volume form
//!   of `S^{n−1}` by `F/|F|` over the boundary sphere,
//!   `deg = (1/|S^{n−1}|) ∫ det[F, DF·t₁, …, DF·t_{n−1}] / |F|ⁿ`,
//!   on a product mesh in hyperspherical angles.
//! * [`zero_count_degree`] locates the zeros by seeded Newton iterations and
//!   sums `sign det DF`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::PointR3;
use crate::jet::{Jet2, Scalar};
use crate::morse::PerturbationFunction;
use crate::quadrature::{gauss_legendre, QuadratureSpec};
use crate::reduced_functional::{gamma_jet_estimate, Chart, GammaError, Order};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DegreeError {
    #[error("field nearly vanishes on the boundary (min |F| = {min:e}, max |F| = {max:e}); {advice}")]
    BoundaryZero { min: f64, max: f64, advice: String },
    #[error("zero at {location:?} is singular (det DF = {det:e})")]
    SingularZero { location: Vec<f64>, det: f64 },
    #[error("boundary integral {value} is not within 0.2 of an integer after refinement")]
    NotConverged { value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("field evaluation failed: {0}")]
    Field(String),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainBall {
    center: Vec<f64>,
    radius: f64,
}

impl DomainBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, DegreeError> {
        if !(2..=4).contains(&center.len()) {
            return Err(DegreeError::InvalidInput(format!(
                "dimension must be 2, 3 or 4, got {}",
                center.len()
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(DegreeError::InvalidInput(format!("bad ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// `B_s`: centre `(s, 0, 0, 0)`, radius `s − 1/s`, contained in `λ ≥ 1/s`.
pub fn bs_domain(s: f64) -> Result<DomainBall, DegreeError> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(DegreeError::InvalidInput(format!("s must exceed 1, got {s}")));
    }
    DomainBall::new(vec![s, 0.0, 0.0, 0.0], s - 1.0 / s)
}

type FieldFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, DegreeError> + Sync + 'a;
type JacobianFn<'a> = dyn Fn(&[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), DegreeError> + Sync + 'a;

/// A vector field `F: ℝⁿ → ℝⁿ`, optionally with its Jacobian. Without one,
/// directional derivatives are taken by central differences.
pub struct VectorFieldProbe<'a> {
    dim: usize,
    field: Box<FieldFn<'a>>,
    jacobian: Option<Box<JacobianFn<'a>>>,
}

impl<'a> VectorFieldProbe<'a> {
    pub fn new<F>(dim: usize, field: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, DegreeError> + Sync + 'a,
    {
        Self {
            dim,
            field: Box::new(field),
            jacobian: None,
        }
    }

    /// Supplies an evaluator returning `(F(x), DF(x))`, rows indexed by
    /// component.
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), DegreeError> + Sync + 'a,
    {
        self.jacobian = Some(Box::new(jac));
        self
    }

    /// Linear field `x ↦ A (x − x₀)`.
    pub fn linear(matrix: Vec<Vec<f64>>, origin: Vec<f64>) -> VectorFieldProbe<'static> {
        let dim = origin.len();
        let (m1, o1) = (matrix.clone(), origin.clone());
        let apply = move |m: &[Vec<f64>], o: &[f64], x: &[f64]| -> Vec<f64> {
            m.iter()
                .map(|row| row.iter().zip(x.iter().zip(o)).map(|(a, (xi, oi))| a * (xi - oi)).sum())
                .collect()
        };
        VectorFieldProbe::new(dim, move |x| Ok(apply(&m1, &o1, x)))
            .with_jacobian(move |x| Ok((apply(&matrix, &origin, x), matrix.clone())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, DegreeError> {
        (self.field)(x)
    }

    fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// `F(x)` and `DF(x)·dirs[i]`.
    fn eval_directional(&self, x: &[f64], dirs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), DegreeError> {
        if let Some(jac) = &self.jacobian {
            let (f, j) = jac(x)?;
            let d = dirs
                .iter()
                .map(|t| j.iter().map(|row| row.iter().zip(t).map(|(a, b)| a * b).sum()).collect())
                .collect();
            return Ok((f, d));
        }
        let f = self.eval(x)?;
        let scale = x.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let mut out = Vec::with_capacity(dirs.len());
        for t in dirs {
            let tn = t.iter().map(|c| c * c).sum::<f64>().sqrt();
            let h = 1e-6 * scale / tn.max(1e-300);
            let xp: Vec<f64> = x.iter().zip(t).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(t).map(|(a, b)| a - h * b).collect();
            let (fp, fm) = (self.eval(&xp)?, self.eval(&xm)?);
            out.push(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect());
        }
        Ok((f, out))
    }

    /// `F(x)` and the full Jacobian.
    fn eval_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), DegreeError> {
        let basis: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let (f, cols) = self.eval_directional(x, &basis)?;
        let jac = (0..self.dim).map(|r| (0..self.dim).map(|c| cols[c][r]).collect()).collect();
        Ok((f, jac))
    }
}

/// Resolution of the boundary mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    /// Gauss nodes per polar panel; the azimuth uses `2·density` points.
    pub density: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { density: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeResult {
    pub degree: i64,
    /// Boundary integral before rounding.
    pub raw: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub evaluations: usize,
    pub density: usize,
}

/// Surface measure of the unit sphere `S^{n−1}`.
fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * PI,
    }
}

/// A boundary node: point, tangent vectors `∂x/∂a_i`, and quadrature weight
/// for the parameter measure.
struct BoundaryNode {
    x: Vec<f64>,
    tangents: Vec<Vec<f64>>,
    weight: f64,
}

/// Hyperspherical angles `a₁ … a_{n−2} ∈ [0, π]`, `φ ∈ [0, 2π)`. The first
/// polar angle is split into panels graded towards `a₁ = 0`. When `flip` is
/// set the pole `a₁ = 0` is turned to `−e₁` by the rotation
/// `diag(−1, −1, 1, 1)`.
fn boundary_mesh(d: &DomainBall, density: usize, flip: bool) -> Vec<BoundaryNode> {
    let n = d.dim();
    let m = density.max(2);
    let polar_first: Vec<(f64, f64)> = if n == 2 {
        Vec::new()
    } else {
        [0.0, PI / 16.0, PI / 8.0, PI / 4.0, PI / 2.0, PI]
            .windows(2)
            .flat_map(|w| gauss_legendre(m, w[0], w[1]))
            .collect()
    };
    let polar_other: Vec<(f64, f64)> = if n == 4 {
        [0.0, PI / 2.0, PI]
            .windows(2)
            .flat_map(|w| gauss_legendre(m, w[0], w[1]))
            .collect()
    } else {
        Vec::new()
    };
    let n_phi = 4 * m;
    let phis: Vec<(f64, f64)> = (0..n_phi)
        .map(|j| ((j as f64 + 0.5) * 2.0 * PI / n_phi as f64, 2.0 * PI / n_phi as f64))
        .collect();

    let mut params: Vec<(Vec<f64>, f64)> = Vec::new();
    match n {
        2 => params.extend(phis.iter().map(|&(p, w)| (vec![p], w))),
        3 => {
            for &(a, wa) in &polar_first {
                for &(p, wp) in &phis {
                    params.push((vec![a, p], wa * wp));
                }
            }
        }
        _ => {
            for &(a, wa) in &polar_first {
                for &(b, wb) in &polar_other {
                    for &(p, wp) in &phis {
                        params.push((vec![a, b, p], wa * wb * wp));
                    }
                }
            }
        }
    }

    params
        .into_iter()
        .map(|(angles, weight)| {
            let (omega, d_omega) = hyperspherical(&angles, n, flip);
            BoundaryNode {
                x: (0..n).map(|i| d.center[i] + d.radius * omega[i]).collect(),
                tangents: d_omega
                    .into_iter()
                    .map(|t| t.into_iter().map(|c| d.radius * c).collect())
                    .collect(),
                weight,
            }
        })
        .collect()
}

/// Unit vector for the given angles and its derivatives with respect to each
/// angle.
fn hyperspherical(angles: &[f64], n: usize, flip: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut seeded = [Jet2::<3>::constant(0.0); 3];
    for (i, a) in angles.iter().enumerate() {
        seeded[i] = Jet2::variable(*a, i);
    }
    let one = Jet2::<3>::constant(1.0);
    let mut omega = Vec::with_capacity(n);
    let mut prod = one;
    for a in seeded.iter().take(n - 1) {
        omega.push(prod * a.cos());
        prod = prod * a.sin();
    }
    omega.push(prod);
    if flip {
        omega[0] = -omega[0];
        omega[1] = -omega[1];
    }
    let values = omega.iter().map(|j| j.value).collect();
    let tangents = (0..n - 1).map(|i| omega.iter().map(|j| j.grad[i]).collect()).collect();
    (values, tangents)
}

fn det(rows: Vec<Vec<f64>>) -> f64 {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Sign making the parametrization outward oriented:
/// `sign det[ω, ∂ω/∂a₁, …]`.
fn orientation(n: usize, flip: bool) -> f64 {
    let angles = vec![1.0; n - 1];
    let (omega, tangents) = hyperspherical(&angles, n, flip);
    let mut rows = vec![omega];
    rows.extend(tangents);
    det(rows).signum()
}

struct BoundaryIntegral {
    raw: f64,
    min: f64,
    max: f64,
    evaluations: usize,
}

fn boundary_integral(
    f: &VectorFieldProbe,
    d: &DomainBall,
    density: usize,
    flip: bool,
) -> Result<BoundaryIntegral, DegreeError> {
    let n = d.dim();
    let mesh = boundary_mesh(d, density, flip);
    let terms: Vec<Result<(f64, f64), DegreeError>> = mesh
        .par_iter()
        .map(|node| {
            let (fx, dfs) = f.eval_directional(&node.x, &node.tangents)?;
            let fnorm = norm(&fx);
            let mut rows = vec![fx];
            rows.extend(dfs);
            Ok((node.weight * det(rows) / fnorm.powi(n as i32), fnorm))
        })
        .collect();
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for t in terms {
        let (v, fnorm) = t?;
        sum += v;
        min = min.min(fnorm);
        max = max.max(fnorm);
    }
    let per_eval = if f.has_jacobian() { 1 } else { 2 * n - 1 };
    Ok(BoundaryIntegral {
        raw: orientation(n, flip) * sum / sphere_area(n),
        min,
        max,
        evaluations: mesh.len() * per_eval,
    })
}

/// Relative size below which the boundary minimum of `|F|` counts as a zero.
pub const BOUNDARY_ZERO_TOL: f64 = 1e-8;

/// Allowed distance of the boundary integral from an integer.
pub const ROUNDING_GUARD: f64 = 0.2;

fn kronecker_impl(
    f: &VectorFieldProbe,
    d: &DomainBall,
    mesh: &MeshSpec,
    flip: bool,
    advice: &str,
) -> Result<DegreeResult, DegreeError> {
    if f.dim() != d.dim() {
        return Err(DegreeError::InvalidInput("field and domain dimensions differ".into()));
    }
    let mut density = mesh.density.max(2);
    let mut evaluations = 0;
    for attempt in 0..2 {
        let b = boundary_integral(f, d, density, flip)?;
        evaluations += b.evaluations;
        if !(b.min > BOUNDARY_ZERO_TOL * b.max) || !b.raw.is_finite() {
            return Err(DegreeError::BoundaryZero {
                min: b.min,
                max: b.max,
                advice: advice.to_string(),
            });
        }
        let rounded = b.raw.round();
        if (b.raw - rounded).abs() <= ROUNDING_GUARD {
            return Ok(DegreeResult {
                degree: rounded as i64,
                raw: b.raw,
                boundary_min: b.min,
                boundary_max: b.max,
                evaluations,
                density,
            });
        }
        if attempt == 1 {
            return Err(DegreeError::NotConverged { value: b.raw });
        }
        density *= 2;
    }
    unreachable!()
}

/// Degree by the boundary integral, refining the mesh once if the value is
/// not within 0.2 of an integer.
pub fn kronecker_degree(f: &VectorFieldProbe, d: &DomainBall, mesh: &MeshSpec) -> Result<DegreeResult, DegreeError> {
    kronecker_impl(f, d, mesh, false, "the field must not vanish on the boundary")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCountOptions {
    /// Cells per axis of the seeding grid over the bounding cube.
    pub density: usize,
    pub newton_tol: f64,
    pub max_iterations: usize,
    /// `|det DF|` below `singular_tol · (max_∂D |F| / radius)ⁿ` is singular.
    pub singular_tol: f64,
}

impl Default for ZeroCountOptions {
    fn default() -> Self {
        Self {
            density: 16,
            newton_tol: 1e-10,
            max_iterations: 100,
            singular_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    pub degree: i64,
    pub zeros: Vec<(Vec<f64>, f64)>,
}

/// Degree as `Σ sign det DF(z)` over the zeros `z` in the ball.
pub fn zero_count_degree(f: &VectorFieldProbe, d: &DomainBall, opts: &ZeroCountOptions) -> Result<ZeroCount, DegreeError> {
    let n = d.dim();
    if f.dim() != n {
        return Err(DegreeError::InvalidInput("field and domain dimensions differ".into()));
    }
    // boundary sample for the nonvanishing check and the scale of F
    let mut bmin = f64::INFINITY;
    let mut bmax = 0.0f64;
    for node in boundary_mesh(d, 4, false) {
        let v = norm(&f.eval(&node.x)?);
        bmin = bmin.min(v);
        bmax = bmax.max(v);
    }
    if !(bmin > BOUNDARY_ZERO_TOL * bmax) {
        return Err(DegreeError::BoundaryZero {
            min: bmin,
            max: bmax,
            advice: "the field must not vanish on the boundary".into(),
        });
    }
    let det_floor = opts.singular_tol * (bmax / d.radius).powi(n as i32);

    let cells = opts.density.max(2);
    let step = 2.0 * d.radius / cells as f64;
    let total = (cells + 1).pow(n as u32);
    let index = |mut k: usize| {
        let mut idx = vec![0; n];
        for slot in idx.iter_mut().rev() {
            *slot = k % (cells + 1);
            k /= cells + 1;
        }
        idx
    };
    let point = |idx: &[usize]| -> Vec<f64> {
        (0..n).map(|i| d.center[i] - d.radius + step * idx[i] as f64).collect()
    };
    let values: Vec<Option<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|k| f.eval(&point(&index(k))).ok())
        .collect();

    let mut seeds = Vec::new();
    for k in 0..total {
        let idx = index(k);
        if idx.contains(&cells) {
            continue;
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        let mut defined = true;
        for corner in 0..(1usize << n) {
            let mut flat = 0;
            for (axis, i) in idx.iter().enumerate() {
                flat = flat * (cells + 1) + i + ((corner >> axis) & 1);
            }
            match &values[flat] {
                Some(v) => {
                    for c in 0..n {
                        lo[c] = lo[c].min(v[c]);
                        hi[c] = hi[c].max(v[c]);
                    }
                }
                None => defined = false,
            }
        }
        if defined && (0..n).all(|c| lo[c] <= 0.0 && hi[c] >= 0.0) {
            seeds.push(point(&idx).into_iter().map(|c| c + 0.5 * step).collect::<Vec<f64>>());
        }
    }

    let converged: Vec<Option<Vec<f64>>> = seeds
        .par_iter()
        .map(|s| newton(f, s.clone(), opts))
        .collect();
    let mut zeros: Vec<(Vec<f64>, f64)> = Vec::new();
    for z in converged.into_iter().flatten() {
        let offset: Vec<f64> = z.iter().zip(&d.center).map(|(a, b)| a - b).collect();
        if norm(&offset) >= d.radius {
            continue;
        }
        if zeros.iter().any(|(q, _)| {
            let diff: Vec<f64> = q.iter().zip(&z).map(|(a, b)| a - b).collect();
            norm(&diff) <= 1e-6 * d.radius.max(1.0)
        }) {
            continue;
        }
        let (_, jac) = f.eval_jacobian(&z)?;
        let dt = det(jac);
        if dt.abs() <= det_floor {
            return Err(DegreeError::SingularZero { location: z, det: dt });
        }
        zeros.push((z, dt));
    }
    zeros.sort_by(|a, b| a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ZeroCount {
        degree: zeros.iter().map(|(_, d)| if *d > 0.0 { 1 } else { -1 }).sum(),
        zeros,
    })
}

fn newton(f: &VectorFieldProbe, mut x: Vec<f64>, opts: &ZeroCountOptions) -> Option<Vec<f64>> {
    let n = x.len();
    for _ in 0..opts.max_iterations {
        let (fx, jac) = f.eval_jacobian(&x).ok()?;
        if norm(&fx) <= opts.newton_tol {
            return Some(x);
        }
        let m = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
        let dx = m.lu().solve(&nalgebra::DVector::from_vec(fx))?;
        for i in 0..n {
            x[i] -= dx[i];
        }
        if x.iter().any(|c| !c.is_finite()) {
            return None;
        }
    }
    None
}

/// Quadrature used for `∇Γ` on the boundary of `B_s`. The degree only needs
/// the direction of the field, so the tolerance is advisory: evaluations
/// above it are counted, not rejected, and the rounding guard decides.
pub fn degree_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        radius: 20.0,
        n_r: 64,
        n_a: 6,
        tol: 1e-3,
        max_refine: 0,
    }
}

/// `∇Γ` as a field on `(λ, ξ)`, with the Hessian of `Γ` as Jacobian.
/// Evaluations whose quadrature error estimate exceeds `q.tol` are counted
/// in `unconverged`.
pub fn gamma_gradient_field<'a>(
    h: &'a PerturbationFunction,
    q: QuadratureSpec,
    unconverged: &'a AtomicUsize,
) -> VectorFieldProbe<'a> {
    let eval = move |p: &[f64], order: Order| -> Result<Jet2<4>, DegreeError> {
        let g = gamma_jet_estimate(h, p[0], PointR3([p[1], p[2], p[3]]), &q, order, Chart::Auto)?;
        if !g.converged {
            unconverged.fetch_add(1, AtomicOrdering::Relaxed);
        }
        Ok(g.jet)
    };
    let grad = move |p: &[f64]| Ok(eval(p, Order::Gradient)?.grad.to_vec());
    let with_hessian = move |p: &[f64]| -> Result<(Vec<f64>, Vec<Vec<f64>>), DegreeError> {
        let jet = eval(p, Order::Hessian)?;
        Ok((jet.grad.to_vec(), jet.hess.iter().map(|r| r.to_vec()).collect()))
    };
    VectorFieldProbe::new(4, grad).with_jacobian(with_hessian)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaDegree {
    pub result: DegreeResult,
    /// Boundary evaluations whose quadrature error estimate exceeded the
    /// tolerance.
    pub unconverged: usize,
}

/// `deg(∇Γ, B_s, 0)` by the boundary integral. The mesh pole is placed at
/// the point of `∂B_s` nearest to `λ = 0`, where `∇Γ` varies fastest.
pub fn gamma_degree(
    h: &PerturbationFunction,
    s: f64,
    q: &QuadratureSpec,
    mesh: &MeshSpec,
) -> Result<GammaDegree, DegreeError> {
    let d = bs_domain(s)?;
    let unconverged = AtomicUsize::new(0);
    let field = gamma_gradient_field(h, *q, &unconverged);
    let result = kronecker_impl(
        &field,
        &d,
        mesh,
        true,
        "the gradient of the reduced functional vanishes on the boundary of B_s; try a larger s",
    )?;
    drop(field);
    Ok(GammaDegree {
        result,
        unconverged: unconverged.into_inner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize, sign: f64) -> VectorFieldProbe<'static> {
        let m = (0..n)
            .map(|i| (0..n).map(|j| if i == j { sign } else { 0.0 }).collect())
            .collect();
        VectorFieldProbe::linear(m, vec![0.0; n])
    }

    fn unit_ball(n: usize) -> DomainBall {
        DomainBall::new(vec![0.0; n], 1.0).unwrap()
    }

    fn z_squared() -> VectorFieldProbe<'static> {
        VectorFieldProbe::new(2, |p| Ok(vec![p[0] * p[0] - p[1] * p[1], 2.0 * p[0] * p[1]]))
    }

    #[test]
    fn bs_domain_geometry() {
        let d = bs_domain(2.0).unwrap();
        assert_eq!((d.center(), d.radius()), (&[2.0, 0.0, 0.0, 0.0][..], 1.5));
        assert_eq!(d.center()[0] - d.radius(), 0.5);
        assert!((bs_domain(1.1).unwrap().radius() - 0.190_909_090_909_090_9).abs() < 1e-15);
        for s in [1.01, 1.5, 3.0, 6.0, 100.0] {
            let d = bs_domain(s).unwrap();
            assert!((d.center()[0] - d.radius() - 1.0 / s).abs() < 1e-12);
        }
        assert!(bs_domain(1.0).is_err());
    }

    #[test]
    fn orientation_is_outward() {
        for n in 2..=4 {
            for sign in [1.0, -1.0] {
                let d = kronecker_degree(&identity(n, sign), &unit_ball(n), &MeshSpec::default()).unwrap();
                let expected = if n % 2 == 1 && sign < 0.0 { -1 } else { 1 };
                assert_eq!(d.degree, expected, "n = {n}, sign = {sign}");
                assert!((d.raw - expected as f64).abs() < 1e-10);
            }
        }
        for n in 2..=4 {
            let d = boundary_integral(&identity(n, 1.0), &unit_ball(n), 4, true).unwrap();
            assert!((d.raw - 1.0).abs() < 1e-6, "n = {n}: {}", d.raw);
        }
    }

    #[test]
    fn winding_number_of_z_squared() {
        let d = DomainBall::new(vec![0.0, 0.0], 1.0).unwrap();
        let r = kronecker_degree(&z_squared(), &d, &MeshSpec::default()).unwrap();
        assert_eq!(r.degree, 2);
        // oracle: angle accumulation of F around the circle
        let steps = 10_000;
        let mut total = 0.0;
        let angle = |t: f64| {
            let (x, y) = (t.cos(), t.sin());
            (2.0 * x * y).atan2(x * x - y * y)
        };
        for k in 0..steps {
            let (a, b) = (angle(2.0 * PI * k as f64 / steps as f64), angle(2.0 * PI * (k + 1) as f64 / steps as f64));
            let mut da = b - a;
            if da > PI {
                da -= 2.0 * PI;
            } else if da < -PI {
                da += 2.0 * PI;
            }
            total += da;
        }
        assert_eq!((total / (2.0 * PI)).round() as i64, r.degree);
    }

    #[test]
    fn zero_counting() {
        for n in [3, 4] {
            let z = zero_count_degree(&identity(n, 1.0), &unit_ball(n), &ZeroCountOptions { density: 5, ..Default::default() }).unwrap();
            assert_eq!(z.degree, 1);
        }
        let z = zero_count_degree(&identity(3, -1.0), &unit_ball(3), &ZeroCountOptions::default()).unwrap();
        assert_eq!(z.degree, -1);
        let shifted = DomainBall::new(vec![0.1, 0.0], 1.0).unwrap();
        assert!(matches!(
            zero_count_degree(&z_squared(), &shifted, &ZeroCountOptions::default()),
            Err(DegreeError::SingularZero { .. })
        ));
        assert_eq!(kronecker_degree(&z_squared(), &shifted, &MeshSpec::default()).unwrap().degree, 2);
    }

    #[test]
    fn methods_agree_on_cubic_field() {
        // F(x, y, z) = (x³ − x, y, −z): zeros at x ∈ {−1, 0, 1}
        let f = VectorFieldProbe::new(3, |p| Ok(vec![p[0].powi(3) - p[0], p[1], -p[2]]));
        for (center, radius) in [(vec![0.0, 0.0, 0.0], 2.0), (vec![0.5, 0.0, 0.0], 0.8), (vec![0.0, 0.0, 0.0], 0.5)] {
            let d = DomainBall::new(center, radius).unwrap();
            let k = kronecker_degree(&f, &d, &MeshSpec::default()).unwrap();
            let z = zero_count_degree(&f, &d, &ZeroCountOptions::default()).unwrap();
            assert_eq!(k.degree, z.degree);
        }
    }

    #[test]
    fn boundary_zero_is_reported() {
        let zero = VectorFieldProbe::new(3, |_| Ok(vec![0.0; 3]));
        assert!(matches!(
            kronecker_degree(&zero, &unit_ball(3), &MeshSpec::default()),
            Err(DegreeError::BoundaryZero { .. })
        ));
        // zero on the unit circle
        let f = VectorFieldProbe::new(2, |p| Ok(vec![p[0] * p[0] + p[1] * p[1] - 1.0, 0.0]));
        assert!(kronecker_degree(&f, &DomainBall::new(vec![0.0, 0.0], 1.0).unwrap(), &MeshSpec::default()).is_err());
    }

    #[test]
    fn refinement_and_scaling_invariance() {
        let f = VectorFieldProbe::new(3, |p| Ok(vec![p[0].powi(3) - p[0] + 0.3, p[1] + p[0] * p[2], -p[2] + 0.1 * p[1]]));
        let scaled = VectorFieldProbe::new(3, |p| Ok(vec![7.5 * (p[0].powi(3) - p[0] + 0.3), 7.5 * (p[1] + p[0] * p[2]), 7.5 * (-p[2] + 0.1 * p[1])]));
        let d = DomainBall::new(vec![0.2, -0.1, 0.0], 1.7).unwrap();
        let base = kronecker_degree(&f, &d, &MeshSpec { density: 6 }).unwrap();
        let fine = kronecker_degree(&f, &d, &MeshSpec { density: 12 }).unwrap();
        let c = kronecker_degree(&scaled, &d, &MeshSpec { density: 6 }).unwrap();
        assert_eq!(base.degree, fine.degree);
        assert_eq!(base.degree, c.degree);
        assert!((base.raw - c.raw).abs() < 1e-8);
        let z = zero_count_degree(&f, &d, &ZeroCountOptions::default()).unwrap();
        assert_eq!(z.degree, base.degree);
    }

    fn rotation(n: usize, i: usize, j: usize, t: f64) -> Vec<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect()).collect();
        m[i][i] = t.cos();
        m[j][j] = t.cos();
        m[i][j] = -t.sin();
        m[j][i] = t.sin();
        m
    }

    fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    }

    #[test]
    fn products_of_rotations_have_degree_one() {
        for n in 2..=4 {
            let mut m = rotation(n, 0, 1, 0.7);
            for (k, t) in [1.3, -2.1, 2.9].iter().enumerate() {
                let (i, j) = (k % n, (k + 1 + k / n) % n);
                if i != j {
                    m = mat_mul(&m, &rotation(n, i, j, *t));
                }
            }
            let f = VectorFieldProbe::linear(m, vec![0.0; n]);
            assert_eq!(kronecker_degree(&f, &unit_ball(n), &MeshSpec::default()).unwrap().degree, 1, "n = {n}");
        }
    }

    #[test]
    fn finite_difference_directions_without_jacobian() {
        let f = VectorFieldProbe::new(4, |p| Ok(vec![-p[0], p[1], p[2] * (1.0 + p[3] * p[3]), p[3] - 0.2]));
        let r = kronecker_degree(&f, &unit_ball(4), &MeshSpec { density: 4 }).unwrap();
        assert_eq!(r.degree, -1);
        assert_eq!(zero_count_degree(&f, &unit_ball(4), &ZeroCountOptions { density: 6, ..Default::default() }).unwrap().degree, -1);
    }

    #[test]
    fn zero_free_ball_has_degree_zero() {
        let d = DomainBall::new(vec![3.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(kronecker_degree(&identity(3, 1.0), &d, &MeshSpec::default()).unwrap().degree, 0);
        assert_eq!(zero_count_degree(&identity(3, 1.0), &d, &ZeroCountOptions::default()).unwrap().degree, 0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn linear_maps_have_degree_sign_det(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let m: Vec<Vec<f64>> = entries.chunks(3).map(|r| r.to_vec()).collect();
            let dt = det(m.clone());
            proptest::prop_assume!(dt.abs() > 0.05);
            let f = VectorFieldProbe::linear(m, vec![0.1, 0.0, -0.1]);
            let k = kronecker_degree(&f, &unit_ball(3), &MeshSpec::default());
            let z = zero_count_degree(&f, &unit_ball(3), &ZeroCountOptions { density: 4, ..Default::default() }).unwrap();
            proptest::prop_assert_eq!(z.degree, dt.signum() as i64);
            if let Ok(k) = k {
                proptest::prop_assert_eq!(k.degree, z.degree);
            }
        }
    }
}
