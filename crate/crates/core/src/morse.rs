//! Perturbation functions, their critical points, and the check of the
//! existence criterion: the south pole is not critical, every critical point
//! has `Δh ≠ 0`, and `Σ_{Δh<0} (−1)^m ≠ −1`.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Domain, ExprError, Expression};
use crate::geometry::{inverse_stereographic, inverse_stereographic_south, kelvin_reflect};
use crate::jet::{Jet2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("invalid perturbation: {0}")]
    Spec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("degenerate critical point at {location:?} (smallest Hessian eigenvalue {min_eigenvalue:e})")]
    DegenerateCriticalPoint {
        location: [f64; 3],
        min_eigenvalue: f64,
    },
    #[error("Newton failed from all {seeds} seeds")]
    NonConvergence { seeds: usize },
    #[error("critical point at {location:?} has vanishing Laplacian {laplacian:e}")]
    ConditionIViolated { location: [f64; 3], laplacian: f64 },
}

/// Either `k` on S³ (ambient coordinates `x1..x4`) or `h` on ℝ³ (`y1..y3`).
/// `epsilon` is carried for reporting only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerturbationSpec {
    pub k: Option<String>,
    pub h: Option<String>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Flat(Expression),
    Sphere(Expression),
}

/// A scalar function `h` on ℝ³ with exact derivatives, given directly or as
/// `h = k ∘ π⁻¹` for a function `k` on S³.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFunction {
    kind: Kind,
}

impl PerturbationFunction {
    pub fn flat(text: &str) -> Result<Self, MorseError> {
        let e = Expression::parse(text)?;
        if e.domain() == Some(Domain::Sphere) {
            return Err(MorseError::Spec(
                "h must be written in the flat coordinates y1, y2, y3".into(),
            ));
        }
        Ok(Self { kind: Kind::Flat(e) })
    }

    pub fn sphere(text: &str) -> Result<Self, MorseError> {
        let e = Expression::parse(text)?;
        if e.domain() == Some(Domain::Flat) {
            return Err(MorseError::Spec(
                "k must be written in the ambient coordinates x1, x2, x3, x4".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Sphere(e),
        })
    }

    /// True when built from a function on S³.
    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, Kind::Sphere(_))
    }

    pub fn expression(&self) -> &Expression {
        match &self.kind {
            Kind::Flat(e) | Kind::Sphere(e) => e,
        }
    }

    pub fn eval_at<T: Scalar>(&self, y: [T; 3]) -> Result<T, ExprError> {
        match &self.kind {
            Kind::Flat(e) => e.eval(&y),
            Kind::Sphere(e) => e.eval(&inverse_stereographic(y)),
        }
    }

    /// `h ∘ τ` with `τ(x) = x/|x|²`. For functions from S³ this is evaluated
    /// through the chart centred at the south pole and is smooth at 0.
    pub fn kelvin_eval_at<T: Scalar>(&self, x: [T; 3]) -> Result<T, ExprError> {
        match &self.kind {
            Kind::Flat(e) => e.eval(&kelvin_reflect(x)),
            Kind::Sphere(e) => e.eval(&inverse_stereographic_south(x)),
        }
    }

    pub fn value(&self, y: [f64; 3]) -> Result<f64, ExprError> {
        self.eval_at(y)
    }

    pub fn jet(&self, y: [f64; 3]) -> Result<Jet2<3>, ExprError> {
        self.eval_at(Jet2::seed(y))
    }

    pub fn kelvin_jet(&self, x: [f64; 3]) -> Result<Jet2<3>, ExprError> {
        self.kelvin_eval_at(Jet2::seed(x))
    }

    /// Ambient jet of `k` at a point of ℝ⁴ (sphere functions only).
    pub fn ambient_jet(&self, x: [f64; 4]) -> Option<Result<Jet2<4>, ExprError>> {
        match &self.kind {
            Kind::Sphere(e) => Some(e.eval_jet2(x)),
            Kind::Flat(_) => None,
        }
    }
}

pub fn build_h(spec: &PerturbationSpec) -> Result<PerturbationFunction, MorseError> {
    match (&spec.k, &spec.h) {
        (Some(k), None) => PerturbationFunction::sphere(k),
        (None, Some(h)) => PerturbationFunction::flat(h),
        _ => Err(MorseError::Spec("exactly one of k and h must be given".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: [f64; 3],
    pub grad_norm: f64,
    pub hessian: [[f64; 3]; 3],
    /// Number of negative Hessian eigenvalues.
    pub index: usize,
    pub laplacian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Cells per axis of the seeding grid.
    pub density: usize,
    pub newton_tol: f64,
    pub max_iterations: usize,
    /// Relative threshold `|λ_min| ≤ tol · ‖H‖` for degeneracy.
    pub degeneracy_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            density: 48,
            newton_tol: 1e-10,
            max_iterations: 60,
            degeneracy_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSearch {
    /// Sorted lexicographically by location.
    pub points: Vec<CriticalPoint>,
    pub seeds: usize,
    pub failed_seeds: usize,
}

/// Newton's method on `∇h` from every cell of the grid on `[−r, r]³` in which
/// each gradient component changes sign (or vanishes) at the corners.
pub fn find_critical_points(
    h: &PerturbationFunction,
    r: f64,
    opts: &SearchOptions,
) -> Result<CriticalSearch, MorseError> {
    let n = opts.density.max(2);
    let step = 2.0 * r / n as f64;
    let node = |i: usize| -r + step * i as f64;
    let m = n + 1;
    let grads: Vec<Option<[f64; 3]>> = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (m * m), (idx / m) % m, idx % m);
            h.jet([node(i), node(j), node(k)]).ok().map(|g| g.grad)
        })
        .collect();
    let at = |i: usize, j: usize, k: usize| grads[(i * m + j) * m + k];

    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                let mut defined = true;
                for c in 0..8 {
                    match at(i + (c >> 2), j + ((c >> 1) & 1), k + (c & 1)) {
                        Some(g) => {
                            for d in 0..3 {
                                lo[d] = lo[d].min(g[d]);
                                hi[d] = hi[d].max(g[d]);
                            }
                        }
                        None => defined = false,
                    }
                }
                if defined && (0..3).all(|d| lo[d] <= 0.0 && hi[d] >= 0.0) {
                    let half = 0.5 * step;
                    seeds.push([node(i) + half, node(j) + half, node(k) + half]);
                }
            }
        }
    }

    let results: Vec<Option<Result<CriticalPoint, MorseError>>> = seeds
        .par_iter()
        .map(|&s| newton(h, s, r, opts).map(|p| classify(h, p, opts)))
        .collect();

    let mut found = Vec::new();
    let mut failed = 0;
    for res in results {
        match res {
            Some(Ok(p)) => found.push(p),
            Some(Err(e)) => return Err(e),
            None => failed += 1,
        }
    }
    if !seeds.is_empty() && found.is_empty() && failed == seeds.len() {
        return Err(MorseError::NonConvergence { seeds: seeds.len() });
    }

    found.sort_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm));
    let radius = 10.0 * opts.newton_tol;
    let mut points: Vec<CriticalPoint> = Vec::new();
    for p in found {
        if points.iter().all(|q| dist(&q.location, &p.location) > radius) {
            points.push(p);
        }
    }
    points.sort_by(|a, b| {
        a.location
            .iter()
            .zip(&b.location)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(CriticalSearch {
        points,
        seeds: seeds.len(),
        failed_seeds: failed,
    })
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Converged location, or `None` when the iteration fails or leaves the box.
fn newton(h: &PerturbationFunction, start: [f64; 3], r: f64, opts: &SearchOptions) -> Option<[f64; 3]> {
    let mut x = start;
    for _ in 0..opts.max_iterations {
        let jet = h.jet(x).ok()?;
        if jet.grad_norm() <= opts.newton_tol {
            // one more step to settle at round-off level
            if let Some(next) = newton_step(&jet, x) {
                if h.jet(next).ok()?.grad_norm() <= jet.grad_norm() {
                    x = next;
                }
            }
            return (x.iter().all(|c| c.abs() <= r)).then_some(x);
        }
        x = newton_step(&jet, x)?;
        if x.iter().any(|c| !c.is_finite() || c.abs() > 2.0 * r) {
            return None;
        }
    }
    None
}

fn newton_step(jet: &Jet2<3>, x: [f64; 3]) -> Option<[f64; 3]> {
    let hess = Matrix3::from_fn(|i, j| jet.hess[i][j]);
    let g = nalgebra::Vector3::from(jet.grad);
    let dx = hess.lu().solve(&g)?;
    if dx.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some([x[0] - dx[0], x[1] - dx[1], x[2] - dx[2]])
}

fn classify(
    h: &PerturbationFunction,
    x: [f64; 3],
    opts: &SearchOptions,
) -> Result<CriticalPoint, MorseError> {
    let jet = h.jet(x)?;
    let eig = SymmetricEigen::new(Matrix3::from_fn(|i, j| jet.hess[i][j])).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    if scale == 0.0 || min <= opts.degeneracy_tol * scale {
        return Err(MorseError::DegenerateCriticalPoint {
            location: x,
            min_eigenvalue: min,
        });
    }
    Ok(CriticalPoint {
        location: x,
        grad_norm: jet.grad_norm(),
        hessian: jet.hess,
        index: eig.iter().filter(|e| **e < 0.0).count(),
        laplacian: jet.laplacian(),
    })
}

/// `Σ_{Δh(ξ)<0} (−1)^{m(h,ξ)} + 1`.
pub fn degree_sum(crits: &[CriticalPoint], degeneracy_tol: f64) -> Result<i64, MorseError> {
    let mut sum = 1;
    for c in crits {
        let norm = c.hessian.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if c.laplacian.abs() <= degeneracy_tol * norm {
            return Err(MorseError::ConditionIViolated {
                location: c.location,
                laplacian: c.laplacian,
            });
        }
        if c.laplacian < 0.0 {
            sum += if c.index % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SouthPoleStatus {
    /// `∇(h∘τ)(0) ≠ 0`.
    NotCritical,
    Critical,
    /// `h` was given on ℝ³ and `h∘τ` is not C¹ at the origin.
    NotApplicable,
}

impl SouthPoleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SouthPoleStatus::NotCritical => "not_critical",
            SouthPoleStatus::Critical => "critical",
            SouthPoleStatus::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SouthPoleCheck {
    pub status: SouthPoleStatus,
    /// `|∇(h∘τ)(0)|`, when defined.
    pub kelvin_grad_norm: Option<f64>,
    /// Norm of the tangential gradient of `k` at the south pole.
    pub intrinsic_grad_norm: Option<f64>,
}

/// Directions used to probe `h∘τ` near the origin.
pub const PROBE_RAYS: [[f64; 3]; 5] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.577_350_269_189_625_8, 0.577_350_269_189_625_8, 0.577_350_269_189_625_8],
    [-1.0 / 3.0, 2.0 / 3.0, -2.0 / 3.0],
];

/// Decides whether the south pole is a critical point, i.e. whether
/// `∇(h∘τ)(0) = 0`. For functions from S³ the Kelvin-chart gradient is
/// compared with the intrinsic tangential gradient of `k`, which must be
/// half of it.
pub fn south_pole_check(h: &PerturbationFunction, tol: f64) -> Result<SouthPoleCheck, MorseError> {
    if let Some(ambient) = h.ambient_jet([0.0, 0.0, 0.0, -1.0]) {
        let ambient = ambient?;
        let tangential = ambient.grad[..3].iter().map(|g| g * g).sum::<f64>().sqrt();
        let chart = h.kelvin_jet([0.0; 3])?.grad_norm();
        if (chart - 2.0 * tangential).abs() > 1e-10 * chart.max(1.0) {
            return Err(MorseError::Spec(format!(
                "south-pole gradients disagree: chart {chart:e}, intrinsic {tangential:e}"
            )));
        }
        let status = if chart <= tol {
            SouthPoleStatus::Critical
        } else {
            SouthPoleStatus::NotCritical
        };
        return Ok(SouthPoleCheck {
            status,
            kelvin_grad_norm: Some(chart),
            intrinsic_grad_norm: Some(tangential),
        });
    }

    // h given on ℝ³: accept a gradient limit only if it is stable along rays.
    let grad_at = |d: &[f64; 3], t: f64| h.kelvin_jet(d.map(|c| c * t)).ok().map(|j| j.grad);
    let mut limits = Vec::new();
    for d in &PROBE_RAYS {
        let (Some(near), Some(nearer)) = (grad_at(d, 1e-3), grad_at(d, 1e-4)) else {
            return Ok(not_applicable());
        };
        let scale = nearer.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0);
        if dist(&near, &nearer) > 0.01 * scale {
            return Ok(not_applicable());
        }
        limits.push(nearer);
    }
    let first = limits[0];
    let scale = first.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0);
    if limits.iter().any(|g| dist(g, &first) > 0.01 * scale) {
        return Ok(not_applicable());
    }
    let norm = first.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(SouthPoleCheck {
        status: if norm <= tol.max(1e-6) {
            SouthPoleStatus::Critical
        } else {
            SouthPoleStatus::NotCritical
        },
        kelvin_grad_norm: Some(norm),
        intrinsic_grad_norm: None,
    })
}

fn not_applicable() -> SouthPoleCheck {
    SouthPoleCheck {
        status: SouthPoleStatus::NotApplicable,
        kelvin_grad_norm: None,
        intrinsic_grad_norm: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremOptions {
    /// Initial box radius; doubled while critical points appear in the shell
    /// `r < |ξ| ≤ 2r`.
    pub box_radius: f64,
    pub max_box_radius: f64,
    pub search: SearchOptions,
    pub south_pole_tol: f64,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        Self {
            box_radius: 8.0,
            max_box_radius: 64.0,
            search: SearchOptions::default(),
            south_pole_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremVerdict {
    pub south_pole_ok: bool,
    pub south_pole: SouthPoleCheck,
    pub condition_i: bool,
    pub condition_ii: bool,
    /// `None` when the critical points could not be classified.
    pub degree_sum: Option<i64>,
    pub critical_points: Vec<CriticalPoint>,
    pub guarantee: bool,
    /// Box radius that passed the shell check.
    pub box_radius: f64,
    pub seeds: usize,
    pub failed_seeds: usize,
    pub diagnostics: Vec<String>,
}

/// Builds `h` and evaluates the hypotheses. Numerical obstructions
/// (degenerate critical points, escaping critical points) are reported in
/// the verdict; only malformed input is an error.
pub fn theorem_check(spec: &PerturbationSpec, opts: &TheoremOptions) -> Result<TheoremVerdict, MorseError> {
    let h = build_h(spec)?;
    let south_pole = south_pole_check(&h, opts.south_pole_tol)?;
    let south_pole_ok = south_pole.status != SouthPoleStatus::Critical;
    let mut verdict = TheoremVerdict {
        south_pole_ok,
        south_pole,
        condition_i: false,
        condition_ii: false,
        degree_sum: None,
        critical_points: Vec::new(),
        guarantee: false,
        box_radius: opts.box_radius,
        seeds: 0,
        failed_seeds: 0,
        diagnostics: Vec::new(),
    };
    if !south_pole_ok {
        verdict.diagnostics.push("the south pole is a critical point".into());
    }

    let mut r = opts.box_radius;
    let search = loop {
        let mut search_opts = opts.search;
        search_opts.density *= 2;
        match find_critical_points(&h, 2.0 * r, &search_opts) {
            Ok(s) => {
                let escaped = s.points.iter().any(|p| norm3(&p.location) > r);
                if !escaped {
                    break Some(s);
                }
                if 2.0 * r > opts.max_box_radius {
                    verdict.diagnostics.push(format!(
                        "critical points remain outside every box up to radius {r}"
                    ));
                    break None;
                }
                r *= 2.0;
            }
            Err(e) => {
                verdict.diagnostics.push(e.to_string());
                break None;
            }
        }
    };
    verdict.box_radius = r;
    let Some(search) = search else {
        return Ok(verdict);
    };
    verdict.seeds = search.seeds;
    verdict.failed_seeds = search.failed_seeds;
    verdict.critical_points = search.points;
    match degree_sum(&verdict.critical_points, opts.search.degeneracy_tol) {
        Ok(d) => {
            verdict.condition_i = true;
            verdict.degree_sum = Some(d);
            verdict.condition_ii = d != 0;
            if d == 0 {
                verdict
                    .diagnostics
                    .push("the signed count over critical points with negative Laplacian is -1".into());
            }
        }
        Err(e) => verdict.diagnostics.push(e.to_string()),
    }
    verdict.guarantee = verdict.south_pole_ok && verdict.condition_i && verdict.condition_ii;
    Ok(verdict)
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn spec_k(k: &str) -> PerturbationSpec {
        PerturbationSpec {
            k: Some(k.into()),
            ..Default::default()
        }
    }

    fn spec_h(h: &str) -> PerturbationSpec {
        PerturbationSpec {
            h: Some(h.into()),
            ..Default::default()
        }
    }

    #[test]
    fn spec_needs_exactly_one_function() {
        assert!(matches!(build_h(&PerturbationSpec::default()), Err(MorseError::Spec(_))));
        let both = PerturbationSpec {
            k: Some("x1".into()),
            h: Some("y1".into()),
            epsilon: 0.1,
        };
        assert!(matches!(build_h(&both), Err(MorseError::Spec(_))));
        assert!(matches!(build_h(&spec_k("y1")), Err(MorseError::Spec(_))));
        assert!(matches!(build_h(&spec_h("x1 +")), Err(MorseError::Expr(_))));
    }

    #[test]
    fn h_from_height_function() {
        let h = build_h(&spec_k("x1")).unwrap();
        assert!((h.value([1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let y: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let r2 = y.iter().map(|c| c * c).sum::<f64>();
            assert!((h.value(y).unwrap() - 2.0 * y[0] / (1.0 + r2)).abs() < 1e-14);
        }
        let one = build_h(&spec_k("1")).unwrap();
        assert_eq!(one.value([0.3, 2.0, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn built_gradient_matches_differences() {
        let h = build_h(&spec_k("x1*x2 + exp(x3) - x4^2")).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let y: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let jet = h.jet(y).unwrap();
            for i in 0..3 {
                let step = 1e-5;
                let mut p = y;
                let mut m = y;
                p[i] += step;
                m[i] -= step;
                let fd = (h.value(p).unwrap() - h.value(m).unwrap()) / (2.0 * step);
                assert!((fd - jet.grad[i]).abs() <= 1e-6 * jet.grad_norm().max(1.0));
            }
        }
    }

    #[test]
    fn quadratic_has_single_minimum() {
        let h = build_h(&spec_h("y1^2+y2^2+y3^2")).unwrap();
        let s = find_critical_points(&h, 4.0, &SearchOptions::default()).unwrap();
        assert_eq!(s.points.len(), 1);
        let p = &s.points[0];
        assert!(p.location.iter().all(|c| c.abs() < 1e-12));
        assert_eq!((p.index, p.laplacian), (0, 6.0));
        assert_eq!(degree_sum(&s.points, 1e-8).unwrap(), 1);
    }

    #[test]
    fn height_function_critical_points() {
        let h = build_h(&spec_k("x1")).unwrap();
        let s = find_critical_points(&h, 8.0, &SearchOptions::default()).unwrap();
        assert_eq!(s.points.len(), 2);
        let (lo, hi) = (&s.points[0], &s.points[1]);
        assert!(dist(&lo.location, &[-1.0, 0.0, 0.0]) < 1e-8);
        assert!(dist(&hi.location, &[1.0, 0.0, 0.0]) < 1e-8);
        assert_eq!((lo.index, hi.index), (0, 3));
        assert!((lo.laplacian - 3.0).abs() < 1e-8 && (hi.laplacian + 3.0).abs() < 1e-8);
        assert_eq!(degree_sum(&s.points, 1e-8).unwrap(), 0);
    }

    #[test]
    fn constant_is_degenerate() {
        let h = build_h(&spec_h("1")).unwrap();
        assert!(matches!(
            find_critical_points(&h, 2.0, &SearchOptions { density: 8, ..Default::default() }),
            Err(MorseError::DegenerateCriticalPoint { .. })
        ));
    }

    #[test]
    fn vanishing_laplacian_violates_condition_i() {
        // saddle y1² − y2² + 0·y3² is degenerate; use a Morse saddle with Δ = 0
        let h = build_h(&spec_h("y1^2 + y2^2 - 2*y3^2")).unwrap();
        let s = find_critical_points(&h, 2.0, &SearchOptions { density: 8, ..Default::default() }).unwrap();
        assert!(matches!(degree_sum(&s.points, 1e-8), Err(MorseError::ConditionIViolated { .. })));
    }

    #[test]
    fn south_pole_checks() {
        let x1 = build_h(&spec_k("x1")).unwrap();
        let c = south_pole_check(&x1, 1e-8).unwrap();
        assert_eq!(c.status, SouthPoleStatus::NotCritical);
        assert!((c.kelvin_grad_norm.unwrap() - 2.0).abs() < 1e-14);
        assert!((c.intrinsic_grad_norm.unwrap() - 1.0).abs() < 1e-14);
        let x4 = build_h(&spec_k("x4")).unwrap();
        assert_eq!(south_pole_check(&x4, 1e-8).unwrap().status, SouthPoleStatus::Critical);
        let quad = build_h(&spec_h("y1^2+y2^2+y3^2")).unwrap();
        assert_eq!(south_pole_check(&quad, 1e-8).unwrap().status, SouthPoleStatus::NotApplicable);
        let flat = build_h(&spec_h("2*y1/(1+y1^2+y2^2+y3^2)")).unwrap();
        let c = south_pole_check(&flat, 1e-8).unwrap();
        assert_eq!(c.status, SouthPoleStatus::NotCritical);
        assert!((c.kelvin_grad_norm.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn kelvin_composition_extends_to_south_pole_value() {
        let h = build_h(&spec_k("x1*x3 + exp(x4) + x2")).unwrap();
        let expected = (-1f64).exp();
        for d in &PROBE_RAYS {
            for t in [1e-2, 1e-4, 1e-6] {
                let v = h.value(kelvin_reflect(d.map(|c| c * t))).unwrap();
                assert!((v - expected).abs() <= 4.0 * t, "{v} at {t}");
            }
        }
    }

    #[test]
    fn verdicts() {
        let v = theorem_check(&spec_k("x1"), &TheoremOptions::default()).unwrap();
        assert!(v.south_pole_ok && v.condition_i && !v.condition_ii && !v.guarantee);
        assert_eq!(v.degree_sum, Some(0));
        let v = theorem_check(&spec_k("x4"), &TheoremOptions::default()).unwrap();
        assert!(!v.south_pole_ok && !v.guarantee);
        let v = theorem_check(&spec_h("y1^2+y2^2+y3^2"), &TheoremOptions::default()).unwrap();
        assert_eq!(v.degree_sum, Some(1));
        assert!(v.guarantee);
        let v = theorem_check(&spec_h("1"), &TheoremOptions::default()).unwrap();
        assert!(!v.guarantee && v.degree_sum.is_none() && !v.diagnostics.is_empty());
    }
}
