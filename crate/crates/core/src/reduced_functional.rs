//! The reduced functional `Γ(λ, ξ) = ½∫ h V_{λ,ξ}` and its derivatives.
//!
//! After the change of variables `y = λx + ξ`,
//! `Γ(λ, ξ) = ½∫ h(λx + ξ) V₁,₀(x) dx`, and derivatives are taken under the
//! integral using the exact jets of `h`. At `λ = 0` the continuous extension
//! `Γ(0, ξ) = c₀ h(ξ)` is used.
//!
//! For `h = k∘π⁻¹` and `λ² + |ξ|² > 1` the bubble is wide or far away and the
//! integrand is poorly resolved. There the identity
//! `Γ_h(λ, ξ) = Γ_{h∘τ}(λ̃, ξ̃)` is used instead, with `h∘τ` evaluated through
//! the chart at the south pole, and derivatives are pulled back through
//! `(λ, ξ) ↦ (λ, ξ)/(λ² + |ξ|²)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

use crate::bubbles::v_kernel;
use crate::expr::ExprError;
use crate::geometry::{kelvin_params, PointR3};
use crate::jet::{Jet2, Scalar};
use crate::morse::PerturbationFunction;
use crate::quadrature::{integrate_adaptive, radial_breaks};

pub use crate::quadrature::QuadratureSpec;

/// `∫ V₁,₀ = 9π²/4`.
pub const INTEGRAL_V: f64 = 9.0 * PI * PI / 4.0;
/// `c₀ = ½∫ V₁,₀ = 9π²/8`.
pub const C0: f64 = 9.0 * PI * PI / 8.0;
/// `∫ |y|² V₁,₀ = 27π²/4`.
pub const SECOND_MOMENT_V: f64 = 27.0 * PI * PI / 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GammaError {
    #[error("quadrature not converged at lambda = {lambda}, xi = {xi:?}: error estimate {error:e} exceeds tolerance {tol:e}")]
    QuadratureNotConverged {
        lambda: f64,
        xi: [f64; 3],
        error: f64,
        tol: f64,
    },
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot fit the expansion constant: laplacian of h at xi is {0:e}")]
    DegenerateFit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaResult {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// Value, gradient and Hessian of `Γ` in the variables `(λ, ξ₁, ξ₂, ξ₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaJet {
    pub jet: Jet2<4>,
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

/// How the integral is set up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Kelvin chart for sphere functions when `λ² + |ξ|² > 1`.
    Auto,
    /// `½∫ h(λx + ξ) V₁,₀(x) dx`.
    Direct,
    /// `½∫ (h∘τ)(λ̃x + ξ̃) V₁,₀(x) dx`.
    Kelvin,
}

fn check_inputs(lambda: f64, xi: PointR3, q: &QuadratureSpec) -> Result<(), GammaError> {
    q.validate().map_err(GammaError::InvalidInput)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(GammaError::InvalidInput(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if !xi.0.iter().all(|c| c.is_finite()) {
        return Err(GammaError::InvalidInput("xi must be finite".into()));
    }
    Ok(())
}

/// Panel radii for an integrand `h(λx + ξ)V₁,₀(x)` with `h` varying on unit
/// scale near the origin.
fn breaks_for(lambda: f64, xi: PointR3, q: &QuadratureSpec) -> Vec<f64> {
    let d = xi.norm();
    radial_breaks(&[
        1.0,
        q.radius,
        0.25 / lambda,
        1.0 / lambda,
        4.0 / lambda,
        d / lambda,
        (d + 1.0) / lambda,
        (d - 1.0) / lambda,
    ])
}

/// Index of `∂²/∂p_i∂p_j` in the packed output, `i ≤ j`.
const fn packed(i: usize, j: usize) -> usize {
    let mut k = 5;
    let mut a = 0;
    while a < i {
        k += 4 - a;
        a += 1;
    }
    k + (j - i)
}

/// `½∫ f(λx + ξ) V₁,₀(x) dx` with derivatives, where `f` is `h` or `h∘τ`.
fn integrate_jet<F>(
    f: &F,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
    order: Order,
    strict: bool,
) -> Result<GammaJet, GammaError>
where
    F: Fn([f64; 3]) -> Result<Jet2<3>, ExprError> + Sync,
    {
    let failure: OnceLock<ExprError> = OnceLock::new();
    let integrand = |x: [f64; 3]| -> [f64; 15] {
        let y = [
            lambda * x[0] + xi.0[0],
            lambda * x[1] + xi.0[1],
            lambda * x[2] + xi.0[2],
        ];
        let w = 0.5 * v_kernel(1.0, PointR3::ORIGIN, PointR3(x));
        let jet = match f(y) {
            Ok(j) => j,
            Err(e) => {
                let _ = failure.set(e);
                return [f64::NAN; 15];
            }
        };
        let mut out = [0.0; 15];
        out[0] = w * jet.value;
        if order >= Order::Gradient {
            out[1] = w * (jet.grad[0] * x[0] + jet.grad[1] * x[1] + jet.grad[2] * x[2]);
            for i in 0..3 {
                out[2 + i] = w * jet.grad[i];
            }
        }
        if order == Order::Hessian {
            let hx: [f64; 3] = std::array::from_fn(|i| {
                jet.hess[i][0] * x[0] + jet.hess[i][1] * x[1] + jet.hess[i][2] * x[2]
            });
            out[packed(0, 0)] = w * (hx[0] * x[0] + hx[1] * x[1] + hx[2] * x[2]);
            for i in 0..3 {
                out[packed(0, i + 1)] = w * hx[i];
                for j in i..3 {
                    out[packed(i + 1, j + 1)] = w * jet.hess[i][j];
                }
            }
        }
        out
    };
    let breaks = breaks_for(lambda, xi, q);
    let out = integrate_adaptive(
        &integrand,
        &breaks,
        q.per_panel(breaks.len() + 1),
        q.n_a,
        q.tol,
        q.max_refine,
    );
    if let Some(e) = failure.get() {
        return Err(e.clone().into());
    }
    if strict && !out.converged {
        return Err(GammaError::QuadratureNotConverged {
            lambda,
            xi: xi.0,
            error: out.error,
            tol: q.tol,
        });
    }
    let v = out.value;
    let mut jet = Jet2::<4>::constant(v[0]);
    for i in 0..4 {
        jet.grad[i] = v[1 + i];
        for j in i..4 {
            jet.hess[i][j] = v[packed(i, j)];
            jet.hess[j][i] = v[packed(i, j)];
        }
    }
    Ok(GammaJet {
        jet,
        error: out.error,
        nodes: out.nodes,
        converged: out.converged,
    })
}

fn h_jet(h: &PerturbationFunction, order: Order) -> impl Fn([f64; 3]) -> Result<Jet2<3>, ExprError> + Sync + '_ {
    move |y| {
        if order == Order::Value {
            h.value(y).map(Jet2::constant)
        } else {
            h.jet(y)
        }
    }
}

fn kelvin_jet(h: &PerturbationFunction, order: Order) -> impl Fn([f64; 3]) -> Result<Jet2<3>, ExprError> + Sync + '_ {
    move |x| {
        if order == Order::Value {
            h.kelvin_eval_at(x).map(Jet2::constant)
        } else {
            h.kelvin_jet(x)
        }
    }
}

/// `Γ` and its derivatives up to `order` at `(λ, ξ)`.
pub fn gamma_jet(
    h: &PerturbationFunction,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
    order: Order,
    chart: Chart,
) -> Result<GammaJet, GammaError> {
    gamma_jet_impl(h, lambda, xi, q, order, chart, true)
}

/// As [`gamma_jet`], but an unmet tolerance is reported through
/// [`GammaJet::converged`] instead of an error.
pub fn gamma_jet_estimate(
    h: &PerturbationFunction,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
    order: Order,
    chart: Chart,
) -> Result<GammaJet, GammaError> {
    gamma_jet_impl(h, lambda, xi, q, order, chart, false)
}

fn gamma_jet_impl(
    h: &PerturbationFunction,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
    order: Order,
    chart: Chart,
    strict: bool,
) -> Result<GammaJet, GammaError> {
    check_inputs(lambda, xi, q)?;
    if lambda == 0.0 {
        return Ok(GammaJet {
            jet: zero_scale_jet(&h.jet(xi.0)?),
            error: 0.0,
            nodes: 0,
            converged: true,
        });
    }
    let use_kelvin = match chart {
        Chart::Direct => false,
        Chart::Kelvin => true,
        Chart::Auto => h.is_sphere() && lambda * lambda + xi.norm_sq() > 1.0,
    };
    if !use_kelvin {
        return integrate_jet(&h_jet(h, order), lambda, xi, q, order, strict);
    }
    let (lt, xt) = kelvin_params(lambda, xi);
    let reflected = integrate_jet(&kelvin_jet(h, order), lt, xt, q, order, strict)?;
    let jet = if order == Order::Value {
        reflected.jet
    } else {
        // pull back through κ(P) = P/|P|²
        let p = Jet2::<4>::seed([lambda, xi.0[0], xi.0[1], xi.0[2]]);
        let inv = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).recip();
        let kappa = p.map(|c| c * inv);
        Jet2::compose(&reflected.jet, &kappa)
    };
    Ok(GammaJet { jet, ..reflected })
}

/// The extension to `λ = 0`: `Γ = c₀h`, `∂_λΓ = 0`, `∇_ξΓ = c₀∇h`,
/// `∂²_λΓ = c₀Δh`, `∂_λ∇_ξΓ = 0`, `∇²_ξΓ = c₀∇²h`.
fn zero_scale_jet(h: &Jet2<3>) -> Jet2<4> {
    let mut jet = Jet2::<4>::constant(C0 * h.value);
    jet.hess[0][0] = (SECOND_MOMENT_V / 6.0) * h.laplacian();
    for i in 0..3 {
        jet.grad[i + 1] = C0 * h.grad[i];
        for j in 0..3 {
            jet.hess[i + 1][j + 1] = C0 * h.hess[i][j];
        }
    }
    jet
}

/// `Γ(λ, ξ) = ½∫ h V_{λ,ξ}`.
pub fn gamma(h: &PerturbationFunction, lambda: f64, xi: PointR3, q: &QuadratureSpec) -> Result<GammaResult, GammaError> {
    let g = gamma_jet(h, lambda, xi, q, Order::Value, Chart::Auto)?;
    Ok(GammaResult {
        value: g.jet.value,
        error: g.error,
        nodes: g.nodes,
    })
}

/// `(∂_λΓ, ∇_ξΓ)`.
pub fn grad_gamma(h: &PerturbationFunction, lambda: f64, xi: PointR3, q: &QuadratureSpec) -> Result<[f64; 4], GammaError> {
    Ok(gamma_jet(h, lambda, xi, q, Order::Gradient, Chart::Auto)?.jet.grad)
}

/// Hessian in `(λ, ξ₁, ξ₂, ξ₃)`.
pub fn hess_gamma(
    h: &PerturbationFunction,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
) -> Result<[[f64; 4]; 4], GammaError> {
    Ok(gamma_jet(h, lambda, xi, q, Order::Hessian, Chart::Auto)?.jet.hess)
}

/// Moments of the kernel: `(∫ V₁,₀, ∫ |y|² V₁,₀)`, with the error estimate.
pub fn kernel_moments(q: &QuadratureSpec) -> Result<([f64; 2], f64), GammaError> {
    q.validate().map_err(GammaError::InvalidInput)?;
    let g = |x: [f64; 3]| {
        let v = v_kernel(1.0, PointR3::ORIGIN, PointR3(x));
        [v, v * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])]
    };
    let breaks = radial_breaks(&[1.0, q.radius]);
    let out = integrate_adaptive(&g, &breaks, q.per_panel(breaks.len() + 1), q.n_a, q.tol, q.max_refine);
    if !out.converged {
        return Err(GammaError::QuadratureNotConverged {
            lambda: 1.0,
            xi: [0.0; 3],
            error: out.error,
            tol: q.tol,
        });
    }
    Ok((out.value, out.error))
}

/// Default sample for [`lambda_expansion`]. The defect is of order `λ²`
/// with a sizeable constant, so a one-parameter fit needs small scales.
pub const DEFAULT_LAMBDAS: [f64; 5] = [0.0004, 0.0008, 0.0012, 0.0016, 0.002];

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaExpansion {
    /// Least-squares `c⋆` in `∂_λΓ ≈ c⋆ λ Δh(ξ)`.
    pub fitted: f64,
    pub laplacian: f64,
    /// `(1/6)∫|y|²V₁,₀` by quadrature, the constant predicted by the Taylor
    /// expansion.
    pub expansion_constant: f64,
    /// `∫|y|²V₁,₀` by quadrature.
    pub second_moment: f64,
    /// `|∂_λΓ − (1/6)∫|y|²V₁,₀ · λΔh| / λ²` per sample.
    pub defects: Vec<f64>,
    pub max_defect: f64,
    /// `max / min` of the defects.
    pub defect_ratio: f64,
    /// `(λ, ∂_λΓ)`.
    pub samples: Vec<(f64, f64)>,
}

pub fn lambda_expansion(
    h: &PerturbationFunction,
    xi: PointR3,
    lambdas: &[f64],
    q: &QuadratureSpec,
) -> Result<LambdaExpansion, GammaError> {
    if lambdas.len() < 5 || lambdas.iter().any(|l| !(*l > 0.0 && *l <= 0.2)) {
        return Err(GammaError::InvalidInput(
            "need at least 5 scales in (0, 0.2]".into(),
        ));
    }
    let hj = h.jet(xi.0)?;
    let lap = hj.laplacian();
    let hnorm = hj.hess.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if lap.abs() <= 1e-8 * hnorm.max(1.0) {
        return Err(GammaError::DegenerateFit(lap));
    }
    let ([_, m2], _) = kernel_moments(q)?;
    let c_exp = m2 / 6.0;
    let mut samples = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        samples.push((l, grad_gamma(h, l, xi, q)?[0]));
    }
    let (num, den) = samples
        .iter()
        .fold((0.0, 0.0), |(n, d), (l, g)| (n + l * lap * g, d + (l * lap).powi(2)));
    let defects: Vec<f64> = samples
        .iter()
        .map(|(l, g)| (g - c_exp * l * lap).abs() / (l * l))
        .collect();
    let max = defects.iter().copied().fold(0.0, f64::max);
    let min = defects.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LambdaExpansion {
        fitted: num / den,
        laplacian: lap,
        expansion_constant: c_exp,
        second_moment: m2,
        defects,
        max_defect: max,
        defect_ratio: max / min,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinCheck {
    pub direct: GammaResult,
    pub reflected: GammaResult,
    pub defect: f64,
}

/// `|Γ_h(λ, ξ) − Γ_{h∘τ}(λ̃, ξ̃)|` from two separate quadratures.
pub fn gamma_kelvin_check(
    h: &PerturbationFunction,
    lambda: f64,
    xi: PointR3,
    q: &QuadratureSpec,
) -> Result<KelvinCheck, GammaError> {
    if !(lambda > 0.0) {
        return Err(GammaError::InvalidInput("lambda must be positive".into()));
    }
    let run = |chart| {
        gamma_jet(h, lambda, xi, q, Order::Value, chart).map(|g| GammaResult {
            value: g.jet.value,
            error: g.error,
            nodes: g.nodes,
        })
    };
    let direct = run(Chart::Direct)?;
    let reflected = run(Chart::Kelvin)?;
    Ok(KelvinCheck {
        direct,
        reflected,
        defect: (direct.value - reflected.value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(text: &str) -> PerturbationFunction {
        PerturbationFunction::flat(text).unwrap()
    }

    #[test]
    fn packed_layout_is_dense() {
        let mut seen = vec![];
        for i in 0..4 {
            for j in i..4 {
                seen.push(packed(i, j));
            }
        }
        assert_eq!(seen, (5..15).collect::<Vec<_>>());
    }

    #[test]
    fn kernel_moments_match_closed_forms() {
        let ([m0, m2], _) = kernel_moments(&QuadratureSpec::default()).unwrap();
        assert!((m0 / INTEGRAL_V - 1.0).abs() < 1e-10, "{m0}");
        assert!((m2 / SECOND_MOMENT_V - 1.0).abs() < 1e-10, "{m2}");
    }

    #[test]
    fn constant_gives_c0() {
        let q = QuadratureSpec::default();
        let one = flat("1");
        for (l, xi) in [(1.0, [0.0; 3]), (0.05, [1.0, 2.0, 0.0]), (3.0, [-1.0, 0.0, 0.5])] {
            let g = gamma(&one, l, PointR3(xi), &q).unwrap();
            assert!((g.value - C0).abs() <= 2.0 * q.tol, "{}", g.value);
            assert!(g.error <= q.tol);
        }
        assert_eq!(grad_gamma(&one, 0.7, PointR3([0.1, 0.0, 0.0]), &q).unwrap(), [0.0; 4]);
        let hess = hess_gamma(&one, 0.7, PointR3::ORIGIN, &q).unwrap();
        assert!(hess.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let g = gamma(&flat("y1"), 0.8, PointR3::ORIGIN, &QuadratureSpec::default()).unwrap();
        assert!(g.value.abs() <= 1e-8);
    }

    #[test]
    fn zero_scale_extension() {
        let h = flat("2*y1/(1+y1^2+y2^2+y3^2)");
        let q = QuadratureSpec::default();
        let xi = PointR3([1.0, 0.0, 0.0]);
        assert_eq!(gamma(&h, 0.0, xi, &q).unwrap().value, C0);
        let near = gamma(&h, 0.01, xi, &q).unwrap().value;
        assert!((near - C0).abs() <= 5e-3 * C0);
    }

    #[test]
    fn gradient_matches_differences_of_gamma() {
        let h = PerturbationFunction::sphere("x1 + 0.5*x2*x3 - x4^2").unwrap();
        let q = QuadratureSpec {
            tol: 1e-10,
            ..Default::default()
        };
        let p = [0.5, 0.2, -0.1, 0.4];
        let at = |p: [f64; 4]| gamma(&h, p[0], PointR3([p[1], p[2], p[3]]), &q).unwrap().value;
        let grad = grad_gamma(&h, p[0], PointR3([p[1], p[2], p[3]]), &q).unwrap();
        let step = 1e-4;
        for i in 0..4 {
            let mut a = p;
            let mut b = p;
            a[i] += step;
            b[i] -= step;
            let fd = (at(a) - at(b)) / (2.0 * step);
            assert!((fd - grad[i]).abs() <= 1e-5, "{i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn kelvin_chart_pullback_matches_direct_derivatives() {
        let h = PerturbationFunction::sphere("x1 + 0.3*x2^2 - 0.2*x3*x4").unwrap();
        let q = QuadratureSpec {
            tol: 1e-10,
            ..Default::default()
        };
        let xi = PointR3([0.9, -0.4, 0.3]);
        let direct = gamma_jet(&h, 0.8, xi, &q, Order::Hessian, Chart::Direct).unwrap().jet;
        let kelvin = gamma_jet(&h, 0.8, xi, &q, Order::Hessian, Chart::Kelvin).unwrap().jet;
        assert!((direct.value - kelvin.value).abs() < 1e-8);
        for i in 0..4 {
            assert!((direct.grad[i] - kelvin.grad[i]).abs() < 1e-7);
            for j in 0..4 {
                assert!((direct.hess[i][j] - kelvin.hess[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lambda_expansion_rejects_flat_laplacian() {
        let h = flat("y1");
        assert!(matches!(
            lambda_expansion(&h, PointR3::ORIGIN, &DEFAULT_LAMBDAS, &QuadratureSpec::default()),
            Err(GammaError::DegenerateFit(_))
        ));
        assert!(lambda_expansion(&h, PointR3::ORIGIN, &[0.1, 0.2], &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn gaussian_expansion_constant() {
        let h = flat("exp(-(y1^2+y2^2+y3^2))");
        let fit = lambda_expansion(&h, PointR3::ORIGIN, &DEFAULT_LAMBDAS, &QuadratureSpec::default()).unwrap();
        assert!((fit.fitted / C0 - 1.0).abs() < 0.01, "{}", fit.fitted);
        assert!(fit.defect_ratio <= 10.0, "{:?}", fit.defects);
    }
}
