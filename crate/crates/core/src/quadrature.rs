//! Product rules for integrals over ℝ³ in spherical coordinates.
//!
//! The radius is mapped through `r = tan θ`, so `[0, ∞)` becomes `[0, π/2)`
//! and integrands decaying like `|x|^{-4}` or faster turn into bounded smooth
//! functions of `θ`. The radial variable is split into panels at caller
//! supplied radii (where the integrand changes scale) with Gauss–Legendre on
//! each panel. Angles use Gauss–Legendre in `cos β` and the trapezoid rule in
//! `φ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

/// Parameters of the adaptive spherical quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Radius used as an extra panel split. The rule covers all of ℝ³, so no
    /// tail is discarded.
    pub radius: f64,
    /// Radial nodes, distributed over the panels.
    pub n_r: usize,
    /// Nodes in `cos β`; `2 n_a` are used in `φ`.
    pub n_a: usize,
    /// Absolute tolerance on the refinement difference.
    pub tol: f64,
    pub max_refine: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radius: 20.0,
            n_r: 64,
            n_a: 16,
            tol: 1e-8,
            max_refine: 2,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.radius >= 10.0 && self.radius.is_finite()) {
            return Err(format!("quadrature radius must be at least 10, got {}", self.radius));
        }
        if self.n_r < 64 {
            return Err(format!("need at least 64 radial nodes, got {}", self.n_r));
        }
        if self.n_a < 4 {
            return Err(format!("need at least 4 angular nodes, got {}", self.n_a));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }

    /// Gauss nodes per panel when the radial range has `panels` panels.
    pub fn per_panel(&self, panels: usize) -> usize {
        self.n_r.div_ceil(panels.max(1)).max(8)
    }
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut nodes: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (mid + half * x, half * w)).collect();
    nodes.sort_by(|p, q| p.0.total_cmp(&q.0));
    nodes
}

/// Radii at which the radial variable is split, after merging radii whose
/// logarithms are within 0.1 of each other. Non-finite and non-positive
/// entries are ignored.
pub fn radial_breaks(candidates: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = candidates
        .iter()
        .copied()
        .filter(|c| c.is_finite() && *c > 0.0)
        .collect();
    r.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(r.len());
    for c in r {
        match out.last() {
            Some(&last) if (c / last).ln() < 0.1 => {}
            _ => out.push(c),
        }
    }
    out
}

/// A fixed product rule on ℝ³.
#[derive(Debug, Clone)]
pub struct SphericalRule {
    /// `(r, w)` with the weight including `r² dr/dθ`.
    radial: Vec<(f64, f64)>,
    /// Unit directions with weights summing to `4π`.
    angular: Vec<([f64; 3], f64)>,
}

impl SphericalRule {
    /// `per_panel` Gauss nodes on each `θ` panel delimited by `breaks`, and
    /// `n_a × 2n_a` angular nodes.
    pub fn new(breaks: &[f64], per_panel: usize, n_a: usize) -> Self {
        let mut thetas = vec![0.0];
        thetas.extend(breaks.iter().map(|r| r.atan()));
        thetas.push(FRAC_PI_2);
        let mut radial = Vec::with_capacity(per_panel * (thetas.len() - 1));
        for pair in thetas.windows(2) {
            for (t, w) in gauss_legendre(per_panel, pair[0], pair[1]) {
                let (s, c) = t.sin_cos();
                let r = s / c;
                // r² dr = tan²θ sec²θ dθ
                radial.push((r, w * s * s / (c * c * c * c)));
            }
        }

        let n_phi = 2 * n_a;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut angular = Vec::with_capacity(n_a * n_phi);
        for (t, w) in gauss_legendre(n_a, -1.0, 1.0) {
            let st = (1.0 - t * t).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                let (sp, cp) = phi.sin_cos();
                angular.push(([st * cp, st * sp, t], w * dphi));
            }
        }
        Self { radial, angular }
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.angular.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `∫ g(x) dx` for a vector-valued integrand. Shells are evaluated in
    /// parallel and summed in a fixed order, so the result is bitwise
    /// reproducible regardless of the thread count.
    pub fn integrate<const K: usize, G>(&self, g: &G) -> [f64; K]
    where
        G: Fn([f64; 3]) -> [f64; K] + Sync,
    {
        let shells: Vec<[f64; K]> = self
            .radial
            .par_iter()
            .map(|&(r, wr)| {
                let mut acc = [0.0; K];
                for &(dir, wa) in &self.angular {
                    let v = g(dir.map(|d| r * d));
                    for k in 0..K {
                        acc[k] += wa * v[k];
                    }
                }
                acc.map(|a| a * wr)
            })
            .collect();
        let mut total = [0.0; K];
        for s in shells {
            for k in 0..K {
                total[k] += s[k];
            }
        }
        total
    }
}

/// Outcome of [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    /// Largest componentwise difference to the next coarser rule.
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

/// Integrates with `per_panel × n_a` nodes and compares against the rule with
/// half as many nodes in each direction. While the difference exceeds `tol`,
/// both counts are doubled, at most `max_refine` times.
pub fn integrate_adaptive<const K: usize, G>(
    g: &G,
    breaks: &[f64],
    per_panel: usize,
    n_a: usize,
    tol: f64,
    max_refine: usize,
) -> Integral<K>
where
    G: Fn([f64; 3]) -> [f64; K] + Sync,
{
    let mut m = per_panel.max(4);
    let mut a = n_a.max(4);
    let coarse_rule = SphericalRule::new(breaks, m / 2, a / 2);
    let mut nodes = coarse_rule.len();
    let mut coarse = coarse_rule.integrate(g);
    let mut refinements = 0;
    loop {
        let rule = SphericalRule::new(breaks, m, a);
        nodes += rule.len();
        let fine = rule.integrate(g);
        let error = fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (f - c).abs())
            .fold(0.0, f64::max);
        let converged = error <= tol;
        if converged || refinements == max_refine || !error.is_finite() {
            return Integral {
                value: fine,
                error,
                nodes,
                converged,
            };
        }
        coarse = fine;
        m *= 2;
        a *= 2;
        refinements += 1;
    }
}
