//! Stereographic charts of the 3-sphere, the conformal factor, and the Kelvin
//! reflection together with its action on bubble parameters.

use thiserror::Error;

use crate::jet::Scalar;

/// Distance from the south pole / origin below which the charts are refused.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Inputs this close to unit norm are renormalized by [`PointS3::new`].
pub const SPHERE_NORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is at the south pole (1 + x4 = {0:e})")]
    SouthPoleSingularity(f64),
    #[error("point is at the origin (|x| = {0:e})")]
    OriginSingularity(f64),
    #[error("point is not on the unit 3-sphere (|x| = {0})")]
    NotOnSphere(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointR3(pub [f64; 3]);

impl PointR3 {
    pub const ORIGIN: PointR3 = PointR3([0.0; 3]);

    pub fn new(y: [f64; 3]) -> Result<Self, GeometryError> {
        if y.iter().all(|c| c.is_finite()) {
            Ok(Self(y))
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl From<[f64; 3]> for PointR3 {
    fn from(y: [f64; 3]) -> Self {
        Self(y)
    }
}

/// A point `(x', x4)` of the unit sphere in ℝ⁴.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointS3([f64; 4]);

impl PointS3 {
    pub const NORTH_POLE: PointS3 = PointS3([0.0, 0.0, 0.0, 1.0]);
    pub const SOUTH_POLE: PointS3 = PointS3([0.0, 0.0, 0.0, -1.0]);

    /// Accepts `x` when `| |x| - 1 | <= 1e-9`, renormalizing it exactly onto
    /// the sphere; anything farther off is rejected.
    pub fn new(x: [f64; 4]) -> Result<Self, GeometryError> {
        if !x.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > SPHERE_NORMALIZE_TOL {
            return Err(GeometryError::NotOnSphere(norm));
        }
        Ok(Self(x.map(|c| c / norm)))
    }

    pub fn coords(&self) -> [f64; 4] {
        self.0
    }
}

pub(crate) fn norm_sq(v: &[f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Stereographic projection from the south pole, `y = x' / (1 + x4)`.
pub fn stereo(p: PointS3) -> Result<PointR3, GeometryError> {
    let [x1, x2, x3, x4] = p.0;
    let denom = 1.0 + x4;
    if denom <= SINGULARITY_THRESHOLD {
        return Err(GeometryError::SouthPoleSingularity(denom));
    }
    Ok(PointR3([x1 / denom, x2 / denom, x3 / denom]))
}

pub fn stereo_inv(y: PointR3) -> PointS3 {
    PointS3(inverse_stereographic(y.0))
}

/// `π⁻¹(y) = (2y, 1 - |y|²) / (1 + |y|²)`, generic so that jets can be pushed
/// through the chart.
pub fn inverse_stereographic<T: Scalar>(y: [T; 3]) -> [T; 4] {
    let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let inv = r2.add_const(1.0).recip();
    let two_inv = inv.scale(2.0);
    [
        y[0] * two_inv,
        y[1] * two_inv,
        y[2] * two_inv,
        (T::constant(1.0) - r2) * inv,
    ]
}

/// Chart centred at the south pole: `π⁻¹(τ(y))`, i.e. the inverse projection
/// followed by the reflection `x4 ↦ -x4`. Smooth at `y = 0`.
pub fn inverse_stereographic_south<T: Scalar>(y: [T; 3]) -> [T; 4] {
    let [a, b, c, d] = inverse_stereographic(y);
    [a, b, c, -d]
}

/// `f = 2 / (1 + |y|²)`, the factor with `(π⁻¹)* g_S³ = f² g_ℝ³`.
pub fn conformal_factor(y: PointR3) -> f64 {
    2.0 / (1.0 + y.norm_sq())
}

/// Kelvin reflection `τ(x) = x / |x|²`.
pub fn kelvin_point(x: PointR3) -> Result<PointR3, GeometryError> {
    let n = x.norm();
    if n <= SINGULARITY_THRESHOLD {
        return Err(GeometryError::OriginSingularity(n));
    }
    Ok(PointR3(kelvin_reflect(x.0)))
}

/// Unchecked generic form of [`kelvin_point`].
pub fn kelvin_reflect<T: Scalar>(x: [T; 3]) -> [T; 3] {
    let inv = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).recip();
    [x[0] * inv, x[1] * inv, x[2] * inv]
}

/// `(λ, ξ) ↦ (λ, ξ) / (λ² + |ξ|²)`: the Kelvin reflection of the bubble
/// parameters, an involution on `{λ > 0} × ℝ³`.
pub fn kelvin_params(lambda: f64, xi: PointR3) -> (f64, PointR3) {
    let m = lambda * lambda + xi.norm_sq();
    (lambda / m, PointR3(xi.0.map(|c| c / m)))
}

/// Kelvin transform of a scalar field with conformal weight `weight`:
/// `F*(x) = |x|^{-weight} F(x / |x|²)`.
///
/// Weight 1 is the transform under which the scalar bubbles are invariant,
/// weight 6 the one for densities such as `|U|²|Φ|²`.
pub fn kelvin_function<F>(
    field: F,
    weight: f64,
) -> impl Fn(PointR3) -> Result<f64, GeometryError>
where
    F: Fn(PointR3) -> f64,
{
    move |x| {
        let reflected = kelvin_point(x)?;
        Ok(x.norm().powf(-weight) * field(reflected))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(7)
    }

    #[test]
    fn stereo_examples() {
        assert_eq!(stereo(PointS3::NORTH_POLE).unwrap().0, [0.0; 3]);
        let p = PointS3::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(stereo(p).unwrap().0, [1.0, 0.0, 0.0]);
        assert!(matches!(
            stereo(PointS3::SOUTH_POLE),
            Err(GeometryError::SouthPoleSingularity(_))
        ));
    }

    #[test]
    fn stereo_inv_examples() {
        assert_eq!(stereo_inv(PointR3::ORIGIN), PointS3::NORTH_POLE);
        assert_eq!(stereo_inv(PointR3([1.0, 0.0, 0.0])).coords(), [1.0, 0.0, 0.0, 0.0]);
        let far = stereo_inv(PointR3([1e6, 0.0, 0.0])).coords();
        assert!(far[3] < -1.0 + 1e-11);
    }

    #[test]
    fn stereo_round_trip() {
        let mut rng = rng();
        for _ in 0..100 {
            let dir: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let scale = rng.gen_range(0.0..10.0) / norm_sq(&dir).sqrt().max(1e-3);
            let y = PointR3(dir.map(|c| (c * scale).clamp(-10.0, 10.0)));
            let p = stereo_inv(y);
            let n: f64 = p.coords().iter().map(|c| c * c).sum();
            assert!((n - 1.0).abs() < 1e-12);
            let back = stereo(p).unwrap();
            for i in 0..3 {
                assert!((back.0[i] - y.0[i]).abs() <= 1e-12 * (1.0 + y.0[i].abs()));
            }
        }
    }

    #[test]
    fn point_s3_normalizes_or_rejects() {
        let p = PointS3::new([0.0, 0.0, 0.0, 1.0 + 5e-10]).unwrap();
        assert_eq!(p.coords()[3], 1.0);
        assert!(matches!(
            PointS3::new([0.0, 0.0, 0.0, 1.0 + 1e-6]),
            Err(GeometryError::NotOnSphere(_))
        ));
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(conformal_factor(PointR3::ORIGIN), 2.0);
        assert_eq!(conformal_factor(PointR3([1.0, 0.0, 0.0])), 1.0);
        let mut rng = rng();
        for _ in 0..50 {
            let y = PointR3(std::array::from_fn(|_| rng.gen_range(-5.0..5.0)));
            let f = conformal_factor(y);
            assert!(f > 0.0 && f < 2.0);
        }
    }

    #[test]
    fn kelvin_point_examples() {
        assert_eq!(kelvin_point(PointR3([1.0, 0.0, 0.0])).unwrap().0, [1.0, 0.0, 0.0]);
        assert_eq!(kelvin_point(PointR3([2.0, 0.0, 0.0])).unwrap().0, [0.5, 0.0, 0.0]);
        assert!(matches!(
            kelvin_point(PointR3::ORIGIN),
            Err(GeometryError::OriginSingularity(_))
        ));
        let mut rng = rng();
        for _ in 0..100 {
            let x = PointR3(std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
            let back = kelvin_point(kelvin_point(x).unwrap()).unwrap();
            for i in 0..3 {
                assert!((back.0[i] - x.0[i]).abs() <= 1e-12 * (1.0 + x.0[i].abs()));
            }
        }
    }

    #[test]
    fn kelvin_params_examples() {
        let (l, xi) = kelvin_params(1.0, PointR3::ORIGIN);
        assert_eq!((l, xi.0), (1.0, [0.0; 3]));
        let (l, xi) = kelvin_params(2.0, PointR3::ORIGIN);
        assert_eq!((l, xi.0), (0.5, [0.0; 3]));
        let mut rng = rng();
        for _ in 0..100 {
            let lambda = rng.gen_range(0.05..5.0);
            let xi = PointR3(std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
            let (l1, x1) = kelvin_params(lambda, xi);
            let (l2, x2) = kelvin_params(l1, x1);
            assert!((l2 - lambda).abs() <= 1e-12 * lambda.max(1.0));
            for i in 0..3 {
                assert!((x2.0[i] - xi.0[i]).abs() <= 1e-12 * (1.0 + xi.0[i].abs()));
            }
        }
    }

    #[test]
    fn kelvin_function_of_constant() {
        let star = kelvin_function(|_| 1.0, 2.0);
        assert_eq!(star(PointR3([2.0, 0.0, 0.0])).unwrap(), 0.25);
        assert!(star(PointR3::ORIGIN).is_err());
    }

    #[test]
    fn south_chart_is_reflected_north_chart() {
        let y = [0.3, -0.2, 0.9];
        let south = inverse_stereographic_south(y);
        let via_kelvin = inverse_stereographic(kelvin_reflect(y));
        for i in 0..4 {
            assert!((south[i] - via_kelvin[i]).abs() < 1e-15);
        }
        assert_eq!(inverse_stereographic_south([0.0f64; 3]), [0.0, 0.0, 0.0, -1.0]);
    }
}
