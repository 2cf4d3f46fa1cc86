//! Two-component spinors on ℝ³, Clifford multiplication and the flat Dirac
//! operator on sampled spinor fields.
//!
//! Convention: `γ_j = i σ_j` with the Pauli matrices `σ_j`, so that
//! `γ_j γ_k + γ_k γ_j = -2 δ_jk` and every `γ_j` is skew-adjoint. With this
//! choice the spinor bubbles satisfy `DΦ = U²Φ` without any orientation flip.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::grid::{Grid3, GridError};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spinor(pub [Complex64; 2]);

impl Spinor {
    pub const ZERO: Spinor = Spinor([ZERO, ZERO]);

    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self([a, b])
    }

    /// `|ψ|² = |ψ₁|² + |ψ₂|²`.
    pub fn norm_sq(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Hermitian product `⟨ψ, φ⟩ = Σ ψ_k conj(φ_k)`, linear in the first slot.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.0[0] * other.0[0].conj() + self.0[1] * other.0[1].conj()
    }

    pub fn scale(self, c: f64) -> Spinor {
        Spinor([self.0[0] * c, self.0[1] * c])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    fn neg(self) -> Spinor {
        Spinor([-self.0[0], -self.0[1]])
    }
}

impl Mul<Complex64> for Spinor {
    type Output = Spinor;
    fn mul(self, c: Complex64) -> Spinor {
        Spinor([self.0[0] * c, self.0[1] * c])
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// The three generators `γ_1, γ_2, γ_3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordGenerators(pub [Matrix2; 3]);

impl CliffordGenerators {
    pub fn standard() -> Self {
        let sigma = [
            [[ZERO, ONE], [ONE, ZERO]],
            [[ZERO, -I], [I, ZERO]],
            [[ONE, ZERO], [ZERO, -ONE]],
        ];
        Self(sigma.map(|m| m.map(|row| row.map(|z| I * z))))
    }

    pub fn apply(&self, j: usize, psi: &Spinor) -> Spinor {
        let m = &self.0[j];
        Spinor([
            m[0][0] * psi.0[0] + m[0][1] * psi.0[1],
            m[1][0] * psi.0[0] + m[1][1] * psi.0[1],
        ])
    }
}

pub fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// `v · ψ = Σ_j v_j γ_j ψ`.
pub fn clifford_mul(v: [f64; 3], psi: &Spinor) -> Spinor {
    let [a, b] = psi.0;
    // (v·σ)ψ, then multiply by i
    let s0 = a * v[2] + b * Complex64::new(v[0], -v[1]);
    let s1 = a * Complex64::new(v[0], v[1]) - b * v[2];
    Spinor([I * s0, I * s1])
}

/// Flat Dirac operator `Σ_j γ_j ∂_j` by second-order central differences.
///
/// Only interior nodes are returned; the result grid has two fewer nodes per
/// axis than the input.
pub fn dirac_apply(field: &Grid3<Spinor>) -> Result<Grid3<Spinor>, GridError> {
    let h2 = 2.0 * field.spacing();
    field.map_interior(|i, j, k| {
        let d1 = (field.get(i + 1, j, k) - field.get(i - 1, j, k)).scale(1.0 / h2);
        let d2 = (field.get(i, j + 1, k) - field.get(i, j - 1, k)).scale(1.0 / h2);
        let d3 = (field.get(i, j, k + 1) - field.get(i, j, k - 1)).scale(1.0 / h2);
        let [p, q] = [d1.0, d2.0];
        let r = d3.0;
        // i[σ1 d1 + σ2 d2 + σ3 d3]
        let s0 = p[1] - I * q[1] + r[0];
        let s1 = p[0] + I * q[0] - r[1];
        Spinor([I * s0, I * s1])
    })
}
