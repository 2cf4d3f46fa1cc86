//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to `N` seeded variables. Arithmetic on jets applies the chain rule
//! to second order, so evaluating any expression built from the [`Scalar`]
//! operations yields exact (machine precision) first and second derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type the expression tape and the geometry maps are generic over.
///
/// Implemented for `f64` (plain evaluation) and [`Jet2`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    /// True when every derivative component is zero.
    fn is_constant(&self) -> bool;
    fn scale(self, c: f64) -> Self;
    fn add_const(self, c: f64) -> Self;
    fn recip(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn add_const(self, c: f64) -> Self {
        self + c
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value, gradient and Hessian of a scalar function of `N` variables.
///
/// The Hessian is stored densely; every update writes `(i, j)` and `(j, i)`
/// from the same commutative products, so it is symmetric bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
    pub hess: [[f64; N]; N],
}

impl<const N: usize> Jet2<N> {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        }
    }

    /// The coordinate function `x_index`, evaluated at `value`.
    pub fn variable(value: f64, index: usize) -> Self {
        let mut jet = Self::constant(value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Seeds all `N` coordinates at `point`.
    pub fn seed(point: [f64; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(point[i], i))
    }

    pub fn laplacian(&self) -> f64 {
        (0..N).map(|i| self.hess[i][i]).sum()
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Applies a univariate function given its value and first two derivatives
    /// at `self.value`.
    fn unary(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = df * self.hess[i][j] + d2f * (self.grad[i] * self.grad[j]);
            }
        }
        out
    }

    /// Chain rule: `outer` holds the jet of some `G` at the point `inner.value`,
    /// `inner` the jets of the `M` intermediate coordinates in the `N` seeded
    /// variables. Returns the jet of `G ∘ inner`.
    pub fn compose<const M: usize>(outer: &Jet2<M>, inner: &[Jet2<N>; M]) -> Self {
        let mut out = Self::constant(outer.value);
        for a in 0..M {
            for i in 0..N {
                out.grad[i] += outer.grad[a] * inner[a].grad[i];
            }
        }
        for i in 0..N {
            for j in 0..N {
                let mut acc = 0.0;
                for a in 0..M {
                    acc += outer.grad[a] * inner[a].hess[i][j];
                    for b in 0..M {
                        acc += outer.hess[a][b] * inner[a].grad[i] * inner[b].grad[j];
                    }
                }
                out.hess[i][j] = acc;
            }
        }
        // The double sum above is symmetric only up to summation order.
        for i in 0..N {
            for j in 0..i {
                let avg = 0.5 * (out.hess[i][j] + out.hess[j][i]);
                out.hess[i][j] = avg;
                out.hess[j][i] = avg;
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet2<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for i in 0..N {
            self.grad[i] += rhs.grad[i];
            for j in 0..N {
                self.hess[i][j] += rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Jet2<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for i in 0..N {
            self.grad[i] -= rhs.grad[i];
            for j in 0..N {
                self.hess[i][j] -= rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Jet2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet2<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::constant(self.value * rhs.value);
        for i in 0..N {
            out.grad[i] = self.value * rhs.grad[i] + rhs.value * self.grad[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.hess[i][j] = self.value * rhs.hess[i][j]
                    + rhs.value * self.hess[i][j]
                    + (self.grad[i] * rhs.grad[j] + rhs.grad[i] * self.grad[j]);
            }
        }
        out
    }
}

impl<const N: usize> Div for Jet2<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Scalar for Jet2<N> {
    fn constant(c: f64) -> Self {
        Jet2::constant(c)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn is_constant(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0) && self.hess.iter().flatten().all(|h| *h == 0.0)
    }

    fn scale(mut self, c: f64) -> Self {
        self.value *= c;
        for i in 0..N {
            self.grad[i] *= c;
            for j in 0..N {
                self.hess[i][j] *= c;
            }
        }
        self
    }

    fn add_const(mut self, c: f64) -> Self {
        self.value += c;
        self
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.unary(r, -r * r, 2.0 * r * r * r)
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e, e)
    }

    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.unary(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.unary(c, -s, -c)
    }

    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.unary(r, 0.5 / r, -0.25 / (r * self.value))
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => {
                let x = self.value;
                let nf = f64::from(n);
                self.unary(
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - 1.0) * x.powi(n - 2),
                )
            }
        }
    }
}
