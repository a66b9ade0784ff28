//! Forward-mode differentiation with exact gradients and Hessians.
//!
//! [`SecondOrder`] carries a value, its gradient, and its Hessian with respect
//! to `N` seeded inputs, so one evaluation of a function written against the
//! [`Real`] trait yields all three. [`Dual`] is the cheaper gradient-only
//! variant used inside HMC, and `Dual<T, 0>` doubles as a plain value type.
//!
//! Complex intermediate quantities are represented by [`ComplexNum`], a pair
//! of differentiable reals.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::Scalar;

/// Number type that model code is written against.
pub trait Real<T: Scalar>:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<T, Output = Self>
    + Sub<T, Output = Self>
    + Mul<T, Output = Self>
    + Div<T, Output = Self>
{
    fn constant(x: T) -> Self;
    fn value(&self) -> T;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn atanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

// ---------------------------------------------------------------------------
// First order

/// Value plus gradient with respect to `N` inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub value: T,
    pub grad: [T; N],
}

impl<T: Scalar, const N: usize> Dual<T, N> {
    pub fn constant(value: T) -> Self {
        Self {
            value,
            grad: [T::zero(); N],
        }
    }

    /// Input variable `index`, seeded with a unit derivative.
    pub fn variable(value: T, index: usize) -> Self {
        let mut grad = [T::zero(); N];
        grad[index] = T::one();
        Self { value, grad }
    }

    #[inline]
    fn chain(self, f0: T, f1: T) -> Self {
        Self {
            value: f0,
            grad: self.grad.map(|g| f1 * g),
        }
    }
}

impl<T: Scalar, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            grad: std::array::from_fn(|i| self.grad[i] + rhs.grad[i]),
        }
    }
}

impl<T: Scalar, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            value: self.value - rhs.value,
            grad: std::array::from_fn(|i| self.grad[i] - rhs.grad[i]),
        }
    }
}

impl<T: Scalar, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            value: self.value * rhs.value,
            grad: std::array::from_fn(|i| self.grad[i] * rhs.value + self.value * rhs.grad[i]),
        }
    }
}

impl<T: Scalar, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.value;
        let q = self.value * inv;
        Self {
            value: q,
            grad: std::array::from_fn(|i| (self.grad[i] - q * rhs.grad[i]) * inv),
        }
    }
}

impl<T: Scalar, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.map(|g| -g),
        }
    }
}

impl<T: Scalar, const N: usize> Add<T> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: T) -> Self {
        Self {
            value: self.value + rhs,
            grad: self.grad,
        }
    }
}

impl<T: Scalar, const N: usize> Sub<T> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: T) -> Self {
        Self {
            value: self.value - rhs,
            grad: self.grad,
        }
    }
}

impl<T: Scalar, const N: usize> Mul<T> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: T) -> Self {
        Self {
            value: self.value * rhs,
            grad: self.grad.map(|g| g * rhs),
        }
    }
}

impl<T: Scalar, const N: usize> Div<T> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: T) -> Self {
        self * (T::one() / rhs)
    }
}

impl<T: Scalar, const N: usize> Real<T> for Dual<T, N> {
    fn constant(x: T) -> Self {
        Dual::constant(x)
    }
    fn value(&self) -> T {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.value.ln(), T::one() / self.value)
    }
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.chain(t, T::one() - t * t)
    }
    fn atanh(self) -> Self {
        let x = self.value;
        self.chain(x.atanh(), T::one() / (T::one() - x * x))
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, T::lit(0.5) / s)
    }
    fn recip(self) -> Self {
        let r = T::one() / self.value;
        self.chain(r, -r * r)
    }
    fn powi(self, n: i32) -> Self {
        let x = self.value;
        self.chain(x.powi(n), T::from_i32(n).unwrap() * x.powi(n - 1))
    }
}

// ---------------------------------------------------------------------------
// Second order

/// Value, gradient, and Hessian with respect to `N` inputs.
///
/// Hessians are assembled from the upper triangle and mirrored, so they are
/// exactly symmetric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrder<T, const N: usize> {
    pub value: T,
    pub grad: [T; N],
    pub hess: [[T; N]; N],
}

impl<T: Scalar, const N: usize> SecondOrder<T, N> {
    pub fn constant(value: T) -> Self {
        Self {
            value,
            grad: [T::zero(); N],
            hess: [[T::zero(); N]; N],
        }
    }

    pub fn variable(value: T, index: usize) -> Self {
        let mut out = Self::constant(value);
        out.grad[index] = T::one();
        out
    }

    /// Seeds every coordinate of `theta` as an independent input.
    pub fn seed(theta: &[T; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(theta[i], i))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }

    /// Composition `g(self)` with `g(v) = f0`, `g'(v) = f1`, `g''(v) = f2`.
    #[inline]
    fn chain(self, f0: T, f1: T, f2: T) -> Self {
        let mut hess = [[T::zero(); N]; N];
        for i in 0..N {
            let gi = f2 * self.grad[i];
            for j in i..N {
                let h = f1 * self.hess[i][j] + gi * self.grad[j];
                hess[i][j] = h;
                hess[j][i] = h;
            }
        }
        Self {
            value: f0,
            grad: self.grad.map(|g| f1 * g),
            hess,
        }
    }
}

impl<T: Scalar, const N: usize> Add for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            grad: std::array::from_fn(|i| self.grad[i] + rhs.grad[i]),
            hess: std::array::from_fn(|i| std::array::from_fn(|j| self.hess[i][j] + rhs.hess[i][j])),
        }
    }
}

impl<T: Scalar, const N: usize> Sub for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            value: self.value - rhs.value,
            grad: std::array::from_fn(|i| self.grad[i] - rhs.grad[i]),
            hess: std::array::from_fn(|i| std::array::from_fn(|j| self.hess[i][j] - rhs.hess[i][j])),
        }
    }
}

impl<T: Scalar, const N: usize> Mul for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (self.value, rhs.value);
        let mut hess = [[T::zero(); N]; N];
        for i in 0..N {
            for j in i..N {
                let h = self.hess[i][j] * v
                    + u * rhs.hess[i][j]
                    + (self.grad[i] * rhs.grad[j] + rhs.grad[i] * self.grad[j]);
                hess[i][j] = h;
                hess[j][i] = h;
            }
        }
        Self {
            value: u * v,
            grad: std::array::from_fn(|i| self.grad[i] * v + u * rhs.grad[i]),
            hess,
        }
    }
}

impl<T: Scalar, const N: usize> Div for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * Real::recip(rhs)
    }
}

impl<T: Scalar, const N: usize> Neg for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            hess: self.hess.map(|row| row.map(|h| -h)),
        }
    }
}

impl<T: Scalar, const N: usize> Add<T> for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: T) -> Self {
        self.value = self.value + rhs;
        self
    }
}

impl<T: Scalar, const N: usize> Sub<T> for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: T) -> Self {
        self.value = self.value - rhs;
        self
    }
}

impl<T: Scalar, const N: usize> Mul<T> for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: T) -> Self {
        Self {
            value: self.value * rhs,
            grad: self.grad.map(|g| g * rhs),
            hess: self.hess.map(|row| row.map(|h| h * rhs)),
        }
    }
}

impl<T: Scalar, const N: usize> Div<T> for SecondOrder<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: T) -> Self {
        self * (T::one() / rhs)
    }
}

impl<T: Scalar, const N: usize> Real<T> for SecondOrder<T, N> {
    fn constant(x: T) -> Self {
        SecondOrder::constant(x)
    }
    fn value(&self) -> T {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = T::one() / self.value;
        self.chain(self.value.ln(), r, -r * r)
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        let d = T::one() - t * t;
        self.chain(t, d, -T::lit(2.0) * t * d)
    }
    fn atanh(self) -> Self {
        let x = self.value;
        let r = T::one() / (T::one() - x * x);
        self.chain(x.atanh(), r, T::lit(2.0) * x * r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let d1 = T::lit(0.5) / s;
        self.chain(s, d1, -d1 / (T::lit(2.0) * self.value))
    }
    fn recip(self) -> Self {
        let r = T::one() / self.value;
        self.chain(r, -r * r, T::lit(2.0) * r * r * r)
    }
    fn powi(self, n: i32) -> Self {
        let x = self.value;
        let nf = T::from_i32(n).unwrap();
        let f2 = if n == 0 || n == 1 {
            T::zero()
        } else {
            nf * T::from_i32(n - 1).unwrap() * x.powi(n - 2)
        };
        let f1 = if n == 0 { T::zero() } else { nf * x.powi(n - 1) };
        self.chain(x.powi(n), f1, f2)
    }
}

// ---------------------------------------------------------------------------
// Complex

/// Complex number over any [`Real`] type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexNum<R> {
    pub re: R,
    pub im: R,
}

/// Complex quantity carrying second-order derivative information.
pub type ComplexSecondOrder<T, const N: usize> = ComplexNum<SecondOrder<T, N>>;

impl<R> ComplexNum<R> {
    pub fn new(re: R, im: R) -> Self {
        Self { re, im }
    }
}

impl<R: Copy + Neg<Output = R>> ComplexNum<R> {
    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }
}

impl<R: Copy + Add<Output = R> + Mul<Output = R>> ComplexNum<R> {
    pub fn norm_sqr(self) -> R {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, s: R) -> Self {
        Self {
            re: self.re * s,
            im: self.im * s,
        }
    }
}

impl<R: Copy + Add<Output = R>> Add for ComplexNum<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl<R: Copy + Sub<Output = R>> Sub for ComplexNum<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl<R: Copy + Add<Output = R> + Sub<Output = R> + Mul<Output = R>> Mul for ComplexNum<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl<R> Div for ComplexNum<R>
where
    R: Copy + Add<Output = R> + Sub<Output = R> + Mul<Output = R> + Div<Output = R>,
{
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let den = rhs.re * rhs.re + rhs.im * rhs.im;
        Self::new(
            (self.re * rhs.re + self.im * rhs.im) / den,
            (self.im * rhs.re - self.re * rhs.im) / den,
        )
    }
}

// ---------------------------------------------------------------------------
// Drivers

/// Exact value, gradient, and Hessian of `f` at `theta`.
///
/// Fails when any output is non-finite, which is how domain violations inside
/// `f` (log of a negative number, division by zero) surface.
pub fn grad_hess<T, F, const N: usize>(f: F, theta: &[T; N]) -> Result<SecondOrder<T, N>>
where
    T: Scalar,
    F: FnOnce(&[SecondOrder<T, N>; N]) -> SecondOrder<T, N>,
{
    let out = f(&SecondOrder::seed(theta));
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite(format!(
            "derivatives at theta = {:?}",
            theta.map(|t| t.as_f64())
        )))
    }
}

/// Exact value and gradient of `f` at `theta`.
pub fn gradient<T, F, const N: usize>(f: F, theta: &[T; N]) -> Result<(T, [T; N])>
where
    T: Scalar,
    F: FnOnce(&[Dual<T, N>; N]) -> Dual<T, N>,
{
    let vars: [Dual<T, N>; N] = std::array::from_fn(|i| Dual::variable(theta[i], i));
    let out = f(&vars);
    if out.value.is_finite() && out.grad.iter().all(|g| g.is_finite()) {
        Ok((out.value, out.grad))
    } else {
        Err(Error::NonFiniteGradient {
            theta: theta.iter().map(|t| t.as_f64()).collect(),
        })
    }
}

/// Central finite-difference gradient and Hessian. Test oracle only.
///
/// The gradient uses step `h`; the Hessian uses the 4-point stencil with step
/// `10 h`, which keeps roundoff in the second differences near `1e-8` for the
/// default `h = 1e-5`. The result is symmetrized.
pub fn fd_grad_hess<T, F, const N: usize>(f: F, theta: &[T; N], h: T) -> Result<SecondOrder<T, N>>
where
    T: Scalar,
    F: Fn(&[T; N]) -> T,
{
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let eval = |x: &[T; N]| -> Result<T> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!(
                "f at {:?}",
                x.map(|t| t.as_f64())
            )))
        }
    };
    let shifted = |pairs: &[(usize, T)]| {
        let mut x = *theta;
        for &(i, d) in pairs {
            x[i] = x[i] + d;
        }
        x
    };
    let two = T::lit(2.0);
    let f0 = eval(theta)?;
    let mut out = SecondOrder::constant(f0);
    for i in 0..N {
        let fp = eval(&shifted(&[(i, h)]))?;
        let fm = eval(&shifted(&[(i, -h)]))?;
        out.grad[i] = (fp - fm) / (two * h);
    }
    let hh = h * T::lit(10.0);
    for i in 0..N {
        let fp = eval(&shifted(&[(i, hh)]))?;
        let fm = eval(&shifted(&[(i, -hh)]))?;
        out.hess[i][i] = (fp - two * f0 + fm) / (hh * hh);
        for j in (i + 1)..N {
            let fpp = eval(&shifted(&[(i, hh), (j, hh)]))?;
            let fpm = eval(&shifted(&[(i, hh), (j, -hh)]))?;
            let fmp = eval(&shifted(&[(i, -hh), (j, hh)]))?;
            let fmm = eval(&shifted(&[(i, -hh), (j, -hh)]))?;
            let v = (fpp - fpm - fmp + fmm) / (T::lit(4.0) * hh * hh);
            out.hess[i][j] = v;
            out.hess[j][i] = v;
        }
    }
    Ok(out)
}

/// Evaluates a [`Real`]-generic function at plain values.
pub fn value_of<T, F, const N: usize>(f: F, theta: &[T; N]) -> T
where
    T: Scalar,
    F: FnOnce(&[Dual<T, 0>; N]) -> Dual<T, 0>,
{
    f(&theta.map(Dual::constant)).value
}
