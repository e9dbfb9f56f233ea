//! Forward-mode dual numbers carrying a full gradient with respect to the
//! chart coordinates.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 8;

/// Scalars the expression evaluator can run on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn re(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn re(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
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
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// `re + Σ_l eps[l]·ε_l` with `ε_l ε_m = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: [f64; MAX_DIM],
}

impl Dual {
    pub fn constant(re: f64) -> Self {
        Self {
            re,
            eps: [0.0; MAX_DIM],
        }
    }

    /// The coordinate function `x_l` seeded with unit derivative in slot `l`.
    pub fn variable(re: f64, l: usize) -> Self {
        let mut eps = [0.0; MAX_DIM];
        eps[l] = 1.0;
        Self { re, eps }
    }

    /// Applies the chain rule: value `f`, derivative `df` at `self.re`.
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e *= df;
        }
        Self { re: f, eps }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps) {
            *a += b;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for (a, b) in self.eps.iter_mut().zip(rhs.eps) {
            *a -= b;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; MAX_DIM];
        for (l, e) in eps.iter_mut().enumerate() {
            *e = self.eps[l] * rhs.re + self.re * rhs.eps[l];
        }
        Self {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let q = self.re * inv;
        let mut eps = [0.0; MAX_DIM];
        for (l, e) in eps.iter_mut().enumerate() {
            *e = (self.eps[l] - q * rhs.eps[l]) * inv;
        }
        Self { re: q, eps }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.re, -1.0)
    }
}

impl Scalar for Dual {
    fn constant(c: f64) -> Self {
        Dual::constant(c)
    }
    fn re(&self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn powi(self, k: i32) -> Self {
        match k {
            0 => Dual::constant(1.0),
            1 => self,
            _ => self.chain(self.re.powi(k), k as f64 * self.re.powi(k - 1)),
        }
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.iter().all(|e| e.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0, 0);
        let y = Dual::variable(2.0, 1);
        let p = x * y;
        assert_eq!(p.re, 6.0);
        assert_eq!(&p.eps[..2], &[2.0, 3.0]);
        let q = x / y;
        assert_eq!(q.re, 1.5);
        assert_eq!(&q.eps[..2], &[0.5, -0.75]);
    }

    #[test]
    fn elementary_functions() {
        let x = Dual::variable(0.0, 0);
        assert_eq!(x.exp().eps[0], 1.0);
        assert_eq!(x.sin().eps[0], 1.0);
        assert_eq!(x.cos().eps[0], 0.0);
        let y = Dual::variable(4.0, 0);
        assert_eq!(y.sqrt().eps[0], 0.25);
        assert_eq!(y.ln().eps[0], 0.25);
        assert_eq!(y.powi(3).eps[0], 48.0);
        assert_eq!(y.powi(-1).eps[0], -1.0 / 16.0);
    }

    #[test]
    fn sqrt_at_zero_has_infinite_slope() {
        assert!(!Dual::variable(0.0, 0).sqrt().is_finite());
    }
}
