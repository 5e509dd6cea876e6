//! Truncated Taylor series ("jets") in one variable.
//!
//! A `Jet<N>` holds the first `N` Taylor coefficients `c[k] = f^(k)(x0) / k!`
//! of a function about some base point. Arithmetic propagates the
//! coefficients exactly up to the truncation order, which is how every
//! vertical derivative in the crate is produced: the steady profile, the
//! pressure-law coefficients and the mode recursion are all evaluated as jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    /// The identity function `x` expanded about `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x0;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the base point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in &mut self.c {
            *v *= s;
        }
        self
    }

    pub fn recip(&self) -> Self {
        let u = &self.c;
        assert!(u[0] != 0.0, "reciprocal of a jet with zero constant term");
        let mut w = [0.0; N];
        w[0] = 1.0 / u[0];
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += u[j] * w[k - j];
            }
            w[k] = -s / u[0];
        }
        Self { c: w }
    }

    pub fn exp(&self) -> Self {
        let u = &self.c;
        let mut w = [0.0; N];
        w[0] = u[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * u[j] * w[k - j];
            }
            w[k] = s / k as f64;
        }
        Self { c: w }
    }

    pub fn ln(&self) -> Self {
        let u = &self.c;
        assert!(u[0] > 0.0, "logarithm of a jet with nonpositive constant term");
        let mut w = [0.0; N];
        w[0] = u[0].ln();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * w[j] * u[k - j];
            }
            w[k] = (u[k] - s / k as f64) / u[0];
        }
        Self { c: w }
    }

    /// `u^a` for `u(x0) > 0`.
    pub fn powf(&self, a: f64) -> Self {
        let u = &self.c;
        assert!(u[0] > 0.0, "power of a jet with nonpositive constant term");
        let mut w = [0.0; N];
        w[0] = u[0].powf(a);
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += (a * j as f64 - (k - j) as f64) * u[j] * w[k - j];
            }
            w[k] = s / (k as f64 * u[0]);
        }
        Self { c: w }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// Evaluates the truncated series at offset `t` from the base point.
    pub fn eval(&self, t: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
    }

    /// Re-expands the series about `x0 + t`.
    pub fn shift(&self, t: f64) -> Self {
        let mut w = self.c;
        // repeated synthetic division (Taylor shift)
        for i in 0..N {
            for j in (i..N - 1).rev() {
                w[j] += t * w[j + 1];
            }
        }
        Self { c: w }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut w = [0.0; N];
        for k in 0..N {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            w[k] = s;
        }
        Self { c: w }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.c[0] -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn mul(self, rhs: Jet<N>) -> Jet<N> {
        rhs.scale(self)
    }
}

impl<const N: usize> Div<f64> for Jet<N> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.scale(1.0 / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet<8>;

    #[test]
    fn exp_of_variable_matches_factorials() {
        let e = J::variable(0.0).exp();
        let mut f = 1.0;
        for k in 0..8 {
            if k > 0 {
                f *= k as f64;
            }
            assert!((e.c[k] - 1.0 / f).abs() < 1e-15);
        }
    }

    #[test]
    fn powf_and_ln_agree_with_closed_forms() {
        let x0 = 1.7;
        let p = J::variable(x0).powf(2.5);
        // d/dx x^2.5 = 2.5 x^1.5, d2 = 3.75 x^0.5, d3 = 1.875 x^-0.5
        assert!((p.derivative(1) - 2.5 * x0.powf(1.5)).abs() < 1e-13);
        assert!((p.derivative(2) - 3.75 * x0.powf(0.5)).abs() < 1e-13);
        assert!((p.derivative(3) - 1.875 * x0.powf(-0.5)).abs() < 1e-12);
        let l = J::variable(x0).ln();
        assert!((l.derivative(1) - 1.0 / x0).abs() < 1e-15);
        assert!((l.derivative(4) + 6.0 / x0.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = J::variable(0.3).exp() + 2.0;
        let b = J::variable(0.3).powf(1.3) + 1.0;
        let r = (a * b) / b;
        for k in 0..8 {
            assert!((r.c[k] - a.c[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_reexpands_series() {
        let f = J::variable(0.2).exp();
        let g = f.shift(0.1);
        let direct = J::variable(0.3).exp();
        for k in 0..4 {
            assert!((g.c[k] - direct.c[k]).abs() < 1e-6, "k={k}");
        }
        assert!((f.eval(0.1) - 0.3f64.exp()).abs() < 1e-9);
    }
}
