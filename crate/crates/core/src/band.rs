//! Symmetric banded matrices and an unpivoted LDLᵀ factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: `get(i, i - d)` for `d ≤ kd`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self { n, kd, data: vec![0.0; n * (kd + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kd(&self) -> usize {
        self.kd
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.kd {
            0.0
        } else {
            self.data[i * (self.kd + 1) + (i - j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.kd, "entry ({i}, {j}) outside band {}", self.kd);
        self.data[i * (self.kd + 1) + (i - j)] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let kd = self.kd;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * (kd + 1)..(i + 1) * (kd + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=kd.min(i) {
                let a = row[d];
                y[i] += a * x[i - d];
                y[i - d] += a * x[i];
            }
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// `self − s·other` (same shape).
    pub fn shifted(&self, s: f64, other: &SymBand) -> SymBand {
        debug_assert_eq!((self.n, self.kd), (other.n, other.kd));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - s * b).collect();
        SymBand { n: self.n, kd: self.kd, data }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// `A = L D Lᵀ` with unit lower-banded `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    kd: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    pub fn factor(a: &SymBand) -> Result<Self> {
        let (n, kd) = (a.n, a.kd);
        let w = kd + 1;
        let mut l = a.data.clone();
        let mut d = vec![0.0; n];
        for i in 0..n {
            // l[i*w + (i-k)] holds L_ik for k < i; diagonal slot is scratch
            for k in i.saturating_sub(kd)..i {
                let mut s = l[i * w + (i - k)];
                for p in i.saturating_sub(kd)..k {
                    if k - p <= kd {
                        s -= l[i * w + (i - p)] * l[k * w + (k - p)] * d[p];
                    }
                }
                l[i * w + (i - k)] = s / d[k];
            }
            let mut s = l[i * w];
            for k in i.saturating_sub(kd)..i {
                let lik = l[i * w + (i - k)];
                s -= lik * lik * d[k];
            }
            if !s.is_finite() {
                return Err(Error::Numerical(format!("non-finite pivot at row {i}")));
            }
            if s == 0.0 {
                let row = (i.saturating_sub(kd)..(i + kd + 1).min(n)).fold(0.0_f64, |m, j| m.max(a.get(i, j).abs()));
                s = f64::EPSILON * row.max(f64::MIN_POSITIVE);
            }
            d[i] = s;
            l[i * w] = 1.0;
        }
        Ok(Self { n, kd, l, d })
    }

    /// Number of negative pivots, i.e. negative eigenvalues of `A`.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kd, w) = (self.n, self.kd, self.kd + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(kd)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + kd + 1).min(n) {
                s -= self.l[j * w + (j - i)] * x[j];
            }
            x[i] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_band(n: usize, kd: usize, seed: u64, diag: f64) -> SymBand {
        let mut a = SymBand::zeros(n, kd);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            a.add(i, i, diag + next());
            for d in 1..=kd.min(i) {
                a.add(i, i - d, next());
            }
        }
        a
    }

    #[test]
    fn exact_zero_pivot_keeps_inertia() {
        // eigenvalues 1 ± √2 and 3
        let mut a = SymBand::zeros(3, 1);
        a.add(1, 0, 1.0);
        a.add(1, 1, 2.0);
        a.add(2, 2, 3.0);
        let f = Ldl::factor(&a).unwrap();
        assert_eq!(f.negative_count(), 1);
        assert!(f.min_abs_pivot() > 0.0);
    }

    #[test]
    fn dense_round_trip_and_matvec() {
        let a = random_band(9, 2, 3, 0.0);
        let m = a.to_dense();
        assert_eq!(m, m.transpose());
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut y = vec![0.0; 9];
        a.matvec(&x, &mut y);
        let yd = &m * nalgebra::DVector::from_vec(x.clone());
        for i in 0..9 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn inertia_matches_dense(seed in 0u64..1000, n in 3usize..40, kd in 1usize..4, shift in -1.0f64..1.0) {
            let a = random_band(n, kd, seed, shift);
            let ev = a.to_dense().symmetric_eigenvalues();
            prop_assume!(ev.iter().all(|v| v.abs() > 1e-8));
            let neg = ev.iter().filter(|&&v| v < 0.0).count();
            prop_assert_eq!(Ldl::factor(&a).unwrap().negative_count(), neg);
        }

        #[test]
        fn solve_matches_dense(seed in 0u64..1000, n in 3usize..40, kd in 1usize..4) {
            let a = random_band(n, kd, seed, 3.0);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let mut x = b.clone();
            Ldl::factor(&a).unwrap().solve_in_place(&mut x);
            let mut r = vec![0.0; n];
            a.matvec(&x, &mut r);
            for i in 0..n {
                prop_assert!((r[i] - b[i]).abs() < 1e-10);
            }
        }
    }
}
