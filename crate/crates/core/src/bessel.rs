//! Bessel functions `J₀` and `J₁` of real argument.
//!
//! Power series below `x = 5`, Miller backward recurrence on `[5, 25)` and the
//! Hankel asymptotic expansion beyond.

const SERIES_MAX: f64 = 5.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

pub fn j0(x: f64) -> f64 {
    jn01(x.abs()).0
}

pub fn j1(x: f64) -> f64 {
    let v = jn01(x.abs()).1;
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `(J₀(x), J₁(x))` for `x ≥ 0`.
pub fn jn01(x: f64) -> (f64, f64) {
    if x < SERIES_MAX {
        (series(0, x), series(1, x))
    } else if x < ASYMPTOTIC_MIN {
        miller(x)
    } else {
        (hankel(0, x), hankel(1, x))
    }
}

fn series(nu: u32, x: f64) -> f64 {
    let y = -0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        term *= y / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(x: f64) -> (f64, f64) {
    let top = 2 * ((x as usize + 40) / 2);
    let (mut hi, mut cur) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let (mut b0, mut b1) = (0.0, 0.0);
    for k in (1..=top).rev() {
        let lo = 2.0 * k as f64 / x * cur - hi;
        hi = cur;
        cur = lo;
        // cur = J_{k-1}, hi = J_k (unnormalized)
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if k == 1 {
            b0 = cur;
            b1 = hi;
        }
        if cur.abs() > 1e250 {
            hi *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
        }
    }
    let s = 1.0 / (norm + b0);
    (b0 * s, b1 * s)
}

fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() > prev || a.abs() < 1e-17 {
            break;
        }
        prev = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let chi = x - (0.5 * nu as f64 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
