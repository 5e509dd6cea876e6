//! Smooth normal modes by Taylor-series shooting from both walls toward the interface.
//!
//! With `ω = P'(ρ₀)ρ₀(ψ' + |ξ|φ)` the mode solves the first-order system
//!
//! ```text
//! ψ' = (g|ξ|²/μ) ψ + (1/(P'ρ₀) − |ξ|²/(μρ₀)) ω
//! ω' = ρ₀(g²|ξ|²/μ − μ) ψ − (g|ξ|²/μ) ω
//! ```
//!
//! with `ψ = 0` at both walls and `ψ`, `ω` continuous at `x₃ = 0`.

use crate::barotropic::BarotropicLaw;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::steady_state::{Side, SteadyProfile};
use crate::vgrid::VerticalGrid;

/// Number of Taylor coefficients carried per step.
pub const MODE_JET: usize = 20;
/// Highest vertical derivative exposed by [`SmoothMode::derivatives`].
pub const J_MAX: usize = 4;

type J = Jet<MODE_JET>;
type Out = Jet<{ J_MAX + 1 }>;

#[derive(Debug, Clone)]
struct Branch {
    dir: f64,
    starts: Vec<f64>,
    psi: Vec<J>,
    omega: Vec<J>,
    log_scale: Vec<f64>,
    end: (f64, f64),
    end_log: f64,
}

/// Values and the first [`J_MAX`] vertical derivatives of one mode at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    pub phi: [f64; J_MAX + 1],
    pub psi: [f64; J_MAX + 1],
    /// `ρ₀(|ξ|φ + ψ') = ω / P'(ρ₀)`.
    pub qt: [f64; J_MAX + 1],
}

#[derive(Debug, Clone)]
pub struct SmoothMode {
    pub xi: f64,
    pub mu: f64,
    pub lambda: f64,
    profile: SteadyProfile,
    lower: Branch,
    upper: Branch,
    /// Multipliers mapping each branch onto the `J = 1` mode.
    factor: [f64; 2],
    quad: VerticalGrid,
}

fn singular_distance(profile: &SteadyProfile, side: Side, x: f64) -> f64 {
    match *profile.law(side) {
        BarotropicLaw::Isothermal { .. } => f64::INFINITY,
        BarotropicLaw::Polytropic { k, gamma } => {
            let r = profile.interface_density(side);
            let xs = r.powf(gamma - 1.0) * k * gamma / (profile.g() * (gamma - 1.0));
            (xs - x).abs()
        }
    }
}

fn omega_scale(profile: &SteadyProfile, xi: f64) -> f64 {
    let r = profile.interface_density(Side::Upper);
    xi * r * profile.law(Side::Upper).dpressure_unchecked(r)
}

fn integrate_branch(profile: &SteadyProfile, xi: f64, mu: f64, side: Side) -> Branch {
    let g = profile.g();
    let law = profile.law(side);
    let a = g * xi * xi / mu;
    let (x_start, dir) = match side {
        Side::Lower => (-profile.m(), 1.0),
        Side::Upper => (profile.ell(), -1.0),
    };
    let ws = omega_scale(profile, xi);
    let mut x = x_start;
    let (mut p0, mut w0) = (0.0, ws);
    let mut log = 0.0;
    let mut br = Branch { dir, starts: vec![], psi: vec![], omega: vec![], log_scale: vec![], end: (0.0, 0.0), end_log: 0.0 };
    loop {
        let rho = profile.rho0_jet::<MODE_JET>(x, side);
        let pp = law.dpressure_jet(&rho);
        let b = (pp * rho).recip() - rho.recip() * (xi * xi / mu);
        let c = rho * (g * g * xi * xi / mu - mu);
        let mut ps = [0.0; MODE_JET];
        let mut om = [0.0; MODE_JET];
        ps[0] = p0;
        om[0] = w0;
        for k in 0..MODE_JET - 1 {
            let mut bw = 0.0;
            let mut cp = 0.0;
            for j in 0..=k {
                bw += b.c[j] * om[k - j];
                cp += c.c[j] * ps[k - j];
            }
            ps[k + 1] = (a * ps[k] + bw) / (k + 1) as f64;
            om[k + 1] = (cp - a * om[k]) / (k + 1) as f64;
        }
        let kappa = (xi * xi + (g * g * xi * xi / mu - mu) / pp.value()).abs().sqrt() + xi.abs().max(1.0);
        let remaining = x.abs();
        let mut h = (1.5 / kappa).min(0.25 * singular_distance(profile, side, x));
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let t = dir * h;
        let (psi_j, om_j) = (J { c: ps }, J { c: om });
        let (pe, we) = (psi_j.eval(t), om_j.eval(t));
        br.starts.push(x);
        br.psi.push(psi_j);
        br.omega.push(om_j);
        br.log_scale.push(log);
        let s = (pe * pe + (we / ws).powi(2)).sqrt();
        if last {
            br.end = (pe / s, we / s / ws);
            br.end_log = log + s.ln();
            break;
        }
        p0 = pe / s;
        w0 = we / s;
        log += s.ln();
        x += t;
    }
    br
}

/// Interface mismatch `ψ⁻ω⁺ − ψ⁺ω⁻` of unit shooting vectors; zero at an eigenvalue.
pub fn mismatch(profile: &SteadyProfile, xi: f64, mu: f64) -> f64 {
    let lo = integrate_branch(profile, xi, mu, Side::Lower);
    let up = integrate_branch(profile, xi, mu, Side::Upper);
    lo.end.0 * up.end.1 - up.end.0 * lo.end.1
}

impl Branch {
    fn step_at(&self, x: f64) -> usize {
        let k = if self.dir > 0.0 {
            self.starts.partition_point(|&s| s <= x)
        } else {
            self.starts.partition_point(|&s| s >= x)
        };
        k.saturating_sub(1).min(self.starts.len() - 1)
    }

    fn jets(&self, x: f64) -> (J, J, f64) {
        let k = self.step_at(x);
        let t = x - self.starts[k];
        (self.psi[k].shift(t), self.omega[k].shift(t), self.log_scale[k] - self.end_log)
    }
}

fn truncate(j: &J) -> Out {
    let mut c = [0.0; J_MAX + 1];
    c.copy_from_slice(&j.c[..=J_MAX]);
    Out { c }
}

fn derivs(j: &Out) -> [f64; J_MAX + 1] {
    std::array::from_fn(|k| j.derivative(k))
}

impl SmoothMode {
    /// Refines `mu_guess` to the shooting eigenvalue and builds the `J = 1` mode.
    pub fn solve(profile: &SteadyProfile, xi: f64, mu_guess: f64) -> Result<Self> {
        if !(mu_guess < 0.0) {
            return Err(Error::Domain(format!("smooth modes need an unstable eigenvalue, got mu = {mu_guess}")));
        }
        let f = |mu: f64| mismatch(profile, xi, mu);
        let (mut m0, mut m1) = (mu_guess, mu_guess * (1.0 + 1e-6));
        let (mut f0, mut f1) = (f(m0), f(m1));
        let mut converged = false;
        for _ in 0..60 {
            if f1 == f0 {
                converged = f1 == 0.0 || (m1 - m0).abs() <= 1e-14 * m1.abs();
                break;
            }
            let m2 = m1 - f1 * (m1 - m0) / (f1 - f0);
            if !(m2 < 0.0 && m2 >= -profile.g() * xi * (1.0 + 1e-8)) {
                return Err(Error::Numerical(format!("shooting left the admissible range at mu = {m2}")));
            }
            m0 = m1;
            f0 = f1;
            m1 = m2;
            f1 = f(m1);
            if (m1 - m0).abs() <= 1e-14 * m1.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("shooting did not converge at |xi| = {xi} (last mu = {m1})")));
        }
        let mu = m1;
        let lower = integrate_branch(profile, xi, mu, Side::Lower);
        let upper = integrate_branch(profile, xi, mu, Side::Upper);
        if lower.end.0.abs() < 1e-12 || upper.end.0.abs() < 1e-12 {
            return Err(Error::Numerical("shooting solution has a vanishing interface value".into()));
        }
        let len = profile.m().max(profile.ell());
        let quad = VerticalGrid::interface_refined(
            profile.m(),
            profile.ell(),
            48,
            48,
            (len / 48.0).min(0.5 / xi),
            10,
        )?;
        let mut mode = Self {
            xi,
            mu,
            lambda: (-mu).sqrt(),
            profile: *profile,
            factor: [1.0 / lower.end.0, 1.0 / upper.end.0],
            lower,
            upper,
            quad,
        };
        let jn = mode.quad.integrate(|x, side| {
            let p = mode.derivatives(x, side);
            let rho = profile.rho0_unchecked(x, side);
            0.5 * rho * (p.phi[0] * p.phi[0] + p.psi[0] * p.psi[0])
        });
        let s = 1.0 / jn.sqrt();
        mode.factor.iter_mut().for_each(|f| *f *= s);
        Ok(mode)
    }

    pub fn profile(&self) -> &SteadyProfile {
        &self.profile
    }

    /// Quadrature grid adapted to this mode.
    pub fn quad_grid(&self) -> &VerticalGrid {
        &self.quad
    }

    pub fn derivatives(&self, x: f64, side: Side) -> ModePoint {
        let (br, f) = match side {
            Side::Lower => (&self.lower, self.factor[0]),
            Side::Upper => (&self.upper, self.factor[1]),
        };
        let (psi, omega, log) = br.jets(x);
        let scale = f * log.exp();
        let psi = truncate(&psi) * scale;
        let omega = truncate(&omega) * scale;
        let rho = self.profile.rho0_jet::<{ J_MAX + 1 }>(x, side);
        let pp = self.profile.law(side).dpressure_jet(&rho);
        let g = self.profile.g();
        let phi = (omega - rho * psi * g) / rho * (self.xi / self.mu);
        let qt = omega / pp;
        ModePoint { phi: derivs(&phi), psi: derivs(&psi), qt: derivs(&qt) }
    }

    /// `J(φ, ψ)` on the mode's quadrature grid.
    pub fn mass(&self) -> f64 {
        self.quad.integrate(|x, side| {
            let p = self.derivatives(x, side);
            0.5 * self.profile.rho0_unchecked(x, side) * (p.phi[0].powi(2) + p.psi[0].powi(2))
        })
    }

    /// `E(φ, ψ)` on the mode's quadrature grid.
    pub fn energy(&self) -> f64 {
        let g = self.profile.g();
        self.quad.integrate(|x, side| {
            let p = self.derivatives(x, side);
            let rho = self.profile.rho0_unchecked(x, side);
            let a = self.profile.sound_speed_sq(x, side) * rho;
            let d = p.psi[1] + self.xi * p.phi[0];
            0.5 * (a * d * d - 2.0 * g * self.xi * rho * p.psi[0] * p.phi[0])
        })
    }

    /// Per-slab `‖∂ʲφ‖² + ‖∂ʲψ‖²` and `‖∂ʲ(ω/P')‖²` for `j = 0..=J_MAX`.
    pub fn seminorm_table(&self) -> ([[f64; 2]; J_MAX + 1], [[f64; 2]; J_MAX + 1]) {
        let mut a = [[0.0; 2]; J_MAX + 1];
        let mut q = [[0.0; 2]; J_MAX + 1];
        for c in 0..self.quad.n_cells() {
            let side = self.quad.cell_side(c);
            let s = usize::from(side == Side::Upper);
            for (x, w) in self.quad.quad_points(c) {
                let p = self.derivatives(x, side);
                for j in 0..=J_MAX {
                    a[j][s] += w * (p.phi[j].powi(2) + p.psi[j].powi(2));
                    q[j][s] += w * p.qt[j].powi(2);
                }
            }
        }
        (a, q)
    }
}
