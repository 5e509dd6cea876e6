//! Growth rates `λ(|ξ|)` from the constrained minimization of `E` over `J = 1`.
//!
//! Unknowns are interleaved as `φ_c ↦ 2c` (one per cell) and `ψ_i ↦ 2i − 1`
//! (interior nodes), so both forms are pentadiagonal. Matrices carry the full
//! quadratic forms: `vᵀ E v = 2 E(φ, ψ)` and `vᵀ J v = 2 J(φ, ψ)`.

mod smooth;

pub use smooth::{mismatch, ModePoint, SmoothMode, J_MAX, MODE_JET};

use rayon::prelude::*;
use serde::Serialize;

use crate::band::{Ldl, SymBand};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::steady_state::{Side, SteadyProfile};
use crate::vgrid::{DiscreteField, Representation, VerticalGrid};

pub struct QuadraticForms<'a> {
    pub profile: &'a SteadyProfile,
    pub grid: &'a VerticalGrid,
    pub xi: f64,
    pub e: SymBand,
    pub j: SymBand,
}

pub fn n_unknowns(grid: &VerticalGrid) -> usize {
    2 * grid.n_cells() - 1
}

/// Global indices of `[φ_c, ψ_left, ψ_right]` for a cell; Dirichlet ends map to `None`.
fn local_dofs(grid: &VerticalGrid, c: usize) -> [Option<usize>; 3] {
    let n = grid.n_cells();
    [Some(2 * c), (c >= 1).then(|| 2 * c - 1), (c + 1 < n).then(|| 2 * c + 1)]
}

pub fn assemble_forms<'a>(profile: &'a SteadyProfile, grid: &'a VerticalGrid, xi: f64) -> Result<QuadraticForms<'a>> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Domain(format!("|xi| must be positive, got {xi}")));
    }
    if (grid.m() - profile.m()).abs() > 1e-12 * profile.m() || (grid.ell() - profile.ell()).abs() > 1e-12 * profile.ell() {
        return Err(Error::Config("grid and profile cover different slabs".into()));
    }
    let n = n_unknowns(grid);
    let mut e = SymBand::zeros(n, 2);
    let mut j = SymBand::zeros(n, 2);
    let g = profile.g();
    for c in 0..grid.n_cells() {
        let side = grid.cell_side(c);
        let (x0, _) = grid.cell_bounds(c);
        let h = grid.width(c);
        let dofs = local_dofs(grid, c);
        let mut ke = [[0.0; 3]; 3];
        let mut kj = [[0.0; 3]; 3];
        for (x, w) in grid.quad_points(c) {
            let rho = profile.rho0_unchecked(x, side);
            let a = profile.sound_speed_sq(x, side) * rho;
            let b = g * xi * rho;
            let t = (x - x0) / h;
            let s = [xi, -1.0 / h, 1.0 / h];
            let p = [0.0, 1.0 - t, t];
            let f = [1.0, 0.0, 0.0];
            for k in 0..3 {
                for l in 0..3 {
                    ke[k][l] += w * (a * s[k] * s[l] - b * (p[k] * f[l] + p[l] * f[k]));
                    kj[k][l] += w * rho * (f[k] * f[l] + p[k] * p[l]);
                }
            }
        }
        for k in 0..3 {
            for l in 0..=k {
                if let (Some(gk), Some(gl)) = (dofs[k], dofs[l]) {
                    e.add(gk, gl, ke[k][l]);
                    j.add(gk, gl, kj[k][l]);
                }
            }
        }
    }
    Ok(QuadraticForms { profile, grid, xi, e, j })
}

impl QuadraticForms<'_> {
    pub fn n(&self) -> usize {
        self.e.n()
    }

    /// `E(φ, ψ)` for a coefficient vector.
    pub fn energy(&self, v: &[f64]) -> f64 {
        0.5 * self.e.quad_form(v)
    }

    /// `J(φ, ψ)` for a coefficient vector.
    pub fn mass(&self, v: &[f64]) -> f64 {
        0.5 * self.j.quad_form(v)
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        self.e.quad_form(v) / self.j.quad_form(v)
    }

    pub fn tol_neg(&self) -> f64 {
        1e-9 * self.profile.g() * self.xi
    }

    pub fn split(&self, v: &[f64]) -> (DiscreteField, DiscreteField) {
        let n = self.grid.n_cells();
        let phi = (0..n).map(|c| v[2 * c]).collect();
        let mut psi = vec![0.0; n + 1];
        for i in 1..n {
            psi[i] = v[2 * i - 1];
        }
        (
            DiscreteField { repr: Representation::P0, values: phi },
            DiscreteField { repr: Representation::P1c { dirichlet: true }, values: psi },
        )
    }

    pub fn pack(&self, phi: &DiscreteField, psi: &DiscreteField) -> Vec<f64> {
        let n = self.grid.n_cells();
        let mut v = vec![0.0; 2 * n - 1];
        for c in 0..n {
            v[2 * c] = phi.values[c];
        }
        for i in 1..n {
            v[2 * i - 1] = psi.values[i];
        }
        v
    }
}

/// `(E, J)` of a pair given pointwise as `(φ, ψ, ψ')`, by the grid quadrature.
pub fn energies_by_quadrature(
    profile: &SteadyProfile,
    grid: &VerticalGrid,
    xi: f64,
    f: impl Fn(f64, Side) -> (f64, f64, f64),
) -> (f64, f64) {
    let g = profile.g();
    let (mut e, mut j) = (0.0, 0.0);
    for c in 0..grid.n_cells() {
        let side = grid.cell_side(c);
        for (x, w) in grid.quad_points(c) {
            let rho = profile.rho0_unchecked(x, side);
            let a = profile.sound_speed_sq(x, side) * rho;
            let (phi, psi, dpsi) = f(x, side);
            let d = dpsi + xi * phi;
            e += w * (a * d * d - 2.0 * g * xi * rho * psi * phi);
            j += w * rho * (phi * phi + psi * psi);
        }
    }
    (0.5 * e, 0.5 * j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Inertia bisection plus shifted inverse iteration on the banded pencil.
    #[default]
    Banded,
    /// Cholesky reduction and a full symmetric eigendecomposition.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub el_residual: f64,
    pub flux_jump: f64,
    pub psi0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub xi: f64,
    pub mu: f64,
    pub lambda: f64,
    pub is_unstable: bool,
    /// Second eigenvalue of the pencil; `mu2 − mu` is the eigengap.
    pub mu2: f64,
    #[serde(skip)]
    pub phi: DiscreteField,
    #[serde(skip)]
    pub psi: DiscreteField,
    pub residuals: Residuals,
}

impl ModeSolution {
    pub fn eigengap(&self) -> f64 {
        self.mu2 - self.mu
    }
}

pub fn solve_mode(forms: &QuadraticForms) -> Result<ModeSolution> {
    solve_mode_with(forms, Solver::Banded)
}

pub fn solve_mode_with(forms: &QuadraticForms, solver: Solver) -> Result<ModeSolution> {
    let (mu, mu2, mut v) = match solver {
        Solver::Banded => banded_eigen(forms)?,
        Solver::Dense => dense_eigen(forms)?,
    };
    let jn = forms.mass(&v);
    let scale = 1.0 / jn.sqrt();
    let psi0 = v[2 * forms.grid.interface_index() - 1];
    let sign = if psi0 < 0.0 { -scale } else { scale };
    v.iter_mut().for_each(|x| *x *= sign);
    let (phi, psi) = forms.split(&v);
    let is_unstable = mu < -forms.tol_neg();
    let lambda = if is_unstable { (-mu).sqrt() } else { 0.0 };
    let mut mode = ModeSolution {
        xi: forms.xi,
        mu,
        lambda,
        is_unstable,
        mu2,
        phi,
        psi,
        residuals: Residuals { el_residual: 0.0, flux_jump: 0.0, psi0: 0.0 },
    };
    mode.residuals = residuals(&mode, forms.profile, forms.grid);
    Ok(mode)
}

fn inertia(forms: &QuadraticForms, sigma: f64) -> Result<usize> {
    Ok(Ldl::factor(&forms.e.shifted(sigma, &forms.j))?.negative_count())
}

/// Smallest `σ` in `[lo, hi]` (to `rtol`) with at least `k` eigenvalues below.
fn bisect_count(forms: &QuadraticForms, k: usize, mut lo: f64, mut hi: f64, rtol: f64) -> Result<(f64, f64)> {
    let scale = forms.profile.g() * forms.xi;
    for _ in 0..200 {
        if hi - lo <= rtol * (lo.abs().max(hi.abs()).max(1e-3 * scale)) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inertia(forms, mid)? >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

fn banded_eigen(forms: &QuadraticForms) -> Result<(f64, f64, Vec<f64>)> {
    let n = forms.n();
    let gx = forms.profile.g() * forms.xi;
    let lo = -gx * (1.0 + 1e-8);
    let below = inertia(forms, lo)?;
    if below > 0 {
        return Err(Error::Numerical(format!(
            "{below} eigenvalue(s) below the lower bound -g|xi| = {}",
            -gx
        )));
    }
    let mut hi = 0.0;
    let mut step = gx.max(1.0);
    while inertia(forms, hi)? == 0 {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("failed to bracket the smallest eigenvalue".into()));
        }
    }
    let (lo1, hi1) = bisect_count(forms, 1, lo, hi, 1e-13)?;

    let mut hi2 = hi1.max(0.0) + gx.max(1.0);
    let mut step = hi2.abs().max(1.0);
    while inertia(forms, hi2)? < 2 {
        hi2 += step;
        step *= 2.0;
        if !hi2.is_finite() {
            return Err(Error::Numerical("failed to bracket the second eigenvalue".into()));
        }
    }
    let (_, mu2) = bisect_count(forms, 2, lo1, hi2, 1e-9)?;

    // shift just below the smallest eigenvalue, where E − σJ is positive definite
    let width = (hi1 - lo1).max(1e-12 * gx.max(lo1.abs()));
    let sigma = lo1 - width;
    let ldl = Ldl::factor(&forms.e.shifted(sigma, &forms.j))?;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
    let mut jv = vec![0.0; n];
    let mut mu = f64::NAN;
    for it in 0..100 {
        forms.j.matvec(&v, &mut jv);
        ldl.solve_in_place(&mut jv);
        std::mem::swap(&mut v, &mut jv);
        let norm = forms.j.quad_form(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let next = forms.rayleigh_quotient(&v);
        if it > 1 && (next - mu).abs() <= 1e-14 * next.abs().max(gx * 1e-3) {
            mu = next;
            break;
        }
        mu = next;
    }
    if !mu.is_finite() {
        return Err(Error::Numerical(format!(
            "inverse iteration diverged (smallest pivot {:e})",
            ldl.min_abs_pivot()
        )));
    }
    Ok((mu, mu2.max(mu), v))
}

fn dense_eigen(forms: &QuadraticForms) -> Result<(f64, f64, Vec<f64>)> {
    let jd = forms.j.to_dense();
    let ed = forms.e.to_dense();
    let chol = nalgebra::Cholesky::new(jd)
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_e = l
        .solve_lower_triangular(&ed)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_e.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (i1, i2) = (order[0], order[1]);
    let y = eig.eigenvectors.column(i1).into_owned();
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let v: Vec<f64> = x.iter().copied().collect();
    Ok((forms.rayleigh_quotient(&v), eig.eigenvalues[i2], v))
}

/// Euler–Lagrange residual norm, interface flux mismatch and `ψ(0)`.
///
/// Nodal values of `ω = P'(ρ₀)ρ₀(ψ' + |ξ|φ)` are recovered from each adjacent
/// cell by testing against the half hat supported there; `ω'` inside a cell is
/// the slope of the recovered nodal values.
pub fn residuals(mode: &ModeSolution, profile: &SteadyProfile, grid: &VerticalGrid) -> Residuals {
    let (xi, mu, g) = (mode.xi, mode.mu, profile.g());
    let n = grid.n_cells();
    let phi = &mode.phi.values;
    let psi = &mode.psi.values;
    // one-sided fluxes: from_right[i] is ω(x_i⁺), from_left[i] is ω(x_i⁻)
    let mut from_right = vec![0.0; n + 1];
    let mut from_left = vec![0.0; n + 1];
    for c in 0..n {
        let side = grid.cell_side(c);
        let (x0, _) = grid.cell_bounds(c);
        let h = grid.width(c);
        let slope = (psi[c + 1] - psi[c]) / h;
        let (mut fl, mut fr) = (0.0, 0.0);
        for (x, w) in grid.quad_points(c) {
            let rho = profile.rho0_unchecked(x, side);
            let omega = profile.sound_speed_sq(x, side) * rho * (slope + xi * phi[c]);
            let t = (x - x0) / h;
            let ps = psi[c] * (1.0 - t) + psi[c + 1] * t;
            let src = mu * rho * ps + g * xi * rho * phi[c];
            fl += w * (omega * (-1.0 / h) - src * (1.0 - t));
            fr += w * (omega * (1.0 / h) - src * t);
        }
        from_right[c] = -fl;
        from_left[c + 1] = fr;
    }
    let mut nodal = vec![0.0; n + 1];
    nodal[0] = from_right[0];
    nodal[n] = from_left[n];
    for i in 1..n {
        nodal[i] = 0.5 * (from_left[i] + from_right[i]);
    }

    let mut acc = 0.0;
    for c in 0..n {
        let side = grid.cell_side(c);
        let (x0, _) = grid.cell_bounds(c);
        let h = grid.width(c);
        let slope = (psi[c + 1] - psi[c]) / h;
        let domega = (nodal[c + 1] - nodal[c]) / h;
        for (x, w) in grid.quad_points(c) {
            let rho = profile.rho0_unchecked(x, side);
            let omega = profile.sound_speed_sq(x, side) * rho * (slope + xi * phi[c]);
            let t = (x - x0) / h;
            let ps = psi[c] * (1.0 - t) + psi[c + 1] * t;
            let r1 = mu * rho * phi[c] - xi * omega + g * xi * rho * ps;
            let r2 = mu * rho * ps + domega + g * xi * rho * phi[c];
            acc += w * (r1 * r1 + r2 * r2);
        }
    }
    let k = grid.interface_index();
    let (wm, wp) = (from_left[k], from_right[k]);
    let mean = 0.5 * (wm.abs() + wp.abs());
    let flux_jump = if mean > 0.0 { (wm - wp).abs() / mean } else { 0.0 };
    Residuals { el_residual: acc.sqrt(), flux_jump, psi0: psi[k] }
}

/// `‖ψ‖_{L²}` of the P1c component.
pub fn psi_l2(mode: &ModeSolution, grid: &VerticalGrid) -> f64 {
    let mut acc = 0.0;
    for c in 0..grid.n_cells() {
        for (x, w) in grid.quad_points(c) {
            let v = mode.psi.eval(grid, c, x);
            acc += w * v * v;
        }
    }
    acc.sqrt()
}

/// Trial profile `ψ_α` (weighted or not) with its derivative.
pub fn test_function(profile: &SteadyProfile, alpha: f64, weighted: bool, x: f64, side: Side) -> (f64, f64) {
    let t = Jet::<2>::variable(x);
    let base = match side {
        Side::Upper => (t * (-1.0 / profile.ell()) + 1.0).powf(0.5 * alpha),
        Side::Lower => (t * (1.0 / profile.m()) + 1.0).powf(0.5 * alpha),
    };
    let psi = if weighted {
        let law = profile.law(side);
        let r = profile.interface_density(side);
        let rho = profile.rho0_jet::<2>(x, side);
        let w = (law.dpressure_jet(&rho) / rho * (r / law.dpressure_unchecked(r))).sqrt();
        w * base
    } else {
        base
    };
    (psi.value(), psi.derivative(1))
}

/// `(E, J)` at `(−ψ_α'/|ξ|, ψ_α)`.
pub fn test_function_energies(
    profile: &SteadyProfile,
    grid: &VerticalGrid,
    xi: f64,
    alpha: f64,
    weighted: bool,
) -> Result<(f64, f64)> {
    if !(alpha >= 2.0) {
        return Err(Error::Domain(format!("test-function exponent must be >= 2, got {alpha}")));
    }
    if !(xi > 0.0) {
        return Err(Error::Domain(format!("|xi| must be positive, got {xi}")));
    }
    Ok(energies_by_quadrature(profile, grid, xi, |x, side| {
        let (psi, dpsi) = test_function(profile, alpha, weighted, x, side);
        (-dpsi / xi, psi, dpsi)
    }))
}

/// `E/J` at `(−ψ_α'/|ξ|, ψ_α)`, an upper bound for the smallest eigenvalue.
pub fn test_function_quotient(
    profile: &SteadyProfile,
    grid: &VerticalGrid,
    xi: f64,
    alpha: f64,
    weighted: bool,
) -> Result<f64> {
    let (e, j) = test_function_energies(profile, grid, xi, alpha, weighted)?;
    Ok(e / j)
}

/// Closed form of `E(−ψ_α'/|ξ|, ψ_α)` for the weighted trial function.
pub fn weighted_numerator_closed_form(profile: &SteadyProfile, alpha: f64) -> f64 {
    let g = profile.g();
    let rm = profile.interface_density(Side::Lower);
    let rp = profile.interface_density(Side::Upper);
    let sm = profile.m() * rm / profile.law(Side::Lower).dpressure_unchecked(rm);
    let sp = profile.ell() * rp / profile.law(Side::Upper).dpressure_unchecked(rp);
    0.5 * g * (-profile.jump + g / (alpha + 1.0) * (sm + sp))
}

/// Grid refined toward the interface so that its first cells resolve `e^{-|ξ||x₃|}`.
pub fn grid_for_frequency(
    profile: &SteadyProfile,
    n_lower: usize,
    n_upper: usize,
    quad_order: usize,
    xi: f64,
) -> Result<VerticalGrid> {
    VerticalGrid::interface_refined(profile.m(), profile.ell(), n_lower, n_upper, 1.0 / (20.0 * xi), quad_order)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub xi: f64,
    pub lambda: f64,
    pub mu: f64,
    pub el_residual: f64,
    pub flux_jump: f64,
    pub psi0: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionCurve {
    pub points: Vec<CurvePoint>,
    /// Least-squares `(Ĉ₁, Ĉ₂)` of `λ² ≈ C₁|ξ| − C₂` over the unstable points.
    pub fit: Option<(f64, f64)>,
}

impl DispersionCurve {
    /// `Λ(R)`: the largest swept `λ` with `|ξ| ≤ R`.
    pub fn lambda_max(&self, r: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.xi <= r && p.error.is_none())
            .map(|p| p.lambda)
            .fold(0.0, f64::max)
    }

    /// Refits `(Ĉ₁, Ĉ₂)` over `|ξ| ∈ [lo, hi]`.
    pub fn fit_window(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.error.is_none() && p.lambda > 0.0 && p.xi >= lo && p.xi <= hi)
            .map(|p| (p.xi, p.lambda * p.lambda))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / n, sy / n);
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let c1 = sxy / sxx;
        Some((c1, c1 * mx - my))
    }
}

pub fn sweep(profile: &SteadyProfile, grid: &VerticalGrid, xis: &[f64]) -> DispersionCurve {
    let points: Vec<CurvePoint> = xis
        .par_iter()
        .map(|&xi| match assemble_forms(profile, grid, xi).and_then(|f| solve_mode(&f)) {
            Ok(m) => CurvePoint {
                xi,
                lambda: m.lambda,
                mu: m.mu,
                el_residual: m.residuals.el_residual,
                flux_jump: m.residuals.flux_jump,
                psi0: m.residuals.psi0,
                error: None,
            },
            Err(e) => CurvePoint {
                xi,
                lambda: f64::NAN,
                mu: f64::NAN,
                el_residual: f64::NAN,
                flux_jump: f64::NAN,
                psi0: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut curve = DispersionCurve { points, fit: None };
    curve.fit = curve.fit_window(0.0, f64::INFINITY);
    curve
}
