//! Method-of-lines integration of the linearized equations, one horizontal frequency at a
//! time.
//!
//! Horizontal components live in P0, vertical components in P1c with zero end values and
//! `q = ρ₀ s` with `s` in P0. Continuity is exact in this layout, horizontal momentum is the
//! `ρ₀`-weighted cell average and vertical momentum is tested against hat functions, so the
//! pressure condition at the interface is natural. The scheme conserves
//!
//! ```text
//! ℰ = ∫ (ρ₀/2)|∂ₜv|² + (P'ρ₀/2)|div v − g v₃/P'|² − (g⟦ρ₀⟧/2)|v₃(0)|²
//! ```
//!
//! exactly in semi-discrete form, leaving only the RK4 time error.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::{Ldl, SymBand};
use crate::dispersion::ModeSolution;
use crate::error::{Error, Result};
use crate::steady_state::SteadyProfile;
use crate::vgrid::VerticalGrid;

type C = Complex64;

const I: C = C::new(0.0, 1.0);
/// RK4 reaches `|z| = 2√2` on the imaginary axis; keep a margin.
const RK4_IMAG_LIMIT: f64 = 2.75;

/// State at one horizontal frequency `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    pub xi: [f64; 2],
    pub t: f64,
    /// Horizontal displacement, one value per cell and component.
    pub eta_h: [Vec<C>; 2],
    /// Vertical displacement at nodes; end values stay zero.
    pub eta3: Vec<C>,
    pub v_h: [Vec<C>; 2],
    pub v3: Vec<C>,
    /// `q = ρ₀ s`, one `s` per cell.
    pub s: Vec<C>,
}

impl LinearState {
    pub fn zeros(grid: &VerticalGrid, xi: [f64; 2]) -> Self {
        let (nc, nn) = (grid.n_cells(), grid.n_nodes());
        let z = C::new(0.0, 0.0);
        Self {
            xi,
            t: 0.0,
            eta_h: [vec![z; nc], vec![z; nc]],
            eta3: vec![z; nn],
            v_h: [vec![z; nc], vec![z; nc]],
            v3: vec![z; nn],
            s: vec![z; nc],
        }
    }

    fn blocks(&self) -> [&Vec<C>; 7] {
        [&self.eta_h[0], &self.eta_h[1], &self.eta3, &self.v_h[0], &self.v_h[1], &self.v3, &self.s]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<C>; 7] {
        let [e1, e2] = &mut self.eta_h;
        let [v1, v2] = &mut self.v_h;
        [e1, e2, &mut self.eta3, v1, v2, &mut self.v3, &mut self.s]
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, a: f64, other: &LinearState) {
        for (x, y) in self.blocks_mut().into_iter().zip(other.blocks()) {
            x.iter_mut().zip(y).for_each(|(u, v)| *u += v * a);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.blocks_mut() {
            x.iter_mut().for_each(|u| *u *= a);
        }
    }

    /// Euclidean norm of all stored coefficients.
    pub fn coefficient_norm(&self) -> f64 {
        self.blocks().iter().flat_map(|b| b.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks().iter().flat_map(|b| b.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn xi_abs(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }
}

/// Discrete right-hand side at one frequency, with its cell and hat integrals.
#[derive(Debug, Clone)]
pub struct FrequencyOperator {
    profile: SteadyProfile,
    grid: VerticalGrid,
    xi: [f64; 2],
    /// `∫_c ρ₀`
    mc: Vec<f64>,
    /// `∫_c P'ρ₀`
    pc: Vec<f64>,
    /// `∫_c ρ₀ h_left`, `∫_c ρ₀ h_right` for the two hats of cell `c`.
    ra: Vec<f64>,
    rb: Vec<f64>,
    mass3: SymBand,
    mass3_ldl: Ldl,
}

fn interior(grid: &VerticalGrid) -> usize {
    grid.n_nodes() - 2
}

impl FrequencyOperator {
    pub fn new(profile: &SteadyProfile, grid: &VerticalGrid, xi: [f64; 2]) -> Result<Self> {
        if grid.m() != profile.m() || grid.ell() != profile.ell() {
            return Err(Error::Config("grid does not span the profile's slab".into()));
        }
        let nc = grid.n_cells();
        let (mut mc, mut pc, mut ra, mut rb) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
        let ni = interior(grid);
        let mut mass3 = SymBand::zeros(ni, 1);
        for c in 0..nc {
            let side = grid.cell_side(c);
            let (a, b) = grid.cell_bounds(c);
            let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
            for (x, w) in grid.quad_points(c) {
                let rho = profile.rho0_unchecked(x, side);
                let (hl, hr) = ((b - x) / (b - a), (x - a) / (b - a));
                mc[c] += w * rho;
                pc[c] += w * rho * profile.sound_speed_sq(x, side);
                ra[c] += w * rho * hl;
                rb[c] += w * rho * hr;
                ll += w * rho * hl * hl;
                lr += w * rho * hl * hr;
                rr += w * rho * hr * hr;
            }
            // node c ↦ interior index c − 1
            if c >= 1 {
                mass3.add(c - 1, c - 1, ll);
            }
            if c < ni {
                mass3.add(c, c, rr);
            }
            if c >= 1 && c < ni {
                mass3.add(c, c - 1, lr);
            }
        }
        let mass3_ldl = Ldl::factor(&mass3)?;
        Ok(Self { profile: *profile, grid: grid.clone(), xi, mc, pc, ra, rb, mass3, mass3_ldl })
    }

    pub fn grid(&self) -> &VerticalGrid {
        &self.grid
    }

    pub fn profile(&self) -> &SteadyProfile {
        &self.profile
    }

    pub fn xi(&self) -> [f64; 2] {
        self.xi
    }

    /// Cellwise `div` of a (horizontal P0, vertical P1c) field.
    fn divergence(&self, h: &[Vec<C>; 2], v3: &[C]) -> Vec<C> {
        (0..self.grid.n_cells())
            .map(|c| I * (h[0][c] * self.xi[0] + h[1][c] * self.xi[1]) + (v3[c + 1] - v3[c]) / self.grid.width(c))
            .collect()
    }

    fn solve_mass3(&self, f: &[C]) -> Vec<C> {
        let mut re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = f.iter().map(|z| z.im).collect();
        self.mass3_ldl.solve_in_place(&mut re);
        self.mass3_ldl.solve_in_place(&mut im);
        re.into_iter().zip(im).map(|(a, b)| C::new(a, b)).collect()
    }

    /// `∂ₜ` of `state`.
    pub fn rhs(&self, state: &LinearState) -> LinearState {
        let g = self.profile.g();
        let nc = self.grid.n_cells();
        let mut d = LinearState::zeros(&self.grid, state.xi);
        d.t = state.t;
        d.eta_h = state.v_h.clone();
        d.eta3 = state.v3.clone();
        let div = self.divergence(&state.v_h, &state.v3);
        d.s = div.iter().map(|z| -z).collect();
        let mut f = vec![C::new(0.0, 0.0); self.grid.n_nodes()];
        for c in 0..nc {
            let h = self.grid.width(c);
            let (el, er) = (state.eta3[c], state.eta3[c + 1]);
            let s = state.s[c];
            let push = self.pc[c] * s + (el * self.ra[c] + er * self.rb[c]) * g;
            for j in 0..2 {
                d.v_h[j][c] = -I * self.xi[j] * push / self.mc[c];
            }
            let deta = (er - el) / h;
            f[c] += -self.pc[c] * s / h - (s + deta) * (g * self.ra[c]);
            f[c + 1] += self.pc[c] * s / h - (s + deta) * (g * self.rb[c]);
        }
        let n = self.grid.n_nodes();
        let inner = self.solve_mass3(&f[1..n - 1]);
        d.v3[1..n - 1].copy_from_slice(&inner);
        d
    }

    /// `∫ρ₀|u_h|² + ∫ρ₀|u₃|²`.
    pub fn weighted_sq(&self, h: &[Vec<C>; 2], u3: &[C]) -> f64 {
        let hor: f64 = (0..self.grid.n_cells()).map(|c| self.mc[c] * (h[0][c].norm_sqr() + h[1][c].norm_sqr())).sum();
        let n = u3.len();
        let re: Vec<f64> = u3[1..n - 1].iter().map(|z| z.re).collect();
        let im: Vec<f64> = u3[1..n - 1].iter().map(|z| z.im).collect();
        hor + self.mass3.quad_form(&re) + self.mass3.quad_form(&im)
    }

    /// Energy terms of the pair `(v, ∂ₜv)`.
    pub fn energy_terms(&self, state: &LinearState, rate: &LinearState) -> EnergyTerms {
        let g = self.profile.g();
        let kinetic = 0.5 * self.weighted_sq(&rate.v_h, &rate.v3);
        let div = self.divergence(&state.v_h, &state.v3);
        let mut compression = 0.0;
        for c in 0..self.grid.n_cells() {
            let side = self.grid.cell_side(c);
            let (a, b) = self.grid.cell_bounds(c);
            for (x, w) in self.grid.quad_points(c) {
                let v3 = (state.v3[c] * (b - x) + state.v3[c + 1] * (x - a)) / (b - a);
                let pp = self.profile.sound_speed_sq(x, side);
                let rho = self.profile.rho0_unchecked(x, side);
                compression += w * 0.5 * pp * rho * (div[c] - v3 * (g / pp)).norm_sqr();
            }
        }
        let i0 = self.grid.interface_index();
        let interface = 0.5 * g * self.profile.jump * state.v3[i0].norm_sqr();
        let mass = self.weighted_sq(&state.v_h, &state.v3);
        EnergyTerms { kinetic, compression, interface, mass }
    }

    /// Crude spectral radius of the right-hand side by power iteration.
    pub fn spectral_radius(&self, iterations: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = LinearState::zeros(&self.grid, self.xi);
        let n = self.grid.n_nodes();
        for b in x.blocks_mut() {
            let len = b.len();
            for (i, z) in b.iter_mut().enumerate() {
                if len == n && (i == 0 || i == n - 1) {
                    continue;
                }
                *z = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let window = 8.min(iterations / 2).max(1);
        let mut logs = Vec::with_capacity(iterations);
        let mut acc = 0.0;
        for _ in 0..iterations {
            let nrm = x.coefficient_norm();
            if nrm == 0.0 {
                return 0.0;
            }
            x.scale(1.0 / nrm);
            acc += nrm.ln();
            logs.push(acc);
            x = self.rhs(&x);
        }
        let k = logs.len();
        if k <= window {
            return (logs[k - 1] / k as f64).exp();
        }
        ((logs[k - 1] - logs[k - 1 - window]) / window as f64).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyTerms {
    /// `∫ρ₀|∂ₜv|²/2`
    pub kinetic: f64,
    /// `∫P'ρ₀|div v − g v₃/P'|²/2`
    pub compression: f64,
    /// `g⟦ρ₀⟧|v₃(0)|²/2`
    pub interface: f64,
    /// `∫ρ₀|v|²`
    pub mass: f64,
}

impl EnergyTerms {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.compression - self.interface
    }

    fn add(&mut self, o: &EnergyTerms) {
        self.kinetic += o.kinetic;
        self.compression += o.compression;
        self.interface += o.interface;
        self.mass += o.mass;
    }
}

/// Eigenmode data `(ŵ, λŵ, −ρ₀ div ŵ)` with `ŵ = (−iφ ξ̂, ψ)` from a solution on `grid`.
pub fn eigenmode_state(grid: &VerticalGrid, mode: &ModeSolution, direction: [f64; 2]) -> Result<LinearState> {
    if mode.phi.values.len() != grid.n_cells() || mode.psi.values.len() != grid.n_nodes() {
        return Err(Error::Config("mode was computed on a different grid".into()));
    }
    let len = direction[0].hypot(direction[1]);
    let (c, s) = if len > 0.0 { (direction[0] / len, direction[1] / len) } else { (1.0, 0.0) };
    let xi = [mode.xi * c, mode.xi * s];
    let mut st = LinearState::zeros(grid, xi);
    for cell in 0..grid.n_cells() {
        let h = C::new(0.0, -mode.phi.values[cell]);
        st.eta_h[0][cell] = h * c;
        st.eta_h[1][cell] = h * s;
        let dpsi = (mode.psi.values[cell + 1] - mode.psi.values[cell]) / grid.width(cell);
        st.s[cell] = C::new(-(mode.xi * mode.phi.values[cell] + dpsi), 0.0);
    }
    for (i, v) in mode.psi.values.iter().enumerate() {
        st.eta3[i] = C::new(*v, 0.0);
    }
    st.v_h = st.eta_h.clone();
    st.v3 = st.eta3.clone();
    st.v_h.iter_mut().for_each(|b| b.iter_mut().for_each(|z| *z *= mode.lambda));
    st.v3.iter_mut().for_each(|z| *z *= mode.lambda);
    Ok(st)
}

/// Smooth random data with `q = −ρ₀ div η`: a few random sine modes per component.
pub fn random_state(grid: &VerticalGrid, xi: [f64; 2], seed: u64) -> LinearState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.m() + grid.ell();
    let m = grid.m();
    let series = |rng: &mut ChaCha8Rng| -> Vec<(f64, C)> {
        (1..=6).map(|k| (k as f64, C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / k as f64)).collect()
    };
    let mut st = LinearState::zeros(grid, xi);
    let nodes = grid.nodes().to_vec();
    let sine = |coef: &[(f64, C)], x: f64| {
        coef.iter().map(|(k, a)| a * (k * std::f64::consts::PI * (x + m) / len).sin()).sum::<C>()
    };
    let cosine = |coef: &[(f64, C)], x: f64| {
        coef.iter().map(|(k, a)| a * (k * std::f64::consts::PI * (x + m) / len).cos()).sum::<C>()
    };
    for b in 0..2 {
        let ce = series(&mut rng);
        let cv = series(&mut rng);
        for c in 0..grid.n_cells() {
            let (a, bb) = grid.cell_bounds(c);
            let x = 0.5 * (a + bb);
            st.eta_h[b][c] = cosine(&ce, x);
            st.v_h[b][c] = cosine(&cv, x);
        }
    }
    let ce = series(&mut rng);
    let cv = series(&mut rng);
    let last = nodes.len() - 1;
    for (i, &x) in nodes.iter().enumerate() {
        if i == 0 || i == last {
            continue;
        }
        st.eta3[i] = sine(&ce, x);
        st.v3[i] = sine(&cv, x);
    }
    for c in 0..grid.n_cells() {
        let d = I * (st.eta_h[0][c] * xi[0] + st.eta_h[1][c] * xi[1]) + (st.eta3[c + 1] - st.eta3[c]) / grid.width(c);
        st.s[c] = -d;
    }
    st
}

/// `Φ(s)`: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, smooth and monotone in between.
pub fn band_cutoff(s: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let s = s.abs();
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - s);
        a / (a + h(s - 0.5))
    }
}

/// `P_R`: scales each frequency's coefficients by `Φ(|ξ|/R)`.
pub fn project_band(states: &[LinearState], r: f64) -> Result<Vec<LinearState>> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("band radius must be positive, got {r}")));
    }
    Ok(states
        .iter()
        .map(|s| {
            let mut p = s.clone();
            p.scale(band_cutoff(s.xi_abs() / r));
            p
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Record every this many steps (the final step is always recorded).
    #[serde(default = "default_every")]
    pub sample_every: usize,
    /// Abort when the coefficient norm exceeds `e^{rate·t}` times its start value times
    /// `1e3` (unset: only non-finite values abort).
    #[serde(default)]
    pub growth_cap: Option<f64>,
}

fn default_every() -> usize {
    10
}

impl IntegrateOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self { t_end, dt, sample_every: default_every(), growth_cap: None }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.t_end >= 0.0 && self.dt > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("need t_end >= 0 and dt > 0, got {} and {}", self.t_end, self.dt)));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be at least 1".into()));
        }
        let n = (self.t_end / self.dt).round();
        if ((n * self.dt) - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::Config(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(n as usize)
    }
}

/// Recorded states with their right-hand sides.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<LinearState>,
    pub rates: Vec<LinearState>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

fn rk4_step(op: &FrequencyOperator, y: &LinearState, dt: f64, sign: f64) -> LinearState {
    let f = |s: &LinearState| {
        let mut d = op.rhs(s);
        if sign < 0.0 {
            d.scale(-1.0);
        }
        d
    };
    let k1 = f(y);
    let mut t = y.clone();
    t.add_scaled(0.5 * dt, &k1);
    let k2 = f(&t);
    let mut t = y.clone();
    t.add_scaled(0.5 * dt, &k2);
    let k3 = f(&t);
    let mut t = y.clone();
    t.add_scaled(dt, &k3);
    let k4 = f(&t);
    let mut out = y.clone();
    out.add_scaled(dt / 6.0, &k1);
    out.add_scaled(dt / 3.0, &k2);
    out.add_scaled(dt / 3.0, &k3);
    out.add_scaled(dt / 6.0, &k4);
    out.t = y.t + sign * dt;
    out
}

/// Checks `dt` against the RK4 stability interval using [`FrequencyOperator::spectral_radius`].
pub fn preflight(op: &FrequencyOperator, dt: f64) -> Result<f64> {
    let rho = 1.05 * op.spectral_radius(60, 7);
    if dt * rho > RK4_IMAG_LIMIT {
        return Err(Error::Integration(format!(
            "dt = {dt} exceeds the RK4 stability limit {:.3e} (spectral radius about {rho:.3e})",
            RK4_IMAG_LIMIT / rho
        )));
    }
    Ok(rho)
}

fn run(op: &FrequencyOperator, state0: &LinearState, opts: &IntegrateOptions, sign: f64) -> Result<Trajectory> {
    let steps = opts.steps()?;
    if state0.xi != op.xi {
        return Err(Error::Config("state frequency differs from the operator's".into()));
    }
    preflight(op, opts.dt)?;
    let n0 = state0.coefficient_norm();
    let mut y = state0.clone();
    let mut tr = Trajectory { states: vec![y.clone()], rates: vec![op.rhs(&y)] };
    for k in 1..=steps {
        y = rk4_step(op, &y, opts.dt, sign);
        if k == steps {
            y.t = state0.t + sign * opts.t_end;
        }
        let nrm = y.coefficient_norm();
        if !nrm.is_finite() {
            return Err(Error::Integration(format!("non-finite state at t = {}", y.t)));
        }
        if let Some(rate) = opts.growth_cap {
            if nrm > 1e3 * n0 * (rate * (y.t - state0.t).abs()).exp() {
                return Err(Error::Integration(format!(
                    "growth beyond e^({rate} t) detected at t = {} (|state| = {nrm:.3e})",
                    y.t
                )));
            }
        }
        if k % opts.sample_every == 0 || k == steps {
            let r = op.rhs(&y);
            tr.states.push(y.clone());
            tr.rates.push(r);
        }
    }
    Ok(tr)
}

/// Classical RK4 from `state0.t` to `state0.t + t_end`.
pub fn integrate(op: &FrequencyOperator, state0: &LinearState, opts: &IntegrateOptions) -> Result<Trajectory> {
    run(op, state0, opts, 1.0)
}

/// Same as [`integrate`] for the time-reversed system.
pub fn integrate_backward(op: &FrequencyOperator, state0: &LinearState, opts: &IntegrateOptions) -> Result<Trajectory> {
    run(op, state0, opts, -1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub terms: Vec<EnergyTerms>,
    pub energy: Vec<f64>,
    /// `max_t |ℰ(t) − ℰ(0)| / (1 + |ℰ(0)|)`
    pub drift: f64,
    /// `Λ(R)` used for the variational bound, if any.
    pub lambda_cap: Option<f64>,
    /// `max_t [interface − compression − (Λ²/2)∫ρ₀|v|²]`; non-positive when the bound holds.
    pub bound_excess: Option<f64>,
}

impl EnergyLedger {
    pub fn drift_series(&self) -> Vec<f64> {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        self.energy.iter().map(|e| (e - e0).abs() / (1.0 + e0.abs())).collect()
    }

    /// Sums per-frequency ledgers recorded at identical times.
    pub fn combine(parts: &[EnergyLedger]) -> Result<EnergyLedger> {
        let first = parts.first().ok_or_else(|| Error::Config("no ledgers to combine".into()))?;
        let mut terms = vec![EnergyTerms::default(); first.times.len()];
        for p in parts {
            if p.times.len() != first.times.len() {
                return Err(Error::Config("ledgers sampled at different times".into()));
            }
            for (a, b) in terms.iter_mut().zip(&p.terms) {
                a.add(b);
            }
        }
        Ok(ledger_from_terms(first.times.clone(), terms, first.lambda_cap))
    }
}

fn ledger_from_terms(times: Vec<f64>, terms: Vec<EnergyTerms>, lambda_cap: Option<f64>) -> EnergyLedger {
    let energy: Vec<f64> = terms.iter().map(EnergyTerms::energy).collect();
    let e0 = energy.first().copied().unwrap_or(0.0);
    let drift = energy.iter().map(|e| (e - e0).abs() / (1.0 + e0.abs())).fold(0.0, f64::max);
    let bound_excess = lambda_cap.map(|l| {
        terms
            .iter()
            .map(|t| t.interface - t.compression - 0.5 * l * l * t.mass)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    EnergyLedger { times, terms, energy, drift, lambda_cap, bound_excess }
}

pub fn energy_audit(op: &FrequencyOperator, traj: &Trajectory, lambda_cap: Option<f64>) -> EnergyLedger {
    let terms = traj.states.iter().zip(&traj.rates).map(|(s, r)| op.energy_terms(s, r)).collect();
    ledger_from_terms(traj.times(), terms, lambda_cap)
}

/// `‖v‖²` and `‖∂ₜv‖²` (both `ρ₀`-weighted) per recorded time.
pub fn velocity_norms(op: &FrequencyOperator, traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.states
        .iter()
        .zip(&traj.rates)
        .map(|(s, r)| (op.weighted_sq(&s.v_h, &s.v3), op.weighted_sq(&r.v_h, &r.v3)))
        .collect()
}

/// Least-squares slope of `log y` against `t` over `t ≥ t_last / 2`.
pub fn trailing_log_slope(times: &[f64], values: &[f64]) -> Option<f64> {
    let t_last = *times.last()?;
    let t0 = times.first().copied().unwrap_or(0.0);
    let cut = t0 + 0.5 * (t_last - t0);
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, y)| **t >= cut && **y > 0.0).map(|(t, y)| (*t, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub fitted_rate: f64,
    pub lambda_cap: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Fits the slope of `log(‖v‖² + ‖∂ₜv‖²)` over the trailing half and compares with `2Λ(R)`.
pub fn growth_rate_check(times: &[f64], norms: &[(f64, f64)], lambda_cap: f64, tolerance: f64) -> Result<GrowthCheck> {
    let y: Vec<f64> = norms.iter().map(|(a, b)| a + b).collect();
    let fitted_rate = trailing_log_slope(times, &y)
        .ok_or_else(|| Error::Numerical("too few positive samples to fit a growth rate".into()))?;
    Ok(GrowthCheck { fitted_rate, lambda_cap, tolerance, holds: fitted_rate <= 2.0 * lambda_cap + tolerance })
}

/// Initial data for one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Eigen,
    Random,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub xi: [f64; 2],
    pub init: InitKind,
    #[serde(default)]
    pub seed: u64,
}

/// Combined result of evolving several frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRun {
    pub times: Vec<f64>,
    pub ledger: EnergyLedger,
    /// `(‖v‖², ‖∂ₜv‖²)` summed over frequencies.
    pub norms: Vec<(f64, f64)>,
    pub growth: Option<GrowthCheck>,
    /// Per frequency: `(|ξ|, λ)` of the discrete leading mode (`0` when stable).
    pub mode_rates: Vec<(f64, f64)>,
    /// Per frequency: `|state(t_end)| / |state(0)|` in the `ρ₀`-weighted velocity norm.
    pub amplification: Vec<f64>,
    pub max_abs: Vec<f64>,
}

/// Evolves each frequency independently (band-limited by `P_R` when `band` is given) and
/// sums the ledgers. `lambda_cap` is `Λ(R)` for the variational and growth bounds.
pub fn evolve_modes(
    profile: &SteadyProfile,
    grid: &VerticalGrid,
    modes: &[ModeSpec],
    opts: &IntegrateOptions,
    band: Option<f64>,
    lambda_cap: Option<f64>,
) -> Result<EvolutionRun> {
    use crate::dispersion::{assemble_forms, solve_mode};
    if modes.is_empty() {
        return Err(Error::Config("at least one mode is required".into()));
    }
    let parts = modes
        .par_iter()
        .map(|m| -> Result<_> {
            let op = FrequencyOperator::new(profile, grid, m.xi)?;
            let r = m.xi[0].hypot(m.xi[1]);
            let disc = if r > 0.0 { Some(solve_mode(&assemble_forms(profile, grid, r)?)?) } else { None };
            let mut s0 = match m.init {
                InitKind::Zero => LinearState::zeros(grid, m.xi),
                InitKind::Random => random_state(grid, m.xi, m.seed),
                InitKind::Eigen => {
                    let d = disc.as_ref().ok_or_else(|| Error::Config("eigenmode data needs xi != 0".into()))?;
                    eigenmode_state(grid, d, m.xi)?
                }
            };
            if let Some(rb) = band {
                s0 = project_band(&[s0], rb)?.remove(0);
            }
            let tr = integrate(&op, &s0, opts)?;
            let led = energy_audit(&op, &tr, lambda_cap);
            let norms = velocity_norms(&op, &tr);
            let lam = disc.map(|d| d.lambda).unwrap_or(0.0);
            let amp = match (norms.first(), norms.last()) {
                (Some(a), Some(b)) if a.0 > 0.0 => (b.0 / a.0).sqrt(),
                _ => 0.0,
            };
            let mx = tr.states.iter().map(LinearState::max_abs).fold(0.0, f64::max);
            Ok((led, norms, (r, lam), amp, mx))
        })
        .collect::<Result<Vec<_>>>()?;
    let ledgers: Vec<EnergyLedger> = parts.iter().map(|p| p.0.clone()).collect();
    let ledger = EnergyLedger::combine(&ledgers)?;
    let times = ledger.times.clone();
    let mut norms = vec![(0.0, 0.0); times.len()];
    for p in &parts {
        for (a, b) in norms.iter_mut().zip(&p.1) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
    let growth = match lambda_cap {
        Some(l) if norms.iter().any(|(a, b)| a + b > 0.0) => Some(growth_rate_check(&times, &norms, l, 1e-3)?),
        _ => None,
    };
    Ok(EvolutionRun {
        times,
        ledger,
        norms,
        growth,
        mode_rates: parts.iter().map(|p| p.2).collect(),
        amplification: parts.iter().map(|p| p.3).collect(),
        max_abs: parts.iter().map(|p| p.4).collect(),
    })
}

/// `Λ(R)`: the largest discrete growth rate over `count` frequencies in `(0, R]` together
/// with `extra` frequencies.
pub fn lambda_cap(profile: &SteadyProfile, grid: &VerticalGrid, r: f64, count: usize, extra: &[f64]) -> Result<f64> {
    use crate::dispersion::sweep;
    if !(r > 0.0) {
        return Err(Error::Config(format!("band radius must be positive, got {r}")));
    }
    let mut xis: Vec<f64> = (1..=count.max(1)).map(|i| r * i as f64 / count.max(1) as f64).collect();
    xis.extend(extra.iter().copied().filter(|&x| x > 0.0 && x <= r));
    let curve = sweep(profile, grid, &xis);
    if let Some(p) = curve.points.iter().find(|p| p.error.is_some()) {
        return Err(Error::Numerical(format!("dispersion failed at |xi| = {}: {}", p.xi, p.error.as_deref().unwrap_or(""))));
    }
    Ok(curve.lambda_max(r))
}

#[cfg(test)]
mod tests;
