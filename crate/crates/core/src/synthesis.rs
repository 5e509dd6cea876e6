//! Fourier synthesis of growing solutions from a bank of normal modes over an annulus
//! `R₂ < |ξ| < R₃`.
//!
//! With `ŵ(ξ, x₃) = −iφ ξ̂ + ψ e₃` the synthesized fields are radial superpositions,
//! so horizontal integrals reduce to Hankel transforms:
//!
//! ```text
//! η₃ = (1/2π) ∫ f ψ e^{λt} J₀(r|x'|) r dr
//! η' = (1/2π) ∫ f φ e^{λt} J₁(r|x'|) r dr · x'/|x'|
//! q  = −(1/2π) ∫ f ρ₀(rφ + ψ') e^{λt} J₀(r|x'|) r dr
//! ```
//!
//! and `v` carries an extra factor `λ`.

use std::f64::consts::PI;
use std::fmt;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::jn01;
use crate::dispersion::{assemble_forms, grid_for_frequency, solve_mode, ModePoint, SmoothMode, J_MAX};
use crate::error::{Error, Result};
use crate::steady_state::{Side, SteadyProfile};
use crate::vgrid::{GridSpec, VerticalGrid};

pub const DEFAULT_RADIAL_NODES: usize = 64;
pub const DEFAULT_ANGULAR_NODES: usize = 128;

/// Smooth radial profile `f(|ξ|)` supported in the open annulus `(R₂, R₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyProfile {
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    pub amplitude: f64,
    #[serde(default = "default_radial")]
    pub radial_nodes: usize,
    #[serde(default = "default_angular")]
    pub angular_nodes: usize,
}

fn default_radial() -> usize {
    DEFAULT_RADIAL_NODES
}

fn default_angular() -> usize {
    DEFAULT_ANGULAR_NODES
}

impl FrequencyProfile {
    pub fn new(r2: f64, r3: f64, amplitude: f64) -> Result<Self> {
        let p = Self { r2, r3, amplitude, radial_nodes: DEFAULT_RADIAL_NODES, angular_nodes: DEFAULT_ANGULAR_NODES };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r2 > 0.0 && self.r3 > self.r2 && self.r3.is_finite()) {
            return Err(Error::Config(format!("annulus needs 0 < R2 < R3, got R2 = {}, R3 = {}", self.r2, self.r3)));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        if self.radial_nodes < 2 {
            return Err(Error::Config("radial_nodes must be at least 2".into()));
        }
        if self.angular_nodes < 4 || self.angular_nodes % 2 != 0 {
            return Err(Error::Config("angular_nodes must be even and at least 4".into()));
        }
        Ok(())
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Unit-amplitude bump `exp(−1/(1 − s²))`, `s` the annulus coordinate mapped to (−1, 1).
    pub fn bump(&self, r: f64) -> f64 {
        let s = (2.0 * r - self.r2 - self.r3) / (self.r3 - self.r2);
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.amplitude * self.bump(r)
    }

    /// Gauss–Legendre `(r_i, w_i)` on `(R₂, R₃)`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let half = 0.5 * (self.r3 - self.r2);
        let mid = 0.5 * (self.r3 + self.r2);
        GaussLegendre::new(self.radial_nodes.try_into().expect("radial_nodes >= 2 checked in validate"))
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .collect()
    }

    /// `∫_{ℝ²} (1 + |ξ|²)^p f(|ξ|)² dξ`.
    pub fn weighted_norm_sq(&self, p: i32) -> f64 {
        2.0 * PI
            * self
                .nodes()
                .iter()
                .map(|&(r, w)| w * r * (1.0 + r * r).powi(p) * self.eval(r).powi(2))
                .sum::<f64>()
    }

    fn same_nodes(&self, other: &FrequencyProfile) -> bool {
        self.r2 == other.r2 && self.r3 == other.r3 && self.radial_nodes == other.radial_nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unknown {
    Eta,
    V,
    Q,
}

impl Unknown {
    pub const ALL: [Unknown; 3] = [Unknown::Eta, Unknown::V, Unknown::Q];

    pub fn label(self) -> &'static str {
        match self {
            Unknown::Eta => "eta",
            Unknown::V => "v",
            Unknown::Q => "q",
        }
    }

    pub fn n_components(self) -> usize {
        match self {
            Unknown::Q => 1,
            _ => 3,
        }
    }
}

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One radial node of the bank.
#[derive(Debug, Clone)]
pub struct BankNode {
    pub r: f64,
    pub weight: f64,
    /// Growth rate of the discrete guess on the frequency-refined grid.
    pub discrete_lambda: f64,
    pub mode: SmoothMode,
    /// Per-slab `‖∂ʲφ‖² + ‖∂ʲψ‖²`.
    pub w_table: [[f64; 2]; J_MAX + 1],
    /// Per-slab `‖∂ʲ(ρ₀(rφ + ψ'))‖²`.
    pub q_table: [[f64; 2]; J_MAX + 1],
}

impl BankNode {
    pub fn lambda(&self) -> f64 {
        self.mode.lambda
    }

    fn sum_table(&self, unknown: Unknown, k: usize) -> f64 {
        let s = 1.0 + self.r * self.r;
        let t = match unknown {
            Unknown::Q => &self.q_table,
            _ => &self.w_table,
        };
        let base: f64 = (0..=k).map(|j| s.powi((k - j) as i32) * (t[j][0] + t[j][1])).sum();
        match unknown {
            Unknown::V => base * self.lambda().powi(2),
            _ => base,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeBank {
    profile: SteadyProfile,
    freq: FrequencyProfile,
    j_max: usize,
    nodes: Vec<BankNode>,
}

/// Solves the mode at every radial node of `freq`: a discrete eigensolve on a grid refined
/// for the node frequency gives the guess that shooting refines.
pub fn build_mode_bank(profile: &SteadyProfile, guess: &GridSpec, freq: &FrequencyProfile, j_max: usize) -> Result<ModeBank> {
    freq.validate()?;
    if j_max > J_MAX {
        return Err(Error::Config(format!("j_max = {j_max} exceeds the supported {J_MAX}")));
    }
    let nodes = freq
        .nodes()
        .into_par_iter()
        .enumerate()
        .map(|(i, (r, weight))| {
            let grid = grid_for_frequency(profile, guess.n_lower, guess.n_upper, guess.quad_order, r)?;
            let disc = solve_mode(&assemble_forms(profile, &grid, r)?)?;
            if !disc.is_unstable {
                return Err(Error::Config(format!(
                    "annulus node {i} at |xi| = {r} is stable (mu = {}); choose the annulus inside the unstable band",
                    disc.mu
                )));
            }
            let mode = SmoothMode::solve(profile, r, disc.mu)?;
            let (w_table, q_table) = mode.seminorm_table();
            Ok(BankNode { r, weight, discrete_lambda: disc.lambda, mode, w_table, q_table })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeBank { profile: *profile, freq: *freq, j_max, nodes })
}

impl ModeBank {
    pub fn profile(&self) -> &SteadyProfile {
        &self.profile
    }

    pub fn frequency_profile(&self) -> &FrequencyProfile {
        &self.freq
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn nodes(&self) -> &[BankNode] {
        &self.nodes
    }

    pub fn lambda_min(&self) -> f64 {
        self.nodes.iter().map(BankNode::lambda).fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.nodes.iter().map(BankNode::lambda).fold(0.0, f64::max)
    }

    /// `ŵ(ξ, x₃)` at node `i` for any `ξ` on that node's circle: the horizontal pair is the
    /// `ξ = (r, 0)` pair `(φ, 0)` rotated onto `ξ̂`, `ψ` unchanged.
    pub fn hat_w(&self, i: usize, xi: [f64; 2], x3: f64, side: Side) -> [Complex64; 3] {
        let p = self.nodes[i].mode.derivatives(x3, side);
        let r = xi[0].hypot(xi[1]);
        let (c, s) = if r > 0.0 { (xi[0] / r, xi[1] / r) } else { (1.0, 0.0) };
        let h = Complex64::new(0.0, -p.phi[0]);
        [h * c, h * s, Complex64::new(p.psi[0], 0.0)]
    }

    /// `(Ĉ₁, Ĉ₂)` with `λ² ≥ Ĉ₁|ξ| − Ĉ₂` at every node: least-squares slope, offset shifted
    /// down to a lower envelope.
    pub fn fitted_constants(&self) -> (f64, f64) {
        let n = self.nodes.len() as f64;
        let (mx, my) = self.nodes.iter().fold((0.0, 0.0), |(a, b), p| (a + p.r / n, b + p.lambda().powi(2) / n));
        let sxx: f64 = self.nodes.iter().map(|p| (p.r - mx).powi(2)).sum();
        let sxy: f64 = self.nodes.iter().map(|p| (p.r - mx) * (p.lambda().powi(2) - my)).sum();
        let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let c2 = self.nodes.iter().map(|p| c1 * p.r - p.lambda().powi(2)).fold(f64::NEG_INFINITY, f64::max);
        (c1, c2)
    }

    /// Rates in the form `(√(C₁R₂ − C₂), √(gR₃))` using [`ModeBank::fitted_constants`].
    pub fn rate_bounds(&self) -> (f64, f64) {
        let (c1, c2) = self.fitted_constants();
        ((c1 * self.freq.r2 - c2).max(0.0).sqrt(), (self.profile.g() * self.freq.r3).sqrt())
    }

    fn check_profile(&self, freq: &FrequencyProfile) -> Result<()> {
        if !self.freq.same_nodes(freq) {
            return Err(Error::Config("frequency profile does not match the bank's annulus or node count".into()));
        }
        Ok(())
    }
}

/// Squared piecewise `H^k` norms of `η`, `v`, `q` at each sample time.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevNormTrace {
    pub k: usize,
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SobolevNormTrace {
    pub fn squared(&self, unknown: Unknown) -> &[f64] {
        match unknown {
            Unknown::Eta => &self.eta,
            Unknown::V => &self.v,
            Unknown::Q => &self.q,
        }
    }

    pub fn norms(&self, unknown: Unknown) -> Vec<f64> {
        self.squared(unknown).iter().map(|v| v.sqrt()).collect()
    }

    /// `(e^{tλ_min}, e^{tλ_max})`.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        ((t * self.lambda_min).exp(), (t * self.lambda_max).exp())
    }

    /// Largest relative excursion of `‖·(t)‖/‖·(0)‖` outside the envelope, over all unknowns
    /// and times (zero when the sandwich holds). Requires `times[0] = 0`.
    pub fn sandwich_excess(&self) -> f64 {
        let mut worst = 0.0_f64;
        for u in Unknown::ALL {
            let n = self.norms(u);
            let Some(&n0) = n.first() else { continue };
            for (&t, &v) in self.times.iter().zip(&n) {
                let (lo, hi) = self.envelope(t);
                let ratio = v / n0;
                worst = worst.max((lo - ratio) / lo).max((ratio - hi) / hi);
            }
        }
        worst
    }
}

/// `‖·(t)‖²_{H^k} = (1/2π) Σᵢ wᵢ rᵢ f(rᵢ)² e^{2λᵢt} Σⱼ (1 + rᵢ²)^{k−j} ‖∂ʲ·‖²`.
pub fn hk_norm_trace(bank: &ModeBank, freq: &FrequencyProfile, k: usize, times: &[f64]) -> Result<SobolevNormTrace> {
    if k > bank.j_max {
        return Err(Error::Config(format!("k = {k} exceeds the bank's j_max = {}", bank.j_max)));
    }
    bank.check_profile(freq)?;
    let per_node: Vec<(f64, f64, [f64; 3])> = bank
        .nodes
        .iter()
        .map(|p| {
            let c = p.weight * p.r * freq.eval(p.r).powi(2) / (2.0 * PI);
            (c, p.lambda(), Unknown::ALL.map(|u| p.sum_table(u, k)))
        })
        .collect();
    let at = |t: f64, u: usize| per_node.iter().map(|(c, l, s)| c * (2.0 * l * t).exp() * s[u]).sum::<f64>();
    Ok(SobolevNormTrace {
        k,
        times: times.to_vec(),
        eta: times.iter().map(|&t| at(t, 0)).collect(),
        v: times.iter().map(|&t| at(t, 1)).collect(),
        q: times.iter().map(|&t| at(t, 2)).collect(),
        lambda_min: bank.lambda_min(),
        lambda_max: bank.lambda_max(),
    })
}

/// Measured `C̄` in `‖η(0)‖ + ‖v(0)‖ + ‖q(0)‖ ≤ C̄ (∫(1+|ξ|²)^{k+1}|f|²)^{1/2}` (all in `H^k`).
pub fn initial_data_constant(bank: &ModeBank, freq: &FrequencyProfile, k: usize) -> Result<f64> {
    let tr = hk_norm_trace(bank, freq, k, &[0.0])?;
    let lhs: f64 = Unknown::ALL.iter().map(|&u| tr.squared(u)[0].sqrt()).sum();
    Ok(lhs / freq.weighted_norm_sq(k as i32 + 1).sqrt())
}

/// Horizontal sample grid: `points × points` on `[−half_width, half_width]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSpec {
    pub half_width: f64,
    pub points: usize,
    /// Vertical samples; `0` is taken on the upper side, use a tiny negative value for `0⁻`.
    pub x3: Vec<f64>,
    #[serde(default = "default_unknowns")]
    pub unknowns: Vec<Unknown>,
    #[serde(default)]
    pub t: f64,
}

fn default_unknowns() -> Vec<Unknown> {
    Unknown::ALL.to_vec()
}

impl SnapshotSpec {
    pub fn horizontal(&self) -> Vec<[f64; 2]> {
        let n = self.points.max(1);
        let step = if n > 1 { 2.0 * self.half_width / (n - 1) as f64 } else { 0.0 };
        let axis: Vec<f64> = (0..n).map(|i| if n > 1 { -self.half_width + step * i as f64 } else { 0.0 }).collect();
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect()
    }

    pub fn vertical(&self) -> Vec<(f64, Side)> {
        self.x3.iter().map(|&x| (x, if x < 0.0 { Side::Lower } else { Side::Upper })).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub side: Side,
    /// `(·₁, ·₂, ·₃)` for `η`, `v`; `q` in slot 0.
    pub values: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSnapshot {
    pub unknown: Unknown,
    pub t: f64,
    pub points: Vec<SnapshotPoint>,
    /// `max |Im|` of the direct complex synthesis relative to the largest field magnitude.
    pub imag_ratio: f64,
    /// `max |Re(direct) − Hankel|` relative to the largest field magnitude.
    pub route_gap: f64,
}

fn node_coefficients(bank: &ModeBank, freq: &FrequencyProfile, unknown: Unknown, t: f64) -> Vec<f64> {
    bank.nodes
        .iter()
        .map(|p| {
            let s = if unknown == Unknown::V { p.lambda() } else { 1.0 };
            p.weight * p.r * freq.eval(p.r) * (p.lambda() * t).exp() * s
        })
        .collect()
}

fn hankel_values(bank: &ModeBank, c: &[f64], pts: &[ModePoint], unknown: Unknown, x: [f64; 2]) -> [f64; 3] {
    let rho = x[0].hypot(x[1]);
    let mut out = [0.0; 3];
    for ((node, &ci), p) in bank.nodes.iter().zip(c).zip(pts) {
        let (b0, b1) = jn01(node.r * rho);
        match unknown {
            Unknown::Q => out[0] -= ci * p.qt[0] * b0,
            _ => {
                out[2] += ci * p.psi[0] * b0;
                out[0] += ci * p.phi[0] * b1;
            }
        }
    }
    let s = 1.0 / (2.0 * PI);
    if unknown == Unknown::Q {
        return [out[0] * s, 0.0, 0.0];
    }
    let h = out[0] * s;
    let (cx, sx) = if rho > 0.0 { (x[0] / rho, x[1] / rho) } else { (0.0, 0.0) };
    [h * cx, h * sx, out[2] * s]
}

fn direct_values(bank: &ModeBank, c: &[f64], pts: &[ModePoint], unknown: Unknown, x: [f64; 2], n_ang: usize) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let da = 2.0 * PI / n_ang as f64;
    for ((node, &ci), p) in bank.nodes.iter().zip(c).zip(pts) {
        for m in 0..n_ang {
            let a = da * m as f64;
            let (s, co) = a.sin_cos();
            let e = Complex64::from_polar(ci * da, node.r * (x[0] * co + x[1] * s));
            match unknown {
                Unknown::Q => out[0] -= e * p.qt[0],
                _ => {
                    let h = Complex64::new(0.0, -p.phi[0]) * e;
                    out[0] += h * co;
                    out[1] += h * s;
                    out[2] += e * p.psi[0];
                }
            }
        }
    }
    out.map(|z| z / (4.0 * PI * PI))
}

/// Samples `unknown` at time `t` on `horizontal × vertical`, via the Hankel reduction, and
/// cross-checks against the direct complex synthesis on `angular_nodes` directions.
pub fn field_snapshot(
    bank: &ModeBank,
    freq: &FrequencyProfile,
    unknown: Unknown,
    t: f64,
    horizontal: &[[f64; 2]],
    vertical: &[(f64, Side)],
) -> Result<FieldSnapshot> {
    bank.check_profile(freq)?;
    let c = node_coefficients(bank, freq, unknown, t);
    let mut points = Vec::with_capacity(horizontal.len() * vertical.len());
    let mut scale = 0.0_f64;
    let mut imag = 0.0_f64;
    let mut gap = 0.0_f64;
    for &(x3, side) in vertical {
        let pts: Vec<ModePoint> = bank.nodes.iter().map(|p| p.mode.derivatives(x3, side)).collect();
        let rows: Vec<([f64; 3], [Complex64; 3])> = horizontal
            .par_iter()
            .map(|&x| {
                (hankel_values(bank, &c, &pts, unknown, x), direct_values(bank, &c, &pts, unknown, x, freq.angular_nodes))
            })
            .collect();
        for (&x, (h, d)) in horizontal.iter().zip(rows) {
            for i in 0..3 {
                scale = scale.max(h[i].abs());
                imag = imag.max(d[i].im.abs());
                gap = gap.max((d[i].re - h[i]).abs());
            }
            points.push(SnapshotPoint { x1: x[0], x2: x[1], x3, side, values: h });
        }
    }
    let denom = if scale > 0.0 { scale } else { 1.0 };
    Ok(FieldSnapshot { unknown, t, points, imag_ratio: imag / denom, route_gap: gap / denom })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalCheck {
    pub radius: f64,
    pub physical: f64,
    pub spectral: f64,
    pub rel_err: f64,
}

/// `∫₀^L x J_ν(ax) J_ν(bx) dx` for `ν ∈ {0, 1}`.
fn lommel(nu: u32, a: f64, b: f64, l: f64) -> f64 {
    let jj = |x: f64| {
        let (j0, j1) = jn01(x);
        let j2 = if x > 0.0 { 2.0 * j1 / x - j0 } else { 0.0 };
        if nu == 0 {
            (j0, j1, -j1)
        } else {
            (j1, j2, j0)
        }
    };
    if a == b {
        let (jn, jp, jm) = jj(a * l);
        0.5 * l * l * (jn * jn - jm * jp)
    } else {
        let (an, ap, _) = jj(a * l);
        let (bn, bp, _) = jj(b * l);
        l * (a * ap * bn - b * an * bp) / (a * a - b * b)
    }
}

/// `‖η(0)‖²_{L²}` over the cylinder `{|x'| < radius} × (−m, ℓ)` compared with the
/// frequency-space value. Radial integrals are exact; the vertical one uses a grid shared
/// by all nodes.
pub fn parseval_check(bank: &ModeBank, freq: &FrequencyProfile, radius: f64) -> Result<ParsevalCheck> {
    bank.check_profile(freq)?;
    let spectral = hk_norm_trace(bank, freq, 0, &[0.0])?.eta[0];
    let p = &bank.profile;
    let len = p.m().max(p.ell());
    let vg = VerticalGrid::interface_refined(p.m(), p.ell(), 64, 64, (len / 64.0).min(0.25 / freq.r3), 10)?;
    let n = bank.nodes.len();
    let mut mphi = vec![0.0; n * n];
    let mut mpsi = vec![0.0; n * n];
    for cell in 0..vg.n_cells() {
        let side = vg.cell_side(cell);
        for (x, w) in vg.quad_points(cell) {
            let v: Vec<ModePoint> = bank.nodes.iter().map(|b| b.mode.derivatives(x, side)).collect();
            for i in 0..n {
                for j in 0..n {
                    mphi[i * n + j] += w * v[i].phi[0] * v[j].phi[0];
                    mpsi[i * n + j] += w * v[i].psi[0] * v[j].psi[0];
                }
            }
        }
    }
    let c: Vec<f64> = node_coefficients(bank, freq, Unknown::Eta, 0.0).iter().map(|v| v / (2.0 * PI)).collect();
    let mut physical = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (bank.nodes[i].r, bank.nodes[j].r);
            physical += c[i] * c[j] * (mpsi[i * n + j] * lommel(0, a, b, radius) + mphi[i * n + j] * lommel(1, a, b, radius));
        }
    }
    physical *= 2.0 * PI;
    Ok(ParsevalCheck { radius, physical, spectral, rel_err: (physical - spectral).abs() / spectral })
}

#[cfg(test)]
mod tests;
