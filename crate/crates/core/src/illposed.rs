//! Families of synthesized solutions with initial `H^j` size `1/n` whose `H^k` size at `T₀`
//! exceeds a fixed `α`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::dispersion::{SmoothMode, J_MAX};
use crate::error::{Error, Result};
use crate::steady_state::SteadyProfile;
use crate::synthesis::{build_mode_bank, hk_norm_trace, FrequencyProfile, ModeBank, Unknown, DEFAULT_RADIAL_NODES};
use crate::vgrid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IllposedSpec {
    pub k: usize,
    pub j: usize,
    pub alpha: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub n_max: usize,
    /// First annulus radius tried; doubled until the entry passes.
    #[serde(default = "default_r_start")]
    pub r_start: f64,
    #[serde(default = "default_r_cap")]
    pub r_cap: f64,
    #[serde(default = "default_nodes")]
    pub radial_nodes: usize,
}

fn default_r_start() -> f64 {
    1.0
}

fn default_r_cap() -> f64 {
    4096.0
}

fn default_nodes() -> usize {
    DEFAULT_RADIAL_NODES
}

impl IllposedSpec {
    pub fn new(k: usize, j: usize, alpha: f64, t0: f64, n_max: usize) -> Result<Self> {
        let s = Self {
            k,
            j,
            alpha,
            t0,
            n_max,
            r_start: default_r_start(),
            r_cap: default_r_cap(),
            radial_nodes: default_nodes(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < self.k {
            return Err(Error::Config(format!("need j >= k, got j = {}, k = {}", self.j, self.k)));
        }
        if self.j > J_MAX {
            return Err(Error::Config(format!("j = {} exceeds the supported {J_MAX}", self.j)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("T0 must be positive, got {}", self.t0)));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if !(self.r_start > 0.0 && self.r_cap >= self.r_start) {
            return Err(Error::Config(format!("need 0 < r_start <= r_cap, got {} and {}", self.r_start, self.r_cap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSequenceEntry {
    pub n: usize,
    /// Annulus `[R(n), R(n) + 1]`.
    pub r_n: f64,
    pub amplitude: f64,
    /// `‖η(0)‖_{H^j} + ‖v(0)‖_{H^j} + ‖q(0)‖_{H^j}`
    pub init_norm_hj: f64,
    /// `‖η(T₀)‖_{H^k}`
    pub final_norm_hk: f64,
    /// `‖v(T₀)‖_{H^k}`
    pub final_v_hk: f64,
    /// `‖η(2T₀)‖_{H^k}`
    pub norm_at_2t0: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ` at the annulus centre `r* = R(n) + 1/2`.
    pub lambda_centre: f64,
    pub pass: bool,
}

impl DemoSequenceEntry {
    /// `‖η(T₀)‖_{H^k} / initial H^j norm`.
    pub fn ratio(&self) -> f64 {
        self.final_norm_hk / self.init_norm_hj
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub spec: IllposedSpec,
    pub entries: Vec<DemoSequenceEntry>,
    pub complete: bool,
    /// First failing `n` and the reason.
    pub failure: Option<(usize, String)>,
}

/// Mode banks keyed by the inner annulus radius.
#[derive(Debug, Default)]
pub struct BankCache {
    banks: Mutex<HashMap<u64, Arc<ModeBank>>>,
}

impl BankCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.banks.lock().expect("bank cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, profile: &SteadyProfile, guess: &GridSpec, freq: &FrequencyProfile, j_max: usize) -> Result<Arc<ModeBank>> {
        let key = freq.r2.to_bits();
        if let Some(b) = self.banks.lock().expect("bank cache poisoned").get(&key) {
            if b.j_max() >= j_max && b.frequency_profile().radial_nodes == freq.radial_nodes {
                return Ok(Arc::clone(b));
            }
        }
        let b = Arc::new(build_mode_bank(profile, guess, freq, j_max)?);
        self.banks.lock().expect("bank cache poisoned").insert(key, Arc::clone(&b));
        Ok(b)
    }
}

fn measure(bank: &ModeBank, freq: &FrequencyProfile, spec: &IllposedSpec) -> Result<(f64, f64, f64, f64)> {
    let init = hk_norm_trace(bank, freq, spec.j, &[0.0])?;
    let init_norm: f64 = Unknown::ALL.iter().map(|&u| init.squared(u)[0].sqrt()).sum();
    let later = hk_norm_trace(bank, freq, spec.k, &[spec.t0, 2.0 * spec.t0])?;
    Ok((init_norm, later.eta[0].sqrt(), later.v[0].sqrt(), later.eta[1].sqrt()))
}

/// Doubling search over `R` for the first annulus `[R, R + 1]` with `min λ ≥ 1` whose
/// normalized solution reaches `α` at `T₀`.
pub fn build_entry(
    spec: &IllposedSpec,
    n: usize,
    profile: &SteadyProfile,
    guess: &GridSpec,
    cache: &BankCache,
) -> Result<DemoSequenceEntry> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Config("n starts at 1".into()));
    }
    let j_max = spec.j.max(spec.k);
    let mut r = spec.r_start;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    while r <= spec.r_cap {
        let unit = FrequencyProfile { radial_nodes: spec.radial_nodes, ..FrequencyProfile::new(r, r + 1.0, 1.0)? };
        let bank = cache.get(profile, guess, &unit, j_max)?;
        let (lmin, lmax) = (bank.lambda_min(), bank.lambda_max());
        if lmin >= 1.0 {
            let (init_unit, ..) = measure(&bank, &unit, spec)?;
            let amplitude = 1.0 / (n as f64 * init_unit);
            let freq = unit.with_amplitude(amplitude);
            let (init, eta, v, eta2) = measure(&bank, &freq, spec)?;
            if best.is_none_or(|b| eta > b.1) {
                best = Some((r, eta, lmin, lmax));
            }
            if eta >= spec.alpha {
                let centre = r + 0.5;
                let nearest = bank
                    .nodes()
                    .iter()
                    .min_by(|a, b| (a.r - centre).abs().total_cmp(&(b.r - centre).abs()))
                    .expect("bank has nodes");
                let lambda_centre = SmoothMode::solve(profile, centre, -nearest.lambda().powi(2))?.lambda;
                let pass = v >= eta && eta2 >= eta && (init * n as f64 - 1.0).abs() <= 1e-9;
                return Ok(DemoSequenceEntry {
                    n,
                    r_n: r,
                    amplitude,
                    init_norm_hj: init,
                    final_norm_hk: eta,
                    final_v_hk: v,
                    norm_at_2t0: eta2,
                    lambda_min: lmin,
                    lambda_max: lmax,
                    lambda_centre,
                    pass,
                });
            }
        } else if best.is_none() {
            best = Some((r, 0.0, lmin, lmax));
        }
        r *= 2.0;
    }
    let (br, be, bl, bh) = best.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
    Err(Error::Numerical(format!(
        "no annulus up to R = {} reached alpha = {} for n = {n}; best |eta(T0)|_Hk = {be} at R = {br} \
         (lambda in [{bl}, {bh}])",
        spec.r_cap, spec.alpha
    )))
}

/// Entries `n = 1..=n_max`, stopping at the first failure.
pub fn verify_sequence(spec: &IllposedSpec, profile: &SteadyProfile, guess: &GridSpec) -> Result<SequenceReport> {
    verify_sequence_with(spec, profile, guess, &BankCache::new())
}

pub fn verify_sequence_with(
    spec: &IllposedSpec,
    profile: &SteadyProfile,
    guess: &GridSpec,
    cache: &BankCache,
) -> Result<SequenceReport> {
    spec.validate()?;
    if profile.jump <= 0.0 {
        return Err(Error::Config("configuration is Rayleigh-Taylor stable; no growing modes to synthesize".into()));
    }
    let mut entries = Vec::with_capacity(spec.n_max);
    let mut failure = None;
    for n in 1..=spec.n_max {
        match build_entry(spec, n, profile, guess, cache) {
            Ok(e) if e.pass => entries.push(e),
            Ok(e) => {
                failure = Some((n, format!("inequalities fail at R = {}", e.r_n)));
                entries.push(e);
                break;
            }
            Err(err @ Error::Numerical(_)) => {
                failure = Some((n, err.to_string()));
                break;
            }
            Err(err) => return Err(err),
        }
    }
    Ok(SequenceReport { spec: *spec, complete: failure.is_none(), entries, failure })
}
