//! The acceptance suite: nine property checks run by `selftest` and by the integration tests.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barotropic::BarotropicLaw;
use crate::dispersion::{
    assemble_forms, solve_mode, sweep, test_function_energies, test_function_quotient, weighted_numerator_closed_form,
    DispersionCurve,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_modes, lambda_cap, InitKind, IntegrateOptions, ModeSpec};
use crate::illposed::{verify_sequence, IllposedSpec};
use crate::steady_state::{build_profile, check_instability, SteadyProfile, TwoFluidConfig};
use crate::synthesis::{build_mode_bank, field_snapshot, hk_norm_trace, FrequencyProfile, SnapshotSpec, Unknown};
use crate::vgrid::{Grading, GridSpec, VerticalGrid};

/// `λ(10)` on the isothermal reference state, from a 1024/1024 dense solve with order-8 quadrature.
pub const LAMBDA_XI10_ORACLE: f64 = 1.815_299_012_615_588;

/// Seed for the randomized configurations.
pub const CONFIG_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {} {}: {} ({:.1} s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub const NAMES: [&str; 9] = [
    "upper-bound sandwich",
    "variational ordering",
    "lambda/sqrt(xi) window",
    "grid convergence",
    "stability control",
    "eigenmode evolution fidelity",
    "synthesis sandwich",
    "Hadamard demonstration",
    "uniqueness probe",
];

fn uniform(profile: &SteadyProfile, n: usize, q: usize) -> Result<VerticalGrid> {
    VerticalGrid::new(profile.m(), profile.ell(), n, n, Grading::Uniform, q)
}

fn iso() -> Result<SteadyProfile> {
    build_profile(&TwoFluidConfig::reference_isothermal())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn random_polytropic(rng: &mut ChaCha8Rng) -> Result<TwoFluidConfig> {
    let law = |rng: &mut ChaCha8Rng| BarotropicLaw::polytropic(rng.random_range(0.5..3.0), rng.random_range(1.0..2.5));
    TwoFluidConfig::new(
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..1.5),
        rng.random_range(0.5..1.5),
        rng.random_range(0.5..2.0),
        law(rng)?,
        law(rng)?,
    )
}

/// `count` admissible polytropic configurations, unstable or not as requested.
pub fn random_configs(seed: u64, count: usize, unstable: bool) -> Result<Vec<TwoFluidConfig>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..10_000 {
        if out.len() == count {
            return Ok(out);
        }
        let c = random_polytropic(&mut rng)?;
        if check_instability(&c)?.unstable == unstable && build_profile(&c).is_ok() {
            out.push(c);
        }
    }
    Err(Error::Numerical(format!("could not draw {count} configurations with unstable = {unstable}")))
}

/// The reference state followed by three randomized unstable polytropic states.
pub fn sandwich_configs() -> Result<Vec<TwoFluidConfig>> {
    let mut v = vec![TwoFluidConfig::reference_isothermal()];
    v.extend(random_configs(CONFIG_SEED, 3, true)?);
    Ok(v)
}

fn sweep_checked(profile: &SteadyProfile, grid: &VerticalGrid, xis: &[f64]) -> Result<DispersionCurve> {
    let curve = sweep(profile, grid, xis);
    if let Some(p) = curve.points.iter().find(|p| p.error.is_some()) {
        return Err(Error::Numerical(format!("sweep failed at |xi| = {}: {}", p.xi, p.error.as_deref().unwrap_or(""))));
    }
    Ok(curve)
}

fn timed(id: u8, f: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name: NAMES[id as usize - 1], passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// `λ(ξ) ≤ √(gξ)` over 100 frequencies in `[1, 100]` at grid 256/256.
pub fn upper_bound_sandwich() -> CriterionResult {
    timed(1, || {
        let xis = linspace(1.0, 100.0, 100);
        let mut worst = f64::NEG_INFINITY;
        let mut ok = true;
        for cfg in sandwich_configs()? {
            let p = build_profile(&cfg)?;
            let curve = sweep_checked(&p, &uniform(&p, 256, 4)?, &xis)?;
            for pt in &curve.points {
                let bound = (p.g() * pt.xi).sqrt();
                let excess = (pt.lambda - bound) / bound;
                worst = worst.max(excess);
                ok &= pt.lambda > 0.0 && excess <= 1e-9;
            }
        }
        Ok((ok, format!("4 configs x 100 frequencies, max (lambda - sqrt(g xi))/sqrt(g xi) = {worst:.3e}")))
    })
}

/// `μ(ξ)` below the weighted (`α ∈ {2,4,8,16}`) and unweighted (`α = max(2, ξ)`) trial
/// quotients, plus the closed-form weighted numerator.
pub fn variational_ordering() -> CriterionResult {
    timed(2, || {
        let xis = linspace(1.0, 100.0, 100);
        let mut ok = true;
        let mut min_gap = f64::INFINITY;
        for cfg in sandwich_configs()? {
            let p = build_profile(&cfg)?;
            let g = uniform(&p, 256, 4)?;
            let curve = sweep_checked(&p, &g, &xis)?;
            for pt in &curve.points {
                let mut trials = vec![(pt.xi.max(2.0), false)];
                trials.extend([2.0, 4.0, 8.0, 16.0].map(|a| (a, true)));
                for (alpha, weighted) in trials {
                    let q = test_function_quotient(&p, &g, pt.xi, alpha, weighted)?;
                    let gap = (q - pt.mu) / pt.mu.abs().max(1.0);
                    min_gap = min_gap.min(gap);
                    ok &= pt.mu <= q;
                    if q < 0.0 {
                        ok &= pt.lambda * pt.lambda >= -q;
                    }
                }
            }
        }
        let p = iso()?;
        let (e, _) = test_function_energies(&p, &uniform(&p, 256, 4)?, 10.0, 4.0, true)?;
        let closed = weighted_numerator_closed_form(&p, 4.0);
        let spot = (e + 0.25).abs();
        ok &= spot <= 1e-10 && (closed + 0.25).abs() <= 1e-15;
        Ok((
            ok,
            format!("min relative gap (Q - mu) = {min_gap:.3e}; weighted numerator {e:.12} vs -0.25 (err {spot:.1e})"),
        ))
    })
}

/// `0 < λ/√ξ ≤ √g` on `[25, 100]` with the window infimum above the unweighted-quotient floor.
pub fn growth_window() -> CriterionResult {
    timed(3, || {
        let p = iso()?;
        let g = uniform(&p, 256, 4)?;
        let xis = linspace(25.0, 100.0, 76);
        let curve = sweep_checked(&p, &g, &xis)?;
        let mut ok = true;
        let mut inf_ratio = f64::INFINITY;
        let mut inf_floor = f64::INFINITY;
        let mut sup_ratio = 0.0_f64;
        for pt in &curve.points {
            let r = pt.lambda / pt.xi.sqrt();
            let q = test_function_quotient(&p, &g, pt.xi, pt.xi, false)?;
            let floor = if q < 0.0 { (-q).sqrt() / pt.xi.sqrt() } else { 0.0 };
            ok &= r > 0.0 && r <= p.g().sqrt() && r >= floor;
            inf_ratio = inf_ratio.min(r);
            sup_ratio = sup_ratio.max(r);
            inf_floor = inf_floor.min(floor);
        }
        ok &= inf_floor > 0.0 && inf_ratio > inf_floor;
        Ok((
            ok,
            format!("lambda/sqrt(xi) in [{inf_ratio:.6}, {sup_ratio:.6}], floor inf {inf_floor:.6}, sqrt(g) = {}", p.g().sqrt()),
        ))
    })
}

/// Self-convergence between 512 and 1024 cells per side at `ξ = 10`, and the pinned oracle.
pub fn grid_convergence() -> CriterionResult {
    timed(4, || {
        let p = iso()?;
        let l = |n| -> Result<f64> { Ok(solve_mode(&assemble_forms(&p, &uniform(&p, n, 4)?, 10.0)?)?.lambda) };
        let (a, b) = (l(512)?, l(1024)?);
        let conv = (a - b).abs() / b;
        let oracle = (b - LAMBDA_XI10_ORACLE).abs() / LAMBDA_XI10_ORACLE;
        Ok((
            conv <= 5e-5 && oracle <= 1e-4,
            format!("lambda_512 = {a:.15}, lambda_1024 = {b:.15}, rel diff {conv:.2e}, vs oracle {oracle:.2e}"),
        ))
    })
}

/// Stable configurations used by the control check: equal and reversed isothermal states
/// plus two random stable polytropic states.
pub fn stable_configs() -> Result<Vec<TwoFluidConfig>> {
    let iso = |km: f64, kp: f64| -> Result<TwoFluidConfig> {
        TwoFluidConfig::new(1.0, 1.0, 1.0, 1.0, BarotropicLaw::isothermal(km)?, BarotropicLaw::isothermal(kp)?)
    };
    let mut v = vec![iso(1.5, 1.5)?, iso(1.0, 2.0)?];
    v.extend(random_configs(CONFIG_SEED + 1, 2, false)?);
    Ok(v)
}

/// Every swept frequency of every stable configuration reports no growth.
pub fn stability_control() -> CriterionResult {
    timed(5, || {
        let xis = linspace(1.0, 100.0, 100);
        let mut ok = true;
        let mut count = 0;
        for cfg in stable_configs()? {
            let p = build_profile(&cfg)?;
            ok &= p.jump <= 0.0;
            let curve = sweep_checked(&p, &uniform(&p, 256, 4)?, &xis)?;
            for pt in &curve.points {
                ok &= pt.lambda == 0.0;
                count += 1;
            }
        }
        Ok((ok, format!("{count} stable (config, frequency) pairs, no growing modes")))
    })
}

/// RK4 from eigenmode data: amplitude `e^λ` at `t = 1`, energy drift, and the `2Λ(R)` cap
/// for mixed band-limited data.
pub fn evolution_fidelity() -> CriterionResult {
    timed(6, || {
        let p = iso()?;
        let g = uniform(&p, 128, 4)?;
        let eig = [ModeSpec { xi: [6.0, 8.0], init: InitKind::Eigen, seed: 0 }];
        let run = evolve_modes(&p, &g, &eig, &IntegrateOptions::new(1.0, 1e-3), None, None)?;
        let lambda = run.mode_rates[0].1;
        let amp_err = (run.amplification[0] / lambda.exp() - 1.0).abs();
        let drift = run.ledger.drift;

        let gm = uniform(&p, 64, 4)?;
        let r = 8.0;
        let modes: Vec<ModeSpec> = [[1.0, 2.0], [3.0, -2.0], [-4.0, 1.0], [0.5, 5.5], [2.0, 2.0]]
            .iter()
            .enumerate()
            .map(|(i, &xi)| ModeSpec { xi, init: InitKind::Random, seed: i as u64 })
            .collect();
        let extra: Vec<f64> = modes.iter().map(|m| m.xi[0].hypot(m.xi[1])).collect();
        let cap = lambda_cap(&p, &gm, r, 16, &extra)?;
        let mixed = evolve_modes(&p, &gm, &modes, &IntegrateOptions::new(2.0, 1e-3), Some(r), Some(cap))?;
        let growth = mixed.growth.ok_or_else(|| Error::Numerical("no growth fit for mixed data".into()))?;
        Ok((
            amp_err <= 1e-6 && drift <= 1e-7 && growth.holds,
            format!(
                "amplitude err {amp_err:.2e}, drift {drift:.2e}; mixed rate {:.6} vs 2 Lambda(8) + 1e-3 = {:.6}",
                growth.fitted_rate,
                2.0 * cap + 1e-3
            ),
        ))
    })
}

/// `H^k` traces (`k = 0..3`) between the annulus envelopes on `[0, 2]`, real snapshots.
pub fn synthesis_sandwich() -> CriterionResult {
    timed(7, || {
        let p = iso()?;
        let freq = FrequencyProfile::new(4.0, 6.0, 1.0)?;
        let guess = GridSpec { n_lower: 128, n_upper: 128, ..GridSpec::default() };
        let bank = build_mode_bank(&p, &guess, &freq, 3)?;
        let times = linspace(0.0, 2.0, 21);
        let mut excess = 0.0_f64;
        for k in 0..=3 {
            excess = excess.max(hk_norm_trace(&bank, &freq, k, &times)?.sandwich_excess());
        }
        let spec = SnapshotSpec { half_width: 2.0, points: 9, x3: vec![-0.5, -1e-12, 0.0, 0.5], unknowns: Unknown::ALL.to_vec(), t: 1.0 };
        let mut imag = 0.0_f64;
        for u in Unknown::ALL {
            imag = imag.max(field_snapshot(&bank, &freq, u, spec.t, &spec.horizontal(), &spec.vertical())?.imag_ratio);
        }
        Ok((
            excess <= 1e-12 && imag <= 1e-12,
            format!(
                "lambda in [{:.6}, {:.6}], envelope excess {excess:.2e}, snapshot imag ratio {imag:.2e}",
                bank.lambda_min(),
                bank.lambda_max()
            ),
        ))
    })
}

/// `(k, j, α, T₀) = (0, 2, 1, 1)`, `n = 1..5`.
pub fn hadamard_demonstration() -> CriterionResult {
    timed(8, || {
        let p = iso()?;
        let spec = IllposedSpec::new(0, 2, 1.0, 1.0, 5)?;
        let rep = verify_sequence(&spec, &p, &GridSpec::default())?;
        let mut ok = rep.complete && rep.entries.len() == 5;
        for e in &rep.entries {
            ok &= e.pass
                && (e.init_norm_hj * e.n as f64 - 1.0).abs() <= 1e-9
                && e.final_norm_hk >= 1.0
                && e.ratio() >= e.n as f64;
        }
        let rs: Vec<String> = rep.entries.iter().map(|e| format!("{}", e.r_n)).collect();
        let min_ratio = rep.entries.iter().map(|e| e.ratio() / e.n as f64).fold(f64::INFINITY, f64::min);
        let why = rep.failure.map(|(n, w)| format!("; stopped at n = {n}: {w}")).unwrap_or_default();
        Ok((ok, format!("R(n) = [{}], min ratio/n = {min_ratio:.3}{why}", rs.join(", "))))
    })
}

/// Zero data stays zero.
pub fn uniqueness_probe() -> CriterionResult {
    timed(9, || {
        let p = iso()?;
        let g = uniform(&p, 64, 4)?;
        let modes: Vec<ModeSpec> =
            [[4.0, 1.0], [0.0, 0.5], [10.0, -3.0]].map(|xi| ModeSpec { xi, init: InitKind::Zero, seed: 0 }).to_vec();
        let run = evolve_modes(&p, &g, &modes, &IntegrateOptions::new(1.0, 1e-3), None, None)?;
        let worst = run
            .max_abs
            .iter()
            .copied()
            .chain(run.norms.iter().map(|(a, b)| a.max(*b)))
            .chain(run.ledger.energy.iter().map(|e| e.abs()))
            .fold(0.0, f64::max);
        Ok((worst <= 1e-14, format!("max over states, norms and energy = {worst:e}")))
    })
}

pub fn run_criterion(id: u8) -> Option<CriterionResult> {
    Some(match id {
        1 => upper_bound_sandwich(),
        2 => variational_ordering(),
        3 => growth_window(),
        4 => grid_convergence(),
        5 => stability_control(),
        6 => evolution_fidelity(),
        7 => synthesis_sandwich(),
        8 => hadamard_demonstration(),
        9 => uniqueness_probe(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=9).filter_map(run_criterion).collect()
}

/// Checks on a user configuration: the sandwich when unstable, absence of growth otherwise.
pub fn config_check(cfg: &TwoFluidConfig, grid: &GridSpec) -> CriterionResult {
    let start = Instant::now();
    let res = (|| -> Result<(bool, String)> {
        let p = build_profile(cfg)?;
        let g = grid.build(p.m(), p.ell())?;
        let xis = linspace(1.0, 100.0, 100);
        let curve = sweep_checked(&p, &g, &xis)?;
        if p.jump <= 0.0 {
            let ok = curve.points.iter().all(|pt| pt.lambda == 0.0);
            return Ok((ok, format!("stable (jump = {}): no growing modes at {} frequencies", p.jump, xis.len())));
        }
        let ok = curve.points.iter().all(|pt| pt.lambda > 0.0 && pt.lambda <= (p.g() * pt.xi).sqrt() * (1.0 + 1e-9));
        Ok((ok, format!("unstable (jump = {}): 0 < lambda <= sqrt(g xi) at {} frequencies", p.jump, xis.len())))
    })();
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id: 0, name: "configuration check", passed, detail, seconds: start.elapsed().as_secs_f64() }
}
