//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::acceptance::{config_check, run_criterion, CriterionResult};
use crate::config::{load_config, RunConfig};
use crate::dispersion::sweep;
use crate::error::{Error, Result};
use crate::evolution::{evolve_modes, lambda_cap, ModeSpec};
use crate::export::{
    dispersion_table, evolve_table, illposed_table, sha256_hex, snapshot_table, steady_table, trace_table, write_json,
    write_tables, ErrorReport, Manifest, Table,
};
use crate::illposed::verify_sequence;
use crate::steady_state::{build_profile, check_instability, TwoFluidConfig};
use crate::synthesis::{build_mode_bank, field_snapshot, hk_norm_trace, FrequencyProfile, Unknown};

/// Worker-count override for the thread pool.
pub const THREADS_ENV: &str = "RTLINEAR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rtlinear", version, about = "Linear compressible Rayleigh-Taylor toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: `out_dir` from the config, then `out/<command>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the steady density profile.
    Steady {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Sweep the growth rate over horizontal frequencies.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        xi_min: Option<f64>,
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long)]
        xi_count: Option<usize>,
        /// Logarithmic spacing.
        #[arg(long)]
        log: bool,
    },
    /// Norm traces and snapshots of an annulus synthesis.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Time-integrate Fourier modes and audit the energy.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Build the ill-posedness sequence.
    Illposed {
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite (and a check of `--config` when given).
    Selftest {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only check the given configuration.
        #[arg(long)]
        config_only: bool,
        /// Subset of criteria, e.g. `--criteria 1,4,9`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Rerun a command from its manifest and compare output hashes.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady { .. } => "steady",
            Command::Dispersion { .. } => "dispersion",
            Command::Synth { .. } => "synth",
            Command::Evolve { .. } => "evolve",
            Command::Illposed { .. } => "illposed",
            Command::Selftest { .. } => "selftest",
            Command::Replay { .. } => "replay",
        }
    }
}

/// What a command produced before anything is written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(&'static str, Table)>,
    pub summary: Value,
    pub passed: bool,
    pub lines: Vec<String>,
}

fn run_steady(cfg: &RunConfig) -> Result<Outcome> {
    let profile = build_profile(&cfg.fluid)?;
    let report = check_instability(&cfg.fluid)?;
    let table = steady_table(&profile, cfg.steady.samples)?;
    Ok(Outcome {
        lines: vec![format!("rho0+ = {}, jump = {}, unstable = {}", report.rho0_plus, report.jump, report.unstable)],
        tables: vec![("steady.csv", table)],
        summary: json!({ "instability": report }),
        passed: true,
    })
}

fn run_dispersion(cfg: &RunConfig) -> Result<Outcome> {
    let profile = build_profile(&cfg.fluid)?;
    let grid = cfg.grid.build(profile.m(), profile.ell())?;
    let xis = cfg.dispersion.frequencies()?;
    let curve = sweep(&profile, &grid, &xis);
    let failed = curve.points.iter().filter(|p| p.error.is_some()).count();
    let xi_max = cfg.dispersion.xi_max;
    let max_ratio = curve
        .points
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| p.lambda / (profile.g() * p.xi).sqrt())
        .fold(0.0, f64::max);
    let summary = json!({
        "points": curve.points.len(),
        "failed_points": failed,
        "unstable": profile.jump > 0.0,
        "fit_C1_C2": curve.fit,
        "fit_C1_C2_upper_half": curve.fit_window(0.5 * (cfg.dispersion.xi_min + xi_max), xi_max),
        "Lambda_R": { "R": xi_max, "value": curve.lambda_max(xi_max) },
        "max_lambda_over_sqrt_g_xi": max_ratio,
    });
    Ok(Outcome {
        lines: vec![format!(
            "{} frequencies, Lambda({xi_max}) = {}, max lambda/sqrt(g xi) = {max_ratio}",
            curve.points.len(),
            curve.lambda_max(xi_max)
        )],
        passed: failed == 0,
        tables: vec![("dispersion.csv", dispersion_table(&curve))],
        summary,
    })
}

fn run_synth(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.synth.as_ref().ok_or_else(|| Error::Config("missing \"synth\" section".into()))?;
    let profile = build_profile(&cfg.fluid)?;
    let freq = FrequencyProfile {
        radial_nodes: p.radial_nodes,
        angular_nodes: p.angular_nodes,
        ..FrequencyProfile::new(p.r2, p.r3, p.amplitude)?
    };
    let bank = build_mode_bank(&profile, &cfg.grid, &freq, p.k)?;
    let trace = hk_norm_trace(&bank, &freq, p.k, &p.times)?;
    let start = hk_norm_trace(&bank, &freq, p.k, &[0.0])?;
    let eta0 = start.eta[0].sqrt();
    let mut with_zero = vec![0.0];
    with_zero.extend(p.times.iter().copied().filter(|&t| t != 0.0));
    let excess = hk_norm_trace(&bank, &freq, p.k, &with_zero)?.sandwich_excess();
    let mut tables = vec![("trace.csv", trace_table(&trace, eta0))];
    let mut snaps = Vec::new();
    if let Some(s) = &p.snapshot {
        for &u in &s.unknowns {
            snaps.push(field_snapshot(&bank, &freq, u, s.t, &s.horizontal(), &s.vertical())?);
        }
        tables.push(("snapshot.csv", snapshot_table(&snaps)));
    }
    let imag = snaps.iter().map(|s| s.imag_ratio).fold(0.0, f64::max);
    let gap = snaps.iter().map(|s| s.route_gap).fold(0.0, f64::max);
    let (c1, c2) = bank.fitted_constants();
    let (lower, upper) = bank.rate_bounds();
    let norms0: Vec<f64> = Unknown::ALL.iter().map(|&u| start.squared(u)[0].sqrt()).collect();
    Ok(Outcome {
        lines: vec![format!(
            "lambda in [{}, {}], envelope excess {excess:e}, snapshot imag ratio {imag:e}",
            bank.lambda_min(),
            bank.lambda_max()
        )],
        passed: true,
        tables,
        summary: json!({
            "lambda_min": bank.lambda_min(),
            "lambda_max": bank.lambda_max(),
            "fitted_C1_C2": [c1, c2],
            "rate_bounds": [lower, upper],
            "initial_norms_eta_v_q": norms0,
            "sandwich_excess": excess,
            "snapshot_imag_ratio": imag,
            "snapshot_route_gap": gap,
        }),
    })
}

fn run_evolve(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.evolve.as_ref().ok_or_else(|| Error::Config("missing \"evolve\" section".into()))?;
    let profile = build_profile(&cfg.fluid)?;
    let grid = cfg.grid.build(profile.m(), profile.ell())?;
    let cap = match p.r {
        Some(r) => {
            let extra: Vec<f64> = p.modes.iter().map(|m| m.xi[0].hypot(m.xi[1])).collect();
            Some(lambda_cap(&profile, &grid, r, 32, &extra)?)
        }
        None => None,
    };
    let modes: Vec<_> = p.modes.iter().map(|m| ModeSpec { seed: m.seed.wrapping_add(cfg.seed), ..*m }).collect();
    let run = evolve_modes(&profile, &grid, &modes, &p.options(), p.r, cap)?;
    let holds = run.growth.is_none_or(|g| g.holds);
    Ok(Outcome {
        lines: vec![format!(
            "{} samples, energy drift {:e}, fitted rate {}",
            run.times.len(),
            run.ledger.drift,
            run.growth.map_or(f64::NAN, |g| g.fitted_rate)
        )],
        passed: holds,
        tables: vec![("evolve.csv", evolve_table(&run))],
        summary: json!({
            "drift": run.ledger.drift,
            "Lambda_R": cap,
            "bound_excess": run.ledger.bound_excess,
            "growth": run.growth,
            "mode_rates": run.mode_rates,
            "amplification": run.amplification,
        }),
    })
}

fn run_illposed(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.illposed.as_ref().ok_or_else(|| Error::Config("missing \"illposed\" section".into()))?;
    let profile = build_profile(&cfg.fluid)?;
    let rep = verify_sequence(spec, &profile, &cfg.grid)?;
    let mut lines: Vec<String> = rep
        .entries
        .iter()
        .map(|e| format!("n = {}: R = {}, |eta(T0)| = {}, ratio = {}", e.n, e.r_n, e.final_norm_hk, e.ratio()))
        .collect();
    if let Some((n, why)) = &rep.failure {
        lines.push(format!("incomplete at n = {n}: {why}"));
    }
    Ok(Outcome {
        lines,
        passed: rep.complete,
        tables: vec![("illposed.csv", illposed_table(&rep.entries))],
        summary: serde_json::to_value(&rep)?,
    })
}

fn run_selftest(cfg: Option<&RunConfig>, config_only: bool, criteria: &[u8]) -> Result<Outcome> {
    let mut results: Vec<CriterionResult> = Vec::new();
    let default_cfg;
    let cfg = match cfg {
        Some(c) => c,
        None => {
            default_cfg = RunConfig::from_fluid(TwoFluidConfig::reference_isothermal())?;
            &default_cfg
        }
    };
    results.push(config_check(&cfg.fluid, &cfg.grid));
    if !config_only {
        let ids: Vec<u8> = if criteria.is_empty() { (1..=9).collect() } else { criteria.to_vec() };
        for id in ids {
            let r = run_criterion(id).ok_or_else(|| Error::Config(format!("no acceptance criterion {id}")))?;
            println!("{r}");
            results.push(r);
        }
    }
    let passed = results.iter().all(|r| r.passed);
    Ok(Outcome {
        lines: vec![results[0].to_string(), format!("selftest {}", if passed { "passed" } else { "FAILED" })],
        tables: vec![],
        summary: json!({ "passed": passed, "results": results }),
        passed,
    })
}

fn out_dir(flag: Option<&Path>, cfg: Option<&RunConfig>, command: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(command))
}

/// Runs `command` on `cfg` and writes tables, `summary.json` and the manifest into `dir`.
pub fn execute(command: &str, cfg: Option<&RunConfig>, args: Vec<String>, dir: &Path) -> Result<(Outcome, Manifest)> {
    let start = Instant::now();
    let need = || cfg.ok_or_else(|| Error::Config(format!("{command} needs --config")));
    let outcome = match command {
        "steady" => run_steady(need()?)?,
        "dispersion" => run_dispersion(need()?)?,
        "synth" => run_synth(need()?)?,
        "evolve" => run_evolve(need()?)?,
        "illposed" => run_illposed(need()?)?,
        "selftest" => {
            let config_only = args.iter().any(|a| a == "--config-only");
            let criteria: Vec<u8> = args
                .iter()
                .filter_map(|a| a.strip_prefix("--criteria="))
                .flat_map(|s| s.split(',').filter_map(|x| x.parse().ok()).collect::<Vec<_>>())
                .collect();
            run_selftest(cfg, config_only, &criteria)?
        }
        other => return Err(Error::Config(format!("unknown command {other:?}"))),
    };
    let tables: Vec<(&str, &Table)> = outcome.tables.iter().map(|(n, t)| (*n, t)).collect();
    let outputs = write_tables(dir, &tables)?;
    write_json(&dir.join(if command == "selftest" { "selftest.json" } else { "summary.json" }), &outcome.summary)?;
    let config = match cfg {
        Some(c) => serde_json::to_value(c)?,
        None => Value::Null,
    };
    let manifest = Manifest {
        command: command.to_string(),
        args,
        config_sha256: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
        config,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    manifest.write(dir)?;
    Ok((outcome, manifest))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let name = cli.command.name();
    let (cfg, args, flag_out) = match cli.command {
        Command::Steady { common, samples } => {
            let mut cfg = load_config(&common.config)?;
            if let Some(s) = samples {
                cfg.steady.samples = s;
            }
            (Some(cfg), vec![], common.out)
        }
        Command::Dispersion { common, xi_min, xi_max, xi_count, log } => {
            let mut cfg = load_config(&common.config)?;
            let d = &mut cfg.dispersion;
            d.xi_min = xi_min.unwrap_or(d.xi_min);
            d.xi_max = xi_max.unwrap_or(d.xi_max);
            d.xi_count = xi_count.unwrap_or(d.xi_count);
            d.log |= log;
            (Some(cfg), vec![], common.out)
        }
        Command::Synth { common } | Command::Evolve { common } | Command::Illposed { common } => {
            (Some(load_config(&common.config)?), vec![], common.out)
        }
        Command::Selftest { config, out, config_only, criteria } => {
            let cfg = config.as_deref().map(load_config).transpose()?;
            let mut args = Vec::new();
            if config_only {
                args.push("--config-only".to_string());
            }
            if !criteria.is_empty() {
                let list: Vec<String> = criteria.iter().map(u8::to_string).collect();
                args.push(format!("--criteria={}", list.join(",")));
            }
            (cfg, args, out)
        }
        Command::Replay { manifest, out } => return replay(&manifest, out.as_deref()),
    };
    let dir = out_dir(flag_out.as_deref(), cfg.as_ref(), name);
    let (outcome, _) = execute(name, cfg.as_ref(), args, &dir)?;
    for l in &outcome.lines {
        println!("{l}");
    }
    println!("wrote {}", dir.display());
    Ok(outcome.passed)
}

/// Reruns the recorded command; `Ok(false)` when an output hash differs.
pub fn replay(manifest_path: &Path, out: Option<&Path>) -> Result<bool> {
    let m = Manifest::read(manifest_path)?;
    let cfg = match &m.config {
        Value::Null => None,
        v => Some(RunConfig::from_json_str(&serde_json::to_string(v)?)?),
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out").join(format!("{}-replay", m.command)));
    let (_, fresh) = execute(&m.command, cfg.as_ref(), m.args.clone(), &dir)?;
    let mut same = fresh.config_sha256 == m.config_sha256 && fresh.outputs.len() == m.outputs.len();
    for (a, b) in m.outputs.iter().zip(&fresh.outputs) {
        let ok = a == b;
        same &= ok;
        println!("{} {}", if ok { "match   " } else { "MISMATCH" }, a.name);
    }
    println!("replay of {} {}", m.command, if same { "reproduced all outputs" } else { "differs" });
    Ok(same)
}

/// Parses `args`, runs, and returns the process exit code: 0 success, 1 failure, 2 usage.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    let out_hint = match &cli.command {
        Command::Steady { common, .. }
        | Command::Dispersion { common, .. }
        | Command::Synth { common }
        | Command::Evolve { common }
        | Command::Illposed { common } => common.out.clone(),
        Command::Selftest { out, .. } | Command::Replay { out, .. } => out.clone(),
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            let report = ErrorReport::new(name, &err);
            if let Ok(text) = serde_json::to_string(&report) {
                eprintln!("{text}");
            }
            if let Some(dir) = out_hint {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = write_json(&dir.join("error.json"), &report);
                }
            }
            1
        }
    }
}
