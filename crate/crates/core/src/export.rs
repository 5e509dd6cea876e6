//! CSV tables and JSON run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersion::DispersionCurve;
use crate::error::{Error, Result};
use crate::evolution::EvolutionRun;
use crate::illposed::DemoSequenceEntry;
use crate::steady_state::SteadyProfile;
use crate::synthesis::{FieldSnapshot, SobolevNormTrace, Unknown};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_float(*x),
            Cell::I(n) => n.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

/// A header plus rows, written in a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub const STEADY_HEADER: &[&str] = &["x3", "rho0", "drho0", "side"];
pub const DISPERSION_HEADER: &[&str] = &["xi", "lambda", "mu", "el_residual", "flux_jump", "psi0"];
pub const TRACE_HEADER: &[&str] = &["t", "eta_hk", "v_hk", "q_hk", "lower_env", "upper_env"];
pub const SNAPSHOT_HEADER: &[&str] = &["x1", "x2", "x3", "component", "value"];
pub const EVOLVE_HEADER: &[&str] = &["t", "energy", "drift", "l2_v", "l2_dtv", "fitted_rate"];
pub const ILLPOSED_HEADER: &[&str] = &["n", "R_n", "init_norm_Hj", "final_norm_Hk", "lambda_min", "lambda_max", "pass"];

/// `samples` points per slab, each slab including its own limit at `x₃ = 0`.
pub fn steady_table(profile: &SteadyProfile, samples: usize) -> Result<Table> {
    use crate::steady_state::Side;
    let mut t = Table::new(STEADY_HEADER);
    let n = samples.max(2);
    for (side, a, b) in [(Side::Lower, -profile.m(), 0.0), (Side::Upper, 0.0, profile.ell())] {
        for i in 0..n {
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            t.push(vec![
                Cell::F(x),
                Cell::F(profile.rho0_side(x, side)?),
                Cell::F(profile.drho0_side(x, side)?),
                Cell::S(side.label().into()),
            ]);
        }
    }
    Ok(t)
}

pub fn dispersion_table(curve: &DispersionCurve) -> Table {
    let mut t = Table::new(DISPERSION_HEADER);
    for p in &curve.points {
        t.push([p.xi, p.lambda, p.mu, p.el_residual, p.flux_jump, p.psi0].map(Cell::F).to_vec());
    }
    t
}

/// Norms (not squared) with the envelopes `e^{λ_min t}`, `e^{λ_max t}` times `eta0`, the
/// initial `η` norm.
pub fn trace_table(trace: &SobolevNormTrace, eta0: f64) -> Table {
    let mut t = Table::new(TRACE_HEADER);
    let eta = trace.norms(Unknown::Eta);
    let v = trace.norms(Unknown::V);
    let q = trace.norms(Unknown::Q);
    for (i, &time) in trace.times.iter().enumerate() {
        let (lo, hi) = trace.envelope(time);
        t.push([time, eta[i], v[i], q[i], lo * eta0, hi * eta0].map(Cell::F).to_vec());
    }
    t
}

/// Long format; components are `eta1..3`, `v1..3`, `q`.
pub fn snapshot_table(snaps: &[FieldSnapshot]) -> Table {
    let mut t = Table::new(SNAPSHOT_HEADER);
    for s in snaps {
        let comps = s.unknown.n_components();
        for p in &s.points {
            for (c, &value) in p.values.iter().take(comps).enumerate() {
                let name = if comps == 1 { s.unknown.label().to_string() } else { format!("{}{}", s.unknown.label(), c + 1) };
                t.push(vec![Cell::F(p.x1), Cell::F(p.x2), Cell::F(p.x3), Cell::S(name), Cell::F(value)]);
            }
        }
    }
    t
}

/// `l2_v`, `l2_dtv` are the `ρ₀`-weighted norms (not squared); `fitted_rate` repeats the
/// whole-run slope on every row.
pub fn evolve_table(run: &EvolutionRun) -> Table {
    let mut t = Table::new(EVOLVE_HEADER);
    let drift = run.ledger.drift_series();
    let rate = run.growth.map_or(f64::NAN, |g| g.fitted_rate);
    for (i, &time) in run.times.iter().enumerate() {
        let (v, dv) = run.norms[i];
        t.push([time, run.ledger.energy[i], drift[i], v.sqrt(), dv.sqrt(), rate].map(Cell::F).to_vec());
    }
    t
}

pub fn illposed_table(entries: &[DemoSequenceEntry]) -> Table {
    let mut t = Table::new(ILLPOSED_HEADER);
    for e in entries {
        t.push(vec![
            Cell::I(e.n as u64),
            Cell::F(e.r_n),
            Cell::F(e.init_norm_hj),
            Cell::F(e.final_norm_hk),
            Cell::F(e.lambda_min),
            Cell::F(e.lambda_max),
            Cell::B(e.pass),
        ]);
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

/// Enough to rerun a command and check that its outputs match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Command-line flags other than paths.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub version: String,
    pub threads: usize,
    pub seconds: f64,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse { path: e.path().to_string(), message: e.into_inner().to_string() })
    }
}

/// Writes `tables` into `dir` and returns their hashes in the given order.
pub fn write_tables(dir: &Path, tables: &[(&str, &Table)]) -> Result<Vec<OutputFile>> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|(name, t)| {
            let csv = t.to_csv();
            fs::write(dir.join(name), &csv)?;
            Ok(OutputFile { name: (*name).to_string(), sha256: sha256_hex(csv.as_bytes()) })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub command: String,
}

impl ErrorReport {
    pub fn new(command: &str, err: &Error) -> Self {
        Self { status: "error", kind: err.kind(), message: err.to_string(), command: command.to_string() }
    }
}
