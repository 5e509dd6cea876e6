//! Load a JSON configuration and export a dispersion table the way the CLI does.

use rtlinear::config::RunConfig;
use rtlinear::dispersion::sweep;
use rtlinear::export::{dispersion_table, sha256_hex};
use rtlinear::build_profile;

const CONFIG: &str = r#"{
    "g": 9.81, "m": 2.0, "ell": 1.0, "rho0_minus": 1.2,
    "law_minus": {"kind": "polytropic", "K": 3.0e4, "gamma": 1.4},
    "law_plus": {"kind": "isothermal", "K": 1.0e4},
    "grid": {"n_lower": 96, "n_upper": 64, "grading": {"geometric": 1.02}},
    "dispersion": {"xi_min": 0.1, "xi_max": 50, "xi_count": 8, "log": true}
}"#;

fn main() -> rtlinear::Result<()> {
    let cfg = RunConfig::from_json_str(CONFIG)?;
    println!("rho0+ = {:.6}", cfg.rho0_plus);
    let p = build_profile(&cfg.fluid)?;
    let grid = cfg.grid.build(p.m(), p.ell())?;
    let table = dispersion_table(&sweep(&p, &grid, &cfg.dispersion.frequencies()?));
    let csv = table.to_csv();
    print!("{csv}");
    println!("sha256 {}", sha256_hex(csv.as_bytes()));

    match RunConfig::from_json_str(&CONFIG.replace("\"m\": 2.0, ", "")) {
        Err(e) => println!("without m: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
