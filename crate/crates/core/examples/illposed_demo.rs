//! Hadamard sequence: initial H^2 size 1/n, L^2 size of eta at T0 = 1 at least 1.

use std::time::Instant;

use rtlinear::illposed::{verify_sequence, IllposedSpec};
use rtlinear::vgrid::GridSpec;
use rtlinear::{build_profile, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let profile = build_profile(&TwoFluidConfig::reference_isothermal())?;
    let spec = IllposedSpec::new(0, 2, 1.0, 1.0, 5)?;
    let start = Instant::now();
    let report = verify_sequence(&spec, &profile, &GridSpec::default())?;
    println!("{:>2} {:>8} {:>12} {:>12} {:>10} {:>10} {:>10}", "n", "R", "init_H2", "eta_L2(T0)", "ratio", "lam_min", "lam_max");
    for e in &report.entries {
        println!(
            "{:>2} {:>8} {:>12.4e} {:>12.4e} {:>10.3e} {:>10.4} {:>10.4}",
            e.n, e.r_n, e.init_norm_hj, e.final_norm_hk, e.ratio(), e.lambda_min, e.lambda_max
        );
    }
    match &report.failure {
        None => println!("all {} entries pass ({:.1?})", spec.n_max, start.elapsed()),
        Some((n, why)) => println!("stopped at n = {n}: {why}"),
    }
    Ok(())
}
