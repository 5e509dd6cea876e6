//! Hydrostatic density of a polytropic pair and the instability test.

use rtlinear::barotropic::BarotropicLaw;
use rtlinear::{build_profile, check_instability, Side, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let cfg = TwoFluidConfig::new(
        1.0,
        1.0,
        0.8,
        1.0,
        BarotropicLaw::polytropic(2.0, 1.4)?,
        BarotropicLaw::polytropic(1.0, 5.0 / 3.0)?,
    )?;
    let report = check_instability(&cfg)?;
    println!("rho0+ = {:.6}, jump = {:.6}, unstable = {}", report.rho0_plus, report.jump, report.unstable);
    println!("regime: {:.4} > {:.4} is {}", report.regime.lhs, report.regime.rhs, report.regime.holds);

    let p = build_profile(&cfg)?;
    println!("{:>8} {:>10} {:>10} {:>6}", "x3", "rho0", "rho0'", "side");
    for (x, side) in [(-1.0, Side::Lower), (-0.5, Side::Lower), (0.0, Side::Lower), (0.0, Side::Upper), (0.4, Side::Upper), (0.8, Side::Upper)] {
        println!("{x:>8.2} {:>10.6} {:>10.6} {:>6}", p.rho0_side(x, side)?, p.drho0_side(x, side)?, side.label());
    }

    // enthalpy balance h(rho0(x)) + g x = const in each slab
    for side in [Side::Lower, Side::Upper] {
        let law = p.law(side);
        let xs = if side == Side::Lower { [-1.0, -0.25] } else { [0.1, 0.7] };
        let h: Vec<f64> = xs.iter().map(|&x| law.enthalpy(p.rho0_side(x, side).unwrap()).unwrap() + p.g() * x).collect();
        println!("{}: h + g x = {:.12} / {:.12}", side.label(), h[0], h[1]);
    }
    Ok(())
}
