//! RK4 integration of single Fourier modes with the energy ledger.

use rtlinear::evolution::{evolve_modes, lambda_cap, InitKind, IntegrateOptions, ModeSpec};
use rtlinear::vgrid::{Grading, VerticalGrid};
use rtlinear::{build_profile, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let p = build_profile(&TwoFluidConfig::reference_isothermal())?;
    let grid = VerticalGrid::new(1.0, 1.0, 128, 128, Grading::Uniform, 4)?;

    let eig = [ModeSpec { xi: [6.0, 8.0], init: InitKind::Eigen, seed: 0 }];
    let run = evolve_modes(&p, &grid, &eig, &IntegrateOptions::new(1.0, 1e-3), None, None)?;
    let lambda = run.mode_rates[0].1;
    println!("eigen data: amplification {:.12} vs e^lambda {:.12}", run.amplification[0], lambda.exp());
    println!("            energy drift {:.2e}", run.ledger.drift);

    let r = 6.0;
    let modes: Vec<ModeSpec> =
        [[1.0, 1.0], [-2.0, 3.0], [4.0, -1.0]].iter().zip(1..).map(|(&xi, s)| ModeSpec { xi, init: InitKind::Random, seed: s }).collect();
    let cap = lambda_cap(&p, &grid, r, 24, &[])?;
    let mixed = evolve_modes(&p, &grid, &modes, &IntegrateOptions::new(2.0, 1e-3), Some(r), Some(cap))?;
    if let Some(g) = mixed.growth {
        println!("mixed data: fitted rate {:.5} <= 2 Lambda({r}) = {:.5}: {}", g.fitted_rate, 2.0 * cap, g.holds);
    }
    println!("            variational bound excess {:.3e}", mixed.ledger.bound_excess.unwrap_or(f64::NAN));
    Ok(())
}
