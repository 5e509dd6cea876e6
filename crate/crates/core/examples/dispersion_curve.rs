//! Growth rate over a frequency sweep, checked against sqrt(g xi), and one eigenpair.

use rtlinear::dispersion::{assemble_forms, solve_mode, sweep, test_function_quotient, SmoothMode};
use rtlinear::vgrid::{Grading, VerticalGrid};
use rtlinear::{build_profile, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let p = build_profile(&TwoFluidConfig::reference_isothermal())?;
    let grid = VerticalGrid::new(1.0, 1.0, 256, 256, Grading::Uniform, 4)?;
    let xis: Vec<f64> = (0..12).map(|i| 2f64.powf(i as f64 * 0.6)).collect();
    let curve = sweep(&p, &grid, &xis);
    println!("{:>9} {:>10} {:>10} {:>12} {:>10}", "xi", "lambda", "sqrt(g xi)", "quotient", "flux jump");
    for pt in &curve.points {
        let q = test_function_quotient(&p, &grid, pt.xi, pt.xi.max(2.0), false)?;
        println!("{:>9.3} {:>10.6} {:>10.6} {:>12.5} {:>10.2e}", pt.xi, pt.lambda, (p.g() * pt.xi).sqrt(), q, pt.flux_jump);
    }
    if let Some((c1, c2)) = curve.fit {
        println!("lambda^2 ~ {c1:.4} xi - {c2:.4}");
    }

    let mode = solve_mode(&assemble_forms(&p, &grid, 10.0)?)?;
    let smooth = SmoothMode::solve(&p, 10.0, mode.mu)?;
    println!("xi = 10: discrete lambda {:.12}, shooting {:.12}, eigengap {:.4}", mode.lambda, smooth.lambda, mode.eigengap());
    Ok(())
}
