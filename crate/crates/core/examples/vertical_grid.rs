//! Interface-refined grids and piecewise quadrature.

use rtlinear::dispersion::grid_for_frequency;
use rtlinear::vgrid::{Grading, VerticalGrid};
use rtlinear::{build_profile, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let g = VerticalGrid::new(1.0, 1.0, 16, 16, Grading::Geometric(1.15), 4)?;
    println!("geometric: {} cells, h in [{:.4e}, {:.4e}]", g.n_cells(), g.min_width(), g.max_width());

    // ∫ e^{x} over (-1, 0) ∪ (0, 1)
    let exact = 1f64.exp() - (-1f64).exp();
    let approx = g.integrate(|x, _| x.exp());
    println!("quadrature error {:.2e}", (approx - exact).abs());

    let p = build_profile(&TwoFluidConfig::reference_isothermal())?;
    for xi in [10.0, 100.0, 1000.0] {
        let gf = grid_for_frequency(&p, 128, 128, 4, xi)?;
        println!("|xi| = {xi:>6}: first cell {:.3e}, decay length {:.3e}", gf.min_width(), 1.0 / xi);
    }
    Ok(())
}
