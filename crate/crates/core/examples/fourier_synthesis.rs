//! Real solution from an annulus of modes: H^k traces, a field slice and a Parseval check.

use rtlinear::synthesis::{build_mode_bank, field_snapshot, hk_norm_trace, parseval_check, FrequencyProfile, SnapshotSpec, Unknown};
use rtlinear::vgrid::GridSpec;
use rtlinear::{build_profile, TwoFluidConfig};

fn main() -> rtlinear::Result<()> {
    let p = build_profile(&TwoFluidConfig::reference_isothermal())?;
    let freq = FrequencyProfile::new(4.0, 6.0, 1.0)?;
    let bank = build_mode_bank(&p, &GridSpec { n_lower: 128, n_upper: 128, ..GridSpec::default() }, &freq, 2)?;
    println!("lambda over the annulus: [{:.6}, {:.6}]", bank.lambda_min(), bank.lambda_max());

    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    for k in 0..=2 {
        let tr = hk_norm_trace(&bank, &freq, k, &times)?;
        let eta = tr.norms(Unknown::Eta);
        let growth: Vec<String> = eta.iter().map(|v| format!("{:.4}", v / eta[0])).collect();
        println!("H^{k}: |eta(t)|/|eta(0)| = [{}], excess {:.1e}", growth.join(", "), tr.sandwich_excess());
    }

    let spec = SnapshotSpec { half_width: 1.5, points: 5, x3: vec![0.0], unknowns: vec![Unknown::Eta], t: 0.0 };
    let snap = field_snapshot(&bank, &freq, Unknown::Eta, spec.t, &spec.horizontal(), &spec.vertical())?;
    for row in snap.points.chunks(5) {
        let s: Vec<String> = row.iter().map(|pt| format!("{:>9.5}", pt.values[2])).collect();
        println!("eta3 {}", s.join(" "));
    }
    println!("imaginary part ratio {:.1e}", snap.imag_ratio);

    let check = parseval_check(&bank, &freq, 15.0)?;
    println!("Parseval on a radius-15 disk: physical {:.6}, spectral {:.6}, rel err {:.2e}", check.physical, check.spectral, check.rel_err);
    Ok(())
}
