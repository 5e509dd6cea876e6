use std::sync::OnceLock;

use super::*;
use crate::barotropic::BarotropicLaw;
use crate::dispersion::{residuals, solve_mode};
use crate::steady_state::{build_profile, TwoFluidConfig};
use crate::vgrid::{derivative, Grading};

fn iso() -> SteadyProfile {
    build_profile(&TwoFluidConfig::reference_isothermal()).unwrap()
}

fn guess() -> GridSpec {
    GridSpec { n_lower: 128, n_upper: 128, quad_order: 4, grading: Grading::Uniform }
}

fn annulus() -> FrequencyProfile {
    FrequencyProfile { radial_nodes: 24, angular_nodes: 96, ..FrequencyProfile::new(4.0, 6.0, 1.0).unwrap() }
}

fn bank() -> &'static ModeBank {
    static BANK: OnceLock<ModeBank> = OnceLock::new();
    BANK.get_or_init(|| build_mode_bank(&iso(), &guess(), &annulus(), 4).unwrap())
}

#[test]
fn bump_is_supported_in_open_annulus() {
    let f = annulus();
    for r in [0.0, 3.9, 4.0, 6.0, 6.5] {
        assert_eq!(f.eval(r), 0.0);
    }
    assert!(f.eval(5.0) > 0.0 && (f.eval(5.0) - (-1.0f64).exp()).abs() < 1e-15);
    for &(r, w) in &f.nodes() {
        assert!(r > 4.0 && r < 6.0 && w > 0.0);
    }
    // 2π∫ r f² dr by a fine midpoint rule
    let n = 200_000;
    let h = 2.0 / n as f64;
    let mid: f64 = (0..n).map(|i| 4.0 + h * (i as f64 + 0.5)).map(|r| h * r * f.eval(r).powi(2)).sum();
    let gl = FrequencyProfile::new(4.0, 6.0, 1.0).unwrap().weighted_norm_sq(0);
    assert!((gl - 2.0 * PI * mid).abs() < 1e-9 * mid, "{gl} vs {}", 2.0 * PI * mid);
}

#[test]
fn profile_validation() {
    assert!(FrequencyProfile::new(3.0, 3.0, 1.0).is_err());
    assert!(FrequencyProfile::new(-1.0, 3.0, 1.0).is_err());
    let odd = FrequencyProfile { angular_nodes: 7, ..annulus() };
    assert!(odd.validate().is_err());
}

#[test]
fn bank_nodes_are_normalized_growing_modes() {
    let b = bank();
    assert_eq!(b.nodes().len(), 24);
    for n in b.nodes() {
        assert!(n.lambda() > 0.0 && n.lambda() <= (b.profile().g() * n.r).sqrt());
        assert!((n.mode.mass() - 1.0).abs() < 1e-12);
        assert!((n.lambda() - n.discrete_lambda).abs() < 1e-3 * n.lambda());
        // nonzero interface displacement
        assert!(n.mode.derivatives(0.0, Side::Upper).psi[0] > 0.0);
    }
    assert!(b.lambda_min() < b.lambda_max());
    let (lo, hi) = b.rate_bounds();
    assert!(lo > 0.0 && lo <= b.lambda_min() * (1.0 + 1e-12));
    assert!(hi >= b.lambda_max());
}

#[test]
fn recursion_matches_discrete_slopes() {
    let p = iso();
    let xi = 5.0;
    let grid = VerticalGrid::new(1.0, 1.0, 512, 512, Grading::Uniform, 4).unwrap();
    let disc = solve_mode(&assemble_forms(&p, &grid, xi).unwrap()).unwrap();
    let smooth = SmoothMode::solve(&p, xi, disc.mu).unwrap();
    let dpsi = derivative(&grid, &disc.psi).unwrap();
    let (mut err, mut norm) = (0.0, 0.0);
    for c in 0..grid.n_cells() {
        let (a, b) = grid.cell_bounds(c);
        let side = grid.cell_side(c);
        let s = smooth.derivatives(0.5 * (a + b), side).psi[1];
        err += (b - a) * (dpsi.values[c] - s).powi(2);
        norm += (b - a) * s * s;
    }
    assert!((err / norm).sqrt() < 5e-3, "relative slope error {}", (err / norm).sqrt());
}

#[test]
fn flux_is_continuous_at_interface() {
    let b = bank();
    for n in b.nodes() {
        let lo = n.mode.derivatives(0.0, Side::Lower);
        let up = n.mode.derivatives(0.0, Side::Upper);
        let omega = |side: Side, qt: f64| {
            let rho = b.profile().rho0_unchecked(0.0, side);
            qt * b.profile().law(side).dpressure_unchecked(rho)
        };
        let (wl, wu) = (omega(Side::Lower, lo.qt[0]), omega(Side::Upper, up.qt[0]));
        assert!((wl - wu).abs() <= 1e-9 * wl.abs().max(wu.abs()));
        assert!((lo.psi[0] - up.psi[0]).abs() <= 1e-9 * up.psi[0].abs());
    }
    let p = iso();
    let grid = VerticalGrid::new(1.0, 1.0, 256, 256, Grading::Uniform, 4).unwrap();
    let m = solve_mode(&assemble_forms(&p, &grid, 5.0).unwrap()).unwrap();
    assert!(residuals(&m, &p, &grid).flux_jump < 1e-3);
}

#[test]
fn quarter_turn_equivariance() {
    let b = bank();
    let r = b.nodes()[3].r;
    let w0 = b.hat_w(3, [r, 0.0], -0.1, Side::Lower);
    let w1 = b.hat_w(3, [0.0, r], -0.1, Side::Lower);
    assert!((w1[0]).norm() < 1e-15);
    assert_eq!(w1[1], w0[0]);
    assert_eq!(w1[2], w0[2]);
}

#[test]
fn narrow_bump_velocity_ratio() {
    let f = FrequencyProfile { radial_nodes: 8, ..FrequencyProfile::new(5.0, 5.02, 1.0).unwrap() };
    let b = build_mode_bank(&iso(), &guess(), &f, 0).unwrap();
    let tr = hk_norm_trace(&b, &f, 0, &[0.0]).unwrap();
    let centre = SmoothMode::solve(&iso(), 5.01, -b.nodes()[4].lambda().powi(2)).unwrap();
    let ratio = tr.v[0] / tr.eta[0];
    let spread = b.lambda_max().powi(2) - b.lambda_min().powi(2);
    assert!((ratio - centre.lambda.powi(2)).abs() <= spread);
}

#[test]
fn sandwich_and_monotone_traces() {
    let b = bank();
    let f = annulus();
    let times: Vec<f64> = (0..=20).map(|i| 0.1 * i as f64).collect();
    for k in 0..=3 {
        let tr = hk_norm_trace(b, &f, k, &times).unwrap();
        assert!(tr.sandwich_excess() <= 1e-12, "k = {k}: {}", tr.sandwich_excess());
        for u in Unknown::ALL {
            assert!(tr.squared(u).windows(2).all(|w| w[1] > w[0]));
        }
    }
    assert!(hk_norm_trace(b, &f, 5, &times).is_err());
}

#[test]
fn amplitude_scales_quadratically() {
    let b = bank();
    let f = annulus();
    let a = hk_norm_trace(b, &f, 2, &[0.0, 1.0]).unwrap();
    let c = hk_norm_trace(b, &f.with_amplitude(2.0), 2, &[0.0, 1.0]).unwrap();
    for u in Unknown::ALL {
        for (x, y) in a.squared(u).iter().zip(c.squared(u)) {
            assert!((4.0 * x - y).abs() <= 1e-13 * y);
        }
    }
    let wrong = FrequencyProfile { radial_nodes: 10, ..f };
    assert!(hk_norm_trace(b, &wrong, 0, &[0.0]).is_err());
}

#[test]
fn snapshot_at_origin_matches_radial_quadrature() {
    let b = bank();
    let f = annulus();
    let s = field_snapshot(b, &f, Unknown::Eta, 0.0, &[[0.0, 0.0]], &[(0.0, Side::Upper)]).unwrap();
    let direct: f64 = b
        .nodes()
        .iter()
        .map(|n| n.weight * n.r * f.eval(n.r) * n.mode.derivatives(0.0, Side::Upper).psi[0])
        .sum::<f64>()
        / (2.0 * PI);
    let v = s.points[0].values;
    assert!((v[2] - direct).abs() < 1e-14 * direct.abs());
    assert_eq!((v[0], v[1]), (0.0, 0.0));
}

#[test]
fn snapshot_is_real_equivariant_and_continuous() {
    let b = bank();
    let f = annulus();
    let spec = SnapshotSpec { half_width: 1.5, points: 7, x3: vec![-0.2, 0.1], unknowns: Unknown::ALL.to_vec(), t: 0.5 };
    let hz = spec.horizontal();
    for u in Unknown::ALL {
        let s = field_snapshot(b, &f, u, 0.5, &hz, &spec.vertical()).unwrap();
        assert!(s.imag_ratio <= 1e-12, "{u}: {}", s.imag_ratio);
        assert!(s.route_gap <= 1e-9, "{u}: {}", s.route_gap);
        // (x1, x2) ↦ (−x2, x1): grid index (i, j) ↦ (n−1−j, i)
        let n = spec.points;
        for z in 0..2 {
            let at = |i: usize, j: usize| s.points[z * n * n + i * n + j].values;
            for i in 0..n {
                for j in 0..n {
                    let (a, r) = (at(i, j), at(n - 1 - j, i));
                    let expect = if u == Unknown::Q { a } else { [-a[1], a[0], a[2]] };
                    for c in 0..3 {
                        assert!((r[c] - expect[c]).abs() < 1e-12 * (1.0 + expect[c].abs()));
                    }
                }
            }
        }
    }
    let hz = SnapshotSpec { half_width: 2.0, points: 5, x3: vec![], unknowns: vec![], t: 0.0 }.horizontal();
    let lo = field_snapshot(b, &f, Unknown::Eta, 0.0, &hz, &[(0.0, Side::Lower)]).unwrap();
    let up = field_snapshot(b, &f, Unknown::Eta, 0.0, &hz, &[(0.0, Side::Upper)]).unwrap();
    for (a, c) in lo.points.iter().zip(&up.points) {
        assert!((a.values[2] - c.values[2]).abs() < 1e-9 * (1.0 + c.values[2].abs()));
    }
}

#[test]
fn parseval_on_a_large_disk() {
    let b = bank();
    let f = annulus();
    for radius in [15.0, 25.0] {
        let c = parseval_check(b, &f, radius).unwrap();
        assert!(c.rel_err < 0.01, "{c:?}");
    }
}

#[test]
fn lommel_closed_form_against_quadrature() {
    let l = 7.0;
    for nu in 0..2 {
        for (a, b) in [(3.0, 3.0), (3.0, 4.5), (2.2, 2.21)] {
            let n = 100_000;
            let h = l / n as f64;
            let j = |x: f64| if nu == 0 { jn01(x).0 } else { jn01(x).1 };
            let q: f64 = (0..n).map(|i| h * (i as f64 + 0.5)).map(|x| h * x * j(a * x) * j(b * x)).sum();
            assert!((lommel(nu, a, b, l) - q).abs() < 1e-7, "nu {nu} a {a} b {b}");
        }
    }
}

#[test]
fn initial_data_constant_is_finite_and_stable() {
    let f = annulus();
    let c24 = initial_data_constant(bank(), &f, 2).unwrap();
    let f32 = FrequencyProfile { radial_nodes: 32, ..f };
    let b32 = build_mode_bank(&iso(), &guess(), &f32, 2).unwrap();
    let c32 = initial_data_constant(&b32, &f32, 2).unwrap();
    assert!(c24.is_finite() && c24 > 0.0);
    assert!((c24 - c32).abs() < 1e-6 * c32, "{c24} vs {c32}");
}

#[test]
fn stable_annulus_is_a_configuration_error() {
    let cfg = TwoFluidConfig::new(
        1.0,
        1.0,
        1.0,
        1.0,
        BarotropicLaw::isothermal(1.0).unwrap(),
        BarotropicLaw::isothermal(2.0).unwrap(),
    )
    .unwrap();
    let p = build_profile(&cfg).unwrap();
    let f = FrequencyProfile { radial_nodes: 4, ..annulus() };
    let e = build_mode_bank(&p, &guess(), &f, 0).unwrap_err().to_string();
    assert!(e.contains("stable") && e.contains("node 0"), "{e}");
    assert!(build_mode_bank(&iso(), &guess(), &f, 5).is_err());
}
