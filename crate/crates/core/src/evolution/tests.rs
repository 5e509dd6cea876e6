use super::*;
use crate::dispersion::{assemble_forms, solve_mode};
use crate::steady_state::{build_profile, TwoFluidConfig};
use crate::vgrid::Grading;

fn iso() -> SteadyProfile {
    build_profile(&TwoFluidConfig::reference_isothermal()).unwrap()
}

fn grid(n: usize) -> VerticalGrid {
    VerticalGrid::new(1.0, 1.0, n, n, Grading::Uniform, 4).unwrap()
}

fn eigen(n: usize, xi: [f64; 2]) -> (FrequencyOperator, LinearState, f64) {
    let p = iso();
    let g = grid(n);
    let r = xi[0].hypot(xi[1]);
    let m = solve_mode(&assemble_forms(&p, &g, r).unwrap()).unwrap();
    let st = eigenmode_state(&g, &m, xi).unwrap();
    (FrequencyOperator::new(&p, &g, xi).unwrap(), st, m.lambda)
}

fn max_diff(a: &LinearState, b: &LinearState) -> f64 {
    let mut d = a.clone();
    d.add_scaled(-1.0, b);
    d.max_abs()
}

#[test]
fn zero_state_has_zero_rate() {
    let p = iso();
    let g = grid(16);
    let op = FrequencyOperator::new(&p, &g, [1.0, 2.0]).unwrap();
    let z = LinearState::zeros(&g, [1.0, 2.0]);
    assert_eq!(op.rhs(&z).max_abs(), 0.0);
}

#[test]
fn eigenmode_is_a_fixed_direction() {
    let (op, st, lambda) = eigen(64, [3.0, 4.0]);
    let d = op.rhs(&st);
    let mut expect = st.clone();
    expect.scale(lambda);
    assert!(max_diff(&d, &expect) <= 1e-9 * st.max_abs() * lambda, "{}", max_diff(&d, &expect));
}

#[test]
fn vertical_only_state_matches_direct_quadrature() {
    let p = iso();
    let g = grid(8);
    let xi = [0.7, -0.2];
    let op = FrequencyOperator::new(&p, &g, xi).unwrap();
    let mut st = LinearState::zeros(&g, xi);
    let last = g.n_nodes() - 1;
    for i in 1..last {
        st.eta3[i] = C::new(1.0, 0.5);
    }
    let d = op.rhs(&st);
    // direct: horizontal −iξ_j g ∫_c ρ₀η₃ / ∫_c ρ₀, vertical M v̇₃ = −g ∫ρ₀ η₃' w
    for c in 0..g.n_cells() {
        let (a, b) = g.cell_bounds(c);
        let side = g.cell_side(c);
        let (mut num, mut den) = (C::new(0.0, 0.0), 0.0);
        for (x, w) in g.quad_points(c) {
            let rho = p.rho0_unchecked(x, side);
            let e = (st.eta3[c] * (b - x) + st.eta3[c + 1] * (x - a)) / (b - a);
            num += e * (w * rho);
            den += w * rho;
        }
        for j in 0..2 {
            let want = -I * xi[j] * num * p.g() / den;
            assert!((d.v_h[j][c] - want).norm() < 1e-13);
        }
    }
    let mut lhs = vec![C::new(0.0, 0.0); g.n_nodes()];
    for c in 0..g.n_cells() {
        let (a, b) = g.cell_bounds(c);
        let side = g.cell_side(c);
        for (x, w) in g.quad_points(c) {
            let rho = p.rho0_unchecked(x, side);
            let (hl, hr) = ((b - x) / (b - a), (x - a) / (b - a));
            let vdot = d.v3[c] * hl + d.v3[c + 1] * hr;
            let deta = (st.eta3[c + 1] - st.eta3[c]) / (b - a);
            lhs[c] += (vdot * rho + deta * (p.g() * rho)) * (w * hl);
            lhs[c + 1] += (vdot * rho + deta * (p.g() * rho)) * (w * hr);
        }
    }
    for v in &lhs[1..last] {
        assert!(v.norm() < 1e-12, "{v}");
    }
    assert_eq!(d.v3[0], C::new(0.0, 0.0));
    assert_eq!(d.v3[last], C::new(0.0, 0.0));
}

#[test]
fn eigenmode_amplitude_and_energy() {
    let (op, st, lambda) = eigen(128, [6.0, 8.0]);
    let opts = IntegrateOptions::new(1.0, 1e-3);
    let tr = integrate(&op, &st, &opts).unwrap();
    let n = velocity_norms(&op, &tr);
    let amp = (n.last().unwrap().0 / n[0].0).sqrt();
    assert!((amp / lambda.exp() - 1.0).abs() < 1e-6, "amplification {amp} vs {}", lambda.exp());
    let led = energy_audit(&op, &tr, Some(lambda));
    assert!(led.drift <= 1e-7, "drift {}", led.drift);
    assert!(led.bound_excess.unwrap() <= 1e-9 * led.terms.last().unwrap().mass * lambda * lambda);
    let g = growth_rate_check(&tr.times(), &n, lambda, 1e-3).unwrap();
    assert!((g.fitted_rate - 2.0 * lambda).abs() < 1e-6 && g.holds);
}

#[test]
fn energy_drift_has_fourth_order() {
    let p = iso();
    let g = grid(32);
    let xi = [2.0, 1.0];
    let op = FrequencyOperator::new(&p, &g, xi).unwrap();
    let st = random_state(&g, xi, 11);
    let drift = |dt: f64| {
        let mut o = IntegrateOptions::new(0.5, dt);
        o.sample_every = 1;
        energy_audit(&op, &integrate(&op, &st, &o).unwrap(), None).drift
    };
    let (a, b) = (drift(4e-3), drift(2e-3));
    assert!(a / b > 12.0, "drift ratio {} ({a} -> {b})", a / b);
}

#[test]
fn random_data_is_compatible_and_variational_bound_holds() {
    let p = iso();
    let g = grid(64);
    let xi = [3.0, 0.0];
    let st = random_state(&g, xi, 5);
    let op = FrequencyOperator::new(&p, &g, xi).unwrap();
    for c in 0..g.n_cells() {
        let d = I * st.eta_h[0][c] * 3.0 + (st.eta3[c + 1] - st.eta3[c]) / g.width(c);
        assert!((st.s[c] + d).norm() < 1e-12);
    }
    let lambda = solve_mode(&assemble_forms(&p, &g, 3.0).unwrap()).unwrap().lambda;
    let tr = integrate(&op, &st, &IntegrateOptions::new(0.5, 1e-3)).unwrap();
    let led = energy_audit(&op, &tr, Some(lambda));
    assert!(led.bound_excess.unwrap() < 0.0);
}

#[test]
fn zero_data_stays_zero() {
    let p = iso();
    let g = grid(64);
    let op = FrequencyOperator::new(&p, &g, [4.0, 1.0]).unwrap();
    let tr = integrate(&op, &LinearState::zeros(&g, [4.0, 1.0]), &IntegrateOptions::new(1.0, 1e-3)).unwrap();
    assert!(tr.states.iter().all(|s| s.max_abs() == 0.0));
}

#[test]
fn time_reversal_recovers_data() {
    let (op, st, _) = eigen(64, [1.0, 2.0]);
    let mut st = st;
    st.add_scaled(0.3, &random_state(op.grid(), op.xi(), 3));
    // |R(iy)|² = 1 − y⁶/72 + …: the round trip error falls like dt⁵
    let o = IntegrateOptions::new(0.5, 2.5e-4);
    let fwd = integrate(&op, &st, &o).unwrap();
    let back = integrate_backward(&op, fwd.states.last().unwrap(), &o).unwrap();
    let end = back.states.last().unwrap();
    assert!(end.t.abs() < 1e-12);
    assert!(max_diff(end, &st) <= 1e-8 * st.max_abs(), "{} vs {}", max_diff(end, &st), st.max_abs());
}

#[test]
fn linearity_of_trajectories() {
    let p = iso();
    let g = grid(32);
    let xi = [1.5, 0.5];
    let op = FrequencyOperator::new(&p, &g, xi).unwrap();
    let (a, b) = (random_state(&g, xi, 1), random_state(&g, xi, 2));
    let mut ab = a.clone();
    ab.scale(2.0);
    ab.add_scaled(-0.5, &b);
    let o = IntegrateOptions::new(0.2, 1e-3);
    let (ta, tb, tab) = (integrate(&op, &a, &o).unwrap(), integrate(&op, &b, &o).unwrap(), integrate(&op, &ab, &o).unwrap());
    let mut comb = ta.states.last().unwrap().clone();
    comb.scale(2.0);
    comb.add_scaled(-0.5, tb.states.last().unwrap());
    assert!(max_diff(&comb, tab.states.last().unwrap()) <= 1e-12 * comb.max_abs());
}

#[test]
fn band_projection() {
    assert_eq!(band_cutoff(0.3), 1.0);
    assert_eq!(band_cutoff(0.5), 1.0);
    assert_eq!(band_cutoff(1.0), 0.0);
    let mut prev = 1.0;
    for i in 0..=100 {
        let v = band_cutoff(0.5 + 0.005 * i as f64);
        assert!(v <= prev && (0.0..=1.0).contains(&v));
        prev = v;
    }
    let p = iso();
    let g = grid(32);
    let states: Vec<LinearState> = [[1.0, 0.0], [0.0, 5.0], [6.0, 8.0]].iter().map(|&x| random_state(&g, x, 9)).collect();
    let proj = project_band(&states, 8.0).unwrap();
    assert_eq!(proj[0], states[0]);
    assert!(proj[2].max_abs() == 0.0);
    assert!(proj[1].max_abs() < states[1].max_abs() && proj[1].max_abs() > 0.0);
    assert!(project_band(&states, 0.0).is_err());
    // projection commutes with evolution
    let op = FrequencyOperator::new(&p, &g, [0.0, 5.0]).unwrap();
    let o = IntegrateOptions::new(0.1, 1e-3);
    let a = integrate(&op, &proj[1], &o).unwrap().states.pop().unwrap();
    let b = project_band(&[integrate(&op, &states[1], &o).unwrap().states.pop().unwrap()], 8.0).unwrap().remove(0);
    assert!(max_diff(&a, &b) <= 1e-14 * a.max_abs());
}

#[test]
fn superposed_ledger_is_sum_of_parts() {
    let p = iso();
    let g = grid(64);
    let modes = [
        ModeSpec { xi: [2.0, 0.0], init: InitKind::Eigen, seed: 0 },
        ModeSpec { xi: [0.0, 5.0], init: InitKind::Eigen, seed: 0 },
    ];
    let o = IntegrateOptions::new(0.2, 1e-3);
    let both = evolve_modes(&p, &g, &modes, &o, None, None).unwrap();
    let one = evolve_modes(&p, &g, &modes[..1], &o, None, None).unwrap();
    let two = evolve_modes(&p, &g, &modes[1..], &o, None, None).unwrap();
    for i in 0..both.times.len() {
        let s = one.ledger.energy[i] + two.ledger.energy[i];
        assert!((both.ledger.energy[i] - s).abs() <= 1e-12 * (1.0 + s.abs()));
    }
}

#[test]
fn mixed_band_limited_growth_is_capped() {
    let p = iso();
    let g = grid(64);
    let r = 8.0;
    let modes: Vec<ModeSpec> = [[1.0, 2.0], [3.0, -2.0], [-4.0, 1.0], [0.5, 5.5], [2.0, 2.0]]
        .iter()
        .enumerate()
        .map(|(i, &xi)| ModeSpec { xi, init: InitKind::Random, seed: i as u64 })
        .collect();
    let extra: Vec<f64> = modes.iter().map(|m| m.xi[0].hypot(m.xi[1])).collect();
    let cap = lambda_cap(&p, &g, r, 16, &extra).unwrap();
    assert!(cap <= (p.g() * r).sqrt());
    let run = evolve_modes(&p, &g, &modes, &IntegrateOptions::new(2.0, 1e-3), Some(r), Some(cap)).unwrap();
    let gc = run.growth.unwrap();
    assert!(gc.holds, "{gc:?}");
    assert!(run.ledger.bound_excess.unwrap() <= 0.0);
    assert!(run.ledger.drift < 1e-5, "drift {}", run.ledger.drift);
}

#[test]
fn stable_configuration_does_not_grow() {
    let cfg = TwoFluidConfig::new(
        1.0,
        1.0,
        1.0,
        1.0,
        crate::barotropic::BarotropicLaw::isothermal(1.0).unwrap(),
        crate::barotropic::BarotropicLaw::isothermal(2.0).unwrap(),
    )
    .unwrap();
    let p = build_profile(&cfg).unwrap();
    let g = grid(32);
    let modes = [ModeSpec { xi: [3.0, 0.0], init: InitKind::Random, seed: 4 }];
    let run = evolve_modes(&p, &g, &modes, &IntegrateOptions::new(2.0, 1e-3), None, Some(0.0)).unwrap();
    assert!(run.growth.unwrap().fitted_rate <= 1e-3 + 0.5, "{:?}", run.growth);
    let e = &run.ledger;
    assert!(e.energy.iter().all(|&v| v >= 0.0));
}

#[test]
fn preflight_rejects_large_steps() {
    let p = iso();
    let g = grid(128);
    let op = FrequencyOperator::new(&p, &g, [1.0, 0.0]).unwrap();
    let rho = preflight(&op, 1e-4).unwrap();
    assert!(rho > 100.0);
    assert!(matches!(preflight(&op, 1.0), Err(Error::Integration(_))));
    let st = random_state(&g, [1.0, 0.0], 1);
    assert!(integrate(&op, &st, &IntegrateOptions::new(1.0, 0.5)).is_err());
    assert!(integrate(&op, &st, &IntegrateOptions::new(1.0, 0.3)).is_err());
}
