use std::f64::consts::PI;

use kse::initial::{build_initial_state, InitialSpec, Preset};
use kse::model::{Params, State};
use kse::run::{fixed_step_solve, observed_order, state_l2_difference};
use kse::spectral::{Grid, ScalarField};
use kse::timestepper::{cfl_dt, integrate, step, StepControl};
use kse::KseError;

fn heat_params() -> Params {
    Params {
        nu_rho: 0.8,
        nu_c: 1.0,
        nu_u: 0.25,
        couplings: false,
        ..Params::default()
    }
}

/// Sum of cosine modes; returns the field and its exact heat solution at `t`.
fn modes(grid: &Grid) -> Vec<(f64, f64, f64)> {
    let kappa = 2.0 * PI / grid.length();
    vec![(kappa, 0.0, 1.0), (kappa * 2.0, kappa * 3.0, 0.5), (kappa * 5.0, -kappa, 0.2)]
}

fn heat_field(grid: &Grid, nu: f64, t: f64) -> ScalarField {
    let m = modes(grid);
    ScalarField::from_fn(grid, |x1, x2| {
        m.iter()
            .map(|&(k1, k2, a)| a * (-nu * (k1 * k1 + k2 * k2) * t).exp() * (k1 * x1 + k2 * x2).cos())
            .sum()
    })
}

#[test]
fn heat_run_matches_mode_decay() {
    let grid = Grid::new(32, 4.0).unwrap();
    let p = heat_params();
    let f = heat_field(&grid, 0.0, 0.0);
    let s0 = State::new(0.0, f.map(|v| v + 2.0), f.clone(), f.clone()).unwrap();
    let control = StepControl {
        t_end: 1.0,
        sample_interval: 0.1,
        ..StepControl::default()
    };
    let end = integrate(&s0, &p, &control, &mut []).unwrap();
    assert_eq!(end.t, 1.0);
    let [nr, nc, nw] = p.diffusivities();
    assert!(end.rho.sub(&heat_field(&grid, nr, 1.0).map(|v| v + 2.0)).max_abs() < 1e-10);
    assert!(end.c.sub(&heat_field(&grid, nc, 1.0)).max_abs() < 1e-10);
    assert!(end.omega.sub(&heat_field(&grid, nw, 1.0)).max_abs() < 1e-10);
}

#[test]
fn zero_end_time_returns_initial_state() {
    let grid = Grid::periodic(16).unwrap();
    let s0 = build_initial_state(&grid, &InitialSpec::default()).unwrap();
    let control = StepControl {
        t_end: 0.0,
        ..StepControl::default()
    };
    let end = integrate(&s0, &Params::default(), &control, &mut []).unwrap();
    assert_eq!(end, s0);
}

#[test]
fn single_step_conserves_mass() {
    let grid = Grid::periodic(64).unwrap();
    let spec = InitialSpec {
        preset: Preset::Random,
        amplitude_c: 0.5,
        rho_amplitude: 0.5,
        omega_amplitude: 2.0,
        seed: 3,
        ..InitialSpec::default()
    };
    let s0 = build_initial_state(&grid, &spec).unwrap();
    let s1 = step(&s0, &Params::default(), 5e-3).unwrap();
    let m0 = s0.rho.mean();
    assert!((s1.rho.mean() - m0).abs() / m0 < 1e-14);
    assert!(s1.omega.mean().abs() < 1e-15);
    assert!((s1.t - 5e-3).abs() < 1e-18);
}

#[test]
fn runs_are_bit_identical() {
    let grid = Grid::periodic(32).unwrap();
    let spec = InitialSpec {
        preset: Preset::Random,
        seed: 9,
        ..InitialSpec::default()
    };
    let s0 = build_initial_state(&grid, &spec).unwrap();
    let control = StepControl {
        t_end: 0.3,
        sample_interval: 0.1,
        ..StepControl::default()
    };
    let a = integrate(&s0, &Params::default(), &control, &mut []).unwrap();
    let b = integrate(&s0, &Params::default(), &control, &mut []).unwrap();
    for (x, y) in a.fields().iter().zip(b.fields()) {
        assert!(x.values().iter().zip(y.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn observers_fire_on_sample_times() {
    let grid = Grid::periodic(16).unwrap();
    let s0 = build_initial_state(&grid, &InitialSpec::default()).unwrap();
    let control = StepControl {
        t_end: 0.25,
        sample_interval: 0.1,
        ..StepControl::default()
    };
    let mut times = Vec::new();
    let mut obs = |s: &State, _dt: f64| -> kse::Result<()> {
        times.push(s.t);
        Ok(())
    };
    integrate(&s0, &Params::default(), &control, &mut [&mut obs]).unwrap();
    assert_eq!(times.len(), 4);
    for (t, want) in times.iter().zip([0.0, 0.1, 0.2, 0.25]) {
        assert!((t - want).abs() < 1e-15, "{times:?}");
    }
}

#[test]
fn cfl_examples() {
    let grid = Grid::periodic(256).unwrap();
    let control = StepControl {
        cfl: 0.4,
        dt_max: 1.0,
        ..StepControl::default()
    };
    let zero = ScalarField::zeros(&grid);
    let rest = State::new(0.0, ScalarField::constant(&grid, 1.0), zero.clone(), zero.clone()).unwrap();
    assert_eq!(cfl_dt(&rest, &Params::default(), &control).unwrap(), 1.0);

    // ω = cos x1 gives u = (0, sin x1) with unit maximum speed.
    let shear = |a: f64| {
        State::new(
            0.0,
            ScalarField::constant(&grid, 1.0),
            zero.clone(),
            ScalarField::from_fn(&grid, move |x1, _| a * x1.cos()),
        )
        .unwrap()
    };
    let dt1 = cfl_dt(&shear(1.0), &Params::default(), &control).unwrap();
    assert!((dt1 - 0.4 * 2.0 * PI / 256.0).abs() < 1e-12);
    assert!((dt1 - 9.8e-3).abs() < 1e-4);
    let dt2 = cfl_dt(&shear(2.0), &Params::default(), &control).unwrap();
    assert!((dt1 / dt2 - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_step_rejected() {
    let grid = Grid::periodic(16).unwrap();
    let s0 = State::zeros(&grid);
    for dt in [0.0, -1.0, f64::NAN] {
        assert!(matches!(step(&s0, &Params::default(), dt), Err(KseError::InvalidParameter { .. })));
    }
    let bad = StepControl {
        cfl: 1.5,
        ..StepControl::default()
    };
    assert!(integrate(&s0, &Params::default(), &bad, &mut []).is_err());
}

#[test]
fn temporal_order_is_third() {
    let grid = Grid::periodic(32).unwrap();
    let spec = InitialSpec {
        amplitude_c: 0.5,
        omega_amplitude: 1.0,
        ..InitialSpec::default()
    };
    let s0 = build_initial_state(&grid, &spec).unwrap();
    let p = Params::default();
    let t = 0.2;
    let sol: Vec<State> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| fixed_step_solve(&s0, &p, dt, t).unwrap())
        .collect();
    let e1 = state_l2_difference(&sol[0], &sol[1]);
    let e2 = state_l2_difference(&sol[1], &sol[2]);
    let order = observed_order(e1, e2, 2.0).unwrap();
    assert!((order - 3.0).abs() < 0.2, "order {order}");
}

#[test]
fn non_finite_growth_is_reported() {
    let grid = Grid::periodic(16).unwrap();
    let spec = InitialSpec {
        preset: Preset::Random,
        amplitude_c: 50.0,
        rho_amplitude: 0.9,
        omega_amplitude: 200.0,
        seed: 1,
        ..InitialSpec::default()
    };
    let s0 = build_initial_state(&grid, &spec).unwrap();
    let control = StepControl {
        t_end: 1.0,
        fixed_dt: Some(0.5),
        ..StepControl::default()
    };
    let err = integrate(&s0, &Params::default(), &control, &mut []).unwrap_err();
    assert!(matches!(err, KseError::BlowUp(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}
