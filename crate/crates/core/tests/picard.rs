use kse::initial::{build_initial_state, InitialSpec, Preset};
use kse::model::{Params, State};
use kse::picard::{fixed_point_defect, linear_advance, picard_run, PicardControl, Trajectory};
use kse::run::{direct_solution, state_l2_difference};
use kse::spectral::Grid;

fn random_state(grid: &Grid, seed: u64, amplitude_c: f64, omega: f64) -> State {
    let spec = InitialSpec {
        preset: Preset::Random,
        amplitude_c,
        rho_amplitude: 0.5,
        omega_amplitude: omega,
        seed,
        ..InitialSpec::default()
    };
    build_initial_state(grid, &spec).unwrap()
}

/// Frozen coefficients `a + t·b` sampled on the mesh `k·dt`.
fn linear_in_time(a: &State, b: &State, dt: f64, steps: usize) -> Trajectory {
    let states: Vec<State> = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            State::new(
                t,
                a.rho.add(&b.rho.scale(t)),
                a.c.add(&b.c.scale(t)),
                a.omega.add(&b.omega.scale(t)),
            )
            .unwrap()
        })
        .collect();
    Trajectory::from_states(dt, &states).unwrap()
}

#[test]
fn linear_solver_self_converges_at_third_order() {
    let grid = Grid::periodic(32).unwrap();
    let a = random_state(&grid, 1, 1.0, 1.0);
    let b = random_state(&grid, 2, 1.0, 1.0);
    let data = random_state(&grid, 3, 0.5, 0.5);
    let t_end = 0.4;
    let finals: Vec<State> = [20usize, 40, 80]
        .iter()
        .map(|&steps| {
            let prev = linear_in_time(&a, &b, t_end / steps as f64, steps);
            let next = linear_advance(&prev, &data, &Params::default()).unwrap();
            assert_eq!(next.len(), steps + 1);
            next.last()
        })
        .collect();
    let e1 = state_l2_difference(&finals[0], &finals[1]);
    let e2 = state_l2_difference(&finals[1], &finals[2]);
    let ratio = e1 / e2;
    assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}, errors {e1:e} {e2:e}");
}

#[test]
fn mass_conserved_along_every_iterate() {
    let grid = Grid::periodic(32).unwrap();
    let s0 = random_state(&grid, 4, 0.5, 1.0);
    let m0 = s0.rho.mean();
    let p = Params::default();
    let mut prev = Trajectory::constant(&s0, 0.01, 20);
    for _ in 0..4 {
        let next = linear_advance(&prev, &s0, &p).unwrap();
        for k in 0..next.len() {
            let m = next.state(k).rho.mean();
            assert!((m - m0).abs() / m0 < 1e-13);
        }
        prev = next;
    }
}

#[test]
fn small_data_contracts_and_matches_direct_solver() {
    let grid = Grid::periodic(32).unwrap();
    let s0 = build_initial_state(&grid, &InitialSpec::default()).unwrap();
    let p = Params::default();
    let control = PicardControl::default();
    let out = picard_run(&s0, &p, &control).unwrap();
    assert!(out.converged && out.contracted());
    assert!(out.max_ratio().unwrap() <= 0.5);
    assert!(out.residuals.iter().all(|r| r.is_finite() && *r >= 0.0));
    let direct = direct_solution(&s0, &p, &control).unwrap();
    assert!(state_l2_difference(&out.fixed_point().last(), &direct) < 1e-6);
    let defect = fixed_point_defect(out.fixed_point(), &p).unwrap();
    assert!(defect < 1e-8, "{defect:e}");
}

#[test]
fn large_data_long_window_fails_to_contract() {
    let grid = Grid::periodic(32).unwrap();
    let spec = InitialSpec {
        amplitude_c: 5.0,
        omega_amplitude: 20.0,
        ..InitialSpec::default()
    };
    let s0 = build_initial_state(&grid, &spec).unwrap();
    let control = PicardControl {
        t_end: 1.0,
        dt: 1e-2,
        max_iter: 8,
        ..PicardControl::default()
    };
    let out = picard_run(&s0, &Params::default(), &control).unwrap();
    assert!(!out.contracted(), "{out}");
    assert!(out.to_string().contains("Try a shorter window"));

    // The same data on a short window contracts.
    let short = PicardControl {
        t_end: 0.05,
        dt: 1e-3,
        max_iter: 8,
        ..PicardControl::default()
    };
    let out = picard_run(&s0, &Params::default(), &short).unwrap();
    assert!(out.contracted(), "{out}");
}

#[test]
fn invalid_controls_rejected() {
    let grid = Grid::periodic(16).unwrap();
    let s0 = State::zeros(&grid);
    for control in [
        PicardControl { max_iter: 1, ..PicardControl::default() },
        PicardControl { tol: 0.0, ..PicardControl::default() },
        PicardControl { t_end: -1.0, ..PicardControl::default() },
    ] {
        assert_eq!(picard_run(&s0, &Params::default(), &control).unwrap_err().exit_code(), 2);
    }
}
