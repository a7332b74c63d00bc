//! Integrating-factor Runge–Kutta time stepping.
//!
//! Diffusion is integrated exactly per Fourier mode: each field is carried
//! in the variable `e^{ν|k|²t} û`, and the remaining nonlinear terms are
//! advanced with Heun's three-stage third-order scheme (Lawson form). Stage
//! abscissae are non-decreasing, so only decaying exponentials appear.

use std::fmt;

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::model::{Model, Params, SpectralState, State};
use crate::spectral::{self, lq_norm_magnitude, Grid, SpectralField};

/// Energy fraction beyond the two-thirds band that triggers the
/// under-resolution report.
pub const TAIL_THRESHOLD: f64 = 1e-4;

/// Lower bound on the speed used by the CFL estimate.
pub const SPEED_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Diagnostics cadence; observers fire at every multiple of it.
    pub sample_interval: f64,
    /// Bypass the CFL estimate with a constant step.
    pub fixed_dt: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.4,
            dt_max: 1e-2,
            dt_min: 1e-8,
            t_end: 1.0,
            sample_interval: 0.05,
            fixed_dt: None,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(KseError::param("cfl", "must lie in (0, 1]"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(KseError::param("dt_min", "need 0 < dt_min <= dt_max"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(KseError::param("t_end", "must be finite and >= 0"));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(KseError::param("sample_interval", "must be > 0"));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(KseError::param("dt", "fixed step must be > 0"));
            }
        }
        Ok(())
    }
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowUpReport {
    pub t: f64,
    pub field: String,
    pub tail_fraction: f64,
    pub reason: BlowUpKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowUpKind {
    NonFinite,
    UnderResolved,
}

impl fmt::Display for BlowUpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            BlowUpKind::NonFinite => write!(
                f,
                "blow-up at t = {:.6}: non-finite values in {} (tail fraction {:.3e})",
                self.t, self.field, self.tail_fraction
            ),
            BlowUpKind::UnderResolved => write!(
                f,
                "under-resolved at t = {:.6}: spectral tail fraction {:.3e} in {} exceeds {:.0e}",
                self.t, self.tail_fraction, self.field, TAIL_THRESHOLD
            ),
        }
    }
}

/// Integrating factors `exp(−ν|k|² h/3)` and their square and cube, per
/// field, cached for the last step size.
struct Factors {
    h: f64,
    third: [Vec<f64>; 3],
    two_thirds: [Vec<f64>; 3],
    full: [Vec<f64>; 3],
}

impl Factors {
    fn new(grid: &Grid, nu: [f64; 3], h: f64) -> Self {
        let n = grid.n();
        let ksq: Vec<f64> = (0..grid.spectral_rows())
            .flat_map(|j| {
                let k2 = grid.k2(j);
                grid.k1_all().iter().map(move |k1| k1 * k1 + k2 * k2)
            })
            .collect();
        debug_assert_eq!(ksq.len(), grid.spectral_rows() * n);
        let third = nu.map(|nu| ksq.iter().map(|k| (-nu * k * h / 3.0).exp()).collect::<Vec<_>>());
        let two_thirds = third.clone().map(|e| e.iter().map(|v| v * v).collect());
        let full = third.clone().map(|e| e.iter().map(|v| v * v * v).collect());
        Factors {
            h,
            third,
            two_thirds,
            full,
        }
    }
}

fn scaled(f: &SpectralField, factor: &[f64]) -> SpectralField {
    let coeffs: Vec<Complex64> = f.coeffs().iter().zip(factor).map(|(c, e)| c * e).collect();
    SpectralField::from_coeffs(f.grid(), coeffs).expect("matching layout")
}

/// `a * fa + s * b * fb`, mode by mode.
fn combine(a: &SpectralField, fa: &[f64], s: f64, b: &SpectralField, fb: &[f64]) -> SpectralField {
    let coeffs: Vec<Complex64> = a
        .coeffs()
        .iter()
        .zip(fa)
        .zip(b.coeffs().iter().zip(fb))
        .map(|((x, ea), (y, eb))| x * ea + y * (s * eb))
        .collect();
    SpectralField::from_coeffs(a.grid(), coeffs).expect("matching layout")
}

/// Integrating-factor RK3 stepper over coefficient states. The nonlinear
/// operator receives the stage time and stage state.
pub(crate) struct LawsonRk3 {
    grid: Grid,
    nu: [f64; 3],
    factors: Option<Factors>,
}

impl LawsonRk3 {
    pub fn new(grid: &Grid, nu: [f64; 3]) -> Self {
        LawsonRk3 {
            grid: grid.clone(),
            nu,
            factors: None,
        }
    }

    pub fn step<F>(&mut self, s: &SpectralState, h: f64, mut nonlinear: F) -> SpectralState
    where
        F: FnMut(f64, &SpectralState) -> [SpectralField; 3],
    {
        if self.factors.as_ref().map(|f| f.h) != Some(h) {
            self.factors = Some(Factors::new(&self.grid, self.nu, h));
        }
        let e = self.factors.as_ref().unwrap();
        let t = s.t;

        let k1 = nonlinear(t, s);
        let u2 = SpectralState {
            t: t + h / 3.0,
            fields: std::array::from_fn(|f| {
                combine(&s.fields[f], &e.third[f], h / 3.0, &k1[f], &e.third[f])
            }),
        };
        let k2 = nonlinear(u2.t, &u2);
        let u3 = SpectralState {
            t: t + 2.0 * h / 3.0,
            fields: std::array::from_fn(|f| {
                combine(&s.fields[f], &e.two_thirds[f], 2.0 * h / 3.0, &k2[f], &e.third[f])
            }),
        };
        let k3 = nonlinear(u3.t, &u3);
        let fields = std::array::from_fn(|f| {
            let mut out = combine(&s.fields[f], &e.full[f], h / 4.0, &k1[f], &e.full[f]);
            out.axpy(0.75 * h, &scaled(&k3[f], &e.third[f]));
            out
        });
        SpectralState { t: t + h, fields }
    }
}

/// Advances the coupled system by `dt` in coefficient space.
pub(crate) struct Stepper {
    model: Model,
    rk: LawsonRk3,
}

impl Stepper {
    pub fn new(model: Model) -> Self {
        let rk = LawsonRk3::new(model.grid(), model.params().diffusivities());
        Stepper { model, rk }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn step(&mut self, s: &SpectralState, dt: f64) -> SpectralState {
        let model = &self.model;
        let mut next = self.rk.step(s, dt, |_, st| model.nonlinear(st));
        next.fields[2].set_mean(0.0);
        if model.params().clip_negative {
            for f in 0..2 {
                let clipped = spectral::inverse(&next.fields[f]).map(|v| v.max(0.0));
                next.fields[f] = spectral::forward(&clipped);
            }
        }
        next
    }
}

/// One step of size `dt`.
pub fn step(state: &State, params: &Params, dt: f64) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KseError::param("dt", "must be > 0"));
    }
    let model = Model::new(state.grid(), params)?;
    let mut stepper = Stepper::new(model);
    let next = stepper.step(&state.to_spectral(), dt);
    check_finite(&next).map_err(KseError::BlowUp)?;
    Ok(next.to_physical())
}

/// Largest advective speed entering the CFL estimate:
/// `max(‖u‖∞, ‖∇c‖∞)`.
pub(crate) fn max_speed(model: &Model, s: &SpectralState) -> f64 {
    let (u1, u2) = model.velocity_spectral(s.omega());
    let [cx, cy] = spectral::gradient(s.c());
    let u = [spectral::inverse(&u1), spectral::inverse(&u2)];
    let gc = [spectral::inverse(&cx), spectral::inverse(&cy)];
    let inf = f64::INFINITY;
    lq_norm_magnitude(&[&u[0], &u[1]], inf).max(lq_norm_magnitude(&[&gc[0], &gc[1]], inf))
}

fn dt_from_speed(speed: f64, dx: f64, control: &StepControl) -> f64 {
    let dt = control.cfl * dx / speed.max(SPEED_FLOOR);
    dt.min(control.dt_max).max(control.dt_min)
}

/// CFL step `min(dt_max, cfl·dx / max(‖u‖∞, ‖∇c‖∞, floor))`, clamped to
/// `dt_min` from below.
pub fn cfl_dt(state: &State, params: &Params, control: &StepControl) -> Result<f64> {
    let model = Model::new(state.grid(), params)?;
    let speed = max_speed(&model, &state.to_spectral());
    Ok(dt_from_speed(speed, state.grid().dx(), control))
}

/// Spectral tail fraction of the combined (ρ, c, ω) energy.
pub(crate) fn tail_fraction_spectral(s: &SpectralState) -> f64 {
    let (mut tail, mut total) = (0.0, 0.0);
    for f in &s.fields {
        let (t, e) = spectral::tail_energy(f);
        tail += t;
        total += e;
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

fn check_finite(s: &SpectralState) -> std::result::Result<(), BlowUpReport> {
    const NAMES: [&str; 3] = ["rho", "c", "omega"];
    for (f, name) in s.fields.iter().zip(NAMES) {
        if !f.is_finite() {
            return Err(BlowUpReport {
                t: s.t,
                field: name.to_string(),
                tail_fraction: f64::NAN,
                reason: BlowUpKind::NonFinite,
            });
        }
    }
    Ok(())
}

fn check_tail(s: &SpectralState) -> std::result::Result<f64, BlowUpReport> {
    const NAMES: [&str; 3] = ["rho", "c", "omega"];
    let frac = tail_fraction_spectral(s);
    if frac > TAIL_THRESHOLD {
        let worst = s
            .fields
            .iter()
            .zip(NAMES)
            .map(|(f, name)| {
                let (t, e) = spectral::tail_energy(f);
                (if e > 0.0 { t / e } else { 0.0 }, name)
            })
            .fold((0.0, "rho"), |a, b| if b.0 > a.0 { b } else { a });
        return Err(BlowUpReport {
            t: s.t,
            field: worst.1.to_string(),
            tail_fraction: frac,
            reason: BlowUpKind::UnderResolved,
        });
    }
    Ok(frac)
}

/// Receives the state at every sampling time (including `t = 0` and
/// `t_end`). Returning an error aborts the run.
pub trait Observer {
    fn observe(&mut self, state: &State, dt: f64) -> Result<()>;
}

impl<F: FnMut(&State, f64) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &State, dt: f64) -> Result<()> {
        self(state, dt)
    }
}

/// Integrates to `control.t_end`, landing exactly on every sample time.
pub fn integrate(
    state0: &State,
    params: &Params,
    control: &StepControl,
    observers: &mut [&mut dyn Observer],
) -> Result<State> {
    control.validate()?;
    let model = Model::new(state0.grid(), params)?;
    let mut stepper = Stepper::new(model);
    let mut s = state0.to_spectral();
    s.fields[2].set_mean(0.0);

    for obs in observers.iter_mut() {
        obs.observe(state0, 0.0)?;
    }
    if control.t_end <= state0.t {
        return Ok(state0.clone());
    }

    let dx = state0.grid().dx();
    let mut sample_index = (state0.t / control.sample_interval).floor() as u64 + 1;
    let eps = 1e-12 * control.t_end.max(1.0);
    loop {
        let next_sample = (sample_index as f64 * control.sample_interval).min(control.t_end);
        let dt_nominal = match control.fixed_dt {
            Some(dt) => dt,
            None => dt_from_speed(max_speed(stepper.model(), &s), dx, control),
        };
        let remaining = next_sample - s.t;
        let (dt, lands) = if dt_nominal >= remaining - eps {
            (remaining, true)
        } else {
            (dt_nominal, false)
        };
        let mut next = stepper.step(&s, dt);
        check_finite(&next).map_err(KseError::BlowUp)?;
        if lands {
            next.t = next_sample;
        }
        s = next;

        if lands {
            check_tail(&s).map_err(KseError::BlowUp)?;
            let physical = s.to_physical();
            for obs in observers.iter_mut() {
                obs.observe(&physical, dt)?;
            }
            if s.t >= control.t_end {
                return Ok(physical);
            }
            sample_index += 1;
        }
    }
}
