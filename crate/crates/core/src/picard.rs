//! Picard iteration for the linearised system with frozen coefficients.
//!
//! Iterate `n + 1` solves
//!
//! ```text
//! ∂t ρ' + ∇·(ρ' uⁿ) = ν_ρ Δρ' − ∇·(ρ' ∇cⁿ)
//! ∂t c' + ∇·(c' uⁿ) = ν_c Δc' − c' ρⁿ
//! ∂t ω' + ∇·(ω' uⁿ) = ∇⊥ρⁿ·∇φ + ν_u Δω'
//! ```
//!
//! on a fixed time mesh, with the previous iterate interpolated linearly in
//! time at the stage abscissae. Iterate 0 is the initial data held constant.

use std::fmt;

use crate::error::{KseError, Result};
use crate::model::{Model, Params, SpectralState, State, TermInputs};
use crate::spectral::{self, SpectralField};
use crate::timestepper::{BlowUpKind, BlowUpReport, LawsonRk3, Stepper};

#[derive(Clone, Debug, PartialEq)]
pub struct PicardControl {
    /// Length of the time window.
    pub t_end: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardControl {
    fn default() -> Self {
        PicardControl {
            t_end: 0.1,
            dt: 1e-3,
            tol: 1e-10,
            max_iter: 30,
        }
    }
}

impl PicardControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(KseError::param("picard.t_end", "must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(KseError::param("picard.dt", "need 0 < dt <= t_end"));
        }
        if !(self.tol > 0.0) {
            return Err(KseError::param("picard.tol", "must be > 0"));
        }
        if self.max_iter < 2 {
            return Err(KseError::param("picard.max_iter", "must be >= 2"));
        }
        Ok(())
    }

    /// Number of mesh intervals; `t_end` is rounded to a whole number of steps.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// States on the uniform mesh `t0 + k·dt`, `k = 0..=steps`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dt: f64,
    states: Vec<SpectralState>,
}

impl Trajectory {
    /// Initial data held constant over `steps` intervals.
    pub fn constant(state0: &State, dt: f64, steps: usize) -> Self {
        let mut s0 = state0.to_spectral();
        s0.fields[2].set_mean(0.0);
        let states = (0..=steps)
            .map(|k| SpectralState {
                t: state0.t + k as f64 * dt,
                fields: s0.fields.clone(),
            })
            .collect();
        Trajectory { dt, states }
    }

    /// Trajectory from states at `states[0].t + k·dt`, all on one grid.
    pub fn from_states(dt: f64, states: &[State]) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || states.len() < 2 {
            return Err(KseError::param("dt", "need dt > 0 and at least two states"));
        }
        let grid = states[0].grid();
        if states.iter().any(|s| !s.grid().same_as(grid)) {
            return Err(KseError::GridMismatch("trajectory states on different grids".into()));
        }
        let t0 = states[0].t;
        let tol = 1e-9 * dt;
        let mut out = Vec::with_capacity(states.len());
        for (k, s) in states.iter().enumerate() {
            if (s.t - (t0 + k as f64 * dt)).abs() > tol {
                return Err(KseError::param("dt", "states are not on a uniform mesh"));
            }
            let mut sp = s.to_spectral();
            sp.fields[2].set_mean(0.0);
            out.push(sp);
        }
        Ok(Trajectory { dt, states: out })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of mesh points.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.states[k].t
    }

    pub fn state(&self, k: usize) -> State {
        self.states[k].to_physical()
    }

    pub fn last(&self) -> State {
        self.states.last().expect("non-empty trajectory").to_physical()
    }

    /// `sup_k (‖Δρ‖₂ + ‖Δc‖₂ + ‖Δω‖₂)` over the common mesh.
    pub fn distance(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() || !self.states[0].grid().same_as(other.states[0].grid()) {
            return Err(KseError::GridMismatch("trajectories on different meshes".into()));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.l2_distance(b))
            .fold(0.0, f64::max))
    }

    /// Previous-iterate coefficients at `t_k + θ·dt`.
    fn interpolate(&self, k: usize, theta: f64) -> SpectralState {
        let a = &self.states[k];
        if theta == 0.0 {
            return a.clone();
        }
        let b = &self.states[k + 1];
        SpectralState {
            t: a.t + theta * self.dt,
            fields: std::array::from_fn(|f| {
                let mut out = a.fields[f].scale(1.0 - theta);
                out.axpy(theta, &b.fields[f]);
                out
            }),
        }
    }
}

/// Linear right-hand side with frozen `(ρⁿ, cⁿ, ωⁿ)`.
fn frozen_terms(model: &Model, old: &SpectralState, new: &SpectralState) -> [SpectralField; 3] {
    if !model.params().couplings {
        let z = SpectralField::zeros(model.grid());
        return [z.clone(), z.clone(), z];
    }
    let (u1, u2) = model.velocity_spectral(old.omega());
    let [cx, cy] = spectral::gradient(old.c());
    let inv = spectral::inverse;
    let (u1, u2, cx, cy) = (inv(&u1), inv(&u2), inv(&cx), inv(&cy));
    let rho_old = inv(old.rho());
    let rho_new = inv(new.rho());
    let c_new = inv(new.c());
    let w_new = inv(new.omega());
    model.coupled_terms(&TermInputs {
        u: [&u1, &u2],
        grad_c: [&cx, &cy],
        rho_new: &rho_new,
        c_new: &c_new,
        omega_new: &w_new,
        rho_old: &rho_old,
        rho_old_hat: old.rho(),
    })
}

fn blow_up(t: f64) -> KseError {
    KseError::BlowUp(BlowUpReport {
        t,
        field: "picard iterate".into(),
        tail_fraction: f64::NAN,
        reason: BlowUpKind::NonFinite,
    })
}

/// Solves the linearised system over the mesh of `prev`, starting from
/// `state0`.
pub fn linear_advance(prev: &Trajectory, state0: &State, params: &Params) -> Result<Trajectory> {
    let grid = state0.grid();
    if !prev.states[0].grid().same_as(grid) {
        return Err(KseError::GridMismatch("trajectory and initial data grids differ".into()));
    }
    let model = Model::new(grid, params)?;
    let mut rk = LawsonRk3::new(grid, params.diffusivities());
    let dt = prev.dt;
    let mut s = state0.to_spectral();
    s.fields[2].set_mean(0.0);
    let mut states = Vec::with_capacity(prev.len());
    states.push(s.clone());
    for k in 0..prev.len() - 1 {
        let t_k = s.t;
        let mut next = rk.step(&s, dt, |tau, st| {
            let theta = ((tau - t_k) / dt).clamp(0.0, 1.0);
            frozen_terms(&model, &prev.interpolate(k, theta), st)
        });
        next.t = prev.time(k + 1);
        next.fields[2].set_mean(0.0);
        if !next.is_finite() {
            return Err(blow_up(next.t));
        }
        states.push(next.clone());
        s = next;
    }
    Ok(Trajectory { dt, states })
}

#[derive(Clone, Debug)]
pub struct PicardIterate {
    pub index: usize,
    pub trajectory: Trajectory,
    /// Distance to iterate `index − 1`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub last: PicardIterate,
    /// `residuals[i]` belongs to iterate `i + 1`.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub control: PicardControl,
}

impl PicardOutcome {
    /// `r_n = resid_{n+1} / resid_n` for `n ≥ 2`, as `(n, r_n)`.
    pub fn ratios(&self) -> Vec<(usize, f64)> {
        self.residuals
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i + 1, if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }))
            .filter(|(n, _)| *n >= 2)
            .collect()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios().iter().map(|r| r.1).reduce(f64::max)
    }

    /// Every recorded ratio below one.
    pub fn contracted(&self) -> bool {
        self.ratios().iter().all(|r| r.1 < 1.0)
    }

    pub fn fixed_point(&self) -> &Trajectory {
        &self.last.trajectory
    }
}

impl fmt::Display for PicardOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.residuals.last().copied().unwrap_or(0.0);
        write!(
            f,
            "{} iterations, final residual {:.3e}",
            self.residuals.len(),
            last
        )?;
        if let Some(r) = self.max_ratio() {
            write!(f, ", max ratio {r:.3e}")?;
        }
        if !self.contracted() {
            let (n, r) = self
                .ratios()
                .into_iter()
                .find(|r| r.1 >= 1.0)
                .expect("a non-contracting ratio");
            write!(
                f,
                "; no contraction: r_{n} = {r:.3e} >= 1 on T = {}. Try a shorter window.",
                self.control.t_end
            )?;
        } else if !self.converged {
            write!(f, "; tolerance {:.1e} not reached", self.control.tol)?;
        }
        Ok(())
    }
}

/// Iterates [`linear_advance`] from the constant extension of `state0`
/// until the residual drops below `control.tol` or `max_iter` is reached.
pub fn picard_run(state0: &State, params: &Params, control: &PicardControl) -> Result<PicardOutcome> {
    control.validate()?;
    params.validate()?;
    let mut prev = Trajectory::constant(state0, control.dt, control.steps());
    let mut residuals = Vec::new();
    for index in 1..=control.max_iter {
        let next = linear_advance(&prev, state0, params)?;
        let residual = next.distance(&prev)?;
        if !residual.is_finite() {
            return Err(blow_up(next.time(next.len() - 1)));
        }
        residuals.push(residual);
        let done = residual < control.tol;
        let stop = done || index == control.max_iter;
        prev = next;
        if stop {
            return Ok(PicardOutcome {
                last: PicardIterate {
                    index,
                    trajectory: prev,
                    residual,
                },
                residuals,
                converged: done,
                control: control.clone(),
            });
        }
    }
    unreachable!("max_iter >= 2")
}

/// Largest L² gap between one nonlinear step from each mesh point and the
/// next mesh point, `max_k ‖S(X_k) − X_{k+1}‖`. For a converged fixed point
/// this is `O(tol + dt³)`.
pub fn fixed_point_defect(traj: &Trajectory, params: &Params) -> Result<f64> {
    let model = Model::new(traj.states[0].grid(), params)?;
    let mut stepper = Stepper::new(model);
    let mut worst: f64 = 0.0;
    for k in 0..traj.len() - 1 {
        let mut next = stepper.step(&traj.states[k], traj.dt);
        next.t = traj.time(k + 1);
        worst = worst.max(next.l2_distance(&traj.states[k + 1]));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ScalarField;
    use crate::Grid;

    #[test]
    fn zero_data_converges_at_once() {
        let grid = Grid::periodic(16).unwrap();
        let s = State::zeros(&grid);
        let out = picard_run(&s, &Params::default(), &PicardControl::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.residuals, vec![0.0]);
        assert_eq!(out.last.index, 1);
    }

    #[test]
    fn frozen_zero_coefficients_give_heat_flow() {
        let grid = Grid::periodic(16).unwrap();
        let f = ScalarField::from_fn(&grid, |x1, x2| (x1 + 2.0 * x2).cos());
        let z = ScalarField::zeros(&grid);
        let prev = Trajectory::constant(&State::zeros(&grid), 0.01, 20);
        let s0 = State::new(0.0, f.clone(), f.clone(), z).unwrap();
        let params = Params::default();
        let out = linear_advance(&prev, &s0, &params).unwrap();
        let last = out.last();
        let t = out.time(out.len() - 1);
        assert!((t - 0.2).abs() < 1e-15);
        let exact = f.scale((-5.0 * t).exp());
        assert!(last.rho.sub(&exact).max_abs() < 1e-10);
        assert!(last.c.sub(&exact).max_abs() < 1e-10);
        assert!(last.omega.max_abs() < 1e-14);
    }

    #[test]
    fn control_validation() {
        let c = PicardControl {
            max_iter: 1,
            ..PicardControl::default()
        };
        assert!(c.validate().is_err());
        assert_eq!(PicardControl::default().steps(), 100);
    }
}
