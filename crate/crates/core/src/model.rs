//! Right-hand sides of the chemotaxis–fluid system in vorticity form.
//!
//! The sensitivity is fixed to `χ(c) = 1` and the consumption rate to
//! `k(c) = c`:
//!
//! ```text
//! ∂t ρ + u·∇ρ = ν_ρ Δρ − ∇·(ρ ∇c)
//! ∂t c + u·∇c = ν_c Δc − c ρ
//! ∂t ω + u·∇ω = ∇⊥ρ·∇φ + ν_u Δω,     u = ∇⊥ Δ⁻¹ ω
//! ```
//!
//! Transport and chemotactic fluxes are evaluated in divergence form so the
//! discrete means of the ρ and ω right-hand sides vanish exactly.

use std::f64::consts::PI;

use crate::error::{KseError, Result};
use crate::spectral::{
    self, biot_savart, derivative, divergence, gradient, laplacian, Axis, Grid, ScalarField,
    SpectralField,
};

/// Single cosine mode added to the gravitational potential:
/// `φ' = amplitude · cos(2π (m1 x1 + m2 x2) / L)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiPerturbation {
    pub amplitude: f64,
    pub mode: [i64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub nu_rho: f64,
    pub nu_c: f64,
    /// Zero gives the Euler system, positive values Navier–Stokes.
    pub nu_u: f64,
    /// Constant part of `∇φ`.
    pub gravity: [f64; 2],
    pub phi_perturbation: Option<PhiPerturbation>,
    /// Sobolev index used for the energy `X`.
    pub sobolev_m: u32,
    pub dealias: bool,
    /// Clip negative ρ and c after each step. Off by default: clipping
    /// breaks exact mass conservation.
    pub clip_negative: bool,
    /// When false every nonlinear and coupling term is dropped, leaving
    /// three decoupled heat equations.
    pub couplings: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            nu_rho: 1.0,
            nu_c: 1.0,
            nu_u: 0.0,
            gravity: [0.0, -1.0],
            phi_perturbation: None,
            sobolev_m: 3,
            dealias: true,
            clip_negative: false,
            couplings: true,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.nu_rho) {
            return Err(KseError::param("nu_rho", "must be > 0"));
        }
        if !positive(self.nu_c) {
            return Err(KseError::param("nu_c", "must be > 0"));
        }
        if !(self.nu_u.is_finite() && self.nu_u >= 0.0) {
            return Err(KseError::param("nu_u", "must be >= 0"));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(KseError::param("gravity", "must be finite"));
        }
        if let Some(p) = &self.phi_perturbation {
            if !p.amplitude.is_finite() {
                return Err(KseError::param("phi_amplitude", "must be finite"));
            }
        }
        if self.sobolev_m < 3 {
            return Err(KseError::param("m", "Sobolev index must be >= 3"));
        }
        Ok(())
    }

    /// Diffusivities of (ρ, c, ω).
    pub fn diffusivities(&self) -> [f64; 3] {
        [self.nu_rho, self.nu_c, self.nu_u]
    }
}

/// Cell density, chemical concentration and vorticity at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: ScalarField,
    pub c: ScalarField,
    pub omega: ScalarField,
}

impl State {
    pub fn new(t: f64, rho: ScalarField, c: ScalarField, omega: ScalarField) -> Result<Self> {
        if !(rho.grid() == c.grid() && rho.grid() == omega.grid()) {
            return Err(KseError::GridMismatch("state fields on different grids".into()));
        }
        if !t.is_finite() {
            return Err(KseError::NonFinite { what: "time".into() });
        }
        rho.check_finite("rho")?;
        c.check_finite("c")?;
        omega.check_finite("omega")?;
        Ok(State { t, rho, c, omega })
    }

    pub fn zeros(grid: &Grid) -> Self {
        State {
            t: 0.0,
            rho: ScalarField::zeros(grid),
            c: ScalarField::zeros(grid),
            omega: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn fields(&self) -> [&ScalarField; 3] {
        [&self.rho, &self.c, &self.omega]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    pub(crate) fn to_spectral(&self) -> SpectralState {
        SpectralState {
            t: self.t,
            fields: [
                spectral::forward(&self.rho),
                spectral::forward(&self.c),
                spectral::forward(&self.omega),
            ],
        }
    }
}

/// Coefficient-space counterpart of [`State`], the stepper's working form.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SpectralState {
    pub t: f64,
    /// (ρ, c, ω)
    pub fields: [SpectralField; 3],
}

impl SpectralState {
    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn rho(&self) -> &SpectralField {
        &self.fields[0]
    }

    pub fn c(&self) -> &SpectralField {
        &self.fields[1]
    }

    pub fn omega(&self) -> &SpectralField {
        &self.fields[2]
    }

    pub fn to_physical(&self) -> State {
        State {
            t: self.t,
            rho: spectral::inverse(&self.fields[0]),
            c: spectral::inverse(&self.fields[1]),
            omega: spectral::inverse(&self.fields[2]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.fields.iter().all(|f| f.is_finite())
    }

    /// Sum of the L² norms of the three field differences.
    pub fn l2_distance(&self, other: &SpectralState) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| spectral::spectral_l2_norm(&a.sub(b)))
            .sum()
    }
}

/// Parameters bound to a grid, with the perturbation part of `∇φ`
/// sampled once.
#[derive(Clone, Debug)]
pub struct Model {
    grid: Grid,
    params: Params,
    phi_grad: Option<[ScalarField; 2]>,
}

impl Model {
    pub fn new(grid: &Grid, params: &Params) -> Result<Self> {
        params.validate()?;
        let phi_grad = params.phi_perturbation.map(|p| {
            let kappa = 2.0 * PI / grid.length();
            let (m1, m2) = (p.mode[0] as f64, p.mode[1] as f64);
            let phase = move |x1: f64, x2: f64| kappa * (m1 * x1 + m2 * x2);
            let a = p.amplitude;
            [
                ScalarField::from_fn(grid, |x1, x2| -a * kappa * m1 * phase(x1, x2).sin()),
                ScalarField::from_fn(grid, |x1, x2| -a * kappa * m2 * phase(x1, x2).sin()),
            ]
        });
        Ok(Model {
            grid: grid.clone(),
            params: params.clone(),
            phi_grad,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Nonlinear and coupling terms of (ρ, c, ω) in coefficient space;
    /// diffusion is left to the integrating factor.
    pub(crate) fn nonlinear(&self, s: &SpectralState) -> [SpectralField; 3] {
        if !self.params.couplings {
            let z = SpectralField::zeros(&self.grid);
            return [z.clone(), z.clone(), z];
        }
        let (u1, u2) = self.velocity_spectral(s.omega());
        let [cx, cy] = gradient(s.c());
        let u1 = spectral::inverse(&u1);
        let u2 = spectral::inverse(&u2);
        let cx = spectral::inverse(&cx);
        let cy = spectral::inverse(&cy);
        let rho = spectral::inverse(s.rho());
        let c = spectral::inverse(s.c());
        let w = spectral::inverse(s.omega());
        self.coupled_terms(&TermInputs {
            u: [&u1, &u2],
            grad_c: [&cx, &cy],
            rho_new: &rho,
            c_new: &c,
            omega_new: &w,
            rho_old: &rho,
            rho_old_hat: s.rho(),
        })
    }

    /// Shared by the nonlinear system and its Picard linearisation.
    pub(crate) fn coupled_terms(&self, t: &TermInputs<'_>) -> [SpectralField; 3] {
        let dl = self.params.dealias;
        let [u1, u2] = t.u;
        let [cx, cy] = t.grad_c;

        let flux1 = spectral::product(t.rho_new, &u1.add(cx), dl);
        let flux2 = spectral::product(t.rho_new, &u2.add(cy), dl);
        let n_rho = divergence(&flux1, &flux2).scale(-1.0);

        let cu1 = spectral::product(t.c_new, u1, dl);
        let cu2 = spectral::product(t.c_new, u2, dl);
        let consumption = spectral::product(t.c_new, t.rho_old, dl);
        let n_c = divergence(&cu1, &cu2).scale(-1.0).sub(&consumption);

        let wu1 = spectral::product(t.omega_new, u1, dl);
        let wu2 = spectral::product(t.omega_new, u2, dl);
        let mut n_w = divergence(&wu1, &wu2)
            .scale(-1.0)
            .add(&self.buoyancy(t.rho_old_hat));
        n_w.set_mean(0.0);

        [n_rho, n_c, n_w]
    }

    /// `∇⊥ρ·∇φ` with `∇⊥ρ = (−∂2ρ, ∂1ρ)`. Only the fluctuation of ρ
    /// contributes, since gradients annihilate the mean.
    pub(crate) fn buoyancy(&self, rho: &SpectralField) -> SpectralField {
        let [g1, g2] = self.params.gravity;
        let d1 = derivative(rho, Axis::X1, 1);
        let d2 = derivative(rho, Axis::X2, 1);
        let mut out = d2.scale(-g1).add(&d1.scale(g2));
        if let Some([p1, p2]) = &self.phi_grad {
            let perp1 = spectral::inverse(&d2.scale(-1.0));
            let perp2 = spectral::inverse(&d1);
            let dl = self.params.dealias;
            out = out
                .add(&spectral::product(&perp1, p1, dl))
                .add(&spectral::product(&perp2, p2, dl));
        }
        out.set_mean(0.0);
        out
    }

    pub(crate) fn velocity_spectral(&self, omega: &SpectralField) -> (SpectralField, SpectralField) {
        biot_savart(omega)
    }

    pub fn velocity(&self, state: &State) -> (ScalarField, ScalarField) {
        let (u1, u2) = self.velocity_spectral(&spectral::forward(&state.omega));
        (spectral::inverse(&u1), spectral::inverse(&u2))
    }

    fn full_rhs(&self, state: &State) -> [SpectralField; 3] {
        let s = state.to_spectral();
        let nl = self.nonlinear(&s);
        let nu = self.params.diffusivities();
        let mut out = nl;
        for k in 0..3 {
            if nu[k] > 0.0 {
                out[k] = out[k].add(&laplacian(&s.fields[k]).scale(nu[k]));
            }
        }
        out
    }

    pub fn rhs_rho(&self, state: &State) -> ScalarField {
        let [r, _, _] = self.full_rhs(state);
        spectral::inverse(&r)
    }

    pub fn rhs_c(&self, state: &State) -> ScalarField {
        let [_, c, _] = self.full_rhs(state);
        spectral::inverse(&c)
    }

    pub fn rhs_omega(&self, state: &State) -> ScalarField {
        let [_, _, w] = self.full_rhs(state);
        spectral::inverse(&w)
    }

    /// All three right-hand sides from one evaluation.
    pub fn rhs(&self, state: &State) -> [ScalarField; 3] {
        self.full_rhs(state).map(|f| spectral::inverse(&f))
    }

    /// Right-hand side of the pressure Poisson problem,
    /// `∇·(ρ′∇φ) − ∇·(u·∇u)`, in coefficient space.
    pub fn pressure_source(&self, state: &State) -> SpectralField {
        let dl = self.params.dealias;
        let rho_hat = spectral::forward(&state.rho);
        let (u1h, u2h) = self.velocity_spectral(&spectral::forward(&state.omega));
        let u1 = spectral::inverse(&u1h);
        let u2 = spectral::inverse(&u2h);

        // ∇·(u·∇u) = ∂i∂j(ui uj) for divergence-free u.
        let u11 = spectral::product(&u1, &u1, dl);
        let u12 = spectral::product(&u1, &u2, dl);
        let u22 = spectral::product(&u2, &u2, dl);
        let adv = derivative(&u11, Axis::X1, 2)
            .add(&derivative(&derivative(&u12, Axis::X1, 1), Axis::X2, 1).scale(2.0))
            .add(&derivative(&u22, Axis::X2, 2));

        let [g1, g2] = self.params.gravity;
        let mut forcing = derivative(&rho_hat, Axis::X1, 1)
            .scale(g1)
            .add(&derivative(&rho_hat, Axis::X2, 1).scale(g2));
        if let Some([p1, p2]) = &self.phi_grad {
            let fluct = state.rho.map(|v| v - state.rho.mean());
            let f1 = spectral::product(&fluct, p1, dl);
            let f2 = spectral::product(&fluct, p2, dl);
            forcing = forcing.add(&divergence(&f1, &f2));
        }
        let mut src = forcing.sub(&adv);
        src.set_mean(0.0);
        src
    }

    /// Diagnostic pressure with zero mean; never used by the evolution.
    pub fn pressure_recover(&self, state: &State) -> ScalarField {
        let src = self.pressure_source(state);
        let p = src.map_modes(|k1, k2, i, j, c| {
            let k2sum = k1 * k1 + k2 * k2;
            if (i == 0 && j == 0) || k2sum == 0.0 {
                Default::default()
            } else {
                -c / k2sum
            }
        });
        spectral::inverse(&p)
    }
}

/// Inputs to the coupled terms. In the nonlinear system the "new" and
/// "old" fields coincide; the Picard linearisation freezes the old ones.
pub(crate) struct TermInputs<'a> {
    pub u: [&'a ScalarField; 2],
    pub grad_c: [&'a ScalarField; 2],
    pub rho_new: &'a ScalarField,
    pub c_new: &'a ScalarField,
    pub omega_new: &'a ScalarField,
    pub rho_old: &'a ScalarField,
    pub rho_old_hat: &'a SpectralField,
}

pub fn velocity(state: &State, params: &Params) -> Result<(ScalarField, ScalarField)> {
    Ok(Model::new(state.grid(), params)?.velocity(state))
}

pub fn rhs_rho(state: &State, params: &Params) -> Result<ScalarField> {
    Ok(Model::new(state.grid(), params)?.rhs_rho(state))
}

pub fn rhs_c(state: &State, params: &Params) -> Result<ScalarField> {
    Ok(Model::new(state.grid(), params)?.rhs_c(state))
}

pub fn rhs_omega(state: &State, params: &Params) -> Result<ScalarField> {
    Ok(Model::new(state.grid(), params)?.rhs_omega(state))
}

pub fn pressure_recover(state: &State, params: &Params) -> Result<ScalarField> {
    Ok(Model::new(state.grid(), params)?.pressure_recover(state))
}
