use std::fmt;

use crate::error::{KseError, Result};
use crate::model::{Model, Params, State};
use crate::spectral::{self, gradient};
use crate::timestepper::tail_fraction_spectral;

use super::record::{DiagnosticsRecord, C_EXPONENTS};

/// Relative slack for sample-to-sample monotonicity of ‖c‖_q.
pub const TOL_MONO: f64 = 1e-8;

/// Relative slack below zero for ρ and c, scaled by the initial maxima.
pub const TOL_NEG: f64 = 1e-8;

/// Default bound on `max_t ‖ρ(t)‖∞ / ‖ρ₀‖∞` for small-c₀ runs.
pub const DEFAULT_RHO_BOUND: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub q: f64,
    /// Index of the later record of the offending pair.
    pub index: usize,
    pub overshoot: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub checked: Vec<f64>,
    pub worst: Option<MonotonicityViolation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.worst.is_none()
    }
}

impl fmt::Display for MonotonicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.worst {
            None => write!(f, "c L^q norms non-increasing for q in {:?}", self.checked),
            Some(v) => write!(
                f,
                "‖c‖_{} increased by {:.3e} at record {}",
                v.q, v.overshoot, v.index
            ),
        }
    }
}

/// Checks `‖c(t_{i+1})‖_q ≤ ‖c(t_i)‖_q + TOL_MONO·‖c₀‖_q` for each `q` (which
/// must be among the tracked exponents). The worst excess over the
/// tolerance is reported.
pub fn audit_c_monotonicity(records: &[DiagnosticsRecord], qs: &[f64]) -> Result<MonotonicityReport> {
    if records.len() < 2 {
        return Err(KseError::AuditFailure(
            "monotonicity audit needs at least two records".into(),
        ));
    }
    let mut worst: Option<MonotonicityViolation> = None;
    for &q in qs {
        let idx = C_EXPONENTS
            .iter()
            .position(|&e| e == q)
            .ok_or_else(|| KseError::param("q", format!("‖c‖_{q} is not tracked")))?;
        let tol = TOL_MONO * records[0].lq_c[idx];
        for (i, pair) in records.windows(2).enumerate() {
            let excess = pair[1].lq_c[idx] - pair[0].lq_c[idx] - tol;
            if excess > 0.0 && worst.as_ref().map_or(true, |w| excess > w.overshoot) {
                worst = Some(MonotonicityViolation {
                    q,
                    index: i + 1,
                    overshoot: excess,
                });
            }
        }
    }
    Ok(MonotonicityReport {
        checked: qs.to_vec(),
        worst,
    })
}

/// Terms of the L^q dissipation identity for c,
/// `(1/q) d/dt ‖c‖_q^q + (4(q−1)/q²)‖∇c^{q/2}‖₂² = −∫c^{q−1}∇c·u − ∫c^q ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationAudit {
    pub q: u32,
    /// `∫ c^{q−1} · rhs_c`, the instantaneous `(1/q) d/dt ‖c‖_q^q`.
    pub time_derivative: f64,
    /// `(q−1) ∫ c^{q−2} |∇c|²`, equal to the gradient term above.
    pub dissipation: f64,
    pub advection: f64,
    pub consumption: f64,
    /// `|lhs − rhs| / scale`.
    pub residual: f64,
}

impl DissipationAudit {
    pub fn rhs(&self) -> f64 {
        self.advection + self.consumption
    }

    pub fn consumption_nonpositive(&self) -> bool {
        self.consumption <= 0.0
    }
}

/// Evaluates both sides of the dissipation identity at `state` with even
/// integer `q ≥ 2`, replacing the time derivative by the pairing with the
/// right-hand side of the c equation.
pub fn audit_dissipation_identity(state: &State, params: &Params, q: u32) -> Result<DissipationAudit> {
    if q < 2 || q % 2 != 0 {
        return Err(KseError::param("q", "dissipation identity needs an even q >= 2"));
    }
    let model = Model::new(state.grid(), params)?;
    let grid = state.grid();
    let h = grid.cell_area();
    let c = &state.c;
    let rhs_c = model.rhs_c(state);
    let (u1, u2) = model.velocity(state);
    let [cx, cy] = gradient(&spectral::forward(c));
    let cx = spectral::inverse(&cx);
    let cy = spectral::inverse(&cy);

    let qm1 = q as i32 - 1;
    let (mut dt_term, mut diss, mut adv, mut cons) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..grid.physical_len() {
        let cv = c.values()[i];
        let gx = cx.values()[i];
        let gy = cy.values()[i];
        let cq1 = cv.powi(qm1);
        dt_term += cq1 * rhs_c.values()[i];
        diss += cv.powi(qm1 - 1) * (gx * gx + gy * gy);
        adv -= cq1 * (gx * u1.values()[i] + gy * u2.values()[i]);
        cons -= cq1 * cv * state.rho.values()[i];
    }
    let (dt_term, diss, adv, cons) = (
        dt_term * h,
        diss * h * f64::from(q - 1) * params.nu_c,
        adv * h,
        cons * h,
    );
    let lhs = dt_term + diss;
    let rhs = adv + cons;
    let scale = dt_term.abs().max(diss.abs()).max(adv.abs() + cons.abs());
    let residual = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(DissipationAudit {
        q,
        time_derivative: dt_term,
        dissipation: diss,
        advection: adv,
        consumption: cons,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoInftyReport {
    pub max_ratio: f64,
    pub bound: f64,
    pub initial_linf: f64,
    /// Mean density (constant by mass conservation).
    pub mean: f64,
    /// `(‖ρ(T)‖∞ − mean) / (‖ρ₀‖∞ − mean)`; below one means the peak relaxes
    /// toward the mean.
    pub final_excess_ratio: f64,
}

impl RhoInftyReport {
    pub fn passed(&self) -> bool {
        self.max_ratio <= self.bound
    }
}

impl fmt::Display for RhoInftyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max ‖ρ‖∞/‖ρ₀‖∞ = {:.6} (bound {}); peak excess over mean relaxed to {:.3e} of initial. \
             On the torus ‖ρ‖∞ cannot decay below the mean, so boundedness and relaxation \
             toward the mean are checked instead of a power-law decay.",
            self.max_ratio, self.bound, self.final_excess_ratio
        )
    }
}

pub fn audit_rho_infty_trend(records: &[DiagnosticsRecord], bound: f64) -> Result<RhoInftyReport> {
    let first = records
        .first()
        .ok_or_else(|| KseError::AuditFailure("no records".into()))?;
    let last = records.last().unwrap();
    let initial = first.linf_rho;
    let mean = first.mean_rho;
    let max_ratio = records
        .iter()
        .map(|r| if initial > 0.0 { r.linf_rho / initial } else { 0.0 })
        .fold(0.0, f64::max);
    let excess0 = initial - mean;
    let final_excess_ratio = if excess0.abs() > 0.0 {
        (last.linf_rho - mean) / excess0
    } else {
        0.0
    };
    Ok(RhoInftyReport {
        max_ratio,
        bound,
        initial_linf: initial,
        mean,
        final_excess_ratio,
    })
}

/// Fraction of the combined (ρ, c, ω) L² energy in modes with maximal
/// frequency above `n/3`.
pub fn tail_fraction(state: &State) -> f64 {
    tail_fraction_spectral(&state.to_spectral())
}

/// Relative drift of `∫ρ` over a record series.
pub fn mass_drift(records: &[DiagnosticsRecord]) -> f64 {
    let m0 = records.first().map_or(0.0, |r| r.mass_rho);
    records
        .iter()
        .map(|r| (r.mass_rho - m0).abs())
        .fold(0.0, f64::max)
        / m0.abs().max(f64::MIN_POSITIVE)
}

/// Largest `|∫ω|` over a record series.
pub fn max_circulation(records: &[DiagnosticsRecord]) -> f64 {
    records.iter().map(|r| r.circulation.abs()).fold(0.0, f64::max)
}

/// Most negative values of ρ and c relative to their initial maxima.
pub fn worst_negativity(records: &[DiagnosticsRecord], rho0_max: f64, c0_max: f64) -> (f64, f64) {
    let rel = |v: f64, m: f64| if m > 0.0 { v / m } else { v };
    records.iter().fold((f64::INFINITY, f64::INFINITY), |(r, c), rec| {
        (r.min(rel(rec.min_rho, rho0_max)), c.min(rel(rec.min_c, c0_max)))
    })
}

/// Empirical ratio of the energy inequality,
/// `(dX/dt + D) / (F·X)`, from consecutive records (forward differences).
/// No pass/fail attaches to it since the constant is unknown.
pub fn energy_growth_ratios(records: &[DiagnosticsRecord]) -> Vec<(f64, f64)> {
    records
        .windows(2)
        .filter_map(|w| {
            let dt = w[1].t - w[0].t;
            let denom = w[0].x_factor * w[0].x_energy;
            (dt > 0.0 && denom > 0.0).then(|| {
                let dxdt = (w[1].x_energy - w[0].x_energy) / dt;
                (w[0].t, (dxdt + w[0].x_dissipation) / denom)
            })
        })
        .collect()
}
