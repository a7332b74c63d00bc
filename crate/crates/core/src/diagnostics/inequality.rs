//! Functional inequalities used by the regularity argument, evaluated as
//! LHS / RHS ratios with the implicit constant set to one.
//!
//! Only boundedness and grid stability of these ratios are meaningful; the
//! true constants are unknown.

use crate::model::State;
use crate::spectral::{lq_norm, lq_norm_magnitude, sobolev_norm, ScalarField};

use super::record::{Derived, InequalityRatios};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inequality {
    /// `‖f‖₄ ≲ ‖f‖₂^{1/2} ‖∇f‖₂^{1/2}`, applied to `u` and `∇c`.
    Ladyzhenskaya,
    /// `‖f‖∞ ≲ ‖f‖₂ + (1 + ‖∇f‖₂)(1 + log₊‖∇f‖_q)^{1/2}` with `f = u`.
    BrezisWaingerU,
    /// Same with `f = ∇c`.
    BrezisWaingerGradC,
    /// `‖∇u‖_q ≲ ‖ω‖_q`.
    CalderonZygmund,
    /// `‖f‖∞ ≲ ‖f‖_q^{(q−2)/(2q−2)} ‖∇f‖_q^{q/(2q−2)}` with `f = ∇c`.
    GagliardoNirenberg,
    /// `‖∇u‖∞ ≲ ‖u‖₂ + ‖ω‖∞ (1 + log₊(‖ω‖_{H²} / ‖ω‖∞))`.
    LogGradU,
}

impl Inequality {
    pub const ALL: [Inequality; 6] = [
        Inequality::Ladyzhenskaya,
        Inequality::BrezisWaingerU,
        Inequality::BrezisWaingerGradC,
        Inequality::CalderonZygmund,
        Inequality::GagliardoNirenberg,
        Inequality::LogGradU,
    ];
}

fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// `lhs / rhs`, with the zero field mapped to 0.
fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

pub fn ladyzhenskaya_ratio(f: &[&ScalarField], grad_f: &[&ScalarField]) -> f64 {
    let lhs = lq_norm_magnitude(f, 4.0);
    let rhs = (lq_norm_magnitude(f, 2.0) * lq_norm_magnitude(grad_f, 2.0)).sqrt();
    ratio(lhs, rhs)
}

pub fn brezis_wainger_ratio(f: &[&ScalarField], grad_f: &[&ScalarField], q: f64) -> f64 {
    let lhs = lq_norm_magnitude(f, f64::INFINITY);
    let g2 = lq_norm_magnitude(grad_f, 2.0);
    let gq = lq_norm_magnitude(grad_f, q);
    let rhs = lq_norm_magnitude(f, 2.0) + (1.0 + g2) * (1.0 + log_plus(gq)).sqrt();
    ratio(lhs, rhs)
}

pub fn gagliardo_nirenberg_ratio(f: &[&ScalarField], grad_f: &[&ScalarField], q: f64) -> f64 {
    let lhs = lq_norm_magnitude(f, f64::INFINITY);
    let a = (q - 2.0) / (2.0 * q - 2.0);
    let b = q / (2.0 * q - 2.0);
    let rhs = lq_norm_magnitude(f, q).powf(a) * lq_norm_magnitude(grad_f, q).powf(b);
    ratio(lhs, rhs)
}

pub fn calderon_zygmund_ratio(grad_u: &[&ScalarField], omega: &ScalarField, q: f64) -> f64 {
    ratio(lq_norm_magnitude(grad_u, q), lq_norm(omega, q))
}

pub fn log_gradu_ratio(
    grad_u: &[&ScalarField],
    u: &[&ScalarField],
    omega: &ScalarField,
    omega_h2: f64,
) -> f64 {
    let lhs = lq_norm_magnitude(grad_u, f64::INFINITY);
    let w_inf = lq_norm(omega, f64::INFINITY);
    let log_term = if w_inf > 0.0 {
        1.0 + log_plus(omega_h2 / w_inf)
    } else {
        1.0
    };
    let rhs = lq_norm_magnitude(u, 2.0) + w_inf * log_term;
    ratio(lhs, rhs)
}

pub(crate) fn ratio_from_derived(d: &Derived, which: Inequality, q: f64) -> f64 {
    match which {
        Inequality::Ladyzhenskaya => {
            // ∇u and ∇(∇c) give the gradients of the two applications.
            let on_u = ladyzhenskaya_ratio(&d.u_refs(), &d.grad_u_refs());
            let on_gc = ladyzhenskaya_ratio(&d.grad_c_refs(), &d.hess_c_refs());
            on_u.max(on_gc)
        }
        Inequality::BrezisWaingerU => brezis_wainger_ratio(&d.u_refs(), &d.grad_u_refs(), q),
        Inequality::BrezisWaingerGradC => {
            brezis_wainger_ratio(&d.grad_c_refs(), &d.hess_c_refs(), q)
        }
        Inequality::CalderonZygmund => calderon_zygmund_ratio(&d.grad_u_refs(), &d.omega, q),
        Inequality::GagliardoNirenberg => {
            gagliardo_nirenberg_ratio(&d.grad_c_refs(), &d.hess_c_refs(), q)
        }
        Inequality::LogGradU => log_gradu_ratio(
            &d.grad_u_refs(),
            &d.u_refs(),
            &d.omega,
            sobolev_norm(&d.omega_hat, 2),
        ),
    }
}

pub(crate) fn all_ratios(d: &Derived, q: f64) -> InequalityRatios {
    InequalityRatios {
        ladyzhenskaya: ratio_from_derived(d, Inequality::Ladyzhenskaya, q),
        brezis_wainger_u: ratio_from_derived(d, Inequality::BrezisWaingerU, q),
        brezis_wainger_gradc: ratio_from_derived(d, Inequality::BrezisWaingerGradC, q),
        calderon_zygmund: ratio_from_derived(d, Inequality::CalderonZygmund, q),
        gagliardo_nirenberg: ratio_from_derived(d, Inequality::GagliardoNirenberg, q),
        log_gradu: ratio_from_derived(d, Inequality::LogGradU, q),
    }
}

/// Ratio of one inequality at `state`, using exponent `q` where the
/// inequality takes one.
pub fn audit_inequality(state: &State, which: Inequality, q: f64) -> f64 {
    ratio_from_derived(&Derived::new(state), which, q)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::Grid;

    #[test]
    fn zero_field_gives_zero_ratios() {
        let grid = Grid::periodic(16).unwrap();
        let s = State::zeros(&grid);
        for which in Inequality::ALL {
            assert_eq!(audit_inequality(&s, which, 4.0), 0.0, "{which:?}");
        }
    }

    #[test]
    fn ladyzhenskaya_on_sine_matches_quadrature() {
        let grid = Grid::periodic(64).unwrap();
        let f = ScalarField::from_fn(&grid, |x1, _| x1.sin());
        let df = ScalarField::from_fn(&grid, |x1, _| x1.cos());
        let r = ladyzhenskaya_ratio(&[&f], &[&df]);

        // Independent quadrature of both sides.
        let h = grid.cell_area();
        let (mut s4, mut s2, mut g2) = (0.0, 0.0, 0.0);
        // f depends on x1 only: each x1 column contributes n identical cells.
        for i1 in 0..64 {
            let x = grid.coord(i1);
            s4 += 64.0 * x.sin().powi(4) * h;
            s2 += 64.0 * x.sin().powi(2) * h;
            g2 += 64.0 * x.cos().powi(2) * h;
        }
        let oracle = s4.powf(0.25) / (s2.sqrt() * g2.sqrt()).sqrt();
        assert!((r - oracle).abs() < 1e-13);
        // Closed form: (3π²/2)^{1/4} / (√2 π).
        let closed = (1.5 * PI * PI).powf(0.25) / (2f64.sqrt() * PI);
        assert!((r - closed).abs() < 1e-12);
    }

    #[test]
    fn log_plus_clamps() {
        assert_eq!(log_plus(0.5), 0.0);
        assert_eq!(log_plus(1.0), 0.0);
        assert!((log_plus(std::f64::consts::E) - 1.0).abs() < 1e-15);
    }
}
