use std::io::Write;

use crate::error::{KseError, Result};
use crate::model::{Model, Params, State};
use crate::spectral::{
    self, derivative, lq_norm, lq_norm_magnitude, Axis, ScalarField, SpectralField,
};
use crate::timestepper::tail_fraction_spectral;

use super::inequality;

/// Exponents tracked for the L^q family of c.
pub const C_EXPONENTS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, f64::INFINITY];

/// Default `q > 2` for Y and the W^{1,q}-type auditors.
pub const DEFAULT_Q: f64 = 4.0;

/// Every derived field the diagnostics need, computed once per state.
pub(crate) struct Derived {
    pub rho: ScalarField,
    pub c: ScalarField,
    pub omega: ScalarField,
    pub rho_hat: SpectralField,
    pub c_hat: SpectralField,
    pub omega_hat: SpectralField,
    pub u_hat: [SpectralField; 2],
    pub u: [ScalarField; 2],
    /// ∂j ui, ordered (∂1u1, ∂2u1, ∂1u2, ∂2u2).
    pub grad_u: [ScalarField; 4],
    pub grad_rho: [ScalarField; 2],
    pub grad_c: [ScalarField; 2],
    /// (∂11c, ∂12c, ∂12c, ∂22c) so the Euclidean magnitude is the
    /// Frobenius norm of the Hessian.
    pub hess_c: [ScalarField; 4],
}

impl Derived {
    pub fn new(state: &State) -> Self {
        let s = state.to_spectral();
        let [rho_hat, c_hat, omega_hat] = s.fields;
        let (u1h, u2h) = spectral::biot_savart(&omega_hat);
        let inv = spectral::inverse;
        let d = |f: &SpectralField, a| derivative(f, a, 1);
        let grad_u = [
            inv(&d(&u1h, Axis::X1)),
            inv(&d(&u1h, Axis::X2)),
            inv(&d(&u2h, Axis::X1)),
            inv(&d(&u2h, Axis::X2)),
        ];
        let c1 = d(&c_hat, Axis::X1);
        let c12 = inv(&d(&c1, Axis::X2));
        let hess_c = [
            inv(&derivative(&c_hat, Axis::X1, 2)),
            c12.clone(),
            c12,
            inv(&derivative(&c_hat, Axis::X2, 2)),
        ];
        Derived {
            rho: state.rho.clone(),
            c: state.c.clone(),
            omega: state.omega.clone(),
            u: [inv(&u1h), inv(&u2h)],
            grad_u,
            grad_rho: [inv(&d(&rho_hat, Axis::X1)), inv(&d(&rho_hat, Axis::X2))],
            grad_c: [inv(&c1), inv(&d(&c_hat, Axis::X2))],
            hess_c,
            u_hat: [u1h, u2h],
            rho_hat,
            c_hat,
            omega_hat,
        }
    }

    pub fn u_refs(&self) -> [&ScalarField; 2] {
        [&self.u[0], &self.u[1]]
    }

    pub fn grad_u_refs(&self) -> [&ScalarField; 4] {
        let g = &self.grad_u;
        [&g[0], &g[1], &g[2], &g[3]]
    }

    pub fn grad_c_refs(&self) -> [&ScalarField; 2] {
        [&self.grad_c[0], &self.grad_c[1]]
    }

    pub fn grad_rho_refs(&self) -> [&ScalarField; 2] {
        [&self.grad_rho[0], &self.grad_rho[1]]
    }

    pub fn hess_c_refs(&self) -> [&ScalarField; 4] {
        let h = &self.hess_c;
        [&h[0], &h[1], &h[2], &h[3]]
    }
}

/// Auditor ratios with every implicit constant set to one.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InequalityRatios {
    pub ladyzhenskaya: f64,
    pub brezis_wainger_u: f64,
    pub brezis_wainger_gradc: f64,
    pub calderon_zygmund: f64,
    pub gagliardo_nirenberg: f64,
    pub log_gradu: f64,
}

impl InequalityRatios {
    pub const NAMES: [&'static str; 6] = [
        "ladyzhenskaya",
        "brezis_wainger_u",
        "brezis_wainger_gradc",
        "calderon_zygmund",
        "gagliardo_nirenberg",
        "log_gradu",
    ];

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.ladyzhenskaya,
            self.brezis_wainger_u,
            self.brezis_wainger_gradc,
            self.calderon_zygmund,
            self.gagliardo_nirenberg,
            self.log_gradu,
        ]
    }

    pub fn max(&self, other: &InequalityRatios) -> InequalityRatios {
        InequalityRatios {
            ladyzhenskaya: self.ladyzhenskaya.max(other.ladyzhenskaya),
            brezis_wainger_u: self.brezis_wainger_u.max(other.brezis_wainger_u),
            brezis_wainger_gradc: self.brezis_wainger_gradc.max(other.brezis_wainger_gradc),
            calderon_zygmund: self.calderon_zygmund.max(other.calderon_zygmund),
            gagliardo_nirenberg: self.gagliardo_nirenberg.max(other.gagliardo_nirenberg),
            log_gradu: self.log_gradu.max(other.log_gradu),
        }
    }
}

/// Norms of (∇ρ, ∇²c, ω) at one configured exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QNorms {
    pub q: f64,
    pub omega: f64,
    pub grad_rho: f64,
    pub grad2_c: f64,
}

/// One row of tracked quantities at a sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    /// ∫ρ over the torus.
    pub mass_rho: f64,
    pub mean_rho: f64,
    pub min_rho: f64,
    pub min_c: f64,
    /// ‖c‖_q for q in [`C_EXPONENTS`].
    pub lq_c: [f64; 5],
    pub linf_rho: f64,
    pub l2_grad_c: f64,
    /// ∫ω over the torus.
    pub circulation: f64,
    pub q_norms: Vec<QNorms>,
    pub x_energy: f64,
    /// `‖∇ρ‖²_{H^m} + ‖∇c‖²_{H^{m+1}}`.
    pub x_dissipation: f64,
    /// `1 + ‖ρ‖∞ + ‖ρ‖∞² + ‖∇ρ‖₄² + ‖c‖∞² + ‖∇c‖∞² + ‖∇u‖∞`.
    pub x_factor: f64,
    pub y_quantity: f64,
    pub ratios: InequalityRatios,
    pub tail_fraction: f64,
}

impl DiagnosticsRecord {
    /// ‖c‖_q for one of the tracked exponents.
    pub fn c_norm(&self, q: f64) -> Option<f64> {
        C_EXPONENTS.iter().position(|&e| e == q).map(|i| self.lq_c[i])
    }

    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.t,
            self.mass_rho,
            self.mean_rho,
            self.min_rho,
            self.min_c,
            self.linf_rho,
            self.l2_grad_c,
            self.circulation,
            self.x_energy,
            self.x_dissipation,
            self.x_factor,
            self.y_quantity,
            self.tail_fraction,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.lq_c.iter().all(|v| v.is_finite())
            && self.ratios.as_array().iter().all(|v| v.is_finite())
            && self
                .q_norms
                .iter()
                .all(|n| n.omega.is_finite() && n.grad_rho.is_finite() && n.grad2_c.is_finite())
    }

    pub fn csv_header(q_list: &[f64]) -> String {
        let mut cols: Vec<String> = [
            "t", "dt", "mass_rho", "mean_rho", "min_rho", "min_c", "c_l1", "c_l2", "c_l4", "c_l8", "c_linf",
            "rho_linf", "grad_c_l2", "circulation",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for q in q_list {
            let tag = q_tag(*q);
            cols.push(format!("omega_l{tag}"));
            cols.push(format!("grad_rho_l{tag}"));
            cols.push(format!("grad2_c_l{tag}"));
        }
        cols.extend(
            ["x_energy", "x_dissipation", "x_factor", "y_quantity"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.extend(InequalityRatios::NAMES.iter().map(|s| s.to_string()));
        cols.push("tail_fraction".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut vals = vec![
            self.t,
            self.dt,
            self.mass_rho,
            self.mean_rho,
            self.min_rho,
            self.min_c,
        ];
        vals.extend_from_slice(&self.lq_c);
        vals.extend([self.linf_rho, self.l2_grad_c, self.circulation]);
        for n in &self.q_norms {
            vals.extend([n.omega, n.grad_rho, n.grad2_c]);
        }
        vals.extend([
            self.x_energy,
            self.x_dissipation,
            self.x_factor,
            self.y_quantity,
        ]);
        vals.extend(self.ratios.as_array());
        vals.push(self.tail_fraction);
        vals.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")
    }
}

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn q_tag(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else if q.fract() == 0.0 {
        format!("{}", q as i64)
    } else {
        format!("{q}").replace('.', "p")
    }
}

pub fn validate_q_list(q_list: &[f64]) -> Result<()> {
    if q_list.is_empty() {
        return Err(KseError::param("q", "at least one exponent q > 2 is required"));
    }
    if let Some(q) = q_list.iter().find(|q| !(**q > 2.0 && q.is_finite())) {
        return Err(KseError::param("q", format!("exponent {q} must be finite and > 2")));
    }
    Ok(())
}

/// Computes every tracked norm and auditor ratio for `state`. The first
/// entry of `q_list` is the exponent used for Y and the q-dependent
/// auditors.
pub fn compute_record(state: &State, params: &Params, q_list: &[f64]) -> Result<DiagnosticsRecord> {
    params.validate()?;
    validate_q_list(q_list)?;
    let d = Derived::new(state);
    Ok(record_from_derived(state.t, &d, params, q_list))
}

pub(crate) fn record_from_derived(
    t: f64,
    d: &Derived,
    params: &Params,
    q_list: &[f64],
) -> DiagnosticsRecord {
    let inf = f64::INFINITY;
    let m = params.sobolev_m;
    let lq_c = C_EXPONENTS.map(|q| lq_norm(&d.c, q));
    let linf_rho = lq_norm(&d.rho, inf);

    let q_norms: Vec<QNorms> = q_list
        .iter()
        .map(|&q| QNorms {
            q,
            omega: lq_norm(&d.omega, q),
            grad_rho: lq_norm_magnitude(&d.grad_rho_refs(), q),
            grad2_c: lq_norm_magnitude(&d.hess_c_refs(), q),
        })
        .collect();

    let x_energy = spectral::sobolev_norm_sq(&d.rho_hat, m)
        + spectral::sobolev_norm_sq(&d.c_hat, m + 1)
        + spectral::sobolev_norm_sq(&d.u_hat[0], m + 1)
        + spectral::sobolev_norm_sq(&d.u_hat[1], m + 1);
    let mi = m as i32;
    let x_dissipation = spectral::weighted_energy(&d.rho_hat, |k2| k2 * (1.0 + k2).powi(mi))
        + spectral::weighted_energy(&d.c_hat, |k2| k2 * (1.0 + k2).powi(mi + 1));

    let grad_c_inf = lq_norm_magnitude(&d.grad_c_refs(), inf);
    let grad_u_inf = lq_norm_magnitude(&d.grad_u_refs(), inf);
    let c_inf = lq_c[4];
    let x_factor = 1.0
        + linf_rho
        + linf_rho * linf_rho
        + lq_norm_magnitude(&d.grad_rho_refs(), 4.0).powi(2)
        + c_inf * c_inf
        + grad_c_inf * grad_c_inf
        + grad_u_inf;

    let q0 = q_list[0];
    let first = &q_norms[0];
    let y_quantity = first.grad_rho.powf(q0)
        + lq_norm_magnitude(&d.grad_c_refs(), q0).powf(q0)
        + first.grad2_c.powf(q0)
        + first.omega.powf(q0);

    let tail = {
        let s = crate::model::SpectralState {
            t,
            fields: [d.rho_hat.clone(), d.c_hat.clone(), d.omega_hat.clone()],
        };
        tail_fraction_spectral(&s)
    };

    DiagnosticsRecord {
        t,
        dt: 0.0,
        mass_rho: d.rho.integral(),
        mean_rho: d.rho.mean(),
        min_rho: d.rho.min(),
        min_c: d.c.min(),
        lq_c,
        linf_rho,
        l2_grad_c: lq_norm_magnitude(&d.grad_c_refs(), 2.0),
        circulation: d.omega.integral(),
        q_norms,
        x_energy,
        x_dissipation,
        x_factor,
        y_quantity,
        ratios: inequality::all_ratios(d, q0),
        tail_fraction: tail,
    }
}

/// Collects records at every observer call and optionally streams them
/// as CSV.
pub struct Recorder {
    params: Params,
    q_list: Vec<f64>,
    model: Model,
    pub records: Vec<DiagnosticsRecord>,
    sink: Option<Box<dyn Write + Send>>,
}

impl Recorder {
    pub fn new(grid: &crate::Grid, params: &Params, q_list: &[f64]) -> Result<Self> {
        validate_q_list(q_list)?;
        Ok(Recorder {
            params: params.clone(),
            q_list: q_list.to_vec(),
            model: Model::new(grid, params)?,
            records: Vec::new(),
            sink: None,
        })
    }

    /// Streams rows to `sink`, writing the header immediately.
    pub fn with_csv(mut self, mut sink: Box<dyn Write + Send>) -> std::io::Result<Self> {
        writeln!(sink, "{}", DiagnosticsRecord::csv_header(&self.q_list))?;
        self.sink = Some(sink);
        Ok(self)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn q_list(&self) -> &[f64] {
        &self.q_list
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        match self.sink.as_mut() {
            Some(s) => s.flush(),
            None => Ok(()),
        }
    }
}

impl crate::timestepper::Observer for Recorder {
    fn observe(&mut self, state: &State, dt: f64) -> Result<()> {
        let d = Derived::new(state);
        let mut rec = record_from_derived(state.t, &d, &self.params, &self.q_list);
        rec.dt = dt;
        if let Some(sink) = self.sink.as_mut() {
            writeln!(sink, "{}", rec.csv_row())
                .map_err(|e| KseError::io("diagnostics csv", e))?;
        }
        self.records.push(rec);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::Grid;

    #[test]
    fn zero_state_record() {
        let grid = Grid::periodic(16).unwrap();
        let r = compute_record(&State::zeros(&grid), &Params::default(), &[4.0]).unwrap();
        assert_eq!(r.mass_rho, 0.0);
        assert_eq!(r.x_energy, 0.0);
        assert_eq!(r.y_quantity, 0.0);
        assert!(r.lq_c.iter().all(|&v| v == 0.0));
        assert!(r.ratios.as_array().iter().all(|&v| v == 0.0));
        assert!(r.is_finite());
    }

    #[test]
    fn energy_of_single_sine_mode() {
        // ‖a sin x1‖²_{H³} = a² · 2π² · (1 + 1)³ = 16 π² a².
        let grid = Grid::periodic(32).unwrap();
        let a = 0.7;
        let rho = ScalarField::from_fn(&grid, |x1, _| a * x1.sin());
        let s = State::new(0.0, rho, ScalarField::zeros(&grid), ScalarField::zeros(&grid)).unwrap();
        let r = compute_record(&s, &Params::default(), &[4.0]).unwrap();
        let expected = 16.0 * PI * PI * a * a;
        assert!((r.x_energy - expected).abs() < 1e-10 * expected);
        assert!(r.x_energy >= (a * PI).powi(2) * 2.0);
    }

    #[test]
    fn header_matches_row_width() {
        let grid = Grid::periodic(16).unwrap();
        let q = [4.0, 6.0];
        let r = compute_record(&State::zeros(&grid), &Params::default(), &q).unwrap();
        let h = DiagnosticsRecord::csv_header(&q);
        assert_eq!(h.split(',').count(), r.csv_row().split(',').count());
        assert!(h.contains("omega_l6"));
    }

    #[test]
    fn q_list_validation() {
        assert!(validate_q_list(&[]).is_err());
        assert!(validate_q_list(&[2.0]).is_err());
        assert!(validate_q_list(&[f64::INFINITY]).is_err());
        assert!(validate_q_list(&[3.0, 4.0]).is_ok());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
