//! Orchestration behind the command line subcommands.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{RunConfig, SweepParam};
use crate::diagnostics::{
    self, audit_c_monotonicity, audit_dissipation_identity, audit_rho_infty_trend, fmt_float,
    DiagnosticsRecord, DissipationAudit, InequalityRatios, Recorder, C_EXPONENTS, TOL_NEG,
};
use crate::error::{KseError, Result};
use crate::initial::build_initial_state;
use crate::model::{Params, State};
use crate::picard::{self, fixed_point_defect, picard_run, PicardOutcome};
use crate::snapshot::write_snapshot;
use crate::spectral::{self, spectral_l2_norm, Grid};
use crate::timestepper::{integrate, Observer, StepControl};

pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const FINAL_SNAPSHOT: &str = "final.kse";
pub const AUDIT_SUMMARY: &str = "audit_summary.txt";
pub const PICARD_CSV: &str = "picard_residuals.csv";
pub const PICARD_SUMMARY: &str = "picard_summary.txt";
pub const SWEEP_CSV: &str = "comparison.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";

/// Relative tolerances of the run-level audits.
pub const TOL_MASS: f64 = 1e-10;
pub const TOL_CIRCULATION: f64 = 1e-12;
pub const TOL_DISSIPATION: f64 = 1e-6;
pub const TOL_TAIL: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub quiet: bool,
}

impl RunOptions {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| KseError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| KseError::io(path, e))
}

/// `(Σ ‖a_f − b_f‖₂²)^{1/2}` over (ρ, c, ω); `b` is resampled spectrally
/// onto the grid of `a` when the grids differ.
pub fn state_l2_difference(a: &State, b: &State) -> f64 {
    let grid = a.grid();
    a.fields()
        .iter()
        .zip(b.fields())
        .map(|(fa, fb)| {
            let ha = spectral::forward(fa);
            let hb = spectral::forward(fb).resample(grid);
            spectral_l2_norm(&ha.sub(&hb)).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Writes a snapshot at every sample time that is a multiple of the
/// configured interval.
struct SnapshotWriter {
    dir: PathBuf,
    interval: f64,
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &State, _dt: f64) -> Result<()> {
        if self.interval <= 0.0 {
            return Ok(());
        }
        let k = (state.t / self.interval).round();
        if (state.t - k * self.interval).abs() > 1e-9 * self.interval.max(1.0) {
            return Ok(());
        }
        write_snapshot(&self.dir.join(format!("snap_{:05}.kse", k as u64)), state)
    }
}

/// Evaluates the dissipation identity at evenly spaced sample indices.
struct DissipationSampler {
    params: Params,
    targets: Vec<usize>,
    seen: usize,
    results: Vec<(f64, [DissipationAudit; 2])>,
}

impl DissipationSampler {
    fn new(params: &Params, total_samples: usize, count: usize) -> Self {
        let count = count.min(total_samples);
        let targets = (0..count)
            .map(|i| {
                if count == 1 {
                    0
                } else {
                    (i * (total_samples - 1) + (count - 1) / 2) / (count - 1)
                }
            })
            .collect();
        DissipationSampler {
            params: params.clone(),
            targets,
            seen: 0,
            results: Vec::new(),
        }
    }
}

impl Observer for DissipationSampler {
    fn observe(&mut self, state: &State, _dt: f64) -> Result<()> {
        if self.targets.contains(&self.seen) {
            let a2 = audit_dissipation_identity(state, &self.params, 2)?;
            let a4 = audit_dissipation_identity(state, &self.params, 4)?;
            self.results.push((state.t, [a2, a4]));
        }
        self.seen += 1;
        Ok(())
    }
}

fn sample_count(control: &StepControl) -> usize {
    (control.t_end / control.sample_interval).ceil() as usize + 1
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub initial: State,
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    dissipation: Vec<(f64, [DissipationAudit; 2])>,
}

fn simulate_into(
    config: &RunConfig,
    out: &Path,
    opts: &RunOptions,
    sample_dissipation: bool,
) -> Result<SimulateOutcome> {
    config.validate()?;
    create_dir(out)?;
    let grid = config.grid.build()?;
    let initial = build_initial_state(&grid, &config.ic)?;
    let csv_path = out.join(DIAGNOSTICS_CSV);
    let csv = File::create(&csv_path).map_err(|e| KseError::io(&csv_path, e))?;
    let mut recorder = Recorder::new(&grid, &config.params, &config.diag.q)?
        .with_csv(Box::new(BufWriter::new(csv)))
        .map_err(|e| KseError::io(&csv_path, e))?;
    let snap_dir = out.join("snapshots");
    if config.out.snapshot_interval > 0.0 {
        create_dir(&snap_dir)?;
    }
    let mut snapshots = SnapshotWriter {
        dir: snap_dir,
        interval: config.out.snapshot_interval,
    };
    let samples = if sample_dissipation {
        config.diag.dissipation_samples
    } else {
        0
    };
    let mut dissipation = DissipationSampler::new(&config.params, sample_count(&config.step), samples);

    opts.log(format!(
        "simulating n = {}, T = {} into {}",
        grid.n(),
        config.step.t_end,
        out.display()
    ));
    let result = integrate(
        &initial,
        &config.params,
        &config.step,
        &mut [&mut recorder, &mut snapshots, &mut dissipation],
    );
    recorder.flush().map_err(|e| KseError::io(&csv_path, e))?;
    let final_state = result?;
    write_snapshot(&out.join(FINAL_SNAPSHOT), &final_state)?;
    opts.log(format!("reached t = {}", final_state.t));
    Ok(SimulateOutcome {
        initial,
        final_state,
        records: recorder.records,
        dissipation: dissipation.results,
    })
}

/// Time series plus snapshots.
pub fn run_simulate(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<SimulateOutcome> {
    simulate_into(config, out, opts, false)
}

#[derive(Clone, Debug)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct AuditOutcome {
    pub checks: Vec<AuditCheck>,
    pub max_ratios: InequalityRatios,
}

impl AuditOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(s, "max inequality ratios (constants set to one):");
        for (name, v) in InequalityRatios::NAMES.iter().zip(self.max_ratios.as_array()) {
            let _ = writeln!(s, "  {name} = {}", fmt_float(v));
        }
        s
    }
}

/// Runs every record-series and state auditor on a completed simulation.
pub fn audit_records(sim: &SimulateOutcome, rho_bound: f64) -> Result<AuditOutcome> {
    let recs = &sim.records;
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(AuditCheck {
            name: name.into(),
            passed,
            detail,
        })
    };

    let drift = diagnostics::mass_drift(recs);
    check(
        "mass",
        drift <= TOL_MASS,
        format!("relative drift {drift:.3e} (tol {TOL_MASS:.0e})"),
    );

    let mono = audit_c_monotonicity(recs, &C_EXPONENTS)?;
    check("c_monotonicity", mono.passed(), mono.to_string());

    let c0_inf = recs[0].lq_c[4];
    let c_inf_max = recs.iter().map(|r| r.lq_c[4]).fold(0.0, f64::max);
    check(
        "c_max_principle",
        c_inf_max <= c0_inf * (1.0 + 1e-8),
        format!("max ‖c‖∞ = {c_inf_max:.6e}, ‖c₀‖∞ = {c0_inf:.6e}"),
    );

    let (neg_rho, neg_c) =
        diagnostics::worst_negativity(recs, sim.initial.rho.max(), sim.initial.c.max());
    check(
        "nonnegativity",
        neg_rho >= -TOL_NEG && neg_c >= -TOL_NEG,
        format!("min ρ/max ρ₀ = {neg_rho:.3e}, min c/max c₀ = {neg_c:.3e}"),
    );

    let w0 = spectral::lq_norm(&sim.initial.omega, 2.0);
    let circ = diagnostics::max_circulation(recs);
    check(
        "circulation",
        circ <= TOL_CIRCULATION * w0.max(f64::MIN_POSITIVE),
        format!("max |∫ω| = {circ:.3e}, ‖ω₀‖₂ = {w0:.3e}"),
    );

    if !sim.dissipation.is_empty() {
        let worst = sim
            .dissipation
            .iter()
            .flat_map(|(_, a)| a.iter().map(|x| x.residual))
            .fold(0.0, f64::max);
        let sign_ok = sim
            .dissipation
            .iter()
            .all(|(_, a)| a.iter().all(|x| x.consumption_nonpositive()));
        check(
            "dissipation_identity",
            worst < TOL_DISSIPATION && sign_ok,
            format!(
                "max residual {worst:.3e} over {} states, q in {{2, 4}}; consumption ≤ 0: {sign_ok}",
                sim.dissipation.len()
            ),
        );
    }

    let rho = audit_rho_infty_trend(recs, rho_bound)?;
    check("rho_infty", rho.passed(), rho.to_string());

    let tail = recs.iter().map(|r| r.tail_fraction).fold(0.0, f64::max);
    check(
        "tail_fraction",
        tail < TOL_TAIL,
        format!("max {tail:.3e} (tol {TOL_TAIL:.0e})"),
    );

    let finite = recs.iter().all(|r| r.is_finite());
    check("finite", finite, format!("{} records", recs.len()));

    let max_ratios = recs
        .iter()
        .map(|r| r.ratios)
        .fold(InequalityRatios::default(), |a, b| a.max(&b));
    Ok(AuditOutcome { checks, max_ratios })
}

/// Simulation followed by every auditor. An auditor failure is reported
/// after the summary is written.
pub fn run_audit(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<AuditOutcome> {
    let sim = simulate_into(config, out, opts, true)?;
    let audit = audit_records(&sim, config.diag.rho_bound)?;
    let summary = audit.summary();
    write_text(&out.join(AUDIT_SUMMARY), &summary)?;
    opts.log(summary.trim_end());
    if !audit.passed() {
        let failed: Vec<_> = audit
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(KseError::AuditFailure(failed.join(", ")));
    }
    Ok(audit)
}

#[derive(Clone, Debug)]
pub struct PicardSummary {
    pub outcome: PicardOutcome,
    /// L² distance between the fixed point and the direct solver at the
    /// end of the window.
    pub direct_difference: f64,
    pub defect: f64,
}

/// Direct nonlinear solve over the Picard window with the same step.
pub fn direct_solution(state0: &State, params: &Params, control: &picard::PicardControl) -> Result<State> {
    let t_end = state0.t + control.dt * control.steps() as f64;
    let step = StepControl {
        t_end,
        sample_interval: t_end,
        fixed_dt: Some(control.dt),
        dt_min: control.dt.min(StepControl::default().dt_min),
        dt_max: control.dt,
        ..StepControl::default()
    };
    integrate(state0, params, &step, &mut [])
}

pub fn run_picard(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<PicardSummary> {
    config.validate()?;
    create_dir(out)?;
    let grid = config.grid.build()?;
    let state0 = build_initial_state(&grid, &config.ic)?;
    opts.log(format!(
        "picard iteration on n = {}, T = {}, dt = {}",
        grid.n(),
        config.picard.t_end,
        config.picard.dt
    ));
    let outcome = picard_run(&state0, &config.params, &config.picard)?;

    let mut csv = String::from("iteration,residual,ratio\n");
    for (i, r) in outcome.residuals.iter().enumerate() {
        let ratio = if i > 0 && outcome.residuals[i - 1] > 0.0 {
            fmt_float(r / outcome.residuals[i - 1])
        } else {
            String::new()
        };
        let _ = writeln!(csv, "{},{},{}", i + 1, fmt_float(*r), ratio);
    }
    write_text(&out.join(PICARD_CSV), &csv)?;

    let direct = direct_solution(&state0, &config.params, &config.picard)?;
    let direct_difference = state_l2_difference(&outcome.fixed_point().last(), &direct);
    let defect = fixed_point_defect(outcome.fixed_point(), &config.params)?;
    let text = format!(
        "{outcome}\ncontracted: {}\nconverged: {}\nfixed point vs direct solver at T: {}\nfixed-point defect: {}\n",
        outcome.contracted(),
        outcome.converged,
        fmt_float(direct_difference),
        fmt_float(defect)
    );
    write_text(&out.join(PICARD_SUMMARY), &text)?;
    opts.log(text.trim_end());
    if !outcome.contracted() {
        return Err(KseError::AuditFailure(outcome.to_string()));
    }
    Ok(PicardSummary {
        outcome,
        direct_difference,
        defect,
    })
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    /// `completed`, or the error that stopped the run.
    pub status: String,
    pub final_t: f64,
    pub rho_linf: f64,
    pub c_l2: f64,
    pub omega_l2: f64,
    pub x_energy: f64,
    pub max_ratios: InequalityRatios,
    pub difference: Option<f64>,
    final_state: Option<State>,
}

fn sweep_member(base: &RunConfig, param: SweepParam, value: f64) -> RunConfig {
    let mut c = base.clone();
    match param {
        SweepParam::AmplitudeC => c.ic.amplitude_c = value,
        SweepParam::NuU => c.params.nu_u = value,
        SweepParam::N => c.grid.n = value as usize,
    }
    c.sweep = None;
    c
}

fn sweep_dir(out: &Path, param: SweepParam, value: f64) -> PathBuf {
    out.join(format!("{}_{}", param.name(), value))
}

/// One run per sweep value (concurrently), plus the optional reference,
/// summarised in a comparison table.
pub fn run_sweep(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| KseError::Config {
            line: 0,
            message: "sweep needs `sweep.param` and `sweep.values`".into(),
        })?;
    create_dir(out)?;
    let quiet = RunOptions { quiet: true };
    let member = |value: f64| -> Result<SweepRow> {
        let cfg = sweep_member(config, sweep.param, value);
        let dir = sweep_dir(out, sweep.param, value);
        let row = match run_simulate(&cfg, &dir, &quiet) {
            Ok(sim) => {
                let last = sim.records.last().expect("at least one record");
                let f = &sim.final_state;
                SweepRow {
                    value,
                    status: "completed".into(),
                    final_t: f.t,
                    rho_linf: last.linf_rho,
                    c_l2: last.lq_c[1],
                    omega_l2: spectral::lq_norm(&f.omega, 2.0),
                    x_energy: last.x_energy,
                    max_ratios: sim
                        .records
                        .iter()
                        .map(|r| r.ratios)
                        .fold(InequalityRatios::default(), |a, b| a.max(&b)),
                    difference: None,
                    final_state: Some(sim.final_state),
                }
            }
            Err(e @ KseError::BlowUp(_)) => SweepRow {
                value,
                status: e.to_string(),
                final_t: f64::NAN,
                rho_linf: f64::NAN,
                c_l2: f64::NAN,
                omega_l2: f64::NAN,
                x_energy: f64::NAN,
                max_ratios: InequalityRatios::default(),
                difference: None,
                final_state: None,
            },
            Err(e) => return Err(e),
        };
        opts.log(format!("{} = {}: {}", sweep.param.name(), value, row.status));
        Ok(row)
    };

    let mut values = sweep.values.clone();
    if let Some(r) = sweep.reference {
        values.push(r);
    }
    let mut rows: Vec<SweepRow> = values.par_iter().map(|&v| member(v)).collect::<Result<_>>()?;
    let reference = sweep.reference.map(|_| rows.pop().expect("reference row"));
    if let Some(reference) = &reference {
        if let Some(rs) = &reference.final_state {
            for row in rows.iter_mut() {
                row.difference = row.final_state.as_ref().map(|s| state_l2_difference(rs, s));
            }
        }
    }

    let mut csv = format!(
        "{},status,final_t,rho_linf,c_l2,omega_l2,x_energy,{},l2_difference_to_reference\n",
        sweep.param.name(),
        InequalityRatios::NAMES
            .iter()
            .map(|n| format!("max_{n}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    for row in rows.iter().chain(reference.iter()) {
        let mut vals = vec![row.final_t, row.rho_linf, row.c_l2, row.omega_l2, row.x_energy];
        vals.extend(row.max_ratios.as_array());
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.value,
            row.status.replace(',', ";"),
            vals.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(","),
            row.difference.map(fmt_float).unwrap_or_default()
        );
    }
    write_text(&out.join(SWEEP_CSV), &csv)?;
    if let Some(r) = reference {
        rows.push(r);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub study: &'static str,
    /// Step size or grid size of the finer member of the pair.
    pub parameter: f64,
    pub error: f64,
    pub order: Option<f64>,
}

/// Solves to `t_end` with a fixed step.
pub fn fixed_step_solve(state0: &State, params: &Params, dt: f64, t_end: f64) -> Result<State> {
    let step = StepControl {
        t_end,
        sample_interval: t_end,
        fixed_dt: Some(dt),
        dt_min: dt.min(StepControl::default().dt_min),
        dt_max: dt.max(StepControl::default().dt_max),
        ..StepControl::default()
    };
    integrate(state0, params, &step, &mut [])
}

/// Observed order from three solutions at step sizes `h, h/r, h/r²`.
pub fn observed_order(coarse: f64, fine: f64, refinement: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).ln() / refinement.ln())
}

/// Temporal self-convergence and spatial refinement studies.
pub fn run_convergence(config: &RunConfig, out: &Path, opts: &RunOptions) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    create_dir(out)?;
    let cv = &config.convergence;
    let grid = config.grid.build()?;
    let state0 = build_initial_state(&grid, &config.ic)?;

    let mut rows = Vec::new();
    let sols: Vec<State> = cv
        .dts
        .iter()
        .map(|&dt| {
            opts.log(format!("temporal study: dt = {dt}"));
            fixed_step_solve(&state0, &config.params, dt, cv.t_end)
        })
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = sols
        .windows(2)
        .map(|w| state_l2_difference(&w[1], &w[0]))
        .collect();
    for (i, d) in diffs.iter().enumerate() {
        let order = (i > 0)
            .then(|| observed_order(diffs[i - 1], *d, cv.dts[i] / cv.dts[i + 1]))
            .flatten();
        rows.push(ConvergenceRow {
            study: "time",
            parameter: cv.dts[i + 1],
            error: *d,
            order,
        });
    }

    let mut ns = cv.ns.clone();
    ns.sort_unstable();
    let finest = *ns.last().unwrap();
    let solve_at = |n: usize| -> Result<State> {
        opts.log(format!("spatial study: n = {n}"));
        let g = Grid::new(n, config.grid.length)?;
        let s0 = build_initial_state(&g, &config.ic)?;
        fixed_step_solve(&s0, &config.params, cv.dt_space, cv.t_end)
    };
    let reference = solve_at(finest)?;
    let mut prev: Option<(usize, f64)> = None;
    for &n in &ns[..ns.len() - 1] {
        let s = solve_at(n)?;
        let err = state_l2_difference(&reference, &s);
        let order = prev.and_then(|(pn, pe)| observed_order(pe, err, n as f64 / pn as f64));
        rows.push(ConvergenceRow {
            study: "space",
            parameter: n as f64,
            error: err,
            order,
        });
        prev = Some((n, err));
    }

    let mut csv = String::from("study,parameter,error,observed_order\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.study,
            r.parameter,
            fmt_float(r.error),
            r.order.map(fmt_float).unwrap_or_default()
        );
    }
    write_text(&out.join(CONVERGENCE_CSV), &csv)?;
    opts.log(csv.trim_end());
    Ok(rows)
}
