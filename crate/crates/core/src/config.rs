//! Plain-text run configuration.
//!
//! One `section.key = value` assignment per line; `#` starts a comment.
//! Lists are comma separated. Lengths accept a trailing `pi`, as in `2pi`.
//! `grid.n` and `ic.preset` are required, everything else has a default.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{KseError, Result};
use crate::initial::{InitialSpec, Preset};
use crate::model::{Params, PhiPerturbation};
use crate::picard::PicardControl;
use crate::spectral::Grid;
use crate::timestepper::StepControl;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagSpec {
    /// Exponents `q > 2` for the `L^q` columns; the first is used for Y
    /// and the q-dependent auditors.
    pub q: Vec<f64>,
    pub rho_bound: f64,
    /// Number of states at which the dissipation identity is audited.
    pub dissipation_samples: usize,
}

impl Default for DiagSpec {
    fn default() -> Self {
        DiagSpec {
            q: vec![4.0],
            rho_bound: crate::diagnostics::DEFAULT_RHO_BOUND,
            dissipation_samples: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutSpec {
    pub dir: PathBuf,
    /// Snapshot cadence; zero writes only the final state.
    pub snapshot_interval: f64,
}

impl Default for OutSpec {
    fn default() -> Self {
        OutSpec {
            dir: PathBuf::from("out"),
            snapshot_interval: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    AmplitudeC,
    NuU,
    N,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::AmplitudeC => "amplitude_c",
            SweepParam::NuU => "nu_u",
            SweepParam::N => "n",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "amplitude_c" => Ok(SweepParam::AmplitudeC),
            "nu_u" => Ok(SweepParam::NuU),
            "n" => Ok(SweepParam::N),
            _ => Err(format!("sweep.param must be amplitude_c, nu_u or n, got '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Extra run whose final state every sweep member is compared with.
    pub reference: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSpec {
    pub t_end: f64,
    /// Fixed step sizes for the temporal study, coarse to fine.
    pub dts: Vec<f64>,
    /// Grid sizes for the spatial study, coarse to fine; the finest is the
    /// reference.
    pub ns: Vec<usize>,
    /// Step used by every member of the spatial study.
    pub dt_space: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec {
            t_end: 0.5,
            dts: vec![2e-3, 1e-3, 5e-4],
            ns: vec![32, 64, 128],
            dt_space: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub ic: InitialSpec,
    pub step: StepControl,
    pub diag: DiagSpec,
    pub out: OutSpec,
    pub picard: PicardControl,
    pub sweep: Option<SweepSpec>,
    pub convergence: ConvergenceSpec,
}

impl RunConfig {
    /// Canonical small-data run: n = 256, L = 2π, ν_ρ = ν_c = 1, ν_u = 0,
    /// gravity (0, −1), A_c = 0.01, T = 5.
    pub fn canonical() -> Self {
        RunConfig {
            grid: GridSpec {
                n: 256,
                length: 2.0 * PI,
            },
            params: Params::default(),
            ic: InitialSpec::default(),
            step: StepControl {
                t_end: 5.0,
                ..StepControl::default()
            },
            diag: DiagSpec::default(),
            out: OutSpec::default(),
            picard: PicardControl::default(),
            sweep: None,
            convergence: ConvergenceSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.params.validate()?;
        self.ic.validate()?;
        self.step.validate()?;
        self.picard.validate()?;
        crate::diagnostics::validate_q_list(&self.diag.q)?;
        Ok(())
    }

    /// Writes every key, so that parsing the output reproduces `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");

        kv("grid.n", self.grid.n.to_string());
        kv("grid.L", self.grid.length.to_string());

        let p = &self.params;
        kv("params.nu_rho", p.nu_rho.to_string());
        kv("params.nu_c", p.nu_c.to_string());
        kv("params.nu_u", p.nu_u.to_string());
        kv("params.gravity", list(&p.gravity));
        if let Some(phi) = &p.phi_perturbation {
            kv("params.phi_amplitude", phi.amplitude.to_string());
            kv("params.phi_mode", format!("{}, {}", phi.mode[0], phi.mode[1]));
        }
        kv("params.m", p.sobolev_m.to_string());
        kv("params.dealias", p.dealias.to_string());
        kv("params.clip_negative", p.clip_negative.to_string());
        kv("params.couplings", p.couplings.to_string());

        let ic = &self.ic;
        kv("ic.preset", ic.preset.to_string());
        kv("ic.amplitude_c", ic.amplitude_c.to_string());
        kv("ic.rho_mean", ic.rho_mean.to_string());
        kv("ic.rho_amplitude", ic.rho_amplitude.to_string());
        kv("ic.omega_amplitude", ic.omega_amplitude.to_string());
        kv("ic.width", ic.width.to_string());
        kv("ic.center", list(&ic.center));
        kv("ic.seed", ic.seed.to_string());
        if let Some(path) = &ic.path {
            kv("ic.path", path.display().to_string());
        }

        let st = &self.step;
        kv("step.cfl", st.cfl.to_string());
        kv("step.dt_max", st.dt_max.to_string());
        kv("step.dt_min", st.dt_min.to_string());
        kv("step.t_end", st.t_end.to_string());
        kv("step.sample_interval", st.sample_interval.to_string());
        if let Some(dt) = st.fixed_dt {
            kv("step.dt", dt.to_string());
        }

        kv("diag.q", list(&self.diag.q));
        kv("diag.rho_bound", self.diag.rho_bound.to_string());
        kv("diag.dissipation_samples", self.diag.dissipation_samples.to_string());

        kv("out.dir", self.out.dir.display().to_string());
        kv("out.snapshot_interval", self.out.snapshot_interval.to_string());

        let pc = &self.picard;
        kv("picard.t_end", pc.t_end.to_string());
        kv("picard.dt", pc.dt.to_string());
        kv("picard.tol", pc.tol.to_string());
        kv("picard.max_iter", pc.max_iter.to_string());

        if let Some(sw) = &self.sweep {
            kv("sweep.param", sw.param.name().to_string());
            kv("sweep.values", list(&sw.values));
            if let Some(r) = sw.reference {
                kv("sweep.reference", r.to_string());
            }
        }

        let cv = &self.convergence;
        kv("convergence.t_end", cv.t_end.to_string());
        kv("convergence.dts", list(&cv.dts));
        kv(
            "convergence.ns",
            cv.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
        );
        kv("convergence.dt_space", cv.dt_space.to_string());
        s
    }
}

/// Raw assignments with their line numbers; keys are removed as they are
/// consumed so leftovers can be reported as unknown.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

fn err(line: usize, message: impl Into<String>) -> KseError {
    KseError::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(prefix) = t.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = if prefix.is_empty() {
            1.0
        } else {
            prefix.parse::<f64>().ok()?
        };
        return Some(factor * PI);
    }
    t.parse::<f64>().ok()
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(err(line, "empty key or value"));
            }
            if let Some((first, _)) = map.insert(key.clone(), (line, value)) {
                return Err(err(line, format!("`{key}` already set on line {first}")));
            }
        }
        Ok(Entries { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn value<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => parse(&v).map_err(|m| err(line, format!("`{key}`: {m}"))),
        }
    }

    fn required<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match self.take(key) {
            None => Err(err(0, format!("missing required key `{key}`"))),
            Some((line, v)) => parse(&v).map_err(|m| err(line, format!("`{key}`: {m}"))),
        }
    }

    fn f64_in(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64> {
        self.value(key, default, |v| {
            let x = parse_f64(v).ok_or_else(|| format!("`{v}` is not a number"))?;
            if ok(x) {
                Ok(x)
            } else {
                Err(format!("{x} out of range, expected {range}"))
            }
        })
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(err(line, format!("unknown key `{key}`"))),
        }
    }
}

fn f64_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| parse_f64(s).ok_or_else(|| format!("`{}` is not a number", s.trim())))
        .collect()
}

fn pair(v: &str) -> std::result::Result<[f64; 2], String> {
    let l = f64_list(v)?;
    match l.as_slice() {
        [a, b] if a.is_finite() && b.is_finite() => Ok([*a, *b]),
        _ => Err("expected two finite numbers".into()),
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn parse_uint<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = Entries::parse(text)?;
    let base = RunConfig::canonical();

    let grid = GridSpec {
        n: e.required("grid.n", |v| {
            let n: usize = parse_uint(v)?;
            if n >= 8 && n.is_power_of_two() {
                Ok(n)
            } else {
                Err(format!("{n} is not a power of two >= 8"))
            }
        })?,
        length: e.f64_in("grid.L", base.grid.length, positive, "> 0")?,
    };

    let dp = Params::default();
    let phi_amp = e.take("params.phi_amplitude");
    let phi_mode = e.take("params.phi_mode");
    let phi_perturbation = match (phi_amp, phi_mode) {
        (None, None) => None,
        (Some((line, a)), mode) => {
            let amplitude = parse_f64(&a)
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, "`params.phi_amplitude`: not a finite number"))?;
            let mode = match mode {
                None => [1, 0],
                Some((ml, m)) => {
                    let parts: Vec<_> = m.split(',').map(|s| s.trim().parse::<i64>()).collect();
                    match parts.as_slice() {
                        [Ok(a), Ok(b)] => [*a, *b],
                        _ => return Err(err(ml, "`params.phi_mode`: expected two integers")),
                    }
                }
            };
            Some(PhiPerturbation { amplitude, mode })
        }
        (None, Some((line, _))) => {
            return Err(err(line, "`params.phi_mode` needs `params.phi_amplitude`"))
        }
    };
    let params = Params {
        nu_rho: e.f64_in("params.nu_rho", dp.nu_rho, positive, "> 0")?,
        nu_c: e.f64_in("params.nu_c", dp.nu_c, positive, "> 0")?,
        nu_u: e.f64_in("params.nu_u", dp.nu_u, nonneg, ">= 0")?,
        gravity: e.value("params.gravity", dp.gravity, pair)?,
        phi_perturbation,
        sobolev_m: e.value("params.m", dp.sobolev_m, |v| {
            let m: u32 = parse_uint(v)?;
            if m >= 3 {
                Ok(m)
            } else {
                Err(format!("{m} < 3"))
            }
        })?,
        dealias: e.value("params.dealias", dp.dealias, parse_bool)?,
        clip_negative: e.value("params.clip_negative", dp.clip_negative, parse_bool)?,
        couplings: e.value("params.couplings", dp.couplings, parse_bool)?,
    };

    let di = InitialSpec::default();
    let ic = InitialSpec {
        preset: e.required("ic.preset", |v| v.parse::<Preset>())?,
        amplitude_c: e.f64_in("ic.amplitude_c", di.amplitude_c, nonneg, ">= 0")?,
        rho_mean: e.f64_in("ic.rho_mean", di.rho_mean, finite, "finite")?,
        rho_amplitude: e.f64_in("ic.rho_amplitude", di.rho_amplitude, finite, "finite")?,
        omega_amplitude: e.f64_in("ic.omega_amplitude", di.omega_amplitude, finite, "finite")?,
        width: e.f64_in("ic.width", di.width, positive, "> 0")?,
        center: e.value("ic.center", di.center, pair)?,
        seed: e.value("ic.seed", di.seed, parse_uint)?,
        path: e.value("ic.path", None, |v| Ok(Some(PathBuf::from(v))))?,
    };
    if ic.preset == Preset::Snapshot && ic.path.is_none() {
        return Err(err(0, "`ic.preset = snapshot` requires `ic.path`"));
    }
    if let Some(p) = &ic.path {
        if !p.exists() {
            return Err(err(0, format!("`ic.path`: {} does not exist", p.display())));
        }
    }

    let ds = &base.step;
    let step = StepControl {
        cfl: e.f64_in("step.cfl", ds.cfl, |x| x > 0.0 && x <= 1.0, "(0, 1]")?,
        dt_max: e.f64_in("step.dt_max", ds.dt_max, positive, "> 0")?,
        dt_min: e.f64_in("step.dt_min", ds.dt_min, positive, "> 0")?,
        t_end: e.f64_in("step.t_end", ds.t_end, nonneg, ">= 0")?,
        sample_interval: e.f64_in("step.sample_interval", ds.sample_interval, positive, "> 0")?,
        fixed_dt: e.value("step.dt", None, |v| match parse_f64(v) {
            Some(x) if positive(x) => Ok(Some(x)),
            _ => Err(format!("`{v}` is not a positive number")),
        })?,
    };
    if step.dt_min > step.dt_max {
        return Err(err(0, "`step.dt_min` exceeds `step.dt_max`"));
    }

    let dd = DiagSpec::default();
    let diag = DiagSpec {
        q: e.value("diag.q", dd.q, |v| {
            let l = f64_list(v)?;
            crate::diagnostics::validate_q_list(&l).map_err(|e| e.to_string())?;
            Ok(l)
        })?,
        rho_bound: e.f64_in("diag.rho_bound", dd.rho_bound, positive, "> 0")?,
        dissipation_samples: e.value("diag.dissipation_samples", dd.dissipation_samples, parse_uint)?,
    };

    let out = OutSpec {
        dir: e.value("out.dir", base.out.dir.clone(), |v| Ok(PathBuf::from(v)))?,
        snapshot_interval: e.f64_in(
            "out.snapshot_interval",
            base.out.snapshot_interval,
            nonneg,
            ">= 0",
        )?,
    };

    let dpc = PicardControl::default();
    let picard = PicardControl {
        t_end: e.f64_in("picard.t_end", dpc.t_end, positive, "> 0")?,
        dt: e.f64_in("picard.dt", dpc.dt, positive, "> 0")?,
        tol: e.f64_in("picard.tol", dpc.tol, positive, "> 0")?,
        max_iter: e.value("picard.max_iter", dpc.max_iter, |v| {
            let m: usize = parse_uint(v)?;
            if m >= 2 {
                Ok(m)
            } else {
                Err("must be >= 2".into())
            }
        })?,
    };

    let sweep_param = e.take("sweep.param");
    let sweep_values = e.take("sweep.values");
    let sweep_ref = e.take("sweep.reference");
    let sweep = match (sweep_param, sweep_values) {
        (None, None) => {
            if let Some((line, _)) = sweep_ref {
                return Err(err(line, "`sweep.reference` needs `sweep.param` and `sweep.values`"));
            }
            None
        }
        (Some((pl, p)), Some((vl, v))) => {
            let param: SweepParam = p.parse().map_err(|m: String| err(pl, m))?;
            let values = f64_list(&v).map_err(|m| err(vl, format!("`sweep.values`: {m}")))?;
            if values.is_empty() {
                return Err(err(vl, "`sweep.values` is empty"));
            }
            let check = |x: f64, line: usize| -> Result<()> {
                let ok = match param {
                    SweepParam::AmplitudeC | SweepParam::NuU => nonneg(x),
                    SweepParam::N => {
                        x.fract() == 0.0 && x >= 8.0 && (x as usize).is_power_of_two()
                    }
                };
                if ok {
                    Ok(())
                } else {
                    Err(err(line, format!("sweep value {x} invalid for {}", param.name())))
                }
            };
            for &x in &values {
                check(x, vl)?;
            }
            let reference = match sweep_ref {
                None => None,
                Some((rl, r)) => {
                    let x = parse_f64(&r)
                        .ok_or_else(|| err(rl, "`sweep.reference` is not a number"))?;
                    check(x, rl)?;
                    Some(x)
                }
            };
            Some(SweepSpec {
                param,
                values,
                reference,
            })
        }
        (Some((line, _)), None) | (None, Some((line, _))) => {
            return Err(err(line, "`sweep.param` and `sweep.values` go together"))
        }
    };

    let dc = ConvergenceSpec::default();
    let convergence = ConvergenceSpec {
        t_end: e.f64_in("convergence.t_end", dc.t_end, positive, "> 0")?,
        dts: e.value("convergence.dts", dc.dts, |v| {
            let l = f64_list(v)?;
            if l.len() >= 3 && l.iter().all(|x| positive(*x)) {
                Ok(l)
            } else {
                Err("need at least three positive step sizes".into())
            }
        })?,
        ns: e.value("convergence.ns", dc.ns, |v| {
            let l: Vec<usize> = v
                .split(',')
                .map(|s| parse_uint(s.trim()))
                .collect::<std::result::Result<_, _>>()?;
            if l.len() >= 2 && l.iter().all(|n| *n >= 8 && n.is_power_of_two()) {
                Ok(l)
            } else {
                Err("need at least two powers of two >= 8".into())
            }
        })?,
        dt_space: e.f64_in("convergence.dt_space", dc.dt_space, positive, "> 0")?,
    };

    e.finish()?;
    let config = RunConfig {
        grid,
        params,
        ic,
        step,
        diag,
        out,
        picard,
        sweep,
        convergence,
    };
    config.validate().map_err(|e| match e {
        KseError::Config { .. } => e,
        other => err(0, other.to_string()),
    })?;
    Ok(config)
}
