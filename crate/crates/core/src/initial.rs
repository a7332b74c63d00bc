//! Analytic initial-data families.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KseError, Result};
use crate::model::State;
use crate::snapshot;
use crate::spectral::{Grid, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `ρ = ρ̄ + a_ρ cos κx1 cos κx2`, `c = A_c (1 + cos κx1)/2`,
    /// `ω = a_ω sin κx1 sin κx2` with `κ = 2π/L`.
    Canonical,
    /// Periodic von Mises bump `exp(w (cos κ(x1−a1) + cos κ(x2−a2) − 2))`
    /// in ρ and c, canonical ω.
    Bump,
    /// Random band-limited fields (frequencies up to 4) drawn from `seed`.
    Random,
    Zero,
    /// Resume from a snapshot file.
    Snapshot,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Canonical,
        Preset::Bump,
        Preset::Random,
        Preset::Zero,
        Preset::Snapshot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Canonical => "canonical",
            Preset::Bump => "bump",
            Preset::Random => "random",
            Preset::Zero => "zero",
            Preset::Snapshot => "snapshot",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset '{s}', expected one of {}", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialSpec {
    pub preset: Preset,
    /// `A_c`, the size of `c₀`.
    pub amplitude_c: f64,
    pub rho_mean: f64,
    pub rho_amplitude: f64,
    pub omega_amplitude: f64,
    /// Concentration `w` of the bump preset.
    pub width: f64,
    pub center: [f64; 2],
    pub seed: u64,
    pub path: Option<PathBuf>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            preset: Preset::Canonical,
            amplitude_c: 0.01,
            rho_mean: 1.0,
            rho_amplitude: 0.5,
            omega_amplitude: 0.1,
            width: 4.0,
            center: [PI, PI],
            seed: 0,
            path: None,
        }
    }
}

impl InitialSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.amplitude_c,
            self.rho_mean,
            self.rho_amplitude,
            self.omega_amplitude,
            self.width,
            self.center[0],
            self.center[1],
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(KseError::InitialData("parameters must be finite".into()));
        }
        if self.amplitude_c < 0.0 {
            return Err(KseError::InitialData("amplitude_c must be >= 0".into()));
        }
        if self.width <= 0.0 {
            return Err(KseError::InitialData("bump width must be > 0".into()));
        }
        if self.preset == Preset::Snapshot && self.path.is_none() {
            return Err(KseError::InitialData("snapshot preset needs ic.path".into()));
        }
        Ok(())
    }
}

/// Zero-mean random field with frequencies up to 4 in each direction,
/// scaled to unit maximum modulus.
fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    const K: i32 = 4;
    let kappa = 2.0 * PI / grid.length();
    let mut modes = Vec::new();
    for m1 in 0..=K {
        for m2 in -K..=K {
            if m1 == 0 && m2 <= 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (m1 * m1 + m2 * m2) as f64);
            let a: f64 = rng.gen_range(-1.0..1.0) * decay;
            let b: f64 = rng.gen_range(-1.0..1.0) * decay;
            modes.push((m1 as f64, m2 as f64, a, b));
        }
    }
    let f = ScalarField::from_fn(grid, |x1, x2| {
        modes
            .iter()
            .map(|&(m1, m2, a, b)| {
                let p = kappa * (m1 * x1 + m2 * x2);
                a * p.cos() + b * p.sin()
            })
            .sum()
    });
    let peak = f.max_abs();
    if peak > 0.0 {
        f.scale(1.0 / peak)
    } else {
        f
    }
}

/// Builds `(ρ₀, c₀, ω₀)` on `grid`. Snapshot data must live on the same
/// grid. Negative ρ₀ or c₀ is rejected.
pub fn build_initial_state(grid: &Grid, spec: &InitialSpec) -> Result<State> {
    spec.validate()?;
    let kappa = 2.0 * PI / grid.length();
    let canonical_omega = |a: f64| {
        ScalarField::from_fn(grid, move |x1, x2| a * (kappa * x1).sin() * (kappa * x2).sin())
    };
    let state = match spec.preset {
        Preset::Canonical => {
            let (m, a, ac) = (spec.rho_mean, spec.rho_amplitude, spec.amplitude_c);
            State::new(
                0.0,
                ScalarField::from_fn(grid, |x1, x2| {
                    m + a * (kappa * x1).cos() * (kappa * x2).cos()
                }),
                ScalarField::from_fn(grid, |x1, _| ac * (1.0 + (kappa * x1).cos()) / 2.0),
                canonical_omega(spec.omega_amplitude),
            )?
        }
        Preset::Bump => {
            let [a1, a2] = spec.center;
            let w = spec.width;
            let bump = ScalarField::from_fn(grid, |x1, x2| {
                (w * ((kappa * (x1 - a1)).cos() + (kappa * (x2 - a2)).cos() - 2.0)).exp()
            });
            State::new(
                0.0,
                bump.map(|b| spec.rho_mean + spec.rho_amplitude * b),
                bump.scale(spec.amplitude_c),
                canonical_omega(spec.omega_amplitude),
            )?
        }
        Preset::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let r = random_field(grid, &mut rng);
            let c = random_field(grid, &mut rng);
            let w = random_field(grid, &mut rng);
            State::new(
                0.0,
                r.map(|v| spec.rho_mean + spec.rho_amplitude * v),
                c.map(|v| spec.amplitude_c * (1.0 + v) / 2.0),
                w.scale(spec.omega_amplitude),
            )?
        }
        Preset::Zero => State::zeros(grid),
        Preset::Snapshot => {
            let path = spec.path.as_ref().expect("validated");
            let s = snapshot::read_state(path)?;
            if s.grid() != grid {
                return Err(KseError::GridMismatch(format!(
                    "snapshot grid n = {}, L = {} differs from configured n = {}, L = {}",
                    s.grid().n(),
                    s.grid().length(),
                    grid.n(),
                    grid.length()
                )));
            }
            s
        }
    };
    check_nonnegative(&state)?;
    Ok(state)
}

fn check_nonnegative(state: &State) -> Result<()> {
    for (name, f) in [("rho", &state.rho), ("c", &state.c)] {
        let min = f.min();
        let tol = 1e-14 * f.max_abs().max(1.0);
        if min < -tol {
            return Err(KseError::InitialData(format!(
                "{name}_0 is negative (min {min:e})"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_values() {
        let grid = Grid::periodic(128).unwrap();
        let s = build_initial_state(&grid, &InitialSpec::default()).unwrap();
        assert!((s.rho.min() - 0.5).abs() < 1e-15);
        assert!((s.c.max() - 0.01).abs() < 1e-17);
        assert!(s.c.min().abs() < 1e-18);
        assert!(s.omega.mean().abs() < 1e-17);
    }

    #[test]
    fn zero_amplitude_gives_zero_c() {
        let grid = Grid::periodic(16).unwrap();
        let spec = InitialSpec {
            amplitude_c: 0.0,
            ..InitialSpec::default()
        };
        let s = build_initial_state(&grid, &spec).unwrap();
        assert_eq!(s.c.max_abs(), 0.0);
    }

    #[test]
    fn negative_density_rejected() {
        let grid = Grid::periodic(16).unwrap();
        let spec = InitialSpec {
            rho_mean: 0.2,
            ..InitialSpec::default()
        };
        assert!(matches!(
            build_initial_state(&grid, &spec),
            Err(KseError::InitialData(_))
        ));
    }

    #[test]
    fn random_is_seeded_and_nonnegative() {
        let grid = Grid::periodic(32).unwrap();
        let spec = InitialSpec {
            preset: Preset::Random,
            seed: 7,
            ..InitialSpec::default()
        };
        let a = build_initial_state(&grid, &spec).unwrap();
        let b = build_initial_state(&grid, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.c.min() >= 0.0 && a.rho.min() >= 0.5 - 1e-15);
        let other = build_initial_state(&grid, &InitialSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn bump_peaks_at_center() {
        let grid = Grid::periodic(32).unwrap();
        let spec = InitialSpec {
            preset: Preset::Bump,
            ..InitialSpec::default()
        };
        let s = build_initial_state(&grid, &spec).unwrap();
        assert!((s.c.max() - 0.01).abs() < 1e-15);
        assert!((s.c.at(16, 16) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn preset_names_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("heat".parse::<Preset>().is_err());
    }
}
