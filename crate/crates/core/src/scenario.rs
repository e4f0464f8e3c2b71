//! Run descriptions and built-in presets.
//!
//! A [`Scenario`] is the deserialized form of a `schema: 1` JSON config.
//! Structural problems are reported by the deserializer; [`Scenario::validate`]
//! checks values and cross-field rules and names the offending field path.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{SpectralDensity, SpectrumKind, ThermalConvention};
use crate::dicke::Basis;
use crate::evolve::{EvolutionParams, EvolveError, MqsConvention};

pub const SCHEMA_VERSION: u32 = 1;

/// `ħ/k_B` in K·s.
pub const HBAR_OVER_KB: f64 = 7.638_232_577_577_3e-12;

/// Largest accepted `N`; dense matrices have `(N+1)²` complex entries.
pub const MAX_PARTICLES: u32 = 2048;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("`{path}`: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

fn field_error(path: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Frequency unit of every number in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Frequencies in units of the spectrum's `ω_c`, times in `1/ω_c`.
    #[default]
    OmegaC,
    /// Angular frequencies in s⁻¹, times in s; enables `temperature_k`.
    Hz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_0: Option<f64>,
    /// Inverse temperature; `null` is zero temperature.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Bath temperature in kelvin, `units: "hz"` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    /// `[ω, G_0(ω)]` rows for `kind: "tabulated"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub kind: GridKind,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        let mut out: Vec<f64> = (0..self.count)
            .map(|i| {
                let s = i as f64 / last;
                match self.kind {
                    GridKind::Linear => self.start + s * (self.stop - self.start),
                    GridKind::Log => {
                        (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp()
                    }
                }
            })
            .collect();
        out[0] = self.start;
        out[self.count - 1] = self.stop;
        out
    }
}

/// Snapshot times as multiples of the formation time or as absolute times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotTimes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_fractions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl Default for SnapshotTimes {
    fn default() -> Self {
        Self {
            tau_fractions: Some(vec![1.0]),
            times: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    #[serde(default)]
    pub thermal: ThermalConvention,
    #[serde(default)]
    pub mqs: MqsConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Kernels,
    Snapshots,
    Report,
}

fn all_outputs() -> Vec<Output> {
    vec![Output::Kernels, Output::Snapshots, Output::Report]
}

fn default_phi() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub units: Units,
    pub spectrum: SpectrumSpec,
    pub n_particles: u32,
    pub theta: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub snapshot_times: SnapshotTimes,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default)]
    pub conventions: Conventions,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Free text carried into the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn positive(path: &str, value: f64) -> Result<f64, ScenarioError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(field_error(
            path,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

fn required(path: &str, value: Option<f64>) -> Result<f64, ScenarioError> {
    value.ok_or_else(|| field_error(path, "required for this spectrum kind"))
}

fn forbidden<T>(path: &str, value: &Option<T>, why: &str) -> Result<(), ScenarioError> {
    if value.is_some() {
        Err(field_error(path, format!("not allowed {why}")))
    } else {
        Ok(())
    }
}

impl Scenario {
    /// Checks values and cross-field rules.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA_VERSION {
            return Err(field_error(
                "schema",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(field_error("name", "must be nonempty"));
        }
        if self.n_particles == 0 || self.n_particles > MAX_PARTICLES {
            return Err(field_error(
                "n_particles",
                format!("must be in 1..={MAX_PARTICLES}, got {}", self.n_particles),
            ));
        }
        if !self.theta.is_finite() {
            return Err(field_error("theta", "must be finite"));
        }
        if !self.phi.is_finite() {
            return Err(field_error("phi", "must be finite"));
        }
        self.validate_grid()?;
        self.validate_snapshots()?;
        if self.outputs.is_empty() {
            return Err(field_error(
                "outputs",
                "must list at least one of kernels, snapshots, report",
            ));
        }
        self.spectral_density().map(|_| ())
    }

    fn validate_grid(&self) -> Result<(), ScenarioError> {
        let g = &self.time_grid;
        positive("time_grid.start", g.start)?;
        positive("time_grid.stop", g.stop)?;
        if g.count == 0 {
            return Err(field_error("time_grid.count", "must be ≥ 1"));
        }
        if g.count > 1 && g.stop <= g.start {
            return Err(field_error("time_grid.stop", "must exceed time_grid.start"));
        }
        if g.count > 1_000_000 {
            return Err(field_error("time_grid.count", "must be ≤ 1000000"));
        }
        Ok(())
    }

    fn validate_snapshots(&self) -> Result<(), ScenarioError> {
        let s = &self.snapshot_times;
        let (path, values) = match (&s.tau_fractions, &s.times) {
            (Some(v), None) => ("snapshot_times.tau_fractions", v),
            (None, Some(v)) => ("snapshot_times.times", v),
            _ => {
                return Err(field_error(
                    "snapshot_times",
                    "exactly one of tau_fractions or times must be given",
                ))
            }
        };
        for (i, &t) in values.iter().enumerate() {
            let here = format!("{path}[{i}]");
            if !(t.is_finite() && t >= 0.0) {
                return Err(field_error(
                    &here,
                    format!("must be finite and ≥ 0, got {t}"),
                ));
            }
            if i > 0 && t <= values[i - 1] {
                return Err(field_error(&here, "values must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Inverse temperature in the config's time unit.
    pub fn beta(&self) -> Result<Option<f64>, ScenarioError> {
        let s = &self.spectrum;
        match (s.beta, s.temperature_k) {
            (Some(_), Some(_)) => Err(field_error(
                "spectrum.temperature_k",
                "give either beta or temperature_k, not both",
            )),
            (Some(b), None) => {
                if b.is_infinite() && b > 0.0 {
                    Ok(None)
                } else {
                    positive("spectrum.beta", b).map(Some)
                }
            }
            (None, Some(t)) => {
                if self.units != Units::Hz {
                    return Err(field_error(
                        "spectrum.temperature_k",
                        "requires units = \"hz\"; use beta in omega_c units",
                    ));
                }
                if t == 0.0 {
                    return Ok(None);
                }
                Ok(Some(HBAR_OVER_KB / positive("spectrum.temperature_k", t)?))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity, ScenarioError> {
        let s = &self.spectrum;
        let numeric = |path: &str, e: crate::bath::SpectrumError| field_error(path, e.to_string());
        let base = match s.kind {
            SpectrumKind::Ohmic => {
                forbidden("spectrum.omega_0", &s.omega_0, "for kind ohmic")?;
                forbidden("spectrum.table", &s.table, "for kind ohmic")?;
                let alpha = required("spectrum.alpha", s.alpha)?;
                let wc = required("spectrum.omega_c", s.omega_c)?;
                SpectralDensity::ohmic(alpha, wc).map_err(|e| numeric("spectrum", e))?
            }
            SpectrumKind::Lorentzian => {
                forbidden("spectrum.table", &s.table, "for kind lorentzian")?;
                let alpha = required("spectrum.alpha", s.alpha)?;
                let wc = required("spectrum.omega_c", s.omega_c)?;
                let w0 = required("spectrum.omega_0", s.omega_0)?;
                SpectralDensity::lorentzian(alpha, wc, w0).map_err(|e| numeric("spectrum", e))?
            }
            SpectrumKind::Tabulated => {
                forbidden("spectrum.omega_c", &s.omega_c, "for kind tabulated")?;
                forbidden("spectrum.omega_0", &s.omega_0, "for kind tabulated")?;
                let table = s
                    .table
                    .as_ref()
                    .ok_or_else(|| field_error("spectrum.table", "required for kind tabulated"))?;
                let sd = SpectralDensity::tabulated(table.iter().map(|r| (r[0], r[1])).collect())
                    .map_err(|e| numeric("spectrum.table", e))?;
                match s.alpha {
                    // Scales the tabulated values.
                    Some(a) => sd.with_alpha(a).map_err(|e| numeric("spectrum.alpha", e))?,
                    None => sd,
                }
            }
        };
        base.with_beta(self.beta()?)
            .map(|sd| sd.with_thermal_convention(self.conventions.thermal))
            .map_err(|e| numeric("spectrum.beta", e))
    }

    pub fn evolution_params(&self) -> Result<EvolutionParams, ScenarioError> {
        let sd = self.spectral_density()?;
        EvolutionParams::coherent(
            sd,
            self.n_particles,
            self.theta,
            self.phi,
            self.conventions.mqs,
        )
        .map_err(|e: EvolveError| field_error("n_particles", e.to_string()))
    }

    pub fn has_output(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Scenario, ScenarioError> {
        let mut out = self.clone();
        match axis {
            SweepAxis::N => {
                if !(value.is_finite()
                    && value >= 1.0
                    && value.fract() == 0.0
                    && value <= MAX_PARTICLES as f64)
                {
                    return Err(field_error(
                        "n_particles",
                        format!("sweep value {value} is not a valid particle count"),
                    ));
                }
                out.n_particles = value as u32;
            }
            SweepAxis::Beta => {
                out.spectrum.temperature_k = None;
                out.spectrum.beta = Some(value);
            }
            SweepAxis::Alpha => out.spectrum.alpha = Some(value),
            SweepAxis::Omega0 => {
                if self.spectrum.kind != SpectrumKind::Lorentzian {
                    return Err(field_error(
                        "spectrum.omega_0",
                        "sweep axis omega_0 needs a lorentzian spectrum",
                    ));
                }
                out.spectrum.omega_0 = Some(value);
            }
        }
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "omega_0")]
    Omega0,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [
        SweepAxis::N,
        SweepAxis::Beta,
        SweepAxis::Alpha,
        SweepAxis::Omega0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "N",
            SweepAxis::Beta => "beta",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Omega0 => "omega_0",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown sweep axis `{s}` (expected N, beta, alpha or omega_0)"))
    }
}

/// `α` placing the Lorentzian (`ω_c = 1`, `ω_0 = 10`, zero temperature)
/// formation time at `t = 100`. `t f(t)` is linear in `α`, so
/// `α = (π/2) / (100 f_1(100))` with `f_1` the kernel at `α = 1`.
pub const FIG2_ALPHA: f64 = 4.298762165503265e-2;

pub const PRESETS: [&str; 4] = ["fig1", "fig2", "phonon", "cavity"];

pub fn presets() -> Vec<&'static str> {
    PRESETS.to_vec()
}

fn spec(kind: SpectrumKind, alpha: f64, omega_c: f64, omega_0: Option<f64>) -> SpectrumSpec {
    SpectrumSpec {
        kind,
        alpha: Some(alpha),
        omega_c: Some(omega_c),
        omega_0,
        beta: None,
        temperature_k: None,
        table: None,
    }
}

fn log_grid(start: f64, stop: f64, count: usize) -> TimeGrid {
    TimeGrid {
        kind: GridKind::Log,
        start,
        stop,
        count,
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    let base =
        |name: &str, units, spectrum, n_particles, time_grid, snapshot_times, notes: &str| {
            Scenario {
                schema: SCHEMA_VERSION,
                name: name.to_string(),
                units,
                spectrum,
                n_particles,
                theta: FRAC_PI_2,
                phi: 0.0,
                time_grid,
                snapshot_times,
                basis: Basis::Lx,
                conventions: Conventions::default(),
                outputs: all_outputs(),
                output_dir: None,
                notes: Some(notes.to_string()),
            }
        };
    let fractions = |v: &[f64]| SnapshotTimes {
        tau_fractions: Some(v.to_vec()),
        times: None,
    };
    let scenario = match name {
        "fig1" => base(
            "fig1",
            Units::OmegaC,
            spec(SpectrumKind::Ohmic, 2.5e-5, 1.0, None),
            50,
            log_grid(1e-2, 1e6, 161),
            fractions(&[0.3, 0.6, 0.9, 1.0, 1.2]),
            "Ohmic bath, eta = sqrt(alpha) omega_c = 0.005 omega_c, N = 50, equatorial initial state",
        ),
        "fig2" => base(
            "fig2",
            Units::OmegaC,
            spec(SpectrumKind::Lorentzian, FIG2_ALPHA, 1.0, Some(10.0)),
            50,
            log_grid(1e-2, 1e4, 121),
            SnapshotTimes {
                tau_fractions: None,
                times: Some(vec![30.0, 100.0]),
            },
            "Lorentzian of width omega_c centred at 10 omega_c; alpha = (pi/2)/(100 f_1(100)) puts the formation time at 100/omega_c",
        ),
        "phonon" => {
            let mut s = spec(SpectrumKind::Ohmic, 1e-6, 1e13, None);
            s.temperature_k = Some(1e-4);
            base(
                "phonon",
                Units::Hz,
                s,
                200,
                log_grid(1e-16, 1e-5, 111),
                fractions(&[1.0]),
                "Ohmic phonon bath, Debye cutoff 1e13 s^-1, alpha = 1e-6, T = 0.1 mK",
            )
        }
        "cavity" => {
            let (eta, wc, w0) = (1e6_f64, 1e4_f64, 1e8_f64);
            let alpha = eta * eta / (wc * (FRAC_PI_2 + (w0 / wc).atan()));
            base(
                "cavity",
                Units::Hz,
                spec(SpectrumKind::Lorentzian, alpha, wc, Some(w0)),
                50,
                log_grid(1e-10, 1e-1, 91),
                fractions(&[1.0]),
                "Lorentzian cavity line, width 1e4 s^-1 at 1e8 s^-1, total coupling eta = 1e6 s^-1, zero temperature",
            )
        }
        _ => return None,
    };
    Some(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in presets() {
            let s = preset(name).unwrap();
            s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn cavity_total_coupling_is_eta() {
        let sd = preset("cavity").unwrap().spectral_density().unwrap();
        assert!((sd.total_coupling().unwrap() / 1e6 - 1.0).abs() < 1e-9);
        let sd = preset("fig1").unwrap().spectral_density().unwrap();
        assert!((sd.total_coupling().unwrap() / 5e-3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_endpoints() {
        let v = log_grid(1e-2, 1e6, 161).values();
        assert_eq!(v.len(), 161);
        assert_eq!(v[0], 1e-2);
        assert_eq!(v[160], 1e6);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let lin = TimeGrid {
            kind: GridKind::Linear,
            start: 1.0,
            stop: 2.0,
            count: 3,
        };
        assert_eq!(lin.values(), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn temperature_rules() {
        let mut s = preset("fig1").unwrap();
        s.spectrum.temperature_k = Some(1.0);
        assert_eq!(s.validate().unwrap_err().path, "spectrum.temperature_k");
        let mut s = preset("phonon").unwrap();
        let beta = s.beta().unwrap().unwrap();
        assert!((beta - HBAR_OVER_KB / 1e-4).abs() < 1e-20);
        s.spectrum.beta = Some(1.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn kind_specific_fields() {
        let mut s = preset("fig1").unwrap();
        s.spectrum.omega_0 = Some(3.0);
        assert_eq!(s.validate().unwrap_err().path, "spectrum.omega_0");
        let mut s = preset("fig2").unwrap();
        s.spectrum.omega_0 = None;
        assert_eq!(s.validate().unwrap_err().path, "spectrum.omega_0");
        assert!(preset("fig1")
            .unwrap()
            .with_axis(SweepAxis::Omega0, 2.0)
            .is_err());
        assert!(preset("fig1")
            .unwrap()
            .with_axis(SweepAxis::N, 2.5)
            .is_err());
        assert_eq!(
            preset("fig1")
                .unwrap()
                .with_axis(SweepAxis::N, 8.0)
                .unwrap()
                .n_particles,
            8
        );
    }

    #[test]
    fn snapshot_rules() {
        let mut s = preset("fig1").unwrap();
        s.snapshot_times.times = Some(vec![1.0]);
        assert_eq!(s.validate().unwrap_err().path, "snapshot_times");
        let mut s = preset("fig1").unwrap();
        s.snapshot_times.tau_fractions = Some(vec![1.0, 0.5]);
        assert_eq!(
            s.validate().unwrap_err().path,
            "snapshot_times.tau_fractions[1]"
        );
    }

    #[test]
    fn axis_names_round_trip() {
        for a in SweepAxis::ALL {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
        }
        assert!("gamma".parse::<SweepAxis>().is_err());
    }
}
