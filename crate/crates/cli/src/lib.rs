//! Scenario runner behind the `mqs` binary.
//!
//! Every artifact is written to a temporary file in the output directory and
//! renamed into place, so a final path either holds a complete file or
//! nothing. Floats are written in shortest round-trip form, which makes
//! repeated runs byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mqs_core::evolve::{self, EvolutionParams, Snapshot};
use mqs_core::format;
use mqs_core::kernels::{self, KernelSummary, MarkovLimits};
use mqs_core::scenario::{self, Output, Scenario, SweepAxis};
use mqs_core::{MqsConvention, MqsReport, SpectralDensity, ThermalConvention};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error in {operation}: {message}")]
    Numeric {
        operation: &'static str,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric { .. } => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    fn numeric(operation: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Numeric {
            operation,
            message: err.to_string(),
        }
    }
}

impl From<scenario::ScenarioError> for CliError {
    fn from(e: scenario::ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a config, reporting the JSON path of the first structural error.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("`{path}`: {inner}"))
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// A config file path, or a preset name when no such file exists.
pub fn load_scenario(source: &str) -> Result<Scenario, CliError> {
    let path = Path::new(source);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        return parse_scenario(&text);
    }
    match scenario::preset(source) {
        Some(s) => Ok(s),
        None => Err(CliError::Config(format!(
            "`{source}` is neither a readable config file nor a preset ({})",
            scenario::presets().join(", ")
        ))),
    }
}

/// Command-line settings that take precedence over the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub thermal: Option<ThermalConvention>,
    pub mqs: Option<MqsConvention>,
}

impl Overrides {
    pub fn apply(&self, mut s: Scenario) -> Result<Scenario, CliError> {
        if let Some(dir) = &self.output_dir {
            s.output_dir = Some(dir.clone());
        }
        if let Some(t) = self.thermal {
            s.conventions.thermal = t;
        }
        if let Some(m) = self.mqs {
            s.conventions.mqs = m;
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn output_dir(s: &Scenario) -> PathBuf {
    s.output_dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(&s.name))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::Builder::new()
        .prefix(".mqs-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(&target))?;
    tmp.as_file().sync_all().map_err(io_err(&target))?;
    tmp.persist(&target).map_err(|e| CliError::Io {
        path: target.clone(),
        source: e.error,
    })?;
    Ok(target)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifact types serialize");
    out.push(b'\n');
    out
}

#[derive(Serialize)]
struct KernelArtifact<'a> {
    name: &'a str,
    units: scenario::Units,
    spectrum: &'a SpectralDensity,
    #[serde(flatten)]
    summary: KernelSummary,
    times: usize,
    csv: &'static str,
}

#[derive(Serialize)]
struct ReportArtifact<'a> {
    name: &'a str,
    units: scenario::Units,
    spectrum: &'a SpectralDensity,
    conventions: scenario::Conventions,
    markov_limits: &'a MarkovLimits,
    t_corr: f64,
    #[serde(flatten)]
    report: &'a MqsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<&'a str>,
}

/// One line of JSON printed after a successful `run`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub name: String,
    pub output_dir: PathBuf,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<MqsReport>,
}

fn relative_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn comments_for(s: &Scenario) -> Vec<String> {
    let mut c = vec![format!("scenario: {}", s.name)];
    c.push(format!(
        "units: {}",
        match s.units {
            scenario::Units::OmegaC => "omega_c (times in 1/omega_c)",
            scenario::Units::Hz => "angular frequency in 1/s (times in s)",
        }
    ));
    c
}

/// Executes the outputs requested by `s`.
pub fn run_scenario(s: &Scenario) -> Result<RunSummary, CliError> {
    s.validate()?;
    let dir = output_dir(s);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let sd = s.spectral_density()?;
    let params = s.evolution_params()?;
    let mut artifacts = Vec::new();
    let mut push = |p: PathBuf| artifacts.push(relative_name(&p));

    push(write_atomic(&dir, "scenario.json", &to_json(s))?);

    if s.has_output(Output::Kernels) {
        let grid = s.time_grid.values();
        let table = kernels::tabulate_kernels(&sd, &grid)
            .map_err(|e| CliError::numeric("tabulate_kernels", e))?;
        let mut comments = comments_for(s);
        comments.extend(table.warnings.iter().map(|w| format!("warning: {w}")));
        push(write_atomic(
            &dir,
            "kernels.csv",
            table.to_csv(&comments).as_bytes(),
        )?);
        let meta = KernelArtifact {
            name: &s.name,
            units: s.units,
            spectrum: &sd,
            summary: table.summary(),
            times: table.times.len(),
            csv: "kernels.csv",
        };
        push(write_atomic(&dir, "kernels.json", &to_json(&meta))?);
    }

    let needs_tau = s.has_output(Output::Report)
        || (s.has_output(Output::Snapshots) && s.snapshot_times.tau_fractions.is_some());
    let report = if needs_tau {
        Some(evolve::assess_mqs(&params).map_err(|e| CliError::numeric("assess_mqs", e))?)
    } else {
        None
    };

    if s.has_output(Output::Report) {
        let report = report.as_ref().expect("computed above");
        let t_corr =
            kernels::correlation_time(&sd).map_err(|e| CliError::numeric("correlation_time", e))?;
        let limits = kernels::markov_limits(&sd, 1e3 * t_corr)
            .map_err(|e| CliError::numeric("markov_limits", e))?;
        let artifact = ReportArtifact {
            name: &s.name,
            units: s.units,
            spectrum: &sd,
            conventions: s.conventions,
            markov_limits: &limits,
            t_corr,
            report,
            notes: s.notes.as_deref(),
        };
        push(write_atomic(&dir, "report.json", &to_json(&artifact))?);
    }

    if s.has_output(Output::Snapshots) {
        let (times, fractions) = match (&s.snapshot_times.tau_fractions, &s.snapshot_times.times) {
            (Some(fr), _) => {
                let tau = report.as_ref().expect("computed above").tau_mqs;
                (
                    fr.iter().map(|x| x * tau).collect::<Vec<_>>(),
                    Some(fr.clone()),
                )
            }
            (None, Some(t)) => (t.clone(), None),
            (None, None) => unreachable!("validated"),
        };
        let snaps = evolve::snapshot_series(&params, &times, s.basis)
            .map_err(|e| CliError::numeric("snapshot_series", e))?;
        for path in write_snapshots(&dir, s, &snaps, fractions.as_deref())? {
            push(path);
        }
    }

    Ok(RunSummary {
        status: "ok",
        name: s.name.clone(),
        output_dir: dir,
        artifacts,
        report,
    })
}

fn write_snapshots(
    dir: &Path,
    s: &Scenario,
    snaps: &[Snapshot],
    fractions: Option<&[f64]>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut index = csv::Writer::from_writer(Vec::new());
    index
        .write_record([
            "index",
            "time",
            "tau_fraction",
            "f",
            "gamma",
            "basis",
            "csv",
            "json",
        ])
        .map_err(|e| CliError::numeric("snapshot index", e))?;
    for (i, snap) in snaps.iter().enumerate() {
        let stem = format!("snapshot_{i:03}");
        let mut comments = comments_for(s);
        comments.push(format!("time: {}", format::float(snap.time)));
        comments.push(format!("basis: {}", basis_name(snap.rho.basis())));
        comments.push("rows m, columns m', both from +l down to -l; entries |rho_mm'|".into());
        written.push(write_atomic(
            dir,
            &format!("{stem}.csv"),
            snap.rho.magnitude_csv(&comments).as_bytes(),
        )?);
        written.push(write_atomic(
            dir,
            &format!("{stem}.json"),
            &to_json(&snap.meta()),
        )?);
        let fraction = fractions.map(|f| format::float(f[i])).unwrap_or_default();
        index
            .write_record([
                i.to_string(),
                format::float(snap.time),
                fraction,
                format::float(snap.f),
                format::float(snap.gamma),
                basis_name(snap.rho.basis()).to_string(),
                format!("{stem}.csv"),
                format!("{stem}.json"),
            ])
            .map_err(|e| CliError::numeric("snapshot index", e))?;
    }
    let bytes = index.into_inner().expect("in-memory writer");
    written.push(write_atomic(dir, "snapshots_index.csv", &bytes)?);
    Ok(written)
}

fn basis_name(b: mqs_core::Basis) -> &'static str {
    match b {
        mqs_core::Basis::Lz => "lz",
        mqs_core::Basis::Lx => "lx",
    }
}

/// One sweep point; `error` is set instead of the numbers when it failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: Option<MqsReport>,
    pub markov: Option<MarkovLimits>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "n_particles",
    "tau_mqs",
    "f_at_tau",
    "gamma_at_tau",
    "tau_gamma",
    "fidelity",
    "corner",
    "purity",
    "feasible",
    "n_max",
    "convention",
    "f_markov",
    "gamma_markov",
    "error",
];

fn sweep_point(base: &Scenario, axis: SweepAxis, value: f64) -> SweepRow {
    let attempt = || -> Result<(MqsReport, MarkovLimits), String> {
        let s = base.with_axis(axis, value).map_err(|e| e.to_string())?;
        let params: EvolutionParams = s.evolution_params().map_err(|e| e.to_string())?;
        let report = evolve::assess_mqs(&params).map_err(|e| format!("assess_mqs: {e}"))?;
        let limits = kernels::markov_limits_default(params.spectrum())
            .map_err(|e| format!("markov_limits: {e}"))?;
        Ok((report, limits))
    };
    match attempt() {
        Ok((report, markov)) => SweepRow {
            value,
            report: Some(report),
            markov: Some(markov),
            error: None,
        },
        Err(e) => SweepRow {
            value,
            report: None,
            markov: None,
            error: Some(e),
        },
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, CliError> = list
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::Config(format!("`--values`: `{v}` is not a number")))
        })
        .collect();
    let values = values?;
    if values.is_empty() {
        return Err(CliError::Config("`--values`: list is empty".into()));
    }
    Ok(values)
}

/// Evaluates every point on a pool of `jobs` workers; rows keep input order.
pub fn sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("`--values`: list is empty".into()));
    }
    base.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("`--jobs`: {e}")))?;
    Ok(pool.install(|| {
        values
            .par_iter()
            .map(|&v| sweep_point(base, axis, v))
            .collect()
    }))
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![axis.name()];
    header.extend(SWEEP_COLUMNS);
    w.write_record(&header).expect("in-memory writer");
    for row in rows {
        let mut rec = vec![format::float(row.value)];
        match (&row.report, &row.markov) {
            (Some(r), Some(m)) => {
                rec.extend([
                    r.n_particles.to_string(),
                    format::float(r.tau_mqs),
                    format::float(r.f_at_tau),
                    format::float(r.gamma_at_tau),
                    format::float(r.tau_gamma),
                    format::float(r.fidelity),
                    format::float(r.corner),
                    format::float(r.purity),
                    r.feasible.to_string(),
                    r.n_max.map(|n| n.to_string()).unwrap_or_default(),
                    convention_name(r.convention_used).to_string(),
                    format::float(m.f_markov),
                    format::float(m.gamma_markov),
                    String::new(),
                ]);
            }
            _ => {
                rec.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 1));
                rec.push(row.error.clone().unwrap_or_default());
            }
        }
        w.write_record(&rec).expect("in-memory writer");
    }
    w.into_inner().expect("in-memory writer")
}

fn convention_name(c: MqsConvention) -> &'static str {
    match c {
        MqsConvention::Antipodal => "paper",
        MqsConvention::TwistCompatible => "twist",
    }
}

/// Summary line printed after a `sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub status: &'static str,
    pub name: String,
    pub axis: SweepAxis,
    pub points: usize,
    pub failed: usize,
    pub csv: PathBuf,
}

/// Runs a sweep and writes `sweep_<axis>.csv` to the scenario's output directory.
pub fn run_sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
) -> Result<SweepSummary, CliError> {
    let rows = sweep(base, axis, values, jobs)?;
    let dir = output_dir(base);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let csv = write_atomic(
        &dir,
        &format!("sweep_{}.csv", axis.name()),
        &sweep_csv(axis, &rows),
    )?;
    Ok(SweepSummary {
        status: "ok",
        name: base.name.clone(),
        axis,
        points: rows.len(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        csv,
    })
}

/// Pretty JSON of a preset, suitable as a starting config.
pub fn emit_preset(name: &str) -> Result<String, CliError> {
    let s = scenario::preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}` (available: {})",
            scenario::presets().join(", ")
        ))
    })?;
    Ok(String::from_utf8(to_json(&s)).expect("JSON is UTF-8"))
}

/// Compact single-line JSON.
pub fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("summary types serialize")
}

#[derive(Serialize)]
pub struct ErrorLine<'a> {
    pub status: &'static str,
    pub exit_code: i32,
    pub error: &'a str,
}
