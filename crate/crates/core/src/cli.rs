//! The `fluxqed` command-line front end.
//!
//! Run settings come from a TOML file (`--config`) with `--set key=value`
//! overrides on top, e.g. `--set device.g=0.08 --set sweep.currents=[0.0]`.
//! Exit codes: 0 success, 2 configuration, 3 data or solver, 4 convergence.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::decay::fit_exponential_decay;
use crate::dressed::{LineKind, ModelConfig, DEFAULT_N_PH_MAX};
use crate::error::{DataError, FitError, ParamError, SolveError};
use crate::fit::{fit_spectrum, param_index, FitOptions, FitParams, Theta};
use crate::io;
use crate::junction::{ab_inferred_gap, ab_josephson_energy, FluxCalibration, JunctionDc, AL_GAP_V, TAS2_GAP_V};
use crate::peaks::{extract_peaks, PeakOptions};
use crate::plot::render_sweep_svg;
use crate::sweep::flux_sweep_spectrum;
use crate::synth::{synthesize_map, SynthSettings};
use crate::transmon::{ChargeBasisConfig, DEFAULT_CUTOFF_TOL, DEFAULT_N_CUT, DEFAULT_TRANSMON_LEVELS};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_CONVERGENCE: u8 = 4;

/// Cavity frequency used when a run does not set one, GHz. Not a measured value.
pub const PLACEHOLDER_OMEGA_C: f64 = 7.0;
/// Coupling used when a run does not set one, GHz. Not a measured value.
pub const PLACEHOLDER_G: f64 = 0.07;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    pub fn convergence(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONVERGENCE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Param(p) => p.into(),
            other => Self::data(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Param(p) => p.into(),
            other => Self::data(other.to_string()),
        }
    }
}

/// Anything wrong with an input file, including values that fail validation.
fn input_error(e: DataError) -> CliError {
    CliError::data(e.to_string())
}

/// Spectrum fits: any failure to reach a trustworthy optimum is exit 4.
fn fit_error(e: FitError) -> CliError {
    match e {
        FitError::Param(p) => p.into(),
        FitError::Solve(s) => s.into(),
        FitError::Data(d) => d.into(),
        other => CliError::convergence(other.to_string()),
    }
}

/// Decay fits: too few points is a data problem, not a convergence one.
fn decay_error(e: FitError) -> CliError {
    match e {
        FitError::InsufficientData { .. } => CliError::data(e.to_string()),
        other => fit_error(other),
    }
}

// ---------------------------------------------------------------------------
// command line

#[derive(Debug, Parser)]
#[command(name = "fluxqed", version, about = "Flux-tunable transmon spectroscopy: simulate, synthesize and fit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Line frequencies over a coil-current sweep, as CSV and optional SVG.
    Simulate(SimulateArgs),
    /// Extract peaks from a spectroscopy grid and fit the model to them.
    Fit(FitArgs),
    /// Ambegaokar–Baratoff consistency of a junction resistance and E_J or gap.
    Abcheck(AbArgs),
    /// Fit an exponential energy-relaxation trace.
    T1fit(T1Args),
    /// Render a synthetic spectroscopy grid from model parameters.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a configuration entry; VALUE is parsed as TOML.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sweep CSV (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// SVG rendering of the sweep.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Spectroscopy grid CSV.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Fit result JSON (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-peak residual CSV.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Spectroscopy grid CSV (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("known").required(true).args(["ej", "delta_uv"])))]
pub struct AbArgs {
    /// Normal-state resistance of the junction pair, ohms.
    #[arg(long = "rn")]
    pub r_n: f64,
    /// Measured Josephson energy E_J/h, GHz.
    #[arg(long)]
    pub ej: Option<f64>,
    /// Superconducting gap Δ/e, µV.
    #[arg(long = "delta-uv")]
    pub delta_uv: Option<f64>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct T1Args {
    /// Decay CSV with columns delay_us,population.
    pub input: PathBuf,
    /// Fit JSON (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// run configuration

/// Either an explicit list or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Count { start: f64, stop: f64, count: usize },
    Step { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let bad = |why: &str| CliError::config(format!("{name}: {why}"));
        let v = match *self {
            Axis::List(ref v) => v.clone(),
            Axis::Count { start, stop, count } => {
                if count == 0 {
                    return Err(bad("count must be >= 1"));
                }
                if count == 1 {
                    vec![start]
                } else {
                    (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect()
                }
            }
            Axis::Step { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) {
                    return Err(bad("need step > 0 and stop >= start"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|k| start + step * k as f64).collect()
            }
        };
        if v.is_empty() {
            return Err(bad("empty list"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite value"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    /// GHz.
    pub e_c: Option<f64>,
    /// GHz.
    pub ej_sum: Option<f64>,
    pub d: Option<f64>,
    /// GHz.
    pub omega_c: Option<f64>,
    /// GHz.
    pub g: Option<f64>,
    pub n_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_cut: usize,
    pub check_cutoff: bool,
    pub cutoff_tol: f64,
    pub n_q_levels: usize,
    pub n_ph_max: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_cut: DEFAULT_N_CUT,
            check_cutoff: true,
            cutoff_tol: DEFAULT_CUTOFF_TOL,
            n_q_levels: DEFAULT_TRANSMON_LEVELS,
            n_ph_max: DEFAULT_N_PH_MAX,
        }
    }
}

impl ModelSection {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            charge: ChargeBasisConfig { n_cut: self.n_cut, check_cutoff: self.check_cutoff, cutoff_tol: self.cutoff_tol },
            n_q_levels: self.n_q_levels,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Coil currents, A.
    pub currents: Option<Axis>,
    pub lines: Option<Vec<LineKind>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Probe frequencies, GHz.
    pub frequencies: Option<Axis>,
    /// Gaussian lineshape standard deviation, GHz.
    pub linewidth: f64,
    /// Standard deviation of line-centre jitter, GHz.
    pub freq_noise: f64,
    /// Unit peak height over amplitude-noise standard deviation.
    pub snr: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { frequencies: None, linewidth: 0.004, freq_noise: 0.0, snr: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Candidate lines; defaults to the sweep lines.
    pub lines: Option<Vec<LineKind>>,
    /// GHz.
    pub max_distance: f64,
    pub smoothing_window: usize,
    pub min_prominence: f64,
    /// Parameters held at their configured values.
    pub freeze: Vec<String>,
    /// Per-parameter `[lower, upper]` replacing the default box.
    pub bounds: BTreeMap<String, [f64; 2]>,
    pub max_outer: usize,
    pub max_iter: usize,
    pub xtol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let fo = FitOptions::new(Vec::new());
        let po = PeakOptions::default();
        Self {
            lines: None,
            max_distance: fo.max_distance,
            smoothing_window: po.smoothing_window,
            min_prominence: po.min_prominence,
            freeze: Vec::new(),
            bounds: BTreeMap::new(),
            max_outer: fo.max_outer,
            max_iter: fo.max_iter,
            xtol: fo.xtol,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub residuals: Option<PathBuf>,
}

/// Everything a run needs; each command reads the sections it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for synthetic-data commands.
    pub seed: Option<u64>,
    pub device: DeviceConfig,
    pub calibration: Option<FluxCalibration>,
    pub model: ModelSection,
    pub sweep: SweepConfig,
    pub synth: SynthConfig,
    pub fit: FitConfig,
    pub paths: PathsConfig,
}

/// Lines of the two-tone map: qubit, cavity, two-photon 0-2 and the three
/// Raman lines.
pub fn default_lines() -> Vec<LineKind> {
    ["0:0->1:0", "0:0->0:1", "0:0->2:0/2", "raman_A", "raman_B", "raman_C"]
        .iter()
        .map(|s| s.parse().expect("built-in line labels parse"))
        .collect()
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::config(format!("bad key `{key}`")))?;
    let mut t = table;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| CliError::config(format!("`{p}` in `{key}` is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn parse_override(s: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| CliError::config(format!("override `{s}` is not KEY=VALUE")))?;
    let raw = raw.trim();
    // bare words are taken as strings
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.trim().to_string(), value))
}

/// Parse a configuration document and apply `KEY=VALUE` overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        set_path(&mut table, &k, v)?;
    }
    table.try_into().map_err(|e: toml::de::Error| CliError::config(format!("config: {e}")))
}

pub fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config(&text, &args.overrides)
}

impl RunConfig {
    pub fn calibration(&self) -> Result<FluxCalibration, CliError> {
        let cal = self.calibration.ok_or_else(|| CliError::config("missing [calibration] section"))?;
        cal.validate()?;
        Ok(cal)
    }

    /// Device and calibration as a parameter vector. Unset cavity values fall
    /// back to placeholders with a warning.
    pub fn theta(&self) -> Result<Theta, CliError> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::config(format!("missing device.{name}")));
        let omega_c = self.device.omega_c.unwrap_or_else(|| {
            warn!("device.omega_c not set; using placeholder {PLACEHOLDER_OMEGA_C} GHz, which is not a measured value");
            PLACEHOLDER_OMEGA_C
        });
        let g = self.device.g.unwrap_or_else(|| {
            warn!("device.g not set; using placeholder {PLACEHOLDER_G} GHz, which is not a measured value");
            PLACEHOLDER_G
        });
        let cal = self.calibration()?;
        let theta = Theta {
            e_c: need(self.device.e_c, "e_c")?,
            ej_sum: need(self.device.ej_sum, "ej_sum")?,
            d: need(self.device.d, "d")?,
            omega_c,
            g,
            current_at_zero_flux: cal.current_at_zero_flux,
            current_per_flux_quantum: cal.current_per_flux_quantum,
        };
        theta.validate()?;
        Ok(theta)
    }

    pub fn currents(&self) -> Result<Vec<f64>, CliError> {
        self.sweep.currents.as_ref().ok_or_else(|| CliError::config("missing sweep.currents"))?.values("sweep.currents")
    }

    pub fn sweep_lines(&self) -> Vec<LineKind> {
        self.sweep.lines.clone().unwrap_or_else(default_lines)
    }

    /// Model settings shared by synthesis and fitting.
    pub fn fit_options(&self, lines: Vec<LineKind>) -> FitOptions {
        FitOptions {
            lines,
            model: self.model.model(),
            n_ph_max: self.model.n_ph_max,
            n_g: self.device.n_g,
            max_distance: self.fit.max_distance,
            max_outer: self.fit.max_outer,
            max_iter: self.fit.max_iter,
            xtol: self.fit.xtol,
        }
    }

    pub fn fit_params(&self) -> Result<FitParams, CliError> {
        let mut fp = FitParams::new(self.theta()?);
        for (name, [lo, hi]) in &self.fit.bounds {
            let i = param_index(name)?;
            fp.lower[i] = *lo;
            fp.upper[i] = *hi;
        }
        for name in &self.fit.freeze {
            fp = fp.freeze(name)?;
        }
        fp.validate()?;
        Ok(fp)
    }
}

/// Paths a command touches must all differ.
fn check_distinct(paths: &[(&str, Option<&PathBuf>)]) -> Result<(), CliError> {
    let given: Vec<(&str, &PathBuf)> = paths.iter().filter_map(|(n, p)| p.map(|p| (*n, p))).collect();
    for (i, (na, a)) in given.iter().enumerate() {
        for (nb, b) in &given[i + 1..] {
            if a == b {
                return Err(CliError::config(format!("{na} and {nb} both point at {}", a.display())));
            }
        }
    }
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::data(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

// ---------------------------------------------------------------------------
// commands

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let output = args.output.clone().or(cfg.paths.output.clone());
    let plot = args.plot.clone().or(cfg.paths.plot.clone());
    check_distinct(&[("config", args.config.config.as_ref()), ("output", output.as_ref()), ("plot", plot.as_ref())])?;

    let theta = cfg.theta()?;
    let currents = cfg.currents()?;
    let lines = cfg.sweep_lines();
    if lines.is_empty() {
        return Err(CliError::config("sweep.lines is empty"));
    }
    let rows = flux_sweep_spectrum(
        &theta.squid(),
        &theta.calibration(),
        &theta.transmon_base(cfg.device.n_g),
        &theta.cavity(cfg.model.n_ph_max),
        &currents,
        &lines,
        &cfg.model.model(),
    )?;

    let mut buf = Vec::new();
    io::write_sweep_csv(&mut buf, &rows)?;
    emit(output.as_deref(), &buf)?;
    if let Some(p) = &plot {
        emit(Some(p), render_sweep_svg(&rows).as_bytes())?;
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(CliError::data(format!("{failed} of {} sweep points failed; partial sweep written", rows.len())));
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let output = args.output.clone().or(cfg.paths.output.clone());
    check_distinct(&[("config", args.config.config.as_ref()), ("output", output.as_ref())])?;

    let theta = cfg.theta()?;
    let currents = cfg.currents()?;
    let frequencies = cfg
        .synth
        .frequencies
        .as_ref()
        .ok_or_else(|| CliError::config("missing synth.frequencies"))?
        .values("synth.frequencies")?;
    let settings = SynthSettings {
        linewidth: cfg.synth.linewidth,
        freq_noise: cfg.synth.freq_noise,
        snr: cfg.synth.snr,
        seed: args.seed.or(cfg.seed).unwrap_or(0),
    };
    settings.validate()?;
    let opts = cfg.fit_options(cfg.sweep_lines());
    let ds = synthesize_map(&theta, &opts, &currents, &frequencies, &settings).map_err(|e| match e {
        // a bad axis is a configuration problem
        SolveError::Dimension(m) => CliError::config(m),
        other => other.into(),
    })?;

    let mut buf = Vec::new();
    io::format_spectroscopy_csv(&mut buf, &ds)?;
    emit(output.as_deref(), &buf)
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let input = args.input.clone().or(cfg.paths.input.clone()).ok_or_else(|| CliError::config("no input grid given"))?;
    let output = args.output.clone().or(cfg.paths.output.clone());
    let residuals = args.residuals.clone().or(cfg.paths.residuals.clone());
    check_distinct(&[
        ("config", args.config.config.as_ref()),
        ("input", Some(&input)),
        ("output", output.as_ref()),
        ("residuals", residuals.as_ref()),
    ])?;

    let init = cfg.fit_params()?;
    let lines = cfg.fit.lines.clone().unwrap_or_else(|| cfg.sweep_lines());
    if lines.is_empty() {
        return Err(CliError::config("fit.lines is empty"));
    }
    let opts = cfg.fit_options(lines);
    let peak_opts = PeakOptions { smoothing_window: cfg.fit.smoothing_window, min_prominence: cfg.fit.min_prominence };
    peak_opts.validate()?;

    let ds = io::read_spectroscopy_csv(&input).map_err(input_error)?;
    let peaks = extract_peaks(&ds, &peak_opts)?;
    let result = fit_spectrum(&peaks, &init, &opts).map_err(fit_error)?;
    for w in &result.diagnostics.warnings {
        warn!("{w}");
    }
    emit(output.as_deref(), &to_json(&result)?)?;
    if let Some(p) = &residuals {
        io::write_residual_csv(p, &result)?;
    }
    Ok(())
}

pub fn cmd_t1fit(args: &T1Args) -> Result<(), CliError> {
    check_distinct(&[("input", Some(&args.input)), ("output", args.output.as_ref())])?;
    let trace = io::read_decay_csv(&args.input).map_err(input_error)?;
    let fit = fit_exponential_decay(&trace).map_err(decay_error)?;
    emit(args.output.as_deref(), &to_json(&fit)?)
}

/// Outcome of an Ambegaokar–Baratoff check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub r_n_ohm: f64,
    pub ej_ghz: f64,
    pub gap_uv: f64,
    /// Reference gap over `gap_uv`.
    pub ratio_al: f64,
    pub ratio_tas2: f64,
}

pub fn ab_report(args: &AbArgs) -> Result<AbReport, CliError> {
    if !(args.r_n.is_finite() && args.r_n > 0.0) {
        return Err(CliError::config("--rn must be a positive resistance in ohms"));
    }
    let (ej_ghz, gap_v) = match (args.ej, args.delta_uv) {
        (Some(ej), None) => {
            if !(ej.is_finite() && ej > 0.0) {
                return Err(CliError::config("--ej must be positive"));
            }
            (ej, ab_inferred_gap(args.r_n, ej))
        }
        (None, Some(uv)) => {
            let dc = JunctionDc::new(args.r_n, uv * 1e-6)?;
            (ab_josephson_energy(&dc), dc.delta_v)
        }
        _ => return Err(CliError::config("give exactly one of --ej and --delta-uv")),
    };
    Ok(AbReport {
        r_n_ohm: args.r_n,
        ej_ghz,
        gap_uv: gap_v * 1e6,
        ratio_al: AL_GAP_V / gap_v,
        ratio_tas2: TAS2_GAP_V / gap_v,
    })
}

pub fn cmd_abcheck(args: &AbArgs) -> Result<(), CliError> {
    let r = ab_report(args)?;
    let text = if args.json {
        to_json(&r)?
    } else {
        format!(
            "R_n        {} ohm\nE_J/h      {:.4} GHz\ngap        {:.2} uV\nAl   ({:.0} uV) / gap = {:.2}\nTaS2 ({:.0} uV) / gap = {:.2}\n",
            r.r_n_ohm,
            r.ej_ghz,
            r.gap_uv,
            AL_GAP_V * 1e6,
            r.ratio_al,
            TAS2_GAP_V * 1e6,
            r.ratio_tas2
        )
        .into_bytes()
    };
    emit(None, &text)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Abcheck(a) => cmd_abcheck(&a),
        Command::T1fit(a) => cmd_t1fit(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Parse `args` (program name first), run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { EXIT_CONFIG };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
