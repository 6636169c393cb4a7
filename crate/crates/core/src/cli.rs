//! Command-line driver.
//!
//! Every command resolves its parameters from built-in defaults, then an
//! optional `--config` file, then explicit flags, into a sorted key=value
//! map. That map (minus `out` and `config`) is embedded in every output, and
//! any output can be passed back through `--config` to regenerate it.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fieldgen::{BeamFamily, BeamModelSpec, Ensemble, FieldTrace, TraceSource};
use crate::io::{self, Config, Report, Table};
use crate::photonics::{self, FilterSpec, SweepParams};
use crate::radiometry::PhysicalConstants;
use crate::spectral;
use crate::stats::Moments;

#[derive(Debug, Parser)]
#[command(name = "beamsim", version, about = "Thermal and laser beam statistics from stochastic coherent amplitudes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blackbody, collimation and filtering radiometry of a laser-equivalent source.
    Blackbody(BlackbodyArgs),
    /// Generate seeded field traces and write them to a file.
    Simulate(ModelArgs),
    /// Ensemble power spectrum.
    Spectrum(ModelArgs),
    /// Intensity correlation g2(tau), optionally behind a Lorentzian filter.
    G2(G2Args),
    /// g2(0) of a filtered beam against filter width.
    Sweep(SweepArgs),
    /// Stationarity and periodogram-law tests contrasting the k-space product state with thermal and laser beams.
    QslbDemo(DemoArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Master seed of every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ensemble size.
    #[arg(long)]
    pub traces: Option<usize>,
    /// Time step, s.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Record length, s.
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Photons per coherence time.
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Linewidth (FWHM), 1/s.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json (simulate: bin or csv).
    #[arg(long)]
    pub format: Option<String>,
    /// key=value file, or an earlier output, supplying parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BlackbodyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Beam power, W.
    #[arg(long, allow_negative_numbers = true)]
    pub power: Option<f64>,
    /// Central vacuum wavelength, m.
    #[arg(long, allow_negative_numbers = true)]
    pub wavelength: Option<f64>,
    /// Filament area, m^2.
    #[arg(long, allow_negative_numbers = true)]
    pub area: Option<f64>,
    /// Light bulb power used for the filament-area estimate, W.
    #[arg(long, allow_negative_numbers = true)]
    pub bulb_power: Option<f64>,
    /// Light bulb spectral peak, m.
    #[arg(long, allow_negative_numbers = true)]
    pub bulb_peak: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub common: Common,
    /// thermal, laser, jittered-laser, kspace-product or periodic-thermal.
    #[arg(long)]
    pub model: Option<String>,
    /// Jitter band Delta omega, rad/s (jittered laser).
    #[arg(long, allow_negative_numbers = true)]
    pub jitter_band: Option<f64>,
    /// Jitter correlation time, s (jittered laser).
    #[arg(long, allow_negative_numbers = true)]
    pub jitter_corr_time: Option<f64>,
    /// Read traces from a binary trace file instead of generating them.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct G2Args {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated delays, s.
    #[arg(long)]
    pub taus: Option<String>,
    /// Filter FWHM, rad/s; unfiltered when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub filter_fwhm: Option<f64>,
    /// Filter centre detuning, rad/s.
    #[arg(long, allow_negative_numbers = true)]
    pub filter_center: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated filter widths, rad/s.
    #[arg(long)]
    pub widths: Option<String>,
    /// Shortest analysis region per trace, s.
    #[arg(long, allow_negative_numbers = true)]
    pub min_analysis: Option<f64>,
    /// Analysis region in filtered coherence times.
    #[arg(long, allow_negative_numbers = true)]
    pub coherence_multiple: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DemoArgs {
    #[command(flatten)]
    pub common: Common,
    /// Windows per trace in the stationarity test.
    #[arg(long)]
    pub windows: Option<usize>,
    /// Permutations per stationarity statistic.
    #[arg(long)]
    pub permutations: Option<usize>,
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(Error::Domain(_) | Error::Config(_)) => 3,
            Failure::Run(Error::Io { .. } | Error::Format { .. }) => 4,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, msg))
}

/// Parameters in force for one run.
struct Resolved {
    map: Config,
}

impl Resolved {
    fn get<V: FromStr>(&self, key: &str) -> Result<V> {
        let raw = self
            .map
            .get(key)
            .ok_or_else(|| Error::config(format!("missing parameter `{key}`")))?;
        raw.trim()
            .parse()
            .map_err(|_| Error::config(format!("cannot parse {key}={raw}")))
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get::<String>(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("cannot parse `{s}` in {key}")))
            })
            .collect()
    }

    /// Sets `key` to `value` unless already resolved.
    fn default(&mut self, key: &str, value: impl ToString) {
        self.map.entry(key.into()).or_insert_with(|| value.to_string());
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses `key=value` lines, `# config: key=value` header lines, or a JSON
/// object with a `config` member.
pub fn parse_config(text: &str) -> Result<Config> {
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON config: {e}")))?;
        let obj = v.get("config").unwrap_or(&v);
        let obj = obj
            .as_object()
            .ok_or_else(|| Error::config("JSON config must be an object"))?;
        return obj
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    Value::Bool(b) => b.to_string(),
                    other => return Err(Error::config(format!("unsupported value for {k}: {other}"))),
                };
                Ok((k.clone(), s))
            })
            .collect();
    }
    let mut map = Config::new();
    for line in text.lines() {
        let line = line.trim();
        let body = if let Some(rest) = line.strip_prefix("# config:") {
            rest.trim()
        } else if line.is_empty() || line.starts_with('#') || !line.contains('=') && line.contains(',') {
            continue;
        } else {
            line
        };
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value, got `{body}`")))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn resolve(common: &Common, flags: Vec<(&str, Option<String>)>, known: &[&str]) -> Result<Resolved> {
    let mut map = match &common.config {
        Some(p) => load_config(p)?,
        None => Config::new(),
    };
    let mut all = vec![
        ("seed", common.seed.map(|v| v.to_string())),
        ("traces", common.traces.map(|v| v.to_string())),
        ("dt", common.dt.map(|v| v.to_string())),
        ("duration", common.duration.map(|v| v.to_string())),
        ("nu", common.nu.map(|v| v.to_string())),
        ("gamma", common.gamma.map(|v| v.to_string())),
        ("format", common.format.clone()),
    ];
    all.extend(flags);
    for (k, v) in all {
        if let Some(v) = v {
            if !known.contains(&k) {
                return Err(Error::config(format!("`--{}` does not apply to this command", k.replace('_', "-"))));
            }
            map.insert(k.to_string(), v);
        }
    }
    if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::config(format!("unknown parameter `{k}` in config")));
    }
    Ok(Resolved { map })
}

fn opt_s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|x| x.to_string())
}

fn model_flags(a: &ModelArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("model", a.model.clone()),
        ("jitter_band", opt_s(&a.jitter_band)),
        ("jitter_corr_time", opt_s(&a.jitter_corr_time)),
        ("input", a.input.as_ref().map(|p| p.display().to_string())),
    ]
}

const MODEL_KEYS: &[&str] = &[
    "seed",
    "traces",
    "dt",
    "duration",
    "nu",
    "gamma",
    "format",
    "model",
    "jitter_band",
    "jitter_corr_time",
    "input",
];

/// Fills model defaults and builds the spec. `family` is the default model.
fn model_spec(r: &mut Resolved, family: Option<BeamFamily>) -> Result<BeamModelSpec<f64>> {
    if let Some(f) = family {
        r.default("model", f.name());
    }
    let family: BeamFamily = match r.opt("model") {
        Some(m) => m.parse()?,
        None => return Err(Error::config("missing parameter `model`")),
    };
    r.map.insert("model".into(), family.name().into());
    r.default("nu", 100.0);
    r.default("gamma", 1.0);
    let nu: f64 = r.get("nu")?;
    let gamma: f64 = r.get("gamma")?;
    r.default("seed", crate::rng::DEFAULT_SEED);
    r.default("dt", crate::fieldgen::MAX_STEP_GAMMA / gamma);
    r.default("duration", 200.0 / gamma);
    if family == BeamFamily::JitteredLaser {
        r.default("jitter_band", 100.0 * gamma);
        r.default("jitter_corr_time", 1.2 / gamma);
        BeamModelSpec::jittered_laser(nu, gamma, r.get("jitter_band")?, r.get("jitter_corr_time")?)
    } else {
        for k in ["jitter_band", "jitter_corr_time"] {
            if r.map.contains_key(k) {
                return Err(Error::config(format!("`{k}` only applies to the jittered laser")));
            }
        }
        BeamModelSpec::new(family, nu, gamma)
    }
}

fn samples_for(r: &Resolved) -> Result<(f64, usize)> {
    let dt: f64 = r.get("dt")?;
    let duration: f64 = r.get("duration")?;
    if !(dt > 0.0 && duration > 0.0 && dt.is_finite() && duration.is_finite()) {
        return Err(Error::domain("dt and duration must be finite and > 0"));
    }
    let n = (duration / dt).round();
    if !(2.0..=1e9).contains(&n) {
        return Err(Error::config(format!("duration / dt = {n} samples is out of range")));
    }
    Ok((dt, n as usize))
}

/// Traces either read from `input` or generated from the model.
enum Source {
    Loaded(Vec<FieldTrace<f64>>),
    Generated(Ensemble<f64>),
}

impl Source {
    fn as_dyn(&self) -> &dyn TraceSourceF64 {
        match self {
            Source::Loaded(v) => v,
            Source::Generated(e) => e,
        }
    }
}

trait TraceSourceF64: TraceSource<f64> {}
impl<S: TraceSource<f64>> TraceSourceF64 for S {}

fn source(r: &mut Resolved, family: BeamFamily, default_traces: usize) -> Result<Source> {
    if let Some(p) = r.opt("input").map(PathBuf::from) {
        for k in ["model", "nu", "gamma", "dt", "duration", "traces", "jitter_band", "jitter_corr_time", "seed"] {
            if r.map.contains_key(k) {
                return Err(Error::config(format!("`{k}` conflicts with `input`")));
            }
        }
        return Ok(Source::Loaded(io::read_traces(&p)?));
    }
    let model = model_spec(r, Some(family))?;
    r.default("traces", default_traces);
    let (dt, n) = samples_for(r)?;
    Ok(Source::Generated(Ensemble::new(model, dt, n, r.get("seed")?, r.get("traces")?)))
}

fn output_format(r: &mut Resolved, default: &str, allowed: &[&str]) -> Result<String> {
    r.default("format", default);
    let f = r.get::<String>("format")?.to_ascii_lowercase();
    if !allowed.contains(&f.as_str()) {
        return Err(Error::config(format!("format `{f}` not supported here (use {})", allowed.join(" or "))));
    }
    r.map.insert("format".into(), f.clone());
    Ok(f)
}

fn emit(report: &Report, r: &Resolved, out: Option<&Path>, format: &str) -> Result<()> {
    let mut buf = Vec::new();
    let res = if format == "json" {
        io::write_report_json(&mut buf, report, &r.map)
    } else {
        io::write_report_csv(&mut buf, report, &r.map)
    };
    res.expect("writing to memory");
    write_bytes(out, &buf)
}

fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).and_then(|_| so.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn cmd_blackbody(a: &BlackbodyArgs) -> Result<()> {
    let mut r = resolve(
        &a.common,
        vec![
            ("power", opt_s(&a.power)),
            ("wavelength", opt_s(&a.wavelength)),
            ("area", opt_s(&a.area)),
            ("bulb_power", opt_s(&a.bulb_power)),
            ("bulb_peak", opt_s(&a.bulb_peak)),
        ],
        &["seed", "gamma", "format", "power", "wavelength", "area", "bulb_power", "bulb_peak"],
    )?;
    r.default("seed", crate::rng::DEFAULT_SEED);
    r.default("power", 0.1);
    r.default("gamma", 1e7);
    r.default("wavelength", 1e-6);
    r.default("area", 15e-6);
    r.default("bulb_power", 60.0);
    r.default("bulb_peak", 1e-6);
    let format = output_format(&mut r, "csv", &["csv", "json"])?;
    let (p, gamma, lambda0, area): (f64, f64, f64, f64) = (r.get("power")?, r.get("gamma")?, r.get("wavelength")?, r.get("area")?);
    let (bulb_p, bulb_peak): (f64, f64) = (r.get("bulb_power")?, r.get("bulb_peak")?);

    let k = PhysicalConstants::<f64>::default();
    let omega0 = k.angular_frequency(lambda0)?;
    let filament = k.filament_area(bulb_p, bulb_peak)?;
    let bulb_t = k.wien_peak(1.0)? / bulb_peak;
    let t1 = k.temperature_for_collimated_power(p)?;
    let t2 = k.temperature_for_filtered_power(p, gamma)?;
    let coll = k.collimation_efficiency(p, area)?;
    let filt = k.filtering_efficiency(p, area, gamma, lambda0)?;

    let mut t = Table::new(&["quantity", "value", "log10", "unit", "formula"]);
    let mut row = |q: &str, v: f64, unit: &str, formula: &str| {
        t.push(vec![json!(q), num(v), num(v.log10()), json!(unit), json!(formula)]);
    };
    row("bulb_filament_area", filament, "m^2", "filament_area_from_power_and_peak");
    row("bulb_temperature", bulb_t, "K", "wien_displacement_inverse");
    row("bulb_radiated_power", k.radiated_power(filament, bulb_t)?, "W", "stefan_boltzmann");
    row("carrier_angular_frequency", omega0, "rad/s", "two_pi_c_over_wavelength");
    row("collimated_temperature", t1, "K", "collimated_power_inverse");
    row("collimated_peak_wavelength", coll.peak_wavelength, "m", "wien_displacement");
    row("filtered_temperature", t2, "K", "filtered_power_high_temperature_inverse");
    row("filtered_peak_wavelength", k.wien_peak(t2)?, "m", "wien_displacement");
    row("photons_per_coherence_time", filt.nu, "1", "photon_rate_times_coherence_time");
    row("filtered_power_check", k.filtered_power(filt.nu, omega0, gamma)?, "W", "lorentzian_filtered_thermal_power");
    row("collimation_efficiency", coll.approximate, "1", "peak_wavelength_squared_over_area");
    row("collimation_efficiency_exact", coll.exact, "1", "collimated_over_stefan_boltzmann_power");
    row("filtering_geometric", filt.geometric, "1", "wavelength_squared_over_area");
    row("filtering_spectral", filt.spectral, "1", "linewidth_over_carrier");
    row("filtering_brightness", filt.brightness, "1", "inverse_cube_photons_per_coherence_time");
    row("filtering_efficiency", filt.total, "1", "geometric_spectral_brightness_product");
    row("filtering_efficiency_via_temperature", filt.total_via_temperature, "1", "filtered_temperature_peak_ratio");
    let report = Report {
        command: "blackbody".into(),
        summary: Vec::new(),
        tables: vec![("radiometry".into(), t)],
    };
    emit(&report, &r, a.common.out.as_deref(), &format)
}

fn cmd_simulate(a: &ModelArgs) -> Result<()> {
    let out = a.common.out.as_deref().ok_or_else(|| Error::config("`--out` is required"))?;
    let mut r = resolve(&a.common, model_flags(a), MODEL_KEYS)?;
    if r.map.contains_key("input") {
        return Err(Error::config("`input` does not apply to simulate"));
    }
    if !r.map.contains_key("model") {
        return Err(Error::config("missing parameter `model`"));
    }
    let model = model_spec(&mut r, None)?;
    r.default("traces", 10);
    let format = output_format(&mut r, "bin", &["bin", "csv"])?;
    let (dt, n) = samples_for(&r)?;
    let ens = Ensemble::new(model, dt, n, r.get("seed")?, r.get("traces")?);

    let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut flux = Moments::<f64>::new();
    let mut peak = 0.0_f64;
    if format == "csv" {
        let traces = ens.collect()?;
        io::write_traces_csv(&mut w, &traces, &r.map).map_err(|e| Error::io(out, e))?;
        for t in &traces {
            flux.push(t.intensity().sum::<f64>() / t.n_samples() as f64);
            peak = peak.max(t.intensity().fold(0.0, f64::max));
        }
    } else {
        for i in 0..ens.count {
            let t = ens.generate(i)?;
            io::write_trace(&mut w, &t).map_err(|e| Error::io(out, e))?;
            flux.push(t.intensity().sum::<f64>() / t.n_samples() as f64);
            peak = peak.max(t.intensity().fold(0.0, f64::max));
        }
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    println!("traces={}", ens.count);
    println!("samples={n}");
    println!("dt={dt}");
    println!("mean_flux={}", flux.mean);
    println!("std_error={}", flux.std_error());
    println!("expected_flux={}", model.mean_flux());
    println!("degenerate={}", peak == 0.0);
    Ok(())
}

fn cmd_spectrum(a: &ModelArgs) -> Result<()> {
    let mut r = resolve(&a.common, model_flags(a), MODEL_KEYS)?;
    let src = source(&mut r, BeamFamily::Thermal, 100)?;
    let format = output_format(&mut r, "csv", &["csv", "json"])?;
    let est = spectral::spectrum(src.as_dyn())?;
    let mut t = Table::new(&["detuning", "value", "std_error", "ensemble_size"]);
    for i in 0..est.grid.len() {
        t.push(vec![num(est.grid[i]), num(est.values[i]), num(est.std_errors[i]), json!(est.ensemble_size)]);
    }
    let (w, v) = est.peak();
    let mut summary = vec![
        ("peak_detuning".into(), num(w)),
        ("peak_value".into(), num(v)),
        ("fwhm".into(), est.fwhm().map(num).unwrap_or(Value::Null)),
    ];
    if let Source::Generated(e) = &src {
        summary.push(("expected_peak".into(), num(e.model.nu)));
        summary.push(("expected_fwhm".into(), num(e.model.gamma)));
    }
    let report = Report {
        command: "spectrum".into(),
        summary,
        tables: vec![("spectrum".into(), t)],
    };
    emit(&report, &r, a.common.out.as_deref(), &format)
}

fn cmd_g2(a: &G2Args) -> Result<()> {
    let mut flags = model_flags(&a.model);
    flags.push(("taus", a.taus.clone()));
    flags.push(("filter_fwhm", opt_s(&a.filter_fwhm)));
    flags.push(("filter_center", opt_s(&a.filter_center)));
    let mut known = MODEL_KEYS.to_vec();
    known.extend(["taus", "filter_fwhm", "filter_center"]);
    let mut r = resolve(&a.model.common, flags, &known)?;
    let mut src = source(&mut r, BeamFamily::Laser, 50)?;
    let format = output_format(&mut r, "csv", &["csv", "json"])?;
    if let Some(w) = r.opt("filter_fwhm") {
        let w: f64 = w.parse().map_err(|_| Error::config(format!("cannot parse filter_fwhm={w}")))?;
        r.default("filter_center", 0.0);
        let f = FilterSpec::new(r.get("filter_center")?, w)?;
        src = match src {
            Source::Generated(e) => Source::Generated(e.with_filter(f)),
            Source::Loaded(v) => Source::Loaded(v.iter().map(|t| photonics::apply_filter(t, &f)).collect::<Result<_>>()?),
        };
    } else if r.map.contains_key("filter_center") {
        return Err(Error::config("`filter_center` needs `filter_fwhm`"));
    }
    let first = src.as_dyn().trace(0)?;
    let dt = first.dt;
    if !r.map.contains_key("taus") {
        let gamma = first.model.gamma;
        let taus: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5 / gamma).collect();
        r.default("taus", fmt_list(&taus));
    }
    drop(first);
    let taus = r.list("taus")?;
    let lags = taus
        .iter()
        .map(|&tau| {
            let m = tau / dt;
            if m.is_nan() || m < -1e-9 || (m - m.round()).abs() > 1e-6 * m.round().max(1.0) {
                Err(Error::domain(format!("tau = {tau} is not a whole number of steps dt = {dt}")))
            } else {
                Ok(m.round() as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let est = photonics::g2(src.as_dyn(), &lags)?;
    let mut t = Table::new(&["tau", "value", "std_error", "ensemble_size"]);
    for p in &est.points {
        t.push(vec![num(p.tau), num(p.value), num(p.std_error), json!(est.ensemble_size)]);
    }
    let report = Report {
        command: "g2".into(),
        summary: Vec::new(),
        tables: vec![("g2".into(), t)],
    };
    emit(&report, &r, a.model.common.out.as_deref(), &format)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut flags = model_flags(&a.model);
    flags.push(("widths", a.widths.clone()));
    flags.push(("min_analysis", opt_s(&a.min_analysis)));
    flags.push(("coherence_multiple", opt_s(&a.coherence_multiple)));
    let mut known: Vec<&str> = MODEL_KEYS.iter().copied().filter(|k| !matches!(*k, "input" | "duration")).collect();
    known.extend(["widths", "min_analysis", "coherence_multiple"]);
    let mut r = resolve(&a.model.common, flags, &known)?;
    let model = model_spec(&mut r, Some(BeamFamily::JitteredLaser))?;
    r.map.remove("duration");
    let gamma = model.gamma;
    r.default("traces", 100);
    r.default("widths", fmt_list(&[1e4 * gamma, 100.0 * gamma, 10.0 * gamma, 0.1 * gamma]));
    r.default("min_analysis", 200.0 / gamma);
    r.default("coherence_multiple", 200.0);
    let format = output_format(&mut r, "csv", &["csv", "json"])?;
    let params = SweepParams {
        traces: r.get("traces")?,
        dt: r.get("dt")?,
        min_analysis: r.get("min_analysis")?,
        coherence_multiple: r.get("coherence_multiple")?,
        master_seed: r.get("seed")?,
    };
    let rows = photonics::filtered_laser_sweep(&model, &r.list("widths")?, &params)?;
    let mut t = Table::new(&["delta_omega", "value", "std_error", "ensemble_size", "dt", "n_samples"]);
    for row in &rows {
        t.push(vec![
            num(row.delta_omega),
            num(row.g2),
            num(row.std_error),
            json!(row.ensemble_size),
            num(row.dt),
            json!(row.n_samples),
        ]);
    }
    let report = Report {
        command: "sweep".into(),
        summary: Vec::new(),
        tables: vec![("g2_at_zero_delay".into(), t)],
    };
    emit(&report, &r, a.model.common.out.as_deref(), &format)
}

/// One row of the demo verdict table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Verdict {
    pub model: BeamFamily,
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
    pub expected_pass: bool,
}

/// Shared ensemble layout of the demo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub nu: f64,
    pub gamma: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub traces: usize,
    pub windows: usize,
    pub permutations: usize,
    pub seed: u64,
}

/// Stationarity and peak-bin periodogram-law tests on thermal, laser and
/// k-space product ensembles with shared parameters.
pub fn qslb_verdicts(p: &DemoParams) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for family in [BeamFamily::Thermal, BeamFamily::Laser, BeamFamily::KspaceProduct] {
        let model = BeamModelSpec::new(family, p.nu, p.gamma)?;
        let ens = Ensemble::new(model, p.dt, p.n_samples, p.seed, p.traces);
        let expected = family != BeamFamily::KspaceProduct;
        let s = spectral::stationarity_test(&ens, p.windows, p.permutations, p.seed)?;
        out.push(Verdict {
            model: family,
            test: "stationarity",
            statistic: if s.position_p <= s.dispersion_p { s.position_f } else { s.dispersion_f },
            p_value: s.p_value,
            pass: s.pass,
            expected_pass: expected,
        });
        let d = spectral::periodogram_distribution_test(&ens, 0.0)?;
        out.push(Verdict {
            model: family,
            test: "periodogram_exponential",
            statistic: d.ks.statistic,
            p_value: d.ks.p_value,
            pass: d.pass,
            expected_pass: expected,
        });
    }
    Ok(out)
}

fn cmd_qslb_demo(a: &DemoArgs) -> Result<()> {
    let mut r = resolve(
        &a.common,
        vec![("windows", opt_s(&a.windows)), ("permutations", opt_s(&a.permutations))],
        &["seed", "traces", "dt", "duration", "nu", "gamma", "format", "windows", "permutations"],
    )?;
    r.default("nu", 100.0);
    r.default("gamma", 1.0);
    let gamma: f64 = r.get("gamma")?;
    r.default("seed", crate::rng::DEFAULT_SEED);
    r.default("traces", 1000);
    r.default("dt", crate::fieldgen::MAX_STEP_GAMMA / gamma);
    r.default("duration", 200.0 / gamma);
    r.default("windows", 8);
    r.default("permutations", spectral::PERMUTATIONS);
    let format = output_format(&mut r, "csv", &["csv", "json"])?;
    let (dt, n) = samples_for(&r)?;
    let verdicts = qslb_verdicts(&DemoParams {
        nu: r.get("nu")?,
        gamma,
        dt,
        n_samples: n,
        traces: r.get("traces")?,
        windows: r.get("windows")?,
        permutations: r.get("permutations")?,
        seed: r.get("seed")?,
    })?;
    let mut t = Table::new(&["model", "test", "statistic", "p_value", "pass", "expected_pass", "as_expected"]);
    for v in &verdicts {
        t.push(vec![
            json!(v.model.name()),
            json!(v.test),
            num(v.statistic),
            num(v.p_value),
            json!(v.pass),
            json!(v.expected_pass),
            json!(v.pass == v.expected_pass),
        ]);
    }
    let report = Report {
        command: "qslb-demo".into(),
        summary: vec![("all_as_expected".into(), json!(verdicts.iter().all(|v| v.pass == v.expected_pass)))],
        tables: vec![("verdicts".into(), t)],
    };
    emit(&report, &r, a.common.out.as_deref(), &format)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let res = match &cli.command {
        Command::Blackbody(a) => cmd_blackbody(a),
        Command::Simulate(a) => {
            if a.common.out.is_none() {
                return Err(usage("the following required arguments were not provided:\n  --out <OUT>"));
            }
            if a.model.is_none() && a.common.config.is_none() {
                return Err(usage("the following required arguments were not provided:\n  --model <MODEL>"));
            }
            cmd_simulate(a)
        }
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::G2(a) => cmd_g2(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::QslbDemo(a) => cmd_qslb_demo(a),
    };
    res.map_err(Failure::Run)
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(e) => {
                    let _ = e.print();
                }
                Failure::Run(e) => eprintln!("error: {e}"),
            }
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_formats() {
        let kv = parse_config("seed = 4\n# comment\nnu=3\n").unwrap();
        assert_eq!(kv["seed"], "4");
        assert_eq!(kv["nu"], "3");
        let hdr = parse_config("# beamsim 0.1.0\n# config: dt=0.01\n# config: jitter-band=5\nx,y\n1,2\n").unwrap();
        assert_eq!(hdr.len(), 2);
        assert_eq!(hdr["jitter_band"], "5");
        let js = parse_config(r#"{"tool":"beamsim","config":{"seed":"4","nu":2.5}}"#).unwrap();
        assert_eq!(js["seed"], "4");
        assert_eq!(js["nu"], "2.5");
        assert!(parse_config("justaword\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let c = Common {
            seed: Some(1),
            ..Default::default()
        };
        assert!(resolve(&c, vec![], &["nu"]).is_err());
        assert!(resolve(&c, vec![], &["seed"]).is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Run(Error::domain("x")).exit_code(), 3);
        assert_eq!(Failure::Run(Error::config("x")).exit_code(), 3);
        assert_eq!(Failure::Run(Error::format("p", "x")).exit_code(), 4);
        assert_eq!(usage("x").exit_code(), 2);
    }
}
