//! The `acpd` command line: derive, simulate, detect, bench and plot.
//!
//! Every subcommand reads and writes CSV (see [`crate::csvio`]); settings may
//! also come from a TOML file passed with `--config` (see [`crate::config`]),
//! with flags taking precedence. Usage errors exit with code 2, runtime
//! errors with code 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    format_csv, format_text, run_campaign, suite_detector, BenchReport, CampaignConfig,
    DetectorSettings, SignalSource,
};
use crate::builder::{build_detector, verify_detector, ModelSpec};
use crate::config::{model_label, parse_model, FileConfig};
use crate::csvio;
use crate::error::{Error, Result};
use crate::kernel::{kernelize, DiscreteDetector};
use crate::noise::{apply_noise, NoiseKind, NoiseSpec};
use crate::plot::{emit_plot, figure, FigureData};
use crate::runtime::{run, DetectConfig, Detection, StreamDetector};

#[derive(Debug, Parser)]
#[command(name = "acpd", version, about = "Algebraic change-point detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive a detector: operator text, symbolic kernels, optional weights.
    Derive(DeriveArgs),
    /// Render a signal with optional seeded noise to CSV.
    Simulate(SimulateArgs),
    /// Detect change-points in a signal CSV.
    Detect(DetectArgs),
    /// Run seeded Monte Carlo campaigns and print a segment-count histogram.
    Bench(BenchArgs),
    /// Draw a two-panel SVG figure from CSV files.
    Plot(PlotArgs),
}

/// Detector and decision-rule settings shared by several subcommands.
#[derive(Debug, Args, Default)]
pub struct DetectorFlags {
    /// Window length in samples.
    #[arg(long)]
    pub window: Option<usize>,
    /// Quadrature rule: trapezoid or simpson (simpson needs an odd window).
    #[arg(long)]
    pub quadrature: Option<String>,
    /// Extra smoothing integrals on top of the minimal depth.
    #[arg(long)]
    pub extra_depth: Option<usize>,
    /// Keep the raw sampled kernel instead of projecting out sampled trends.
    #[arg(long)]
    pub no_projection: bool,
    /// Gate threshold multiplier.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// zero_crossing or linear_estimate (degree-1 detectors only).
    #[arg(long)]
    pub mode: Option<String>,
    /// Gate scale: trace_mad, analytic, or a positive number.
    #[arg(long)]
    pub scale: Option<String>,
    /// Per-window noise scale: differences or window_std.
    #[arg(long)]
    pub spread: Option<String>,
    /// Minimum separation between detections in seconds (default: window span).
    #[arg(long)]
    pub min_sep: Option<f64>,
    /// Normalization floor.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl DetectorFlags {
    fn apply(&self, s: &mut DetectorSettings) -> Result<()> {
        if let Some(w) = self.window {
            s.window = w;
        }
        if let Some(q) = &self.quadrature {
            s.quadrature = q.parse()?;
        }
        if let Some(e) = self.extra_depth {
            s.model.extra_depth = e;
        }
        if self.no_projection {
            s.trend_projection = false;
        }
        let d = &mut s.detect;
        if let Some(k) = self.kappa {
            d.kappa = k;
        }
        if let Some(m) = &self.mode {
            d.mode = m.parse()?;
        }
        if let Some(x) = &self.scale {
            d.scale = x.parse()?;
        }
        if let Some(x) = &self.spread {
            d.spread = x.parse()?;
        }
        if let Some(m) = self.min_sep {
            d.min_separation = Some(m);
        }
        if let Some(e) = self.epsilon {
            d.epsilon = e;
        }
        d.validate()
    }
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Degree of the pre-change polynomial trend.
    #[arg(long, default_value_t = 0)]
    pub n1: usize,
    /// Order of the jump: 0 for a level jump, 1 for a slope jump, ...
    #[arg(long, default_value_t = 0)]
    pub n2: usize,
    /// Number of integrations between the model and the observed signal.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    /// Increment model: monomial (one unknown) or polynomial (n2+1 unknowns).
    #[arg(long, default_value = "monomial")]
    pub x2: String,
    /// Sample period in seconds; with --window, also samples the kernel.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Write the weight CSV here (`-` for stdout, the default when sampling).
    #[arg(long)]
    pub emit_weights: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in signal: pc5, poly6 or sine3.
    #[arg(long)]
    pub suite: Option<String>,
    /// TOML file with [signal] and [noise] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Noise kind: normal, uniform, perlin or mult_uniform.
    #[arg(long)]
    pub noise: Option<String>,
    /// Signal-to-noise ratio in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr: Option<f64>,
    /// Noise seed; required whenever noise is added.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for signal.csv, clean.csv and truth.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Signal CSV with columns time,value.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Model as n1,n2,order (monomial increment).
    #[arg(long)]
    pub model: Option<String>,
    /// Sample period in seconds (default: inferred from the time column).
    #[arg(long)]
    pub dt: Option<f64>,
    /// TOML file with a [detector] section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Detections CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the decision trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Feed samples one at a time through the streaming detector.
    #[arg(long)]
    pub stream: bool,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Built-in signal: pc5, poly6 or sine3.
    #[arg(long)]
    pub suite: Option<String>,
    /// TOML file with [signal], [noise], [detector] and [bench] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Noise kind.
    #[arg(long)]
    pub noise: Option<String>,
    /// Comma-separated SNR grid in dB, e.g. 25,20,10,0,-6.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    /// Trials per SNR value.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; trial i uses seed ^ i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model as n1,n2,order (default: the suite's detector).
    #[arg(long)]
    pub model: Option<String>,
    /// Output directory for report.txt, report.csv and per-trial detections.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorFlags,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Signal CSV (time,value).
    #[arg(long)]
    pub signal: PathBuf,
    /// Noise-free signal CSV, drawn dashed.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Decision trace CSV; adds the lower panel.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Detections CSV, drawn as vertical markers.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Truth CSV, drawn as dotted reference lines.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub title: String,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (including the program name) and runs it.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Derive(a) => derive(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Detect(a) => detect_cmd(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Plot(a) => plot(a, out),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    path.as_deref().map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
}

fn derive(a: &DeriveArgs, out: &mut dyn Write) -> Result<()> {
    let mut settings = DetectorSettings::new(
        match a.x2.as_str() {
            "monomial" => ModelSpec::monomial(a.n1, a.n2, a.order),
            "polynomial" => ModelSpec::polynomial(a.n1, a.n2, a.order),
            other => return Err(Error::Config(format!("unknown x2 `{other}`"))),
        },
        64,
    );
    a.detector.apply(&mut settings)?;
    let op = build_detector(&settings.model)?;
    let report = verify_detector(&op)?;
    let k = kernelize(&op)?;
    writeln!(out, "model: {}", model_label(&settings.model))?;
    writeln!(out, "depth: {}", op.depth)?;
    writeln!(out, "operator:")?;
    for line in op.omega.to_string().lines() {
        writeln!(out, "  {line}")?;
    }
    writeln!(out, "kernels:")?;
    for (nu, kn) in k.kernels().iter().enumerate() {
        writeln!(out, "  K{nu} = {kn}")?;
    }
    writeln!(out, "verified: {} exact zero residuals", report.checks)?;
    let Some(dt) = a.dt else {
        if a.emit_weights.is_some() {
            return Err(Error::Config("--emit-weights needs --dt".into()));
        }
        return Ok(());
    };
    let disc = settings.build(dt)?;
    match a.emit_weights.as_deref() {
        Some(p) if p != Path::new("-") => {
            let mut f = csvio::create(p)?;
            csvio::write_weights(&mut f, &disc)?;
            f.flush()?;
            writeln!(out, "weights: {}", p.display())?;
        }
        _ => {
            writeln!(out, "weights:")?;
            csvio::write_weights(&mut *out, &disc)?;
        }
    }
    Ok(())
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Config(format!("{what} needs an explicit --seed (or `seed` in the config)")))
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let spec = match &a.suite {
        Some(name) => crate::signal::builtin_suite(name)?,
        None if !cfg.signal.is_empty() => cfg.signal.resolve()?,
        None => return Err(Error::Config("simulate needs --suite or a [signal] section".into())),
    };
    let rendered = spec.render()?;
    let kind = match &a.noise {
        Some(k) => Some(k.parse::<NoiseKind>()?),
        None => cfg.noise.kind()?,
    };
    let noisy = match kind {
        Some(kind) => {
            let snr_db = a.snr.or(cfg.noise.snr_db).ok_or_else(|| Error::Config("noise needs --snr".into()))?;
            let seed = require_seed(a.seed.or(cfg.seed), "noise")?;
            let spec = NoiseSpec { kind, snr_db, seed, perlin: cfg.noise.perlin() };
            apply_noise(&rendered.clean, &spec)?
        }
        None => rendered.clean.clone(),
    };
    let write = |name: &str, f: &dyn Fn(&mut dyn Write) -> Result<()>| -> Result<PathBuf> {
        let path = a.out.join(name);
        let mut w = csvio::create(&path)?;
        f(&mut w)?;
        w.flush()?;
        Ok(path)
    };
    let sig = write("signal.csv", &|w| csvio::write_signal(w, &rendered.times, &noisy))?;
    let clean = write("clean.csv", &|w| csvio::write_signal(w, &rendered.times, &rendered.clean))?;
    let truth = write("truth.csv", &|w| csvio::write_truth(w, &rendered.truth))?;
    writeln!(out, "{} samples, {} segments", rendered.times.len(), rendered.segment_count())?;
    for p in [sig, clean, truth] {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn detect_settings(model: Option<&str>, cfg: &FileConfig, flags: &DetectorFlags) -> Result<DetectorSettings> {
    let mut s = DetectorSettings::new(ModelSpec::step(), 64);
    cfg.detector.apply(&mut s)?;
    if let Some(m) = model {
        let extra = s.model.extra_depth;
        s.model = parse_model(m)?.with_extra_depth(extra);
    }
    flags.apply(&mut s)?;
    Ok(s)
}

fn detect_cmd(a: &DetectArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let settings = detect_settings(a.model.as_deref(), &cfg, &a.detector)?;
    let series = csvio::read_signal(csvio::open(&a.input)?)?;
    let h = match a.dt {
        Some(h) => h,
        None => series.sample_period()?,
    };
    let det = settings.build(h)?;
    let found = if a.stream {
        if a.trace.is_some() {
            return Err(Error::Config("--trace is not available with --stream".into()));
        }
        stream_detect(&det, &settings.detect, series.t0(), &series.values)?
    } else {
        let (trace, found) = run(&det, &series.values, series.t0(), &settings.detect)?;
        if let Some(p) = &a.trace {
            let mut w = csvio::create(p)?;
            csvio::write_trace(&mut w, &trace)?;
            w.flush()?;
        }
        found
    };
    match &a.out {
        Some(p) => {
            let mut w = csvio::create(p)?;
            csvio::write_detections(&mut w, &found)?;
            w.flush()?;
            writeln!(out, "{} detection(s) written to {}", found.len(), p.display())?;
        }
        None => csvio::write_detections(out, &found)?,
    }
    Ok(())
}

fn stream_detect(det: &DiscreteDetector, cfg: &DetectConfig, t0: f64, xs: &[f64]) -> Result<Vec<Detection>> {
    let mut s = StreamDetector::new(det, cfg, t0)?;
    let mut found = Vec::new();
    for &x in xs {
        found.extend(s.push(x));
    }
    found.extend(s.finish());
    Ok(found)
}

fn fmt_snr_dir(snr: f64) -> String {
    format!("{snr}").replace('-', "m")
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let (signal, mut detector) = match (&a.suite, &cfg.signal) {
        (Some(name), _) => (SignalSource::Builtin(name.clone()), suite_detector(name)?),
        (None, s) if s.suite.is_some() => {
            let name = s.suite.clone().unwrap_or_default();
            let detector = suite_detector(&name)?;
            if s.dt.is_some() {
                (SignalSource::Spec(s.resolve()?), detector)
            } else {
                (SignalSource::Builtin(name), detector)
            }
        }
        (None, s) if !s.is_empty() => {
            (SignalSource::Spec(s.resolve()?), DetectorSettings::new(ModelSpec::step(), 64))
        }
        _ => return Err(Error::Config("bench needs --suite or a [signal] section".into())),
    };
    cfg.detector.apply(&mut detector)?;
    if let Some(m) = &a.model {
        let extra = detector.model.extra_depth;
        detector.model = parse_model(m)?.with_extra_depth(extra);
    }
    a.detector.apply(&mut detector)?;
    let noise = match &a.noise {
        Some(k) => k.parse()?,
        None => cfg.noise.kind()?.unwrap_or(NoiseKind::Normal),
    };
    let snrs = if !a.snr.is_empty() {
        a.snr.clone()
    } else if let Some(g) = &cfg.noise.snr_grid {
        g.clone()
    } else if let Some(s) = cfg.noise.snr_db {
        vec![s]
    } else {
        return Err(Error::Config("bench needs --snr (or noise.snr_db / noise.snr_grid)".into()));
    };
    let base_seed = require_seed(a.seed.or(cfg.seed), "bench")?;
    let runs = a.runs.or(cfg.bench.runs).unwrap_or(100);
    let mut campaigns = Vec::new();
    for &snr_db in &snrs {
        let c = CampaignConfig {
            signal: signal.clone(),
            noise,
            snr_db,
            perlin: cfg.noise.perlin(),
            detector: detector.clone(),
            runs,
            base_seed,
        };
        campaigns.push(run_campaign(&c)?);
    }
    let report = BenchReport::from_campaigns(&campaigns);
    let text = format_text(&report);
    writeln!(out, "signal: {}  model: {}  window: {}", signal.label(), model_label(&detector.model), detector.window)?;
    write!(out, "{text}")?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), &text)?;
        std::fs::write(dir.join("report.csv"), format_csv(&report)?)?;
        for c in &campaigns {
            let sub = dir.join("trials").join(format!("{}_{}", c.row.noise.name(), fmt_snr_dir(c.row.snr_db)));
            std::fs::create_dir_all(&sub)?;
            for t in &c.trials {
                let mut w = csvio::create(&sub.join(format!("trial_{:04}.csv", t.index)))?;
                csvio::write_detections(&mut w, &t.detections)?;
                w.flush()?;
            }
        }
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(())
}

fn plot(a: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    let signal = csvio::read_signal(csvio::open(&a.signal)?)?;
    let clean = a.clean.as_ref().map(|p| csvio::read_signal(csvio::open(p)?)).transpose()?;
    if let Some(c) = &clean {
        if c.len() != signal.len() {
            return Err(Error::Config("clean and signal CSVs differ in length".into()));
        }
    }
    let trace = a.trace.as_ref().map(|p| csvio::read_trace_decision(csvio::open(p)?)).transpose()?;
    let detections: Vec<f64> = match &a.detections {
        Some(p) => csvio::read_detections(csvio::open(p)?)?.iter().map(|d| d.time).collect(),
        None => Vec::new(),
    };
    let truth = match &a.truth {
        Some(p) => csvio::read_truth(csvio::open(p)?)?,
        None => Vec::new(),
    };
    let spec = figure(&FigureData {
        title: &a.title,
        times: &signal.times,
        signal: &signal.values,
        clean: clean.as_ref().map(|c| c.values.as_slice()),
        decision: trace.as_ref().map(|t| (t.times.as_slice(), t.values.as_slice())),
        detections: &detections,
        truth: &truth,
    });
    emit_plot(&spec, &a.out)?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let err = Cli::try_parse_from(["acpd", "derive", "--bogus"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(dispatch(["acpd", "detect", "--nope"]), 2);
    }

    #[test]
    fn negative_snr_grid() {
        let cli = Cli::try_parse_from(["acpd", "bench", "--suite", "pc5", "--snr", "0,-6"]).unwrap();
        let Command::Bench(b) = cli.command else { panic!() };
        assert_eq!(b.snr, vec![0.0, -6.0]);
    }

    #[test]
    fn derive_prints_step_kernels() {
        let cli = Cli::try_parse_from(["acpd", "derive", "--n1", "0", "--n2", "0", "--window", "64", "--dt", "0.01"])
            .unwrap();
        let mut buf = Vec::new();
        execute(&cli.command, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("K0 = -2*T*tau + 3*tau^2"), "{text}");
        assert!(text.contains("K1 = T - 2*tau"), "{text}");
        assert!(text.contains("index,w0,w1"));
        assert_eq!(text.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count(), 64);
    }

    #[test]
    fn simulate_without_seed_fails() {
        let dir = tempfile::tempdir().unwrap();
        let cli = Cli::try_parse_from([
            "acpd", "simulate", "--suite", "pc5", "--noise", "normal", "--snr", "0", "--out",
        ].into_iter().map(String::from).chain([dir.path().display().to_string()]))
        .unwrap();
        let err = execute(&cli.command, &mut Vec::new()).unwrap_err();
        assert!(err.to_string().contains("--seed"));
    }
}
