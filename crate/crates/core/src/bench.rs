//! Monte Carlo campaigns: segment-count histograms over seeded trials.
//!
//! Trial `i` of a campaign uses noise seed `base_seed ^ i`, so results do not
//! depend on how trials are scheduled across threads, and every SNR row of a
//! grid sees the same underlying random draws.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::builder::{build_detector, ModelSpec};
use crate::error::{Error, Result};
use crate::kernel::{discretize, kernelize, DiscreteDetector, Quadrature};
use crate::noise::{apply_noise, NoiseKind, NoiseSpec, PerlinParams};
use crate::runtime::{run, DetectConfig, Detection, GateScale};
use crate::signal::{builtin_suite, Rendered, SignalSpec};

/// Histogram columns: segment counts 1..=8, then `>= 9`.
pub const HISTOGRAM_BINS: usize = 9;

/// Everything needed to turn a sampled signal into detections.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSettings {
    pub model: ModelSpec,
    pub window: usize,
    pub quadrature: Quadrature,
    /// Project sampled polynomial trends out of the weights.
    pub trend_projection: bool,
    pub detect: DetectConfig,
}

impl DetectorSettings {
    pub fn new(model: ModelSpec, window: usize) -> Self {
        Self {
            model,
            window,
            quadrature: Quadrature::Trapezoid,
            trend_projection: true,
            detect: DetectConfig::default(),
        }
    }

    /// Derives, kernelizes and samples the detector for sample period `dt`.
    pub fn build(&self, dt: f64) -> Result<DiscreteDetector> {
        let op = build_detector(&self.model)?;
        let disc = discretize(&kernelize(&op)?, self.window, dt, self.quadrature)?;
        Ok(if self.trend_projection {
            disc.project_out_trends(self.model.trend_degree())
        } else {
            disc
        })
    }
}

/// Recommended detector for a built-in suite.
///
/// The step detector suits `pc5`. For `poly6` and `sine3` the detector
/// annihilates local linear trends (`n1 = 1`); curvature inside a window is
/// left to the gate. All use 512-sample windows and the analytic gate scale:
/// with a few changes per record the lobes around them cover much of the
/// trace, which inflates a whole-trace MAD.
pub fn suite_detector(name: &str) -> Result<DetectorSettings> {
    let model = match name {
        "pc5" => ModelSpec::step(),
        "poly6" | "sine3" => ModelSpec::monomial(1, 0, 0),
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    let mut s = DetectorSettings::new(model, 512);
    s.detect.scale = GateScale::Analytic;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalSource {
    Builtin(String),
    Spec(SignalSpec),
}

impl SignalSource {
    pub fn spec(&self) -> Result<SignalSpec> {
        match self {
            Self::Builtin(name) => builtin_suite(name),
            Self::Spec(s) => Ok(s.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Builtin(name) => name.clone(),
            Self::Spec(_) => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub signal: SignalSource,
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub perlin: PerlinParams,
    pub detector: DetectorSettings,
    pub runs: usize,
    pub base_seed: u64,
}

impl CampaignConfig {
    /// Built-in suite with its recommended detector and 100 runs.
    pub fn for_suite(name: &str, noise: NoiseKind, snr_db: f64, base_seed: u64) -> Result<Self> {
        Ok(Self {
            signal: SignalSource::Builtin(name.to_string()),
            noise,
            snr_db,
            perlin: PerlinParams::default(),
            detector: suite_detector(name)?,
            runs: 100,
            base_seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        self.detector.detect.validate()?;
        self.noise_spec(0).validate()
    }

    pub fn trial_seed(&self, index: usize) -> u64 {
        self.base_seed ^ index as u64
    }

    fn noise_spec(&self, index: usize) -> NoiseSpec {
        NoiseSpec { kind: self.noise, snr_db: self.snr_db, seed: self.trial_seed(index), perlin: self.perlin }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub segments: usize,
    pub detections: Vec<Detection>,
}

/// Shared, immutable per-campaign state.
struct Prepared {
    rendered: Rendered,
    detector: DiscreteDetector,
}

fn prepare(cfg: &CampaignConfig) -> Result<Prepared> {
    cfg.validate()?;
    let spec = cfg.signal.spec()?;
    let rendered = spec.render()?;
    let detector = cfg.detector.build(spec.dt)?;
    Ok(Prepared { rendered, detector })
}

fn trial(cfg: &CampaignConfig, p: &Prepared, index: usize) -> Result<TrialOutcome> {
    let noisy = apply_noise(&p.rendered.clean, &cfg.noise_spec(index))?;
    let (_, detections) = run(&p.detector, &noisy, 0.0, &cfg.detector.detect)?;
    Ok(TrialOutcome {
        index,
        seed: cfg.trial_seed(index),
        segments: detections.len() + 1,
        detections,
    })
}

/// Renders, adds seeded noise, and detects; deterministic in `(cfg, index)`.
pub fn run_trial(cfg: &CampaignConfig, index: usize) -> Result<TrialOutcome> {
    trial(cfg, &prepare(cfg)?, index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub true_segments: usize,
    pub histogram: [usize; HISTOGRAM_BINS],
}

impl ReportRow {
    pub fn runs(&self) -> usize {
        self.histogram.iter().sum()
    }

    /// Trials reporting exactly `segments` (the last bin collects `>= 9`).
    pub fn count(&self, segments: usize) -> usize {
        bin_of(segments).map_or(0, |b| self.histogram[b])
    }

    pub fn count_in(&self, lo: usize, hi: usize) -> usize {
        (lo..=hi).map(|s| self.count(s)).sum()
    }

    /// Most frequent segment count, the smallest on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for b in 1..HISTOGRAM_BINS {
            if self.histogram[b] > self.histogram[best] {
                best = b;
            }
        }
        best + 1
    }

    pub fn fraction_true(&self) -> f64 {
        self.count(self.true_segments) as f64 / self.runs().max(1) as f64
    }
}

fn bin_of(segments: usize) -> Option<usize> {
    (segments >= 1).then(|| (segments - 1).min(HISTOGRAM_BINS - 1))
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub row: ReportRow,
    pub trials: Vec<TrialOutcome>,
}

/// Runs all trials in parallel and aggregates the histogram.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    let p = prepare(cfg)?;
    let trials: Vec<TrialOutcome> =
        (0..cfg.runs).into_par_iter().map(|i| trial(cfg, &p, i)).collect::<Result<_>>()?;
    let mut histogram = [0; HISTOGRAM_BINS];
    for t in &trials {
        if let Some(b) = bin_of(t.segments) {
            histogram[b] += 1;
        }
    }
    let row = ReportRow {
        noise: cfg.noise,
        snr_db: cfg.snr_db,
        true_segments: p.rendered.segment_count(),
        histogram,
    };
    Ok(Campaign { row, trials })
}

/// One campaign per SNR value, everything else shared.
pub fn run_grid(cfg: &CampaignConfig, snrs: &[f64]) -> Result<Vec<Campaign>> {
    snrs.iter()
        .map(|&snr_db| run_campaign(&CampaignConfig { snr_db, ..cfg.clone() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn from_campaigns<'a>(campaigns: impl IntoIterator<Item = &'a Campaign>) -> Self {
        Self { rows: campaigns.into_iter().map(|c| c.row.clone()).collect() }
    }
}

fn bin_label(b: usize) -> String {
    if b + 1 == HISTOGRAM_BINS {
        format!(">={}", HISTOGRAM_BINS)
    } else {
        (b + 1).to_string()
    }
}

fn fmt_snr(snr: f64) -> String {
    if snr.is_infinite() {
        if snr > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{snr}")
    }
}

/// Fixed-width table: one row per campaign, the true-count cell of each row
/// wrapped in brackets.
pub fn format_text(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<14}{:>8} |", "noise", "snr_db");
    for b in 0..HISTOGRAM_BINS {
        let _ = write!(out, "{:>6}", bin_label(b));
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(out, "{:<14}{:>8} |", row.noise.name(), fmt_snr(row.snr_db));
        let truth = bin_of(row.true_segments);
        for (b, n) in row.histogram.iter().enumerate() {
            let cell = if Some(b) == truth { format!("[{n}]") } else { n.to_string() };
            let _ = write!(out, "{cell:>6}");
        }
        out.push('\n');
    }
    out
}

pub const REPORT_HEADER: [&str; 5] = ["noise", "snr_db", "true_segments", "segments", "count"];

/// Long-format CSV, one line per histogram bin.
pub fn format_csv(report: &BenchReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for row in &report.rows {
        for (b, n) in row.histogram.iter().enumerate() {
            w.write_record([
                row.noise.name().to_string(),
                fmt_snr(row.snr_db),
                row.true_segments.to_string(),
                bin_label(b),
                n.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Inverse of [`format_csv`].
pub fn parse_csv(text: &str) -> Result<BenchReport> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(Error::Parse(format!("unexpected report header {headers:?}")));
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let parse_err = |what: &str, v: &str| Error::Parse(format!("bad {what} `{v}`"));
        let noise: NoiseKind = field(0).parse()?;
        let snr_db: f64 = field(1).parse().map_err(|_| parse_err("snr_db", field(1)))?;
        let true_segments: usize =
            field(2).parse().map_err(|_| parse_err("true_segments", field(2)))?;
        let bin = (0..HISTOGRAM_BINS)
            .find(|&b| bin_label(b) == field(3))
            .ok_or_else(|| parse_err("segments", field(3)))?;
        let count: usize = field(4).parse().map_err(|_| parse_err("count", field(4)))?;
        let fresh = match rows.last() {
            Some(last) => {
                bin == 0 || last.noise != noise || last.snr_db.to_bits() != snr_db.to_bits()
            }
            None => true,
        };
        if fresh {
            rows.push(ReportRow { noise, snr_db, true_segments, histogram: [0; HISTOGRAM_BINS] });
        }
        let row = rows.last_mut().expect("row pushed above");
        row.histogram[bin] += count;
    }
    Ok(BenchReport { rows })
}
