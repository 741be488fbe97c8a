//! Sliding-window evaluation and change-point extraction.
//!
//! Each window position `k` yields `v_nu(k) = <weights[nu], x[k..k+W]>` and the
//! window-middle value `v(k) = sum_nu v_nu(k) (T/2)^nu`. For a model-matched
//! signal, `v(t)` has a simple root at the change time, so `v(k)` changes sign
//! when the change-point passes the window middle and the slope
//! `dv/dt (T/2)` is bounded away from zero there. Spurious sign changes (noise,
//! the edges of the response, roots of the response envelope) come with a
//! vanishing slope and are rejected by gating on it.
//!
//! A crossing is kept when
//! - `v` moves in the direction of its slope across the crossing,
//! - `max |d|` over the `W/2` positions on each side clears `kappa * scale(d)`,
//! - the normalized slope `|e|` at the crossing clears `kappa * scale(e)`.
//!
//! Kept crossings closer than `min_separation` are merged keeping the larger
//! `|e|`.
//!
//! The batch path ([`eval_windows`] + [`detect`]) and the online path
//! ([`StreamDetector`]) share the per-window arithmetic and the gating state
//! machine, so on the same data and thresholds they agree bit for bit.

use std::collections::VecDeque;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::DiscreteDetector;

/// Normal consistency constant for the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTrace {
    /// Raw `v_nu(k)`, one vector per power of the delay.
    pub v_nu: Vec<Vec<f64>>,
    /// Window-middle value `v(k)`.
    pub v: Vec<f64>,
    /// Normalized decision value `v / (|w_mid| sigma_k sqrt(W) + eps)`.
    pub d: Vec<f64>,
    /// Normalized slope `dv/dt` at the window middle, same normalization.
    pub e: Vec<f64>,
    /// Time of sample 0.
    pub t0: f64,
    pub h: f64,
    pub window: usize,
}

impl DecisionTrace {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Time of the middle of window `k`.
    pub fn t_of(&self, k: usize) -> f64 {
        window_middle(self.t0, self.h, self.window, k as f64)
    }

    pub fn degree(&self) -> usize {
        self.v_nu.len().saturating_sub(1)
    }
}

fn window_middle(t0: f64, h: f64, w: usize, k: f64) -> f64 {
    t0 + (k + 0.5 * (w - 1) as f64) * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub time: f64,
    /// Order of the change (0 = jump in the signal, 1 = jump in its slope, ...).
    pub kind: usize,
    /// Normalized slope `|e|` at the crossing.
    pub score: f64,
    pub window_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectMode {
    #[default]
    ZeroCrossing,
    LinearEstimate,
}

impl DetectMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::ZeroCrossing => "zero_crossing",
            Self::LinearEstimate => "linear_estimate",
        }
    }
}

impl FromStr for DetectMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_crossing" => Ok(Self::ZeroCrossing),
            "linear_estimate" => Ok(Self::LinearEstimate),
            other => Err(Error::Config(format!("unknown detection mode `{other}`"))),
        }
    }
}

/// Where the gate thresholds `kappa * scale` take their scale from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GateScale {
    /// `max(1.4826 * MAD, 1/sqrt(W))` of each trace. Batch only.
    #[default]
    TraceMad,
    /// `1/sqrt(W)`, the standard deviation of `d` and `e` under white noise.
    Analytic,
    Fixed(f64),
}

impl GateScale {
    pub fn name(self) -> String {
        match self {
            Self::TraceMad => "trace_mad".into(),
            Self::Analytic => "analytic".into(),
            Self::Fixed(x) => format!("{x}"),
        }
    }
}

impl FromStr for GateScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace_mad" => Ok(Self::TraceMad),
            "analytic" => Ok(Self::Analytic),
            other => other
                .parse::<f64>()
                .map(Self::Fixed)
                .map_err(|_| Error::Config(format!("unknown gate scale `{other}`"))),
        }
    }
}

/// Per-window scale `sigma_k` in the normalization of `d` and `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spread {
    /// Sample standard deviation of the window.
    WindowStd,
    /// `1.4826 / sqrt(2) * median |x[i+1] - x[i]|`: the standard deviation of
    /// white noise, blind to smooth trends and to isolated jumps.
    #[default]
    Differences,
}

impl Spread {
    pub fn name(self) -> &'static str {
        match self {
            Self::WindowStd => "window_std",
            Self::Differences => "differences",
        }
    }
}

impl FromStr for Spread {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window_std" => Ok(Self::WindowStd),
            "differences" => Ok(Self::Differences),
            other => Err(Error::Config(format!("unknown spread `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub kappa: f64,
    /// Seconds; `None` means `W * h`.
    pub min_separation: Option<f64>,
    pub epsilon: f64,
    pub mode: DetectMode,
    pub scale: GateScale,
    pub spread: Spread,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            kappa: 3.0,
            min_separation: None,
            epsilon: 1e-12,
            mode: DetectMode::ZeroCrossing,
            scale: GateScale::TraceMad,
            spread: Spread::Differences,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        if let Some(m) = self.min_separation {
            if !(m >= 0.0) {
                return Err(Error::Config("min_separation must be non-negative".into()));
            }
        }
        if let GateScale::Fixed(x) = self.scale {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config("fixed gate scale must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Fixed-order dot product: four interleaved partial sums, combined as
/// `(s0 + s1) + (s2 + s3)`, then the tail left to right.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            s[j] += x[j] * y[j];
        }
    }
    let mut acc = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ta.iter().zip(tb) {
        acc += x * y;
    }
    acc
}

#[inline]
fn sum(a: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let c = a.chunks_exact(4);
    let t = c.remainder();
    for x in c {
        for j in 0..4 {
            s[j] += x[j];
        }
    }
    let mut acc = (s[0] + s[1]) + (s[2] + s[3]);
    for x in t {
        acc += x;
    }
    acc
}

/// Precomputed per-detector quantities shared by both paths.
#[derive(Debug, Clone)]
struct Evaluator {
    weights: Vec<Vec<f64>>,
    /// `(T/2)^nu`
    mid_powers: Vec<f64>,
    /// `nu (T/2)^(nu-1)`
    slope_powers: Vec<f64>,
    norm_mid: f64,
    norm_slope: f64,
    sqrt_w: f64,
    window: usize,
    spread: Spread,
    epsilon: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    v: f64,
    d: f64,
    slope: f64,
    e: f64,
    v0: f64,
    v1: f64,
}

impl Evaluator {
    fn new(det: &DiscreteDetector, cfg: &DetectConfig) -> Self {
        let t_mid = det.t_mid();
        let n = det.weights().len();
        let mid_powers: Vec<f64> = (0..n).map(|nu| t_mid.powi(nu as i32)).collect();
        let slope_powers: Vec<f64> =
            (0..n).map(|nu| if nu == 0 { 0.0 } else { nu as f64 * t_mid.powi(nu as i32 - 1) }).collect();
        let w = det.window();
        let combine = |p: &[f64]| -> Vec<f64> {
            (0..w).map(|i| det.weights().iter().zip(p).map(|(wv, c)| wv[i] * c).sum()).collect()
        };
        let (w_mid, w_slope) = (combine(&mid_powers), combine(&slope_powers));
        Self {
            weights: det.weights().to_vec(),
            mid_powers,
            slope_powers,
            norm_mid: dot(&w_mid, &w_mid).sqrt(),
            norm_slope: dot(&w_slope, &w_slope).sqrt(),
            sqrt_w: (w as f64).sqrt(),
            window: w,
            spread: cfg.spread,
            epsilon: cfg.epsilon,
        }
    }

    fn window_std(&self, x: &[f64]) -> f64 {
        let n = self.window as f64;
        let mean = sum(x) / n;
        let mut acc = [0.0f64; 4];
        let c = x.chunks_exact(4);
        let tail = c.remainder();
        for q in c {
            for j in 0..4 {
                let r = q[j] - mean;
                acc[j] += r * r;
            }
        }
        let mut ss = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for r in tail {
            ss += (r - mean) * (r - mean);
        }
        (ss / (n - 1.0)).sqrt()
    }

    /// `sigma_k` for a contiguous window; `scratch` is reused across calls.
    fn sigma(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        match self.spread {
            Spread::WindowStd => self.window_std(x),
            Spread::Differences => {
                scratch.clear();
                scratch.extend(x.windows(2).map(|p| (p[1] - p[0]).abs()));
                DIFF_SCALE * select_median(scratch)
            }
        }
    }

    fn eval(&self, x: &[f64], sigma: f64, v_nu: &mut Vec<f64>) -> Pos {
        debug_assert_eq!(x.len(), self.window);
        v_nu.clear();
        v_nu.extend(self.weights.iter().map(|w| dot(w, x)));
        let (mut v, mut slope) = (0.0, 0.0);
        for ((a, p), q) in v_nu.iter().zip(&self.mid_powers).zip(&self.slope_powers) {
            v += a * p;
            slope += a * q;
        }
        let spread = sigma * self.sqrt_w;
        let epsilon = self.epsilon;
        Pos {
            v,
            d: v / (self.norm_mid * spread + epsilon),
            slope,
            e: slope / (self.norm_slope * spread + epsilon),
            v0: v_nu.first().copied().unwrap_or(0.0),
            v1: v_nu.get(1).copied().unwrap_or(0.0),
        }
    }
}

/// Turns the median of `|x[i+1] - x[i]|` into a white-noise standard deviation.
const DIFF_SCALE: f64 = MAD_SCALE / std::f64::consts::SQRT_2;

/// Median by selection; reorders `xs`.
fn select_median(xs: &mut [f64]) -> f64 {
    let (n, m) = (xs.len(), xs.len() / 2);
    let (left, mid, _) = xs.select_nth_unstable_by(m, f64::total_cmp);
    let hi = *mid;
    if n % 2 == 1 {
        hi
    } else {
        let lo = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Sliding multiset of the last `W - 1` absolute differences, kept sorted.
#[derive(Debug, Clone)]
struct DiffWindow {
    fifo: VecDeque<f64>,
    sorted: Vec<f64>,
    cap: usize,
}

impl DiffWindow {
    fn new(cap: usize) -> Self {
        Self { fifo: VecDeque::with_capacity(cap + 1), sorted: Vec::with_capacity(cap + 1), cap }
    }

    fn push(&mut self, diff: f64) {
        if self.fifo.len() == self.cap {
            let old = self.fifo.pop_front().expect("full window");
            let at = self.sorted.partition_point(|v| v.total_cmp(&old).is_lt());
            self.sorted.remove(at);
        }
        self.fifo.push_back(diff);
        let at = self.sorted.partition_point(|v| v.total_cmp(&diff).is_lt());
        self.sorted.insert(at, diff);
    }

    fn median(&self) -> f64 {
        let n = self.sorted.len();
        let m = n / 2;
        if n % 2 == 1 {
            self.sorted[m]
        } else {
            0.5 * (self.sorted[m - 1] + self.sorted[m])
        }
    }
}

/// Evaluates every full window of `signal` with default normalization;
/// sample 0 sits at time 0.
pub fn eval_windows(det: &DiscreteDetector, signal: &[f64]) -> Result<DecisionTrace> {
    eval_windows_with(det, signal, 0.0, &DetectConfig::default())
}

/// [`eval_windows`] with an explicit start time; `cfg` supplies the
/// normalization (`spread`, `epsilon`).
pub fn eval_windows_with(
    det: &DiscreteDetector,
    signal: &[f64],
    t0: f64,
    cfg: &DetectConfig,
) -> Result<DecisionTrace> {
    let w = det.window();
    if signal.len() < w {
        return Err(Error::SignalTooShort { len: signal.len(), window: w });
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSignal("signal contains non-finite samples".into()));
    }
    let ev = Evaluator::new(det, cfg);
    let n = signal.len() - w + 1;
    let values: Vec<(Pos, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(buf, scratch), k| {
                let x = &signal[k..k + w];
                let p = ev.eval(x, ev.sigma(x, scratch), buf);
                (p, buf.clone())
            },
        )
        .collect();
    let mut trace = DecisionTrace {
        v_nu: vec![Vec::with_capacity(n); det.weights().len()],
        v: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        t0,
        h: det.sample_period(),
        window: w,
    };
    for (p, v_nu) in values {
        for (dst, x) in trace.v_nu.iter_mut().zip(&v_nu) {
            dst.push(*x);
        }
        trace.v.push(p.v);
        trace.d.push(p.d);
        trace.e.push(p.e);
    }
    Ok(trace)
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mad(xs: &[f64]) -> f64 {
    let m = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// Gate threshold `kappa * scale` for one normalized trace under `cfg`.
pub fn gate_threshold(trace: &[f64], window: usize, cfg: &DetectConfig) -> f64 {
    let analytic = 1.0 / (window as f64).sqrt();
    let scale = match cfg.scale {
        GateScale::TraceMad => (MAD_SCALE * mad(trace)).max(analytic),
        GateScale::Analytic => analytic,
        GateScale::Fixed(x) => x,
    };
    cfg.kappa * scale
}

/// Sequential gate and non-maximum suppression over window positions.
#[derive(Debug, Clone)]
struct Gate {
    mode: DetectMode,
    thr_d: f64,
    thr_e: f64,
    half: usize,
    min_sep: f64,
    kind: usize,
    t0: f64,
    h: f64,
    window: usize,
    span: f64,
    /// positions `base .. base + hist.len()`
    hist: VecDeque<Pos>,
    base: usize,
    /// next candidate position to examine
    next: usize,
    pending: Option<Detection>,
}

impl Gate {
    fn new(det: &DiscreteDetector, cfg: &DetectConfig, thr_d: f64, thr_e: f64, t0: f64) -> Self {
        let w = det.window();
        Self {
            mode: cfg.mode,
            thr_d,
            thr_e,
            half: w / 2,
            min_sep: cfg.min_separation.unwrap_or(w as f64 * det.sample_period()),
            kind: det.model().order,
            t0,
            h: det.sample_period(),
            window: w,
            span: det.span(),
            hist: VecDeque::with_capacity(2 * w + 4),
            base: 0,
            next: 0,
            pending: None,
        }
    }

    fn get(&self, k: usize) -> &Pos {
        &self.hist[k - self.base]
    }

    fn end(&self) -> usize {
        self.base + self.hist.len()
    }

    fn push(&mut self, p: Pos, out: &mut Vec<Detection>) {
        self.hist.push_back(p);
        // candidate k needs positions up to k + half
        while self.next + self.half < self.end() {
            let k = self.next;
            self.next += 1;
            self.examine(k, self.end(), out);
        }
        self.flush_settled(out);
        let keep_from = self.next.saturating_sub(self.half);
        while self.base < keep_from {
            self.hist.pop_front();
            self.base += 1;
        }
    }

    /// Emits the pending detection once no later candidate can fall within
    /// `min_sep` of it. Candidates at position `>= next` are no earlier than
    /// the middle of window `next` minus one sample.
    fn flush_settled(&mut self, out: &mut Vec<Detection>) {
        if let Some(p) = self.pending {
            let earliest = window_middle(self.t0, self.h, self.window, self.next as f64) - self.h;
            if earliest - p.time >= self.min_sep {
                out.push(p);
                self.pending = None;
            }
        }
    }

    fn finish(&mut self, out: &mut Vec<Detection>) {
        while self.next < self.end() {
            let k = self.next;
            self.next += 1;
            self.examine(k, self.end(), out);
        }
        if let Some(p) = self.pending.take() {
            out.push(p);
        }
    }

    /// `max |d|` over `[lo, hi)`.
    fn excursion(&self, lo: usize, hi: usize) -> f64 {
        (lo..hi).map(|j| self.get(j).d.abs()).fold(0.0, f64::max)
    }

    /// The smaller of the `max |d|` excursions on either side of `split`.
    fn two_sided_excursion(&self, lo: usize, split: usize, hi: usize) -> f64 {
        self.excursion(lo, split).min(self.excursion(split, hi))
    }

    /// Tests position `k` as a candidate given positions `< end` are known.
    fn examine(&mut self, k: usize, end: usize, out: &mut Vec<Detection>) {
        let lo = k.saturating_sub(self.half);
        let hi = (k + self.half + 1).min(end);
        let cand = match self.mode {
            DetectMode::ZeroCrossing => {
                if k + 1 >= end {
                    return;
                }
                let (a, b) = (*self.get(k), *self.get(k + 1));
                if a.v == 0.0 || !(a.v * b.v <= 0.0) {
                    return;
                }
                // v(k+1) - v(k) ~ h dv/dt at a genuine crossing
                if (b.v - a.v) * (a.slope + b.slope) <= 0.0 {
                    return;
                }
                let score = a.e.abs().max(b.e.abs());
                if score < self.thr_e || self.two_sided_excursion(lo, k + 1, hi) < self.thr_d {
                    return;
                }
                let frac = a.v / (a.v - b.v);
                Detection {
                    time: window_middle(self.t0, self.h, self.window, k as f64 + frac),
                    kind: self.kind,
                    score,
                    window_index: k,
                }
            }
            DetectMode::LinearEstimate => {
                let p = *self.get(k);
                let t_hat = -p.v0 / p.v1;
                if !t_hat.is_finite() || (t_hat - 0.5 * self.span).abs() >= self.h {
                    return;
                }
                let score = p.e.abs();
                if score < self.thr_e || self.two_sided_excursion(lo, k + 1, hi) < self.thr_d {
                    return;
                }
                Detection {
                    time: self.t0 + k as f64 * self.h + t_hat,
                    kind: self.kind,
                    score,
                    window_index: k,
                }
            }
        };
        self.suppress(cand, out);
    }

    fn suppress(&mut self, c: Detection, out: &mut Vec<Detection>) {
        match self.pending {
            Some(p) if c.time - p.time < self.min_sep => {
                if c.score > p.score {
                    self.pending = Some(c);
                }
            }
            Some(p) => {
                out.push(p);
                self.pending = Some(c);
            }
            None => self.pending = Some(c),
        }
    }
}

fn check_mode(det_degree: usize, cfg: &DetectConfig) -> Result<()> {
    if cfg.mode == DetectMode::LinearEstimate && det_degree != 1 {
        return Err(Error::NotLinear(det_degree));
    }
    Ok(())
}

/// Extracts change-points from a trace produced by `det`.
pub fn detect(det: &DiscreteDetector, trace: &DecisionTrace, cfg: &DetectConfig) -> Result<Vec<Detection>> {
    cfg.validate()?;
    check_mode(trace.degree(), cfg)?;
    let thr_d = gate_threshold(&trace.d, trace.window, cfg);
    let thr_e = gate_threshold(&trace.e, trace.window, cfg);
    let mut gate = Gate::new(det, cfg, thr_d, thr_e, trace.t0);
    let slope_powers = Evaluator::new(det, cfg).slope_powers;
    let mut out = Vec::new();
    for k in 0..trace.len() {
        let at = |nu: usize| trace.v_nu.get(nu).map_or(0.0, |v| v[k]);
        // same accumulation order as the evaluator
        let mut slope = 0.0;
        for (nu, q) in slope_powers.iter().enumerate() {
            slope += at(nu) * q;
        }
        let p = Pos { v: trace.v[k], d: trace.d[k], slope, e: trace.e[k], v0: at(0), v1: at(1) };
        gate.push(p, &mut out);
    }
    gate.finish(&mut out);
    Ok(out)
}

/// Convenience: [`eval_windows_with`] followed by [`detect`].
pub fn run(
    det: &DiscreteDetector,
    signal: &[f64],
    t0: f64,
    cfg: &DetectConfig,
) -> Result<(DecisionTrace, Vec<Detection>)> {
    cfg.validate()?;
    let trace = eval_windows_with(det, signal, t0, cfg)?;
    let found = detect(det, &trace, cfg)?;
    Ok((trace, found))
}

/// Online detector fed one sample at a time.
///
/// Samples live in a doubled ring buffer so every window is a contiguous
/// slice and the per-window arithmetic is the batch one. A detection is
/// emitted once the `±W/2` neighbourhood of its crossing is complete and no
/// stronger candidate can still replace it, that is up to `W/2` positions
/// plus `min_separation` after the crossing; [`StreamDetector::finish`]
/// flushes what is left.
#[derive(Debug, Clone)]
pub struct StreamDetector {
    ev: Evaluator,
    buf: Vec<f64>,
    head: usize,
    seen: usize,
    gate: Gate,
    scratch: Vec<f64>,
    diffs: DiffWindow,
    last: Option<f64>,
    out: Vec<Detection>,
}

impl StreamDetector {
    /// `cfg.scale` must not be [`GateScale::TraceMad`], which needs the whole trace.
    pub fn new(det: &DiscreteDetector, cfg: &DetectConfig, t0: f64) -> Result<Self> {
        cfg.validate()?;
        check_mode(det.degree(), cfg)?;
        if cfg.scale == GateScale::TraceMad {
            return Err(Error::Config(
                "streaming needs an analytic or fixed gate scale; trace MAD is not causal".into(),
            ));
        }
        let w = det.window();
        let thr = gate_threshold(&[], w, cfg);
        Ok(Self {
            ev: Evaluator::new(det, cfg),
            buf: vec![0.0; 2 * w],
            head: 0,
            seen: 0,
            gate: Gate::new(det, cfg, thr, thr, t0),
            scratch: Vec::with_capacity(det.weights().len()),
            diffs: DiffWindow::new(w - 1),
            last: None,
            out: Vec::new(),
        })
    }

    /// Pushes one sample; returns the detections that became final.
    pub fn push(&mut self, x: f64) -> Vec<Detection> {
        let w = self.ev.window;
        self.buf[self.head] = x;
        self.buf[self.head + w] = x;
        self.head = (self.head + 1) % w;
        self.seen += 1;
        if let Some(prev) = self.last.replace(x) {
            self.diffs.push((x - prev).abs());
        }
        if self.seen >= w {
            // oldest sample is at `head`
            let window = &self.buf[self.head..self.head + w];
            let sigma = match self.ev.spread {
                Spread::WindowStd => self.ev.window_std(window),
                Spread::Differences => DIFF_SCALE * self.diffs.median(),
            };
            let pos = self.ev.eval(window, sigma, &mut self.scratch);
            self.gate.push(pos, &mut self.out);
        }
        std::mem::take(&mut self.out)
    }

    /// Ends the stream and returns the remaining detections.
    pub fn finish(mut self) -> Vec<Detection> {
        let mut out = std::mem::take(&mut self.out);
        self.gate.finish(&mut out);
        out
    }

    pub fn samples_seen(&self) -> usize {
        self.seen
    }
}
