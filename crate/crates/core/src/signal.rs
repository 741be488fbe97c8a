//! Synthetic test signals with exact ground truth.
//!
//! A signal is a list of segments, each a polynomial in local time (time since
//! the segment start), plus an optional sinusoidal carrier over the whole
//! record. Segment boundaries are the true change-points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Seconds.
    pub start: f64,
    /// Ascending coefficients in local time `t - start`.
    pub coeffs: Vec<f64>,
}

impl Segment {
    pub fn new(start: f64, coeffs: impl Into<Vec<f64>>) -> Self {
        Self { start, coeffs: coeffs.into() }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let u = t - self.start;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

impl Carrier {
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * std::f64::consts::PI * self.frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub carrier: Option<Carrier>,
    /// Seconds.
    pub duration: f64,
    /// Sample period in seconds.
    pub dt: f64,
}

/// Samples `t_i = i * dt` with clean values and the true change times.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub times: Vec<f64>,
    pub clean: Vec<f64>,
    pub truth: Vec<f64>,
}

impl Rendered {
    pub fn segment_count(&self) -> usize {
        self.truth.len() + 1
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSignal(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        let Some(first) = self.segments.first() else {
            return bad("at least one segment is required".into());
        };
        if first.start != 0.0 {
            return bad(format!("first segment must start at 0, got {}", first.start));
        }
        for pair in self.segments.windows(2) {
            if !(pair[1].start > pair[0].start) {
                return bad(format!(
                    "segment starts must increase strictly ({} then {})",
                    pair[0].start, pair[1].start
                ));
            }
        }
        let last = self.segments.last().map_or(0.0, |s| s.start);
        if !(self.duration > last && self.duration.is_finite()) {
            return bad(format!("duration {} must exceed the last segment start {last}", self.duration));
        }
        if self.segments.iter().any(|s| s.coeffs.iter().any(|c| !c.is_finite())) {
            return bad("segment coefficients must be finite".into());
        }
        if let Some(c) = &self.carrier {
            if ![c.amplitude, c.frequency, c.phase].iter().all(|x| x.is_finite()) {
                return bad("carrier parameters must be finite".into());
            }
        }
        Ok(())
    }

    /// `floor(duration / dt)`, tolerant to the rounding of the division.
    pub fn sample_count(&self) -> usize {
        let n = self.duration / self.dt;
        (n + 1e-9 * n.max(1.0)).floor() as usize
    }

    pub fn truth(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn render(&self) -> Result<Rendered> {
        self.validate()?;
        let n = self.sample_count();
        let times: Vec<f64> = (0..n).map(|i| i as f64 * self.dt).collect();
        // a sample belongs to the last segment starting at or before it,
        // with a relative tolerance so boundaries on the grid are inclusive
        let tol = 1e-9 * self.dt;
        let mut seg = 0;
        let clean = times
            .iter()
            .map(|&t| {
                while seg + 1 < self.segments.len() && self.segments[seg + 1].start <= t + tol {
                    seg += 1;
                }
                let base = self.segments[seg].value_at(t);
                base + self.carrier.map_or(0.0, |c| c.value_at(t))
            })
            .collect();
        Ok(Rendered { times, clean, truth: self.truth() })
    }
}

pub const BUILTIN_SUITES: [&str; 3] = ["pc5", "poly6", "sine3"];

/// Fixed, versioned built-in signals.
///
/// - `pc5`: five constant segments alternating around zero, 40 s at 100 Hz.
/// - `poly6`: six segments of gentle linear and quadratic trends separated
///   by jumps, 48 s at 100 Hz.
/// - `sine3`: a slow 0.05 Hz sinusoid on top of three constant levels,
///   30 s at 100 Hz.
pub fn builtin_suite(name: &str) -> Result<SignalSpec> {
    let seg = |start: f64, c: &[f64]| Segment::new(start, c.to_vec());
    let spec = match name {
        "pc5" => SignalSpec {
            segments: vec![
                seg(0.0, &[1.0]),
                seg(8.0, &[-1.0]),
                seg(15.0, &[1.0]),
                seg(24.0, &[-1.0]),
                seg(31.0, &[1.0]),
            ],
            carrier: None,
            duration: 40.0,
            dt: 0.01,
        },
        "poly6" => SignalSpec {
            segments: vec![
                seg(0.0, &[0.0, 0.1]),
                seg(8.0, &[2.0, -0.05, 0.01]),
                seg(16.0, &[-0.5, 0.15]),
                seg(24.5, &[2.5, -0.1]),
                seg(32.0, &[-0.5, 0.05, -0.01]),
                seg(40.0, &[1.5, -0.1]),
            ],
            carrier: None,
            duration: 48.0,
            dt: 0.01,
        },
        "sine3" => SignalSpec {
            segments: vec![seg(0.0, &[0.0]), seg(10.0, &[2.0]), seg(20.0, &[0.5])],
            carrier: Some(Carrier { amplitude: 1.0, frequency: 0.05, phase: 0.0 }),
            duration: 30.0,
            dt: 0.01,
        },
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(spec)
}
