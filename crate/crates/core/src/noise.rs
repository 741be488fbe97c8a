//! Seeded corrupting noises: normal, uniform and Perlin additive noise, and
//! uniform multiplicative noise, each calibrated to a target SNR.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Seeded generator behind every random draw in the crate: ChaCha8, whose
/// stream for a given `u64` seed is fixed across platforms and releases.
#[derive(Debug, Clone)]
pub struct NoiseRng(ChaCha8Rng);

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.0.random()
    }

    pub fn next_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// 64-bit mixing finalizer (the one from SplitMix64), used as a stateless
/// hash for Perlin lattice gradients.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerlinParams {
    /// Lattice spacing of the first octave, in samples.
    pub lattice_period: usize,
    pub octaves: usize,
    pub persistence: f64,
}

impl Default for PerlinParams {
    fn default() -> Self {
        Self { lattice_period: 16, octaves: 3, persistence: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Normal,
    Uniform,
    Perlin,
    MultUniform,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Uniform => "uniform",
            Self::Perlin => "perlin",
            Self::MultUniform => "mult_uniform",
        }
    }

    pub fn is_additive(self) -> bool {
        self != Self::MultUniform
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "normal" => Self::Normal,
            "uniform" => Self::Uniform,
            "perlin" => Self::Perlin,
            "mult_uniform" | "mult-uniform" => Self::MultUniform,
            other => return Err(Error::InvalidNoise(format!("unknown noise kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub snr_db: f64,
    pub seed: u64,
    pub perlin: PerlinParams,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, snr_db: f64, seed: u64) -> Self {
        Self { kind, snr_db, seed, perlin: PerlinParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.perlin.octaves < 1 {
            return Err(Error::InvalidNoise("perlin octaves must be at least 1".into()));
        }
        if self.perlin.lattice_period < 2 {
            return Err(Error::InvalidNoise("perlin lattice period must be at least 2".into()));
        }
        if self.snr_db.is_nan() {
            return Err(Error::InvalidNoise("SNR is NaN".into()));
        }
        Ok(())
    }
}

fn fade(u: f64) -> f64 {
    u * u * u * (u * (u * 6.0 - 15.0) + 10.0)
}

/// Gradient in `[-1, 1)` attached to lattice point `i` of octave `octave`.
fn lattice_gradient(seed: u64, octave: usize, i: i64) -> f64 {
    let h = mix64(seed ^ mix64((octave as u64) << 32 ^ i as u64));
    (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Single-octave gradient noise at position `x` (in lattice units), given
/// the gradients at the two surrounding lattice points.
pub fn gradient_noise(g0: f64, g1: f64, u: f64) -> f64 {
    let a = g0 * u;
    let b = g1 * (u - 1.0);
    a + fade(u) * (b - a)
}

/// Classic 1-D Perlin noise at a sample index: octave `k` has lattice
/// spacing `period / 2^k` and weight `persistence^k`.
pub fn perlin1d(seed: u64, params: &PerlinParams, index: usize) -> f64 {
    let mut total = 0.0;
    let mut amp = 1.0;
    for k in 0..params.octaves {
        let x = index as f64 * (1u64 << k) as f64 / params.lattice_period as f64;
        let i0 = x.floor();
        let u = x - i0;
        let i0 = i0 as i64;
        let g0 = lattice_gradient(seed, k, i0);
        let g1 = lattice_gradient(seed, k, i0 + 1);
        total += amp * gradient_noise(g0, g1, u);
        amp *= params.persistence;
    }
    total
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn raw_noise(spec: &NoiseSpec, n: usize) -> Vec<f64> {
    let mut rng = NoiseRng::new(spec.seed);
    match spec.kind {
        NoiseKind::Normal => (0..n).map(|_| rng.next_normal()).collect(),
        NoiseKind::Uniform | NoiseKind::MultUniform => {
            (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect()
        }
        NoiseKind::Perlin => (0..n).map(|i| perlin1d(spec.seed, &spec.perlin, i)).collect(),
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Corrupts `clean` with noise whose power is `P_signal * 10^(-snr/10)`,
/// where `P_signal` is the mean square of `clean`.
///
/// Additive noises are drawn, centered and scaled so that the realized noise
/// power is exactly on target. Multiplicative noise is `clean * (1 + u)` with
/// `u` centered uniform, its half-width solved so that `clean * u` meets the
/// target power on this particular signal.
pub fn apply_noise(clean: &[f64], spec: &NoiseSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if clean.is_empty() || spec.snr_db == f64::INFINITY {
        return Ok(clean.to_vec());
    }
    let p_signal = mean_square(clean);
    if p_signal == 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let target = p_signal * 10f64.powf(-spec.snr_db / 10.0);
    let mut raw = raw_noise(spec, clean.len());
    remove_mean(&mut raw);
    if spec.kind.is_additive() {
        let p_raw = mean_square(&raw);
        if p_raw == 0.0 {
            return Err(Error::InvalidNoise("noise source produced a constant".into()));
        }
        let scale = (target / p_raw).sqrt();
        Ok(clean.iter().zip(&raw).map(|(c, r)| c + scale * r).collect())
    } else {
        let p_raw = clean.iter().zip(&raw).map(|(c, u)| (c * u).powi(2)).sum::<f64>()
            / clean.len() as f64;
        let scale = (target / p_raw).sqrt();
        Ok(clean.iter().zip(&raw).map(|(c, u)| c * (1.0 + scale * u)).collect())
    }
}
