//! TOML configuration shared by the `simulate`, `detect` and `bench`
//! subcommands. Every key is optional; command-line flags override the file.
//! The schema is described in `docs/config.md`.

use std::path::Path;

use serde::Deserialize;

use crate::bench::DetectorSettings;
use crate::builder::{ModelSpec, X2Kind};
use crate::error::{Error, Result};
use crate::noise::{NoiseKind, PerlinParams};
use crate::runtime::{DetectConfig, GateScale};
use crate::signal::{builtin_suite, Carrier, Segment, SignalSpec};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub bench: BenchSection,
}

/// Either `suite = "pc5"` or an explicit segment list.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub suite: Option<String>,
    pub segments: Option<Vec<Segment>>,
    pub carrier: Option<Carrier>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: Option<String>,
    pub snr_db: Option<f64>,
    /// Several SNR values, for `bench`.
    pub snr_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub perlin: PerlinSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerlinSection {
    pub lattice_period: Option<usize>,
    pub octaves: Option<usize>,
    pub persistence: Option<f64>,
}

/// A gate scale written either as a name or as a number.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScaleValue {
    Name(String),
    Fixed(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub order: Option<usize>,
    /// `monomial` (default) or `polynomial`.
    pub x2: Option<String>,
    pub extra_depth: Option<usize>,
    pub window: Option<usize>,
    pub quadrature: Option<String>,
    pub trend_projection: Option<bool>,
    pub kappa: Option<f64>,
    pub min_separation: Option<f64>,
    pub epsilon: Option<f64>,
    pub mode: Option<String>,
    pub scale: Option<ScaleValue>,
    pub spread: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub runs: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::parse(&text)
    }
}

impl SignalSection {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn resolve(&self) -> Result<SignalSpec> {
        if let Some(name) = &self.suite {
            if self.segments.is_some() || self.carrier.is_some() || self.duration.is_some() {
                return Err(Error::Config("signal: `suite` excludes segments/carrier/duration".into()));
            }
            let mut spec = builtin_suite(name)?;
            if let Some(dt) = self.dt {
                spec.dt = dt;
            }
            return Ok(spec);
        }
        let missing = |k: &str| Error::Config(format!("signal: missing `{k}` (or set `suite`)"));
        let spec = SignalSpec {
            segments: self.segments.clone().ok_or_else(|| missing("segments"))?,
            carrier: self.carrier,
            duration: self.duration.ok_or_else(|| missing("duration"))?,
            dt: self.dt.ok_or_else(|| missing("dt"))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl NoiseSection {
    pub fn kind(&self) -> Result<Option<NoiseKind>> {
        self.kind.as_deref().map(str::parse).transpose()
    }

    pub fn perlin(&self) -> PerlinParams {
        let d = PerlinParams::default();
        PerlinParams {
            lattice_period: self.perlin.lattice_period.unwrap_or(d.lattice_period),
            octaves: self.perlin.octaves.unwrap_or(d.octaves),
            persistence: self.perlin.persistence.unwrap_or(d.persistence),
        }
    }
}

impl DetectorSection {
    /// Overlays the keys that are present on `base`.
    pub fn apply(&self, base: &mut DetectorSettings) -> Result<()> {
        if self.n1.is_some() || self.n2.is_some() || self.order.is_some() || self.x2.is_some() {
            let (n1, n2) = (self.n1.unwrap_or(0), self.n2.unwrap_or(0));
            let order = self.order.unwrap_or(0);
            base.model = match self.x2.as_deref().unwrap_or("monomial") {
                "monomial" => ModelSpec::monomial(n1, n2, order),
                "polynomial" => ModelSpec::polynomial(n1, n2, order),
                other => return Err(Error::Config(format!("detector: unknown x2 `{other}`"))),
            };
        }
        if let Some(e) = self.extra_depth {
            base.model.extra_depth = e;
        }
        if let Some(w) = self.window {
            base.window = w;
        }
        if let Some(q) = &self.quadrature {
            base.quadrature = q.parse()?;
        }
        if let Some(p) = self.trend_projection {
            base.trend_projection = p;
        }
        self.apply_detect(&mut base.detect)
    }

    pub fn apply_detect(&self, cfg: &mut DetectConfig) -> Result<()> {
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        if let Some(m) = self.min_separation {
            cfg.min_separation = Some(m);
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.parse()?;
        }
        match &self.scale {
            Some(ScaleValue::Name(s)) => cfg.scale = s.parse()?,
            Some(ScaleValue::Fixed(x)) => cfg.scale = GateScale::Fixed(*x),
            None => {}
        }
        if let Some(s) = &self.spread {
            cfg.spread = s.parse()?;
        }
        cfg.validate()
    }
}

/// `"n1,n2,order"` to a monomial model.
pub fn parse_model(s: &str) -> Result<ModelSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.parse().map_err(|_| Error::Config(format!("model `{s}`: expected n1,n2,order"))))
        .collect::<Result<_>>()?;
    match nums[..] {
        [n1, n2, order] => Ok(ModelSpec::monomial(n1, n2, order)),
        [n1, n2] => Ok(ModelSpec::monomial(n1, n2, 0)),
        _ => Err(Error::Config(format!("model `{s}`: expected n1,n2,order"))),
    }
}

/// Short text form of a model, as used in figure titles and reports.
pub fn model_label(m: &ModelSpec) -> String {
    let x2 = match &m.x2 {
        X2Kind::Monomial { n2 } => format!("n2={n2}"),
        X2Kind::Polynomial { n2 } => format!("n2<={n2}"),
        X2Kind::Rational { a, b } => format!("x2=({a})/({b})"),
    };
    format!("n1={} {x2} order={}", m.n1, m.order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let cfg = FileConfig::parse(
            r#"
seed = 7

[signal]
duration = 5.0
dt = 0.01
segments = [ { start = 0.0, coeffs = [1.0] }, { start = 2.5, coeffs = [3.0, 0.5] } ]
carrier = { amplitude = 0.2, frequency = 1.0 }

[noise]
kind = "perlin"
snr_db = 10
perlin = { octaves = 4 }

[detector]
n1 = 1
window = 128
scale = "analytic"
kappa = 2.5

[bench]
runs = 10
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        let spec = cfg.signal.resolve().unwrap();
        assert_eq!(spec.truth(), vec![2.5]);
        assert_eq!(spec.carrier.unwrap().phase, 0.0);
        assert_eq!(cfg.noise.kind().unwrap(), Some(NoiseKind::Perlin));
        assert_eq!(cfg.noise.perlin().octaves, 4);
        assert_eq!(cfg.noise.perlin().lattice_period, 16);
        let mut s = DetectorSettings::new(ModelSpec::step(), 64);
        cfg.detector.apply(&mut s).unwrap();
        assert_eq!(s.model, ModelSpec::monomial(1, 0, 0));
        assert_eq!(s.window, 128);
        assert_eq!(s.detect.scale, GateScale::Analytic);
        assert_eq!(s.detect.kappa, 2.5);
        assert_eq!(cfg.bench.runs, Some(10));
    }

    #[test]
    fn numeric_scale_and_suite() {
        let cfg = FileConfig::parse("[signal]\nsuite = \"sine3\"\n[detector]\nscale = 0.1\n").unwrap();
        assert_eq!(cfg.signal.resolve().unwrap(), builtin_suite("sine3").unwrap());
        let mut d = DetectConfig::default();
        cfg.detector.apply_detect(&mut d).unwrap();
        assert_eq!(d.scale, GateScale::Fixed(0.1));
    }

    #[test]
    fn errors() {
        assert!(FileConfig::parse("bogus = 1").is_err());
        assert!(FileConfig::parse("[detector]\nwindw = 3").is_err());
        let cfg = FileConfig::parse("[signal]\nduration = 3.0").unwrap();
        assert!(cfg.signal.resolve().is_err());
        let cfg = FileConfig::parse("[detector]\nkappa = -1").unwrap();
        assert!(cfg.detector.apply_detect(&mut DetectConfig::default()).is_err());
    }

    #[test]
    fn model_strings() {
        assert_eq!(parse_model("0,0,0").unwrap(), ModelSpec::step());
        assert_eq!(parse_model("1, 2").unwrap(), ModelSpec::monomial(1, 2, 0));
        assert!(parse_model("1").is_err());
        assert!(parse_model("a,b,c").is_err());
    }
}
