//! The built-in signals and the four noise classes at a calibrated SNR.

use algebraic_changepoint::noise::{apply_noise, NoiseKind, NoiseSpec};
use algebraic_changepoint::signal::{builtin_suite, BUILTIN_SUITES};

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn main() -> algebraic_changepoint::Result<()> {
    for name in BUILTIN_SUITES {
        let r = builtin_suite(name)?.render()?;
        println!("{name}: {} samples, changes at {:?}", r.clean.len(), r.truth);
        for kind in [NoiseKind::Normal, NoiseKind::Uniform, NoiseKind::Perlin, NoiseKind::MultUniform] {
            let noisy = apply_noise(&r.clean, &NoiseSpec::new(kind, 10.0, 1))?;
            let noise: Vec<f64> = noisy.iter().zip(&r.clean).map(|(a, b)| a - b).collect();
            let snr = 10.0 * (power(&r.clean) / power(&noise)).log10();
            println!("  {kind:<13} measured SNR {snr:6.2} dB");
        }
    }
    Ok(())
}
