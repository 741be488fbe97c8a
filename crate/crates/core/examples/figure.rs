//! A two-panel SVG figure: noisy and noise-free signal on
//! top, decision value below, detections marked in both.
//!
//!     cargo run --release --example figure -- sine3 out.svg

use std::path::PathBuf;

use algebraic_changepoint::bench::suite_detector;
use algebraic_changepoint::noise::{apply_noise, NoiseKind, NoiseSpec};
use algebraic_changepoint::plot::{emit_plot, figure, FigureData};
use algebraic_changepoint::runtime::run;
use algebraic_changepoint::signal::builtin_suite;

fn main() -> algebraic_changepoint::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().unwrap_or_else(|| "pc5".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| format!("{suite}.svg")));

    let spec = builtin_suite(&suite)?;
    let r = spec.render()?;
    let noisy = apply_noise(&r.clean, &NoiseSpec::new(NoiseKind::Normal, 0.0, 5))?;
    let settings = suite_detector(&suite)?;
    let (trace, found) = run(&settings.build(spec.dt)?, &noisy, 0.0, &settings.detect)?;

    let t_trace: Vec<f64> = (0..trace.len()).map(|k| trace.t_of(k)).collect();
    let det_times: Vec<f64> = found.iter().map(|d| d.time).collect();
    let title = format!("{suite} -- normal additive noise -- SNR: 0 dB");
    let plot = figure(&FigureData {
        title: &title,
        times: &r.times,
        signal: &noisy,
        clean: Some(&r.clean),
        decision: Some((&t_trace, &trace.d)),
        detections: &det_times,
        truth: &r.truth,
    });
    emit_plot(&plot, &out)?;
    println!("{} detections, wrote {}", found.len(), out.display());
    Ok(())
}
