//! Batch detection of level jumps, with the zero-crossing rule and with the
//! linear estimate `t = -v0/v1`.

use algebraic_changepoint::bench::DetectorSettings;
use algebraic_changepoint::builder::ModelSpec;
use algebraic_changepoint::noise::{apply_noise, NoiseKind, NoiseSpec};
use algebraic_changepoint::runtime::{run, DetectMode};
use algebraic_changepoint::signal::{Segment, SignalSpec};

fn main() -> algebraic_changepoint::Result<()> {
    let spec = SignalSpec {
        segments: vec![Segment::new(0.0, [0.0]), Segment::new(3.0, [2.0]), Segment::new(6.5, [0.5])],
        carrier: None,
        duration: 10.0,
        dt: 0.01,
    };
    let r = spec.render()?;
    let noisy = apply_noise(&r.clean, &NoiseSpec::new(NoiseKind::Normal, 10.0, 3))?;

    let mut settings = DetectorSettings::new(ModelSpec::step(), 128);
    let det = settings.build(spec.dt)?;
    println!("truth: {:?}", r.truth);

    for mode in [DetectMode::ZeroCrossing, DetectMode::LinearEstimate] {
        settings.detect.mode = mode;
        let (_, found) = run(&det, &noisy, 0.0, &settings.detect)?;
        let times: Vec<String> = found.iter().map(|d| format!("{:.3}", d.time)).collect();
        println!("{:>15}: {}", mode.name(), times.join(", "));
    }
    Ok(())
}
