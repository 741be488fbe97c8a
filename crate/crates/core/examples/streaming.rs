//! Sample-at-a-time detection over a long record, checked against batch.
//!
//!     cargo run --release --example streaming

use std::time::Instant;

use algebraic_changepoint::bench::DetectorSettings;
use algebraic_changepoint::builder::ModelSpec;
use algebraic_changepoint::noise::NoiseRng;
use algebraic_changepoint::runtime::{run, GateScale, StreamDetector};

fn main() -> algebraic_changepoint::Result<()> {
    let n = 1_000_000;
    let h = 1e-3;
    let mut rng = NoiseRng::new(11);
    // a jump every 100k samples on top of unit white noise
    let x: Vec<f64> = (0..n)
        .map(|i| if (i / 100_000) % 2 == 1 { 4.0 } else { 0.0 } + rng.next_normal())
        .collect();

    let mut s = DetectorSettings::new(ModelSpec::step(), 128);
    s.detect.scale = GateScale::Analytic;
    // a million samples of white noise: raise the gate to keep false alarms rare
    s.detect.kappa = 4.0;
    let det = s.build(h)?;

    let start = Instant::now();
    let mut sd = StreamDetector::new(&det, &s.detect, 0.0)?;
    let mut found = Vec::new();
    for &v in &x {
        found.extend(sd.push(v));
    }
    found.extend(sd.finish());
    let elapsed = start.elapsed();

    let (_, batch) = run(&det, &x, 0.0, &s.detect)?;
    println!("{n} samples in {elapsed:?}, {} detections, batch identical: {}", found.len(), batch == found);
    for d in found.iter().take(5) {
        println!("  {:.4} s", d.time);
    }
    Ok(())
}
