//! A kink (jump in the first derivative) inside a linear trend.
//!
//! `n1 = 1` lets the pre-change signal be any line; `n2 = 1` says the change
//! is a jump of the slope. A step detector would fire nowhere useful here.

use algebraic_changepoint::bench::DetectorSettings;
use algebraic_changepoint::builder::ModelSpec;
use algebraic_changepoint::runtime::{run, GateScale};
use algebraic_changepoint::signal::{Segment, SignalSpec};

fn main() -> algebraic_changepoint::Result<()> {
    let spec = SignalSpec {
        segments: vec![Segment::new(0.0, [1.0, 0.3]), Segment::new(4.0, [2.2, -0.7])],
        carrier: None,
        duration: 8.0,
        dt: 0.01,
    };
    let r = spec.render()?;
    let mut s = DetectorSettings::new(ModelSpec::monomial(1, 1, 0), 200);
    s.detect.scale = GateScale::Analytic;
    let det = s.build(spec.dt)?;
    let (trace, found) = run(&det, &r.clean, 0.0, &s.detect)?;
    println!("kernel degree in t: {}", trace.degree());
    for d in &found {
        println!("kink at {:.3} s (truth 4.000), score {:.2}", d.time, d.score);
    }
    Ok(())
}
