//! The sampled kernel against brute-force iterated integration.
//!
//! Both evaluate the same integral operator on a window of a smooth signal;
//! the kernel path is one dot product per delay power, the oracle repeats
//! cumulative quadrature. They agree to rounding.

use algebraic_changepoint::builder::{build_detector, ModelSpec};
use algebraic_changepoint::kernel::{discretize, kernelize, oracle_iterated_integration, Quadrature};

fn main() -> algebraic_changepoint::Result<()> {
    let (w, h) = (64, 0.01);
    let det = build_detector(&ModelSpec::monomial(1, 0, 0))?;
    let disc = discretize(&kernelize(&det)?, w, h, Quadrature::Trapezoid)?;
    let x: Vec<f64> = (0..w).map(|i| (3.0 * i as f64 * h).sin() + 0.2 * i as f64 * h).collect();

    let oracle = oracle_iterated_integration(&det, &x, h, Quadrature::Trapezoid)?;
    for (nu, wts) in disc.weights().iter().enumerate() {
        let kernel: f64 = wts.iter().zip(&x).map(|(a, b)| a * b).sum();
        let rel = (kernel - oracle[nu]).abs() / oracle[nu].abs().max(1e-300);
        println!("v{nu}: kernel {kernel:+.15e}  oracle {:+.15e}  rel {rel:.1e}", oracle[nu]);
    }
    Ok(())
}
