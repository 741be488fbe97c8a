//! Derive the detector for a model, check it exactly, and print its
//! time-domain kernels.
//!
//!     cargo run --example derive_detector -- 1 0 0
//!
//! Arguments are `n1 n2 order` (default `0 0 0`, the step detector).

use algebraic_changepoint::builder::{build_detector, verify_detector, ModelSpec};
use algebraic_changepoint::kernel::kernelize;

fn main() -> algebraic_changepoint::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n1, n2, order) = match args[..] {
        [a, b, c] => (a, b, c),
        _ => (0, 0, 0),
    };
    let model = ModelSpec::monomial(n1, n2, order);
    let det = build_detector(&model)?;
    let report = verify_detector(&det)?;

    println!("n1={n1} n2={n2} order={order}: depth {}, degree {} in t", det.depth, det.degree());
    println!("{}", det.omega);
    println!("{} residual checks, all exactly zero", report.checks);

    for (nu, k) in kernelize(&det)?.kernels().iter().enumerate() {
        println!("K{nu}(T, tau) = {k}");
    }
    Ok(())
}
