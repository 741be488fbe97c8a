//! Segment-count histograms over seeded Monte Carlo campaigns.
//!
//!     cargo run --release --example segment_histograms -- pc5 normal 25,20,10,0,-6
//!
//! Defaults to all three built-in suites under normal noise on that grid.

use algebraic_changepoint::bench::{format_text, run_grid, BenchReport, CampaignConfig};
use algebraic_changepoint::noise::NoiseKind;
use algebraic_changepoint::signal::BUILTIN_SUITES;

fn main() -> algebraic_changepoint::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let suites: Vec<&str> = match args.first() {
        Some(s) => vec![s.as_str()],
        None => BUILTIN_SUITES.to_vec(),
    };
    let noise: NoiseKind = args.get(1).map_or(Ok(NoiseKind::Normal), |s| s.parse())?;
    let grid: Vec<f64> = match args.get(2) {
        Some(g) => g.split(',').filter_map(|v| v.parse().ok()).collect(),
        None => vec![25.0, 20.0, 10.0, 0.0, -6.0],
    };

    for suite in suites {
        let t = std::time::Instant::now();
        let cfg = CampaignConfig::for_suite(suite, noise, grid[0], 2024)?;
        let report = BenchReport::from_campaigns(&run_grid(&cfg, &grid)?);
        println!("{suite} ({} runs per row, {:.1?})", cfg.runs, t.elapsed());
        print!("{}", format_text(&report));
    }
    Ok(())
}
