//! Acceptance criteria, one line each: `PASS`/`FAIL`, the criterion, the
//! measured value and the pinned tolerance. Runs sequentially (timing
//! criteria must not compete with other tests) and exits nonzero on any
//! failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use algebraic_changepoint::algebra::{DiffOperator, Polynomial, RationalFunction, Q};
use algebraic_changepoint::bench::{run_campaign, CampaignConfig, DetectorSettings};
use algebraic_changepoint::builder::{build_detector, verify_detector, ModelSpec};
use algebraic_changepoint::kernel::{discretize, kernelize, oracle_iterated_integration, Quadrature};
use algebraic_changepoint::noise::{NoiseKind, NoiseRng};
use algebraic_changepoint::runtime::{eval_windows, run, DetectConfig, GateScale, StreamDetector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

fn scalar() -> impl Strategy<Value = Q> {
    (-5i64..=5, 1i64..=3).prop_map(|(n, d)| Q::new(n.into(), d.into()))
}

fn rf() -> impl Strategy<Value = RationalFunction> {
    let poly = prop::collection::vec(scalar(), 0..=3).prop_map(Polynomial::from_coeffs);
    (poly, 0usize..=2, prop::option::of(-2i64..=2)).prop_map(|(n, k, lin)| {
        let mut den = Polynomial::s_pow(k);
        if let Some(c) = lin {
            den = &den * &Polynomial::from_ints(&[c, 1]);
        }
        RationalFunction::new(n, den).expect("nonzero denominator")
    })
}

fn op() -> impl Strategy<Value = DiffOperator> {
    prop::collection::vec((0usize..=2, rf()), 0..=3).prop_map(DiffOperator::from_terms)
}

fn symbolic_soundness() -> Outcome {
    let mut models = 0;
    for n1 in 0..=4 {
        for n2 in 0..=4 {
            for order in 0..=2 {
                for m in [ModelSpec::monomial(n1, n2, order), ModelSpec::polynomial(n1, n2, order)] {
                    models += 1;
                    let ok = build_detector(&m).and_then(|d| verify_detector(&d)).map(|r| r.is_exact());
                    if !matches!(ok, Ok(true)) {
                        return outcome(false, format!("model {m:?}: {ok:?}"));
                    }
                }
            }
        }
    }

    let cases = 1000;
    fn named<T: std::fmt::Debug>(
        name: &str,
        r: Result<(), proptest::test_runner::TestError<T>>,
    ) -> Result<(), String> {
        r.map_err(|e| format!("{name}: {e}"))
    }
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let results: [Result<(), String>; 4] = [
        named(
            "associativity",
            runner.run(&(op(), op(), op()), |(p, q, r)| {
                prop_assert_eq!(p.compose(&q).compose(&r), p.compose(&q.compose(&r)));
                Ok(())
            }),
        ),
        named(
            "distributivity",
            runner.run(&(op(), op(), op()), |(p, q, r)| {
                prop_assert_eq!(p.compose(&(&q + &r)), &p.compose(&q) + &p.compose(&r));
                prop_assert_eq!((&q + &r).compose(&p), &q.compose(&p) + &r.compose(&p));
                Ok(())
            }),
        ),
        named(
            "action",
            runner.run(&(op(), op(), rf()), |(p, q, f)| {
                prop_assert_eq!(p.compose(&q).apply(&f), p.apply(&q.apply(&f)));
                Ok(())
            }),
        ),
        named(
            "commutation",
            runner.run(&rf(), |rho| {
                let m = DiffOperator::from_rf(rho.clone());
                let comm = &DiffOperator::d().compose(&m) - &m.compose(&DiffOperator::d());
                prop_assert_eq!(comm, DiffOperator::from_rf(rho.derivative()));
                Ok(())
            }),
        ),
    ];
    for r in results {
        if let Err(e) = r {
            return outcome(false, e);
        }
    }
    outcome(true, format!("{models} models exact, {} randomized algebra cases", 4 * cases))
}

// ---------------------------------------------------------------- 2

fn smooth_signal(rng: &mut NoiseRng, n: usize, h: f64) -> Vec<f64> {
    let mut u = || 2.0 * rng.next_f64() - 1.0;
    let (a, b, c) = (u(), u(), u());
    let waves: Vec<(f64, f64, f64)> = (0..3).map(|_| (u(), 1.0 + 10.0 * u().abs(), 3.0 * u())).collect();
    (0..n)
        .map(|i| {
            let t = i as f64 * h;
            a + b * t + c * t * t + waves.iter().map(|(amp, f, ph)| amp * (f * t + ph).sin()).sum::<f64>()
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let (w, h) = (64, 0.01);
    let models = [
        ModelSpec::step(),
        ModelSpec::monomial(1, 0, 0),
        ModelSpec::monomial(0, 1, 0),
        ModelSpec::monomial(1, 1, 1),
        ModelSpec::polynomial(0, 1, 0),
    ];
    let mut rng = NoiseRng::new(0xacce97);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let m = &models[i % models.len()];
        let op = build_detector(m).unwrap();
        let disc = discretize(&kernelize(&op).unwrap(), w, h, Quadrature::Trapezoid).unwrap();
        let x = smooth_signal(&mut rng, w, h);
        let oracle = oracle_iterated_integration(&op, &x, h, Quadrature::Trapezoid).unwrap();
        for (wts, o) in disc.weights().iter().zip(&oracle) {
            let k: f64 = wts.iter().zip(&x).map(|(a, b)| a * b).sum();
            worst = worst.max((k - o).abs() / o.abs());
        }
    }
    outcome(worst <= 1e-10, format!("max relative difference {worst:.2e} over 100 signals (tol 1e-10)"))
}

// ---------------------------------------------------------------- 3

fn closed_form_recovery() -> Outcome {
    let (w, h) = (64, 0.01);
    let g = 1.0;
    let raw = discretize(&kernelize(&build_detector(&ModelSpec::step()).unwrap()).unwrap(), w, h, Quadrature::Trapezoid)
        .unwrap();
    let settings = DetectorSettings::new(ModelSpec::step(), w);
    let det = settings.build(h).unwrap();
    let big_t = raw.span();
    let n = 400;
    let mut rng = NoiseRng::new(33);
    let (mut worst_det, mut worst_lin, mut worst_id): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let jump = 100 + (rng.next_u64() % 200) as usize;
        let truth = jump as f64 * h;
        let x: Vec<f64> = (0..n).map(|i| if i >= jump { g } else { 0.0 }).collect();

        let (_, found) = run(&det, &x, 0.0, &DetectConfig::default()).unwrap();
        if found.len() != 1 {
            return outcome(false, format!("jump at {truth}: {} detections", found.len()));
        }
        worst_det = worst_det.max((found[0].time - truth).abs());

        // identity v = g r (T - r)(r - t) and the linear estimate on raw
        // kernel values, for every window the jump falls strictly inside
        let tr = eval_windows(&raw, &x).unwrap();
        for k in (jump + 1).saturating_sub(w)..jump.min(tr.len()) {
            let r = (jump - k) as f64 * h;
            if r <= 0.0 || r >= big_t {
                continue;
            }
            let (v0, v1) = (tr.v_nu[0][k], tr.v_nu[1][k]);
            // trapezoid error with the jump on node r: the node carries a full
            // interior weight h instead of h/2, plus the smooth-part term
            // (T - r) h^2 / 12 max|K''| (K0'' = 6, K1'' = 0). For these
            // polynomial kernels the bound is attained, hence the rounding margin.
            let k0 = 3.0 * r * r - 2.0 * big_t * r;
            let k1 = big_t - 2.0 * r;
            let margin = 1.0 + 1e-9;
            let tol0 = 1e-12 + margin * g * (0.5 * h * k0.abs() + (big_t - r) * h * h / 2.0);
            let tol1 = 1e-12 + margin * g * 0.5 * h * k1.abs();
            let err0 = (v0 - g * r * r * (big_t - r)).abs();
            let err1 = (v1 + g * r * (big_t - r)).abs();
            worst_id = worst_id.max(err0 / tol0).max(err1 / tol1);
            // flanking windows: the jump within one sample of the middle
            if (r - big_t / 2.0).abs() <= h {
                worst_lin = worst_lin.max((k as f64 * h + (-v0 / v1) - truth).abs());
            }
        }
    }
    let pass = worst_det <= 2.0 * h && worst_lin <= h && worst_id <= 1.0;
    outcome(
        pass,
        format!(
            "20 jumps: detection error {worst_det:.2e} s (tol 2h = {}), linear estimate {worst_lin:.2e} s (tol h), \
             identity residual {worst_id:.2} x quadrature bound (tol 1)",
            2.0 * h
        ),
    )
}

// ---------------------------------------------------------------- 4, 5

const GRID: [f64; 5] = [25.0, 20.0, 10.0, 0.0, -6.0];
const SEED: u64 = 2024;

struct Row {
    suite: &'static str,
    noise: NoiseKind,
    snr: f64,
    row: algebraic_changepoint::bench::ReportRow,
    elapsed: Duration,
}

fn campaign(suite: &'static str, noise: NoiseKind, snr: f64) -> Row {
    let start = Instant::now();
    let cfg = CampaignConfig::for_suite(suite, noise, snr, SEED).unwrap();
    let row = run_campaign(&cfg).unwrap().row;
    Row { suite, noise, snr, row, elapsed: start.elapsed() }
}

fn describe(r: &Row) -> String {
    format!(
        "{} {} {} dB: {}/100 at {} (mode {}, {:.1?})",
        r.suite, r.noise, r.snr, r.row.count(r.row.true_segments), r.row.true_segments, r.row.mode(), r.elapsed
    )
}

fn table_regime(print: &mut dyn FnMut(&str, Outcome)) {
    let mut grid = Vec::new();
    for suite in ["pc5", "poly6", "sine3"] {
        for snr in GRID {
            grid.push(campaign(suite, NoiseKind::Normal, snr));
        }
    }
    let find = |s: &str, snr: f64| grid.iter().find(|r| r.suite == s && r.snr == snr).unwrap();
    let slow = grid.iter().map(|r| r.elapsed).max().unwrap();
    let timing = slow < Duration::from_secs(60);

    let r = find("pc5", 0.0);
    print("4a pc5 normal 0 dB >= 90 at 5", outcome(r.row.count(5) >= 90 && timing, describe(r)));
    let r = find("pc5", -6.0);
    print(
        "4b pc5 normal -6 dB >= 65 at 5, >= 85 in 4-6",
        outcome(r.row.count(5) >= 65 && r.row.count_in(4, 6) >= 85 && timing, format!("{}; {} in 4-6", describe(r), r.row.count_in(4, 6))),
    );
    let r = find("poly6", 25.0);
    print("4c poly6 normal 25 dB >= 70 at 6", outcome(r.row.count(6) >= 70 && timing, describe(r)));
    let r = find("sine3", 25.0);
    print("4d sine3 normal 25 dB >= 95 at 3", outcome(r.row.count(3) >= 95 && timing, describe(r)));

    let mut worst: f64 = 0.0;
    let mut fractions = Vec::new();
    for suite in ["pc5", "poly6", "sine3"] {
        let f: Vec<f64> = GRID.iter().map(|&s| find(suite, s).row.fraction_true()).collect();
        for i in 1..f.len() {
            // a later (noisier) row may exceed any earlier one by at most 5 points
            let best_before = f[..i].iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max(f[i] - best_before);
        }
        fractions.push(format!("{suite} {:?}", f.iter().map(|x| (x * 100.0).round() as i64).collect::<Vec<_>>()));
    }
    print(
        "4e monotone in SNR (25..-6 dB)",
        outcome(worst <= 0.05, format!("max increase {:.0} pts (tol 5); {}", worst * 100.0, fractions.join("; "))),
    );
    print(
        "4f each campaign < 60 s",
        outcome(timing, format!("slowest {slow:.1?} over {} campaigns", grid.len())),
    );

    let r = campaign("poly6", NoiseKind::MultUniform, 20.0);
    print("5a poly6 mult_uniform 20 dB >= 60 at 6", outcome(r.row.count(6) >= 60, describe(&r)));
    for (suite, snr) in [("pc5", 10.0), ("poly6", 20.0), ("sine3", 10.0)] {
        let r = campaign(suite, NoiseKind::Perlin, snr);
        let t = r.row.true_segments;
        let ok = (t - 1..=t + 1).contains(&r.row.mode());
        print(&format!("5b {suite} perlin {snr} dB mode in truth+-1"), outcome(ok, describe(&r)));
    }
}

// ---------------------------------------------------------------- 6

fn performance() -> Outcome {
    let (n, w, h) = (1_000_000, 128, 0.001);
    let mut rng = NoiseRng::new(6);
    let x: Vec<f64> =
        (0..n).map(|i| if (i / 50_000) % 2 == 1 { 3.0 } else { 0.0 } + rng.next_normal()).collect();
    let mut s = DetectorSettings::new(ModelSpec::step(), w);
    s.detect.scale = GateScale::Analytic;
    let det = s.build(h).unwrap();
    assert_eq!(det.degree(), 1);

    let start = Instant::now();
    let mut sd = StreamDetector::new(&det, &s.detect, 0.0).unwrap();
    let mut streamed = Vec::new();
    for &v in &x {
        streamed.extend(sd.push(v));
    }
    streamed.extend(sd.finish());
    let elapsed = start.elapsed();

    let (_, batch) = run(&det, &x, 0.0, &s.detect).unwrap();
    let same = batch == streamed;
    outcome(
        elapsed < Duration::from_secs(1) && same,
        format!(
            "10^6 samples W={w} streamed in {elapsed:.1?} (tol 1 s); {} detections, batch identical: {same}",
            streamed.len()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn acpd(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_acpd"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("acpd {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    std::fs::write(dir.join(format!("stdout_{}.txt", args[0])), &out.stdout).map_err(|e| e.to_string())
}

fn pipeline(dir: &Path) -> Result<(), String> {
    acpd(dir, &["derive", "--n1", "0", "--n2", "0", "--window", "64", "--dt", "0.01", "--emit-weights", "w.csv"])?;
    acpd(dir, &["simulate", "--suite", "pc5", "--noise", "normal", "--snr", "0", "--seed", "1", "--out", "sim"])?;
    acpd(dir, &["detect", "--in", "sim/signal.csv", "--window", "512", "--scale", "analytic", "--out", "det.csv", "--trace", "trace.csv"])?;
    acpd(dir, &[
        "plot", "--signal", "sim/signal.csv", "--clean", "sim/clean.csv", "--trace", "trace.csv",
        "--detections", "det.csv", "--truth", "sim/truth.csv", "--title", "pc5", "--out", "fig.svg",
    ])?;
    acpd(dir, &["bench", "--suite", "sine3", "--noise", "perlin", "--snr", "10,0", "--runs", "8", "--seed", "5", "--out", "bench"])?;
    Ok(())
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if let Err(e) = pipeline(a.path()).and_then(|_| pipeline(b.path())) {
        return outcome(false, e);
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names: Vec<&String> = fa.iter().map(|(n, _)| n).collect();
    let differing: Vec<&String> =
        fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| &x.0).collect();
    let same = fa.len() == fb.len() && differing.is_empty();
    outcome(
        same && names.len() > 10,
        format!("{} files from derive/simulate/detect/plot/bench, {} differ between runs", names.len(), differing.len()),
    )
}

fn main() {
    let mut failures = 0;
    let mut print = |name: &str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    };
    let timed = |f: fn() -> Outcome| {
        let start = Instant::now();
        let mut o = f();
        o.detail = format!("{} [{:.1?}]", o.detail, start.elapsed());
        (o, start.elapsed())
    };

    let (o, t) = timed(symbolic_soundness);
    let o = Outcome { pass: o.pass && t < Duration::from_secs(30), ..o };
    print("1 symbolic soundness (< 30 s)", o);
    let (o, t) = timed(oracle_equivalence);
    let o = Outcome { pass: o.pass && t < Duration::from_secs(10), ..o };
    print("2 oracle equivalence (< 10 s)", o);
    print("3 closed-form recovery", timed(closed_form_recovery).0);
    table_regime(&mut print);
    print("6 streaming performance", performance());
    print("7 CLI determinism", timed(determinism).0);

    println!("{} acceptance failure(s)", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
