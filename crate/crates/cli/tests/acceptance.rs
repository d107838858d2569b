//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 3, 4 and 8 drive the `otconc` binary; the rest run in process.
//! Every criterion also produces a CSV artifact, and criterion 10 reruns all
//! of them with four worker threads and compares the artifacts byte for byte.
//!
//! Criteria listed in `EXPECTED_RED` are evaluated exactly as stated and are
//! reported as FAIL; the process only exits nonzero when a criterion outside
//! that list fails or a listed one starts passing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use otconc::costs::{phi_eta_scale_constant, rate_phi, rate_phi_eta};
use otconc::bounds::{default_c0, kappa_series, Kappa, SFunction};
use otconc::partition::{coupling_upper_bound, selfnorm_samples, Direction, SelfNormConfig};
use otconc::{
    brute_force_ot, default_growth, exact_ot, monotone_cost_1d, DiscreteMeasure, Distribution, RadialCost, RateParams,
    Regime, Seed,
};
use rand::Rng;
use rayon::prelude::*;

/// Criteria that cannot pass as stated, with the reason.
const EXPECTED_RED: &[(u8, &str)] = &[
    (4, "E exp(|X|^3/256) is infinite for a standard Gaussian, so that Figure 4 curve has no finite mean"),
    (8, "at x = 1, N = 200 the envelope is below the Wilson upper bound of 0 hits in 10^4 trials (3.84e-4)"),
];

struct Outcome {
    pass: bool,
    detail: String,
    artifact: String,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn costs() -> [RadialCost; 4] {
    [
        RadialCost::power(1.0).unwrap(),
        RadialCost::power(2.0).unwrap(),
        RadialCost::power(3.0).unwrap(),
        RadialCost::exponential(1.0, 0.1).unwrap(),
    ]
}

fn uniform_points(rng: &mut impl Rng, count: usize, d: usize, half_width: f64) -> Vec<f64> {
    (0..count * d).map(|_| rng.random_range(-half_width..half_width)).collect()
}

fn random_weights(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

// ---------------------------------------------------------------------------

fn exact_vs_brute_force() -> Outcome {
    let seed = Seed::new(20_240_101);
    let rows: Vec<(usize, usize, usize, f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.rng(i);
            let d = 1 + (i as usize / 4) % 3;
            let cost = &costs()[i as usize % 4];
            let n = rng.random_range(1..=6usize);
            let w = vec![1.0 / n as f64; n];
            let mu = DiscreteMeasure::from_flat(d, uniform_points(&mut rng, n, d, 5.0), w.clone()).unwrap();
            let nu = DiscreteMeasure::from_flat(d, uniform_points(&mut rng, n, d, 5.0), w).unwrap();
            let exact = exact_ot(&mu, &nu, cost).unwrap().cost;
            let brute = brute_force_ot(&mu, &nu, cost).unwrap().cost;
            (d, n, i as usize % 4, exact, brute)
        })
        .collect();
    let worst = rows.iter().map(|r| (r.3 - r.4).abs()).fold(0.0, f64::max);
    let mut artifact = String::from("instance,d,N,cost,exact,brute\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(artifact, "{i},{},{},{},{},{}", r.0, r.1, r.2, real(r.3), real(r.4));
    }
    Outcome { pass: worst <= 1e-9, detail: format!("200 instances, max |exact - brute| = {worst:.2e}"), artifact }
}

fn monotone_vs_exact() -> Outcome {
    let seed = Seed::new(20_240_102);
    let rows: Vec<(usize, usize, usize, f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.rng(i);
            let cost = &costs()[i as usize % 4];
            let (n, m) = (rng.random_range(1..=30usize), rng.random_range(1..=30usize));
            let mu = DiscreteMeasure::from_flat(1, uniform_points(&mut rng, n, 1, 10.0), random_weights(&mut rng, n)).unwrap();
            let nu = DiscreteMeasure::from_flat(1, uniform_points(&mut rng, m, 1, 10.0), random_weights(&mut rng, m)).unwrap();
            let mono = monotone_cost_1d(&mu, &nu, cost).unwrap().cost;
            let exact = exact_ot(&mu, &nu, cost).unwrap().cost;
            (n, m, i as usize % 4, mono, exact)
        })
        .collect();
    let worst = rows.iter().map(|r| (r.3 - r.4).abs()).fold(0.0, f64::max);
    let mut artifact = String::from("instance,n,m,cost,monotone,exact\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(artifact, "{i},{},{},{},{},{}", r.0, r.1, r.2, real(r.3), real(r.4));
    }
    Outcome { pass: worst <= 1e-9, detail: format!("200 instances, max |monotone - exact| = {worst:.2e}"), artifact }
}

/// (d, p) drawn from the regime with the given index: 0 super, 1 critical, 2 sub.
fn draw_regime(rng: &mut impl Rng, regime: usize) -> RateParams {
    let d = rng.random_range(1..=6usize);
    let half = d as f64 / 2.0;
    let p = match regime {
        0 => half + rng.random_range(0.01..3.0),
        1 => half,
        _ => half * rng.random_range(0.05..0.99),
    };
    let cap = (p / d as f64).min(0.5);
    RateParams::new(d, p, cap * rng.random_range(0.05..=1.0)).unwrap()
}

fn rate_function_properties() -> Outcome {
    const PER_CLAUSE: u64 = 10_000;
    let seed = Seed::new(20_240_105);
    let mut artifact = String::from("clause,assertions,violations,min_ratio,regimes\n");
    let mut all_ok = true;
    let mut detail = Vec::new();
    for clause in 0..3u64 {
        let mut violations = 0;
        let mut min_ratio = f64::INFINITY;
        let mut seen = [false; 3];
        for i in 0..PER_CLAUSE {
            let mut rng = seed.substream(clause).rng(i);
            let params = draw_regime(&mut rng, (i % 3) as usize);
            seen[match params.regime {
                Regime::Super => 0,
                Regime::Critical => 1,
                Regime::Sub => 2,
            }] = true;
            let (lhs, rhs) = match clause {
                // φ_η(ax) ≥ a²φ_η(x) for a ≥ 1
                0 => {
                    let x = 10f64.powf(rng.random_range(-6.0..1.0));
                    let a = rng.random_range(1.0..=100.0);
                    (rate_phi_eta(&params, a * x), a * a * rate_phi_eta(&params, x))
                }
                // aφ(x/a^η) ≥ φ_η(x) for x ≤ 1 and a ∈ [x^{1/η}, 1]
                1 => {
                    let x = 10f64.powf(rng.random_range(-3.0..=0.0));
                    let lo = x.powf(1.0 / params.eta);
                    let a = lo + rng.random_range(0.0..=1.0) * (1.0 - lo);
                    (a * rate_phi(params.d, params.p, x / a.powf(params.eta)), rate_phi_eta(&params, x))
                }
                // φ_η(x/a) ≥ K(a)φ_η(x) for a ≥ x
                _ => {
                    let x = 10f64.powf(rng.random_range(-6.0..1.0));
                    let a = x + rng.random_range(0.0..=50.0);
                    (rate_phi_eta(&params, x / a), phi_eta_scale_constant(a, &params) * rate_phi_eta(&params, x))
                }
            };
            if lhs < rhs * (1.0 - 1e-12) {
                violations += 1;
            }
            if rhs > 0.0 {
                min_ratio = min_ratio.min(lhs / rhs);
            }
        }
        all_ok &= violations == 0 && seen.iter().all(|&s| s);
        let label = ["a", "b", "c"][clause as usize];
        detail.push(format!("({label}) {violations} violations"));
        let _ = writeln!(artifact, "{label},{PER_CLAUSE},{violations},{},{:?}", real(min_ratio), seen);
    }
    let mut mismatches = 0;
    for (d, p) in [(1, 1.0), (2, 1.0), (4, 1.0), (3, 1.5), (1, 0.3), (6, 2.0)] {
        let params = RateParams::canonical(d, p).unwrap();
        for i in 0..1000 {
            let x = 1e-4 * (1e8f64).powf(i as f64 / 999.0);
            if rate_phi_eta(&params, x).to_bits() != rate_phi(d, p, x).to_bits() {
                mismatches += 1;
            }
        }
    }
    let _ = writeln!(artifact, "phi_eta_at_cap,6000,{mismatches},,");
    all_ok &= mismatches == 0;
    detail.push(format!("phi_eta = phi mismatches {mismatches}/6000"));
    Outcome { pass: all_ok, detail: detail.join(", "), artifact }
}

fn kappa_series_checks() -> Outcome {
    let power = |p: f64| RadialCost::power(p).unwrap();
    let growth = default_growth(&power(1.0)).unwrap();
    let (kg, _) = kappa_series(&growth, &SFunction::PolyClip { q: 4.0 }, 0.5, 0.5, 1e-12).unwrap();
    let closed = 2.0 + 8.0 / (2f64.sqrt() - 1.0);
    let err = (kg.value().unwrap_or(f64::INFINITY) - closed).abs();
    let sweep: [(f64, f64, f64); 20] = [
        (1.0, 4.0, 0.5),
        (1.0, 2.0, 0.5),
        (1.0, 1.5, 0.5),
        (1.0, 3.0, 0.5),
        (2.0, 4.0, 0.5),
        (2.0, 5.0, 0.5),
        (2.0, 3.0, 0.25),
        (2.0, 2.5, 0.25),
        (3.0, 4.0, 0.25),
        (3.0, 6.0, 0.25),
        (0.5, 1.0, 0.5),
        (0.5, 2.0, 0.5),
        (0.5, 0.8, 0.25),
        (0.5, 0.6, 0.25),
        (1.0, 1.2, 0.1),
        (1.0, 1.1, 0.1),
        (3.0, 3.5, 0.125),
        (3.0, 3.25, 0.125),
        (2.0, 8.0, 0.5),
        (1.5, 2.0, 0.25),
    ];
    let mut artifact = format!("closed_form,{},{}\np,q,eta,c0,K_g,K_G,expected_divergent\n", real(closed), kg);
    let mut wrong = 0;
    for (p, q, eta) in sweep {
        let cost = power(p);
        let s = SFunction::PolyClip { q };
        let c0 = default_c0(&cost, &s, eta);
        let (a, b) = kappa_series(&default_growth(&cost).unwrap(), &s, c0, eta, 1e-12).unwrap();
        let divergent = q <= p / (1.0 - eta);
        if (a == Kappa::Divergent) != divergent || (b == Kappa::Divergent) != divergent {
            wrong += 1;
        }
        let _ = writeln!(artifact, "{p},{q},{eta},{},{a},{b},{divergent}", real(c0));
    }
    Outcome {
        pass: err <= 1e-6 && wrong == 0,
        detail: format!("K_g = {kg} vs 2 + 8/(sqrt2 - 1), error {err:.1e}; sweep misclassified {wrong}/20"),
        artifact,
    }
}

fn annular_coupling() -> Outcome {
    let seed = Seed::new(20_240_107);
    let run = |i: u64, single: bool| {
        let mut rng = seed.substream(single as u64).rng(i);
        let d = 1 + (i as usize % 2);
        let cost = &costs()[(i as usize / 2) % 4];
        let (n, m) = (rng.random_range(1..=8usize), rng.random_range(1..=8usize));
        // radius below 1 keeps every atom in the innermost annulus
        let half = if single { 0.7 } else { 12.0 };
        let mu = DiscreteMeasure::from_flat(d, uniform_points(&mut rng, n, d, half), random_weights(&mut rng, n)).unwrap();
        let nu = DiscreteMeasure::from_flat(d, uniform_points(&mut rng, m, d, half), random_weights(&mut rng, m)).unwrap();
        let r = coupling_upper_bound(&mu, &nu, cost, &default_growth(cost).unwrap()).unwrap();
        (r.total, r.exact)
    };
    let mixed: Vec<(f64, f64)> = (0..100).into_par_iter().map(|i| run(i, false)).collect();
    let single: Vec<(f64, f64)> = (0..100).into_par_iter().map(|i| run(i, true)).collect();
    let below = mixed.iter().filter(|(t, e)| *t < e - 1e-9).count();
    let gap = single.iter().map(|(t, e)| (t - e).abs()).fold(0.0, f64::max);
    let mut artifact = String::from("kind,instance,total,exact\n");
    for (kind, rows) in [("mixed", &mixed), ("single", &single)] {
        for (i, (t, e)) in rows.iter().enumerate() {
            let _ = writeln!(artifact, "{kind},{i},{},{}", real(*t), real(*e));
        }
    }
    Outcome {
        pass: below == 0 && gap <= 1e-9,
        detail: format!("{below}/100 mixed instances below the optimum; single-annulus max gap {gap:.2e}"),
        artifact,
    }
}

fn selfnorm_range() -> Outcome {
    let dist = Distribution::gaussian(1.0, 1).unwrap();
    let mut artifact = String::from("alpha,delta,direction,N,trials,min,max\n");
    let mut draws = 0;
    let mut outside = 0;
    for alpha in [0.3, 0.5, 0.7] {
        for delta in [0.5, 1.0] {
            for dir in [Direction::TrueMinusEmpirical, Direction::EmpiricalMinusTrue] {
                for n in [1usize, 10, 50, 200] {
                    let trials = 2_100;
                    let cfg = SelfNormConfig::new(delta, alpha, dir).unwrap();
                    let stats = selfnorm_samples(&dist, n, &cfg, trials, Seed::new(20_240_108).with_stream(n as u64));
                    draws += stats.len();
                    outside += stats.iter().filter(|s| !(0.0..=1.0).contains(*s)).count();
                    let lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let _ = writeln!(artifact, "{alpha},{delta},{},{n},{trials},{},{}", dir.label(), real(lo), real(hi));
                }
            }
        }
    }
    Outcome { pass: outside == 0 && draws >= 100_000, detail: format!("{outside} of {draws} draws outside [0, 1]"), artifact }
}

// ---------------------------------------------------------------------------
// Criteria driven through the binary.

fn otconc(threads: usize, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_otconc"))
        .args(args)
        .args(["--threads", &threads.to_string()])
        .env_remove("OTCONC_THREADS")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Every CSV in a directory, by file name.
fn csv_files(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("csv"))
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
                .collect()
        })
        .unwrap_or_default()
}

fn concat(files: &BTreeMap<String, String>) -> String {
    files.iter().map(|(name, body)| format!("## {name}\n{body}")).collect()
}

fn records(body: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(body.as_bytes()).records().map(|r| r.unwrap()).collect()
}

/// (series count, worst (mean + 3 se)·√N / C, rows above the reference).
fn reference_check(files: &BTreeMap<String, String>, fig: u8, big_c: f64) -> (usize, f64, Vec<String>) {
    let mut series = 0;
    let mut worst: f64 = 0.0;
    let mut above = Vec::new();
    for (name, body) in files.iter().filter(|(n, _)| n.starts_with(&format!("fig{fig}-")) && !n.ends_with("slopes.csv")) {
        series += 1;
        for r in records(body) {
            let n: f64 = r[5].parse().unwrap();
            let (mean, se): (f64, f64) = (r[7].parse().unwrap(), r[8].parse().unwrap());
            let ratio = (mean + 3.0 * se) * n.sqrt() / big_c;
            worst = worst.max(ratio);
            if ratio > 1.0 {
                above.push(format!("{name} N={n}"));
            }
        }
    }
    (series, worst, above)
}

/// (label, p, slope) from a slopes table.
fn slopes(files: &BTreeMap<String, String>, fig: u8) -> Vec<(String, f64, f64)> {
    files
        .get(&format!("fig{fig}-slopes.csv"))
        .map(|body| {
            records(body)
                .iter()
                .map(|r| (format!("{}({})", &r[0], &r[1]), r[3].parse().unwrap(), r[5].parse().unwrap()))
                .collect()
        })
        .unwrap_or_default()
}

fn run_figure(threads: usize, fig: u8, dir: &Path) -> i32 {
    let dir = dir.to_str().unwrap();
    otconc(threads, &["figures", "--fig", &fig.to_string(), "--trials", "1000", "--seed", "7", "--out-dir", dir]).0
}

fn figure_one(threads: usize, dir: &Path) -> Outcome {
    let code = run_figure(threads, 1, dir);
    let files = csv_files(dir);
    let (series, worst, above) = reference_check(&files, 1, 25.0);
    let fits = slopes(&files, 1);
    let off: Vec<String> = fits.iter().filter(|f| !(-0.65..=-0.40).contains(&f.2)).map(|f| format!("{} {:.3}", f.0, f.2)).collect();
    let (lo, hi) = fits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f.2), hi.max(f.2)));
    Outcome {
        pass: code == 0 && series == 12 && fits.len() == 12 && above.is_empty() && off.is_empty(),
        detail: format!(
            "exit {code}, {series} series, worst (mean + 3se)/(25/sqrt N) = {worst:.3}, slopes in [{lo:.3}, {hi:.3}]{}{}",
            if above.is_empty() { String::new() } else { format!(", above reference: {above:?}") },
            if off.is_empty() { String::new() } else { format!(", slopes outside [-0.65, -0.40]: {off:?}") },
        ),
        artifact: concat(&files),
    }
}

fn figures_three_four(threads: usize, dir: &Path) -> Outcome {
    let (d3, d4) = (dir.join("fig3"), dir.join("fig4"));
    let code3 = run_figure(threads, 3, &d3);
    let code4 = run_figure(threads, 4, &d4);
    let (f3, f4) = (csv_files(&d3), csv_files(&d4));
    let (s3, w3, above3) = reference_check(&f3, 3, 0.1);
    let (s4, w4, above4) = reference_check(&f4, 4, 0.01);
    let fits = slopes(&f4, 4);
    let shallow: Vec<String> =
        fits.iter().filter(|f| f.1 >= 2.0 && f.2 > -0.5).map(|f| format!("{} p={} {:.3}", f.0, f.1, f.2)).collect();
    let steep_count = fits.iter().filter(|f| f.1 >= 2.0).count();
    let mut problems = Vec::new();
    if code3 != 0 || s3 != 12 {
        problems.push(format!("figure 3: exit {code3}, {s3}/12 series"));
    }
    if code4 != 0 || s4 != 6 {
        problems.push(format!("figure 4: exit {code4}, {s4}/6 series with a finite mean"));
    }
    if steep_count != 4 {
        problems.push(format!("{steep_count}/4 slopes for p in {{2, 3}}"));
    }
    for (label, above) in [("figure 3 above 0.1/sqrt N", &above3), ("figure 4 above 0.01/sqrt N", &above4)] {
        if !above.is_empty() {
            problems.push(format!("{label}: {above:?}"));
        }
    }
    if !shallow.is_empty() {
        problems.push(format!("slopes above -0.5: {shallow:?}"));
    }
    let mut all = f3.clone();
    all.extend(f4.iter().map(|(k, v)| (k.clone(), v.clone())));
    Outcome {
        pass: problems.is_empty(),
        detail: format!(
            "worst ratio to reference: figure 3 {w3:.3}, figure 4 {w4:.3}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
        artifact: concat(&all),
    }
}

fn selfnorm_tails(threads: usize, dir: &Path) -> Outcome {
    let mut body = String::new();
    let mut violations = Vec::new();
    let mut rows = 0;
    let mut code_ok = true;
    for alpha in ["0.3", "0.5", "0.7"] {
        let out = dir.join(format!("selfnorm-alpha{alpha}.csv"));
        let (code, _) = otconc(
            threads,
            &[
                "selfnorm", "--dist", "gaussian", "--params", "sigma=1", "--alpha", alpha, "--delta", "1", "--n", "50,200",
                "--x-grid", "0.2:1.0:0.1", "--trials", "10000", "--seed", "11", "--out", out.to_str().unwrap(),
            ],
        );
        code_ok &= code == 0;
        let text = std::fs::read_to_string(&out).unwrap_or_default();
        for r in records(&text) {
            rows += 1;
            let (ci_hi, env): (f64, f64) = (r[9].parse().unwrap(), r[10].parse().unwrap());
            if ci_hi > env {
                violations.push(format!("alpha={alpha} {} N={} x={:.1}: {ci_hi:.2e} > {env:.2e}", &r[4], &r[5], r[6].parse::<f64>().unwrap()));
            }
        }
        let _ = write!(body, "## alpha {alpha}\n{text}");
    }
    Outcome {
        pass: code_ok && rows == 3 * 2 * 2 * 9 && violations.is_empty(),
        detail: format!(
            "{rows} tail rows, {} with Wilson upper bound above the envelope{}",
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(": {}", violations.join("; ")) }
        ),
        artifact: body,
    }
}

// ---------------------------------------------------------------------------

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    outcome: Outcome,
    elapsed: Duration,
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("otconc-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn report(id: u8, name: &str, pass: bool, detail: &str) -> bool {
    let expected_red = EXPECTED_RED.iter().find(|(i, _)| *i == id);
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict}  {name}: {detail}");
    match (pass, expected_red) {
        (false, Some((_, why))) => {
            println!("             expected failure: {why}");
            true
        }
        (true, Some(_)) => {
            println!("             listed as an expected failure but passed; update EXPECTED_RED");
            false
        }
        (pass, None) => pass,
    }
}

fn main() {
    // `cargo test -- --list` and filters pass arguments; there is one suite only.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let one = scratch("t1");
    let four = scratch("t4");
    type InProcess = fn() -> Outcome;
    let in_process: [(u8, &str, u64, InProcess); 5] = [
        (1, "exact OT equals brute force", 30, exact_vs_brute_force),
        (2, "monotone coupling is optimal in 1D", 30, monotone_vs_exact),
        (5, "rate-function inequalities", 5, rate_function_properties),
        (6, "K series closed form and divergence sweep", 5, kappa_series_checks),
        (7, "annular coupling bound", 60, annular_coupling),
    ];
    let mut done: Vec<Criterion> = Vec::new();
    for &(id, name, secs, f) in &in_process {
        let (outcome, elapsed) = timed(|| in_pool(1, f));
        done.push(Criterion { id, name, limit: Duration::from_secs(secs), outcome, elapsed });
    }
    let (outcome, elapsed) = timed(|| figure_one(1, &one.join("fig1")));
    done.push(Criterion { id: 3, name: "figure 1 below 25/sqrt N with slopes near -1/2", limit: Duration::from_secs(600), outcome, elapsed });
    let (outcome, elapsed) = timed(|| figures_three_four(1, &one));
    done.push(Criterion { id: 4, name: "figures 3 and 4 below their reference curves", limit: Duration::from_secs(600), outcome, elapsed });
    let ((range, tails), elapsed) = timed(|| (in_pool(1, selfnorm_range), selfnorm_tails(1, &one)));
    let artifact = format!("{}{}", range.artifact, tails.artifact);
    let outcome = Outcome {
        pass: range.pass && tails.pass,
        detail: format!("{}; {}", range.detail, tails.detail),
        artifact,
    };
    done.push(Criterion { id: 8, name: "self-normalized statistic under its envelope", limit: Duration::from_secs(120), outcome, elapsed });
    done.sort_by_key(|c| c.id);

    let mut ok = true;
    for c in &done {
        let in_time = c.elapsed <= c.limit;
        let detail = format!("{} [{:.1} s, limit {} s]", c.outcome.detail, c.elapsed.as_secs_f64(), c.limit.as_secs());
        ok &= report(c.id, c.name, c.outcome.pass && in_time, &detail);
        if c.id == 8 {
            println!(
                "criterion  9 EXCLUDED  generic constants of the main theorem and examples: nonconstructive; \
                 covered by fitted dominance checks and the property suites"
            );
        }
    }

    // Rerun everything with four worker threads and compare artifacts.
    let mut differing = Vec::new();
    for &(id, _, _, f) in &in_process {
        let again = in_pool(4, f);
        let first = &done.iter().find(|c| c.id == id).unwrap().outcome.artifact;
        if &again.artifact != first {
            differing.push(id);
        }
    }
    let reruns: [(u8, Outcome); 3] = [
        (3, figure_one(4, &four.join("fig1"))),
        (4, figures_three_four(4, &four)),
        (8, {
            let range = in_pool(4, selfnorm_range);
            let tails = selfnorm_tails(4, &four);
            Outcome { pass: true, detail: String::new(), artifact: format!("{}{}", range.artifact, tails.artifact) }
        }),
    ];
    for (id, again) in &reruns {
        let first = &done.iter().find(|c| c.id == *id).unwrap().outcome.artifact;
        if &again.artifact != first || first.is_empty() {
            differing.push(*id);
        }
    }
    let detail = if differing.is_empty() {
        "criteria 1-8 produce byte-identical CSVs with 1 and 4 threads".to_string()
    } else {
        format!("artifacts differ between 1 and 4 threads for criteria {differing:?}")
    };
    ok &= report(10, "determinism across thread counts", differing.is_empty(), &detail);

    let _ = std::fs::remove_dir_all(&one);
    let _ = std::fs::remove_dir_all(&four);
    if !ok {
        println!("acceptance: unexpected result");
        std::process::exit(1);
    }
    println!("acceptance: all criteria as expected ({} expected failures)", EXPECTED_RED.len());
}
