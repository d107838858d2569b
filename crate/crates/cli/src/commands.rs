use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use otconc::bounds::{
    assess, fit_constants, select_case_exp, select_case_tp, CaseId, EnvelopeFamily, EnvelopeParams,
    ExampleAux, ExampleCase, Kappa, MeanDevCase, TailObservation,
};
use otconc::costs::max_eta;
use otconc::harness::{
    estimate_mean_cost, estimate_tail, figure_run, loglog_slope, CostMethod, CurveRow, CurveTable,
    ExperimentConfig,
};
use otconc::partition::{coupling_upper_bound, selfnorm_tail_mc, Direction, SelfNormConfig};
use otconc::rng::stable_hash;
use otconc::{
    default_growth, empirical_measure, Distribution, RadialCost, RateParams, Regime, Seed,
};

use crate::args::*;
use crate::error::{usage, CliError, CliResult};
use crate::grid::{parse_cost, parse_dist, parse_n_grid, parse_x_grid};
use crate::svg;
use crate::table::{
    field, io_err, real, Sink, Table, CURVE_HEADER, SELFNORM_HEADER, SLOPE_HEADER, TAIL_HEADER,
};

/// Exit status of a command that ran to completion.
pub type Status = u8;

pub fn run(command: Command) -> CliResult<Status> {
    match command {
        Command::Mean(a) => mean(a),
        Command::Tail(a) => tail(a),
        Command::Envelope(a) => envelope(a),
        Command::Check(a) => check(a),
        Command::PartitionBound(a) => partition_bound(a),
        Command::Selfnorm(a) => selfnorm(a),
        Command::Slope(a) => slope(a),
        Command::Figures(a) => figures(a),
    }
}

fn law(args: &LawArgs) -> CliResult<Distribution> {
    parse_dist(&args.dist, &args.params)
}

fn cost(args: &CostArgs) -> CliResult<RadialCost> {
    parse_cost(args.cost, args.p, args.a)
}

fn method(text: &str) -> CliResult<CostMethod> {
    match text.split_once(':') {
        None if text == "quantile-1d" => Ok(CostMethod::Quantile1d),
        None if text == "exact-lp" => Ok(CostMethod::ExactLp { reference: 1000 }),
        Some(("exact-lp", r)) => {
            let reference = r
                .parse()
                .map_err(|_| usage(format!("--method: bad reference size '{r}'")))?;
            Ok(CostMethod::ExactLp { reference })
        }
        _ => Err(usage(format!(
            "--method: expected quantile-1d or exact-lp:REF, got '{text}'"
        ))),
    }
}

fn window(text: &str) -> CliResult<(usize, usize)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| usage("--window: expected lo:hi"))?;
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| usage(format!("--window: cannot parse '{s}'")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(usage("--window: lo exceeds hi"));
    }
    Ok((lo, hi))
}

fn experiment(law: &LawArgs, cost_args: &CostArgs, run: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(
        self::law(law)?,
        cost(cost_args)?,
        parse_n_grid(&run.n_grid)?,
        run.trials,
        Seed::new(run.seed),
        method(&run.method)?,
    )?;
    cfg.seed = cfg.derived_seed(run.seed);
    Ok(cfg)
}

/// dist, params, cost, p, a
fn config_fields(dist: &Distribution, cost: &RadialCost) -> [String; 5] {
    [
        dist.name().into(),
        dist.params_string(),
        cost.name().into(),
        real(cost.p()),
        real(cost.a()),
    ]
}

fn curve_rows(
    sink: &mut Sink,
    dist: &Distribution,
    cost: &RadialCost,
    table: &CurveTable,
    master: u64,
) -> CliResult<()> {
    let head = config_fields(dist, cost);
    for r in &table.rows {
        let tail = [
            r.n.to_string(),
            r.trials.to_string(),
            real(r.mean),
            real(r.stderr),
            master.to_string(),
        ];
        sink.row(head.iter().chain(&tail))?;
    }
    Ok(())
}

fn mean(args: MeanArgs) -> CliResult<Status> {
    let cfg = experiment(&args.law, &args.cost, &args.run)?;
    let table = estimate_mean_cost(&cfg)?;
    let mut sink = Sink::open(args.run.out.as_deref(), CURVE_HEADER)?;
    curve_rows(&mut sink, &cfg.dist, &cfg.cost, &table, args.run.seed)?;
    sink.finish()?;
    eprintln!(
        "{} rows, {} trials each, method {}",
        table.rows.len(),
        cfg.trials,
        cfg.method.label()
    );
    Ok(0)
}

fn tail(args: TailArgs) -> CliResult<Status> {
    let cfg = experiment(&args.law, &args.cost, &args.run)?;
    let xs = parse_x_grid(&args.x_grid)?;
    let rows = estimate_tail(&cfg, &xs)?;
    let mut sink = Sink::open(args.run.out.as_deref(), TAIL_HEADER)?;
    let head = config_fields(&cfg.dist, &cfg.cost);
    for r in &rows {
        let tail = [
            r.n.to_string(),
            real(r.x),
            real(r.phat),
            real(r.ci_lo),
            real(r.ci_hi),
            r.trials.to_string(),
            args.run.seed.to_string(),
        ];
        sink.row(head.iter().chain(&tail))?;
    }
    sink.finish()?;
    eprintln!(
        "{} rows over {} N values and {} levels",
        rows.len(),
        cfg.n_grid.len(),
        xs.len()
    );
    Ok(0)
}

fn need(v: Option<f64>, flag: &str, family: &str) -> CliResult<f64> {
    v.ok_or_else(|| usage(format!("--family {family} needs --{flag}")))
}

fn envelope_family(args: &EnvelopeArgs, p: f64, a: f64) -> CliResult<EnvelopeFamily> {
    let fam = args.family.as_str();
    Ok(match fam {
        "theorem" => {
            let eta = args.eta.unwrap_or_else(|| max_eta(args.d.max(1), p));
            let rate = RateParams::new(args.d, p, eta)?;
            let gamma = need(args.gamma, "gamma", fam)?;
            let eps = match args.eps {
                Some(e) => e,
                None if gamma <= 2.0 => otconc::bounds::default_theorem_eps(gamma),
                None => 0.0,
            };
            EnvelopeFamily::Theorem {
                rate,
                gamma,
                eps,
                a0: args.a0,
            }
        }
        "meandev-exp-heavy" => EnvelopeFamily::MeanDev(MeanDevCase::ExpMomentHeavy {
            beta: need(args.beta, "beta", fam)?,
        }),
        "meandev-exp-light" => EnvelopeFamily::MeanDev(MeanDevCase::ExpMomentLight {
            beta: need(args.beta, "beta", fam)?,
        }),
        "meandev-moment-high" => EnvelopeFamily::MeanDev(MeanDevCase::MomentHigh {
            t: need(args.t, "t", fam)?,
        }),
        "meandev-moment-low" => EnvelopeFamily::MeanDev(MeanDevCase::MomentLow {
            t: need(args.t, "t", fam)?,
        }),
        label => {
            let case = ExampleCase::parse(label)?;
            if case.is_mean_rate() {
                return Err(usage(format!(
                    "{label} bounds a mean, not a tail probability"
                )));
            }
            let aux = ExampleAux {
                d: args.d,
                p,
                q: args.q.unwrap_or(0.0),
                beta: args.beta.unwrap_or(0.0),
                a,
                b: args.b.unwrap_or(0.0),
                eps: args.eps.unwrap_or(0.0),
            };
            EnvelopeFamily::Example {
                case,
                aux,
                a0: args.a0,
            }
        }
    })
}

fn envelope(args: EnvelopeArgs) -> CliResult<Status> {
    let table = Table::read(&args.input, TAIL_HEADER)?;
    let first = table
        .rows
        .first()
        .ok_or_else(|| usage(format!("{}: no rows", args.input.display())))?;
    let (ip, ia) = (table.column("p")?, table.column("a")?);
    let p = match args.p {
        Some(p) => p,
        None => field(first, ip, "p")?,
    };
    let a = match args.a {
        Some(a) => a,
        None => field(first, ia, "a")?,
    };
    let family = envelope_family(&args, p, a)?;
    let (i_n, i_x, i_phat, i_hi) = (
        table.column("N")?,
        table.column("x")?,
        table.column("phat")?,
        table.column("ci_hi")?,
    );
    let obs = table
        .rows
        .iter()
        .map(|r| {
            Ok(TailObservation {
                n: field(r, i_n, "N")?,
                x: field(r, i_x, "x")?,
                phat: field(r, i_phat, "phat")?,
                ci_hi: Some(field(r, i_hi, "ci_hi")?),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let params = match (args.c, args.big_c) {
        (Some(c), Some(big_c)) => EnvelopeParams::new(c, big_c, args.a0, family.label())?,
        (None, None) => fit_constants(&obs, &family)?,
        _ => return Err(usage("give both --c and --C, or neither to fit them")),
    };
    let mut header: Vec<&str> = table.header.iter().map(String::as_str).collect();
    header.extend(["envelope", "c", "C", "A0", "case"]);
    let mut sink = Sink::open(args.out.as_deref(), &header)?;
    let mut violations = 0;
    for (row, o) in table.rows.iter().zip(&obs) {
        let env = family.eval(&params, o.n, o.x)?;
        if o.ci_hi.is_some_and(|hi| hi > env) {
            violations += 1;
        }
        let extra = [
            real(env),
            real(params.c),
            real(params.big_c),
            real(params.a0),
            params.case_id.clone(),
        ];
        sink.row(row.iter().map(str::to_string).chain(extra))?;
    }
    sink.finish()?;
    let how = if args.c.is_some() { "given" } else { "fitted" };
    eprintln!(
        "{how} c = {}, C = {} ({}); {violations} of {} rows have a Wilson upper bound above the envelope",
        params.c,
        params.big_c,
        params.case_id,
        obs.len()
    );
    Ok(0)
}

/// The closed-form example matching a case selection, if any.
fn matching_example(
    case: CaseId,
    regime: Regime,
    q: Option<f64>,
    p: f64,
    bounded: bool,
) -> Option<ExampleCase> {
    if bounded {
        return Some(ExampleCase::Compact);
    }
    Some(match case {
        CaseId::TpSuperHighMoment | CaseId::TpSubHighMoment => ExampleCase::TpMomentHigh,
        CaseId::TpSuperLowMoment if regime == Regime::Critical => ExampleCase::TpMomentLowCritical,
        CaseId::TpSuperLowMoment => ExampleCase::TpMomentLowSuper,
        CaseId::TpSubMidMoment if q.is_some_and(|q| q > 2.0 * p) => ExampleCase::TpMomentHigh,
        CaseId::TpSubMidMoment => ExampleCase::TpMomentMidSub,
        CaseId::TpSubLowMoment => ExampleCase::TpMomentLowSub,
        CaseId::ExpSuperStrong | CaseId::ExpSubStrong => ExampleCase::ExpCostStrong,
        CaseId::ExpSuperWeak | CaseId::ExpSubWeak => ExampleCase::ExpCostWeak,
        CaseId::ExpSmallPStrong => ExampleCase::ExpCostSmallPStrong,
        CaseId::ExpSmallPMid => ExampleCase::ExpCostSmallPMid,
        CaseId::ExpSmallPWeak => ExampleCase::ExpCostSmallPWeak,
    })
}

fn kappa_field(k: Kappa) -> String {
    match k {
        Kappa::Finite(v) => real(v),
        Kappa::Divergent => "DIVERGENT".into(),
    }
}

fn check(args: CheckArgs) -> CliResult<Status> {
    let dist = law(&args.law)?;
    let cost = cost(&args.cost)?;
    let d = dist.dim();
    let p = cost.p();
    let selection = match (&cost, args.q, args.b) {
        (RadialCost::Power { .. }, Some(q), None) => select_case_tp(d, p, q, args.eps)?,
        (RadialCost::Exponential { a, .. }, None, Some(b)) => {
            select_case_exp(d, p, *a, b, args.eps)?
        }
        (RadialCost::Power { .. }, _, _) => {
            return Err(usage("--cost power needs --q (and no --b)"))
        }
        _ => return Err(usage("--cost exp needs --b (and no --q)")),
    };
    let growth = default_growth(&cost)?;
    let report = assess(&dist, d, &cost, &growth, selection, args.c0, args.f_eps)?;
    let sel = &report.selection;
    let bounded = matches!(
        dist,
        Distribution::UniformBall { .. } | Distribution::PointMass(_)
    );
    let example = matching_example(sel.case, report.regime, args.q, p, bounded);
    let header = [
        "dist",
        "params",
        "cost",
        "p",
        "a",
        "d",
        "regime",
        "case",
        "gamma",
        "eta",
        "eps",
        "c0",
        "c0_max",
        "K_g",
        "K_G",
        "M1_S",
        "M_p",
        "M_gamma_G",
        "F",
        "example",
    ];
    let mut sink = Sink::open(args.out.as_deref(), &header)?;
    let fields = config_fields(&dist, &cost).into_iter().chain([
        d.to_string(),
        report.regime.label().into(),
        sel.case.label().into(),
        real(sel.gamma),
        real(sel.eta),
        real(sel.eps),
        real(report.c0),
        report.c0_max.map(real).unwrap_or_default(),
        kappa_field(report.k_g),
        kappa_field(report.k_big_g),
        real(report.m1_s),
        real(report.m_p),
        real(report.m_gamma_g),
        real(report.f),
        example.map(|e| e.label().to_string()).unwrap_or_default(),
    ]);
    sink.row(fields)?;
    sink.finish()?;
    eprintln!(
        "regime {}, case {}",
        report.regime.label(),
        sel.case.label()
    );
    eprintln!(
        "gamma = {}, eta = {}, eps = {}, c0 = {}",
        sel.gamma, sel.eta, sel.eps, report.c0
    );
    eprintln!(
        "K_g = {}, K_G = {}, F = {}",
        report.k_g, report.k_big_g, report.f
    );
    if let Some(e) = example {
        eprintln!("closed-form bound: {e}");
    }
    if report.k_g == Kappa::Divergent || report.k_big_g == Kappa::Divergent {
        eprintln!("error: the K series diverges; the moment condition fails for this c0");
        return Ok(3);
    }
    Ok(0)
}

fn partition_bound(args: PartitionArgs) -> CliResult<Status> {
    let dist = law(&args.law)?;
    let cost = cost(&args.cost)?;
    let m = args.m.unwrap_or(args.n);
    if args.n == 0 || m == 0 {
        return Err(usage("sample sizes must be positive"));
    }
    let seed = Seed::new(args.seed).with_stream(stable_hash(&format!(
        "partition-bound|{}|{}",
        dist.name(),
        dist.params_string()
    )));
    let mu = empirical_measure(&dist.sample_trial(args.n, seed, 0), dist.dim())?;
    let nu = empirical_measure(&dist.sample_trial(m, seed, 1), dist.dim())?;
    let r = coupling_upper_bound(&mu, &nu, &cost, &default_growth(&cost)?)?;
    let header = [
        "dist", "params", "cost", "p", "a", "n", "m", "total", "realized", "term_i", "term_ii",
        "term_iii", "term_iv", "rho", "exact", "seed",
    ];
    let mut sink = Sink::open(args.out.as_deref(), &header)?;
    let fields = config_fields(&dist, &cost).into_iter().chain([
        args.n.to_string(),
        m.to_string(),
        real(r.total),
        real(r.realized),
        real(r.term_i),
        real(r.term_ii),
        real(r.term_iii),
        real(r.term_iv),
        real(r.rho),
        real(r.exact),
        args.seed.to_string(),
    ]);
    sink.row(fields)?;
    sink.finish()?;
    eprintln!(
        "exact {} <= realized {} <= bound {} (mass moved between annuli {})",
        r.exact, r.realized, r.total, r.rho
    );
    Ok(0)
}

fn selfnorm(args: SelfnormArgs) -> CliResult<Status> {
    let dist = law(&args.law)?;
    let ns = parse_n_grid(&args.n)?;
    let xs = parse_x_grid(&args.x_grid)?;
    let directions: &[Direction] = match args.direction {
        DirectionArg::Both => &[Direction::TrueMinusEmpirical, Direction::EmpiricalMinusTrue],
        DirectionArg::TrueMinusEmpirical => &[Direction::TrueMinusEmpirical],
        DirectionArg::EmpiricalMinusTrue => &[Direction::EmpiricalMinusTrue],
    };
    let seed = Seed::new(args.seed).with_stream(stable_hash(&format!(
        "selfnorm|{}|{}",
        dist.name(),
        dist.params_string()
    )));
    let mut sink = Sink::open(args.out.as_deref(), SELFNORM_HEADER)?;
    let mut above = 0;
    let mut total = 0;
    for &dir in directions {
        let cfg = SelfNormConfig::new(args.delta, args.alpha, dir)?;
        for &n in &ns {
            for r in selfnorm_tail_mc(&dist, n, &cfg, &xs, args.trials, seed)? {
                total += 1;
                if r.ci_hi > r.envelope {
                    above += 1;
                }
                sink.row([
                    dist.name().to_string(),
                    dist.params_string(),
                    real(args.alpha),
                    real(args.delta),
                    dir.label().to_string(),
                    n.to_string(),
                    real(r.x),
                    real(r.phat),
                    real(r.ci_lo),
                    real(r.ci_hi),
                    real(r.envelope),
                    args.trials.to_string(),
                    args.seed.to_string(),
                ])?;
            }
        }
    }
    sink.finish()?;
    let cfg = SelfNormConfig::new(args.delta, args.alpha, directions[0])?;
    eprintln!(
        "B_alpha = {}, C = {}; {above} of {total} rows have a Wilson upper bound above the envelope",
        cfg.b_alpha(),
        cfg.prefactor()
    );
    Ok(0)
}

/// Curves of a mean-cost CSV keyed by their configuration columns, in order of appearance.
fn read_curves(path: &Path) -> CliResult<Vec<(Vec<String>, CurveTable)>> {
    let table = Table::read(path, CURVE_HEADER)?;
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut curves: BTreeMap<Vec<String>, CurveTable> = BTreeMap::new();
    for row in &table.rows {
        let mut key: Vec<String> = row.iter().take(5).map(str::to_string).collect();
        let seed: u64 = field(row, 9, "seed")?;
        key.push(seed.to_string());
        let entry = curves.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            CurveTable {
                rows: Vec::new(),
                config_hash: 0,
                seed: Seed::new(seed),
            }
        });
        entry.rows.push(CurveRow {
            n: field(row, 5, "N")?,
            trials: field(row, 6, "trials")?,
            mean: field(row, 7, "mean")?,
            stderr: field(row, 8, "stderr")?,
        });
    }
    Ok(order
        .into_iter()
        .map(|k| {
            let t = curves.remove(&k).expect("key recorded on insertion");
            (k, t)
        })
        .collect())
}

fn slope(args: SlopeArgs) -> CliResult<Status> {
    let (lo, hi) = window(&args.window)?;
    let curves = read_curves(&args.input)?;
    let mut sink = Sink::open(args.out.as_deref(), SLOPE_HEADER)?;
    for (key, table) in &curves {
        let fit = loglog_slope(table, lo, hi)?;
        let extra = [
            real(fit.slope),
            real(fit.intercept),
            real(fit.r2),
            fit.rows.to_string(),
        ];
        sink.row(key[..5].iter().cloned().chain(extra))?;
        eprintln!(
            "{} {}: slope {:.4} (r2 {:.4})",
            key[0], key[1], fit.slope, fit.r2
        );
    }
    sink.finish()?;
    Ok(0)
}

fn file_stem(fig: u8, dist: &Distribution, cost: &RadialCost) -> String {
    let params: String = dist
        .params_string()
        .chars()
        .filter_map(|c| match c {
            '=' => None,
            ';' | ':' => Some('_'),
            c => Some(c),
        })
        .collect();
    format!(
        "fig{fig}-{}-{params}-{}-p{}",
        dist.name(),
        cost.name(),
        cost.p()
    )
}

fn figures(args: FiguresArgs) -> CliResult<Status> {
    let n_grid = parse_n_grid(&args.n_grid)?;
    let (lo, hi) = window(&args.window)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let results = figure_run(args.fig, &n_grid, args.trials, args.seed)?;
    let mut status = 0;
    let mut panels: BTreeMap<usize, (String, Vec<svg::Series>, f64)> = BTreeMap::new();
    let mut slopes = Sink::open(
        Some(&dir.join(format!("fig{}-slopes.csv", args.fig))),
        SLOPE_HEADER,
    )?;
    for (series, result) in results {
        let label = series.label();
        let table = match result {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{label}: {e}");
                status = CliError::Core(e).exit_code();
                continue;
            }
        };
        let path = dir.join(format!(
            "{}.csv",
            file_stem(args.fig, &series.dist, &series.cost)
        ));
        let mut sink = Sink::open(Some(&path), CURVE_HEADER)?;
        curve_rows(&mut sink, &series.dist, &series.cost, &table, args.seed)?;
        sink.finish()?;
        let worst = table
            .rows
            .iter()
            .map(|r| (r.mean + 3.0 * r.stderr) / series.reference_at(r.n))
            .fold(0.0, f64::max);
        match loglog_slope(&table, lo, hi) {
            Ok(fit) => {
                let extra = [
                    real(fit.slope),
                    real(fit.intercept),
                    real(fit.r2),
                    fit.rows.to_string(),
                ];
                slopes.row(
                    config_fields(&series.dist, &series.cost)
                        .into_iter()
                        .chain(extra),
                )?;
                eprintln!(
                    "{label}: slope {:.4}, max (mean + 3 se)/reference {:.3}",
                    fit.slope, worst
                );
            }
            Err(e) => eprintln!("{label}: no slope ({e}), max (mean + 3 se)/reference {worst:.3}"),
        }
        let entry = panels
            .entry(series.panel)
            .or_insert_with(|| (series.panel_title.clone(), Vec::new(), series.reference));
        entry.1.push(svg::Series {
            label: format!("{}({})", series.dist.name(), series.dist.params_string()),
            points: table.rows.iter().map(|r| (r.n as f64, r.mean)).collect(),
            dashed: false,
        });
    }
    slopes.finish()?;
    for (panel, (title, mut series, reference)) in panels {
        series.push(svg::Series {
            label: format!("{reference}/sqrt(N)"),
            points: n_grid
                .iter()
                .filter(|&&n| n > 0)
                .map(|&n| (n as f64, reference / (n as f64).sqrt()))
                .collect(),
            dashed: true,
        });
        let svg = svg::loglog(
            &format!("Figure {}: {title}", args.fig),
            "N",
            "mean cost",
            &series,
        );
        let path = dir.join(format!(
            "fig{}-panel{panel}-{}.svg",
            args.fig,
            title.to_lowercase()
        ));
        fs::write(&path, svg).map_err(io_err(&path))?;
    }
    Ok(status)
}
