//! Monte Carlo experiments: mean-cost curves, tail frequencies, log-log
//! slopes, and the preset figure configurations.

use crate::costs::RadialCost;
use crate::error::{invalid, Error, Result};
use crate::measures::{DiscreteMeasure, Distribution};
use crate::ot::{exact_ot, quantile_cost_semicontinuous};
use crate::par::map_indices;
use crate::rng::{stable_hash, Seed};
use crate::stats::{mean_stderr, ols, wilson, Z95};

/// Absolute accuracy of each true-vs-empirical quantile integral.
pub const QUANTILE_TOL: f64 = 1e-10;

/// How D_f(μ, μ_N) is evaluated in each trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMethod {
    /// ∫₀¹ f(|Q_μ − Q_{μ_N}|); exact for convex costs on the line.
    Quantile1d,
    /// Exact LP against an independent empirical sample of the given size
    /// standing in for μ. Works in any dimension and for concave costs.
    ExactLp { reference: usize },
}

impl CostMethod {
    pub fn label(&self) -> String {
        match self {
            CostMethod::Quantile1d => "quantile-1d".into(),
            CostMethod::ExactLp { reference } => format!("exact-lp:{reference}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dist: Distribution,
    pub cost: RadialCost,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: Seed,
    pub method: CostMethod,
}

impl ExperimentConfig {
    pub fn new(
        dist: Distribution,
        cost: RadialCost,
        n_grid: Vec<usize>,
        trials: usize,
        seed: Seed,
        method: CostMethod,
    ) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("N grid must be nonempty and strictly increasing"));
        }
        match method {
            CostMethod::Quantile1d => {
                if dist.dim() != 1 {
                    return Err(Error::MethodMismatch("quantile-1d needs a one-dimensional law".into()));
                }
                if !cost.is_convex() {
                    return Err(Error::MethodMismatch("quantile-1d needs a convex cost (p >= 1)".into()));
                }
            }
            CostMethod::ExactLp { reference } => {
                if reference == 0 {
                    return Err(invalid("reference sample size must be at least 1"));
                }
            }
        }
        Ok(ExperimentConfig { dist, cost, n_grid, trials, seed, method })
    }

    /// A stable description of the law and cost, used to derive random streams.
    pub fn key(&self) -> String {
        format!("{}|{}|{}|{}|{}|{}", self.dist.name(), self.dist.params_string(), self.cost.name(), self.cost.p(), self.cost.a(), self.method.label())
    }

    /// The stream a run with master seed `master` uses for this configuration.
    pub fn derived_seed(&self, master: u64) -> Seed {
        Seed::new(master).with_stream(stable_hash(&self.key()))
    }

    fn config_hash(&self) -> u64 {
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        stable_hash(&format!("{}|{}|{}", self.key(), grid.join(","), self.trials))
    }

    /// Per-trial costs D_f(μ, μ_N) at every N, laid out N-major.
    fn all_samples(&self) -> Result<Vec<Vec<f64>>> {
        let t = self.trials;
        let flat = map_indices(self.n_grid.len() * t, |i| self.one_trial(self.n_grid[i / t], (i % t) as u64));
        let flat: Vec<f64> = flat.into_iter().collect::<Result<_>>()?;
        Ok(flat.chunks(t).map(|c| c.to_vec()).collect())
    }

    fn one_trial(&self, n: usize, trial: u64) -> Result<f64> {
        let seed = self.seed.substream(n as u64);
        match self.method {
            CostMethod::Quantile1d => {
                let mut rng = seed.rng(trial);
                let xs = self.dist.sample_scalars(n, &mut rng)?;
                let emp = if xs.is_empty() { DiscreteMeasure::delta_zero(1) } else { DiscreteMeasure::empirical_1d(&xs)? };
                quantile_cost_semicontinuous(&self.dist, &emp, &self.cost, QUANTILE_TOL)
            }
            CostMethod::ExactLp { reference } => {
                let d = self.dist.dim();
                let emp = crate::measures::empirical_measure(&self.dist.sample_trial(n, seed, trial), d)?;
                let reference_seed = seed.substream(u64::MAX);
                let surrogate = crate::measures::empirical_measure(&self.dist.sample_trial(reference, reference_seed, trial), d)?;
                Ok(exact_ot(&surrogate, &emp, &self.cost)?.cost)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
    pub config_hash: u64,
    pub seed: Seed,
}

/// E[D_f(μ, μ_N)] over the N grid; bitwise deterministic for a fixed seed
/// regardless of thread count.
pub fn estimate_mean_cost(cfg: &ExperimentConfig) -> Result<CurveTable> {
    let samples = cfg.all_samples()?;
    let rows = cfg
        .n_grid
        .iter()
        .zip(&samples)
        .map(|(&n, xs)| {
            let (mean, stderr) = mean_stderr(xs);
            CurveRow { n, mean, stderr, trials: cfg.trials }
        })
        .collect();
    Ok(CurveTable { rows, config_hash: cfg.config_hash(), seed: cfg.seed })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRow {
    pub n: usize,
    pub x: f64,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
}

/// P(D_f(μ, μ_N) > x) with 95% Wilson intervals, for every N and x.
pub fn estimate_tail(cfg: &ExperimentConfig, xs: &[f64]) -> Result<Vec<TailRow>> {
    if xs.is_empty() {
        return Err(invalid("x grid must be nonempty"));
    }
    let samples = cfg.all_samples()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len() * xs.len());
    for (&n, costs) in cfg.n_grid.iter().zip(&samples) {
        for &x in xs {
            let hits = costs.iter().filter(|&&c| c > x).count() as u64;
            let (ci_lo, ci_hi) = wilson(hits, cfg.trials as u64, Z95);
            rows.push(TailRow { n, x, phat: hits as f64 / cfg.trials as f64, ci_lo, ci_hi, trials: cfg.trials });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rows: usize,
}

/// Least squares on (ln N, ln mean) over rows with N in `[lo, hi]` and positive mean.
pub fn loglog_slope(table: &CurveTable, lo: usize, hi: usize) -> Result<SlopeFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = table
        .rows
        .iter()
        .filter(|r| r.n >= lo && r.n <= hi && r.mean > 0.0)
        .map(|r| ((r.n as f64).ln(), r.mean.ln()))
        .unzip();
    if x.len() < 5 {
        return Err(Error::InsufficientRows { needed: 5, found: x.len() });
    }
    let (slope, intercept, r2) = ols(&x, &y);
    Ok(SlopeFit { slope, intercept, r2, rows: x.len() })
}

/// {1..20} ∪ {25, 30, ..., 100} ∪ {120, 140, ..., 200}.
pub fn default_n_grid() -> Vec<usize> {
    (1..=20).chain((25..=100).step_by(5)).chain((120..=200).step_by(20)).collect()
}

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SLOPE_WINDOW: (usize, usize) = (50, 200);

/// The a in E_{p,a} used by the exponential-cost figures.
pub const FIGURE_EXP_SCALE: f64 = 1.0 / 256.0;

/// One curve of a figure.
#[derive(Clone, Debug)]
pub struct FigureSeries {
    pub figure: u8,
    /// Index of the subplot the curve belongs to.
    pub panel: usize,
    pub panel_title: String,
    pub dist: Distribution,
    pub cost: RadialCost,
    /// C in the reference curve C/√N.
    pub reference: f64,
}

impl FigureSeries {
    pub fn label(&self) -> String {
        format!("{}({}) {} p={}", self.dist.name(), self.dist.params_string(), self.cost.name(), self.cost.p())
    }

    pub fn reference_at(&self, n: usize) -> f64 {
        self.reference / (n as f64).sqrt()
    }

    pub fn experiment(&self, n_grid: Vec<usize>, trials: usize, master: u64) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.dist.clone(), self.cost.clone(), n_grid, trials, Seed::new(master), CostMethod::Quantile1d)?;
        cfg.seed = cfg.derived_seed(master);
        Ok(cfg)
    }
}

fn family_panels() -> Result<Vec<(&'static str, Vec<Distribution>)>> {
    Ok(vec![
        ("Geometric", vec![Distribution::geometric(0.1)?, Distribution::geometric(0.5)?, Distribution::geometric(0.9)?]),
        ("Poisson", vec![Distribution::poisson(1.0)?, Distribution::poisson(2.0)?, Distribution::poisson(16.0)?]),
        ("Gaussian", vec![Distribution::gaussian(0.5, 1)?, Distribution::gaussian(1.0, 1)?, Distribution::gaussian(16.0, 1)?]),
        ("Weibull", vec![Distribution::weibull(1.0)?, Distribution::weibull(3.0)?, Distribution::weibull(5.0)?]),
    ])
}

/// The curves of figure 1 to 4.
pub fn figure_series(fig: u8) -> Result<Vec<FigureSeries>> {
    let mut out = Vec::new();
    let mut push = |panel: usize, title: &str, dist: Distribution, cost: RadialCost, reference: f64| {
        out.push(FigureSeries { figure: fig, panel, panel_title: title.to_string(), dist, cost, reference })
    };
    match fig {
        1 | 3 => {
            for (panel, (title, dists)) in family_panels()?.into_iter().enumerate() {
                for dist in dists {
                    let (cost, reference) = if fig == 1 {
                        (RadialCost::power(1.0)?, 25.0)
                    } else {
                        (RadialCost::exponential(1.0, FIGURE_EXP_SCALE)?, 0.1)
                    };
                    push(panel, title, dist, cost, reference);
                }
            }
        }
        2 => {
            let panels = [
                ("Geometric", Distribution::geometric(0.5)?),
                ("Poisson", Distribution::poisson(2.0)?),
                ("Gaussian", Distribution::gaussian(1.0, 1)?),
                ("Weibull", Distribution::weibull(3.0)?),
            ];
            for (panel, (title, dist)) in panels.into_iter().enumerate() {
                for p in [1.0, 2.0, 3.0] {
                    push(panel, title, dist.clone(), RadialCost::power(p)?, 25.0);
                }
            }
        }
        4 => {
            let panels = [("Gaussian", Distribution::gaussian(1.0, 1)?), ("Weibull", Distribution::weibull(3.0)?)];
            for (panel, (title, dist)) in panels.into_iter().enumerate() {
                for p in [1.0, 2.0, 3.0] {
                    push(panel, title, dist.clone(), RadialCost::exponential(p, FIGURE_EXP_SCALE)?, 0.01);
                }
            }
        }
        _ => return Err(invalid(format!("no figure {fig}; expected 1 to 4"))),
    }
    Ok(out)
}

/// Runs every curve of a figure on the given N grid. Curves whose mean cost
/// is infinite come back as `Err(Divergent)` without stopping the others.
pub fn figure_run(fig: u8, n_grid: &[usize], trials: usize, master: u64) -> Result<Vec<(FigureSeries, Result<CurveTable>)>> {
    Ok(figure_series(fig)?
        .into_iter()
        .map(|s| {
            let table = s.experiment(n_grid.to_vec(), trials, master).and_then(|cfg| estimate_mean_cost(&cfg));
            (s, table)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;
    use approx::assert_relative_eq;

    fn table(f: impl Fn(f64) -> f64) -> CurveTable {
        let rows = default_n_grid().into_iter().map(|n| CurveRow { n, mean: f(n as f64), stderr: 0.0, trials: 1 }).collect();
        CurveTable { rows, config_hash: 0, seed: Seed::new(0) }
    }

    #[test]
    fn slopes_of_exact_power_laws() {
        let fit = loglog_slope(&table(|n| 7.0 / n.sqrt()), 50, 200).unwrap();
        assert!((fit.slope + 0.5).abs() <= 1e-12);
        assert_eq!(fit.rows, 16);
        let fit = loglog_slope(&table(|n| 3.0 / n), 50, 200).unwrap();
        assert!((fit.slope + 1.0).abs() <= 1e-12);
        assert_eq!(
            loglog_slope(&table(|n| 1.0 / n), 150, 200),
            Err(Error::InsufficientRows { needed: 5, found: 3 })
        );
    }

    #[test]
    fn point_mass_costs_nothing() {
        let cfg = ExperimentConfig::new(
            Distribution::point_mass(Point::scalar(0.0)),
            RadialCost::power(1.0).unwrap(),
            vec![1, 5, 50],
            20,
            Seed::new(1),
            CostMethod::Quantile1d,
        )
        .unwrap();
        for r in estimate_mean_cost(&cfg).unwrap().rows {
            assert_eq!((r.mean, r.stderr), (0.0, 0.0));
        }
        for r in estimate_tail(&cfg, &[1e-9, 0.5]).unwrap() {
            assert_eq!(r.phat, 0.0);
        }
    }

    #[test]
    fn tiny_threshold_is_always_exceeded() {
        let cfg = ExperimentConfig::new(
            Distribution::gaussian(1.0, 1).unwrap(),
            RadialCost::power(1.0).unwrap(),
            vec![3, 10],
            50,
            Seed::new(2),
            CostMethod::Quantile1d,
        )
        .unwrap();
        assert!(estimate_tail(&cfg, &[1e-6]).unwrap().iter().all(|r| r.phat == 1.0));
    }

    #[test]
    fn one_sample_gaussian_cost() {
        // E ∫|Q(u) − X| du = E|X − X'| = 2/√π for independent standard normals
        let cfg = ExperimentConfig::new(
            Distribution::gaussian(1.0, 1).unwrap(),
            RadialCost::power(1.0).unwrap(),
            vec![1],
            10_000,
            Seed::new(3),
            CostMethod::Quantile1d,
        )
        .unwrap();
        let row = estimate_mean_cost(&cfg).unwrap().rows[0];
        let expected = 2.0 / std::f64::consts::PI.sqrt();
        assert!((row.mean - expected).abs() <= 4.0 * row.stderr, "{} vs {expected}", row.mean);
    }

    #[test]
    fn method_checks() {
        let cost = RadialCost::power(0.5).unwrap();
        let err = ExperimentConfig::new(Distribution::gaussian(1.0, 1).unwrap(), cost.clone(), vec![1], 1, Seed::new(0), CostMethod::Quantile1d);
        assert!(matches!(err, Err(Error::MethodMismatch(_))));
        let lp = ExperimentConfig::new(
            Distribution::gaussian(1.0, 2).unwrap(),
            cost,
            vec![2, 4],
            5,
            Seed::new(0),
            CostMethod::ExactLp { reference: 8 },
        )
        .unwrap();
        assert!(estimate_mean_cost(&lp).unwrap().rows.iter().all(|r| r.mean > 0.0));
        assert!(ExperimentConfig::new(Distribution::gaussian(1.0, 1).unwrap(), RadialCost::power(1.0).unwrap(), vec![3, 3], 1, Seed::new(0), CostMethod::Quantile1d).is_err());
    }

    #[test]
    fn figure_presets() {
        assert_eq!(figure_series(1).unwrap().len(), 12);
        assert_eq!(figure_series(2).unwrap().len(), 12);
        assert_eq!(figure_series(3).unwrap().len(), 12);
        let fig4 = figure_series(4).unwrap();
        assert_eq!(fig4.len(), 6);
        assert_relative_eq!(fig4[0].reference_at(100), 0.001, max_relative = 1e-15);
        assert_relative_eq!(figure_series(3).unwrap()[0].reference_at(100), 0.01, max_relative = 1e-15);
        assert!(figure_series(5).is_err());
        let run = figure_run(4, &[1, 2], 3, 0).unwrap();
        let divergent: Vec<String> = run.iter().filter(|(_, t)| t.is_err()).map(|(s, _)| s.label()).collect();
        assert_eq!(divergent, vec!["gaussian(sigma=1) exp p=3".to_string()]);
        let grid = default_n_grid();
        assert_eq!((grid.len(), grid[0], *grid.last().unwrap()), (41, 1, 200));
    }
}
