//! Dyadic annuli A^0 = closed unit ball, A^k = {2^{k−1} < |x| ≤ 2^k}:
//! conditional measures, dilation, the annular coupling bound, and the
//! self-normalized deviation statistic over annulus masses.

use std::collections::BTreeMap;

use crate::costs::{GrowthPair, RadialCost};
use crate::error::{invalid, Error, Result};
use crate::measures::{norm, DiscreteMeasure, Distribution};
use crate::ot::exact_ot;
use crate::par::map_indices;
use crate::rng::Seed;
use crate::stats::{wilson, Z95};

/// Index of the annulus containing a point at radius `r`.
pub fn annulus_index_radius(r: f64) -> u32 {
    if r <= 1.0 {
        return 0;
    }
    let mut k = r.log2().ceil().max(1.0) as u32;
    while k > 1 && ((k - 1) as f64).exp2() >= r {
        k -= 1;
    }
    while (k as f64).exp2() < r {
        k += 1;
    }
    k
}

pub fn annulus_index(x: &[f64]) -> u32 {
    annulus_index_radius(norm(x))
}

/// Masses μ(A^k) and conditionals μ^k of a discrete measure.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnularDecomposition {
    pub masses: BTreeMap<u32, f64>,
    pub conditionals: BTreeMap<u32, DiscreteMeasure>,
    dim: usize,
}

impl AnnularDecomposition {
    pub fn mass(&self, k: u32) -> f64 {
        self.masses.get(&k).copied().unwrap_or(0.0)
    }

    /// μ^k, or δ_0 for an annulus without mass.
    pub fn conditional(&self, k: u32) -> DiscreteMeasure {
        self.conditionals.get(&k).cloned().unwrap_or_else(|| DiscreteMeasure::delta_zero(self.dim))
    }

    pub fn max_k(&self) -> u32 {
        self.masses.keys().next_back().copied().unwrap_or(0)
    }
}

pub fn decompose(m: &DiscreteMeasure) -> AnnularDecomposition {
    let mut groups: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (x, w) in m.atoms() {
        let (coords, weights) = groups.entry(annulus_index(x)).or_default();
        coords.extend_from_slice(x);
        weights.push(w);
    }
    let mut masses = BTreeMap::new();
    let mut conditionals = BTreeMap::new();
    for (k, (coords, weights)) in groups {
        let mass: f64 = weights.iter().sum();
        let normalized = weights.iter().map(|w| w / mass).collect();
        let cond = DiscreteMeasure::from_flat(m.dim(), coords, normalized).expect("renormalized atoms are valid");
        masses.insert(k, mass);
        conditionals.insert(k, cond);
    }
    AnnularDecomposition { masses, conditionals, dim: m.dim() }
}

/// Pushforward under x ↦ x / 2^k.
pub fn dilate(m: &DiscreteMeasure, k: u32) -> DiscreteMeasure {
    let s = (-(k as f64)).exp2();
    m.pushforward(|x| x.iter().map(|v| v * s).collect()).expect("dilation preserves dimension")
}

/// The annular coupling and its G-split bound, with the four-term decomposition
/// I + II + 2·III + IV of the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingBoundReport {
    /// Σ_k (μ∧ν)(A^k)·D_f(μ^k, ν^k) + ∫G dν_rem + ∫G dλ_rem
    pub total: f64,
    /// Cost of the coupling Σ_k (μ∧ν)(A^k) π^k + ν_rem ⊗ λ_rem / ρ.
    pub realized: f64,
    /// Σ_k (μ∧ν)(A^k)·D_f(μ^k, ν^k)
    pub term_i: f64,
    /// Σ_k (μ∧ν)(A^k)·(M_1(μ^k; G) − M_1(ν^k; G))
    pub term_ii: f64,
    /// ∫G dν_rem
    pub term_iii: f64,
    /// M_1(ν; G) − M_1(μ; G)
    pub term_iv: f64,
    /// Mass moved between annuli.
    pub rho: f64,
    /// The exact optimal cost D_f(μ, ν).
    pub exact: f64,
}

/// Builds the coupling that matches μ and ν annulus by annulus and sends
/// the annular surpluses to each other by a product plan.
pub fn coupling_upper_bound(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &RadialCost,
    growth: &GrowthPair,
) -> Result<CouplingBoundReport> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    let exact = exact_ot(mu, nu, cost)?.cost;
    let dm = decompose(mu);
    let dn = decompose(nu);
    let mut indices: Vec<u32> = dm.masses.keys().chain(dn.masses.keys()).copied().collect();
    indices.sort_unstable();
    indices.dedup();

    let g_moment = |m: &DiscreteMeasure| m.integrate_radial(|r| growth.big_g(r));
    let mut term_i = 0.0;
    let mut term_ii = 0.0;
    let mut rho = 0.0;
    // ν_rem and λ_rem as (point, mass) lists
    let mut surplus_mu: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut surplus_nu: Vec<(Vec<f64>, f64)> = Vec::new();
    for k in indices {
        let (a, b) = (dm.mass(k), dn.mass(k));
        let (ck_mu, ck_nu) = (dm.conditional(k), dn.conditional(k));
        let common = a.min(b);
        if common > 0.0 {
            term_i += common * exact_ot(&ck_mu, &ck_nu, cost)?.cost;
            term_ii += common * (g_moment(&ck_mu) - g_moment(&ck_nu));
        }
        if a > b {
            rho += a - b;
            surplus_mu.extend(ck_mu.atoms().map(|(x, w)| (x.to_vec(), (a - b) * w)));
        } else if b > a {
            surplus_nu.extend(ck_nu.atoms().map(|(x, w)| (x.to_vec(), (b - a) * w)));
        }
    }
    let term_iii: f64 = surplus_mu.iter().map(|(x, w)| w * growth.big_g(norm(x))).sum();
    let g_lambda: f64 = surplus_nu.iter().map(|(y, w)| w * growth.big_g(norm(y))).sum();
    let term_iv = g_moment(nu) - g_moment(mu);
    let mut product = 0.0;
    if rho > 0.0 {
        for (x, wx) in &surplus_mu {
            for (y, wy) in &surplus_nu {
                product += wx * wy * cost.eval(crate::measures::distance(x, y));
            }
        }
        product /= rho;
    }
    Ok(CouplingBoundReport {
        total: term_i + term_iii + g_lambda,
        realized: term_i + product,
        term_i,
        term_ii,
        term_iii,
        term_iv,
        rho,
        exact,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// (μ(A^k) − μ_N(A^k))₊ / μ(A^k)^α
    TrueMinusEmpirical,
    /// (μ_N(A^k) − μ(A^k))₊ / μ_N(A^k)^α
    EmpiricalMinusTrue,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::TrueMinusEmpirical => "true-minus-empirical",
            Direction::EmpiricalMinusTrue => "empirical-minus-true",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfNormConfig {
    pub delta: f64,
    pub alpha: f64,
    pub direction: Direction,
}

impl SelfNormConfig {
    pub fn new(delta: f64, alpha: f64, direction: Direction) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta must be positive"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        Ok(SelfNormConfig { delta, alpha, direction })
    }

    /// B_α = 2^{−(3+2α)}
    pub fn b_alpha(&self) -> f64 {
        (-(3.0 + 2.0 * self.alpha)).exp2()
    }

    /// C = max(8e, 16 / (1 − 4^{−δ}))
    pub fn prefactor(&self) -> f64 {
        (8.0 * std::f64::consts::E).max(16.0 / (1.0 - (-2.0 * self.delta).exp2()))
    }

    /// C·e^{−B_α x² N^{2(1 − α∨½)}}·1{x ≤ 1}
    pub fn envelope(&self, n: usize, x: f64) -> f64 {
        if x > 1.0 {
            return 0.0;
        }
        let rate = (n as f64).powf(2.0 * (1.0 - self.alpha.max(0.5)));
        self.prefactor() * (-self.b_alpha() * x * x * rate).exp()
    }
}

/// sup_k 2^{−kδ}·(deviation)₊ / (mass)^α over annulus masses indexed by k,
/// with 0/0 read as 0. Missing indices carry zero mass.
pub fn selfnorm_stat(masses: &[f64], empirical: &[f64], cfg: &SelfNormConfig) -> f64 {
    let len = masses.len().max(empirical.len());
    let mut best: f64 = 0.0;
    for k in 0..len {
        let m = masses.get(k).copied().unwrap_or(0.0);
        let e = empirical.get(k).copied().unwrap_or(0.0);
        let (num, den) = match cfg.direction {
            Direction::TrueMinusEmpirical => (m - e, m),
            Direction::EmpiricalMinusTrue => (e - m, e),
        };
        if num > 0.0 && den > 0.0 {
            best = best.max((-(k as f64) * cfg.delta).exp2() * num / den.powf(cfg.alpha));
        }
    }
    best
}

/// Annulus masses of an analytic law up to the first index whose outer
/// radius holds all but 1e-9 of the mass; the remainder joins that index.
pub fn truncated_masses(dist: &Distribution) -> Vec<f64> {
    let mut k_max = 0u32;
    while dist.radial_cdf((k_max as f64).exp2()) <= 1.0 - 1e-9 && k_max < 1023 {
        k_max += 1;
    }
    let mut masses: Vec<f64> = (0..=k_max).map(|k| dist.annulus_mass(k)).collect();
    let residual = 1.0 - masses.iter().sum::<f64>();
    *masses.last_mut().unwrap() += residual.max(0.0);
    masses
}

/// Empirical annulus masses of a sample, with indices beyond `last` lumped into `last`.
pub fn empirical_masses(points: impl IntoIterator<Item = f64>, n: usize, last: usize) -> Vec<f64> {
    let mut counts = vec![0u64; last + 1];
    for r in points {
        let k = (annulus_index_radius(r) as usize).min(last);
        counts[k] += 1;
    }
    let nf = n.max(1) as f64;
    counts.into_iter().map(|c| c as f64 / nf).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfNormTailRow {
    pub x: f64,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub envelope: f64,
}

/// Monte Carlo tail P(stat > x) of the self-normalized statistic for samples
/// of size `n`, one independent random stream per trial.
pub fn selfnorm_tail_mc(
    dist: &Distribution,
    n: usize,
    cfg: &SelfNormConfig,
    xs: &[f64],
    trials: usize,
    seed: Seed,
) -> Result<Vec<SelfNormTailRow>> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let stats = selfnorm_samples(dist, n, cfg, trials, seed);
    Ok(xs
        .iter()
        .map(|&x| {
            let hits = stats.iter().filter(|&&s| s > x).count() as u64;
            let (ci_lo, ci_hi) = wilson(hits, trials as u64, Z95);
            SelfNormTailRow { x, phat: hits as f64 / trials as f64, ci_lo, ci_hi, envelope: cfg.envelope(n, x) }
        })
        .collect())
}

/// One statistic per trial.
pub fn selfnorm_samples(dist: &Distribution, n: usize, cfg: &SelfNormConfig, trials: usize, seed: Seed) -> Vec<f64> {
    let masses = truncated_masses(dist);
    let last = masses.len() - 1;
    let seed = seed.substream(n as u64);
    map_indices(trials, |t| {
        let sample = dist.sample_trial(n, seed, t as u64);
        let emp = if n == 0 {
            // μ_0 = δ_0
            let mut e = vec![0.0; last + 1];
            e[0] = 1.0;
            e
        } else {
            empirical_masses(sample.iter().map(|p| p.norm()), n, last)
        };
        selfnorm_stat(&masses, &emp, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn emp(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::empirical_1d(xs).unwrap()
    }

    #[test]
    fn index_examples() {
        assert_eq!(annulus_index_radius(0.0), 0);
        assert_eq!(annulus_index_radius(1.0), 0);
        assert_eq!(annulus_index_radius(1.5), 1);
        assert_eq!(annulus_index_radius(2.0), 1);
        assert_eq!(annulus_index_radius(2.5), 2);
        assert_eq!(annulus_index_radius(4.0), 2);
        assert_eq!(annulus_index_radius(4.000_000_000_000_001), 3);
        assert_eq!(annulus_index(&[3.0, 4.0]), 3);
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&DiscreteMeasure::delta_zero(1));
        assert_eq!(d.masses, BTreeMap::from([(0, 1.0)]));
        assert_eq!(d.conditional(0), DiscreteMeasure::delta_zero(1));
        let d = decompose(&emp(&[0.5, 3.0]));
        assert_eq!(d.masses, BTreeMap::from([(0, 0.5), (2, 0.5)]));
        assert_eq!(d.conditional(0), emp(&[0.5]));
        assert_eq!(d.conditional(2), emp(&[3.0]));
        assert_eq!(d.conditional(1), DiscreteMeasure::delta_zero(1));
        let d = decompose(&emp(&[1.0, 2.0, 4.0]));
        assert_eq!(d.masses.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(d.max_k(), 2);
    }

    #[test]
    fn dilate_examples() {
        assert_eq!(dilate(&emp(&[4.0]), 2), emp(&[1.0]));
        assert_eq!(dilate(&emp(&[2.0, 4.0]), 2), emp(&[0.5, 1.0]));
    }

    #[test]
    fn coupling_bound_examples() {
        let p1 = RadialCost::power(1.0).unwrap();
        let g = crate::costs::default_growth(&p1).unwrap();
        let m = emp(&[0.3, 2.5, -7.0]);
        let r = coupling_upper_bound(&m, &m, &p1, &g).unwrap();
        assert_eq!((r.total, r.exact, r.rho), (0.0, 0.0, 0.0));
        let r = coupling_upper_bound(&emp(&[0.5]), &emp(&[3.0]), &p1, &g).unwrap();
        assert_relative_eq!(r.total, 3.5, max_relative = 1e-14);
        assert_relative_eq!(r.exact, 2.5);
        assert_relative_eq!(r.realized, 2.5);
        assert_relative_eq!(r.term_i + r.term_ii + 2.0 * r.term_iii + r.term_iv, r.total, max_relative = 1e-14);
    }

    #[test]
    fn selfnorm_examples() {
        let cfg = SelfNormConfig::new(1.0, 0.5, Direction::TrueMinusEmpirical).unwrap();
        assert_eq!(selfnorm_stat(&[0.5, 0.5], &[0.5, 0.5], &cfg), 0.0);
        assert_eq!(selfnorm_stat(&[1.0], &[1.0], &cfg), 0.0);
        assert_eq!(selfnorm_stat(&[0.2, 0.8], &[0.5, 0.9], &cfg), 0.0);
        let v = selfnorm_stat(&[0.5, 0.5], &[1.0], &cfg);
        assert_relative_eq!(v, 0.5 * 0.5 / 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.353_553_390_593_273_8, max_relative = 1e-15);
        assert_eq!(cfg.b_alpha(), 1.0 / 16.0);
        assert_eq!(cfg.envelope(100, 1.5), 0.0);
    }

    #[test]
    fn point_mass_statistic_vanishes() {
        let cfg = SelfNormConfig::new(1.0, 0.5, Direction::TrueMinusEmpirical).unwrap();
        let pm = Distribution::point_mass(crate::measures::Point::scalar(0.0));
        let rows = selfnorm_tail_mc(&pm, 20, &cfg, &[0.1, 0.5], 50, Seed::new(1)).unwrap();
        assert!(rows.iter().all(|r| r.phat == 0.0));
    }
}
