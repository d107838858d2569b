//! Probability measures on R^d: finite discrete measures, the built-in
//! analytic families, deterministic sampling, and radial moments.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::{erf, erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, sum_series, Series};
use crate::rng::Seed;

/// Relative tolerance for analytic moments.
pub const MOMENT_REL_TOL: f64 = 1e-9;
const MAX_SERIES_TERMS: usize = 200_000;

/// A point of R^d with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    match x {
        [v] => v.abs(),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    match (x, y) {
        ([a], [b]) => (a - b).abs(),
        _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    }
}

/// Finitely many weighted atoms in R^d.
///
/// Atoms are stored sorted lexicographically with duplicates merged, so in
/// one dimension they are in ascending order. Zero-weight atoms are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from `(point, weight)` pairs. Weights must be
    /// nonnegative and sum to one within 1e-9; they are renormalized exactly.
    pub fn new(dim: usize, atoms: Vec<(Point, f64)>) -> Result<Self> {
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            coords.extend_from_slice(p.coords());
            weights.push(w);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Same as [`DiscreteMeasure::new`] with coordinates stored row-major.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if coords.len() != weights.len() * dim {
            return Err(invalid("coordinate buffer does not match atom count"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("atom coordinates must be finite"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let row = |i: usize| &coords[i * dim..(i + 1) * dim];
        order.sort_by(|&a, &b| lex_cmp(row(a), row(b)));
        let mut out_coords = Vec::with_capacity(order.len() * dim);
        let mut out_weights: Vec<f64> = Vec::with_capacity(order.len());
        let mut last: Option<usize> = None;
        for i in order {
            match last {
                Some(j) if row(j) == row(i) => *out_weights.last_mut().unwrap() += weights[i],
                _ => {
                    out_coords.extend_from_slice(row(i));
                    out_weights.push(weights[i]);
                }
            }
            last = Some(i);
        }
        let total: f64 = out_weights.iter().sum();
        out_weights.iter_mut().for_each(|w| *w /= total);
        Ok(DiscreteMeasure { dim, coords: out_coords, weights: out_weights })
    }

    pub fn dirac(point: Point) -> Self {
        DiscreteMeasure { dim: point.dim(), coords: point.0, weights: vec![1.0] }
    }

    /// δ_0 in R^d.
    pub fn delta_zero(dim: usize) -> Self {
        Self::dirac(Point::origin(dim))
    }

    /// Uniform weights on the given scalar samples (δ_0 if empty).
    pub fn empirical_1d(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Ok(Self::delta_zero(1));
        }
        let w = 1.0 / values.len() as f64;
        Self::from_flat(1, values.to_vec(), vec![w; values.len()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Σ w·φ(|x|).
    pub fn integrate_radial(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * phi(norm(x))).sum()
    }

    /// Pushforward under `map`, which must preserve the dimension.
    pub fn pushforward(&self, map: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for (x, _) in self.atoms() {
            let y = map(x);
            if y.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: y.len() });
            }
            coords.extend(y);
        }
        Self::from_flat(self.dim, coords, self.weights.clone())
    }

    /// The atoms as points, in storage order.
    pub fn points(&self) -> Vec<Point> {
        self.coords.chunks_exact(self.dim).map(|c| Point(c.to_vec())).collect()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Empirical measure of the samples: uniform weights, duplicates merged,
/// and δ_0 when there are no samples.
pub fn empirical_measure(samples: &[Point], dim: usize) -> Result<DiscreteMeasure> {
    if samples.is_empty() {
        return Ok(DiscreteMeasure::delta_zero(dim));
    }
    let w = 1.0 / samples.len() as f64;
    DiscreteMeasure::new(dim, samples.iter().map(|p| (p.clone(), w)).collect())
}

/// The built-in laws. Geometric, Poisson and Weibull live on the real line.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// i.i.d. N(0, σ²) coordinates.
    Gaussian { sigma: f64, dim: usize },
    /// P(X = k) = (1−q)^{k−1} q, k ≥ 1.
    Geometric { q: f64 },
    Poisson { lambda: f64 },
    /// Density c x^{c−1} e^{−x^c} on x > 0.
    Weibull { shape: f64 },
    UniformBall { radius: f64, dim: usize },
    PointMass(Point),
    Empirical(DiscreteMeasure),
}

impl From<DiscreteMeasure> for Distribution {
    fn from(m: DiscreteMeasure) -> Self {
        Distribution::Empirical(m)
    }
}

impl Distribution {
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        Distribution::Gaussian { sigma, dim }.validated()
    }

    pub fn geometric(q: f64) -> Result<Self> {
        Distribution::Geometric { q }.validated()
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Distribution::Poisson { lambda }.validated()
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        Distribution::Weibull { shape }.validated()
    }

    pub fn uniform_ball(radius: f64, dim: usize) -> Result<Self> {
        Distribution::UniformBall { radius, dim }.validated()
    }

    pub fn point_mass(point: Point) -> Self {
        Distribution::PointMass(point)
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the family parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Gaussian { sigma, dim } => sigma > 0.0 && sigma.is_finite() && dim >= 1,
            Distribution::Geometric { q } => q > 0.0 && q < 1.0,
            // e^{-λ} must stay representable for the pmf recursion
            Distribution::Poisson { lambda } => lambda > 0.0 && lambda <= 700.0,
            Distribution::Weibull { shape } => shape > 0.0 && shape.is_finite(),
            Distribution::UniformBall { radius, dim } => radius > 0.0 && radius.is_finite() && dim >= 1,
            Distribution::PointMass(_) | Distribution::Empirical(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("parameters out of range for {}", self.name())))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Gaussian { dim, .. } | Distribution::UniformBall { dim, .. } => *dim,
            Distribution::Geometric { .. } | Distribution::Poisson { .. } | Distribution::Weibull { .. } => 1,
            Distribution::PointMass(p) => p.dim(),
            Distribution::Empirical(m) => m.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Gaussian { .. } => "gaussian",
            Distribution::Geometric { .. } => "geometric",
            Distribution::Poisson { .. } => "poisson",
            Distribution::Weibull { .. } => "weibull",
            Distribution::UniformBall { .. } => "uniform-ball",
            Distribution::PointMass(_) => "point-mass",
            Distribution::Empirical(_) => "empirical",
        }
    }

    /// `k=v` pairs joined by `;`.
    pub fn params_string(&self) -> String {
        match self {
            Distribution::Gaussian { sigma, dim } if *dim == 1 => format!("sigma={sigma}"),
            Distribution::Gaussian { sigma, dim } => format!("sigma={sigma};d={dim}"),
            Distribution::Geometric { q } => format!("q={q}"),
            Distribution::Poisson { lambda } => format!("lambda={lambda}"),
            Distribution::Weibull { shape } => format!("c={shape}"),
            Distribution::UniformBall { radius, dim } => format!("R={radius};d={dim}"),
            Distribution::PointMass(p) => {
                let c: Vec<String> = p.coords().iter().map(|v| v.to_string()).collect();
                format!("x={}", c.join(":"))
            }
            Distribution::Empirical(m) => format!("atoms={}", m.len()),
        }
    }

    /// True for laws whose one-dimensional quantile function is a step function.
    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Distribution::Geometric { .. }
                | Distribution::Poisson { .. }
                | Distribution::PointMass(_)
                | Distribution::Empirical(_)
        )
    }

    /// `n` i.i.d. draws for trial 0 of `seed`.
    pub fn sample(&self, n: usize, seed: Seed) -> Vec<Point> {
        self.sample_trial(n, seed, 0)
    }

    /// `n` i.i.d. draws; a pure function of `(self, n, seed, trial)`.
    pub fn sample_trial(&self, n: usize, seed: Seed, trial: u64) -> Vec<Point> {
        let mut rng = seed.rng(trial);
        (0..n).map(|_| Point(self.draw(&mut rng))).collect()
    }

    /// One-dimensional fast path of [`Distribution::sample_trial`]: same draws, bare scalars.
    pub fn sample_scalars<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        Ok((0..n).map(|_| self.draw(rng)[0]).collect())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Distribution::Gaussian { sigma, dim } => {
                (0..*dim).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
            }
            Distribution::Geometric { q } => {
                let u: f64 = rng.random();
                let k = ((1.0 - u).ln() / (1.0 - q).ln()).ceil();
                vec![k.max(1.0)]
            }
            Distribution::Poisson { lambda } => {
                let u: f64 = rng.random();
                let mut k = 0u32;
                let mut p = (-lambda).exp();
                let mut cdf = p;
                while u > cdf && p > 0.0 {
                    k += 1;
                    p *= lambda / k as f64;
                    cdf += p;
                }
                vec![k as f64]
            }
            Distribution::Weibull { shape } => {
                let u: f64 = rng.random();
                vec![(-(1.0 - u).ln()).powf(1.0 / shape)]
            }
            Distribution::UniformBall { radius, dim } => {
                if *dim == 1 {
                    let u: f64 = rng.random();
                    return vec![radius * (2.0 * u - 1.0)];
                }
                let dir = loop {
                    let g: Vec<f64> = (0..*dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = norm(&g);
                    if n > 0.0 {
                        break g.into_iter().map(|v| v / n).collect::<Vec<_>>();
                    }
                };
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / *dim as f64);
                dir.into_iter().map(|v| v * r).collect()
            }
            Distribution::PointMass(p) => p.coords().to_vec(),
            Distribution::Empirical(m) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, w) in m.atoms() {
                    acc += w;
                    if u < acc {
                        return x.to_vec();
                    }
                }
                m.atom(m.len() - 1).to_vec()
            }
        }
    }

    /// P(|X| ≤ r).
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match self {
            Distribution::Gaussian { sigma, dim } => {
                if *dim == 1 {
                    erf(r / (sigma * std::f64::consts::SQRT_2))
                } else {
                    gamma_lr(*dim as f64 / 2.0, r * r / (2.0 * sigma * sigma))
                }
            }
            _ => 1.0 - self.radial_sf(r),
        }
    }

    /// P(|X| > r), computed directly so that far annuli keep relative precision.
    pub fn radial_sf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 1.0;
        }
        match self {
            Distribution::Gaussian { sigma, dim } => {
                if *dim == 1 {
                    erfc(r / (sigma * std::f64::consts::SQRT_2))
                } else {
                    gamma_ur(*dim as f64 / 2.0, r * r / (2.0 * sigma * sigma))
                }
            }
            Distribution::Geometric { q } => {
                if r < 1.0 {
                    1.0
                } else {
                    (1.0 - q).powf(r.floor())
                }
            }
            Distribution::Poisson { lambda } => {
                let kmax = r.floor() as usize;
                // upper tail summed directly once past the mode
                if kmax as f64 > *lambda {
                    poisson_pmf_iter(*lambda).skip(kmax + 1).take_while(|&p| p > 0.0).sum()
                } else {
                    1.0 - poisson_pmf_iter(*lambda).take(kmax + 1).sum::<f64>()
                }
            }
            Distribution::Weibull { shape } => (-r.powf(*shape)).exp(),
            Distribution::UniformBall { radius, dim } => {
                if r >= *radius {
                    0.0
                } else {
                    1.0 - (r / radius).powi(*dim as i32)
                }
            }
            Distribution::PointMass(p) => {
                if p.norm() > r {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Empirical(m) => m.integrate_radial(|x| if x > r { 1.0 } else { 0.0 }),
        }
    }

    /// μ(A^k) for the dyadic annuli A^0 = closed unit ball,
    /// A^k = {2^{k−1} < |x| ≤ 2^k}.
    pub fn annulus_mass(&self, k: u32) -> f64 {
        if k == 0 {
            return self.radial_cdf(1.0);
        }
        let inner = (k as f64 - 1.0).exp2();
        let outer = (k as f64).exp2();
        if let Distribution::Empirical(m) = self {
            return m.integrate_radial(|r| if r > inner && r <= outer { 1.0 } else { 0.0 });
        }
        (self.radial_sf(inner) - self.radial_sf(outer)).max(0.0)
    }

    /// Quantile function of a continuous one-dimensional law.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        let u = u.clamp(0.0, 1.0);
        match self {
            Distribution::Gaussian { sigma, .. } => Ok(sigma * std_normal_quantile(u)),
            Distribution::Weibull { shape } => {
                if u >= 1.0 {
                    Ok(f64::INFINITY)
                } else {
                    Ok((-(-u).ln_1p()).powf(1.0 / shape))
                }
            }
            Distribution::UniformBall { radius, .. } => Ok(radius * (2.0 * u - 1.0)),
            _ => Err(Error::QuantileUnavailable(self.name())),
        }
    }

    /// Density of a continuous one-dimensional law.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        match self {
            Distribution::Gaussian { sigma, .. } => {
                let z = x / sigma;
                Ok((-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
            }
            Distribution::Weibull { shape } => Ok(if x <= 0.0 {
                0.0
            } else {
                shape * x.powf(shape - 1.0) * (-x.powf(*shape)).exp()
            }),
            Distribution::UniformBall { radius, .. } => {
                Ok(if x.abs() <= *radius { 0.5 / radius } else { 0.0 })
            }
            _ => Err(Error::QuantileUnavailable(self.name())),
        }
    }

    /// Natural length scale, used to map semi-infinite integrals.
    pub(crate) fn scale(&self) -> f64 {
        match self {
            Distribution::Gaussian { sigma, .. } => *sigma,
            Distribution::UniformBall { radius, .. } => *radius,
            _ => 1.0,
        }
    }

    /// Atoms `(x, mass)` in ascending order for atomic one-dimensional laws.
    pub(crate) fn atoms_1d(&self) -> Option<Box<dyn Iterator<Item = (f64, f64)> + '_>> {
        if self.dim() != 1 {
            return None;
        }
        match self {
            Distribution::Geometric { q } => {
                let q = *q;
                Some(Box::new((1u64..).map(move |k| (k as f64, q * (1.0 - q).powi(k as i32 - 1)))))
            }
            Distribution::Poisson { lambda } => {
                Some(Box::new(poisson_pmf_iter(*lambda).enumerate().map(|(k, p)| (k as f64, p))))
            }
            Distribution::PointMass(p) => Some(Box::new(std::iter::once((p.coords()[0], 1.0)))),
            Distribution::Empirical(m) => Some(Box::new(m.atoms().map(|(x, w)| (x[0], w)))),
            _ => None,
        }
    }

    /// Density of |X| for the continuous families.
    fn radial_pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match self {
            Distribution::Gaussian { sigma, dim } => {
                let d = *dim as f64;
                let z = r / sigma;
                let log = (d - 1.0) * z.ln() - 0.5 * z * z - (0.5 * d - 1.0) * std::f64::consts::LN_2
                    - ln_gamma(0.5 * d)
                    - sigma.ln();
                if *dim == 1 {
                    2.0 * (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                } else if r == 0.0 {
                    0.0
                } else {
                    log.exp()
                }
            }
            Distribution::Weibull { shape } => {
                if r == 0.0 {
                    if *shape == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    shape * r.powf(shape - 1.0) * (-r.powf(*shape)).exp()
                }
            }
            Distribution::UniformBall { radius, dim } => {
                if r > *radius {
                    0.0
                } else {
                    let d = *dim as f64;
                    d * r.powf(d - 1.0) / radius.powf(d)
                }
            }
            _ => 0.0,
        }
    }
}

fn poisson_pmf_iter(lambda: f64) -> impl Iterator<Item = f64> {
    let mut p = (-lambda).exp();
    (0u64..).map(move |k| {
        if k > 0 {
            p *= lambda / k as f64;
        }
        p
    })
}

/// Inverse of the standard normal CDF.
pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    if u > 0.5 {
        -std_normal_quantile(1.0 - u)
    } else {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    }
}

/// Measures whose radial integrals can be evaluated.
pub trait Radial {
    /// ∫ φ(|y|) dμ(y); `Err(Divergent)` when the integral does not converge.
    fn radial_expectation(&self, phi: &dyn Fn(f64) -> f64) -> Result<f64>;

    /// Whether ∫e^{a|y|^p} dμ(y) < ∞. Quadrature cannot tell once the density
    /// underflows, so laws with unbounded support answer analytically.
    fn exp_moment_finite(&self, _a: f64, _p: f64) -> bool {
        true
    }
}

impl Radial for DiscreteMeasure {
    fn radial_expectation(&self, phi: &dyn Fn(f64) -> f64) -> Result<f64> {
        let v = self.integrate_radial(phi);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Divergent("non-finite atom contribution".into()))
        }
    }
}

impl Radial for Distribution {
    fn exp_moment_finite(&self, a: f64, p: f64) -> bool {
        if a <= 0.0 {
            return true;
        }
        // growth of the log-density against a r^p
        let threshold = |order: f64, rate: f64| p < order || (p == order && a < rate);
        match self {
            Distribution::Gaussian { sigma, .. } => threshold(2.0, 0.5 / (sigma * sigma)),
            Distribution::Weibull { shape } => threshold(*shape, 1.0),
            Distribution::Geometric { q } => threshold(1.0, -(1.0 - q).ln()),
            // λ^k/k! decays faster than any e^{-ak}
            Distribution::Poisson { .. } => p <= 1.0,
            Distribution::UniformBall { .. } | Distribution::PointMass(_) | Distribution::Empirical(_) => true,
        }
    }

    fn radial_expectation(&self, phi: &dyn Fn(f64) -> f64) -> Result<f64> {
        let divergent = || Error::Divergent(format!("radial integral under {}", self.name()));
        match self {
            Distribution::PointMass(p) => {
                let v = phi(p.norm());
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(divergent())
                }
            }
            Distribution::Empirical(m) => m.radial_expectation(phi),
            Distribution::Geometric { .. } | Distribution::Poisson { .. } => {
                let mut atoms = self.atoms_1d().expect("atomic family");
                let min_terms = match self {
                    Distribution::Poisson { lambda } => (2.0 * lambda).ceil() as usize + 3,
                    _ => 3,
                };
                let series = sum_series(
                    |_| {
                        let (x, m) = atoms.next().expect("infinite support");
                        if m == 0.0 {
                            0.0
                        } else {
                            m * phi(x)
                        }
                    },
                    MOMENT_REL_TOL * 1e-3,
                    min_terms,
                    MAX_SERIES_TERMS,
                );
                match series {
                    Series::Converged(v) => Ok(v),
                    Series::Divergent => Err(divergent()),
                }
            }
            Distribution::UniformBall { radius, .. } => {
                let f = |r: f64| guarded(phi(r), self.radial_pdf(r));
                let v = integrate(f, 0.0, *radius, 1e-15);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(divergent())
                }
            }
            Distribution::Gaussian { .. } | Distribution::Weibull { .. } => {
                // dyadic shells [0, s], [s, 2s], [2s, 4s], ...
                let s = self.scale();
                let f = |r: f64| guarded(phi(r), self.radial_pdf(r));
                let shell = |k: usize| {
                    let (a, b) = if k == 0 { (0.0, s) } else { (s * ((k - 1) as f64).exp2(), s * (k as f64).exp2()) };
                    integrate(f, a, b, 1e-300)
                };
                match sum_series(shell, MOMENT_REL_TOL * 1e-3, 4, 1000) {
                    Series::Converged(v) => Ok(v),
                    Series::Divergent => Err(divergent()),
                }
            }
        }
    }
}

/// `value·density`, with zero density winning over an overflowing value.
#[inline]
pub(crate) fn guarded(value: f64, density: f64) -> f64 {
    if density == 0.0 {
        0.0
    } else {
        value * density
    }
}

/// M_q(μ) = ∫|y|^q dμ.
pub fn moment_poly<M: Radial + ?Sized>(m: &M, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Err(invalid("moment order must be positive"));
    }
    m.radial_expectation(&|r: f64| r.powf(q))
}

/// M_q(μ; h) = ∫ h(|y|)^q dμ.
pub fn moment_h<M: Radial + ?Sized>(m: &M, h: &dyn Fn(f64) -> f64, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Err(invalid("moment order must be positive"));
    }
    m.radial_expectation(&|r: f64| {
        let v = h(r);
        if q == 1.0 {
            v
        } else {
            v.powf(q)
        }
    })
}

/// μ(A^k).
pub fn annulus_mass(dist: &Distribution, k: u32) -> f64 {
    dist.annulus_mass(k)
}
