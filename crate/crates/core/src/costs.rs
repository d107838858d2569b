//! Radial cost functions, their growth companions, and the rate functions φ, φ_η.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{invalid, Error, Result};

/// A radial cost `f(|x − y|)` of local order `p`.
#[derive(Clone)]
pub enum RadialCost {
    /// f(r) = r^p
    Power { p: f64 },
    /// f(r) = e^{a r^p} − 1
    Exponential { p: f64, a: f64 },
    /// A user-supplied f with f(0) = 0, f ≥ 0, of local order p.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, p: f64 },
}

impl fmt::Debug for RadialCost {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialCost::Power { p } => write!(fm, "Power(p={p})"),
            RadialCost::Exponential { p, a } => write!(fm, "Exponential(p={p}, a={a})"),
            RadialCost::Custom { p, .. } => write!(fm, "Custom(p={p})"),
        }
    }
}

impl RadialCost {
    pub fn power(p: f64) -> Result<Self> {
        check_order(p)?;
        Ok(RadialCost::Power { p })
    }

    pub fn exponential(p: f64, a: f64) -> Result<Self> {
        check_order(p)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("exponential scale a must be positive"));
        }
        Ok(RadialCost::Exponential { p, a })
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, p: f64) -> Result<Self> {
        check_order(p)?;
        if f(0.0) != 0.0 {
            return Err(invalid("custom cost must vanish at 0"));
        }
        Ok(RadialCost::Custom { f: Arc::new(f), p })
    }

    pub fn p(&self) -> f64 {
        match self {
            RadialCost::Power { p } | RadialCost::Exponential { p, .. } | RadialCost::Custom { p, .. } => *p,
        }
    }

    /// The exponential scale, or 0 for other costs.
    pub fn a(&self) -> f64 {
        match self {
            RadialCost::Exponential { a, .. } => *a,
            _ => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadialCost::Power { .. } => "power",
            RadialCost::Exponential { .. } => "exp",
            RadialCost::Custom { .. } => "custom",
        }
    }

    /// f(r); overflow is +∞.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialCost::Power { p } => pow(r, *p),
            RadialCost::Exponential { p, a } => (a * pow(r, *p)).exp_m1(),
            RadialCost::Custom { f, .. } => f(r),
        }
    }

    /// Whether f is known to be convex on [0, ∞), which makes the monotone
    /// coupling optimal on the line.
    pub fn is_convex(&self) -> bool {
        match self {
            RadialCost::Power { p } | RadialCost::Exponential { p, .. } => *p >= 1.0,
            RadialCost::Custom { .. } => false,
        }
    }

    /// c_p = 2^{p−1} for p ≥ 1, else 1; (s + t)^p ≤ c_p (s^p + t^p).
    pub fn c_p(&self) -> f64 {
        c_p(self.p())
    }
}

fn check_order(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid("growth order p must be positive"))
    }
}

pub fn c_p(p: f64) -> f64 {
    if p >= 1.0 {
        (p - 1.0).exp2()
    } else {
        1.0
    }
}

#[inline]
fn pow(r: f64, p: f64) -> f64 {
    if p == 1.0 {
        r
    } else if p == 2.0 {
        r * r
    } else if p == 3.0 {
        r * r * r
    } else {
        r.powf(p)
    }
}

/// ln(e^x − 1) without overflow for large x.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Grid resolution for custom-cost suprema.
const POINTS_PER_OCTAVE: usize = 512;
/// Custom suprema over (0, R] start this many octaves below 1.
const LOWEST_OCTAVE: i32 = -60;

/// Built-in g and G are inflated by a few ulps so the bounds they certify
/// survive the rounding of the cost evaluation itself.
const GUARD: f64 = 1.0 + 16.0 * f64::EPSILON;

/// The local dilation bound g and global splitting bound G of a cost:
/// f(R|x|) ≤ g(R)|x|^p for |x| ≤ 1 and f(|x − y|) ≤ G(|x|) + G(|y|).
#[derive(Clone, Debug)]
pub struct GrowthPair {
    kind: GrowthKind,
}

#[derive(Clone)]
enum GrowthKind {
    Power { p: f64 },
    Exponential { p: f64, a: f64 },
    Custom(Arc<CustomGrowth>),
}

impl fmt::Debug for GrowthKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthKind::Power { p } => write!(fm, "Power(p={p})"),
            GrowthKind::Exponential { p, a } => write!(fm, "Exponential(p={p}, a={a})"),
            GrowthKind::Custom(c) => write!(fm, "Custom(p={})", c.p),
        }
    }
}

struct CustomGrowth {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    p: f64,
    /// per-octave suprema of f(r)/r^p and of f(r), keyed by octave j for r ∈ (2^{j−1}, 2^j]
    ratio_sups: Mutex<HashMap<i32, f64>>,
    value_sups: Mutex<HashMap<i32, f64>>,
}

impl CustomGrowth {
    fn octave_grid(j: i32) -> impl Iterator<Item = f64> {
        let lo = (j as f64 - 1.0).exp2();
        (1..=POINTS_PER_OCTAVE).map(move |i| lo * (i as f64 / POINTS_PER_OCTAVE as f64).exp2())
    }

    fn memo(cache: &Mutex<HashMap<i32, f64>>, j: i32, compute: impl FnOnce() -> f64) -> f64 {
        if let Some(v) = cache.lock().unwrap().get(&j) {
            return *v;
        }
        let v = compute();
        cache.lock().unwrap().insert(j, v);
        v
    }

    fn ratio_sup(&self, j: i32) -> f64 {
        Self::memo(&self.ratio_sups, j, || {
            Self::octave_grid(j).map(|r| (self.f)(r) / r.powf(self.p)).fold(0.0, nan_max)
        })
    }

    fn value_sup(&self, j: i32) -> f64 {
        Self::memo(&self.value_sups, j, || Self::octave_grid(j).map(|r| (self.f)(r)).fold(0.0, nan_max))
    }

    /// sup over r ∈ (0, R] of `octave` sups on whole octaves plus the grid of the partial one.
    fn sup_up_to(&self, r_max: f64, octave: impl Fn(i32) -> f64, point: impl Fn(f64) -> f64) -> f64 {
        if r_max <= 0.0 {
            return 0.0;
        }
        let top = r_max.log2().ceil() as i32;
        let mut s = 0.0;
        for j in LOWEST_OCTAVE..top {
            s = nan_max(s, octave(j));
        }
        let top_hi = (top as f64).exp2();
        if top_hi == r_max {
            return nan_max(s, octave(top));
        }
        for r in Self::octave_grid(top).take_while(|&r| r <= r_max) {
            s = nan_max(s, point(r));
        }
        nan_max(s, point(r_max))
    }

    fn g(&self, r: f64) -> f64 {
        let ratio = self.sup_up_to(r, |j| self.ratio_sup(j), |x| (self.f)(x) / x.powf(self.p));
        r.powf(self.p) * ratio
    }

    fn big_g(&self, r: f64) -> f64 {
        self.sup_up_to(2.0 * r, |j| self.value_sup(j), |x| (self.f)(x))
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// The default growth pair: g(R) = R^p, G(r) = c_p r^p for powers;
/// g = f, G(r) = ½(e^{2 c_p a r^p} − 1) for exponentials; grid suprema for custom costs.
pub fn default_growth(cost: &RadialCost) -> Result<GrowthPair> {
    let kind = match cost {
        RadialCost::Power { p } => GrowthKind::Power { p: *p },
        RadialCost::Exponential { p, a } => GrowthKind::Exponential { p: *p, a: *a },
        RadialCost::Custom { f, p } => {
            let custom = CustomGrowth {
                f: f.clone(),
                p: *p,
                ratio_sups: Mutex::new(HashMap::new()),
                value_sups: Mutex::new(HashMap::new()),
            };
            // f(r)/r^p must stay bounded as r → 0
            let near = custom.ratio_sup(-30);
            let far = custom.ratio_sup(-40);
            let finite = (-40..=0).all(|j| custom.ratio_sup(j).is_finite());
            if !finite || far > 1.5 * near {
                return Err(Error::LocalGrowthViolation);
            }
            GrowthKind::Custom(Arc::new(custom))
        }
    };
    Ok(GrowthPair { kind })
}

impl GrowthPair {
    pub fn p(&self) -> f64 {
        match &self.kind {
            GrowthKind::Power { p } | GrowthKind::Exponential { p, .. } => *p,
            GrowthKind::Custom(c) => c.p,
        }
    }

    /// The rate b with G(r) ≍ e^{b r^p}, for exponential growth.
    pub fn exp_rate(&self) -> Option<f64> {
        match &self.kind {
            GrowthKind::Exponential { p, a } => Some(2.0 * c_p(*p) * a),
            _ => None,
        }
    }

    /// g(R).
    pub fn g(&self, r: f64) -> f64 {
        match &self.kind {
            GrowthKind::Power { p } => GUARD * pow(r, *p),
            GrowthKind::Exponential { p, a } => GUARD * (a * pow(r, *p)).exp_m1(),
            GrowthKind::Custom(c) => c.g(r),
        }
    }

    /// G(r).
    pub fn big_g(&self, r: f64) -> f64 {
        match &self.kind {
            GrowthKind::Power { p } => GUARD * c_p(*p) * pow(r, *p),
            GrowthKind::Exponential { p, a } => GUARD * 0.5 * (2.0 * c_p(*p) * a * pow(r, *p)).exp_m1(),
            GrowthKind::Custom(c) => c.big_g(r),
        }
    }

    /// ln g(R), finite even where g itself overflows.
    pub fn ln_g(&self, r: f64) -> f64 {
        match &self.kind {
            GrowthKind::Power { p } => GUARD.ln() + p * r.ln(),
            GrowthKind::Exponential { p, a } => GUARD.ln() + ln_expm1(a * r.powf(*p)),
            GrowthKind::Custom(c) => c.g(r).ln(),
        }
    }

    /// ln G(r), finite even where G itself overflows.
    pub fn ln_big_g(&self, r: f64) -> f64 {
        match &self.kind {
            GrowthKind::Power { p } => GUARD.ln() + c_p(*p).ln() + p * r.ln(),
            GrowthKind::Exponential { p, a } => {
                GUARD.ln() + ln_expm1(2.0 * c_p(*p) * a * r.powf(*p)) - std::f64::consts::LN_2
            }
            GrowthKind::Custom(c) => c.big_g(r).ln(),
        }
    }
}

/// Which side of the critical order p = d/2 a pair (d, p) is on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// p > d/2
    Super,
    /// p = d/2
    Critical,
    /// p < d/2
    Sub,
}

impl Regime {
    pub fn detect(d: usize, p: f64) -> Regime {
        let two_p = 2.0 * p;
        let d = d as f64;
        let critical = if two_p.fract() == 0.0 {
            two_p == d
        } else {
            (two_p - d).abs() <= 1e-12 * d
        };
        if critical {
            Regime::Critical
        } else if two_p > d {
            Regime::Super
        } else {
            Regime::Sub
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Super => "p>d/2",
            Regime::Critical => "p=d/2",
            Regime::Sub => "p<d/2",
        }
    }
}

/// Dimension, order and exponent η ∈ (0, ½ ∧ p/d] of a modified rate function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub d: usize,
    pub p: f64,
    pub eta: f64,
    pub regime: Regime,
}

impl RateParams {
    pub fn new(d: usize, p: f64, eta: f64) -> Result<Self> {
        check_order(p)?;
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let cap = max_eta(d, p);
        if !(eta > 0.0 && eta <= cap * (1.0 + 1e-15)) {
            return Err(invalid(format!("eta = {eta} outside (0, {cap}]")));
        }
        Ok(RateParams { d, p, eta, regime: Regime::detect(d, p) })
    }

    /// η = ½ ∧ p/d, for which φ_η = φ.
    pub fn canonical(d: usize, p: f64) -> Result<Self> {
        check_order(p)?;
        Self::new(d, p, max_eta(d.max(1), p))
    }
}

pub fn max_eta(d: usize, p: f64) -> f64 {
    (p / d as f64).min(0.5)
}

/// log(2 + 1/x)
#[inline]
fn log_factor(x: f64) -> f64 {
    (2.0 + 1.0 / x).ln()
}

/// φ(x): x² for p > d/2, (x / log(2 + 1/x))² for p = d/2, x^{d/p} for p < d/2.
/// Evaluated as φ_η at η = ½ ∧ p/d, so the two agree bit for bit there.
pub fn rate_phi(d: usize, p: f64, x: f64) -> f64 {
    let params = RateParams { d, p, eta: max_eta(d, p), regime: Regime::detect(d, p) };
    rate_phi_eta(&params, x)
}

/// φ_η(x): x^{1/η}, divided by log(2 + 1/x)² when p = d/2.
pub fn rate_phi_eta(params: &RateParams, x: f64) -> f64 {
    let base = if params.eta == 0.5 { x * x } else { x.powf(1.0 / params.eta) };
    match params.regime {
        Regime::Critical => {
            let l = log_factor(x);
            base / (l * l)
        }
        _ => base,
    }
}

/// A with φ_η(x/a) ≥ A φ_η(x) whenever a ≥ x: a^{−1/η}, times
/// (log(2+1/a) / (log(a∨1) + log(2+1/a)))² when p = d/2.
pub fn phi_eta_scale_constant(a: f64, params: &RateParams) -> f64 {
    let base = a.powf(-1.0 / params.eta);
    match params.regime {
        Regime::Critical => {
            let l = log_factor(a);
            let r = l / (a.max(1.0).ln() + l);
            base * r * r
        }
        _ => base,
    }
}
