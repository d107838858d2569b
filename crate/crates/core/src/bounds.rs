//! Moment-condition certification (the K-series, γ/η case selection, the F
//! functionals) and every closed-form tail and mean envelope, plus a grid
//! fit of the generic constants (c, C) against observed tails.

use std::fmt;
use std::sync::Arc;

use crate::costs::{c_p, max_eta, rate_phi, GrowthPair, RadialCost, RateParams, Regime};
use crate::error::{invalid, Error, Result};
use crate::measures::{moment_h, moment_poly, Radial};
use crate::numeric::{sum_series, Series};

/// The nondecreasing positive function S of the moment condition.
#[derive(Clone)]
pub enum SFunction {
    /// r ↦ 1 ∨ r^q
    PolyClip { q: f64 },
    /// r ↦ e^{b r^p}
    ExpPow { b: f64, p: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SFunction::PolyClip { q } => write!(f, "PolyClip(q={q})"),
            SFunction::ExpPow { b, p } => write!(f, "ExpPow(b={b}, p={p})"),
            SFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl SFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            SFunction::PolyClip { q } => r.powf(*q).max(1.0),
            SFunction::ExpPow { b, p } => (b * r.powf(*p)).exp(),
            SFunction::Custom(s) => s(r),
        }
    }

    pub fn ln_eval(&self, r: f64) -> f64 {
        match self {
            SFunction::PolyClip { q } => (q * r.ln()).max(0.0),
            SFunction::ExpPow { b, p } => b * r.powf(*p),
            SFunction::Custom(s) => s(r).ln(),
        }
    }
}

/// A series value that may fail to converge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kappa {
    Finite(f64),
    Divergent,
}

impl Kappa {
    pub fn value(&self) -> Option<f64> {
        match self {
            Kappa::Finite(v) => Some(*v),
            Kappa::Divergent => None,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(v) => write!(f, "{v}"),
            Kappa::Divergent => write!(f, "DIVERGENT"),
        }
    }
}

/// Terms beyond this index would need radii past the f64 range.
const KAPPA_MAX_TERMS: usize = 1000;

/// K_g = g(2) + Σ_{k≥1} 2^{k c₀} g(2^{k+1}) / S(2^{k−1})^{1−η} and
/// K_G = G(1) + Σ_{k≥1} 2^{k c₀} G(2^k) / S(2^{k−1})^{1−η}, with terms
/// formed in the log domain. `tol` bounds the certified tail relative to the sum.
pub fn kappa_series(growth: &GrowthPair, s: &SFunction, c0: f64, eta: f64, tol: f64) -> Result<(Kappa, Kappa)> {
    if !(c0 > 0.0) {
        return Err(invalid("c0 must be positive"));
    }
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(invalid("eta must lie in (0, 1/2]"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let ln2 = std::f64::consts::LN_2;
    let weight = |k: usize| k as f64 * c0 * ln2 - (1.0 - eta) * s.ln_eval(((k - 1) as f64).exp2());
    let run = |head: f64, ln_top: &dyn Fn(usize) -> f64| -> Kappa {
        let series = sum_series(
            |i| {
                let k = i + 1;
                (ln_top(k) + weight(k)).exp()
            },
            tol,
            2,
            KAPPA_MAX_TERMS,
        );
        match series {
            Series::Converged(v) if head.is_finite() => Kappa::Finite(head + v),
            _ => Kappa::Divergent,
        }
    };
    let k_g = run(growth.g(2.0), &|k| growth.ln_g(((k + 1) as f64).exp2()));
    let k_big_g = run(growth.big_g(1.0), &|k| growth.ln_big_g((k as f64).exp2()));
    Ok((k_g, k_big_g))
}

/// Which branch of the η-selection table applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    /// power cost, p ≥ d/2, q > 2p
    TpSuperHighMoment,
    /// power cost, p ≥ d/2, q ∈ (p, 2p]
    TpSuperLowMoment,
    /// power cost, p < d/2, q > 2p
    TpSubHighMoment,
    /// power cost, p < d/2, q ∈ (dp/(d−p), 2p]
    TpSubMidMoment,
    /// power cost, p < d/2, q ∈ (p, dp/(d−p)]
    TpSubLowMoment,
    /// exponential cost p ≥ 1, p ≥ d/2, b > 2^{2p+1} a
    ExpSuperStrong,
    /// exponential cost p ≥ 1, p ≥ d/2, b ∈ (4^p a, 2^{2p+1} a]
    ExpSuperWeak,
    /// exponential cost p ≥ 1, p < d/2, b > 4^p d a/(d−p)
    ExpSubStrong,
    /// exponential cost p ≥ 1, p < d/2, b ∈ (4^p a, 4^p d a/(d−p)]
    ExpSubWeak,
    /// exponential cost p < 1, η at its cap and γ > 2
    ExpSmallPStrong,
    /// exponential cost p < 1, the middle band of b
    ExpSmallPMid,
    /// exponential cost p < 1, b ∈ (2^{p+1} a, ·], γ ≤ 2
    ExpSmallPWeak,
}

impl CaseId {
    pub fn label(&self) -> &'static str {
        match self {
            CaseId::TpSuperHighMoment => "tp-super-high-moment",
            CaseId::TpSuperLowMoment => "tp-super-low-moment",
            CaseId::TpSubHighMoment => "tp-sub-high-moment",
            CaseId::TpSubMidMoment => "tp-sub-mid-moment",
            CaseId::TpSubLowMoment => "tp-sub-low-moment",
            CaseId::ExpSuperStrong => "exp-super-strong",
            CaseId::ExpSuperWeak => "exp-super-weak",
            CaseId::ExpSubStrong => "exp-sub-strong",
            CaseId::ExpSubWeak => "exp-sub-weak",
            CaseId::ExpSmallPStrong => "exp-small-p-strong",
            CaseId::ExpSmallPMid => "exp-small-p-mid",
            CaseId::ExpSmallPWeak => "exp-small-p-weak",
        }
    }
}

/// γ, η, the ε actually subtracted from η (0 when η sits at its cap) and S.
#[derive(Clone, Debug)]
pub struct CaseSelection {
    pub case: CaseId,
    pub gamma: f64,
    pub eta: f64,
    pub eps: f64,
    pub s: SFunction,
}

/// The η-selection table for f(r) = r^p under M_q(μ) < ∞.
/// `eps` defaults to (1 − p/q)/10 in the branches that need it.
pub fn select_case_tp(d: usize, p: f64, q: f64, eps: Option<f64>) -> Result<CaseSelection> {
    if d == 0 || !(p > 0.0) {
        return Err(invalid("need d >= 1 and p > 0"));
    }
    if !(q > p) {
        return Err(invalid(format!("moment order q = {q} must exceed p = {p}")));
    }
    let room = 1.0 - p / q;
    let eps_val = eps.unwrap_or(room / 10.0);
    let reduced = || {
        if eps_val > 0.0 && eps_val < room {
            Ok(room - eps_val)
        } else {
            Err(invalid(format!("eps must lie in (0, {room})")))
        }
    };
    let df = d as f64;
    let super_side = matches!(Regime::detect(d, p), Regime::Super | Regime::Critical);
    let (case, eta, used_eps) = if super_side {
        if q > 2.0 * p {
            (CaseId::TpSuperHighMoment, 0.5, 0.0)
        } else {
            (CaseId::TpSuperLowMoment, reduced()?, eps_val)
        }
    } else if q > 2.0 * p {
        (CaseId::TpSubHighMoment, p / df, 0.0)
    } else if q > df * p / (df - p) {
        (CaseId::TpSubMidMoment, p / df, 0.0)
    } else {
        (CaseId::TpSubLowMoment, reduced()?, eps_val)
    };
    Ok(CaseSelection { case, gamma: q / p, eta, eps: used_eps, s: SFunction::PolyClip { q } })
}

/// The η-selection tables for f(r) = e^{a r^p} − 1 under ∫e^{b|y|^p} dμ < ∞.
/// `eps` defaults to a tenth of the available room.
pub fn select_case_exp(d: usize, p: f64, a: f64, b: f64, eps: Option<f64>) -> Result<CaseSelection> {
    if d == 0 || !(p > 0.0) || !(a > 0.0) {
        return Err(invalid("need d >= 1, p > 0 and a > 0"));
    }
    let df = d as f64;
    let cp = c_p(p);
    let threshold = (p + 1.0).exp2() * cp * a;
    if !(b > threshold) {
        return Err(invalid(format!("b = {b} must exceed 2^(p+1) c_p a = {threshold}")));
    }
    let gamma = b / (2.0 * cp * a);
    // largest η the K-series allow is 1 − 2^{p+1} c_p a / b
    let room = 1.0 - threshold / b;
    let eps_val = eps.unwrap_or(room / 10.0);
    let reduced = || {
        if eps_val > 0.0 && eps_val < room {
            Ok(room - eps_val)
        } else {
            Err(invalid(format!("eps must lie in (0, {room})")))
        }
    };
    let super_side = matches!(Regime::detect(d, p), Regime::Super | Regime::Critical);
    let cap = max_eta(d, p);
    let (case, eta, used_eps) = if p >= 1.0 {
        let four_p = (2.0 * p).exp2();
        if super_side {
            if b > 2.0 * four_p * a {
                (CaseId::ExpSuperStrong, 0.5, 0.0)
            } else {
                (CaseId::ExpSuperWeak, reduced()?, eps_val)
            }
        } else if b > four_p * df * a / (df - p) {
            (CaseId::ExpSubStrong, cap, 0.0)
        } else {
            (CaseId::ExpSubWeak, reduced()?, eps_val)
        }
    } else {
        let two_p1 = (p + 1.0).exp2();
        if super_side {
            if b > 2.0 * two_p1 * a {
                (CaseId::ExpSmallPStrong, 0.5, 0.0)
            } else if b > 4.0 * a {
                (CaseId::ExpSmallPMid, reduced()?, eps_val)
            } else {
                (CaseId::ExpSmallPWeak, reduced()?, eps_val)
            }
        } else {
            let t = two_p1 * df * a / (df - p);
            if t <= 4.0 * a {
                if b > 4.0 * a {
                    (CaseId::ExpSmallPStrong, cap, 0.0)
                } else if b > t {
                    (CaseId::ExpSmallPMid, cap, 0.0)
                } else {
                    (CaseId::ExpSmallPWeak, reduced()?, eps_val)
                }
            } else if b > t {
                (CaseId::ExpSmallPStrong, cap, 0.0)
            } else if b > 4.0 * a {
                (CaseId::ExpSmallPMid, reduced()?, eps_val)
            } else {
                (CaseId::ExpSmallPWeak, reduced()?, eps_val)
            }
        }
    };
    Ok(CaseSelection { case, gamma, eta, eps: used_eps, s: SFunction::ExpPow { b, p } })
}

/// Largest c₀ for which the power-cost K-series with S = 1 ∨ r^q converge
/// (exclusive), if any: q(1 − η) − p.
pub fn c0_bound_poly(p: f64, q: f64, eta: f64) -> Option<f64> {
    let m = q * (1.0 - eta) - p;
    (m > 0.0).then_some(m)
}

/// Default c₀: half the admissible margin for polynomial S, 1 for exponential S.
pub fn default_c0(cost: &RadialCost, s: &SFunction, eta: f64) -> f64 {
    match (cost, s) {
        (RadialCost::Power { p }, SFunction::PolyClip { q }) => match c0_bound_poly(*p, *q, eta) {
            Some(m) => 0.5 * m,
            // no admissible c₀; any positive value exhibits the divergence
            None => 1e-3,
        },
        _ => 1.0,
    }
}

/// Exponent on (1 ∨ M_p) in F: ½ − 1/γ for γ > 2, else ε.
fn f_exponent(gamma: f64, eps: f64) -> f64 {
    if gamma > 2.0 {
        0.5 - 1.0 / gamma
    } else {
        eps
    }
}

/// Default ε for γ ∈ (1, 2]: half of 1 − 1/γ.
pub fn default_theorem_eps(gamma: f64) -> f64 {
    0.5 * (1.0 - 1.0 / gamma)
}

/// F = (1 ∨ M₁(μ;S))^{1−η} + (1 ∨ M_p(μ))^{e} M_γ(μ;G)^{1/γ}, with e = ½ − 1/γ
/// for γ > 2 and e = ε otherwise. On an empirical measure this is F_N.
pub fn compute_f<M: Radial + ?Sized>(
    m: &M,
    growth: &GrowthPair,
    s: &SFunction,
    gamma: f64,
    eta: f64,
    eps: f64,
) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(invalid("gamma must exceed 1"));
    }
    if gamma <= 2.0 && !(eps > 0.0 && eps < 1.0 - 1.0 / gamma) {
        return Err(invalid(format!("eps must lie in (0, {})", 1.0 - 1.0 / gamma)));
    }
    let (m1s, mp, mg) = moments(m, growth, s, gamma)?;
    Ok(m1s.max(1.0).powf(1.0 - eta) + mp.max(1.0).powf(f_exponent(gamma, eps)) * mg.powf(1.0 / gamma))
}

/// M₁(μ;S), M_p(μ) and M_γ(μ;G), with exponential integrability decided
/// analytically before any quadrature.
fn moments<M: Radial + ?Sized>(m: &M, growth: &GrowthPair, s: &SFunction, gamma: f64) -> Result<(f64, f64, f64)> {
    let p = growth.p();
    if let SFunction::ExpPow { b, p: sp } = s {
        if !m.exp_moment_finite(*b, *sp) {
            return Err(Error::Divergent(format!("M_1(mu; S) with S = e^({b} r^{sp})")));
        }
    }
    if let Some(rate) = growth.exp_rate() {
        if !m.exp_moment_finite(gamma * rate, p) {
            return Err(Error::Divergent(format!("M_gamma(mu; G) with gamma = {gamma}")));
        }
    }
    let m1s = moment_h(m, &|r| s.eval(r), 1.0)?;
    let mp = moment_poly(m, p)?;
    let mg = moment_h(m, &|r| growth.big_g(r), gamma)?;
    Ok((m1s, mp, mg))
}

/// Everything needed to read off a deviation bound for one (cost, law) pair.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub selection: CaseSelection,
    pub regime: Regime,
    pub c0: f64,
    /// exclusive upper end of admissible c₀, when known in closed form
    pub c0_max: Option<f64>,
    pub k_g: Kappa,
    pub k_big_g: Kappa,
    pub m1_s: f64,
    pub m_p: f64,
    pub m_gamma_g: f64,
    /// ε used inside F (only when γ ≤ 2)
    pub f_eps: f64,
    pub f: f64,
}

/// Evaluates the moment condition for `m` under `cost` with the given case selection.
pub fn assess<M: Radial + ?Sized>(
    m: &M,
    d: usize,
    cost: &RadialCost,
    growth: &GrowthPair,
    selection: CaseSelection,
    c0: Option<f64>,
    f_eps: Option<f64>,
) -> Result<AssumptionReport> {
    let c0 = c0.unwrap_or_else(|| default_c0(cost, &selection.s, selection.eta));
    let c0_max = match (cost, &selection.s) {
        (RadialCost::Power { p }, SFunction::PolyClip { q }) => c0_bound_poly(*p, *q, selection.eta),
        _ => None,
    };
    let (k_g, k_big_g) = kappa_series(growth, &selection.s, c0, selection.eta, 1e-12)?;
    let gamma = selection.gamma;
    let f_eps = f_eps.unwrap_or_else(|| default_theorem_eps(gamma));
    let (m1_s, m_p, m_gamma_g) = moments(m, growth, &selection.s, gamma)?;
    let f = compute_f(m, growth, &selection.s, gamma, selection.eta, f_eps)?;
    Ok(AssumptionReport {
        regime: Regime::detect(d, cost.p()),
        selection,
        c0,
        c0_max,
        k_g,
        k_big_g,
        m1_s,
        m_p,
        m_gamma_g,
        f_eps: if gamma <= 2.0 { f_eps } else { 0.0 },
        f,
    })
}

/// The generic constants of an envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeParams {
    pub c: f64,
    pub big_c: f64,
    pub a0: f64,
    pub case_id: String,
}

impl EnvelopeParams {
    pub fn new(c: f64, big_c: f64, a0: f64, case_id: impl Into<String>) -> Result<Self> {
        if !(c > 0.0 && big_c > 0.0 && a0 > 0.0) {
            return Err(invalid("envelope constants must be positive"));
        }
        Ok(EnvelopeParams { c, big_c, a0, case_id: case_id.into() })
    }
}

fn ind(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// φ_η for any η > 0, in the regime of (d, p).
fn phi_eta_any(regime: Regime, eta: f64, x: f64) -> f64 {
    let base = x.powf(1.0 / eta);
    match regime {
        Regime::Critical => base / (2.0 + 1.0 / x).ln().powi(2),
        _ => base,
    }
}

/// C e^{−cNφ_η(x)} 1{x ≤ A₀} for γ > 2; for γ ∈ (1, 2] the second exponential
/// e^{−c N^{2(1−1/γ−ε)} x²} joins inside the bracket.
pub fn envelope_theorem(params: &EnvelopeParams, rate: &RateParams, gamma: f64, eps: f64, n: usize, x: f64) -> f64 {
    if x > params.a0 {
        return 0.0;
    }
    let nf = n as f64;
    let phi = phi_eta_any(rate.regime, rate.eta, x);
    let mut bracket = (-params.c * nf * phi).exp();
    if gamma <= 2.0 {
        bracket += (-params.c * nf.powf(2.0 * (1.0 - 1.0 / gamma - eps)) * x * x).exp();
    }
    params.big_c * bracket
}

/// Deviation envelopes for an empirical mean of i.i.d. variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanDevCase {
    /// exponential moment of order β ≥ 1
    ExpMomentHeavy { beta: f64 },
    /// exponential moment of order β ∈ (0, 1)
    ExpMomentLight { beta: f64 },
    /// polynomial moment of order t > 2
    MomentHigh { t: f64 },
    /// polynomial moment of order t ∈ [1, 2]
    MomentLow { t: f64 },
}

impl MeanDevCase {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MeanDevCase::ExpMomentHeavy { beta } => beta >= 1.0,
            MeanDevCase::ExpMomentLight { beta } => beta > 0.0 && beta < 1.0,
            MeanDevCase::MomentHigh { t } => t > 2.0,
            MeanDevCase::MomentLow { t } => (1.0..=2.0).contains(&t),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("shape parameter out of range for {self:?}")))
        }
    }
}

/// (a) C(e^{−cNx²}1{x≤1} + e^{−cNx^β}1{x>1}); (b) C(e^{−cNx²} + e^{−c(Nx)^β});
/// (c) e^{−cNx²} + CN(Nx)^{−t}; (d) CN(Nx)^{−t}.
pub fn envelope_meandev(case: MeanDevCase, params: &EnvelopeParams, n: usize, x: f64) -> Result<f64> {
    case.validate()?;
    let (c, big_c, nf) = (params.c, params.big_c, n as f64);
    Ok(match case {
        MeanDevCase::ExpMomentHeavy { beta } => {
            big_c * ((-c * nf * x * x).exp() * ind(x <= 1.0) + (-c * nf * x.powf(beta)).exp() * ind(x > 1.0))
        }
        MeanDevCase::ExpMomentLight { beta } => {
            big_c * ((-c * nf * x * x).exp() + (-c * (nf * x).powf(beta)).exp())
        }
        MeanDevCase::MomentHigh { t } => (-c * nf * x * x).exp() + big_c * nf * (nf * x).powf(-t),
        MeanDevCase::MomentLow { t } => big_c * nf * (nf * x).powf(-t),
    })
}

/// Closed-form bounds for specific costs and moment assumptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleCase {
    /// compact support: C e^{−cNφ(x)} 1{x ≤ A₀}
    Compact,
    /// r^p cost, M_q < ∞, q > 2p
    TpMomentHigh,
    /// r^p cost, p > d/2, q ∈ (p, 2p]
    TpMomentLowSuper,
    /// r^p cost, p = d/2, q ∈ (p, 2p]
    TpMomentLowCritical,
    /// r^p cost, p < d/2, q ∈ (dp/(d−p), 2p]
    TpMomentMidSub,
    /// r^p cost, p < d/2, q ∈ (p, dp/(d−p)]
    TpMomentLowSub,
    /// r^p cost, ∫e^{a|y|^β} < ∞ with β ≥ p
    TpExpMomentFast,
    /// r^p cost, ∫e^{a|y|^β} < ∞ with β < p
    TpExpMomentSlow,
    /// e^{ar^p} − 1 cost, p ≥ 1, strong moment band
    ExpCostStrong,
    /// e^{ar^p} − 1 cost, p ≥ 1, weak moment band
    ExpCostWeak,
    /// e^{ar^p} − 1 cost, p < 1, strong band
    ExpCostSmallPStrong,
    /// e^{ar^p} − 1 cost, p < 1, middle band
    ExpCostSmallPMid,
    /// e^{ar^p} − 1 cost, p < 1, weak band
    ExpCostSmallPWeak,
    /// E[T_p]: C (rate + N^{−(q−p−ε)/q})
    MeanTp,
    /// E[E_{p,a}], p ≥ 1, strong band: C·rate
    MeanExpStrong,
    /// E[E_{p,a}], p ≥ 1, weak band: C N^{−(1−4^p a/b−ε)}
    MeanExpWeak,
    /// E[E_{p,a}], p < 1, strong band: C·rate
    MeanExpSmallPStrong,
    /// E[E_{p,a}], p < 1, weak band: C N^{−(1−2^{p+1}a/b−ε)}
    MeanExpSmallPWeak,
}

impl ExampleCase {
    pub const ALL: [ExampleCase; 18] = [
        ExampleCase::Compact,
        ExampleCase::TpMomentHigh,
        ExampleCase::TpMomentLowSuper,
        ExampleCase::TpMomentLowCritical,
        ExampleCase::TpMomentMidSub,
        ExampleCase::TpMomentLowSub,
        ExampleCase::TpExpMomentFast,
        ExampleCase::TpExpMomentSlow,
        ExampleCase::ExpCostStrong,
        ExampleCase::ExpCostWeak,
        ExampleCase::ExpCostSmallPStrong,
        ExampleCase::ExpCostSmallPMid,
        ExampleCase::ExpCostSmallPWeak,
        ExampleCase::MeanTp,
        ExampleCase::MeanExpStrong,
        ExampleCase::MeanExpWeak,
        ExampleCase::MeanExpSmallPStrong,
        ExampleCase::MeanExpSmallPWeak,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ExampleCase::Compact => "compact",
            ExampleCase::TpMomentHigh => "tp-moment-high",
            ExampleCase::TpMomentLowSuper => "tp-moment-low-super",
            ExampleCase::TpMomentLowCritical => "tp-moment-low-critical",
            ExampleCase::TpMomentMidSub => "tp-moment-mid-sub",
            ExampleCase::TpMomentLowSub => "tp-moment-low-sub",
            ExampleCase::TpExpMomentFast => "tp-expmoment-fast",
            ExampleCase::TpExpMomentSlow => "tp-expmoment-slow",
            ExampleCase::ExpCostStrong => "exp-cost-strong",
            ExampleCase::ExpCostWeak => "exp-cost-weak",
            ExampleCase::ExpCostSmallPStrong => "exp-cost-small-p-strong",
            ExampleCase::ExpCostSmallPMid => "exp-cost-small-p-mid",
            ExampleCase::ExpCostSmallPWeak => "exp-cost-small-p-weak",
            ExampleCase::MeanTp => "mean-tp",
            ExampleCase::MeanExpStrong => "mean-exp-strong",
            ExampleCase::MeanExpWeak => "mean-exp-weak",
            ExampleCase::MeanExpSmallPStrong => "mean-exp-small-p-strong",
            ExampleCase::MeanExpSmallPWeak => "mean-exp-small-p-weak",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s).ok_or_else(|| Error::UnknownCase(s.to_string()))
    }

    /// Whether the bound is on the mean rather than on a tail probability.
    pub fn is_mean_rate(&self) -> bool {
        matches!(
            self,
            ExampleCase::MeanTp
                | ExampleCase::MeanExpStrong
                | ExampleCase::MeanExpWeak
                | ExampleCase::MeanExpSmallPStrong
                | ExampleCase::MeanExpSmallPWeak
        )
    }
}

impl fmt::Display for ExampleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parameters an example bound may need; unused ones are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleAux {
    pub d: usize,
    pub p: f64,
    /// polynomial moment order
    pub q: f64,
    /// exponential-moment order
    pub beta: f64,
    /// exponential cost scale
    pub a: f64,
    /// exponential moment scale
    pub b: f64,
    pub eps: f64,
}

impl Default for ExampleAux {
    fn default() -> Self {
        ExampleAux { d: 1, p: 1.0, q: 0.0, beta: 0.0, a: 0.0, b: 0.0, eps: 0.0 }
    }
}

/// N^{−1/2}, log(N+1) N^{−1/2} or N^{−p/d} by regime.
pub fn mean_rate(d: usize, p: f64, n: usize) -> f64 {
    let nf = n as f64;
    match Regime::detect(d, p) {
        Regime::Super => nf.powf(-0.5),
        Regime::Critical => (nf + 1.0).ln() * nf.powf(-0.5),
        Regime::Sub => nf.powf(-p / d as f64),
    }
}

/// Evaluates the displayed bound of an example case. For tail cases `x` is the
/// deviation level; mean-rate cases ignore it.
pub fn envelope_example(case: ExampleCase, params: &EnvelopeParams, aux: &ExampleAux, n: usize, x: f64) -> Result<f64> {
    let ExampleAux { d, p, q, beta, a, b, eps } = *aux;
    if d == 0 || !(p > 0.0) {
        return Err(invalid("need d >= 1 and p > 0"));
    }
    let (c, big_c, nf) = (params.c, params.big_c, n as f64);
    let regime = Regime::detect(d, p);
    let phi = rate_phi(d, p, x);
    let small = ind(x <= 1.0);
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(invalid(what.to_string())) };
    let poly_tail = |t: f64| nf * (nf * x).powf(-t);
    let eps_room = |room: f64| need(eps > 0.0 && eps < room, "eps outside its admissible range");
    Ok(match case {
        ExampleCase::Compact => big_c * (-c * nf * phi).exp() * ind(x <= params.a0),
        ExampleCase::TpMomentHigh => {
            need(q > 2.0 * p, "requires q > 2p")?;
            big_c * ((-c * nf * phi).exp() * small + poly_tail(q / p))
        }
        ExampleCase::TpMomentLowSuper | ExampleCase::TpMomentLowSub => {
            need(q > p && q <= 2.0 * p, "requires q in (p, 2p]")?;
            eps_room(1.0 - p / q)?;
            let e = 1.0 - p / q - eps;
            big_c * ((-c * nf.powf(2.0 * e) * x * x).exp() * small + poly_tail(q / p))
        }
        ExampleCase::TpMomentLowCritical => {
            need(q > p && q <= 2.0 * p, "requires q in (p, 2p]")?;
            eps_room(1.0 - p / q)?;
            let e = 1.0 - p / q - eps;
            let first = (-c * nf * x.powf(1.0 / e) / (2.0 + 1.0 / x).ln().powi(2)).exp();
            let second = (-c * nf.powf(2.0 * e) * x * x).exp();
            big_c * ((first + second) * small + poly_tail(q / p))
        }
        ExampleCase::TpMomentMidSub => {
            need(q <= 2.0 * p && q > p, "requires q in (dp/(d-p), 2p]")?;
            eps_room(1.0 - p / q)?;
            let e = 1.0 - p / q - eps;
            let first = (-c * nf * x.powf(d as f64 / p)).exp();
            let second = (-c * nf.powf(2.0 * e) * x * x).exp();
            big_c * ((first + second) * small + poly_tail(q / p))
        }
        ExampleCase::TpExpMomentFast => {
            need(beta >= p, "requires beta >= p")?;
            big_c * ((-c * nf * phi).exp() * small + (-c * nf * x.powf(beta / p)).exp() * ind(x >= 1.0))
        }
        ExampleCase::TpExpMomentSlow => {
            need(beta > 0.0 && beta < p, "requires beta in (0, p)")?;
            big_c * ((-c * nf * phi).exp() * small + (-c * (nf * x).powf(beta / p)).exp())
        }
        ExampleCase::ExpCostStrong | ExampleCase::ExpCostWeak => {
            need(p >= 1.0 && a > 0.0 && b > (2.0 * p).exp2() * a, "requires p >= 1 and b > 4^p a")?;
            let head = if case == ExampleCase::ExpCostStrong {
                (-c * nf * phi).exp()
            } else {
                let room = 1.0 - (2.0 * p).exp2() * a / b;
                eps_room(room)?;
                (-c * nf * phi_eta_any(regime, room - eps, x)).exp()
            };
            big_c * (head * small + poly_tail(b / (p.exp2() * a)))
        }
        ExampleCase::ExpCostSmallPStrong | ExampleCase::ExpCostSmallPMid | ExampleCase::ExpCostSmallPWeak => {
            need(p < 1.0 && a > 0.0 && b > (p + 1.0).exp2() * a, "requires p < 1 and b > 2^(p+1) a")?;
            let room = 1.0 - (p + 1.0).exp2() * a / b;
            let reduced = |r: f64| (-c * nf * phi_eta_any(regime, r, x)).exp();
            let gaussian_part = || (-c * nf.powf(2.0 * (1.0 - 2.0 * a / b - eps)) * x * x).exp();
            let head = match case {
                ExampleCase::ExpCostSmallPStrong => (-c * nf * phi).exp(),
                ExampleCase::ExpCostSmallPMid => {
                    eps_room(room)?;
                    let df = d as f64;
                    let narrow = regime == Regime::Sub && p.exp2() * df / (df - p) <= 2.0;
                    if narrow {
                        (-c * nf * phi).exp() + gaussian_part()
                    } else {
                        reduced(room - eps)
                    }
                }
                _ => {
                    eps_room(room)?;
                    reduced(room - eps) + gaussian_part()
                }
            };
            big_c * (head * small + poly_tail(b / (2.0 * a)))
        }
        ExampleCase::MeanTp => {
            need(q > p && eps > 0.0 && eps < q - p, "requires q > p and eps in (0, q - p)")?;
            big_c * (mean_rate(d, p, n) + nf.powf(-(q - p - eps) / q))
        }
        ExampleCase::MeanExpStrong | ExampleCase::MeanExpSmallPStrong => big_c * mean_rate(d, p, n),
        ExampleCase::MeanExpWeak => {
            let room = 1.0 - (2.0 * p).exp2() * a / b;
            eps_room(room)?;
            big_c * nf.powf(-(room - eps))
        }
        ExampleCase::MeanExpSmallPWeak => {
            let room = 1.0 - (p + 1.0).exp2() * a / b;
            eps_room(room)?;
            big_c * nf.powf(-(room - eps))
        }
    })
}

/// An envelope shape with free constants (c, C), for fitting.
#[derive(Clone, Debug)]
pub enum EnvelopeFamily {
    Theorem { rate: RateParams, gamma: f64, eps: f64, a0: f64 },
    MeanDev(MeanDevCase),
    Example { case: ExampleCase, aux: ExampleAux, a0: f64 },
}

impl EnvelopeFamily {
    pub fn label(&self) -> String {
        match self {
            EnvelopeFamily::Theorem { gamma, .. } if *gamma > 2.0 => "theorem-gamma-above-2".into(),
            EnvelopeFamily::Theorem { .. } => "theorem-gamma-at-most-2".into(),
            EnvelopeFamily::MeanDev(case) => match case {
                MeanDevCase::ExpMomentHeavy { .. } => "meandev-exp-heavy".into(),
                MeanDevCase::ExpMomentLight { .. } => "meandev-exp-light".into(),
                MeanDevCase::MomentHigh { .. } => "meandev-moment-high".into(),
                MeanDevCase::MomentLow { .. } => "meandev-moment-low".into(),
            },
            EnvelopeFamily::Example { case, .. } => case.label().into(),
        }
    }

    fn a0(&self) -> f64 {
        match self {
            EnvelopeFamily::Theorem { a0, .. } | EnvelopeFamily::Example { a0, .. } => *a0,
            EnvelopeFamily::MeanDev(_) => 1.0,
        }
    }

    pub fn params(&self, c: f64, big_c: f64) -> EnvelopeParams {
        EnvelopeParams { c, big_c, a0: self.a0(), case_id: self.label() }
    }

    pub fn eval(&self, params: &EnvelopeParams, n: usize, x: f64) -> Result<f64> {
        match self {
            EnvelopeFamily::Theorem { rate, gamma, eps, .. } => Ok(envelope_theorem(params, rate, *gamma, *eps, n, x)),
            EnvelopeFamily::MeanDev(case) => envelope_meandev(*case, params, n, x),
            EnvelopeFamily::Example { case, aux, .. } => envelope_example(*case, params, aux, n, x),
        }
    }
}

/// One observed tail probability; `ci_hi` is its Wilson upper bound when known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailObservation {
    pub n: usize,
    pub x: f64,
    pub phat: f64,
    pub ci_hi: Option<f64>,
}

/// Log grid from 10^lo to 10^hi, 25 points per decade.
fn log_grid(lo: i32, hi: i32) -> Vec<f64> {
    let per = 25;
    (0..=((hi - lo) * per)).map(|i| 10f64.powf(lo as f64 + i as f64 / per as f64)).collect()
}

/// Smallest C, then largest c, on log grids c ∈ [1e−4, 1e2] and C ∈ [1e−2, 1e4]
/// (25 points per decade) such that the envelope dominates every row's
/// Wilson upper bound (or p̂ when no interval is given).
pub fn fit_constants(rows: &[TailObservation], family: &EnvelopeFamily) -> Result<EnvelopeParams> {
    if rows.is_empty() {
        return Err(invalid("no tail observations to fit"));
    }
    if rows.iter().any(|r| !(0.0..=1.0).contains(&r.phat)) {
        return Err(invalid("tail probabilities must lie in [0, 1]"));
    }
    let cs = log_grid(-4, 2);
    let big_cs = log_grid(-2, 4);
    let dominates = |c: f64, big_c: f64| -> Result<bool> {
        let params = family.params(c, big_c);
        for r in rows {
            let target = r.ci_hi.unwrap_or(r.phat);
            if family.eval(&params, r.n, r.x)? < target {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut best: Option<(usize, f64)> = None;
    for &c in &cs {
        // envelopes are nondecreasing in C: bisect for the first dominating grid index
        if !dominates(c, big_cs[big_cs.len() - 1])? {
            continue;
        }
        let mut hi = big_cs.len() - 1;
        if dominates(c, big_cs[0])? {
            hi = 0;
        } else {
            let mut lo = 0usize;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if dominates(c, big_cs[mid])? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let better = match best {
            None => true,
            Some((bi, bc)) => hi < bi || (hi == bi && c > bc),
        };
        if better {
            best = Some((hi, c));
        }
    }
    match best {
        Some((i, c)) => Ok(family.params(c, big_cs[i])),
        None => Err(Error::Infeasible),
    }
}
