//! Quadrature and series summation shared by the moment and transport code.

const MAX_DEPTH: u32 = 30;

/// Abscissae of the 15-point Kronrod rule on [0, 1]; odd entries are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Gauss–Kronrod 7/15 on [a, b]: (Kronrod estimate, Gauss estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, gauss * half)
}

/// Adaptive Gauss–Kronrod on a finite interval: bisect until the 7- and
/// 15-point estimates agree to the local share of `abs_tol`.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    refine(&f, a, b, abs_tol.max(0.0), 0)
}

fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, g) = gk15(f, a, b);
    let err = (k - g).abs();
    if err <= tol || err <= 1e-13 * k.abs() || depth >= MAX_DEPTH || !k.is_finite() {
        return k;
    }
    let m = 0.5 * (a + b);
    refine(f, a, m, 0.5 * tol, depth + 1) + refine(f, m, b, 0.5 * tol, depth + 1)
}

/// ∫_a^∞ f, through x = a + scale·t/(1−t).
pub(crate) fn integrate_upper(f: impl Fn(f64) -> f64, a: f64, scale: f64, abs_tol: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + scale * t / s);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (s * s)
            }
        },
        0.0,
        1.0,
        abs_tol,
    )
}

/// ∫_{-∞}^b f.
pub(crate) fn integrate_lower(f: impl Fn(f64) -> f64, b: f64, scale: f64, abs_tol: f64) -> f64 {
    integrate_upper(|y| f(-y), -b, scale, abs_tol)
}

/// Number of consecutive non-decreasing terms after which a series is declared divergent.
pub(crate) const DIVERGENCE_RUN: usize = 50;
/// Largest observed term ratio for which the geometric tail bound is trusted.
pub(crate) const TAIL_RATIO_MAX: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Series {
    Converged(f64),
    Divergent,
}

/// Sums nonnegative terms `term(0), term(1), ...`.
///
/// Stops once the observed ratio `r = t_k / t_{k-1}` is below
/// [`TAIL_RATIO_MAX`] and `t_k·r/(1−r)` is within `rel_tol` of the running sum
/// (or two consecutive terms underflow to zero). Declares divergence on a
/// non-finite term, on [`DIVERGENCE_RUN`] consecutive non-decreasing terms,
/// or when `max_terms` is exhausted without certification.
pub(crate) fn sum_series(
    mut term: impl FnMut(usize) -> f64,
    rel_tol: f64,
    min_terms: usize,
    max_terms: usize,
) -> Series {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut prev_ratio = f64::NAN;
    let mut rising = 0usize;
    let mut zeros = 0usize;
    for k in 0..max_terms {
        let t = term(k);
        if !t.is_finite() {
            return Series::Divergent;
        }
        sum += t;
        if t == 0.0 {
            zeros += 1;
        } else {
            zeros = 0;
        }
        if k > 0 && prev > 0.0 && t >= prev {
            rising += 1;
            if rising >= DIVERGENCE_RUN {
                return Series::Divergent;
            }
        } else {
            rising = 0;
        }
        if k + 1 >= min_terms {
            if zeros >= 2 {
                return Series::Converged(sum);
            }
            if prev > 0.0 && t > 0.0 {
                let r = t / prev;
                if r < TAIL_RATIO_MAX && t * r / (1.0 - r) <= rel_tol * sum.abs() {
                    return Series::Converged(sum);
                }
            }
        }
        if prev > 0.0 && t > 0.0 {
            let r = t / prev;
            // Out of terms on an exactly geometric tail: add the tail in closed form.
            if k + 1 == max_terms && r < TAIL_RATIO_MAX && (r - prev_ratio).abs() <= 1e-9 * r {
                return Series::Converged(sum + t * r / (1.0 - r));
            }
            prev_ratio = r;
        }
        prev = t;
    }
    Series::Divergent
}
