use otconc::partition::{coupling_upper_bound, selfnorm_stat, Direction, SelfNormConfig};
use otconc::stats::{wilson, Z95};
use otconc::{default_growth, DiscreteMeasure, RadialCost, Seed};
use proptest::prelude::*;
use rand::Rng;

fn costs() -> impl Strategy<Value = RadialCost> {
    prop_oneof![
        Just(RadialCost::power(1.0).unwrap()),
        Just(RadialCost::power(2.0).unwrap()),
        Just(RadialCost::exponential(1.0, 0.1).unwrap()),
    ]
}

/// Points spread over annuli 0 to 4 in dimension d.
fn spread(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-12.0f64..12.0, d..=8 * d).prop_map(move |mut v| {
        v.truncate(v.len() / d * d);
        v
    })
}

fn measure(d: usize, coords: Vec<f64>, raw: &[f64]) -> DiscreteMeasure {
    let n = coords.len() / d;
    let total: f64 = raw[..n].iter().sum();
    DiscreteMeasure::from_flat(d, coords, raw[..n].iter().map(|w| w / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn annular_coupling_bounds_the_optimum(
        (d, x, y) in (1usize..=2).prop_flat_map(|d| (Just(d), spread(d), spread(d))),
        wx in prop::collection::vec(0.1f64..1.0, 8),
        wy in prop::collection::vec(0.1f64..1.0, 8),
        cost in costs(),
    ) {
        let mu = measure(d, x, &wx);
        let nu = measure(d, y, &wy);
        let growth = default_growth(&cost).unwrap();
        let r = coupling_upper_bound(&mu, &nu, &cost, &growth).unwrap();
        prop_assert!(r.total >= r.exact - 1e-9, "{} < {}", r.total, r.exact);
        prop_assert!(r.realized >= r.exact - 1e-9);
        prop_assert!(r.total >= r.realized - 1e-9);
        let four = r.term_i + r.term_ii + 2.0 * r.term_iii + r.term_iv;
        prop_assert!((four - r.total).abs() <= 1e-9 * r.total.max(1.0));
    }

    #[test]
    fn single_annulus_is_tight(
        (d, x, y) in (1usize..=2).prop_flat_map(|d| {
            let pts = prop::collection::vec(-0.7f64..0.7, d..=6 * d);
            (Just(d), pts.clone(), pts)
        }),
        wx in prop::collection::vec(0.1f64..1.0, 6),
        wy in prop::collection::vec(0.1f64..1.0, 6),
        cost in costs(),
    ) {
        let trim = |mut v: Vec<f64>| { v.truncate(v.len() / d * d); v };
        let mu = measure(d, trim(x), &wx);
        let nu = measure(d, trim(y), &wy);
        let r = coupling_upper_bound(&mu, &nu, &cost, &default_growth(&cost).unwrap()).unwrap();
        prop_assert!((r.total - r.exact).abs() <= 1e-9);
    }

    #[test]
    fn selfnorm_stays_in_unit_interval(
        raw in prop::collection::vec(0.0f64..1.0, 1..12),
        counts in prop::collection::vec(0u32..20, 1..12),
        alpha in 0.01f64..0.99,
        delta in 0.1f64..3.0,
        flip in any::<bool>(),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let n: u32 = counts.iter().sum();
        prop_assume!(n > 0);
        let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let dir = if flip { Direction::EmpiricalMinusTrue } else { Direction::TrueMinusEmpirical };
        let s = selfnorm_stat(&masses, &emp, &SelfNormConfig::new(delta, alpha, dir).unwrap());
        prop_assert!((0.0..=1.0).contains(&s), "{s}");
    }
}

/// P(sup_k Y_k > x) ≤ (e ∨ A/(1 − 1/a)) e^{−N h(x)} when each Y_k has tail
/// A e^{−(1 + k ln a) N h(x)}; here h(x) = x and the Y_k are shifted exponentials.
#[test]
fn sup_of_geometrically_thinning_tails() {
    let trials = 20_000u64;
    for &(big_a, a) in &[(2.0f64, 4.0f64), (8.0, 2.0)] {
        for &n in &[1usize, 5, 20] {
            let seed = Seed::new(99).substream(n as u64 ^ (big_a as u64) << 8);
            let sups: Vec<f64> = (0..trials)
                .map(|t| {
                    let mut rng = seed.rng(t);
                    (0..64)
                        .map(|k| {
                            let rate = (1.0 + k as f64 * a.ln()) * n as f64;
                            let u: f64 = rng.random();
                            // P(Y > x) = min(1, A e^{−rate·x})
                            (big_a / (1.0 - u)).ln() / rate
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            for &x in &[0.05, 0.2, 0.5, 1.0, 2.0] {
                let hits = sups.iter().filter(|&&s| s > x).count() as u64;
                let bound = (std::f64::consts::E.max(big_a / (1.0 - 1.0 / a)) * (-(n as f64) * x).exp()).min(1.0);
                let phat = hits as f64 / trials as f64;
                let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
                assert!(phat <= bound + 3.0 * sigma, "A={big_a} a={a} N={n} x={x}: {phat} > {bound}");
                assert!(wilson(hits, trials, Z95).0 <= bound);
            }
        }
    }
}
