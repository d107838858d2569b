use otconc::ot::{brute_force_ot, exact_ot, monotone_cost_1d};
use otconc::partition::dilate;
use otconc::{DiscreteMeasure, RadialCost};
use proptest::prelude::*;

fn cost_strategy() -> impl Strategy<Value = RadialCost> {
    prop_oneof![
        Just(RadialCost::power(1.0).unwrap()),
        Just(RadialCost::power(2.0).unwrap()),
        Just(RadialCost::power(3.0).unwrap()),
        Just(RadialCost::exponential(1.0, 0.1).unwrap()),
    ]
}

fn uniform(dim: usize, coords: Vec<f64>) -> DiscreteMeasure {
    let n = coords.len() / dim;
    DiscreteMeasure::from_flat(dim, coords, vec![1.0 / n as f64; n]).unwrap()
}

fn weighted_1d(xs: Vec<f64>, raw: Vec<f64>) -> DiscreteMeasure {
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::from_flat(1, xs, raw.into_iter().map(|w| w / total).collect()).unwrap()
}

fn instance(max: usize) -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=3, 1usize..=max).prop_flat_map(|(d, n)| {
        let pts = prop::collection::vec(-5.0f64..5.0, n * d);
        (Just(d), pts.clone(), pts)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_permutations((d, x, y) in instance(6), cost in cost_strategy()) {
        let mu = uniform(d, x);
        let nu = uniform(d, y);
        prop_assume!(mu.len() == nu.len() && mu.len() * d == nu.len() * d);
        let exact = exact_ot(&mu, &nu, &cost).unwrap();
        let brute = brute_force_ot(&mu, &nu, &cost).unwrap();
        prop_assert!((exact.cost - brute.cost).abs() <= 1e-9, "{} vs {}", exact.cost, brute.cost);
        prop_assert!(exact.coupling.marginal_error(&mu, &nu) <= 1e-10);
    }

    #[test]
    fn monotone_is_optimal_on_the_line(
        x in prop::collection::vec(-5.0f64..5.0, 1..25),
        wx in prop::collection::vec(0.05f64..1.0, 25),
        y in prop::collection::vec(-5.0f64..5.0, 1..25),
        wy in prop::collection::vec(0.05f64..1.0, 25),
        cost in cost_strategy(),
    ) {
        let mu = weighted_1d(x.clone(), wx[..x.len()].to_vec());
        let nu = weighted_1d(y.clone(), wy[..y.len()].to_vec());
        let mono = monotone_cost_1d(&mu, &nu, &cost).unwrap();
        let exact = exact_ot(&mu, &nu, &cost).unwrap();
        prop_assert!((mono.cost - exact.cost).abs() <= 1e-9, "{} vs {}", mono.cost, exact.cost);
        prop_assert!(mono.coupling.marginal_error(&mu, &nu) <= 1e-10);
        prop_assert!(exact.coupling.marginal_error(&mu, &nu) <= 1e-10);
        prop_assert!((exact.coupling.cost(&mu, &nu, &cost) - exact.cost).abs() <= 1e-10);
    }

    #[test]
    fn self_transport_is_free((d, x, _y) in instance(12), cost in cost_strategy()) {
        let mu = uniform(d, x);
        prop_assert_eq!(exact_ot(&mu, &mu, &cost).unwrap().cost, 0.0);
    }

    #[test]
    fn dilation_scales_power_costs((d, x, y) in instance(8), k in 0u32..4, p in 1u32..=3) {
        let mu = uniform(d, x);
        let nu = uniform(d, y);
        let cost = RadialCost::power(p as f64).unwrap();
        let full = exact_ot(&mu, &nu, &cost).unwrap().cost;
        let small = exact_ot(&dilate(&mu, k), &dilate(&nu, k), &cost).unwrap().cost;
        let factor = (-(k as f64) * p as f64).exp2();
        prop_assert!((small - factor * full).abs() <= 1e-9 * full.max(1.0));
    }
}

#[test]
fn larger_weighted_instances_agree_with_monotone() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let cost = RadialCost::power(2.0).unwrap();
    for _ in 0..5 {
        let n = 150;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n + 37).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mu = DiscreteMeasure::empirical_1d(&x).unwrap();
        let nu = DiscreteMeasure::empirical_1d(&y).unwrap();
        let mono = monotone_cost_1d(&mu, &nu, &cost).unwrap().cost;
        let exact = exact_ot(&mu, &nu, &cost).unwrap().cost;
        assert!((mono - exact).abs() <= 1e-9, "{mono} vs {exact}");
    }
}
