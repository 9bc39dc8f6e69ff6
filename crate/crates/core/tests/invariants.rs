use polymer_core::lattice::LatticeBox;
use polymer_core::{
    first_passage, free_energy, last_passage, log_partition, point_to_point_free_energy, ConstraintMask, Environment,
    PolymerParams, TruncationSpec, Vertex, WeightDistribution,
};
use proptest::prelude::*;

fn dist_strategy() -> impl Strategy<Value = WeightDistribution> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|p| WeightDistribution::Bernoulli { p, low: 0.0, high: 2.0 }),
        Just(WeightDistribution::Uniform { lo: 0.0, hi: 1.0 }),
        (0.5f64..2.0).prop_map(|rate| WeightDistribution::Exponential { rate }),
        (0.5f64..3.0).prop_map(|shape| WeightDistribution::Gamma { shape, scale: 1.0 }),
    ]
}

fn setup() -> impl Strategy<Value = (usize, WeightDistribution, u64, f64)> {
    (2usize..=3, dist_strategy(), any::<u64>(), 0.2f64..5.0)
}

fn corner_for(d: usize) -> Vertex {
    Vertex(vec![if d == 2 { 10 } else { 5 }; d])
}

fn points(corner: &Vertex) -> Vec<Vertex> {
    let b = LatticeBox::new(corner.clone()).unwrap();
    (0..b.num_vertices()).map(|i| b.vertex_at(i)).collect()
}

fn field_values(env: &Environment, beta: f64) -> Vec<f64> {
    let params = PolymerParams::new(beta).unwrap();
    let f = log_partition(env, params, &Vertex::origin(env.dim()), &ConstraintMask::Full).unwrap();
    points(env.lattice().corner()).iter().map(|x| free_energy(&f, x).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn free_energy_is_nonnegative((d, dist, seed, beta) in setup()) {
        let env = Environment::generate_on(&dist, &corner_for(d), seed).unwrap();
        for f in field_values(&env, beta) {
            prop_assert!(f >= 0.0, "F = {}", f);
        }
    }

    #[test]
    fn free_energy_is_subadditive((d, dist, seed, beta) in setup(), pick in any::<prop::sample::Index>()) {
        let corner = corner_for(d);
        let env = Environment::generate_on(&dist, &corner, seed).unwrap();
        let params = PolymerParams::new(beta).unwrap();
        let all = points(&corner);
        let mid = pick.get(&all);
        let origin = Vertex::origin(d);
        let whole = point_to_point_free_energy(&env, params, &origin, &corner).unwrap();
        let first = point_to_point_free_energy(&env, params, &origin, mid).unwrap();
        let second = point_to_point_free_energy(&env, params, mid, &corner).unwrap();
        prop_assert!(whole <= first + second + 1e-9 * whole.abs().max(1.0));
    }

    #[test]
    fn shift_adds_c_per_step((d, dist, seed, beta) in setup(), c in 0.0f64..3.0) {
        let corner = corner_for(d);
        let env = Environment::generate_on(&dist, &corner, seed).unwrap();
        let base = field_values(&env, beta);
        let shifted = field_values(&env.shift(c).unwrap(), beta);
        for ((x, a), b) in points(&corner).iter().zip(base).zip(shifted) {
            let expected = a + c * x.l1() as f64;
            prop_assert!((b - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn truncation_lowers_free_energy((d, dist, seed, beta) in setup(), level in 0.05f64..2.0) {
        let env = Environment::generate_on(&dist, &corner_for(d), seed).unwrap();
        let base = field_values(&env, beta);
        let cut = field_values(&env.truncate(TruncationSpec::new(level).unwrap()), beta);
        for (a, b) in base.iter().zip(cut) {
            prop_assert!(b <= a + 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn low_temperature_bracket((d, dist, seed, _beta) in setup(), beta in 1.0f64..200.0) {
        let corner = corner_for(d);
        let env = Environment::generate_on(&dist, &corner, seed).unwrap();
        let fpp = first_passage(&env, &Vertex::origin(d), &corner).unwrap();
        for (x, f) in points(&corner).iter().zip(field_values(&env, beta)) {
            let lo = fpp.value(x).unwrap();
            let hi = lo + x.l1() as f64 * (d as f64).ln() / beta;
            let slack = 1e-9 * hi.abs().max(1.0);
            prop_assert!(f >= lo - slack && f <= hi + slack, "{} not in [{}, {}]", f, lo, hi);
        }
    }

    #[test]
    fn permutation_is_exact((d, dist, seed, beta) in setup(), rot in 0usize..6) {
        let corner = corner_for(d);
        let env = Environment::generate_on(&dist, &corner, seed).unwrap();
        let perms: [&[usize]; 6] = [&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]];
        let axes: Vec<usize> = if d == 2 { if rot % 2 == 0 { vec![1, 0] } else { vec![0, 1] } } else { perms[rot].to_vec() };
        let permuted = env.permute_axes(&axes).unwrap();
        let params = PolymerParams::new(beta).unwrap();
        let pf = log_partition(&permuted, params, &Vertex::origin(d), &ConstraintMask::Full).unwrap();
        let lpp = last_passage(&env, &Vertex::origin(d), &corner).unwrap();
        let plpp = last_passage(&permuted, &Vertex::origin(d), permuted.lattice().corner()).unwrap();
        for (x, f) in points(&corner).iter().zip(field_values(&env, beta)) {
            let y = Vertex(axes.iter().map(|&a| x.0[a]).collect());
            prop_assert_eq!(free_energy(&pf, &y).unwrap().to_bits(), f.to_bits());
            prop_assert_eq!(plpp.value(&y).unwrap().to_bits(), lpp.value(x).unwrap().to_bits());
        }
    }

    #[test]
    fn generation_is_a_function_of_the_seed(dist in dist_strategy(), seed in any::<u64>()) {
        let a = Environment::generate_on(&dist, &Vertex(vec![7, 4]), seed).unwrap();
        let b = Environment::generate_on(&dist, &Vertex(vec![7, 4]), seed).unwrap();
        prop_assert!(a.same_weights(&b));
        let bigger = Environment::generate_on(&dist, &Vertex(vec![9, 9]), seed).unwrap();
        for (v, j, w) in a.edges() {
            prop_assert_eq!(bigger.weight(&v, j).unwrap().to_bits(), w.to_bits());
        }
    }
}
