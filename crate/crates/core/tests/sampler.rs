use std::collections::HashMap;

use polymer_core::lattice::Cylinder;
use polymer_core::oracle::oracle_path_law;
use polymer_core::sampler::{backward_probabilities, write_samples_csv};
use polymer_core::{
    log_partition, sample_paths, transversal_deviation, ConstraintMask, Environment, LabError, PolymerParams, Vertex,
    WeightDistribution,
};

fn env3() -> Environment {
    Environment::generate_on(&WeightDistribution::Gamma { shape: 2.0, scale: 0.5 }, &Vertex(vec![2, 1, 1]), 41).unwrap()
}

#[test]
fn three_dimensional_frequencies_match_the_exact_law() {
    let env = env3();
    let x = Vertex(vec![2, 1, 1]);
    let beta = 1.5;
    let law = oracle_path_law(&env, beta, &x).unwrap();
    let field =
        log_partition(&env, PolymerParams::new(beta).unwrap(), &Vertex::origin(3), &ConstraintMask::Full).unwrap();
    let count = 50_000;
    let samples = sample_paths(&field, &env, &x, count, 77).unwrap();
    let mut counts: HashMap<Vec<Vertex>, usize> = HashMap::new();
    for s in &samples {
        *counts.entry(s.vertices.clone()).or_default() += 1;
    }
    assert_eq!(counts.len(), law.len());
    let tv: f64 = 0.5
        * law.iter().map(|(p, prob)| (*counts.get(p).unwrap_or(&0) as f64 / count as f64 - prob).abs()).sum::<f64>();
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn samples_depend_only_on_the_seed() {
    let env = env3();
    let x = Vertex(vec![2, 1, 1]);
    let field = log_partition(&env, PolymerParams::default(), &Vertex::origin(3), &ConstraintMask::Full).unwrap();
    let a = sample_paths(&field, &env, &x, 300, 5).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| sample_paths(&field, &env, &x, 300, 5).unwrap());
    assert_eq!(a, b);
    let c = sample_paths(&field, &env, &x, 300, 6).unwrap();
    assert_ne!(a, c);
    for s in &a {
        assert_eq!(s.source(), &Vertex::origin(3));
        assert_eq!(s.endpoint(), &x);
        assert_eq!(s.vertices.len(), 5);
        assert!(transversal_deviation(s) >= 0.0);
    }
}

#[test]
fn backward_probabilities_sum_to_one() {
    let env = Environment::generate_on(&WeightDistribution::Exponential { rate: 1.0 }, &Vertex(vec![6, 6]), 3).unwrap();
    let field =
        log_partition(&env, PolymerParams::new(0.7).unwrap(), &Vertex::origin(2), &ConstraintMask::Full).unwrap();
    for v in [Vertex(vec![6, 6]), Vertex(vec![3, 5]), Vertex(vec![0, 4])] {
        let probs = backward_probabilities(&field, &env, &v).unwrap();
        let total: f64 = probs.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }
}

#[test]
fn masked_fields_are_rejected() {
    let env =
        Environment::generate_on(&WeightDistribution::Uniform { lo: 0.0, hi: 1.0 }, &Vertex(vec![4, 4]), 1).unwrap();
    let cyl = Cylinder::from_origin(vec![4.0, 4.0], 1.5).unwrap();
    let field =
        log_partition(&env, PolymerParams::default(), &Vertex::origin(2), &ConstraintMask::Cylinder(cyl)).unwrap();
    let err = sample_paths(&field, &env, &Vertex(vec![4, 4]), 3, 0).unwrap_err();
    assert!(matches!(err, LabError::InvalidInput(_)));
}

#[test]
fn csv_lists_every_vertex() {
    let env = env3();
    let x = Vertex(vec![2, 1, 1]);
    let field = log_partition(&env, PolymerParams::default(), &Vertex::origin(3), &ConstraintMask::Full).unwrap();
    let samples = sample_paths(&field, &env, &x, 2, 9).unwrap();
    let mut out = Vec::new();
    write_samples_csv(&samples, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample,step,x1,x2,x3");
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert_eq!(lines[5], "0,4,2,1,1");
}
