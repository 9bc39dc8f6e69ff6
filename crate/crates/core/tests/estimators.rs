use std::f64::consts::LN_2;

use polymer_core::estimators::chi::chi_from_values;
use polymer_core::estimators::delta_f::delta_f_on;
use polymer_core::estimators::ensemble::endpoint_value_from;
use polymer_core::estimators::{
    antidiagonal_fan, bridge_excess, check_relation, concentration_tail, delta_f_variance, estimate_chi,
    estimate_kappa, estimate_limit_shape, estimate_xi, mean_excess_curve, ChiOptions, ConstantEnvShape, EnsembleSpec,
    Exponent, ExponentEstimate, FeReference, FitWindow, Model, OffsetSpec, ShapeEstimate, ShapeFunction, XiOptions,
};
use polymer_core::lattice::log_count_paths;
use polymer_core::{LabError, Result, Vertex, WeightDistribution};

/// Limit shape of exponential(1) last-passage percolation in d = 2.
struct ExpLppShape;

impl ShapeFunction for ExpLppShape {
    fn eval(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok(((x[0].sqrt() + x[1].sqrt()).powi(2), 0.0))
    }
}

fn exp1() -> WeightDistribution {
    WeightDistribution::Exponential { rate: 1.0 }
}

#[test]
fn chi_recovers_an_exact_power_law() {
    let sizes = vec![8, 16, 32, 64, 128];
    let base = [-1.3, 0.2, 0.9, -0.4, 1.1, 0.0, -0.5];
    let values: Vec<Vec<f64>> =
        sizes.iter().map(|&n| base.iter().map(|z| 5.0 * n as f64 + (n as f64).powf(0.3) * z).collect()).collect();
    let r = chi_from_values(&sizes, values, &ChiOptions { window: FitWindow::all() }, 1).unwrap();
    assert!((r.estimate.value - 0.3).abs() < 1e-12, "{}", r.estimate.value);
    assert!(r.estimate.ci.0 <= r.estimate.value && r.estimate.value <= r.estimate.ci.1);
}

#[test]
fn chi_rejects_a_deterministic_ensemble() {
    let spec = EnsembleSpec::new(2, WeightDistribution::Constant { value: 0.3 }, Model::Lpp, vec![4, 8], 3);
    assert!(matches!(estimate_chi(&spec, &ChiOptions::default()), Err(LabError::Degenerate(_))));
}

#[test]
fn kappa_of_closed_form_shapes() {
    let fan = antidiagonal_fan(2, &[0.01, -0.01, 0.02, -0.02, 0.04, -0.04]).unwrap();
    let polymer =
        ShapeEstimate::from_function(&ConstantEnvShape { c: 0.5, beta: 2.0 }, &fan, Model::Polymer, 2.0).unwrap();
    let k = estimate_kappa(&polymer, 0).unwrap().estimate.value;
    assert!((k - 2.0).abs() < 0.005, "{k}");
    let lpp = ShapeEstimate::from_function(&ExpLppShape, &fan, Model::Lpp, 1.0).unwrap();
    let k = estimate_kappa(&lpp, 0).unwrap().estimate.value;
    assert!((k - 2.0).abs() < 0.005, "{k}");
}

#[test]
fn kappa_needs_the_diagonal() {
    let fan = vec![vec![1.1, 0.9], vec![0.9, 1.1]];
    let s = ShapeEstimate::from_function(&ExpLppShape, &fan, Model::Lpp, 1.0).unwrap();
    assert!(estimate_kappa(&s, 0).is_err());
}

#[test]
fn bridge_excess_signs_follow_convexity() {
    let n = 60;
    let v = Vertex(vec![40, 10]);
    assert!(bridge_excess(&ConstantEnvShape { c: 1.0, beta: 1.0 }, &v, n).unwrap().value > 0.0);
    let lpp = bridge_excess(&ExpLppShape, &v, n).unwrap().value;
    let expected = (40f64.sqrt() + 10f64.sqrt()).powi(2) + (20f64.sqrt() + 50f64.sqrt()).powi(2) - 240.0;
    assert!((lpp - expected).abs() < 1e-9 && lpp < 0.0);
}

#[test]
fn mean_excess_matches_the_path_count_in_a_constant_environment() {
    let sizes = vec![4, 8, 16, 32];
    let spec = EnsembleSpec::new(2, WeightDistribution::Constant { value: 1.0 }, Model::Polymer, sizes.clone(), 2);
    let curve = mean_excess_curve(&spec, Some(FeReference::ClosedForm { value: 2.0 }), FitWindow::all()).unwrap();
    for (k, &n) in sizes.iter().enumerate() {
        let expected = 2.0 * n as f64 * LN_2 - log_count_paths(&Vertex::diagonal(2, n as i64)).unwrap();
        assert!((curve.excess[k] - expected).abs() < 1e-9, "n = {n}: {} vs {expected}", curve.excess[k]);
    }
    assert!(curve.power_fit.is_some());
}

#[test]
fn lpp_time_constant_is_four() {
    let spec = EnsembleSpec::new(2, exp1(), Model::Lpp, vec![64, 256], 8).with_seed(3);
    let s = estimate_limit_shape(&spec, &[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!((s.values[0] / 2.0 - 2.0).abs() < 0.15, "f(e) = {}", s.values[0]);
    assert!((s.values[1] - 1.0).abs() < 0.1, "f(e1) = {}", s.values[1]);
    assert_eq!(s.containment.len(), 1);
}

#[test]
fn delta_f_reuses_endpoint_values() {
    let offset = OffsetSpec::new(2, 16, 0.7).unwrap();
    let scale = 16f64.powf(0.7);
    assert!(offset.norm >= 2.0 * scale && offset.norm <= 3.0 * scale + 1.0);
    let spec = EnsembleSpec::new(2, exp1(), Model::Polymer, vec![16], 6).with_seed(4);
    let report = delta_f_variance(&spec, 16, 0.7).unwrap();
    assert_eq!(report.delta.len(), 6);
    assert!(report.variance > 0.0 && report.var_f > 0.0);
    let env = polymer_core::Environment::generate_on(&exp1(), &offset.corner(), 9).unwrap();
    let (f0, df) = delta_f_on(&env, Model::Polymer, 1.0, &offset).unwrap();
    let ((a0, a1), (b0, b1)) = offset.translated_pairs();
    let fa = endpoint_value_from(&env, Model::Polymer, 1.0, &a0, &a1).unwrap();
    let fb = endpoint_value_from(&env, Model::Polymer, 1.0, &b0, &b1).unwrap();
    assert_eq!(f0, fa);
    assert_eq!(df, fa - fb);
}

#[test]
fn concentration_requires_bounded_weights() {
    let spec = EnsembleSpec::new(2, exp1(), Model::Polymer, vec![4], 10);
    let err = concentration_tail(&spec, &Vertex(vec![4, 4]), &[1.0]).unwrap_err();
    assert!(matches!(err, LabError::Unbounded(_)));
}

#[test]
fn relation_flags_a_clear_violation() {
    let chi = ExponentEstimate::from_interval(Exponent::Chi, 0.10, 0.08, 0.12);
    let xi = ExponentEstimate::from_interval(Exponent::Xi, 0.66, 0.65, 0.67);
    let kappa = ExponentEstimate::from_interval(Exponent::Kappa, 2.0, 1.98, 2.02);
    let r = check_relation(&chi, &xi, &kappa);
    assert!(!r.consistent);
    assert!((r.residual - 0.22).abs() < 1e-12);
}

#[test]
fn xi_level_recomputation_agrees_with_the_fit() {
    let spec = EnsembleSpec::new(2, exp1(), Model::Polymer, vec![8, 16, 32], 6).with_seed(12);
    let r = estimate_xi(&spec, &XiOptions { window: FitWindow::all(), ..XiOptions::default() }).unwrap();
    let again = r.at_level(r.q).unwrap();
    assert!((again - r.estimate.value).abs() < 1e-12);
    let lpp = EnsembleSpec::new(2, exp1(), Model::Lpp, vec![8, 16, 32], 6).with_seed(12);
    let r = estimate_xi(&lpp, &XiOptions { window: FitWindow::all(), ..XiOptions::default() }).unwrap();
    assert!((r.at_level(r.q).unwrap() - r.estimate.value).abs() < 1e-12);
}

#[test]
fn estimates_are_reproducible() {
    let spec = EnsembleSpec::new(2, exp1(), Model::Lpp, vec![8, 16, 32], 10).with_seed(99);
    let a = estimate_chi(&spec, &ChiOptions::default()).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| estimate_chi(&spec, &ChiOptions::default()).unwrap());
    assert_eq!(a.values, b.values);
    assert_eq!(a.estimate.value.to_bits(), b.estimate.value.to_bits());
    assert_eq!(a.estimate.ci, b.estimate.ci);
}
