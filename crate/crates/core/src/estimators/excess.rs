//! Mean free-energy excess `h(n) - n f(e)` with `h(n) = E F(0, n e)`.

use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSpec;
use super::stats::{mean, mean_se, ols, FitWindow, RegressionFit};
use crate::error::Result;

/// Value used for `f(e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeReference {
    ClosedForm {
        value: f64,
    },
    /// Finite-size estimate; `bias_bound` bounds `|value - f(e)|` heuristically
    /// by the change between the two largest sizes.
    Estimated {
        value: f64,
        bias_bound: f64,
    },
}

impl FeReference {
    pub fn value(&self) -> f64 {
        match *self {
            FeReference::ClosedForm { value } | FeReference::Estimated { value, .. } => value,
        }
    }

    pub fn bias_bound(&self) -> f64 {
        match *self {
            FeReference::ClosedForm { .. } => 0.0,
            FeReference::Estimated { bias_bound, .. } => bias_bound,
        }
    }

    /// `h(n_k) / n_k` with the jump from `h(n_{k-1}) / n_{k-1}` as bias bound.
    pub fn from_largest_sizes(sizes: &[u64], means: &[f64]) -> Self {
        let k = sizes.len();
        let last = means[k - 1] / sizes[k - 1] as f64;
        let bias_bound = if k >= 2 { (last - means[k - 2] / sizes[k - 2] as f64).abs() } else { f64::INFINITY };
        FeReference::Estimated { value: last, bias_bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFreeEnergyCurve {
    pub sizes: Vec<u64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub excess: Vec<f64>,
    pub excess_se: Vec<f64>,
    pub reference: FeReference,
    /// `excess ~ a + b log n`.
    pub log_fit: RegressionFit,
    /// `log |excess| ~ a + b log n`, when the excess keeps one sign.
    pub power_fit: Option<RegressionFit>,
    /// Bias of `n f(e)` carried into each excess value: `n * bias_bound`.
    pub reference_bias: Vec<f64>,
}

pub fn mean_excess_curve(
    spec: &EnsembleSpec,
    reference: Option<FeReference>,
    window: FitWindow,
) -> Result<MeanFreeEnergyCurve> {
    spec.validate()?;
    let values = spec.diagonal_values()?;
    mean_excess_from_values(&spec.sizes, &values, reference, window)
}

pub fn mean_excess_from_values(
    sizes: &[u64],
    values: &[Vec<f64>],
    reference: Option<FeReference>,
    window: FitWindow,
) -> Result<MeanFreeEnergyCurve> {
    let means: Vec<f64> = values.iter().map(|v| mean(v)).collect();
    let se: Vec<f64> = values.iter().map(|v| mean_se(v)).collect();
    let reference = reference.unwrap_or_else(|| FeReference::from_largest_sizes(sizes, &means));
    let fe = reference.value();
    let excess: Vec<f64> = sizes.iter().zip(&means).map(|(&n, m)| m - n as f64 * fe).collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let range = window.range(sizes.len())?;
    let log_fit = ols(&xs, &excess, range)?;
    let one_sign = excess.iter().all(|&e| e > 0.0) || excess.iter().all(|&e| e < 0.0);
    let power_fit = if one_sign {
        let ys: Vec<f64> = excess.iter().map(|e| e.abs().ln()).collect();
        Some(ols(&xs, &ys, range)?)
    } else {
        None
    };
    Ok(MeanFreeEnergyCurve {
        sizes: sizes.to_vec(),
        mean: means,
        excess_se: se.clone(),
        se,
        excess,
        reference,
        log_fit,
        power_fit,
        reference_bias: sizes.iter().map(|&n| n as f64 * reference.bias_bound()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightDistribution;
    use crate::estimators::ensemble::Model;

    #[test]
    fn smallest_size_is_finite() {
        let spec =
            EnsembleSpec::new(2, WeightDistribution::Exponential { rate: 1.0 }, Model::Polymer, vec![4, 8, 16], 6)
                .with_seed(2);
        let c = mean_excess_curve(&spec, None, FitWindow::default()).unwrap();
        assert!(c.excess[0].is_finite() && c.excess_se[0].is_finite() && c.excess_se[0] > 0.0);
        assert!(matches!(c.reference, FeReference::Estimated { .. }));
    }
}
