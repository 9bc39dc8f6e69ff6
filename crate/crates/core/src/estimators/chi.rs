//! Fluctuation exponent from `Var F(0, n e) ~ n^{2 chi}`.

use serde::{Deserialize, Serialize};

use super::ensemble::{domain, EnsembleSpec};
use super::exponent::{bootstrap, interval, Exponent, ExponentEstimate, BOOTSTRAP_RESAMPLES};
use super::stats::{ols, sample_variance, variance_se, FitWindow};
use crate::error::{LabError, Result};
use crate::rng::derive_seed;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiOptions {
    #[serde(default)]
    pub window: FitWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiResult {
    pub estimate: ExponentEstimate,
    pub sizes: Vec<u64>,
    pub variances: Vec<f64>,
    pub variance_se: Vec<f64>,
    /// Observable per replicate, `[size][replicate]`.
    pub values: Vec<Vec<f64>>,
}

pub fn estimate_chi(spec: &EnsembleSpec, options: &ChiOptions) -> Result<ChiResult> {
    spec.validate()?;
    let values = spec.diagonal_values()?;
    chi_from_values(&spec.sizes, values, options, derive_seed(spec.master_seed, &[domain::BOOTSTRAP, 0]))
}

/// Fits `chi` from per-replicate observables at each size.
pub fn chi_from_values(sizes: &[u64], values: Vec<Vec<f64>>, options: &ChiOptions, seed: u64) -> Result<ChiResult> {
    let variances: Vec<f64> = values.iter().map(|v| sample_variance(v)).collect();
    if variances.iter().all(|&v| v == 0.0) {
        return Err(LabError::Degenerate("Var F(0, n e) is zero at every size".into()));
    }
    if let Some(i) = variances.iter().position(|&v| v == 0.0) {
        return Err(LabError::Degenerate(format!("Var F(0, n e) is zero at n = {}", sizes[i])));
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let window = options.window.range(sizes.len())?;
    let fit = ols(&xs, &ys, window)?;
    let value = fit.slope / 2.0;

    let groups: Vec<usize> = values[window.0..window.1].iter().map(|v| v.len()).collect();
    let draws = bootstrap(seed, &groups, BOOTSTRAP_RESAMPLES, |picks| {
        let ys_b: Vec<f64> = picks
            .iter()
            .zip(&values[window.0..window.1])
            .map(|(pick, v)| {
                let sample: Vec<f64> = pick.iter().map(|&i| v[i]).collect();
                sample_variance(&sample).ln()
            })
            .collect();
        ols(&xs[window.0..window.1], &ys_b, (0, ys_b.len())).map_or(f64::NAN, |f| f.slope / 2.0)
    });

    let mut warnings = Vec::new();
    let m = values.iter().map(|v| v.len()).min().unwrap_or(0);
    if m < 30 {
        warnings.push(format!("only {m} replicates per size; variance estimates are unreliable below 30"));
    }
    let variance_se = values.iter().map(|v| variance_se(v)).collect();
    Ok(ChiResult {
        estimate: ExponentEstimate {
            which: Exponent::Chi,
            value,
            ci: interval(&draws, value),
            fit,
            method: "ols of log Var F(0, n e) on log n, slope / 2".into(),
            degenerate: false,
            xs,
            ys,
            warnings,
            draws,
        },
        sizes: sizes.to_vec(),
        variances,
        variance_se,
        values,
    })
}
