//! Curvature exponent from `|f(e + z) - f(e)| ~ |z|^kappa` along the
//! anti-diagonal.

use serde::{Deserialize, Serialize};

use super::exponent::{bootstrap, interval, Exponent, ExponentEstimate, BOOTSTRAP_RESAMPLES};
use super::shape::ShapeEstimate;
use super::stats::{mean, mean_se, ols, Z95};
use crate::error::{LabError, Result};

/// Directions `e` followed by `e + s (e_1 - e_2)` for each offset `s`.
pub fn antidiagonal_fan(d: usize, offsets: &[f64]) -> Result<Vec<Vec<f64>>> {
    if d < 2 {
        return Err(LabError::InvalidInput("an anti-diagonal fan needs d >= 2".into()));
    }
    let mut fan = vec![vec![1.0; d]];
    for &s in offsets {
        if !(s.abs() < 1.0) {
            return Err(LabError::InvalidInput(format!("fan offset {s} leaves the open orthant")));
        }
        let mut x = vec![1.0; d];
        x[0] += s;
        x[1] -= s;
        fan.push(x);
    }
    Ok(fan)
}

/// Default offsets: `+-s` for six values of `s` from 0.05 to 0.3.
pub fn default_offsets() -> Vec<f64> {
    [0.05, 0.075, 0.1, 0.15, 0.2, 0.3].iter().flat_map(|&s| [s, -s]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub estimate: ExponentEstimate,
    /// `|z|` per fan direction (excluding `e`).
    pub norms: Vec<f64>,
    pub diffs: Vec<f64>,
    pub diff_se: Vec<f64>,
    /// Whether each point passed the `|diff| > 3 SE` screen.
    pub used: Vec<bool>,
}

fn is_diagonal(x: &[f64]) -> bool {
    x.iter().all(|&c| c == 1.0)
}

pub fn estimate_kappa(shape: &ShapeEstimate, seed: u64) -> Result<KappaResult> {
    let centre = shape
        .directions
        .iter()
        .position(|x| is_diagonal(x))
        .ok_or_else(|| LabError::InvalidInput("the fan must contain the diagonal direction e".into()))?;
    let paired = !shape.per_replicate.is_empty() && shape.per_replicate.iter().all(|r| r.len() >= 2);

    let mut idx = Vec::new();
    let mut norms = Vec::new();
    let mut diffs = Vec::new();
    let mut diff_se = Vec::new();
    for (k, x) in shape.directions.iter().enumerate() {
        if k == centre {
            continue;
        }
        let z: Vec<f64> = x.iter().map(|c| c - 1.0).collect();
        let total: f64 = z.iter().sum();
        if total.abs() > 1e-9 {
            return Err(LabError::InvalidInput(format!("fan direction {x:?} is not e + z with z orthogonal to e")));
        }
        let (diff, se) = if paired {
            let d: Vec<f64> =
                shape.per_replicate[k].iter().zip(&shape.per_replicate[centre]).map(|(a, b)| a - b).collect();
            (mean(&d), mean_se(&d))
        } else {
            (shape.values[k] - shape.values[centre], shape.se[k].hypot(shape.se[centre]))
        };
        idx.push(k);
        norms.push(z.iter().map(|c| c * c).sum::<f64>().sqrt());
        diffs.push(diff);
        diff_se.push(se);
    }
    let used: Vec<bool> =
        norms.iter().zip(&diffs).zip(&diff_se).map(|((&n, &d), &s)| n > 0.0 && d != 0.0 && d.abs() > 3.0 * s).collect();
    let selected: Vec<usize> = (0..norms.len()).filter(|&i| used[i]).collect();
    if selected.len() < 2 {
        return Err(LabError::FlatWithinNoise(format!(
            "{} of {} fan points exceed 3 standard errors",
            selected.len(),
            norms.len()
        )));
    }
    let mut order = selected.clone();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]));
    let xs: Vec<f64> = order.iter().map(|&i| norms[i].ln()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| diffs[i].abs().ln()).collect();
    let fit = ols(&xs, &ys, (0, xs.len()))?;
    let value = fit.slope;

    let (draws, ci) = if paired {
        let m = shape.per_replicate[centre].len();
        let draws = bootstrap(seed, &[m], BOOTSTRAP_RESAMPLES, |picks| {
            let pick = &picks[0];
            let yb: Vec<f64> = order
                .iter()
                .map(|&i| {
                    let k = idx[i];
                    let d: Vec<f64> =
                        pick.iter().map(|&r| shape.per_replicate[k][r] - shape.per_replicate[centre][r]).collect();
                    mean(&d).abs().ln()
                })
                .collect();
            if yb.iter().any(|y| !y.is_finite()) {
                return f64::NAN;
            }
            ols(&xs, &yb, (0, yb.len())).map_or(f64::NAN, |f| f.slope)
        });
        let ci = interval(&draws, value);
        (draws, ci)
    } else {
        let half = Z95 * fit.slope_se.unwrap_or(0.0);
        (Vec::new(), (value - half, value + half))
    };

    Ok(KappaResult {
        estimate: ExponentEstimate {
            which: Exponent::Kappa,
            value,
            ci,
            fit,
            method: "ols of log |fhat(e + z) - fhat(e)| on log |z| over points above 3 SE".into(),
            degenerate: false,
            xs,
            ys,
            warnings: Vec::new(),
            draws,
        },
        norms,
        diffs,
        diff_se,
        used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ensemble::Model;
    use crate::estimators::shape::ConstantEnvShape;

    #[test]
    fn fan_layout() {
        let fan = antidiagonal_fan(3, &[0.1]).unwrap();
        assert_eq!(fan, vec![vec![1.0, 1.0, 1.0], vec![1.1, 0.9, 1.0]]);
        assert!(antidiagonal_fan(1, &[0.1]).is_err());
        assert!(antidiagonal_fan(2, &[1.0]).is_err());
    }

    #[test]
    fn zero_offset_is_excluded() {
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        let fan = antidiagonal_fan(2, &[0.0, 0.01, 0.02, 0.04]).unwrap();
        let shape = ShapeEstimate::from_function(&f, &fan, Model::Polymer, 1.0).unwrap();
        let r = estimate_kappa(&shape, 0).unwrap();
        assert_eq!(r.used, vec![false, true, true, true]);
        assert!((r.estimate.value - 2.0).abs() < 1e-3);
    }

    #[test]
    fn flat_shape_is_rejected() {
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        let fan = antidiagonal_fan(2, &[0.0]).unwrap();
        let shape = ShapeEstimate::from_function(&f, &fan, Model::Polymer, 1.0).unwrap();
        assert!(matches!(estimate_kappa(&shape, 0), Err(LabError::FlatWithinNoise(_))));
    }
}
