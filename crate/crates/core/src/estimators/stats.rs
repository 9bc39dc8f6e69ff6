//! Small descriptive statistics and least-squares helpers.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Arithmetic mean; exactly the common value when all inputs are equal.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    if all_equal(xs) {
        return xs[0];
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn all_equal(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0].to_bits() == w[1].to_bits())
}

/// Unbiased sample variance; exactly 0 when all inputs are bitwise equal.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m < 2 || all_equal(xs) {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1) as f64
}

/// Standard error of the unbiased sample variance from the fourth central
/// moment: `Var(s^2) ~ (mu4 - sigma^4 (m - 3) / (m - 1)) / m`.
pub fn variance_se(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m < 4 || all_equal(xs) {
        return 0.0;
    }
    let mu = mean(xs);
    let n = m as f64;
    let m2 = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
    let v = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
    v.max(0.0).sqrt()
}

/// Standard error of the mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Inverse empirical CDF: the smallest sample `x` with `F_m(x) >= q`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Which points of a size-ordered series enter a fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    /// Number of smallest sizes dropped; `None` drops `ceil(k / 3)`.
    #[serde(default)]
    pub skip_smallest: Option<usize>,
}

impl FitWindow {
    pub fn all() -> Self {
        Self { skip_smallest: Some(0) }
    }

    pub fn skip(k: usize) -> Self {
        Self { skip_smallest: Some(k) }
    }

    /// Half-open index range `[start, k)` used for a series of `k` points,
    /// always keeping at least two.
    pub fn range(&self, k: usize) -> Result<(usize, usize)> {
        if k < 2 {
            return Err(LabError::InvalidInput(format!("a fit needs at least two sizes, got {k}")));
        }
        let skip = self.skip_smallest.unwrap_or(k.div_ceil(3));
        Ok((skip.min(k - 2), k))
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the fit has no residual degrees of freedom.
    pub slope_se: Option<f64>,
    pub r_squared: f64,
    /// Half-open index range of the points used.
    pub window: (usize, usize),
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// OLS over `xs[window] , ys[window]`.
pub fn ols(xs: &[f64], ys: &[f64], window: (usize, usize)) -> Result<RegressionFit> {
    let (a, b) = window;
    if xs.len() != ys.len() || b > xs.len() || b < a + 2 {
        return Err(LabError::InvalidInput("regression window needs at least two points".into()));
    }
    let x = &xs[a..b];
    let y = &ys[a..b];
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::InvalidInput("regression input is not finite".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidInput("regression abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(u, v)| (v - intercept - slope * u).powi(2)).sum();
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { (1.0 - ssr / sst).clamp(0.0, 1.0) };
    let slope_se = (x.len() > 2).then(|| (ssr / (n - 2.0) / sxx).sqrt());
    Ok(RegressionFit { slope, intercept, slope_se, r_squared, window })
}

/// Percentile interval `[q_{2.5%}, q_{97.5%}]` of bootstrap draws, widened
/// if necessary so that it contains `point`.
pub fn percentile_interval(draws: &[f64], point: f64) -> (f64, f64) {
    let mut finite: Vec<f64> = draws.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (point, point);
    }
    finite.sort_by(|a, b| a.total_cmp(b));
    let at = |p: f64| {
        let h = p * (finite.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        finite[lo] + (h - lo as f64) * (finite[hi] - finite[lo])
    };
    (at(0.025).min(point), at(0.975).max(point))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_and_mean() {
        assert_eq!(sample_variance(&[0.1, 0.1, 0.1]), 0.0);
        assert_eq!(mean(&[0.1, 0.1, 0.1]), 0.1);
        assert!((sample_variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0), 3.0);
    }

    #[test]
    fn ols_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = ols(&x, &y, (0, 4)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15 && (fit.intercept - 1.0).abs() < 1e-15);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.slope_se, Some(0.0));
        assert_eq!(ols(&x, &y, (2, 4)).unwrap().slope_se, None);
        assert!(ols(&x, &y, (3, 4)).is_err());
    }

    #[test]
    fn default_window_drops_a_third() {
        assert_eq!(FitWindow::default().range(5).unwrap(), (2, 5));
        assert_eq!(FitWindow::default().range(6).unwrap(), (2, 6));
        assert_eq!(FitWindow::default().range(2).unwrap(), (0, 2));
        assert_eq!(FitWindow::all().range(4).unwrap(), (0, 4));
        assert_eq!(FitWindow::skip(9).range(4).unwrap(), (2, 4));
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(20, 100, Z95);
        assert!(lo < 0.2 && 0.2 < hi);
        assert_eq!(wilson_interval(0, 50, Z95).0, 0.0);
    }

    #[test]
    fn percentile_interval_contains_point() {
        let draws: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let (lo, hi) = percentile_interval(&draws, 500.0);
        assert!((lo - 24.975).abs() < 1e-9 && (hi - 974.025).abs() < 1e-9);
        assert_eq!(percentile_interval(&draws, 2000.0).1, 2000.0);
    }
}
