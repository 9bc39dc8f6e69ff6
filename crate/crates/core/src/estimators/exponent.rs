use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{percentile_interval, RegressionFit, Z95};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exponent {
    Chi,
    Xi,
    Kappa,
}

impl Exponent {
    pub fn name(self) -> &'static str {
        match self {
            Exponent::Chi => "chi",
            Exponent::Xi => "xi",
            Exponent::Kappa => "kappa",
        }
    }
}

/// A fitted scaling exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub which: Exponent,
    pub value: f64,
    /// 95% interval; always contains `value`.
    pub ci: (f64, f64),
    pub fit: RegressionFit,
    pub method: String,
    /// Set when the data carry no scaling information (for instance every
    /// radius at the grid floor); `value` is then 0.
    pub degenerate: bool,
    /// Abscissae of the log-log points, all of them, not only the window.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Bootstrap replicates of `value`, in draw order.
    #[serde(default, skip_serializing)]
    pub draws: Vec<f64>,
}

impl ExponentEstimate {
    /// Estimate known only through a value and a 95% interval.
    pub fn from_interval(which: Exponent, value: f64, lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo);
        Self {
            which,
            value,
            ci: (lo.min(value), hi.max(value)),
            fit: RegressionFit {
                slope: value,
                intercept: 0.0,
                slope_se: Some(half / Z95),
                r_squared: 1.0,
                window: (0, 0),
            },
            method: "supplied".into(),
            degenerate: false,
            xs: Vec::new(),
            ys: Vec::new(),
            warnings: Vec::new(),
            draws: Vec::new(),
        }
    }

    pub fn exact(which: Exponent, value: f64) -> Self {
        Self::from_interval(which, value, value, value)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci.1 - self.ci.0)
    }
}

pub(crate) const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Draws `resamples` bootstrap replicates of a statistic of per-replicate
/// data. `stat` receives, for each resample, index vectors drawn with
/// replacement for every group of the given sizes.
pub(crate) fn bootstrap<F>(seed: u64, group_sizes: &[usize], resamples: usize, stat: F) -> Vec<f64>
where
    F: Fn(&[Vec<usize>]) -> f64,
{
    let mut rng = SplitMix64::new(seed);
    let mut picks: Vec<Vec<usize>> = group_sizes.iter().map(|&m| vec![0; m]).collect();
    (0..resamples)
        .map(|_| {
            for (pick, &m) in picks.iter_mut().zip(group_sizes) {
                for slot in pick.iter_mut() {
                    *slot = rng.random_range(0..m);
                }
            }
            stat(&picks)
        })
        .collect()
}

pub(crate) fn interval(draws: &[f64], value: f64) -> (f64, f64) {
    percentile_interval(draws, value)
}
