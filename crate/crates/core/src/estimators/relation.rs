//! Consistency check of `chi = kappa xi - (kappa - 1)`.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::exponent::ExponentEstimate;
use super::stats::{percentile_interval, Z95};
use crate::rng::SplitMix64;

impl SeedableRng for SplitMix64 {
    type Seed = [u8; 8];

    fn from_seed(seed: Self::Seed) -> Self {
        SplitMix64::new(u64::from_le_bytes(seed))
    }
}

pub fn relation_rhs(xi: f64, kappa: f64) -> f64 {
    kappa * xi - (kappa - 1.0)
}

/// `rhs - chi`, reported as exactly 0 when it is below the rounding error
/// of evaluating the right-hand side in double precision.
pub fn relation_residual(chi: f64, xi: f64, kappa: f64) -> f64 {
    let r = relation_rhs(xi, kappa) - chi;
    let bound = 8.0 * f64::EPSILON * (chi.abs() + (kappa * xi).abs() + kappa.abs() + 1.0);
    if r.abs() <= bound {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub chi: f64,
    pub xi: f64,
    pub kappa: f64,
    pub rhs: f64,
    pub residual: f64,
    pub chi_ci: (f64, f64),
    pub rhs_ci: (f64, f64),
    pub consistent: bool,
    pub propagation: String,
}

impl RelationReport {
    pub fn verdict(&self) -> &'static str {
        if self.consistent {
            "consistent"
        } else {
            "inconsistent"
        }
    }
}

const NORMAL_DRAWS: usize = 10_000;
const NORMAL_SEED: u64 = 0x7265_6c61_7469_6f6e;

pub fn check_relation(chi: &ExponentEstimate, xi: &ExponentEstimate, kappa: &ExponentEstimate) -> RelationReport {
    let rhs = relation_rhs(xi.value, kappa.value);
    let residual = relation_residual(chi.value, xi.value, kappa.value);
    let paired = !xi.draws.is_empty() && xi.draws.len() == kappa.draws.len();
    let (draws, propagation): (Vec<f64>, &str) = if paired {
        (xi.draws.iter().zip(&kappa.draws).map(|(&x, &k)| relation_rhs(x, k)).collect(), "bootstrap draws")
    } else {
        let sx = xi.half_width() / Z95;
        let sk = kappa.half_width() / Z95;
        if sx == 0.0 && sk == 0.0 {
            (Vec::new(), "exact inputs")
        } else {
            let mut rng = SplitMix64::seed_from_u64(NORMAL_SEED);
            let nx = Normal::new(xi.value, sx).expect("finite sd");
            let nk = Normal::new(kappa.value, sk).expect("finite sd");
            let draws = (0..NORMAL_DRAWS).map(|_| relation_rhs(nx.sample(&mut rng), nk.sample(&mut rng))).collect();
            (draws, "normal approximation from interval half-widths")
        }
    };
    let rhs_ci = percentile_interval(&draws, rhs);
    let chi_ci = chi.ci;
    RelationReport {
        chi: chi.value,
        xi: xi.value,
        kappa: kappa.value,
        rhs,
        residual,
        chi_ci,
        rhs_ci,
        consistent: residual == 0.0 || (chi_ci.0 <= rhs_ci.1 && rhs_ci.0 <= chi_ci.1),
        propagation: propagation.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::exponent::Exponent;

    #[test]
    fn closed_triples_have_zero_residual() {
        assert_eq!(relation_residual(1.0 / 3.0, 2.0 / 3.0, 2.0), 0.0);
        assert_eq!(relation_residual(0.0, 0.5, 2.0), 0.0);
        assert!(relation_residual(0.3, 2.0 / 3.0, 2.0).abs() > 0.03);
    }

    #[test]
    fn interval_propagation() {
        let chi = ExponentEstimate::from_interval(Exponent::Chi, 0.30, 0.22, 0.38);
        let xi = ExponentEstimate::from_interval(Exponent::Xi, 0.65, 0.59, 0.71);
        let kappa = ExponentEstimate::from_interval(Exponent::Kappa, 2.0, 1.7, 2.3);
        let r = check_relation(&chi, &xi, &kappa);
        assert!((r.rhs - 0.30).abs() < 1e-12);
        let half = 0.5 * (r.rhs_ci.1 - r.rhs_ci.0);
        assert!((0.12..0.18).contains(&half), "{half}");
        assert!(r.consistent);
        assert_eq!(r.verdict(), "consistent");
    }
}
