//! Empirical tails of `|F - E F|` against `2 exp(-t^2 / 2 L^2)`.

use serde::{Deserialize, Serialize};

use super::ensemble::{domain, endpoint_value, EnsembleSpec};
use super::stats::{mean, wilson_interval, Z95};
use crate::error::{LabError, Result};
use crate::lattice::Vertex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// `t sqrt(|z|_1)`.
    pub threshold: f64,
    pub exceedances: usize,
    pub frequency: f64,
    pub wilson: (f64, f64),
    pub bound: f64,
    /// `sqrt(b (1 - b) / m)` with `b` the bound clipped to `[0, 1]`.
    pub sigma_mc: f64,
    /// `frequency <= bound + 3 sigma_mc`.
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub z: Vertex,
    pub weight_bound: f64,
    pub replicates: usize,
    pub mean: f64,
    pub rows: Vec<TailRow>,
    pub values: Vec<f64>,
}

pub fn azuma_bound(t: f64, l: f64) -> f64 {
    2.0 * (-t * t / (2.0 * l * l)).exp()
}

pub fn concentration_tail(spec: &EnsembleSpec, z: &Vertex, ts: &[f64]) -> Result<ConcentrationReport> {
    spec.validate()?;
    let l = spec.dist.upper_bound().filter(|_| spec.dist.is_nonnegative()).ok_or_else(|| {
        LabError::Unbounded(format!("{} has no finite bound L; the tail bound does not apply", spec.dist))
    })?;
    let l = l + spec.shift.max(0.0);
    if z.dim() != spec.dimension || !z.is_nonnegative() || z.l1() == 0 {
        return Err(LabError::InvalidInput(format!("{z} must be a nonzero point of the orthant")));
    }
    let values =
        spec.map_replicates(domain::CONCENTRATION, z, |_, env| endpoint_value(env, spec.model, spec.beta, z))?;
    let fbar = mean(&values);
    let m = values.len();
    let scale = (z.l1() as f64).sqrt();
    let rows = ts
        .iter()
        .map(|&t| {
            let threshold = t * scale;
            let exceedances = values.iter().filter(|&&f| (f - fbar).abs() > threshold).count();
            let frequency = exceedances as f64 / m as f64;
            let bound = azuma_bound(t, l);
            let b = bound.clamp(0.0, 1.0);
            let sigma_mc = (b * (1.0 - b) / m as f64).sqrt();
            TailRow {
                t,
                threshold,
                exceedances,
                frequency,
                wilson: wilson_interval(exceedances, m, Z95),
                bound,
                sigma_mc,
                within_bound: frequency <= bound + 3.0 * sigma_mc,
            }
        })
        .collect();
    Ok(ConcentrationReport { z: z.clone(), weight_bound: l, replicates: m, mean: fbar, rows, values })
}
