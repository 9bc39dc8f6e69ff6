//! Replicated random environments at a sequence of system sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{Environment, WeightDistribution};
use crate::error::{LabError, Result};
use crate::lattice::{LatticeBox, Vertex, MAX_DIM};
use crate::lpp::last_passage;
use crate::polymer::{point_to_point_free_energy, PolymerParams};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Positive-temperature polymer; the observable is `F(0, x)`.
    Polymer,
    /// Last-passage percolation; the observable is `T(0, x)`.
    Lpp,
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub dimension: usize,
    pub dist: WeightDistribution,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub model: Model,
    pub sizes: Vec<u64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Constant added to every weight after generation.
    #[serde(default)]
    pub shift: f64,
    /// Largest box, in vertices, a single replicate may allocate.
    #[serde(default)]
    pub max_field_vertices: Option<u64>,
}

/// Seed-domain labels for replicate streams that are not tied to an entry
/// of `sizes`.
pub(crate) mod domain {
    pub const DELTA_F: u64 = u64::MAX - 1;
    pub const CONCENTRATION: u64 = u64::MAX - 2;
    pub const BOOTSTRAP: u64 = u64::MAX - 3;
    pub const CONTAINMENT: u64 = u64::MAX - 4;
}

impl EnsembleSpec {
    pub fn new(dimension: usize, dist: WeightDistribution, model: Model, sizes: Vec<u64>, replicates: usize) -> Self {
        Self {
            dimension,
            dist,
            beta: 1.0,
            model,
            sizes,
            replicates,
            master_seed: 0,
            shift: 0.0,
            max_field_vertices: None,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(2)
    }

    /// Validation with a caller-chosen replicate floor; estimators that only
    /// average replicates accept a single one.
    pub fn validate_with(&self, min_replicates: usize) -> Result<()> {
        if self.dimension == 0 || self.dimension > MAX_DIM {
            return Err(LabError::InvalidInput(format!("dimension must be in 1..={MAX_DIM}")));
        }
        self.dist.validate()?;
        if self.model == Model::Polymer {
            PolymerParams::new(self.beta)?;
        }
        if self.replicates < min_replicates.max(1) {
            return Err(LabError::InvalidInput(format!(
                "need at least {} replicates, got {}",
                min_replicates.max(1),
                self.replicates
            )));
        }
        if self.sizes.is_empty() || self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidInput("sizes must be positive and strictly increasing".into()));
        }
        if !self.shift.is_finite() {
            return Err(LabError::InvalidInput("shift must be finite".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> PolymerParams {
        PolymerParams { beta: self.beta }
    }

    pub fn replicate_seed(&self, size_index: u64, replicate: u64) -> u64 {
        derive_seed(self.master_seed, &[size_index, replicate])
    }

    pub fn check_cap(&self, corner: &Vertex) -> Result<()> {
        if let Some(cap) = self.max_field_vertices {
            let count = corner.0.iter().try_fold(1u64, |acc, &c| acc.checked_mul(c as u64 + 1));
            if count.is_none_or(|c| c > cap) {
                return Err(LabError::ResourceCap(format!("box with corner {corner} exceeds {cap} vertices")));
            }
        }
        Ok(())
    }

    /// Environment of replicate `replicate` in seed domain `size_index`.
    pub fn environment(&self, size_index: u64, replicate: u64, corner: &Vertex) -> Result<Environment> {
        self.check_cap(corner)?;
        let lattice = LatticeBox::new(corner.clone())?;
        let env = Environment::generate(&self.dist, &lattice, self.replicate_seed(size_index, replicate))?;
        if self.shift != 0.0 {
            env.shift(self.shift)
        } else {
            Ok(env)
        }
    }

    /// Runs `f` on every replicate environment of one seed domain in
    /// parallel; results are returned in replicate order.
    pub fn map_replicates<T, F>(&self, size_index: u64, corner: &Vertex, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &Environment) -> Result<T> + Sync,
    {
        self.check_cap(corner)?;
        (0..self.replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let env = self.environment(size_index, rep, corner)?;
                f(rep, &env)
            })
            .collect()
    }

    /// `F(0, n e)` (polymer) or `T(0, n e)` (LPP) for every replicate of
    /// every size, indexed `[size][replicate]`.
    pub fn diagonal_values(&self) -> Result<Vec<Vec<f64>>> {
        self.sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let corner = Vertex::diagonal(self.dimension, n as i64);
                self.map_replicates(i as u64, &corner, |_, env| endpoint_value(env, self.model, self.beta, &corner))
            })
            .collect()
    }
}

/// Observable of `model` from the origin to `target`.
pub fn endpoint_value(env: &Environment, model: Model, beta: f64, target: &Vertex) -> Result<f64> {
    endpoint_value_from(env, model, beta, &Vertex::origin(target.dim()), target)
}

pub fn endpoint_value_from(
    env: &Environment,
    model: Model,
    beta: f64,
    source: &Vertex,
    target: &Vertex,
) -> Result<f64> {
    match model {
        Model::Polymer => point_to_point_free_energy(env, PolymerParams::new(beta)?, source, target),
        Model::Lpp => last_passage(env, source, target)?.value(target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> EnsembleSpec {
        EnsembleSpec::new(2, WeightDistribution::Exponential { rate: 1.0 }, Model::Lpp, vec![4, 8], 3).with_seed(11)
    }

    #[test]
    fn validation() {
        assert!(spec().validate().is_ok());
        let mut s = spec();
        s.replicates = 1;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.sizes = vec![8, 8];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.model = Model::Polymer;
        s.beta = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn replicates_are_reproducible_and_distinct() {
        let a = spec().diagonal_values().unwrap();
        let b = spec().diagonal_values().unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0][0], a[0][1]);
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].len(), 3);
    }

    #[test]
    fn resource_cap() {
        let mut s = spec();
        s.max_field_vertices = Some(50);
        assert!(matches!(s.diagonal_values(), Err(LabError::ResourceCap(_))));
        assert_eq!(LabError::ResourceCap(String::new()).exit_code(), 4);
    }
}
