//! Exact sampling from the polymer measure `mu_{u,v}` by walking backward
//! from the endpoint through the partition-function field.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::lattice::{segment_distance_unchecked, Vertex};
use crate::polymer::{ConstraintMask, FreeEnergyField};
use crate::rng::SplitMix64;

/// A directed path from a source to an endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub vertices: Vec<Vertex>,
    /// Largest Euclidean distance from a path vertex to the segment joining
    /// the first and last vertices.
    pub max_deviation: f64,
}

impl PathSample {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(LabError::InvalidInput("a path needs at least one vertex".into()));
        }
        for w in vertices.windows(2) {
            if !w[0].le(&w[1]) || w[1].sub(&w[0]).l1() != 1 {
                return Err(LabError::InvalidInput(format!("{} -> {} is not a directed unit step", w[0], w[1])));
            }
        }
        let max_deviation = deviation(&vertices);
        Ok(Self { vertices, max_deviation })
    }

    pub fn source(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn endpoint(&self) -> &Vertex {
        self.vertices.last().expect("nonempty path")
    }

    /// Direction index of every step, in path order.
    pub fn directions(&self) -> Vec<usize> {
        self.vertices
            .windows(2)
            .map(|w| w[0].0.iter().zip(&w[1].0).position(|(a, b)| a != b).expect("unit step"))
            .collect()
    }

    /// `tau(gamma)`, summed along the path.
    pub fn weight(&self, env: &Environment) -> Result<f64> {
        let mut total = 0.0;
        for (v, j) in self.vertices.iter().zip(self.directions()) {
            total += env.weight(v, j).ok_or_else(|| LabError::OutsideBox {
                vertex: v.0.clone(),
                corner: env.lattice().corner().0.clone(),
            })?;
        }
        Ok(total)
    }
}

fn deviation(vertices: &[Vertex]) -> f64 {
    let source = &vertices[0];
    let axis: Vec<f64> = vertices.last().expect("nonempty").sub(source).to_f64();
    let ss: f64 = axis.iter().map(|a| a * a).sum();
    if ss == 0.0 {
        return 0.0;
    }
    vertices.iter().map(|v| segment_distance_unchecked(&v.sub(source).to_f64(), &axis, ss)).fold(0.0, f64::max)
}

/// Maximum distance from the path's vertices to the segment from its source
/// to its endpoint.
pub fn transversal_deviation(path: &PathSample) -> f64 {
    deviation(&path.vertices)
}

/// Backward transition probabilities at `v`: predecessor direction `j` and
/// `exp(logZ(v - e_j) - beta * tau(v - e_j, v) - logZ(v))`.
pub fn backward_probabilities(field: &FreeEnergyField, env: &Environment, v: &Vertex) -> Result<Vec<(usize, f64)>> {
    let log_v = field.log_z(v)?;
    if log_v == f64::NEG_INFINITY {
        return Err(LabError::Unreachable(v.0.clone()));
    }
    let source = field.source();
    let mut out = Vec::with_capacity(v.dim());
    for j in 0..v.dim() {
        if v.0[j] > source.0[j] {
            let mut u = v.clone();
            u.0[j] -= 1;
            let w = env.weight(&u, j).expect("edge inside region");
            let p = (field.log_z(&u)? - field.beta() * w - log_v).exp();
            out.push((j, p));
        }
    }
    Ok(out)
}

/// Draws one path from `mu_{source, endpoint}`.
pub fn sample_path<R: Rng + ?Sized>(
    field: &FreeEnergyField,
    env: &Environment,
    endpoint: &Vertex,
    rng: &mut R,
) -> Result<PathSample> {
    if *field.mask() != ConstraintMask::Full {
        return Err(LabError::InvalidInput("path sampling needs a field computed with the full mask".into()));
    }
    let source = field.source().clone();
    let mut reversed = Vec::with_capacity(endpoint.sub(&source).l1() as usize + 1);
    let mut v = endpoint.clone();
    if field.log_z(&v)? == f64::NEG_INFINITY {
        return Err(LabError::Unreachable(v.0.clone()));
    }
    reversed.push(v.clone());
    while v != source {
        let probs = backward_probabilities(field, env, &v)?;
        let total: f64 = probs.iter().map(|p| p.1).sum();
        let mut target = rng.random::<f64>() * total;
        let mut chosen = probs.last().expect("a predecessor exists").0;
        for &(j, p) in &probs {
            if target < p {
                chosen = j;
                break;
            }
            target -= p;
        }
        v.0[chosen] -= 1;
        reversed.push(v.clone());
    }
    reversed.reverse();
    PathSample::new(reversed)
}

/// Draws `count` paths in parallel; sample `i` uses its own stream derived
/// from `(seed, i)`, so the output does not depend on the worker count.
pub fn sample_paths(
    field: &FreeEnergyField,
    env: &Environment,
    endpoint: &Vertex,
    count: usize,
    seed: u64,
) -> Result<Vec<PathSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::stream(seed, &[i as u64]);
            sample_path(field, env, endpoint, &mut rng)
        })
        .collect()
}

/// Writes `sample,step,x1,..,xd` rows.
pub fn write_samples_csv<W: Write>(samples: &[PathSample], mut out: W) -> Result<()> {
    let d = samples.first().map_or(0, |s| s.source().dim());
    let head: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    writeln!(out, "sample,step,{}", head.join(","))?;
    for (id, s) in samples.iter().enumerate() {
        for (step, v) in s.vertices.iter().enumerate() {
            let coords: Vec<String> = v.coords().iter().map(|c| c.to_string()).collect();
            writeln!(out, "{id},{step},{}", coords.join(","))?;
        }
    }
    Ok(())
}
