//! Shared directed-lattice dynamic-programming sweep.
//!
//! A sweep fills `value(v)` for every `v` in a rectangular region
//! `[lo, hi]` from the values of its predecessors `v - e_j`. Both sweep
//! orders evaluate exactly the same per-vertex expression, so their outputs
//! are bit-identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::lattice::{row_major_strides, Vertex, MAX_DIM};

/// Vertex visiting order of a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    /// Row-major, single-threaded.
    #[default]
    RowMajor,
    /// Anti-diagonal levels `|v - lo|_1 = 0, 1, ...`; vertices within a level
    /// are evaluated in parallel.
    Wavefront,
}

/// Per-vertex combination rule.
pub(crate) trait Semiring: Sync {
    /// Value at the source vertex.
    fn one(&self) -> f64;
    /// Value of an unreachable or masked vertex.
    fn absent(&self) -> f64;
    /// Contribution of predecessor value `value` through an edge of weight `weight`.
    fn extend(&self, value: f64, weight: f64) -> f64;
    /// Combines contributions listed in direction order.
    fn combine(&self, terms: &mut [f64]) -> f64;
}

/// `log sum exp(logZ(u) - beta * tau)`.
pub(crate) struct LogSumExp {
    pub beta: f64,
}

impl Semiring for LogSumExp {
    fn one(&self) -> f64 {
        0.0
    }

    fn absent(&self) -> f64 {
        f64::NEG_INFINITY
    }

    #[inline]
    fn extend(&self, value: f64, weight: f64) -> f64 {
        value - self.beta * weight
    }

    #[inline]
    fn combine(&self, terms: &mut [f64]) -> f64 {
        log_sum_exp(terms)
    }
}

/// Numerically stable `log sum exp`. Terms are summed in ascending order,
/// which makes the result independent of how the terms are listed; `-inf`
/// terms are absorbing zeros.
#[inline]
pub fn log_sum_exp(terms: &mut [f64]) -> f64 {
    match terms.len() {
        0 => f64::NEG_INFINITY,
        1 => terms[0],
        2 => {
            let (lo, hi) = if terms[0] <= terms[1] { (terms[0], terms[1]) } else { (terms[1], terms[0]) };
            if hi == f64::NEG_INFINITY {
                return hi;
            }
            hi + (lo - hi).exp().ln_1p()
        }
        _ => {
            terms.sort_unstable_by(|a, b| a.total_cmp(b));
            let hi = terms[terms.len() - 1];
            if hi == f64::NEG_INFINITY {
                return hi;
            }
            let rest: f64 = terms[..terms.len() - 1].iter().map(|t| (t - hi).exp()).sum();
            hi + rest.ln_1p()
        }
    }
}

pub(crate) struct MaxPlus;

impl Semiring for MaxPlus {
    fn one(&self) -> f64 {
        0.0
    }

    fn absent(&self) -> f64 {
        f64::NEG_INFINITY
    }

    #[inline]
    fn extend(&self, value: f64, weight: f64) -> f64 {
        value + weight
    }

    #[inline]
    fn combine(&self, terms: &mut [f64]) -> f64 {
        terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) struct MinPlus;

impl Semiring for MinPlus {
    fn one(&self) -> f64 {
        0.0
    }

    fn absent(&self) -> f64 {
        f64::INFINITY
    }

    #[inline]
    fn extend(&self, value: f64, weight: f64) -> f64 {
        value + weight
    }

    #[inline]
    fn combine(&self, terms: &mut [f64]) -> f64 {
        terms.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Rectangular sweep region `[lo, hi]` inside an environment's box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub lo: Vertex,
    pub hi: Vertex,
    extents: Vec<usize>,
    strides: Vec<usize>,
}

impl Region {
    pub fn new(env: &Environment, lo: &Vertex, hi: &Vertex) -> Result<Self> {
        let lattice = env.lattice();
        lattice.check_contains(lo)?;
        lattice.check_contains(hi)?;
        if !lo.le(hi) {
            return Err(LabError::NotOrdered { from: lo.0.clone(), target: hi.0.clone() });
        }
        let extents: Vec<usize> = lo.0.iter().zip(&hi.0).map(|(a, b)| (b - a) as usize + 1).collect();
        let strides = row_major_strides(&extents);
        Ok(Self { lo: lo.clone(), hi: hi.clone(), extents, strides })
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.dim() == self.dim() && self.lo.le(v) && v.le(&self.hi)
    }

    pub fn local_index(&self, v: &Vertex) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        Some(v.0.iter().zip(&self.lo.0).zip(&self.strides).map(|((a, b), s)| (a - b) as usize * s).sum())
    }

    pub fn vertex_at(&self, index: usize) -> Vertex {
        let mut rest = index;
        Vertex(
            self.strides
                .iter()
                .zip(&self.lo.0)
                .map(|(&s, &l)| {
                    let c = rest / s;
                    rest %= s;
                    l + c as i64
                })
                .collect(),
        )
    }

    pub(crate) fn stride(&self, j: usize) -> usize {
        self.strides[j]
    }
}

/// Vertex admissibility predicate on global coordinates.
pub(crate) type Admit<'a> = Option<&'a (dyn Fn(&[i64]) -> bool + Sync)>;

/// Runs the sweep and returns values in the region's row-major order.
pub(crate) fn sweep<S: Semiring>(
    env: &Environment,
    region: &Region,
    semiring: &S,
    admit: Admit<'_>,
    order: SweepOrder,
) -> Vec<f64> {
    let ctx = Ctx::new(env, region);
    match order {
        SweepOrder::RowMajor => {
            let mut values = vec![semiring.absent(); region.len()];
            let mut terms = Vec::with_capacity(ctx.d);
            let mut local = [0usize; MAX_DIM];
            for index in 0..region.len() {
                values[index] = ctx.evaluate(index, &local[..ctx.d], &values, semiring, admit, &mut terms);
                // odometer, last coordinate fastest
                for k in (0..ctx.d).rev() {
                    local[k] += 1;
                    if local[k] < region.extents[k] {
                        break;
                    }
                    local[k] = 0;
                }
            }
            values
        }
        SweepOrder::Wavefront => {
            let levels = level_buckets(region);
            let mut values = vec![semiring.absent(); region.len()];
            for bucket in &levels {
                let computed: Vec<f64> = bucket
                    .par_iter()
                    .map_init(
                        || Vec::with_capacity(ctx.d),
                        |terms, &index| {
                            let local = ctx.local_coords(index);
                            ctx.evaluate(index, &local[..ctx.d], &values, semiring, admit, terms)
                        },
                    )
                    .collect();
                for (&index, value) in bucket.iter().zip(computed) {
                    values[index] = value;
                }
            }
            values
        }
    }
}

struct Ctx<'a> {
    d: usize,
    weights: &'a [f64],
    lo: Vec<i64>,
    region_strides: Vec<usize>,
    env_strides: Vec<usize>,
    env_base: usize,
}

impl<'a> Ctx<'a> {
    fn new(env: &'a Environment, region: &Region) -> Self {
        let env_strides = env.lattice().strides();
        let env_base = region.lo.0.iter().zip(&env_strides).map(|(&c, s)| c as usize * s).sum();
        Self {
            d: region.dim(),
            weights: env.raw_weights(),
            lo: region.lo.0.clone(),
            region_strides: region.strides.clone(),
            env_strides,
            env_base,
        }
    }

    fn local_coords(&self, index: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rest = index;
        for (k, &s) in self.region_strides.iter().enumerate() {
            out[k] = rest / s;
            rest %= s;
        }
        out
    }

    #[inline]
    fn evaluate<S: Semiring>(
        &self,
        index: usize,
        local: &[usize],
        values: &[f64],
        semiring: &S,
        admit: Admit<'_>,
        terms: &mut Vec<f64>,
    ) -> f64 {
        if let Some(admit) = admit {
            let mut global = [0i64; MAX_DIM];
            for k in 0..self.d {
                global[k] = self.lo[k] + local[k] as i64;
            }
            if !admit(&global[..self.d]) {
                return semiring.absent();
            }
        }
        if index == 0 {
            return semiring.one();
        }
        let env_index: usize = self.env_base + local.iter().zip(&self.env_strides).map(|(&c, s)| c * s).sum::<usize>();
        terms.clear();
        for j in 0..self.d {
            if local[j] > 0 {
                let pred = values[index - self.region_strides[j]];
                let w = self.weights[(env_index - self.env_strides[j]) * self.d + j];
                terms.push(semiring.extend(pred, w));
            }
        }
        semiring.combine(terms)
    }
}

fn level_buckets(region: &Region) -> Vec<Vec<usize>> {
    let max_level: usize = region.extents.iter().map(|e| e - 1).sum();
    let mut buckets = vec![Vec::new(); max_level + 1];
    let mut local = vec![0usize; region.dim()];
    for index in 0..region.len() {
        buckets[local.iter().sum::<usize>()].push(index);
        for k in (0..region.dim()).rev() {
            local[k] += 1;
            if local[k] < region.extents[k] {
                break;
            }
            local[k] = 0;
        }
    }
    buckets
}
