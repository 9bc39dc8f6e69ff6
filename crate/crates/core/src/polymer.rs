//! Log-partition functions and free energies of the directed polymer.
//!
//! `logZ(v) = log sum_j exp(logZ(v - e_j) - beta * tau(v - e_j, v))`, swept
//! over a box with the source translated to the region's low corner. The
//! free energy is `F(u, v) = -(1/beta) (logZ(v) - |v - u|_1 log d)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::kernel::{sweep, LogSumExp, Region, SweepOrder};
use crate::lattice::{Cylinder, Slab, Vertex};
use crate::numfmt::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolymerParams {
    pub beta: f64,
}

impl PolymerParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(LabError::InvalidInput(format!("beta must be finite and > 0, got {beta}")));
        }
        Ok(Self { beta })
    }
}

impl Default for PolymerParams {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

/// Restriction on the admissible path set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintMask {
    #[default]
    Full,
    /// Every vertex of the path lies in the cylinder.
    Cylinder(Cylinder),
    /// The path meets both plane pieces of the slab.
    SlabPass(Slab),
    /// The path visits every waypoint, in order.
    ThroughPoints(Vec<Vertex>),
}

impl ConstraintMask {
    fn validate(&self, source: &Vertex) -> Result<()> {
        match self {
            ConstraintMask::Full | ConstraintMask::SlabPass(_) => Ok(()),
            ConstraintMask::Cylinder(c) => {
                if c.start.len() != source.dim() {
                    return Err(LabError::InvalidInput("cylinder dimension mismatch".into()));
                }
                Ok(())
            }
            ConstraintMask::ThroughPoints(points) => {
                let mut prev = source;
                for z in points {
                    if !prev.le(z) {
                        return Err(LabError::InvalidInput(format!(
                            "waypoints must be componentwise nondecreasing from the source: {prev} then {z}"
                        )));
                    }
                    prev = z;
                }
                Ok(())
            }
        }
    }

    fn admits(&self, v: &[i64]) -> bool {
        match self {
            ConstraintMask::Full => true,
            ConstraintMask::Cylinder(c) => c.contains_coords(v),
            ConstraintMask::SlabPass(s) => s.admits(v),
            ConstraintMask::ThroughPoints(points) => {
                let level: i64 = v.iter().sum();
                points.iter().all(|z| z.level() != level || z.coords() == v)
            }
        }
    }

    /// Smallest target level `v . e` at which a path can satisfy the mask.
    fn required_level(&self) -> Option<i64> {
        match self {
            ConstraintMask::SlabPass(s) => Some(s.far),
            ConstraintMask::ThroughPoints(points) => points.last().map(|z| z.level()),
            _ => None,
        }
    }
}

/// `logZ(source, v)` for every `v` in a box above the source.
#[derive(Clone, Debug)]
pub struct FreeEnergyField {
    region: Region,
    beta: f64,
    mask: ConstraintMask,
    log_z: Vec<f64>,
}

impl FreeEnergyField {
    pub fn source(&self) -> &Vertex {
        &self.region.lo
    }

    pub fn corner(&self) -> &Vertex {
        &self.region.hi
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mask(&self) -> &ConstraintMask {
        &self.mask
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    fn index(&self, v: &Vertex) -> Result<usize> {
        if v.dim() != self.dim() {
            return Err(LabError::InvalidInput(format!("{v} has the wrong dimension")));
        }
        if !self.source().le(v) {
            return Err(LabError::NotOrdered { from: self.source().0.clone(), target: v.0.clone() });
        }
        self.region
            .local_index(v)
            .ok_or_else(|| LabError::OutsideBox { vertex: v.0.clone(), corner: self.corner().0.clone() })
    }

    /// `log Z(source, v)` over admissible paths; `-inf` when none exist.
    pub fn log_z(&self, v: &Vertex) -> Result<f64> {
        let i = self.index(v)?;
        if let Some(level) = self.mask.required_level() {
            if v.level() < level {
                return Ok(f64::NEG_INFINITY);
            }
        }
        Ok(self.log_z[i])
    }

    /// Writes `x1,..,xd,logz` rows in row-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        let head: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(out, "{},logz", head.join(","))?;
        for index in 0..self.region.len() {
            let v = self.region.vertex_at(index);
            let value = self.log_z(&v)?;
            for c in v.coords() {
                write!(out, "{c},")?;
            }
            writeln!(out, "{}", fmt_f64(value))?;
        }
        Ok(())
    }
}

/// Field from `source` over the rest of the environment's box.
pub fn log_partition(
    env: &Environment,
    params: PolymerParams,
    source: &Vertex,
    mask: &ConstraintMask,
) -> Result<FreeEnergyField> {
    log_partition_region(env, params, source, env.lattice().corner(), mask, SweepOrder::RowMajor)
}

/// Field from `source` over the box `[source, corner]`.
pub fn log_partition_region(
    env: &Environment,
    params: PolymerParams,
    source: &Vertex,
    corner: &Vertex,
    mask: &ConstraintMask,
    order: SweepOrder,
) -> Result<FreeEnergyField> {
    let params = PolymerParams::new(params.beta)?;
    env.lattice().check_contains(source)?;
    mask.validate(source)?;
    let region = Region::new(env, source, corner)?;
    let semiring = LogSumExp { beta: params.beta };
    let log_z = match mask {
        ConstraintMask::Full => sweep(env, &region, &semiring, None, order),
        _ => {
            let admit = |v: &[i64]| mask.admits(v);
            sweep(env, &region, &semiring, Some(&admit), order)
        }
    };
    Ok(FreeEnergyField { region, beta: params.beta, mask: mask.clone(), log_z })
}

/// `F(source, target) = -(1/beta) (logZ - |target - source|_1 log d)`;
/// `+inf` when no admissible path exists.
pub fn free_energy(field: &FreeEnergyField, target: &Vertex) -> Result<f64> {
    let log_z = field.log_z(target)?;
    Ok(normalize(log_z, target.sub(field.source()).l1(), field.dim(), field.beta))
}

pub(crate) fn normalize(log_z: f64, length: u64, d: usize, beta: f64) -> f64 {
    if log_z == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    -(log_z - length as f64 * (d as f64).ln()) / beta
}

/// `F(u, v)` from a field restricted to `[u, v]`.
pub fn point_to_point_free_energy(env: &Environment, params: PolymerParams, u: &Vertex, v: &Vertex) -> Result<f64> {
    if !u.le(v) {
        return Err(LabError::NotOrdered { from: u.0.clone(), target: v.0.clone() });
    }
    let field = log_partition_region(env, params, u, v, &ConstraintMask::Full, SweepOrder::RowMajor)?;
    free_energy(&field, v)
}

/// Log-partition function over paths forced through every waypoint, by
/// chaining one segment field per consecutive pair.
pub fn through_points_log_partition(
    env: &Environment,
    params: PolymerParams,
    source: &Vertex,
    waypoints: &[Vertex],
    target: &Vertex,
) -> Result<f64> {
    let mut stops = Vec::with_capacity(waypoints.len() + 2);
    stops.push(source);
    stops.extend(waypoints);
    stops.push(target);
    for pair in stops.windows(2) {
        if !pair[0].le(pair[1]) {
            return Err(LabError::InvalidInput(format!(
                "waypoints must be componentwise nondecreasing: {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let mut total = 0.0;
    for pair in stops.windows(2) {
        let field = log_partition_region(env, params, pair[0], pair[1], &ConstraintMask::Full, SweepOrder::RowMajor)?;
        total += field.log_z(pair[1])?;
    }
    Ok(total)
}

/// `F(source, target; z_1, ..., z_k)` with the `d^{-|target - source|_1}`
/// normalization over the whole length.
pub fn through_points_free_energy(
    env: &Environment,
    params: PolymerParams,
    source: &Vertex,
    waypoints: &[Vertex],
    target: &Vertex,
) -> Result<f64> {
    let log_z = through_points_log_partition(env, params, source, waypoints, target)?;
    Ok(normalize(log_z, target.sub(source).l1(), source.dim(), params.beta))
}

/// `mu_{0,x}(gamma in C_x[r])`.
pub fn confinement_probability(env: &Environment, params: PolymerParams, endpoint: &Vertex, r: f64) -> Result<f64> {
    let source = Vertex::origin(endpoint.dim());
    Ok(confinement_curve(env, params, &source, endpoint, &[r])?[0])
}

/// `mu_{u,v}(gamma in u + C_{v-u}[r])` for every radius in `radii`, sharing
/// one unrestricted field.
pub fn confinement_curve(
    env: &Environment,
    params: PolymerParams,
    source: &Vertex,
    endpoint: &Vertex,
    radii: &[f64],
) -> Result<Vec<f64>> {
    let full = log_partition_region(env, params, source, endpoint, &ConstraintMask::Full, SweepOrder::RowMajor)?;
    let total = full.log_z(endpoint)?;
    if total == f64::NEG_INFINITY {
        return Err(LabError::Unreachable(endpoint.0.clone()));
    }
    radii
        .iter()
        .map(|&r| {
            let cyl = Cylinder::new(source.to_f64(), endpoint.to_f64(), r)?;
            let field = log_partition_region(
                env,
                params,
                source,
                endpoint,
                &ConstraintMask::Cylinder(cyl),
                SweepOrder::RowMajor,
            )?;
            let restricted = field.log_z(endpoint)?;
            Ok(if restricted == f64::NEG_INFINITY { 0.0 } else { (restricted - total).exp().min(1.0) })
        })
        .collect()
}
