//! Limit-shape estimates `f(x) = lim F(0, [n x]) / n` and shape containment.

use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleSpec, Model};
use super::stats::{mean, mean_se};
use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::kernel::{Region, SweepOrder};
use crate::lattice::{round_to_lattice, Vertex};
use crate::lpp::last_passage;
use crate::polymer::{free_energy, log_partition_region, ConstraintMask, PolymerParams};

/// A (possibly estimated) limiting free energy.
pub trait ShapeFunction {
    /// `f(x)` and its standard error.
    fn eval(&self, x: &[f64]) -> Result<(f64, f64)>;
}

/// `p . log(d p) = log d - H(p)`, the divergence from the uniform law.
pub fn entropy_deficit(p: &[f64]) -> f64 {
    let d = p.len() as f64;
    p.iter().filter(|&&v| v > 0.0).map(|&v| v * (d * v - 1.0).ln_1p()).sum()
}

/// Shannon entropy with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Exact limit shape of the polymer in a constant environment `tau = c`:
/// `f(x) = c |x|_1 + (|x|_1 / beta) (log d - H(x / |x|_1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEnvShape {
    pub c: f64,
    pub beta: f64,
}

impl ConstantEnvShape {
    pub fn value(&self, x: &[f64]) -> f64 {
        let l1: f64 = x.iter().sum();
        if l1 == 0.0 {
            return 0.0;
        }
        let p: Vec<f64> = x.iter().map(|v| v / l1).collect();
        self.c * l1 + l1 / self.beta * entropy_deficit(&p)
    }
}

impl ShapeFunction for ConstantEnvShape {
    fn eval(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LabError::InvalidInput(format!("shape argument {x:?} is not in the nonnegative orthant")));
        }
        Ok((self.value(x), 0.0))
    }
}

/// Relative gap between the size-`n` estimate and the final one, per
/// direction: `F(0, [n x]) / (n fhat(x)) - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentDiagnostic {
    pub n: u64,
    pub gaps: Vec<f64>,
    pub max_abs_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEstimate {
    pub model: Model,
    pub beta: f64,
    pub directions: Vec<Vec<f64>>,
    /// Lattice point `[n x]` evaluated for each direction.
    pub points: Vec<Vertex>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Size used; 0 for an analytic shape.
    pub n: u64,
    /// `F(0, [n x]) / n` per direction and replicate.
    pub per_replicate: Vec<Vec<f64>>,
    /// Directions with a zero coordinate.
    pub boundary: Vec<bool>,
    pub containment: Vec<ContainmentDiagnostic>,
}

impl ShapeEstimate {
    /// Shape evaluated from a known function on the given directions.
    pub fn from_function(f: &dyn ShapeFunction, directions: &[Vec<f64>], model: Model, beta: f64) -> Result<Self> {
        check_directions(directions, directions.first().map_or(0, |d| d.len()))?;
        let mut values = Vec::with_capacity(directions.len());
        let mut se = Vec::with_capacity(directions.len());
        for x in directions {
            let (v, s) = f.eval(x)?;
            values.push(v);
            se.push(s);
        }
        Ok(Self {
            model,
            beta,
            directions: directions.to_vec(),
            points: Vec::new(),
            values,
            se,
            n: 0,
            per_replicate: Vec::new(),
            boundary: directions.iter().map(|x| x.contains(&0.0)).collect(),
            containment: Vec::new(),
        })
    }

    fn lookup(&self, x: &[f64]) -> Option<(usize, f64)> {
        let l1: f64 = x.iter().sum();
        if l1 <= 0.0 {
            return None;
        }
        self.directions.iter().enumerate().find_map(|(i, dir)| {
            let dl1: f64 = dir.iter().sum();
            let same = dir.len() == x.len() && dir.iter().zip(x).all(|(a, b)| (a / dl1 - b / l1).abs() < 1e-9);
            same.then_some((i, l1 / dl1))
        })
    }
}

impl ShapeFunction for ShapeEstimate {
    /// Looks `x` up along the estimated directions using `f(lambda x) = lambda f(x)`.
    fn eval(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.iter().all(|&c| c == 0.0) {
            return Ok((0.0, 0.0));
        }
        let (i, scale) = self.lookup(x).ok_or_else(|| {
            LabError::InvalidInput(format!("direction of {x:?} is not among the estimated directions"))
        })?;
        Ok((scale * self.values[i], scale * self.se[i]))
    }
}

fn check_directions(directions: &[Vec<f64>], d: usize) -> Result<()> {
    if directions.is_empty() {
        return Err(LabError::InvalidInput("no directions given".into()));
    }
    for x in directions {
        if x.len() != d || x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || x.iter().all(|&v| v == 0.0) {
            return Err(LabError::InvalidInput(format!(
                "direction {x:?} must be a nonzero vector in the {d}-dimensional orthant"
            )));
        }
    }
    Ok(())
}

fn scaled_points(directions: &[Vec<f64>], n: u64) -> Result<(Vec<Vertex>, Vertex)> {
    let points: Vec<Vertex> = directions
        .iter()
        .map(|x| round_to_lattice(&x.iter().map(|c| c * n as f64).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let d = directions[0].len();
    let corner = Vertex((0..d).map(|j| points.iter().map(|p| p.0[j]).max().unwrap_or(0)).collect());
    Ok((points, corner))
}

/// `F(0, p)` (or `T(0, p)`) for several targets from one field.
pub fn values_at(env: &Environment, model: Model, beta: f64, corner: &Vertex, targets: &[Vertex]) -> Result<Vec<f64>> {
    let origin = Vertex::origin(corner.dim());
    match model {
        Model::Polymer => {
            let field = log_partition_region(
                env,
                PolymerParams::new(beta)?,
                &origin,
                corner,
                &ConstraintMask::Full,
                SweepOrder::RowMajor,
            )?;
            targets.iter().map(|t| free_energy(&field, t)).collect()
        }
        Model::Lpp => {
            let field = last_passage(env, &origin, corner)?;
            targets.iter().map(|t| field.value(t)).collect()
        }
    }
}

fn per_direction(
    spec: &EnsembleSpec,
    size_index: usize,
    directions: &[Vec<f64>],
) -> Result<(Vec<Vertex>, Vec<Vec<f64>>)> {
    let n = spec.sizes[size_index];
    let (points, corner) = scaled_points(directions, n)?;
    let reps = spec.map_replicates(size_index as u64, &corner, |_, env| {
        let v = values_at(env, spec.model, spec.beta, &corner, &points)?;
        Ok(v.into_iter().map(|f| f / n as f64).collect::<Vec<f64>>())
    })?;
    let by_direction = (0..directions.len()).map(|k| reps.iter().map(|r| r[k]).collect()).collect();
    Ok((points, by_direction))
}

/// `fhat(x)` = replicate mean of `F(0, [n x]) / n` at the largest size, with
/// containment diagnostics at every smaller size.
pub fn estimate_limit_shape(spec: &EnsembleSpec, directions: &[Vec<f64>]) -> Result<ShapeEstimate> {
    spec.validate_with(1)?;
    check_directions(directions, spec.dimension)?;
    let last = spec.sizes.len() - 1;
    let (points, per_replicate) = per_direction(spec, last, directions)?;
    let values: Vec<f64> = per_replicate.iter().map(|v| mean(v)).collect();
    let se = per_replicate.iter().map(|v| mean_se(v)).collect();
    let mut containment = Vec::new();
    for i in 0..last {
        let (_, reps) = per_direction(spec, i, directions)?;
        let gaps: Vec<f64> = reps.iter().zip(&values).map(|(r, f)| mean(r) / f - 1.0).collect();
        let max_abs_gap = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max);
        containment.push(ContainmentDiagnostic { n: spec.sizes[i], gaps, max_abs_gap });
    }
    Ok(ShapeEstimate {
        model: spec.model,
        beta: spec.beta,
        directions: directions.to_vec(),
        points,
        values,
        se,
        n: spec.sizes[last],
        per_replicate,
        boundary: directions.iter().map(|x| x.contains(&0.0)).collect(),
        containment,
    })
}

const MAX_CONTAINMENT_SIDE: i64 = 1 << 20;

/// Smallest side `s` such that every lattice point on a far face of
/// `[0, s]^d` has `f(x) > bound`, the box `shape_containment` needs for
/// `bound = (1 + eps) t`.
pub fn containment_side(reference: &dyn ShapeFunction, d: usize, bound: f64) -> Result<i64> {
    if d == 0 || !(bound > 0.0 && bound.is_finite()) {
        return Err(LabError::InvalidInput("need d >= 1 and a finite bound > 0".into()));
    }
    let mut top: f64 = 0.0;
    for j in 0..d {
        let mut axis = vec![0.0; d];
        axis[j] = 1.0;
        let v = reference.eval(&axis)?.0;
        if !(v > 0.0) {
            return Err(LabError::Degenerate(format!("the limit shape is {v} along axis {}", j + 1)));
        }
        top = top.max(v);
    }
    let mut side = ((bound / top).floor() as i64).max(1);
    while !far_faces_clear(reference, d, side, bound)? {
        side += 1;
        if side > MAX_CONTAINMENT_SIDE {
            return Err(LabError::ResourceCap(format!("no box side up to {MAX_CONTAINMENT_SIDE} clears f = {bound}")));
        }
    }
    Ok(side)
}

fn far_faces_clear(reference: &dyn ShapeFunction, d: usize, side: i64, bound: f64) -> Result<bool> {
    let base = side as usize + 1;
    let count = base.pow(d as u32 - 1);
    let mut x = vec![0.0; d];
    for j in 0..d {
        for index in 0..count {
            let mut rest = index;
            for (k, c) in x.iter_mut().enumerate() {
                if k == j {
                    *c = side as f64;
                } else {
                    *c = (rest % base) as f64;
                    rest /= base;
                }
            }
            if reference.eval(&x)?.0 <= bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Lattice check of `(1 - eps) B within B_t / t within (1 + eps) B`, with
/// `B_t = {x : F(0, x) <= t}` from one environment and `B = {f <= 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub t: f64,
    pub epsilon: f64,
    /// Largest `f(x) / t` over lattice points with `F(0, x) <= t`.
    pub outer_ratio: f64,
    /// Smallest `f(x) / t` over lattice points with `F(0, x) > t`.
    pub inner_ratio: f64,
    /// Smallest `eps` for which both inclusions hold on the lattice.
    pub required_epsilon: f64,
    pub holds: bool,
    pub points_checked: usize,
}

pub fn shape_containment(
    env: &Environment,
    model: Model,
    beta: f64,
    t: f64,
    reference: &dyn ShapeFunction,
    epsilon: f64,
) -> Result<ContainmentReport> {
    if !(t > 0.0 && t.is_finite()) || !(0.0..1.0).contains(&epsilon) {
        return Err(LabError::InvalidInput("need t > 0 and 0 <= epsilon < 1".into()));
    }
    let corner = env.lattice().corner().clone();
    let d = corner.dim();
    let origin = Vertex::origin(d);
    let region = Region::new(env, &origin, &corner)?;
    let targets: Vec<Vertex> = (0..region.len()).map(|i| region.vertex_at(i)).collect();
    let values = values_at(env, model, beta, &corner, &targets)?;
    let mut outer: f64 = 0.0;
    let mut inner = f64::INFINITY;
    let mut checked = 0;
    for (x, big_f) in targets.iter().zip(values) {
        if x.l1() == 0 {
            continue;
        }
        let f = reference.eval(&x.to_f64())?.0;
        let on_face = x.0.iter().zip(&corner.0).any(|(a, b)| a == b);
        if on_face && f <= (1.0 + epsilon) * t {
            return Err(LabError::InvalidInput(format!(
                "box with corner {corner} does not contain (1 + eps) t B: f{x} = {f}"
            )));
        }
        checked += 1;
        if big_f <= t {
            outer = outer.max(f / t);
        } else {
            inner = inner.min(f / t);
        }
    }
    let required_epsilon = (outer - 1.0).max(1.0 - inner).max(0.0);
    Ok(ContainmentReport {
        t,
        epsilon,
        outer_ratio: outer,
        inner_ratio: inner,
        required_epsilon,
        holds: outer <= 1.0 + epsilon && inner >= 1.0 - epsilon,
        points_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightDistribution;
    use crate::lattice::log_count_paths;
    use std::f64::consts::LN_2;

    #[test]
    fn closed_form_values() {
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        assert_eq!(f.value(&[1.0, 1.0]), 2.0);
        assert!((f.value(&[1.0, 0.0]) - (1.0 + LN_2)).abs() < 1e-15);
        let spot = f.value(&[1.1, 0.9]) - f.value(&[1.0, 1.0]);
        assert!((spot - 2.0 * (LN_2 - entropy(&[0.55, 0.45]))).abs() < 1e-15);
        assert!((spot - 0.010016).abs() < 1e-6, "{spot}");
    }

    #[test]
    fn constant_diagonal_and_axis_shape() {
        let spec = EnsembleSpec::new(2, WeightDistribution::Constant { value: 1.0 }, Model::Polymer, vec![50, 200], 2);
        let est = estimate_limit_shape(&spec, &[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let n = 200.0;
        let exact_gap = (2.0 * n * LN_2 - log_count_paths(&Vertex(vec![200, 200])).unwrap()) / n;
        assert!((est.values[0] - 2.0 - exact_gap).abs() < 1e-12);
        assert!(est.values[0] - 2.0 < 0.02 && est.values[0] > 2.0);
        assert!((est.values[1] - (1.0 + LN_2)).abs() < 1e-12);
        assert_eq!(est.boundary, vec![false, true]);
        assert_eq!(est.containment.len(), 1);
        assert_eq!(est.se, vec![0.0, 0.0]);
    }

    #[test]
    fn homogeneity_lookup() {
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        let est = ShapeEstimate::from_function(&f, &[vec![1.0, 1.0], vec![0.75, 0.25]], Model::Polymer, 1.0).unwrap();
        let (v, _) = est.eval(&[3.0, 1.0]).unwrap();
        assert!((v - f.value(&[3.0, 1.0])).abs() < 1e-12);
        assert!(est.eval(&[1.0, 3.0]).is_err());
        assert_eq!(est.eval(&[0.0, 0.0]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn containment_small_box() {
        let env =
            Environment::generate_on(&WeightDistribution::Constant { value: 1.0 }, &Vertex(vec![30, 30]), 0).unwrap();
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        let r = shape_containment(&env, Model::Polymer, 1.0, 20.0, &f, 0.2).unwrap();
        assert!(r.outer_ratio <= 1.0);
        assert!(shape_containment(&env, Model::Polymer, 1.0, 40.0, &f, 0.2).is_err());
    }
}
