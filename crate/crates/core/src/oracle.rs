//! Brute-force ground truth by explicit path enumeration, for small targets.

use std::collections::BTreeMap;

use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::lattice::{segment_distance_unchecked, Vertex};

pub const DEFAULT_CAP: u64 = 12;

/// Every directed path from a source to an endpoint, listed in
/// lexicographic order of their step-direction sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnumeration {
    pub source: Vertex,
    pub endpoint: Vertex,
    pub paths: Vec<Vec<Vertex>>,
}

impl PathEnumeration {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// All directed paths from the origin to `x`, with `|x|_1` at most
/// [`DEFAULT_CAP`].
pub fn enumerate_paths(x: &Vertex) -> Result<PathEnumeration> {
    enumerate_between(&Vertex::origin(x.dim()), x, DEFAULT_CAP)
}

pub fn enumerate_between(u: &Vertex, v: &Vertex, cap: u64) -> Result<PathEnumeration> {
    if !u.le(v) {
        return Err(LabError::NotOrdered { from: u.0.clone(), target: v.0.clone() });
    }
    let length = v.sub(u).l1();
    if length > cap {
        return Err(LabError::CapExceeded { length, cap });
    }
    let mut paths = Vec::new();
    let mut current = vec![u.clone()];
    extend(&mut current, v, &mut paths);
    Ok(PathEnumeration { source: u.clone(), endpoint: v.clone(), paths })
}

fn extend(current: &mut Vec<Vertex>, target: &Vertex, out: &mut Vec<Vec<Vertex>>) {
    let last = current.last().expect("nonempty").clone();
    if last == *target {
        out.push(current.clone());
        return;
    }
    for j in 0..target.dim() {
        if last.0[j] < target.0[j] {
            current.push(last.step(j));
            extend(current, target, out);
            current.pop();
        }
    }
}

/// A directed path seen during a walk: the flattened coordinates of its
/// vertices and `tau(gamma)` summed in path order.
#[derive(Clone, Copy, Debug)]
pub struct PathRef<'a> {
    coords: &'a [i64],
    dim: usize,
    pub weight: f64,
}

impl<'a> PathRef<'a> {
    pub fn steps(&self) -> usize {
        self.coords.len() / self.dim - 1
    }

    pub fn vertices(&self) -> impl Iterator<Item = &'a [i64]> + 'a {
        self.coords.chunks_exact(self.dim)
    }

    pub fn source(&self) -> &'a [i64] {
        &self.coords[..self.dim]
    }

    pub fn endpoint(&self) -> &'a [i64] {
        &self.coords[self.coords.len() - self.dim..]
    }

    pub fn passes_through(&self, z: &[i64]) -> bool {
        self.vertices().any(|v| v == z)
    }
}

struct Walk<'e, F> {
    env: &'e Environment,
    hi: Vec<i64>,
    max_steps: usize,
    only_complete: bool,
    stack: Vec<i64>,
    visit: F,
}

impl<F: FnMut(PathRef<'_>)> Walk<'_, F> {
    fn run(&mut self, steps: usize, weight: f64) {
        let d = self.hi.len();
        if !self.only_complete || steps == self.max_steps {
            (self.visit)(PathRef { coords: &self.stack, dim: d, weight });
        }
        if steps == self.max_steps {
            return;
        }
        let base = self.stack.len() - d;
        for j in 0..d {
            if self.stack[base + j] >= self.hi[j] {
                continue;
            }
            let w = self.env.weight_at(&self.stack[base..], j).expect("edge inside box");
            self.stack.extend_from_within(base..base + d);
            self.stack[base + d + j] += 1;
            self.run(steps + 1, weight + w);
            self.stack.truncate(base + d);
        }
    }
}

/// Calls `visit` on every directed path from `u` to `v`, in lexicographic
/// order of step directions.
pub fn for_each_path_between<F: FnMut(PathRef<'_>)>(
    env: &Environment,
    u: &Vertex,
    v: &Vertex,
    cap: u64,
    visit: F,
) -> Result<()> {
    if !u.le(v) {
        return Err(LabError::NotOrdered { from: u.0.clone(), target: v.0.clone() });
    }
    let length = v.sub(u).l1();
    if length > cap {
        return Err(LabError::CapExceeded { length, cap });
    }
    check_in_box(env, v)?;
    let mut walk =
        Walk { env, hi: v.0.clone(), max_steps: length as usize, only_complete: true, stack: u.0.clone(), visit };
    walk.run(0, 0.0);
    Ok(())
}

/// Calls `visit` on every directed path that starts at `u`, stays in the
/// environment's box and has at most `max_steps` steps. A path is visited
/// before its extensions.
pub fn for_each_path_from<F: FnMut(PathRef<'_>)>(
    env: &Environment,
    u: &Vertex,
    max_steps: u64,
    visit: F,
) -> Result<()> {
    if max_steps > DEFAULT_CAP {
        return Err(LabError::CapExceeded { length: max_steps, cap: DEFAULT_CAP });
    }
    check_in_box(env, u)?;
    let hi = env.lattice().corner().0.clone();
    let mut walk = Walk { env, hi, max_steps: max_steps as usize, only_complete: false, stack: u.0.clone(), visit };
    walk.run(0, 0.0);
    Ok(())
}

fn check_in_box(env: &Environment, v: &Vertex) -> Result<()> {
    if env.lattice().index_of(v).is_none() {
        return Err(LabError::OutsideBox { vertex: v.0.clone(), corner: env.lattice().corner().0.clone() });
    }
    Ok(())
}

/// `tau(gamma)`, summed from the first edge to the last.
pub fn path_weight(env: &Environment, path: &[Vertex]) -> f64 {
    let mut total = 0.0;
    for w in path.windows(2) {
        let j = w[0].0.iter().zip(&w[1].0).position(|(a, b)| a != b).expect("unit step");
        total += env.weight(&w[0], j).expect("edge inside box");
    }
    total
}

/// `log sum exp(terms)` computed as `max + log(sum exp(t - max))` with the
/// shifted exponentials added smallest first.
pub fn careful_log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut parts: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    parts.sort_by(|a, b| a.total_cmp(b));
    max + parts.iter().sum::<f64>().ln()
}

/// Brute-force summary of the paths ending at one target.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSummary {
    pub paths: u64,
    pub log_z: f64,
    pub last_passage: f64,
    pub first_passage: f64,
}

/// Summaries for every target reachable from `u` in at most `max_steps`
/// steps, over the paths accepted by `keep`. Targets with no accepted path
/// are omitted.
pub fn oracle_table<K: FnMut(&PathRef<'_>) -> bool>(
    env: &Environment,
    beta: f64,
    u: &Vertex,
    max_steps: u64,
    mut keep: K,
) -> Result<BTreeMap<Vertex, TargetSummary>> {
    let mut terms: BTreeMap<Vec<i64>, (Vec<f64>, f64, f64)> = BTreeMap::new();
    for_each_path_from(env, u, max_steps, |p| {
        if keep(&p) {
            let entry = terms.entry(p.endpoint().to_vec()).or_insert((Vec::new(), f64::NEG_INFINITY, f64::INFINITY));
            entry.0.push(-beta * p.weight);
            entry.1 = entry.1.max(p.weight);
            entry.2 = entry.2.min(p.weight);
        }
    })?;
    Ok(terms
        .into_iter()
        .map(|(x, (t, max, min))| {
            let summary = TargetSummary {
                paths: t.len() as u64,
                log_z: careful_log_sum_exp(&t),
                last_passage: max,
                first_passage: min,
            };
            (Vertex(x), summary)
        })
        .collect())
}

fn fold_between<F: FnMut(PathRef<'_>)>(env: &Environment, u: &Vertex, v: &Vertex, visit: F) -> Result<()> {
    for_each_path_between(env, u, v, DEFAULT_CAP, visit)
}

/// `log Z(0, x)` by direct summation.
pub fn oracle_log_partition(env: &Environment, beta: f64, x: &Vertex) -> Result<f64> {
    oracle_log_partition_between(env, beta, &Vertex::origin(x.dim()), x)
}

pub fn oracle_log_partition_between(env: &Environment, beta: f64, u: &Vertex, v: &Vertex) -> Result<f64> {
    oracle_log_partition_filtered(env, beta, u, v, |_| true)
}

/// `log Z(u, v)` over the paths accepted by `keep`; `-inf` when none are.
pub fn oracle_log_partition_filtered<K: FnMut(&PathRef<'_>) -> bool>(
    env: &Environment,
    beta: f64,
    u: &Vertex,
    v: &Vertex,
    mut keep: K,
) -> Result<f64> {
    let mut terms = Vec::new();
    fold_between(env, u, v, |p| {
        if keep(&p) {
            terms.push(-beta * p.weight);
        }
    })?;
    Ok(careful_log_sum_exp(&terms))
}

/// Whether every vertex of `p` lies strictly within `r` of the segment from
/// its source to its endpoint.
pub fn within_cylinder(p: &PathRef<'_>, r: f64) -> bool {
    let source = p.source();
    let axis: Vec<f64> = p.endpoint().iter().zip(source).map(|(a, b)| (a - b) as f64).collect();
    let ss: f64 = axis.iter().map(|a| a * a).sum();
    let mut point = vec![0.0; axis.len()];
    p.vertices().all(|v| {
        for (k, c) in point.iter_mut().enumerate() {
            *c = (v[k] - source[k]) as f64;
        }
        segment_distance_unchecked(&point, &axis, ss) < r
    })
}

/// `mu_{0,x}` mass of paths with every vertex strictly within `r` of the
/// segment from 0 to `x`.
pub fn oracle_confinement(env: &Environment, beta: f64, x: &Vertex, r: f64) -> Result<f64> {
    let origin = Vertex::origin(x.dim());
    let total = oracle_log_partition_between(env, beta, &origin, x)?;
    let restricted = oracle_log_partition_filtered(env, beta, &origin, x, |p| within_cylinder(p, r))?;
    Ok(if restricted == f64::NEG_INFINITY { 0.0 } else { (restricted - total).exp() })
}

pub fn oracle_last_passage(env: &Environment, x: &Vertex) -> Result<f64> {
    oracle_last_passage_between(env, &Vertex::origin(x.dim()), x)
}

pub fn oracle_first_passage(env: &Environment, x: &Vertex) -> Result<f64> {
    let mut best = f64::INFINITY;
    fold_between(env, &Vertex::origin(x.dim()), x, |p| best = best.min(p.weight))?;
    Ok(best)
}

pub fn oracle_last_passage_between(env: &Environment, u: &Vertex, v: &Vertex) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    fold_between(env, u, v, |p| best = best.max(p.weight))?;
    Ok(best)
}

/// Exact law of `mu_{0,x}`: every path with its probability, in
/// enumeration order.
pub fn oracle_path_law(env: &Environment, beta: f64, x: &Vertex) -> Result<Vec<(Vec<Vertex>, f64)>> {
    let mut paths = Vec::new();
    fold_between(env, &Vertex::origin(x.dim()), x, |p| {
        paths.push((p.vertices().map(|c| Vertex(c.to_vec())).collect::<Vec<_>>(), -beta * p.weight));
    })?;
    let terms: Vec<f64> = paths.iter().map(|p| p.1).collect();
    let log_z = careful_log_sum_exp(&terms);
    Ok(paths.into_iter().map(|(p, t)| (p, (t - log_z).exp())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightDistribution;
    use crate::lattice::count_paths;

    fn v(c: &[i64]) -> Vertex {
        Vertex(c.to_vec())
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_paths(&v(&[1, 1])).unwrap().len(), 2);
        assert_eq!(enumerate_paths(&v(&[2, 2])).unwrap().len(), 6);
        assert_eq!(enumerate_paths(&v(&[2, 1, 1])).unwrap().len(), 12);
        let e = enumerate_paths(&v(&[1, 1])).unwrap();
        assert_eq!(e.paths[0], vec![v(&[0, 0]), v(&[1, 0]), v(&[1, 1])]);
        assert_eq!(e.paths[1], vec![v(&[0, 0]), v(&[0, 1]), v(&[1, 1])]);
        for x in [[3, 4], [6, 6], [0, 5]] {
            let n = enumerate_paths(&v(&x)).unwrap().len();
            assert_eq!(count_paths(&v(&x)).unwrap(), n.into());
        }
        assert!(matches!(enumerate_paths(&v(&[7, 6])), Err(LabError::CapExceeded { length: 13, cap: 12 })));
    }

    #[test]
    fn oracle_examples() {
        let zero = Environment::generate_on(&WeightDistribution::Constant { value: 0.0 }, &v(&[2, 2]), 0).unwrap();
        assert!((oracle_log_partition(&zero, 1.0, &v(&[1, 1])).unwrap() - 2f64.ln()).abs() < 1e-15);
        let law = oracle_path_law(&zero, 1.0, &v(&[2, 2])).unwrap();
        assert_eq!(law.len(), 6);
        for (_, p) in law {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        let env = Environment::generate_on(&WeightDistribution::Exponential { rate: 1.0 }, &v(&[4, 4]), 3).unwrap();
        assert_eq!(oracle_confinement(&env, 1.0, &v(&[4, 4]), 8.0).unwrap(), 1.0);
        assert_eq!(oracle_confinement(&env, 1.0, &v(&[1, 1]), 0.5).unwrap(), 0.0);
        let lpp = oracle_last_passage(&env, &v(&[4, 4])).unwrap();
        let fpp = oracle_first_passage(&env, &v(&[4, 4])).unwrap();
        assert!(fpp <= lpp);
    }

    #[test]
    fn table_matches_single_target_oracles() {
        let env =
            Environment::generate_on(&WeightDistribution::Uniform { lo: 0.0, hi: 1.0 }, &v(&[4, 4, 4]), 5).unwrap();
        let table = oracle_table(&env, 1.5, &v(&[0, 0, 0]), 6, |_| true).unwrap();
        let in_reach = (0..env.lattice().num_vertices()).filter(|&i| env.lattice().vertex_at(i).l1() <= 6).count();
        assert_eq!(table.len(), in_reach);
        for (x, s) in &table {
            assert_eq!(s.log_z, oracle_log_partition(&env, 1.5, x).unwrap());
            assert_eq!(s.last_passage, oracle_last_passage(&env, x).unwrap());
            assert_eq!(s.first_passage, oracle_first_passage(&env, x).unwrap());
            assert_eq!(count_paths(x).unwrap(), s.paths.into());
        }
        let e = enumerate_paths(&v(&[2, 1, 1])).unwrap();
        let mut seen = Vec::new();
        for_each_path_between(&env, &v(&[0, 0, 0]), &v(&[2, 1, 1]), DEFAULT_CAP, |p| {
            seen.push((p.vertices().map(|c| Vertex(c.to_vec())).collect::<Vec<_>>(), p.weight));
        })
        .unwrap();
        for ((path, w), expected) in seen.iter().zip(&e.paths) {
            assert_eq!(path, expected);
            assert_eq!(*w, path_weight(&env, expected));
        }
    }

    #[test]
    fn careful_sum_handles_empty_and_infinite() {
        assert_eq!(careful_log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(careful_log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((careful_log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
