//! I.i.d. edge-weight environments with counter-based seeding.
//!
//! The weight of the directed edge `(v, v + e_j)` is a pure function of
//! `(seed, v, j)`, so any sub-box regenerates identically and generation
//! order never matters. Truncated and shifted environments are pointwise
//! transforms of the same draws.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{LabError, Result};
use crate::lattice::{LatticeBox, Vertex, MAX_DIM};
use crate::numfmt::fmt_f64;
use crate::rng::{key_fold, key_start, unit_open, SplitMix64};

/// Law of a single edge weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightDistribution {
    Constant {
        value: f64,
    },
    /// `high` with probability `p`, otherwise `low`.
    Bernoulli {
        p: f64,
        low: f64,
        high: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// `log G` with `G ~ Gamma(shape, 1)`, so `exp(-tau)` is inverse-gamma.
    LogGamma {
        shape: f64,
    },
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidDistribution(msg));
        let finite = |x: f64| x.is_finite();
        match *self {
            WeightDistribution::Constant { value } => {
                if !finite(value) || value < 0.0 {
                    return bad(format!("constant weight must be finite and >= 0, got {value}"));
                }
            }
            WeightDistribution::Bernoulli { p, low, high } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("bernoulli p must lie in [0,1], got {p}"));
                }
                if !finite(low) || !finite(high) || low < 0.0 || low >= high {
                    return bad(format!("bernoulli values must satisfy 0 <= low < high, got {low}, {high}"));
                }
            }
            WeightDistribution::Uniform { lo, hi } => {
                if !finite(lo) || !finite(hi) || lo < 0.0 || lo > hi {
                    return bad(format!("uniform bounds must satisfy 0 <= lo <= hi, got {lo}, {hi}"));
                }
            }
            WeightDistribution::Exponential { rate } => {
                if !finite(rate) || rate <= 0.0 {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            WeightDistribution::Gamma { shape, scale } => {
                if !finite(shape) || !finite(scale) || shape <= 0.0 || scale <= 0.0 {
                    return bad(format!("gamma shape and scale must be > 0, got {shape}, {scale}"));
                }
            }
            WeightDistribution::LogGamma { shape } => {
                if !finite(shape) || shape <= 0.0 {
                    return bad(format!("log-gamma shape must be > 0, got {shape}"));
                }
            }
        }
        Ok(())
    }

    /// Draws one weight from the 64-bit edge key.
    #[inline]
    pub fn sample(&self, key: u64) -> f64 {
        match *self {
            WeightDistribution::Constant { value } => value,
            WeightDistribution::Bernoulli { p, low, high } => {
                if unit_open(key) < p {
                    high
                } else {
                    low
                }
            }
            WeightDistribution::Uniform { lo, hi } => lo + (hi - lo) * unit_open(key),
            WeightDistribution::Exponential { rate } => -unit_open(key).ln() / rate,
            WeightDistribution::Gamma { shape, scale } => {
                let g = Gamma::new(shape, scale).expect("validated gamma parameters");
                g.sample(&mut SplitMix64::new(key))
            }
            WeightDistribution::LogGamma { shape } => {
                let g = Gamma::new(shape, 1.0).expect("validated log-gamma shape");
                g.sample(&mut SplitMix64::new(key)).ln()
            }
        }
    }

    /// Almost-sure upper bound `L` with `P(tau <= L) = 1`, if one exists.
    pub fn upper_bound(&self) -> Option<f64> {
        match *self {
            WeightDistribution::Constant { value } => Some(value),
            WeightDistribution::Bernoulli { low, high, p } => Some(if p > 0.0 { high } else { low }),
            WeightDistribution::Uniform { hi, .. } => Some(hi),
            _ => None,
        }
    }

    /// Whether weights are almost surely nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, WeightDistribution::LogGamma { .. })
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            WeightDistribution::Constant { .. } => true,
            WeightDistribution::Bernoulli { p, .. } => p == 0.0 || p == 1.0,
            WeightDistribution::Uniform { lo, hi } => lo == hi,
            _ => false,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightDistribution::Constant { value } => value,
            WeightDistribution::Bernoulli { p, low, high } => low + p * (high - low),
            WeightDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            WeightDistribution::Exponential { rate } => 1.0 / rate,
            WeightDistribution::Gamma { shape, scale } => shape * scale,
            WeightDistribution::LogGamma { shape } => digamma(shape),
        }
    }
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightDistribution::Constant { value } => write!(f, "constant:{value}"),
            WeightDistribution::Bernoulli { p, low, high } => write!(f, "bernoulli:{p},{low},{high}"),
            WeightDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            WeightDistribution::Exponential { rate } => write!(f, "exponential:{rate}"),
            WeightDistribution::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            WeightDistribution::LogGamma { shape } => write!(f, "log-gamma:{shape}"),
        }
    }
}

impl FromStr for WeightDistribution {
    type Err = LabError;

    /// Parses the compact form `kind:param,param`, e.g. `exponential:1` or
    /// `bernoulli:0.5,0,1`, or a JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let dist: WeightDistribution =
                serde_json::from_str(s).map_err(|e| LabError::InvalidDistribution(e.to_string()))?;
            dist.validate()?;
            return Ok(dist);
        }
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let nums = params
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| LabError::InvalidDistribution(format!("bad parameter {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(LabError::InvalidDistribution(format!("{kind} takes {k} parameter(s), got {}", nums.len())))
            }
        };
        let dist = match kind {
            "constant" => {
                want(1)?;
                WeightDistribution::Constant { value: nums[0] }
            }
            "bernoulli" => {
                want(3)?;
                WeightDistribution::Bernoulli { p: nums[0], low: nums[1], high: nums[2] }
            }
            "uniform" => {
                want(2)?;
                WeightDistribution::Uniform { lo: nums[0], hi: nums[1] }
            }
            "exponential" => {
                want(1)?;
                WeightDistribution::Exponential { rate: nums[0] }
            }
            "gamma" => {
                want(2)?;
                WeightDistribution::Gamma { shape: nums[0], scale: nums[1] }
            }
            "log-gamma" => {
                want(1)?;
                WeightDistribution::LogGamma { shape: nums[0] }
            }
            other => return Err(LabError::InvalidDistribution(format!("unknown distribution {other:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Truncation level `L` for the coupling `tau^L = min(tau, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub level: f64,
}

impl TruncationSpec {
    pub fn new(level: f64) -> Result<Self> {
        if !level.is_finite() || level < 0.0 {
            return Err(LabError::InvalidInput(format!("truncation level must be finite and >= 0, got {level}")));
        }
        Ok(Self { level })
    }
}

/// Pointwise transforms applied after generation, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Transform {
    Truncate { level: f64 },
    Shift { by: f64 },
    Permute { axes: Vec<usize> },
}

/// Edge weights on a box. Edge `(v, v + e_j)` is stored at `index(v) * d + j`;
/// slots for edges leaving the box hold NaN and are never read.
#[derive(Clone, Debug)]
pub struct Environment {
    lattice: LatticeBox,
    dist: WeightDistribution,
    seed: u64,
    transforms: Vec<Transform>,
    weights: Vec<f64>,
}

impl Environment {
    pub fn generate(dist: &WeightDistribution, lattice: &LatticeBox, seed: u64) -> Result<Self> {
        dist.validate()?;
        let d = lattice.dim();
        let corner = lattice.corner().coords().to_vec();
        let strides = lattice.strides();
        let mut weights = vec![f64::NAN; lattice.num_vertices() * d];
        let base = key_start(seed);
        weights.par_chunks_mut(d).enumerate().for_each(|(index, slots)| {
            let mut rest = index;
            let mut vkey = base;
            let mut coords = [0i64; MAX_DIM];
            for (k, &s) in strides.iter().enumerate() {
                let c = (rest / s) as i64;
                rest %= s;
                coords[k] = c;
                vkey = key_fold(vkey, c as u64);
            }
            for (j, slot) in slots.iter_mut().enumerate() {
                if coords[j] < corner[j] {
                    *slot = dist.sample(key_fold(vkey, j as u64));
                }
            }
        });
        Ok(Self { lattice: lattice.clone(), dist: dist.clone(), seed, transforms: Vec::new(), weights })
    }

    /// Convenience: box with the given corner.
    pub fn generate_on(dist: &WeightDistribution, corner: &Vertex, seed: u64) -> Result<Self> {
        Self::generate(dist, &LatticeBox::new(corner.clone())?, seed)
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn distribution(&self) -> &WeightDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    /// Whether weights are known to be nonnegative (needed for `F >= 0`).
    pub fn is_nonnegative(&self) -> bool {
        self.edges().all(|(_, _, w)| w >= 0.0)
    }

    pub(crate) fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the edge `(v, v + e_j)`, if that edge lies in the box.
    pub fn weight(&self, v: &Vertex, j: usize) -> Option<f64> {
        if j >= self.dim() || !self.lattice.contains(&v.step(j)) {
            return None;
        }
        let i = self.lattice.index_of(v)?;
        Some(self.weights[i * self.dim() + j])
    }

    /// Weight of the edge leaving the coordinates `v` in direction `j`.
    pub fn weight_at(&self, v: &[i64], j: usize) -> Option<f64> {
        let d = self.dim();
        if j >= d || v.len() != d || v[j] >= self.lattice.corner().0[j] {
            return None;
        }
        let i = self.lattice.index_of_coords(v)?;
        Some(self.weights[i * d + j])
    }

    /// All in-box edges as `(tail vertex, direction, weight)` in index order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, usize, f64)> + '_ {
        let d = self.dim();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_nan())
            .map(move |(k, &w)| (self.lattice.vertex_at(k / d), k % d, w))
    }

    pub fn num_edges(&self) -> usize {
        self.weights.iter().filter(|w| !w.is_nan()).count()
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.weights.iter().copied().filter(|w| !w.is_nan()).reduce(f64::min)
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.weights.iter().copied().filter(|w| !w.is_nan()).reduce(f64::max)
    }

    fn map_weights(&self, transform: Transform, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let weights = self.weights.par_iter().map(|&w| if w.is_nan() { w } else { f(w) }).collect();
        let mut transforms = self.transforms.clone();
        transforms.push(transform);
        Self { lattice: self.lattice.clone(), dist: self.dist.clone(), seed: self.seed, transforms, weights }
    }

    /// Coupled environment with every weight replaced by `min(tau_e, L)`.
    pub fn truncate(&self, spec: TruncationSpec) -> Self {
        let level = spec.level;
        self.map_weights(Transform::Truncate { level }, move |w| w.min(level))
    }

    /// Coupled environment with every weight replaced by `tau_e + c`.
    pub fn shift(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(LabError::InvalidInput(format!("shift must be finite, got {c}")));
        }
        if let Some(min) = self.min_weight() {
            if self.dist.is_nonnegative() && min + c < 0.0 {
                return Err(LabError::NegativeShift { shift: c, min_weight: min });
            }
        }
        Ok(self.map_weights(Transform::Shift { by: c }, move |w| w + c))
    }

    /// Relabels coordinates: new axis `k` is old axis `axes[k]`.
    pub fn permute_axes(&self, axes: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut seen = vec![false; d];
        if axes.len() != d || axes.iter().any(|&a| a >= d || std::mem::replace(&mut seen[a], true)) {
            return Err(LabError::InvalidInput(format!("{axes:?} is not a permutation of 0..{d}")));
        }
        let old = self.lattice.corner().coords();
        let corner = Vertex(axes.iter().map(|&a| old[a]).collect());
        let lattice = LatticeBox::new(corner)?;
        let mut weights = vec![f64::NAN; self.weights.len()];
        for (index, slots) in weights.chunks_mut(d).enumerate() {
            let nv = lattice.vertex_at(index);
            let mut ov = vec![0i64; d];
            for k in 0..d {
                ov[axes[k]] = nv.0[k];
            }
            let oi = self.lattice.index_of(&Vertex(ov)).expect("permuted vertex in box");
            for k in 0..d {
                slots[k] = self.weights[oi * d + axes[k]];
            }
        }
        let mut transforms = self.transforms.clone();
        transforms.push(Transform::Permute { axes: axes.to_vec() });
        Ok(Self { lattice, dist: self.dist.clone(), seed: self.seed, transforms, weights })
    }

    /// Bitwise equality of the weight maps.
    pub fn same_weights(&self, other: &Environment) -> bool {
        self.lattice == other.lattice
            && self.weights.len() == other.weights.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Writes the CSV snapshot: `#`-prefixed header lines, then one row per
    /// in-box edge `x1,..,xd,direction,weight` with 1-based directions.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        writeln!(out, "# polymer-lab environment v1")?;
        writeln!(out, "# d={d}")?;
        let corner: Vec<String> = self.lattice.corner().coords().iter().map(|c| c.to_string()).collect();
        writeln!(out, "# corner={}", corner.join(","))?;
        writeln!(out, "# dist={}", serde_json::to_string(&self.dist)?)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# transforms={}", serde_json::to_string(&self.transforms)?)?;
        let mut head: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        head.push("direction".into());
        head.push("weight".into());
        writeln!(out, "{}", head.join(","))?;
        for (v, j, w) in self.edges() {
            for c in v.coords() {
                write!(out, "{c},")?;
            }
            writeln!(out, "{},{}", j + 1, fmt_f64(w))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut d = None;
        let mut corner = None;
        let mut dist = None;
        let mut seed = None;
        let mut transforms = Vec::new();
        let mut lattice: Option<LatticeBox> = None;
        let mut weights: Vec<f64> = Vec::new();
        let mut seen_header = false;
        let mut filled = 0usize;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| LabError::Format(format!("line {}: {msg}", lineno + 1));
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some((key, value)) = meta.split_once('=') {
                    match key.trim() {
                        "d" => d = Some(value.trim().parse::<usize>().map_err(|e| err(e.to_string()))?),
                        "corner" => corner = Some(value.parse::<Vertex>()?),
                        "dist" => dist = Some(serde_json::from_str::<WeightDistribution>(value)?),
                        "seed" => seed = Some(value.trim().parse::<u64>().map_err(|e| err(e.to_string()))?),
                        "transforms" => transforms = serde_json::from_str(value)?,
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                seen_header = true;
                let (Some(d), Some(corner)) = (d, corner.clone()) else {
                    return Err(err("missing d or corner header".into()));
                };
                if corner.dim() != d {
                    return Err(err("corner dimension does not match d".into()));
                }
                let b = LatticeBox::new(corner)?;
                weights = vec![f64::NAN; b.num_vertices() * d];
                lattice = Some(b);
                continue;
            }
            let b = lattice.as_ref().expect("set with header");
            let dim = b.dim();
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 2 {
                return Err(err(format!("expected {} fields, got {}", dim + 2, fields.len())));
            }
            let coords = fields[..dim]
                .iter()
                .map(|t| t.trim().parse::<i64>().map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let j: usize = fields[dim].trim().parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let w: f64 = fields[dim + 1].trim().parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
            let v = Vertex(coords);
            if j == 0 || j > dim || !b.contains(&v.step(j - 1)) {
                return Err(err(format!("edge ({v}, {j}) is not inside the box")));
            }
            let slot = b.index_of(&v).expect("checked") * dim + (j - 1);
            if !weights[slot].is_nan() {
                return Err(err(format!("duplicate edge ({v}, {j})")));
            }
            if w.is_nan() {
                return Err(err("NaN weight".into()));
            }
            weights[slot] = w;
            filled += 1;
        }
        let lattice = lattice.ok_or_else(|| LabError::Format("no column header line".into()))?;
        let expected = expected_edges(&lattice);
        if filled != expected {
            return Err(LabError::Format(format!("expected {expected} edges, found {filled}")));
        }
        Ok(Self {
            lattice,
            dist: dist.ok_or_else(|| LabError::Format("missing dist header".into()))?,
            seed: seed.ok_or_else(|| LabError::Format("missing seed header".into()))?,
            transforms,
            weights,
        })
    }
}

fn expected_edges(lattice: &LatticeBox) -> usize {
    let ext = lattice.extents();
    (0..ext.len())
        .map(|j| ext.iter().enumerate().map(|(k, &e)| if k == j { e - 1 } else { e }).product::<usize>())
        .sum()
}
