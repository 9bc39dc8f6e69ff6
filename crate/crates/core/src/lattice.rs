//! Lattice primitives: vertices, boxes, cylinders, slabs and path counts.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};

/// A point of Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn new(coords: Vec<i64>) -> Self {
        Vertex(coords)
    }

    pub fn origin(d: usize) -> Self {
        Vertex(vec![0; d])
    }

    /// `n * e` with `e = (1, ..., 1)`.
    pub fn diagonal(d: usize, n: i64) -> Self {
        Vertex(vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// `v . e`, the anti-diagonal level of the vertex.
    pub fn level(&self) -> i64 {
        self.0.iter().sum()
    }

    /// Componentwise order `self <= other`.
    pub fn le(&self, other: &Vertex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn add(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vertex) -> Vertex {
        Vertex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn step(&self, j: usize) -> Vertex {
        let mut c = self.0.clone();
        c[j] += 1;
        Vertex(c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for Vertex {
    type Err = LabError;

    /// Parses `3,4` or `(3,4)`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| LabError::InvalidInput(format!("bad vertex coordinate {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(LabError::InvalidInput("empty vertex".into()));
        }
        Ok(Vertex(coords))
    }
}

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 16;

/// Axis-aligned box `{p : 0 <= p <= corner}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    corner: Vertex,
}

impl LatticeBox {
    pub fn new(corner: Vertex) -> Result<Self> {
        if corner.dim() == 0 || corner.dim() > MAX_DIM {
            return Err(LabError::InvalidInput(format!("box dimension must lie in 1..={MAX_DIM}")));
        }
        if !corner.is_nonnegative() {
            return Err(LabError::InvalidInput(format!("box corner {corner} has a negative coordinate")));
        }
        Ok(Self { corner })
    }

    pub fn corner(&self) -> &Vertex {
        &self.corner
    }

    pub fn dim(&self) -> usize {
        self.corner.dim()
    }

    pub fn extents(&self) -> Vec<usize> {
        self.corner.0.iter().map(|&c| c as usize + 1).collect()
    }

    /// Row-major strides, last coordinate fastest.
    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.extents())
    }

    pub fn num_vertices(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.dim() == self.dim() && v.is_nonnegative() && v.le(&self.corner)
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index_of_coords(&v.0)
    }

    /// Row-major index of a coordinate slice, without allocating.
    pub fn index_of_coords(&self, v: &[i64]) -> Option<usize> {
        if v.len() != self.dim() {
            return None;
        }
        let mut index = 0usize;
        for (&c, &hi) in v.iter().zip(&self.corner.0) {
            if c < 0 || c > hi {
                return None;
            }
            index = index * (hi as usize + 1) + c as usize;
        }
        Some(index)
    }

    pub fn vertex_at(&self, mut index: usize) -> Vertex {
        let strides = self.strides();
        Vertex(
            strides
                .iter()
                .map(|&s| {
                    let c = index / s;
                    index %= s;
                    c as i64
                })
                .collect(),
        )
    }

    pub fn check_contains(&self, v: &Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(LabError::OutsideBox { vertex: v.0.clone(), corner: self.corner.0.clone() })
        }
    }
}

pub(crate) fn row_major_strides(extents: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; extents.len()];
    for k in (0..extents.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * extents[k + 1];
    }
    strides
}

/// The lattice point `[u]` with `u - [u]` in `[-1/2, 1/2)^d`.
pub fn round_to_lattice(u: &[f64]) -> Result<Vertex> {
    u.iter()
        .map(|&x| {
            if !x.is_finite() {
                return Err(LabError::InvalidInput(format!("non-finite coordinate {x}")));
            }
            let k = x.floor();
            // x - floor(x) is exact in binary floating point.
            let r = if x - k >= 0.5 { k + 1.0 } else { k };
            Ok(r as i64)
        })
        .collect::<Result<Vec<_>>>()
        .map(Vertex)
}

/// Euclidean distance from `p` to the closed segment from 0 to `x`.
pub fn point_segment_distance(p: &[f64], x: &[f64]) -> Result<f64> {
    if p.len() != x.len() {
        return Err(LabError::InvalidInput("dimension mismatch".into()));
    }
    let xx: f64 = x.iter().map(|a| a * a).sum();
    if xx == 0.0 {
        return Err(LabError::InvalidInput("segment has zero length".into()));
    }
    Ok(segment_distance_unchecked(p, x, xx))
}

#[inline]
pub(crate) fn segment_distance_unchecked(p: &[f64], x: &[f64], xx: f64) -> f64 {
    let px: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
    let t = (px / xx).clamp(0.0, 1.0);
    p.iter().zip(x).map(|(a, b)| (a - t * b) * (a - t * b)).sum::<f64>().sqrt()
}

/// `C_x[r]` translated to start at `start`: lattice points whose distance to
/// the segment `start -> end` is strictly below `radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub radius: f64,
}

impl Cylinder {
    pub fn new(start: Vec<f64>, end: Vec<f64>, radius: f64) -> Result<Self> {
        if start.len() != end.len() {
            return Err(LabError::InvalidInput("cylinder endpoints differ in dimension".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LabError::InvalidInput(format!("cylinder radius must be positive, got {radius}")));
        }
        Ok(Self { start, end, radius })
    }

    /// `C_x[r]` anchored at the origin.
    pub fn from_origin(end: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; end.len()], end, radius)
    }

    pub fn axis(&self) -> Vec<f64> {
        self.end.iter().zip(&self.start).map(|(a, b)| a - b).collect()
    }

    /// Distance from a lattice point to the axis segment.
    pub fn distance(&self, v: &[i64]) -> f64 {
        let p: Vec<f64> = v.iter().zip(&self.start).map(|(&c, s)| c as f64 - s).collect();
        let axis = self.axis();
        let xx: f64 = axis.iter().map(|a| a * a).sum();
        if xx == 0.0 {
            return p.iter().map(|a| a * a).sum::<f64>().sqrt();
        }
        segment_distance_unchecked(&p, &axis, xx)
    }

    pub fn contains_coords(&self, v: &[i64]) -> bool {
        self.distance(v) < self.radius
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.contains_coords(&v.0)
    }
}

/// `C_x[r]` membership of a vertex.
pub fn cylinder_contains(c: &Cylinder, v: &Vertex) -> bool {
    c.contains(v)
}

/// Transverse window cutting a bounded piece out of a level plane: a point
/// `p` on the plane belongs to the piece when its projection along `e` onto
/// the plane through `anchor` lies within `radius` of the segment
/// `anchor -> anchor + span`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabWindow {
    pub anchor: Vec<f64>,
    pub span: Vec<f64>,
    pub radius: f64,
}

impl SlabWindow {
    pub fn contains(&self, v: &[i64]) -> bool {
        let d = v.len() as f64;
        let level: f64 = v.iter().map(|&c| c as f64).sum();
        let anchor_level: f64 = self.anchor.iter().sum();
        let shift = (level - anchor_level) / d;
        let q: Vec<f64> = v.iter().zip(&self.anchor).map(|(&c, a)| c as f64 - shift - a).collect();
        let ss: f64 = self.span.iter().map(|a| a * a).sum();
        let dist = if ss == 0.0 {
            q.iter().map(|a| a * a).sum::<f64>().sqrt()
        } else {
            segment_distance_unchecked(&q, &self.span, ss)
        };
        dist < self.radius
    }
}

/// A pair of anti-diagonal level planes `{v . e = near}` and `{v . e = far}`,
/// optionally cut down to bounded pieces by a transverse window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub near: i64,
    pub far: i64,
    #[serde(default)]
    pub window: Option<SlabWindow>,
}

impl Slab {
    pub fn new(near: i64, far: i64, window: Option<SlabWindow>) -> Result<Self> {
        if near < 0 || near > far {
            return Err(LabError::InvalidInput(format!(
                "slab levels must satisfy 0 <= near <= far, got {near}, {far}"
            )));
        }
        Ok(Self { near, far, window })
    }

    /// Whether a vertex is allowed by the slab constraint: vertices on either
    /// plane must lie in the window, all others are unconstrained.
    pub fn admits(&self, v: &[i64]) -> bool {
        let level: i64 = v.iter().sum();
        if level != self.near && level != self.far {
            return true;
        }
        self.window.as_ref().is_none_or(|w| w.contains(v))
    }
}

/// Number of directed paths from 0 to `x`, the multinomial `|x|_1! / prod x_i!`.
pub fn count_paths(x: &Vertex) -> Result<BigUint> {
    if !x.is_nonnegative() {
        return Err(LabError::InvalidInput(format!("{x} is not in Z^d_+")));
    }
    // Product of binomials C(x_1 + .. + x_k, x_k).
    let mut total = BigUint::one();
    let mut acc: u64 = 0;
    for &c in &x.0 {
        let c = c as u64;
        for i in 1..=c {
            total *= acc + i;
            total /= i;
        }
        acc += c;
    }
    Ok(total)
}

/// `log N(0, x)` via `ln Gamma`.
pub fn log_count_paths(x: &Vertex) -> Result<f64> {
    if !x.is_nonnegative() {
        return Err(LabError::InvalidInput(format!("{x} is not in Z^d_+")));
    }
    let n = x.l1() as f64;
    Ok(ln_gamma(n + 1.0) - x.0.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[i64]) -> Vertex {
        Vertex(c.to_vec())
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_lattice(&[0.4, 0.4]).unwrap(), v(&[0, 0]));
        assert_eq!(round_to_lattice(&[0.5, -0.5]).unwrap(), v(&[1, 0]));
        assert_eq!(round_to_lattice(&[2.0, 3.0]).unwrap(), v(&[2, 3]));
        assert_eq!(round_to_lattice(&[0.49999999999999994]).unwrap(), v(&[0]));
        assert!(round_to_lattice(&[f64::NAN]).is_err());
    }

    #[test]
    fn segment_distance_examples() {
        assert_eq!(point_segment_distance(&[0.5, 0.5], &[1.0, 1.0]).unwrap(), 0.0);
        let d = point_segment_distance(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let d = point_segment_distance(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(point_segment_distance(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let c = Cylinder::from_origin(vec![4.0, 4.0], 1.0).unwrap();
        assert!(cylinder_contains(&c, &v(&[2, 2])));
        let c = Cylinder::from_origin(vec![1.0, 1.0], 0.5).unwrap();
        assert!(!cylinder_contains(&c, &v(&[1, 0])));
        let c = Cylinder::from_origin(vec![1.0, 1.0], 0.8).unwrap();
        assert!(cylinder_contains(&c, &v(&[1, 0])));
        assert!(Cylinder::from_origin(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn cylinder_membership_is_strict() {
        // (1,1) is at distance exactly 1 from the axis of C_{(2,0)}.
        let c = Cylinder::from_origin(vec![2.0, 0.0], 1.0).unwrap();
        assert!(!c.contains(&v(&[1, 1])));
    }

    #[test]
    fn count_paths_examples() {
        assert_eq!(count_paths(&v(&[1, 1])).unwrap(), BigUint::from(2u32));
        assert_eq!(count_paths(&v(&[2, 2])).unwrap(), BigUint::from(6u32));
        assert_eq!(count_paths(&v(&[2, 1, 1])).unwrap(), BigUint::from(12u32));
        assert_eq!(count_paths(&v(&[0, 0])).unwrap(), BigUint::one());
        // 60! / (30! 30!) overflows u64 but not BigUint.
        let big = count_paths(&v(&[30, 30])).unwrap();
        assert_eq!(big.to_string(), "118264581564861424");
        let huge = count_paths(&v(&[40, 40])).unwrap();
        assert_eq!(huge.to_string(), "107507208733336176461620");
    }

    #[test]
    fn log_count_matches_exact() {
        for x in [v(&[3, 5]), v(&[2, 1, 1]), v(&[40, 40]), v(&[7, 0, 2])] {
            let exact: f64 = count_paths(&x).unwrap().to_string().parse().unwrap();
            let lg = log_count_paths(&x).unwrap();
            assert!((lg - exact.ln()).abs() < 1e-10 * exact.ln().max(1.0), "{x}");
        }
    }

    #[test]
    fn box_indexing_round_trips() {
        let b = LatticeBox::new(v(&[2, 3, 1])).unwrap();
        assert_eq!(b.num_vertices(), 24);
        for i in 0..b.num_vertices() {
            assert_eq!(b.index_of(&b.vertex_at(i)), Some(i));
        }
        assert_eq!(b.index_of(&v(&[3, 0, 0])), None);
    }

    #[test]
    fn slab_admits_off_plane_vertices() {
        let w = SlabWindow { anchor: vec![0.0, 0.0], span: vec![0.0, 0.0], radius: 1.0 };
        let s = Slab::new(2, 4, Some(w)).unwrap();
        assert!(s.admits(&[3, 0]));
        assert!(s.admits(&[1, 1]));
        assert!(!s.admits(&[2, 0]));
        assert!(s.admits(&[2, 2]));
        assert!(!s.admits(&[4, 0]));
        assert!(Slab::new(3, 2, None).is_err());
    }

    proptest! {
        #[test]
        fn pascal_recurrence(x in proptest::collection::vec(0i64..6, 1..4)) {
            let x = Vertex(x);
            let n = count_paths(&x).unwrap();
            if x.l1() == 0 {
                prop_assert_eq!(n, BigUint::one());
            } else {
                let mut s = BigUint::from(0u32);
                for j in 0..x.dim() {
                    if x.0[j] > 0 {
                        let mut y = x.clone();
                        y.0[j] -= 1;
                        s += count_paths(&y).unwrap();
                    }
                }
                prop_assert_eq!(n, s);
            }
        }

        #[test]
        fn count_bounded_by_d_pow_length(x in proptest::collection::vec(0i64..8, 1..4)) {
            let x = Vertex(x);
            let bound = BigUint::from(x.dim() as u64).pow(x.l1() as u32);
            prop_assert!(count_paths(&x).unwrap() <= bound);
        }

        #[test]
        fn distance_symmetric_under_joint_permutation(
            p in proptest::collection::vec(-5.0f64..5.0, 3),
            x in proptest::collection::vec(0.1f64..5.0, 3),
        ) {
            let a = point_segment_distance(&p, &x).unwrap();
            let perm = [2usize, 0, 1];
            let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            let xp: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            let b = point_segment_distance(&pp, &xp).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn rounding_commutes_with_integer_shift(
            u in proptest::collection::vec(-100.0f64..100.0, 1..4),
            k in proptest::collection::vec(-50i64..50, 4),
        ) {
            let k = &k[..u.len()];
            let shifted: Vec<f64> = u.iter().zip(k).map(|(a, &b)| a + b as f64).collect();
            // Skip draws where the shift itself rounds the fractional part.
            let exact = u.iter().zip(&shifted).zip(k).all(|((a, s), &b)| s - b as f64 == *a);
            prop_assume!(exact);
            let lhs = round_to_lattice(&shifted).unwrap();
            let rhs = round_to_lattice(&u).unwrap().add(&Vertex(k.to_vec()));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
