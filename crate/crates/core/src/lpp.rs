//! Zero-temperature directed percolation: last passage (max-plus) and first
//! passage (min-plus) with geodesic recovery.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::kernel::{sweep, MaxPlus, MinPlus, Region, SweepOrder};
use crate::lattice::Vertex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassageMode {
    MaxPlus,
    MinPlus,
}

/// Optimal passage values from a source over `[source, corner]`.
#[derive(Clone, Debug)]
pub struct PassageField {
    region: Region,
    mode: PassageMode,
    values: Vec<f64>,
}

impl PassageField {
    pub fn source(&self) -> &Vertex {
        &self.region.lo
    }

    pub fn corner(&self) -> &Vertex {
        &self.region.hi
    }

    pub fn mode(&self) -> PassageMode {
        self.mode
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    fn index(&self, v: &Vertex) -> Result<usize> {
        if !self.source().le(v) {
            return Err(LabError::NotOrdered { from: self.source().0.clone(), target: v.0.clone() });
        }
        self.region
            .local_index(v)
            .ok_or_else(|| LabError::OutsideBox { vertex: v.0.clone(), corner: self.corner().0.clone() })
    }

    /// `T(source, v)`.
    pub fn value(&self, v: &Vertex) -> Result<f64> {
        Ok(self.values[self.index(v)?])
    }
}

pub fn last_passage(env: &Environment, source: &Vertex, corner: &Vertex) -> Result<PassageField> {
    passage(env, source, corner, PassageMode::MaxPlus, SweepOrder::RowMajor)
}

pub fn first_passage(env: &Environment, source: &Vertex, corner: &Vertex) -> Result<PassageField> {
    passage(env, source, corner, PassageMode::MinPlus, SweepOrder::RowMajor)
}

pub fn passage(
    env: &Environment,
    source: &Vertex,
    corner: &Vertex,
    mode: PassageMode,
    order: SweepOrder,
) -> Result<PassageField> {
    let region = Region::new(env, source, corner)?;
    let values = match mode {
        PassageMode::MaxPlus => sweep(env, &region, &MaxPlus, None, order),
        PassageMode::MinPlus => sweep(env, &region, &MinPlus, None, order),
    };
    Ok(PassageField { region, mode, values })
}

/// An optimal path with its weight, summed from the source forward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub vertices: Vec<Vertex>,
    pub weight: f64,
}

impl Geodesic {
    /// Writes `step,x1,..,xd` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.vertices.first().map_or(0, |v| v.dim());
        let head: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(out, "step,{}", head.join(","))?;
        for (i, v) in self.vertices.iter().enumerate() {
            let coords: Vec<String> = v.coords().iter().map(|c| c.to_string()).collect();
            writeln!(out, "{i},{}", coords.join(","))?;
        }
        Ok(())
    }
}

/// Recovers an optimal path to `target`. Among all optimal paths the one
/// with the lexicographically smallest direction sequence is returned, so at
/// every tie the path steps in the lowest-index direction still on an
/// optimal route.
pub fn geodesic(field: &PassageField, env: &Environment, target: &Vertex) -> Result<Geodesic> {
    let target_index = field.index(target)?;
    let region = &field.region;
    let d = region.dim();
    let value = field.values[target_index];
    if !value.is_finite() {
        return Err(LabError::Unreachable(target.0.clone()));
    }
    let weight = |v: &Vertex, j: usize| env.weight(v, j).expect("edge inside region");

    // Mark vertices lying on some optimal path to the target.
    let mut on_optimal = vec![false; region.len()];
    on_optimal[target_index] = true;
    let source = field.source().clone();
    for index in (0..=target_index).rev() {
        if !on_optimal[index] {
            continue;
        }
        let v = region.vertex_at(index);
        for j in 0..d {
            if v.0[j] > source.0[j] {
                let mut u = v.clone();
                u.0[j] -= 1;
                let ui = index - region.stride(j);
                if field.values[ui] + weight(&u, j) == field.values[index] {
                    on_optimal[ui] = true;
                }
            }
        }
    }

    let mut vertices = Vec::with_capacity(target.sub(&source).l1() as usize + 1);
    let mut current = source;
    let mut index = 0usize;
    let mut total = 0.0;
    vertices.push(current.clone());
    while index != target_index {
        let mut advanced = false;
        for j in 0..d {
            if current.0[j] >= target.0[j] {
                continue;
            }
            let next_index = index + region.stride(j);
            let w = weight(&current, j);
            if on_optimal[next_index] && field.values[index] + w == field.values[next_index] {
                total += w;
                current = current.step(j);
                index = next_index;
                vertices.push(current.clone());
                advanced = true;
                break;
            }
        }
        if !advanced {
            return Err(LabError::Unreachable(target.0.clone()));
        }
    }
    Ok(Geodesic { vertices, weight: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightDistribution;
    use crate::lattice::LatticeBox;

    fn v(c: &[i64]) -> Vertex {
        Vertex(c.to_vec())
    }

    /// Box (1,1) with top path 0 -> (0,1) -> (1,1) weighing {1.0, 0.2} and
    /// bottom path 0 -> (1,0) -> (1,1) weighing {0.3, 0.9}.
    fn two_path_env() -> Environment {
        let text = "\
# d=2
# corner=1,1
# dist={\"kind\":\"constant\",\"value\":0.0}
# seed=0
x1,x2,direction,weight
0,0,1,0.3
0,0,2,1.0
0,1,1,0.2
1,0,2,0.9
";
        Environment::read_csv(text.as_bytes()).unwrap()
    }

    #[test]
    fn constant_weights_give_linear_passage() {
        let env = Environment::generate_on(&WeightDistribution::Constant { value: 2.5 }, &v(&[4, 3]), 0).unwrap();
        let lpp = last_passage(&env, &v(&[0, 0]), &v(&[4, 3])).unwrap();
        let fpp = first_passage(&env, &v(&[0, 0]), &v(&[4, 3])).unwrap();
        for i in 0..lpp.region().len() {
            let x = lpp.region().vertex_at(i);
            assert_eq!(lpp.value(&x).unwrap(), 2.5 * x.l1() as f64);
            assert_eq!(fpp.value(&x).unwrap(), 2.5 * x.l1() as f64);
        }
    }

    #[test]
    fn two_path_box() {
        let env = two_path_env();
        let o = v(&[0, 0]);
        let lpp = last_passage(&env, &o, &v(&[1, 1])).unwrap();
        assert!((lpp.value(&v(&[1, 1])).unwrap() - 1.2).abs() < 1e-15);
        let fpp = first_passage(&env, &o, &v(&[1, 1])).unwrap();
        assert!((fpp.value(&v(&[1, 1])).unwrap() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn unique_maximizer_geodesic() {
        let text = "\
# d=2
# corner=1,1
# dist={\"kind\":\"constant\",\"value\":0.0}
# seed=0
x1,x2,direction,weight
0,0,1,0.3
0,0,2,1.0
0,1,1,0.5
1,0,2,0.9
";
        let env = Environment::read_csv(text.as_bytes()).unwrap();
        let lpp = last_passage(&env, &v(&[0, 0]), &v(&[1, 1])).unwrap();
        let g = geodesic(&lpp, &env, &v(&[1, 1])).unwrap();
        assert_eq!(g.vertices, vec![v(&[0, 0]), v(&[0, 1]), v(&[1, 1])]);
        assert_eq!(g.weight, lpp.value(&v(&[1, 1])).unwrap());
    }

    #[test]
    fn ties_prefer_direction_one() {
        let env = Environment::generate_on(&WeightDistribution::Constant { value: 1.0 }, &v(&[3, 2]), 0).unwrap();
        let lpp = last_passage(&env, &v(&[0, 0]), &v(&[3, 2])).unwrap();
        let g = geodesic(&lpp, &env, &v(&[3, 2])).unwrap();
        let expected: Vec<Vertex> = [[0, 0], [1, 0], [2, 0], [3, 0], [3, 1], [3, 2]].iter().map(|c| v(c)).collect();
        assert_eq!(g.vertices, expected);
    }

    #[test]
    fn geodesic_weight_replays_exactly() {
        for seed in 0..20 {
            let env = Environment::generate(
                &WeightDistribution::Exponential { rate: 1.0 },
                &LatticeBox::new(v(&[5, 5])).unwrap(),
                seed,
            )
            .unwrap();
            let source = v(&[1, 0]);
            let lpp = last_passage(&env, &source, &v(&[5, 5])).unwrap();
            let g = geodesic(&lpp, &env, &v(&[5, 5])).unwrap();
            assert_eq!(g.weight.to_bits(), lpp.value(&v(&[5, 5])).unwrap().to_bits());
            assert_eq!(g.vertices.first(), Some(&source));
            assert!(g.vertices.windows(2).all(|w| w[1].sub(&w[0]).l1() == 1 && w[0].le(&w[1])));
            let fpp = first_passage(&env, &source, &v(&[5, 5])).unwrap();
            let h = geodesic(&fpp, &env, &v(&[5, 5])).unwrap();
            assert_eq!(h.weight.to_bits(), fpp.value(&v(&[5, 5])).unwrap().to_bits());
        }
    }

    #[test]
    fn superadditivity() {
        let env = Environment::generate_on(&WeightDistribution::Exponential { rate: 1.0 }, &v(&[12, 12]), 2).unwrap();
        let o = v(&[0, 0]);
        let full = last_passage(&env, &o, &v(&[12, 12])).unwrap();
        let x = v(&[5, 3]);
        let from_x = last_passage(&env, &x, &v(&[12, 12])).unwrap();
        for i in 0..from_x.region().len() {
            let y = from_x.region().vertex_at(i);
            assert!(full.value(&y).unwrap() >= full.value(&x).unwrap() + from_x.value(&y).unwrap() - 1e-12);
        }
    }

    #[test]
    fn geodesic_csv() {
        let env = Environment::generate_on(&WeightDistribution::Constant { value: 1.0 }, &v(&[1, 1]), 0).unwrap();
        let lpp = last_passage(&env, &v(&[0, 0]), &v(&[1, 1])).unwrap();
        let g = geodesic(&lpp, &env, &v(&[1, 1])).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,x1,x2\n0,0,0\n1,1,0\n2,1,1\n");
        assert!(geodesic(&lpp, &env, &v(&[2, 2])).is_err());
    }
}
