//! Variance of `dF = F(0, n e) - F(v_n, v_n + n e)` for a transverse offset
//! `v_n` with `v_n . e = 0`.

use serde::{Deserialize, Serialize};

use super::ensemble::{domain, endpoint_value_from, EnsembleSpec, Model};
use super::stats::{sample_variance, variance_se};
use crate::environment::Environment;
use crate::error::{LabError, Result};
use crate::lattice::Vertex;

/// `v_n = k (e_1 - e_2)` with the smallest `k` giving `|v_n| >= 2 n^xi'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetSpec {
    pub n: u64,
    pub xi_prime: f64,
    pub k: i64,
    pub offset: Vertex,
    pub norm: f64,
}

impl OffsetSpec {
    pub fn new(d: usize, n: u64, xi_prime: f64) -> Result<Self> {
        if d < 2 {
            return Err(LabError::InvalidInput("the transverse offset needs d >= 2".into()));
        }
        if !(xi_prime > 0.0 && xi_prime < 1.0) {
            return Err(LabError::InvalidInput(format!("xi' must lie in (0, 1), got {xi_prime}")));
        }
        let scale = (n as f64).powf(xi_prime);
        let k = (2.0 * scale / 2f64.sqrt()).ceil() as i64;
        let norm = k as f64 * 2f64.sqrt();
        if norm > 3.0 * scale + 1.0 {
            return Err(LabError::InvalidInput(format!("no lattice offset of norm in [2, 3] n^xi' at n = {n}")));
        }
        let mut offset = vec![0; d];
        offset[0] = k;
        offset[1] = -k;
        Ok(Self { n, xi_prime, k, offset: Vertex(offset), norm })
    }

    /// Both endpoints pairs translated by `k e_2` into the orthant:
    /// `(k e_2, k e_2 + n e)` and `(k e_1, k e_1 + n e)`.
    pub fn translated_pairs(&self) -> ((Vertex, Vertex), (Vertex, Vertex)) {
        let d = self.offset.dim();
        let ne = Vertex::diagonal(d, self.n as i64);
        let mut a = Vertex::origin(d);
        a.0[1] = self.k;
        let mut b = Vertex::origin(d);
        b.0[0] = self.k;
        ((a.clone(), a.add(&ne)), (b.clone(), b.add(&ne)))
    }

    pub fn corner(&self) -> Vertex {
        let mut c = Vertex::diagonal(self.offset.dim(), self.n as i64);
        c.0[0] += self.k;
        c.0[1] += self.k;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaFReport {
    pub offset: OffsetSpec,
    pub variance: f64,
    pub variance_se: f64,
    /// `Var F(0, n e)` from the same replicates.
    pub var_f: f64,
    pub var_f_se: f64,
    pub delta: Vec<f64>,
    pub f0: Vec<f64>,
}

/// `(F(0, n e), dF)` in one environment, after translating by `k e_2`.
pub fn delta_f_on(env: &Environment, model: Model, beta: f64, offset: &OffsetSpec) -> Result<(f64, f64)> {
    let ((a0, a1), (b0, b1)) = offset.translated_pairs();
    let fa = endpoint_value_from(env, model, beta, &a0, &a1)?;
    let fb = endpoint_value_from(env, model, beta, &b0, &b1)?;
    Ok((fa, fa - fb))
}

pub fn delta_f_variance(spec: &EnsembleSpec, n: u64, xi_prime: f64) -> Result<DeltaFReport> {
    spec.validate()?;
    let offset = OffsetSpec::new(spec.dimension, n, xi_prime)?;
    let corner = offset.corner();
    let pairs =
        spec.map_replicates(domain::DELTA_F, &corner, |_, env| delta_f_on(env, spec.model, spec.beta, &offset))?;
    let (f0, delta): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(DeltaFReport {
        variance: sample_variance(&delta),
        variance_se: variance_se(&delta),
        var_f: sample_variance(&f0),
        var_f_se: variance_se(&f0),
        offset,
        delta,
        f0,
    })
}
