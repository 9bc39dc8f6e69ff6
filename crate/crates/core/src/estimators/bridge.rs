//! Shape excess `f(v) + f(n e - v) - f(n e)` of a two-leg route through `v`.

use serde::{Deserialize, Serialize};

use super::shape::ShapeFunction;
use crate::error::{LabError, Result};
use crate::lattice::Vertex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeExcess {
    pub value: f64,
    /// Sum in quadrature of the three shape standard errors.
    pub se: f64,
}

pub fn bridge_excess(shape: &dyn ShapeFunction, v: &Vertex, n: u64) -> Result<BridgeExcess> {
    let ne = Vertex::diagonal(v.dim(), n as i64);
    if !v.is_nonnegative() || !v.le(&ne) {
        return Err(LabError::InvalidInput(format!("{v} must satisfy 0 <= v <= {ne}")));
    }
    let (a, sa) = shape.eval(&v.to_f64())?;
    let (b, sb) = shape.eval(&ne.sub(v).to_f64())?;
    let (c, sc) = shape.eval(&ne.to_f64())?;
    Ok(BridgeExcess { value: a + b - c, se: (sa * sa + sb * sb + sc * sc).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::shape::{entropy, ConstantEnvShape};
    use std::f64::consts::LN_2;

    #[test]
    fn closed_form_examples() {
        let f = ConstantEnvShape { c: 1.0, beta: 1.0 };
        let n = 40;
        assert!(bridge_excess(&f, &Vertex(vec![20, 20]), n).unwrap().value.abs() < 1e-12);
        let e = bridge_excess(&f, &Vertex(vec![30, 10]), n).unwrap();
        let expected = n as f64 * (LN_2 - entropy(&[0.75, 0.25])) * 2.0;
        assert!((e.value - expected).abs() < 1e-10, "{} vs {expected}", e.value);
        assert!(e.value > 0.0);
        assert!(bridge_excess(&f, &Vertex(vec![41, 0]), n).is_err());
    }
}
