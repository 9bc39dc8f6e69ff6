//! Monte Carlo estimators of scaling exponents, limit shapes and related
//! diagnostics, built on replicated environments.

pub mod bridge;
pub mod chi;
pub mod concentration;
pub mod delta_f;
pub mod ensemble;
pub mod excess;
pub mod exponent;
pub mod kappa;
pub mod relation;
pub mod shape;
pub mod stats;
pub mod xi;

pub use bridge::{bridge_excess, BridgeExcess};
pub use chi::{estimate_chi, ChiOptions, ChiResult};
pub use concentration::{azuma_bound, concentration_tail, ConcentrationReport};
pub use delta_f::{delta_f_variance, DeltaFReport, OffsetSpec};
pub use ensemble::{EnsembleSpec, Model};
pub use excess::{mean_excess_curve, FeReference, MeanFreeEnergyCurve};
pub use exponent::{Exponent, ExponentEstimate};
pub use kappa::{antidiagonal_fan, estimate_kappa, KappaResult};
pub use relation::{check_relation, relation_residual, RelationReport};
pub use shape::{
    containment_side, estimate_limit_shape, shape_containment, ConstantEnvShape, ShapeEstimate, ShapeFunction,
};
pub use stats::{FitWindow, RegressionFit};
pub use xi::{estimate_xi, XiOptions, XiResult};
