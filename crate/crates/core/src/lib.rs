//! Directed polymers and last-passage percolation on finite lattice boxes:
//! exact free energies, Gibbs path sampling and scaling-exponent estimation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod lattice;
pub mod lpp;
pub mod numfmt;
pub mod oracle;
pub mod polymer;
pub mod rng;
pub mod runner;
pub mod sampler;

pub use environment::{Environment, Transform, TruncationSpec, WeightDistribution};
pub use error::{LabError, Result};
pub use kernel::{log_sum_exp, Region, SweepOrder};
pub use lattice::{Cylinder, LatticeBox, Slab, SlabWindow, Vertex};
pub use lpp::{first_passage, geodesic, last_passage, Geodesic, PassageField, PassageMode};
pub use polymer::{
    confinement_curve, confinement_probability, free_energy, log_partition, log_partition_region,
    point_to_point_free_energy, through_points_free_energy, ConstraintMask, FreeEnergyField, PolymerParams,
};
pub use runner::{emit_report, run_experiment, ExperimentConfig, RunManifest};
pub use sampler::{sample_path, sample_paths, transversal_deviation, PathSample};
