// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod manifold;
pub mod problems;
pub mod solver;
pub mod trig;

pub use error::{Error, Result};
pub use manifold::{
    average_step, Euclidean, GeodesicSegment, Hyperbolic, HyperbolicPoint, Manifold, Spd, SpdPoint,
    Tangent,
};
pub use solver::{
    run, run_with, theoretical_bound, Constants, FirstOrderOracle, RunOptions, RunTrace,
    SolverPreset, TheoremId,
};
