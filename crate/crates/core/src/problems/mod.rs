//! Objectives with known constants, reference solves and their certificates.

pub mod certify;
mod hyperbolic;
mod karcher;
mod noise;
mod quadratic;
mod reference;

pub use hyperbolic::{
    lipschitz_distance_objective, DistanceObjective, FrechetOracle, FrechetProblem,
};
pub use karcher::{
    generate_spd_dataset, DatasetInfo, KarcherOracle, KarcherProblem, Normalization,
};
pub use noise::NoisyOracle;
pub use quadratic::EuclideanQuadratic;
pub use reference::{reference_solution, Reference, DEFAULT_MAX_ITER, DEFAULT_TOL};
