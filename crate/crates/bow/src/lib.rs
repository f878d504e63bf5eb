pub mod error;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod brane;
pub mod fixed_points;
pub mod vertex;
pub mod macdonald;
pub mod resolutions;
pub mod mirror;
pub mod corpus;
pub mod suites;
