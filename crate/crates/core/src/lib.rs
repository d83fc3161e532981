//! Numerical verification lab for limit theorems of integrals under varying
//! measures, and for the average-cost optimality equations of finite MDPs
//! obtained through the vanishing-discount approach.
//!
//! Everything is rendered on finite metric point sets with atomic measures
//! and truncated sequences; each check returns a structured [`Verdict`]
//! recording the computed quantities, the hypothesis diagnostics, and the
//! horizon/tolerance the verdict is relative to.

pub mod convergence;
pub mod extreal;
pub mod family;
pub mod fixtures;
pub mod gen;
pub mod mdp;
pub mod measure;
pub mod report;
pub mod semicont;
pub mod space;
pub mod theorems;
pub mod verdict;

pub use extreal::ExtReal;
pub use family::{FunctionFamily, PointFn};
pub use measure::{integrate, total_variation_distance, AtomicMeasure, IntegralValue};
pub use space::{MetricPointSet, RadiusSchedule, SpaceRef};
pub use verdict::{Status, Verdict};
