//! Linear multistep, one-leg, generalized and partitioned integrators for
//! Hamiltonian systems, with exact coefficient analysis and numerical checks
//! of symplecticity, area preservation and time reversibility.

pub mod cli;
pub mod experiments;
pub mod geometry;
pub mod integrators;
pub mod linalg;
pub mod methods;
pub mod poly;
pub mod rational;
pub mod scheme;
pub mod systems;
pub mod textdoc;

pub use methods::{MethodKind, MethodSpec};
pub use rational::Rational;
pub use scheme::{PartitionedPair, PcMode, PredictorCorrector, Scheme};
