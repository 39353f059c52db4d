//! Risk-aware path planning over graph environments.
//!
//! * [`env`]: environment graphs with risk-classed edges, and their files.
//! * [`planner`]: shortest-distance and maximum-success Dijkstra, mission ordering.
//! * [`verify`]: fixed-policy chains, their evaluation and PRISM export.
//! * [`human`]: human movement prediction and heat maps.
//! * [`sim`]: mission episodes and uncertainty sweeps.
//! * [`cli`]: the `riskpath` command-line front end.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod cli;
pub mod env;
pub mod human;
pub mod planner;
pub mod scalar;
pub mod sim;
pub mod verify;

pub use env::{EdgeId, NodeId, RiskClass};
pub use scalar::Scalar;

pub type EnvironmentGraph = env::Graph<f64>;
pub type OutcomeProbs = env::OutcomeProbs<f64>;
pub type Edge = env::Edge<f64>;
pub type Path = planner::Path<f64>;
pub type MissionSpec = planner::MissionSpec<f64>;
pub type MissionPlan = planner::MissionPlan<f64>;
pub type FixedPolicyChain = verify::FixedPolicyChain<f64>;
pub type ValidatedPath = verify::ValidatedPath<f64>;
pub type HumanState = human::HumanState<f64>;
pub type HeatMap = human::HeatMap<f64>;
pub type HeatParams = human::HeatParams<f64>;
pub type HeatedGraph<'g> = human::HeatedGraph<'g, f64>;
pub type EpisodeConfig<'g> = sim::EpisodeConfig<'g, f64>;

/// Single-precision variants.
pub mod f32 {
    pub type EnvironmentGraph = crate::env::Graph<f32>;
    pub type Path = crate::planner::Path<f32>;
    pub type MissionSpec = crate::planner::MissionSpec<f32>;
    pub type FixedPolicyChain = crate::verify::FixedPolicyChain<f32>;
    pub type HeatedGraph<'g> = crate::human::HeatedGraph<'g, f32>;
}
