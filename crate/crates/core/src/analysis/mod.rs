//! Analytic model: MCS probabilities, throughput with and without RENEV,
//! and the signaling-overhead Markov chain.

pub mod mcs;
pub mod model;
pub mod states;
pub mod throughput;

pub use mcs::{mcs_probability, DenominatorForm, Link, McsDistribution, McsOptions, Region};
pub use model::{analyze, geometry_stats, AnalysisPoint, AnalysisReport, GeometryStats};
pub use states::{
    feasible_states, p_q_groups, signaling_expectations, Kernel, LevelRange, SignalingExpectations, SignalingInputs,
    StateDistribution, SystemState,
};
pub use throughput::{
    overlap_probability, throughput_with_renev, throughput_without_renev, OverlapModel, ShareRule, ThroughputInputs,
    WithRenev, WithoutRenev,
};
