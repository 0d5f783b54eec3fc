//! Simulation studies, the file-based pipeline and its configuration.

mod config;
mod pipeline;
mod sweep;
mod world;

pub use config::{
    AnalysisConfig, Config, DataConfig, DecisionConfig, Method, PopulationConfig, PopulationSource,
};
pub use pipeline::{
    aggregate_matrix, Aggregated, EmSummary, IngestSummary, Pipeline, ProfileRecord,
    SimulatedDecision, SimulatedProblem, Simulation,
};
pub use sweep::{run_sweep, Cell, CellResult, NetSizes, RepResult, SimConfig, SweepResult};
pub use world::{default_world_profile_spec, synth_world, SynthWorld, WorldSpec};
