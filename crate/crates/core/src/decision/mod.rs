//! Personalized decisions and crowd-level aggregation.

mod aggregate;
mod blend;
mod dawid_skene;
mod glad;
mod labels;

pub use aggregate::{aggregate, majority, mean, median, Aggregator};
pub use blend::{
    blend, blend_with, map_belief_to_effect, personalized_decision, personalized_decision_with,
    BlenderConfig, NoiseFamily, Personalized,
};
pub use dawid_skene::{dawid_skene, AggregationModel, AggregationResult, EmConfig, DS_SMOOTHING};
pub use glad::glad;
pub use labels::{discrete_support, LabelMatrix};
