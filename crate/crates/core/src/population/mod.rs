//! Virtual-participant profiles, participation masks and the smoothing
//! construction used to relate discrete targets to continuous generators.

mod participation;
mod profile;
mod smoothing;
mod wasserstein;

pub use participation::sample_participation;
pub use profile::{
    sample_profiles, Allow, FieldDist, FieldSpec, Profile, ProfileSpec, ProfileValue,
    MAX_POOL_ATTEMPTS,
};
pub use smoothing::{dirac_smoothing_w1, smooth_discrete, GaussianMixture};
pub use wasserstein::{empirical_w1, w1_to_discrete};
