//! Deterministic DDIM sampling over pluggable noise-prediction models, with an
//! analytic Gaussian-mixture backend whose components are bound to concept
//! labels.

mod model;
mod rng;
mod sampler;
mod schedule;

pub use model::{gm_epsilon, Component, Condition, NoiseModel, ScoreModelSpec};
pub use rng::NoiseStream;
pub use sampler::{
    ddim_step, guided_epsilon, img2img_init, sample, sample_resolved, start_timestep, LatentState, ResolvedPlan,
    Trajectory,
};
pub use schedule::{make_schedule, NoiseSchedule};
