//! Seeded simulation of a flagging population and an editorial agent.
//!
//! All randomness comes from one ChaCha8 generator per run. Each round first
//! posts its new messages, drawing per message: toxicity, author, then per
//! text token a marker coin and a word index. Then every exposed message, in
//! id order, draws an exposure count and per exposure the user index, the
//! propensity coin and the accuracy coin. Exposure does not depend on message
//! status and the editorial agent draws nothing from this generator, so every
//! policy sees the same messages and flags.

mod config;
mod metrics;
mod population;
mod world;

pub use config::{CohortSpec, ExposureMode, SimConfig, TextSpec};
pub use metrics::{RoundMetrics, SimMetrics};
pub use population::{cohort_sizes, generate_population, SyntheticUser};
pub use world::{compare_policies, run_simulation, run_simulation_traced, World};
