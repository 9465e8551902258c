//! Batched simulation, scene files, CSV output, benchmarks and an MPPI controller on top of `comfree-core`.

pub mod batch;
pub mod bench;
pub mod cli;
pub mod mppi;
pub mod output;
pub mod scene_io;
pub mod scenes;
pub mod stats;

pub use batch::{replicate_envs, BatchedWorld, StepError, StepStats};
pub use scene_io::{load_scene, parse_scene, save_scene, SceneError};
