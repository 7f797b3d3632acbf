//! Trajectory and communication optimizer for radio-map-enabled UAV/UGV
//! networks.
//!
//! UGVs drive known ground paths and transmit; UAVs fly trajectories chosen
//! by a warm-started particle swarm with crossover and mutation. Fitness is
//! the minimal per-UGV sum-rate over the horizon, read off a voxelized
//! path-gain map, minus weighted penalties for speed, turning-angle and
//! building violations.
//!
//! Module map:
//!
//! - [`radio_map`]: voxel grid, position to index mapping, synthetic
//!   log-distance map with blockage and shadowing, binary snapshots.
//! - [`scenario`]: fleet, horizon, physical limits, UGV motion, TOML loader.
//! - [`link_layer`]: SINR, rates, greedy scheduling, min-sum-rate.
//! - [`swarm`]: hyper-parameters, penalties, fitness, genetic operators,
//!   warm start and the optimizer loop.
//! - [`parallel`]: rayon-backed batch map with a sequential fallback.

pub mod error;
pub mod link_layer;
pub mod parallel;
pub mod radio_map;
pub mod scenario;
pub mod swarm;

pub use error::{Error, Result};
pub use link_layer::{
    greedy_schedule_and_power, LinkState, PowerPlan, Schedule, SlotLink, TrajectorySet,
};
pub use radio_map::{
    Building, PropagationModel, RadioMap, VoxelGrid, VoxelIndex, MAP_FILE_MAGIC, MAP_FILE_VERSION,
};
pub use scenario::{load_scenario, Scenario, UgvPath};
pub use swarm::{
    run_ws_pso_cm, warm_start, FitnessBreakdown, HyperParams, OptimizationResult, SwarmConfig,
};

/// A point or displacement in meters, `(x, y, z)` with `z` the altitude.
pub type Point3 = nalgebra::Vector3<f64>;
