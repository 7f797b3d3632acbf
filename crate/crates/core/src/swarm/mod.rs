//! Warm-started particle swarm with crossover and mutation.
//!
//! Each particle encodes a full [`TrajectorySet`](crate::TrajectorySet): every
//! UAV's waypoint in every slot. The loop per iteration is
//!
//! 1. velocity update `v = w v + c1 r1 (pbest - q) + c2 r2 (gbest - q)`,
//! 2. position update `q = q + v`, confined to the flight box,
//! 3. fitness evaluation and pBest/gBest refresh,
//! 4. single-point crossover on the slot axis over random particle pairs and
//!    Gaussian mutation of every particle but the gBest holder,
//! 5. a second evaluation and pBest/gBest refresh.
//!
//! Fitness is maximized: `F = k1 T - k2 S - k3 A - k4 C`, with `T` the
//! min-sum-rate and `S`, `A`, `C` the normalized speed, turning-angle and
//! building violations.

mod fitness;
mod hyper;
mod operators;
mod optimizer;
mod penalty;
mod warm_start;

pub use fitness::{fitness, Evaluator, FitnessBreakdown};
pub use hyper::HyperParams;
pub use operators::{
    crossover, crossover_at, mutate, update_position, update_velocity, BoundaryMode,
    MutationParams, Particle, RandomFactors,
};
pub use optimizer::{
    run_ws_pso_cm, InitStrategy, OptimizationResult, Optimizer, RandomFactorMode, SwarmConfig,
    SwarmState, RESULT_SCHEMA_VERSION,
};
pub use penalty::{
    angle_penalty, building_penalty, collision_penalty, collision_report, speed_penalty,
    CollisionReport, FEASIBILITY_EPS,
};
pub use warm_start::{random_trajectory, warm_start};
