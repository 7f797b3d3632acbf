use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fitness::{Evaluator, FitnessBreakdown};
use super::operators::{
    crossover, mutate, update_position, update_velocity, BoundaryMode, MutationParams, Particle,
    RandomFactors,
};
use super::warm_start::{random_trajectory, warm_start};
use super::HyperParams;
use crate::error::Result;
use crate::link_layer::TrajectorySet;
use crate::parallel;
use crate::radio_map::RadioMap;
use crate::scenario::Scenario;
use crate::Point3;

/// Version tag of the serialized [`OptimizationResult`].
pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Particle 1 is the warm start, the rest are jittered copies.
    #[default]
    WarmStart,
    /// Every particle uniform over the flight box.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFactorMode {
    /// One `(r1, r2)` per particle per iteration.
    #[default]
    PerParticle,
    /// Fresh `(r1, r2)` for every coordinate.
    PerCoordinate,
}

/// Fixed algorithm settings that are not tuned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub init: InitStrategy,
    /// Half-widths of the uniform jitter around the warm start:
    /// horizontal, vertical.
    pub init_jitter: (f64, f64),
    /// Crossover pairs per iteration; `None` means `p_num / 2`.
    pub crossover_pairs: Option<usize>,
    pub mutation: MutationParams,
    pub random_factors: RandomFactorMode,
    pub boundary: BoundaryMode,
    /// Weight of the optional separation penalty; zero disables it.
    pub collision_weight: f64,
    /// Evaluate particles on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            init: InitStrategy::WarmStart,
            init_jitter: (10.0, 5.0),
            crossover_pairs: None,
            mutation: MutationParams::default(),
            random_factors: RandomFactorMode::PerParticle,
            boundary: BoundaryMode::Clamp,
            collision_weight: 0.0,
            parallel: true,
        }
    }
}

/// Output of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub schema_version: u32,
    pub hyper: HyperParams,
    pub p_iter: usize,
    pub seed: u64,
    pub g_best: TrajectorySet,
    pub breakdown: FitnessBreakdown,
    /// gBest fitness after initialization and after every iteration.
    pub history: Vec<f64>,
    pub evaluations: u64,
    /// Wall-clock duration; left out of serialized records so they stay
    /// reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Swarm between iterations.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub g_best: TrajectorySet,
    pub g_best_fitness: f64,
    pub g_best_breakdown: FitnessBreakdown,
    /// Particle whose memory holds gBest.
    pub g_best_index: usize,
    pub iter: usize,
    pub evaluations: u64,
    best_breakdowns: Vec<FitnessBreakdown>,
    rng: ChaCha8Rng,
}

impl SwarmState {
    /// Seeds a swarm. With [`InitStrategy::WarmStart`], `warm` becomes
    /// particle 1 unchanged and the others are jittered copies of it.
    pub fn init(
        evaluator: &Evaluator<'_>,
        config: &SwarmConfig,
        warm: &TrajectorySet,
        seed: u64,
    ) -> Result<Self> {
        let hyper = evaluator.hyper();
        hyper.validate()?;
        let scenario = evaluator.scenario();
        let bounds = scenario.flight_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let (jh, jv) = config.init_jitter;
        let positions: Vec<TrajectorySet> = (0..hyper.p_num)
            .map(|k| match config.init {
                InitStrategy::WarmStart if k == 0 => warm.clone(),
                InitStrategy::WarmStart => {
                    let mut q = warm.clone();
                    for p in q.points_mut() {
                        let jitter = Point3::new(
                            rng.random_range(-jh..=jh),
                            rng.random_range(-jh..=jh),
                            rng.random_range(-jv..=jv),
                        );
                        *p = bounds.clamp(&(*p + jitter));
                    }
                    q
                }
                InitStrategy::Uniform => random_trajectory(scenario, &mut rng),
            })
            .collect();

        let scores = evaluate_all(evaluator, config, &positions)?;
        let particles: Vec<Particle> = positions
            .into_iter()
            .zip(&scores)
            .map(|(q, f)| Particle::at_rest(q, f.f_value))
            .collect();
        let mut state = Self {
            g_best: particles[0].p_best.clone(),
            g_best_fitness: f64::NEG_INFINITY,
            g_best_breakdown: scores[0],
            g_best_index: 0,
            iter: 0,
            evaluations: scores.len() as u64,
            best_breakdowns: scores,
            particles,
            rng,
        };
        state.select_g_best();
        Ok(state)
    }

    fn select_g_best(&mut self) {
        let mut best = 0;
        for (k, p) in self.particles.iter().enumerate() {
            if p.p_best_fitness > self.particles[best].p_best_fitness {
                best = k;
            }
        }
        if self.particles[best].p_best_fitness > self.g_best_fitness {
            self.g_best_index = best;
            self.g_best_fitness = self.particles[best].p_best_fitness;
            self.g_best = self.particles[best].p_best.clone();
            self.g_best_breakdown = self.best_breakdowns[best];
        }
    }

    fn refresh_memory(&mut self, evaluator: &Evaluator<'_>, config: &SwarmConfig) -> Result<()> {
        let positions: Vec<&TrajectorySet> = self.particles.iter().map(|p| &p.position).collect();
        let scores = parallel::map_slice(&positions, config.parallel, |q| evaluator.evaluate(q))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        self.evaluations += scores.len() as u64;
        for (k, (p, f)) in self.particles.iter_mut().zip(scores).enumerate() {
            if f.f_value > p.p_best_fitness {
                p.p_best = p.position.clone();
                p.p_best_fitness = f.f_value;
                self.best_breakdowns[k] = f;
            }
        }
        self.select_g_best();
        Ok(())
    }

    fn draw_factors(&mut self, mode: RandomFactorMode, coords: usize) -> RandomFactors {
        match mode {
            RandomFactorMode::PerParticle => RandomFactors::Scalar {
                r1: self.rng.random(),
                r2: self.rng.random(),
            },
            RandomFactorMode::PerCoordinate => RandomFactors::PerCoordinate {
                r1: (0..coords).map(|_| self.rng.random()).collect(),
                r2: (0..coords).map(|_| self.rng.random()).collect(),
            },
        }
    }

    /// One full iteration: move, evaluate, recombine, mutate, evaluate.
    pub fn step(&mut self, evaluator: &Evaluator<'_>, config: &SwarmConfig) -> Result<()> {
        let hyper = *evaluator.hyper();
        let bounds = evaluator.scenario().flight_box();
        let coords = self.g_best.points().len() * 3;

        for k in 0..self.particles.len() {
            let factors = self.draw_factors(config.random_factors, coords);
            let particle = &mut self.particles[k];
            particle.velocity = update_velocity(particle, &self.g_best, &hyper, &factors);
            update_position(particle, &bounds, config.boundary);
        }
        self.refresh_memory(evaluator, config)?;

        let count = self.particles.len();
        let pairs = config.crossover_pairs.unwrap_or(count / 2).min(count / 2);
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(&mut self.rng);
        for pair in order.chunks_exact(2).take(pairs) {
            let (i, j) = (pair[0], pair[1]);
            let (a, b) = crossover(&self.particles[i], &self.particles[j], &mut self.rng);
            self.particles[i] = a;
            self.particles[j] = b;
        }
        for k in 0..count {
            if k != self.g_best_index {
                mutate(&mut self.particles[k], &config.mutation, &bounds, &mut self.rng);
            }
        }
        self.refresh_memory(evaluator, config)?;
        self.iter += 1;
        Ok(())
    }
}

fn evaluate_all(
    evaluator: &Evaluator<'_>,
    config: &SwarmConfig,
    positions: &[TrajectorySet],
) -> Result<Vec<FitnessBreakdown>> {
    parallel::map_slice(positions, config.parallel, |q| evaluator.evaluate(q))
        .into_iter()
        .collect()
}

/// Optimizer bound to a problem instance.
#[derive(Debug, Clone, Copy)]
pub struct Optimizer<'a> {
    scenario: &'a Scenario,
    map: &'a RadioMap,
    config: SwarmConfig,
}

impl<'a> Optimizer<'a> {
    pub fn new(scenario: &'a Scenario, map: &'a RadioMap) -> Self {
        Self {
            scenario,
            map,
            config: SwarmConfig::default(),
        }
    }

    pub fn with_config(mut self, config: SwarmConfig) -> Self {
        self.config = config;
        self
    }

    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    pub fn evaluator(&self, hyper: HyperParams) -> Evaluator<'a> {
        Evaluator::new(self.scenario, self.map, hyper)
            .with_collision_weight(self.config.collision_weight)
    }

    /// Initial swarm for `hyper` and `seed`.
    pub fn init(&self, hyper: HyperParams, seed: u64) -> Result<SwarmState> {
        hyper.validate()?;
        let warm = warm_start(self.scenario)?;
        SwarmState::init(&self.evaluator(hyper), &self.config, &warm, seed)
    }

    /// Runs `p_iter` iterations and reports gBest.
    pub fn run(&self, hyper: HyperParams, p_iter: usize, seed: u64) -> Result<OptimizationResult> {
        let started = Instant::now();
        let evaluator = self.evaluator(hyper);
        let mut state = self.init(hyper, seed)?;
        let mut history = Vec::with_capacity(p_iter + 1);
        history.push(state.g_best_fitness);
        for _ in 0..p_iter {
            state.step(&evaluator, &self.config)?;
            history.push(state.g_best_fitness);
        }
        Ok(OptimizationResult {
            schema_version: RESULT_SCHEMA_VERSION,
            hyper,
            p_iter,
            seed,
            g_best: state.g_best,
            breakdown: state.g_best_breakdown,
            history,
            evaluations: state.evaluations,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// Runs the optimizer with default settings.
pub fn run_ws_pso_cm(
    scenario: &Scenario,
    map: &RadioMap,
    hyper: &HyperParams,
    p_iter: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    Optimizer::new(scenario, map).run(*hyper, p_iter, seed)
}
