use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HyperParams;
use crate::link_layer::TrajectorySet;
use crate::scenario::FlightBox;
use crate::Point3;

/// One candidate solution with its memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: TrajectorySet,
    /// Meters per iteration, same layout as `position`.
    pub velocity: TrajectorySet,
    pub p_best: TrajectorySet,
    pub p_best_fitness: f64,
}

impl Particle {
    /// Particle at rest whose memory is its starting point.
    pub fn at_rest(position: TrajectorySet, fitness: f64) -> Self {
        let velocity = TrajectorySet::from_fn(position.uav_count(), position.slots(), |_, _| {
            Point3::zeros()
        });
        Self {
            p_best: position.clone(),
            position,
            velocity,
            p_best_fitness: fitness,
        }
    }
}

/// The uniform draws of one velocity update.
#[derive(Debug, Clone, PartialEq)]
pub enum RandomFactors {
    /// One `(r1, r2)` pair for the whole particle.
    Scalar { r1: f64, r2: f64 },
    /// One pair per coordinate, in `points()` order with `x, y, z` innermost.
    PerCoordinate { r1: Vec<f64>, r2: Vec<f64> },
}

impl RandomFactors {
    fn get(&self, coord: usize) -> (f64, f64) {
        match self {
            RandomFactors::Scalar { r1, r2 } => (*r1, *r2),
            RandomFactors::PerCoordinate { r1, r2 } => (r1[coord], r2[coord]),
        }
    }
}

/// `w v + c1 r1 (pbest - q) + c2 r2 (gbest - q)`.
pub fn update_velocity(
    particle: &Particle,
    g_best: &TrajectorySet,
    hyper: &HyperParams,
    factors: &RandomFactors,
) -> TrajectorySet {
    let mut out = particle.velocity.clone();
    let q = particle.position.points();
    let pb = particle.p_best.points();
    let gb = g_best.points();
    for (i, v) in out.points_mut().iter_mut().enumerate() {
        for a in 0..3 {
            let (r1, r2) = factors.get(i * 3 + a);
            v[a] = hyper.omega * v[a]
                + hyper.c1 * r1 * (pb[i][a] - q[i][a])
                + hyper.c2 * r2 * (gb[i][a] - q[i][a]);
        }
    }
    out
}

/// How positions leaving the flight box are brought back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Stop on the face.
    #[default]
    Clamp,
    /// Mirror across the face and reverse that velocity component.
    Reflect,
}

/// `q = q + v`, then confines every waypoint to `bounds`.
pub fn update_position(particle: &mut Particle, bounds: &FlightBox, mode: BoundaryMode) {
    let Particle {
        position, velocity, ..
    } = particle;
    for (q, v) in position
        .points_mut()
        .iter_mut()
        .zip(velocity.points_mut().iter_mut())
    {
        let mut next = *q + *v;
        if mode == BoundaryMode::Reflect {
            for a in 0..3 {
                if next[a] > bounds.hi[a] {
                    next[a] = 2.0 * bounds.hi[a] - next[a];
                    v[a] = -v[a];
                } else if next[a] < bounds.lo[a] {
                    next[a] = 2.0 * bounds.lo[a] - next[a];
                    v[a] = -v[a];
                }
            }
        }
        *q = bounds.clamp(&next);
    }
}

/// Children of a single-point crossover on the slot axis: slots `>= cut`
/// (one-based) of every UAV, with their velocities, trade places. Each child
/// keeps the memory of the parent it replaces.
pub fn crossover_at(a: &Particle, b: &Particle, cut: usize) -> (Particle, Particle) {
    let mut child_a = a.clone();
    let mut child_b = b.clone();
    let slots = a.position.slots();
    let cut0 = cut.saturating_sub(1).min(slots);
    for m0 in 0..a.position.uav_count() {
        let range = m0 * slots + cut0..(m0 + 1) * slots;
        child_a.position.points_mut()[range.clone()]
            .copy_from_slice(&b.position.points()[range.clone()]);
        child_b.position.points_mut()[range.clone()]
            .copy_from_slice(&a.position.points()[range.clone()]);
        child_a.velocity.points_mut()[range.clone()]
            .copy_from_slice(&b.velocity.points()[range.clone()]);
        child_b.velocity.points_mut()[range.clone()]
            .copy_from_slice(&a.velocity.points()[range]);
    }
    (child_a, child_b)
}

/// [`crossover_at`] with the cut drawn uniformly from `2..=T-1` (slot 2
/// when `T = 2`).
pub fn crossover<R: Rng + ?Sized>(a: &Particle, b: &Particle, rng: &mut R) -> (Particle, Particle) {
    let slots = a.position.slots();
    let cut = rng.random_range(2..=slots.saturating_sub(1).max(2));
    crossover_at(a, b, cut)
}

/// Waypoint mutation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationParams {
    /// Per-waypoint mutation probability.
    pub probability: f64,
    pub sigma_horizontal: f64,
    pub sigma_vertical: f64,
}

impl Default for MutationParams {
    fn default() -> Self {
        Self {
            probability: 0.05,
            sigma_horizontal: 5.0,
            sigma_vertical: 2.0,
        }
    }
}

/// Perturbs each waypoint with probability `params.probability` by zero-mean
/// Gaussian noise, then clamps it to `bounds`. `p_best` is left alone.
pub fn mutate<R: Rng + ?Sized>(
    particle: &mut Particle,
    params: &MutationParams,
    bounds: &FlightBox,
    rng: &mut R,
) {
    for q in particle.position.points_mut() {
        let u: f64 = rng.random();
        if u < params.probability {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            let dz: f64 = StandardNormal.sample(rng);
            let moved = *q
                + Point3::new(
                    params.sigma_horizontal * dx,
                    params.sigma_horizontal * dy,
                    params.sigma_vertical * dz,
                );
            *q = bounds.clamp(&moved);
        }
    }
}
