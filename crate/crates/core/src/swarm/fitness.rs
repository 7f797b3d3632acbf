use serde::{Deserialize, Serialize};

use super::penalty::{angle_penalty, building_penalty, collision_penalty, speed_penalty};
use super::HyperParams;
use crate::error::Result;
use crate::link_layer::{greedy_schedule_and_power, LinkState, TrajectorySet};
use crate::radio_map::RadioMap;
use crate::scenario::Scenario;

/// Objective and penalty terms of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    /// Min-sum-rate under the greedy schedule, bps/Hz.
    pub t_value: f64,
    /// Speed violations.
    pub s_value: f64,
    /// Turning-angle violations.
    pub a_value: f64,
    /// Building violations.
    pub c_value: f64,
    /// Separation violations; zero unless the collision term is enabled.
    #[serde(default)]
    pub d_value: f64,
    /// Combined fitness, maximized.
    pub f_value: f64,
}

impl FitnessBreakdown {
    /// `k1 T - k2 S - k3 A - k4 C`.
    pub fn recompose(&self, hyper: &HyperParams) -> f64 {
        hyper.k1 * self.t_value
            - hyper.k2 * self.s_value
            - hyper.k3 * self.a_value
            - hyper.k4 * self.c_value
    }
}

/// Fitness function bound to a scenario, a map and a set of weights.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    map: &'a RadioMap,
    hyper: HyperParams,
    collision_weight: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario, map: &'a RadioMap, hyper: HyperParams) -> Self {
        Self {
            scenario,
            map,
            hyper,
            collision_weight: 0.0,
        }
    }

    /// Adds `-weight * D` for UAV pairs closer than `d_min`.
    pub fn with_collision_weight(mut self, weight: f64) -> Self {
        self.collision_weight = weight;
        self
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn map(&self) -> &'a RadioMap {
        self.map
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn evaluate(&self, traj: &TrajectorySet) -> Result<FitnessBreakdown> {
        let (schedule, power) = greedy_schedule_and_power(traj, self.scenario, self.map)?;
        let t_value =
            LinkState::new(traj, &schedule, &power, self.map, self.scenario.n0)?.min_sum_rate()?;
        let s_value = speed_penalty(traj, self.scenario);
        let a_value = angle_penalty(traj, self.scenario);
        let c_value = building_penalty(traj, self.scenario);
        let d_value = if self.collision_weight > 0.0 {
            collision_penalty(traj, self.scenario)
        } else {
            0.0
        };
        let mut out = FitnessBreakdown {
            t_value,
            s_value,
            a_value,
            c_value,
            d_value,
            f_value: 0.0,
        };
        out.f_value = out.recompose(&self.hyper) - self.collision_weight * d_value;
        Ok(out)
    }
}

/// Evaluates `traj` with the default four-term fitness.
pub fn fitness(
    traj: &TrajectorySet,
    scenario: &Scenario,
    map: &RadioMap,
    hyper: &HyperParams,
) -> Result<FitnessBreakdown> {
    Evaluator::new(scenario, map, *hyper).evaluate(traj)
}
