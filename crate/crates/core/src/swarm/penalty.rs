//! Normalized constraint-violation measures of a trajectory set.

use serde::{Deserialize, Serialize};

use crate::link_layer::TrajectorySet;
use crate::scenario::Scenario;
use crate::Point3;

/// Relative slack under which an excess counts as zero.
pub const FEASIBILITY_EPS: f64 = 1e-9;

/// Displacements shorter than this (meters) have no direction.
const MIN_DISPLACEMENT: f64 = 1e-9;

fn excess(value: f64, limit: f64) -> f64 {
    let e = (value - limit) / limit;
    if e > FEASIBILITY_EPS {
        e
    } else {
        0.0
    }
}

/// `S = sum_m sum_{t>=2} max(0, (v_m[t] - v_max) / v_max)` with
/// `v_m[t] = |l_m[t] - l_m[t-1]| / tau`.
pub fn speed_penalty(traj: &TrajectorySet, scenario: &Scenario) -> f64 {
    (0..traj.uav_count())
        .map(|m0| {
            traj.uav_path(m0)
                .windows(2)
                .map(|w| excess((w[1] - w[0]).norm() / scenario.tau, scenario.v_max))
                .sum::<f64>()
        })
        .sum()
}

/// Angle between consecutive displacements; zero if either has no length.
pub(crate) fn turning_angle(a: &Point3, b: &Point3) -> f64 {
    if a.norm() <= MIN_DISPLACEMENT || b.norm() <= MIN_DISPLACEMENT {
        return 0.0;
    }
    a.cross(b).norm().atan2(a.dot(b))
}

/// `A = sum_m sum_{t=2}^{T-1} max(0, (theta_m[t] - theta_max) / theta_max)`.
pub fn angle_penalty(traj: &TrajectorySet, scenario: &Scenario) -> f64 {
    (0..traj.uav_count())
        .map(|m0| {
            traj.uav_path(m0)
                .windows(3)
                .map(|w| excess(turning_angle(&(w[1] - w[0]), &(w[2] - w[1])), scenario.theta_max))
                .sum::<f64>()
        })
        .sum()
}

/// `C = sum_m sum_{t=1}^{T-1} max(0, Delta_m[t])`, where `Delta` is the
/// depth below the roof of a building whose footprint holds the waypoint,
/// relative to that building's height (largest such building wins).
pub fn building_penalty(traj: &TrajectorySet, scenario: &Scenario) -> f64 {
    let slots = traj.slots();
    (0..traj.uav_count())
        .map(|m0| {
            traj.uav_path(m0)[..slots - 1]
                .iter()
                .map(|p| {
                    scenario
                        .buildings
                        .iter()
                        .filter(|b| b.height > 0.0 && b.footprint_contains(p.x, p.y))
                        .map(|b| (b.height - p.z) / b.height)
                        .fold(0.0_f64, f64::max)
                })
                .map(|d| if d > FEASIBILITY_EPS { d } else { 0.0 })
                .sum::<f64>()
        })
        .sum()
}

/// Pairwise UAV separation summary over all slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    /// `(m, m', t)` triples, `m < m'`, closer than `d_min`.
    pub violations: usize,
    /// Smallest separation seen; `None` with a single UAV.
    pub min_distance: Option<f64>,
}

pub fn collision_report(traj: &TrajectorySet, scenario: &Scenario) -> CollisionReport {
    let mut report = CollisionReport {
        violations: 0,
        min_distance: None,
    };
    for_each_pair(traj, |d| {
        if d < scenario.d_min {
            report.violations += 1;
        }
        report.min_distance = Some(report.min_distance.map_or(d, |m| m.min(d)));
    });
    report
}

/// `sum max(0, (d_min - d) / d_min)` over UAV pairs and slots. Not part of
/// the default fitness.
pub fn collision_penalty(traj: &TrajectorySet, scenario: &Scenario) -> f64 {
    let mut total = 0.0;
    for_each_pair(traj, |d| total += ((scenario.d_min - d) / scenario.d_min).max(0.0));
    total
}

fn for_each_pair(traj: &TrajectorySet, mut f: impl FnMut(f64)) {
    let uavs = traj.uav_count();
    for t0 in 0..traj.slots() {
        for a in 0..uavs {
            for b in a + 1..uavs {
                f((traj.at(a, t0) - traj.at(b, t0)).norm());
            }
        }
    }
}
