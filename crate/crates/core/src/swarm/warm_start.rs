use rand::Rng;

use crate::error::Result;
use crate::link_layer::TrajectorySet;
use crate::scenario::Scenario;
use crate::Point3;

/// Deterministic geometric starting trajectory.
///
/// UGV `n` is assigned to UAV `((n - 1) mod M) + 1`; a UAV left without UGVs
/// (when `N < M`) shadows UGV `((m - 1) mod N) + 1`. Each UAV tracks the
/// per-slot centroid of its UGVs at mid altitude, never moving more than
/// `v_max * tau` horizontally per slot.
pub fn warm_start(scenario: &Scenario) -> Result<TrajectorySet> {
    scenario.validate()?;
    let (uavs, ugvs, slots) = (scenario.uav_count, scenario.ugv_count, scenario.slots);
    let altitude = 0.5 * (scenario.h_min + scenario.h_max);
    let bounds = scenario.flight_box();
    let max_step = scenario.max_step();

    let mut points = Vec::with_capacity(uavs * slots);
    for m0 in 0..uavs {
        let mut assigned: Vec<usize> = (0..ugvs).filter(|n0| n0 % uavs == m0).collect();
        if assigned.is_empty() {
            assigned.push(m0 % ugvs);
        }
        let mut prev: Option<Point3> = None;
        for t in 1..=slots {
            let mut centroid = Point3::zeros();
            for &n0 in &assigned {
                centroid += scenario.ugv_position(n0 + 1, t)?;
            }
            centroid /= assigned.len() as f64;
            centroid.z = altitude;
            let target = bounds.clamp(&centroid);
            let next = match prev {
                None => target,
                Some(p) => {
                    let step = target - p;
                    let len = step.norm();
                    if len > max_step {
                        p + step * (max_step / len)
                    } else {
                        target
                    }
                }
            };
            points.push(next);
            prev = Some(next);
        }
    }
    TrajectorySet::new(uavs, slots, points)
}

/// Waypoints drawn independently and uniformly from the flight box.
pub fn random_trajectory<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrajectorySet {
    let b = scenario.flight_box();
    TrajectorySet::from_fn(scenario.uav_count, scenario.slots, |_, _| {
        Point3::new(
            rng.random_range(b.lo.x..=b.hi.x),
            rng.random_range(b.lo.y..=b.hi.y),
            rng.random_range(b.lo.z..=b.hi.z),
        )
    })
}
