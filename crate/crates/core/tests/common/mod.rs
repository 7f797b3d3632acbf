#![allow(dead_code)]

use std::path::PathBuf;

use swarm_tuner_core::{
    Building, Point3, RadioMap, Scenario, TrajectorySet, UgvPath, VoxelGrid,
};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn reference_scenario() -> Scenario {
    swarm_tuner_core::load_scenario(workspace_root().join("scenarios/hitsz_like.toml")).unwrap()
}

pub fn two_ugv_scenario() -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/two_ugv.toml");
    swarm_tuner_core::load_scenario(path).unwrap()
}

/// One-voxel world (10 m cube) where every UAV sits in the only cell and the
/// gains are set by hand: `gains[n - 1][t - 1]`.
pub fn point_world(
    uavs: usize,
    gains: &[Vec<f64>],
    r_min: f64,
    p_max: f64,
    n0: f64,
) -> (Scenario, RadioMap) {
    let ugvs = gains.len();
    let slots = gains[0].len();
    let grid = VoxelGrid::new(0.0, 0.0, 0.0, 10.0, [1, 1, 1]).unwrap();
    let scenario = Scenario {
        uav_count: uavs,
        ugv_count: ugvs,
        slots,
        tau: 1.0,
        v_max: 10.0,
        theta_max: std::f64::consts::FRAC_PI_2,
        h_min: 0.0,
        h_max: 10.0,
        d_min: 1.0,
        r_min,
        p_max,
        n0,
        grid,
        buildings: Vec::<Building>::new(),
        ugv_paths: (0..ugvs)
            .map(|_| UgvPath {
                waypoints: vec![Point3::new(5.0, 5.0, 0.0)],
                speed: 1.0,
            })
            .collect(),
    };
    scenario.validate().unwrap();
    let slices = gains
        .iter()
        .flat_map(|row| row.iter().map(|g| vec![*g]))
        .collect();
    let map = RadioMap::from_slices(grid, ugvs, slots, slices).unwrap();
    (scenario, map)
}

pub fn hover(uavs: usize, slots: usize) -> TrajectorySet {
    TrajectorySet::from_fn(uavs, slots, |_, _| Point3::new(5.0, 5.0, 5.0))
}

/// Slow straight line along x at mid altitude, one UAV per 20 m lane.
pub fn straight_lines(scenario: &Scenario, step: f64) -> TrajectorySet {
    let b = scenario.flight_box();
    let z = 0.5 * (scenario.h_min + scenario.h_max);
    TrajectorySet::from_fn(scenario.uav_count, scenario.slots, |m, t| {
        Point3::new(
            (b.lo.x + step * (t - 1) as f64).min(b.hi.x),
            (b.lo.y + 20.0 * m as f64).min(b.hi.y),
            z,
        )
    })
}
