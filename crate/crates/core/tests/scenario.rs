mod common;

use proptest::prelude::*;
use swarm_tuner_core::scenario::{kmh_to_ms, watts_to_dbm};
use swarm_tuner_core::{Error, Point3, Scenario, UgvPath};

#[test]
fn reference_scenario_has_the_published_fleet_and_volume() {
    let s = common::reference_scenario();
    assert_eq!((s.uav_count, s.ugv_count, s.slots), (4, 8, 30));
    assert_eq!(s.grid.dims, [48, 80, 12]);
    assert_eq!(s.grid.delta, 5.0);
    assert_eq!((s.grid.x_max() - s.grid.x_min, s.grid.y_max() - s.grid.y_min), (240.0, 400.0));
    assert_eq!(s.grid.h_top() - s.grid.h_min, 60.0);
    let speeds = [18.0, 18.0, 13.8, 13.8, 12.5, 17.0, 13.0, 19.0];
    for (path, kmh) in s.ugv_paths.iter().zip(speeds) {
        assert!((path.speed - kmh_to_ms(kmh)).abs() < 1e-12);
    }
    assert!((watts_to_dbm(s.p_max) - 20.0).abs() < 1e-9);
}

#[test]
fn serialized_scenario_parses_back_equal() {
    for s in [common::reference_scenario(), common::two_ugv_scenario()] {
        let text = s.to_toml_string().unwrap();
        let back = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(back.uav_count, s.uav_count);
        assert_eq!(back.grid, s.grid);
        assert_eq!(back.buildings, s.buildings);
        for (a, b) in back.ugv_paths.iter().zip(&s.ugv_paths) {
            assert_eq!(a.waypoints, b.waypoints);
            assert!((a.speed - b.speed).abs() <= 1e-12 * b.speed);
        }
        for (a, b) in [
            (back.tau, s.tau),
            (back.v_max, s.v_max),
            (back.theta_max, s.theta_max),
            (back.p_max, s.p_max),
            (back.n0, s.n0),
            (back.r_min, s.r_min),
        ] {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }
}

#[test]
fn inverted_altitude_band_names_h_max() {
    let text = std::fs::read_to_string(common::workspace_root().join("scenarios/hitsz_like.toml"))
        .unwrap()
        .replace("h_max_m = 80.0", "h_max_m = 20.0");
    match Scenario::from_toml_str(&text) {
        Err(Error::Invalid { field, .. }) => assert_eq!(field, "h_max"),
        other => panic!("expected h_max error, got {other:?}"),
    }
}

#[test]
fn unknown_keys_and_bad_syntax_are_errors() {
    let text = std::fs::read_to_string(common::workspace_root().join("scenarios/hitsz_like.toml"))
        .unwrap();
    assert!(Scenario::from_toml_str(&text.replace("uavs = 4", "uavs = 4\nbogus = 1")).is_err());
    assert!(Scenario::from_toml_str("[fleet\nuavs = ").is_err());
}

#[test]
fn kinematics_examples() {
    let mut s = common::two_ugv_scenario();
    s.ugv_paths[0] = UgvPath {
        waypoints: vec![Point3::new(0.0, 0.0, 0.0), Point3::new(100.0, 0.0, 0.0)],
        speed: 10.0,
    };
    s.tau = 1.0;
    assert_eq!(s.ugv_position(1, 1).unwrap(), Point3::new(0.0, 0.0, 0.0));
    assert_eq!(s.ugv_position(1, 3).unwrap(), Point3::new(20.0, 0.0, 0.0));

    s.tau = 50.0;
    assert_eq!(s.ugv_position(1, 4).unwrap(), Point3::new(100.0, 0.0, 0.0));

    s.ugv_paths[1] = UgvPath {
        waypoints: vec![Point3::new(7.0, 9.0, 0.0)],
        speed: 3.0,
    };
    for t in 1..=4 {
        assert_eq!(s.ugv_position(2, t).unwrap(), Point3::new(7.0, 9.0, 0.0));
    }
    assert!(s.ugv_position(0, 1).is_err());
    assert!(s.ugv_position(3, 1).is_err());
    assert!(s.ugv_position(1, 5).is_err());
}

proptest! {
    #[test]
    fn consecutive_ugv_positions_respect_speed(n in 1usize..=8, t in 1usize..30) {
        let s = common::reference_scenario();
        let a = s.ugv_position(n, t).unwrap();
        let b = s.ugv_position(n, t + 1).unwrap();
        prop_assert!((b - a).norm() <= s.ugv_paths[n - 1].speed * s.tau * (1.0 + 1e-12));
        prop_assert_eq!(a.z, 0.0);
    }
}
