use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight tuned values: swarm size, PSO coefficients and fitness weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Particle count.
    pub p_num: usize,
    /// Inertia weight.
    pub omega: f64,
    /// Cognitive coefficient.
    pub c1: f64,
    /// Social coefficient.
    pub c2: f64,
    /// Weight of the min-sum-rate term.
    pub k1: f64,
    /// Weight of the speed penalty.
    pub k2: f64,
    /// Weight of the turning-angle penalty.
    pub k3: f64,
    /// Weight of the building penalty.
    pub k4: f64,
}

impl HyperParams {
    /// Field names in [`to_array`](Self::to_array) order.
    pub const NAMES: [&'static str; 8] = ["p_num", "omega", "c1", "c2", "k1", "k2", "k3", "k4"];

    /// Hand-tuned values from prior work.
    pub const fn baseline1() -> Self {
        Self {
            p_num: 100,
            omega: 0.5,
            c1: 2.0,
            c2: 2.0,
            k1: 2.0,
            k2: 0.5,
            k3: 5.0,
            k4: 5.0,
        }
    }

    /// One uniform random draw, kept fixed for comparisons.
    pub const fn baseline2() -> Self {
        Self {
            p_num: 58,
            omega: 0.8765,
            c1: 5.4321,
            c2: 9.8765,
            k1: 3.7284,
            k2: 8.1235,
            k3: 1.9823,
            k4: 6.5432,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_num < 2 {
            return Err(Error::invalid("p_num", "p_num ≥ 2 required"));
        }
        for (name, v) in Self::NAMES.iter().zip(self.to_array()).skip(1) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(*name, format!("{name} must be finite and ≥ 0")));
            }
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.p_num as f64,
            self.omega,
            self.c1,
            self.c2,
            self.k1,
            self.k2,
            self.k3,
            self.k4,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array); `p_num` is rounded to the
    /// nearest integer (negative values become zero).
    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            p_num: v[0].round().max(0.0) as usize,
            omega: v[1],
            c1: v[2],
            c2: v[3],
            k1: v[4],
            k2: v[5],
            k3: v[6],
            k4: v[7],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        HyperParams::baseline1().validate().unwrap();
        HyperParams::baseline2().validate().unwrap();
    }

    #[test]
    fn single_particle_is_rejected() {
        let h = HyperParams {
            p_num: 1,
            ..HyperParams::baseline1()
        };
        match h.validate() {
            Err(Error::Invalid { field, reason }) => {
                assert_eq!(field, "p_num");
                assert!(reason.contains("p_num ≥ 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_or_nan_weights_are_rejected() {
        let h = HyperParams {
            k3: -1.0,
            ..HyperParams::baseline1()
        };
        assert!(matches!(h.validate(), Err(Error::Invalid { field, .. }) if field == "k3"));
        let h = HyperParams {
            omega: f64::NAN,
            ..HyperParams::baseline1()
        };
        assert!(matches!(h.validate(), Err(Error::Invalid { field, .. }) if field == "omega"));
    }

    #[test]
    fn array_round_trip() {
        let h = HyperParams::baseline2();
        assert_eq!(HyperParams::from_array(h.to_array()), h);
    }
}
