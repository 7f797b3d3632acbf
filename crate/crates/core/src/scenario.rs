//! Problem description: fleet sizes, horizon, limits and UGV motion.
//!
//! Scenario files are TOML. Lengths are meters, speeds km/h, powers dBm and
//! angles degrees; everything is converted to SI on load. See
//! `docs/scenario.md` for the schema.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_map::{Building, VoxelGrid};
use crate::Point3;

/// Piecewise-linear ground path driven at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UgvPath {
    /// Waypoints with `z == 0`.
    pub waypoints: Vec<Point3>,
    /// Meters per second.
    pub speed: f64,
}

impl UgvPath {
    /// Position after driving `distance` meters, clamped at the last waypoint.
    pub fn position_at_distance(&self, distance: f64) -> Point3 {
        let mut remaining = distance.max(0.0);
        for pair in self.waypoints.windows(2) {
            let seg = pair[1] - pair[0];
            let len = seg.norm();
            if remaining <= len {
                if len == 0.0 {
                    return pair[0];
                }
                return pair[0] + seg * (remaining / len);
            }
            remaining -= len;
        }
        *self.waypoints.last().expect("validated path has waypoints")
    }
}

/// Validated, SI-unit problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// UAV count `M`.
    pub uav_count: usize,
    /// UGV count `N`.
    pub ugv_count: usize,
    /// Slot count `T`.
    pub slots: usize,
    /// Slot length in seconds.
    pub tau: f64,
    /// Maximum UAV speed, m/s.
    pub v_max: f64,
    /// Maximum turning angle, radians.
    pub theta_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Minimum UAV separation, meters.
    pub d_min: f64,
    /// Per-link QoS floor, bps/Hz.
    pub r_min: f64,
    /// UGV transmit power cap, watts.
    pub p_max: f64,
    /// Noise power, watts.
    pub n0: f64,
    pub grid: VoxelGrid,
    pub buildings: Vec<Building>,
    pub ugv_paths: Vec<UgvPath>,
}

/// Axis-aligned box UAV waypoints are confined to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightBox {
    pub lo: Point3,
    pub hi: Point3,
}

impl FlightBox {
    pub fn clamp(&self, p: &Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.lo.x, self.hi.x),
            p.y.clamp(self.lo.y, self.hi.y),
            p.z.clamp(self.lo.z, self.hi.z),
        )
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.uav_count < 1 {
            return Err(Error::invalid("uav_count", "M must be >= 1"));
        }
        if self.ugv_count < 1 {
            return Err(Error::invalid("ugv_count", "N must be >= 1"));
        }
        if self.slots < 2 {
            return Err(Error::invalid("slots", "T must be >= 2"));
        }
        positive("tau", self.tau)?;
        positive("v_max", self.v_max)?;
        if !(self.theta_max > 0.0 && self.theta_max <= PI) {
            return Err(Error::invalid("theta_max", "must lie in (0, pi]"));
        }
        if !self.h_min.is_finite() {
            return Err(Error::invalid("h_min", "must be finite"));
        }
        if !(self.h_max.is_finite() && self.h_max > self.h_min) {
            return Err(Error::invalid(
                "h_max",
                format!("must exceed h_min = {}", self.h_min),
            ));
        }
        if self.grid.h_min != self.h_min {
            return Err(Error::invalid(
                "grid.h_min",
                format!("grid anchor {} must equal h_min {}", self.grid.h_min, self.h_min),
            ));
        }
        if self.h_max > self.grid.h_top() {
            return Err(Error::invalid(
                "h_max",
                format!("must not exceed the grid top {}", self.grid.h_top()),
            ));
        }
        positive("d_min", self.d_min)?;
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return Err(Error::invalid("r_min", "must be >= 0"));
        }
        positive("p_max", self.p_max)?;
        positive("n0", self.n0)?;

        let (x_lo, x_hi) = (self.grid.x_min, self.grid.x_max());
        let (y_lo, y_hi) = (self.grid.y_min, self.grid.y_max());
        for (i, b) in self.buildings.iter().enumerate() {
            let field = format!("buildings[{i}]");
            if !(b.height.is_finite() && b.height >= 0.0) {
                return Err(Error::invalid(field, "height must be >= 0"));
            }
            if !(b.x_min < b.x_max && b.y_min < b.y_max) {
                return Err(Error::invalid(field, "footprint must have positive area"));
            }
            if b.x_min < x_lo || b.x_max > x_hi || b.y_min < y_lo || b.y_max > y_hi {
                return Err(Error::invalid(field, "footprint leaves the grid extents"));
            }
        }

        if self.ugv_paths.len() != self.ugv_count {
            return Err(Error::invalid(
                "ugv_paths",
                format!(
                    "{} paths given for N = {}",
                    self.ugv_paths.len(),
                    self.ugv_count
                ),
            ));
        }
        for (i, path) in self.ugv_paths.iter().enumerate() {
            let field = format!("ugv_paths[{i}]");
            if !(path.speed.is_finite() && path.speed > 0.0) {
                return Err(Error::invalid(field, "speed must be > 0"));
            }
            if path.waypoints.is_empty() {
                return Err(Error::invalid(field, "needs at least one waypoint"));
            }
            for w in &path.waypoints {
                if w.z != 0.0 {
                    return Err(Error::invalid(field, "waypoints must lie on the ground (z = 0)"));
                }
                if !(w.x >= x_lo && w.x <= x_hi && w.y >= y_lo && w.y <= y_hi) {
                    return Err(Error::invalid(field, "waypoint leaves the grid extents"));
                }
            }
        }
        Ok(())
    }

    /// Position of UGV `n` at slot `t` (both one-based). Slot 1 is the start
    /// of the path.
    pub fn ugv_position(&self, n: usize, t: usize) -> Result<Point3> {
        let n0 = Error::check_index("UGV", n, self.ugv_count)?;
        let t0 = Error::check_index("slot", t, self.slots)?;
        let path = &self.ugv_paths[n0];
        Ok(path.position_at_distance(t0 as f64 * path.speed * self.tau))
    }

    /// Horizontal grid extent times the permitted altitude band.
    pub fn flight_box(&self) -> FlightBox {
        FlightBox {
            lo: Point3::new(self.grid.x_min, self.grid.y_min, self.h_min),
            hi: Point3::new(self.grid.x_max(), self.grid.y_max(), self.h_max),
        }
    }

    /// Largest per-slot displacement allowed by the speed limit.
    pub fn max_step(&self) -> f64 {
        self.v_max * self.tau
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_scenario()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(&ScenarioFile::from_scenario(self))
            .map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml_str(&text)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be > 0"))
    }
}

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

// On-disk layout, in file units.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    fleet: FleetSection,
    time: TimeSection,
    grid: GridSection,
    flight: FlightSection,
    link: LinkSection,
    #[serde(default)]
    buildings: Vec<BuildingSection>,
    #[serde(default)]
    ugvs: Vec<UgvSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FleetSection {
    uavs: usize,
    ugvs: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    slots: usize,
    tau_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    x_min_m: f64,
    y_min_m: f64,
    delta_m: f64,
    dims: [usize; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlightSection {
    h_min_m: f64,
    h_max_m: f64,
    v_max_kmh: f64,
    theta_max_deg: f64,
    d_min_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSection {
    r_min_bps_hz: f64,
    p_max_dbm: f64,
    n0_dbm: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingSection {
    x_m: [f64; 2],
    y_m: [f64; 2],
    height_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UgvSection {
    speed_kmh: f64,
    /// `[x, y]` or `[x, y, 0]`.
    waypoints: Vec<Vec<f64>>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let grid = VoxelGrid {
            x_min: self.grid.x_min_m,
            y_min: self.grid.y_min_m,
            h_min: self.flight.h_min_m,
            delta: self.grid.delta_m,
            dims: self.grid.dims,
        };
        let buildings = self
            .buildings
            .iter()
            .map(|b| Building {
                x_min: b.x_m[0],
                x_max: b.x_m[1],
                y_min: b.y_m[0],
                y_max: b.y_m[1],
                height: b.height_m,
            })
            .collect();
        let ugv_paths = self
            .ugvs
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let waypoints = u
                    .waypoints
                    .iter()
                    .map(|w| match w.as_slice() {
                        [x, y] => Ok(Point3::new(*x, *y, 0.0)),
                        [x, y, z] => Ok(Point3::new(*x, *y, *z)),
                        _ => Err(Error::invalid(
                            format!("ugvs[{i}].waypoints"),
                            "each waypoint is [x, y] or [x, y, 0]",
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(UgvPath {
                    waypoints,
                    speed: kmh_to_ms(u.speed_kmh),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let scenario = Scenario {
            uav_count: self.fleet.uavs,
            ugv_count: self.fleet.ugvs,
            slots: self.time.slots,
            tau: self.time.tau_s,
            v_max: kmh_to_ms(self.flight.v_max_kmh),
            theta_max: self.flight.theta_max_deg.to_radians(),
            h_min: self.flight.h_min_m,
            h_max: self.flight.h_max_m,
            d_min: self.flight.d_min_m,
            r_min: self.link.r_min_bps_hz,
            p_max: dbm_to_watts(self.link.p_max_dbm),
            n0: dbm_to_watts(self.link.n0_dbm),
            grid,
            buildings,
            ugv_paths,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn from_scenario(s: &Scenario) -> Self {
        Self {
            name: None,
            fleet: FleetSection {
                uavs: s.uav_count,
                ugvs: s.ugv_count,
            },
            time: TimeSection {
                slots: s.slots,
                tau_s: s.tau,
            },
            grid: GridSection {
                x_min_m: s.grid.x_min,
                y_min_m: s.grid.y_min,
                delta_m: s.grid.delta,
                dims: s.grid.dims,
            },
            flight: FlightSection {
                h_min_m: s.h_min,
                h_max_m: s.h_max,
                v_max_kmh: s.v_max * 3.6,
                theta_max_deg: s.theta_max.to_degrees(),
                d_min_m: s.d_min,
            },
            link: LinkSection {
                r_min_bps_hz: s.r_min,
                p_max_dbm: watts_to_dbm(s.p_max),
                n0_dbm: watts_to_dbm(s.n0),
            },
            buildings: s
                .buildings
                .iter()
                .map(|b| BuildingSection {
                    x_m: [b.x_min, b.x_max],
                    y_m: [b.y_min, b.y_max],
                    height_m: b.height,
                })
                .collect(),
            ugvs: s
                .ugv_paths
                .iter()
                .map(|p| UgvSection {
                    speed_kmh: p.speed * 3.6,
                    waypoints: p.waypoints.iter().map(|w| vec![w.x, w.y]).collect(),
                })
                .collect(),
        }
    }
}
