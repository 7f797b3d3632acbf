//! SINR, rates, scheduling and the min-sum-rate objective.
//!
//! All public indices (`m`, `n`, `t`) are one-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_map::{RadioMap, VoxelIndex};
use crate::scenario::Scenario;
use crate::Point3;

/// UAV waypoints for every UAV and slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    uavs: usize,
    slots: usize,
    /// Indexed `m0 * slots + t0`.
    points: Vec<Point3>,
}

impl TrajectorySet {
    pub fn new(uavs: usize, slots: usize, points: Vec<Point3>) -> Result<Self> {
        if uavs == 0 || slots == 0 {
            return Err(Error::invalid("trajectory", "needs at least one UAV and slot"));
        }
        if points.len() != uavs * slots {
            return Err(Error::invalid(
                "trajectory",
                format!("{} points for {uavs} UAVs x {slots} slots", points.len()),
            ));
        }
        Ok(Self {
            uavs,
            slots,
            points,
        })
    }

    /// Builds a trajectory from `f(m, t)` with one-based indices.
    pub fn from_fn(uavs: usize, slots: usize, mut f: impl FnMut(usize, usize) -> Point3) -> Self {
        let mut points = Vec::with_capacity(uavs * slots);
        for m in 1..=uavs {
            for t in 1..=slots {
                points.push(f(m, t));
            }
        }
        Self {
            uavs,
            slots,
            points,
        }
    }

    pub fn uav_count(&self) -> usize {
        self.uavs
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn pos(&self, m: usize, t: usize) -> Result<Point3> {
        let m0 = Error::check_index("UAV", m, self.uavs)?;
        let t0 = Error::check_index("slot", t, self.slots)?;
        Ok(self.points[m0 * self.slots + t0])
    }

    /// Waypoints of one UAV (zero-based `m0`) in slot order.
    pub fn uav_path(&self, m0: usize) -> &[Point3] {
        &self.points[m0 * self.slots..(m0 + 1) * self.slots]
    }

    pub(crate) fn at(&self, m0: usize, t0: usize) -> &Point3 {
        &self.points[m0 * self.slots + t0]
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Point3] {
        &mut self.points
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.uavs == other.uavs && self.slots == other.slots
    }
}

/// Binary UAV-UGV association per slot.
///
/// Each UAV serves at most one UGV and each UGV is served by at most one UAV
/// in any slot; the representation enforces the first, the constructors
/// check the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    uavs: usize,
    ugvs: usize,
    slots: usize,
    /// Zero-based UGV per `t0 * uavs + m0`.
    assign: Vec<Option<usize>>,
}

impl Schedule {
    pub fn empty(uavs: usize, ugvs: usize, slots: usize) -> Self {
        Self {
            uavs,
            ugvs,
            slots,
            assign: vec![None; uavs * slots],
        }
    }

    /// `assignments[t - 1][m - 1]` is the one-based UGV served by UAV `m` at
    /// slot `t`, if any.
    pub fn from_assignments(
        uavs: usize,
        ugvs: usize,
        assignments: &[Vec<Option<usize>>],
    ) -> Result<Self> {
        let mut sched = Self::empty(uavs, ugvs, assignments.len());
        for (t0, row) in assignments.iter().enumerate() {
            if row.len() != uavs {
                return Err(Error::invalid(
                    "schedule",
                    format!("slot {} lists {} UAVs, expected {uavs}", t0 + 1, row.len()),
                ));
            }
            for (m0, n) in row.iter().enumerate() {
                sched.assign(m0 + 1, t0 + 1, *n)?;
            }
        }
        Ok(sched)
    }

    /// Points UAV `m` at UGV `n` (or nothing) in slot `t`.
    pub fn assign(&mut self, m: usize, t: usize, n: Option<usize>) -> Result<()> {
        let m0 = Error::check_index("UAV", m, self.uavs)?;
        let t0 = Error::check_index("slot", t, self.slots)?;
        let n0 = n.map(|n| Error::check_index("UGV", n, self.ugvs)).transpose()?;
        if let Some(n0) = n0 {
            let clash = (0..self.uavs)
                .any(|other| other != m0 && self.assign[t0 * self.uavs + other] == Some(n0));
            if clash {
                return Err(Error::invalid(
                    "schedule",
                    format!("UGV {} served twice in slot {t}", n0 + 1),
                ));
            }
        }
        self.assign[t0 * self.uavs + m0] = n0;
        Ok(())
    }

    pub fn uav_count(&self) -> usize {
        self.uavs
    }

    pub fn ugv_count(&self) -> usize {
        self.ugvs
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// One-based UGV served by UAV `m` at slot `t`.
    pub fn ugv_for(&self, m: usize, t: usize) -> Option<usize> {
        if m == 0 || m > self.uavs || t == 0 || t > self.slots {
            return None;
        }
        self.assign[(t - 1) * self.uavs + (m - 1)].map(|n0| n0 + 1)
    }

    /// The indicator `a(m, n, t)`.
    pub fn is_scheduled(&self, m: usize, n: usize, t: usize) -> bool {
        self.ugv_for(m, t) == Some(n)
    }

    pub(crate) fn ugv0(&self, m0: usize, t0: usize) -> Option<usize> {
        self.assign[t0 * self.uavs + m0]
    }

    /// Whether UGV `n0` is served by any UAV at `t0`.
    pub(crate) fn ugv_active0(&self, n0: usize, t0: usize) -> bool {
        self.assign[t0 * self.uavs..(t0 + 1) * self.uavs].contains(&Some(n0))
    }

    /// Row sums (per UAV) and column sums (per UGV) of `a` are at most one.
    pub fn is_valid(&self) -> bool {
        (0..self.slots).all(|t0| {
            let row = &self.assign[t0 * self.uavs..(t0 + 1) * self.uavs];
            let mut seen = vec![false; self.ugvs];
            row.iter().flatten().all(|&n0| {
                let fresh = n0 < self.ugvs && !seen[n0];
                if n0 < self.ugvs {
                    seen[n0] = true;
                }
                fresh
            })
        })
    }

    pub fn scheduled_links(&self) -> usize {
        self.assign.iter().filter(|a| a.is_some()).count()
    }
}

/// Transmit power of every UGV per slot, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlan {
    ugvs: usize,
    slots: usize,
    /// Indexed `n0 * slots + t0`.
    watts: Vec<f64>,
}

impl PowerPlan {
    pub fn uniform(ugvs: usize, slots: usize, watts: f64) -> Self {
        Self {
            ugvs,
            slots,
            watts: vec![watts; ugvs * slots],
        }
    }

    /// Sets `p(n, t)`, enforcing `0 <= p <= p_max`.
    pub fn set(&mut self, n: usize, t: usize, watts: f64, p_max: f64) -> Result<()> {
        let n0 = Error::check_index("UGV", n, self.ugvs)?;
        let t0 = Error::check_index("slot", t, self.slots)?;
        if !(watts >= 0.0 && watts <= p_max) {
            return Err(Error::invalid("power", format!("{watts} W outside [0, {p_max}]")));
        }
        self.watts[n0 * self.slots + t0] = watts;
        Ok(())
    }

    pub fn get(&self, n: usize, t: usize) -> Result<f64> {
        let n0 = Error::check_index("UGV", n, self.ugvs)?;
        let t0 = Error::check_index("slot", t, self.slots)?;
        Ok(self.watts[n0 * self.slots + t0])
    }

    pub(crate) fn get0(&self, n0: usize, t0: usize) -> f64 {
        self.watts[n0 * self.slots + t0]
    }
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLink {
    pub m: usize,
    pub t: usize,
    pub position: Point3,
    /// One-based UGV served, if any.
    pub ugv: Option<usize>,
    pub rate: f64,
}

/// Everything needed to evaluate links: trajectories, association, power,
/// the radio map and the noise floor.
#[derive(Debug, Clone, Copy)]
pub struct LinkState<'a> {
    traj: &'a TrajectorySet,
    schedule: &'a Schedule,
    power: &'a PowerPlan,
    map: &'a RadioMap,
    noise_power: f64,
}

impl<'a> LinkState<'a> {
    pub fn new(
        traj: &'a TrajectorySet,
        schedule: &'a Schedule,
        power: &'a PowerPlan,
        map: &'a RadioMap,
        noise_power: f64,
    ) -> Result<Self> {
        let uavs = traj.uav_count();
        let ugvs = map.ugv_count();
        let slots = traj.slots();
        if schedule.uavs != uavs || schedule.ugvs != ugvs || schedule.slots != slots {
            return Err(Error::invalid("schedule", "shape does not match trajectory and map"));
        }
        if power.ugvs != ugvs || power.slots != slots {
            return Err(Error::invalid("power", "shape does not match map"));
        }
        if map.slot_count() != slots {
            return Err(Error::invalid("map", "slot count does not match trajectory"));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::invalid("n0", "must be > 0"));
        }
        Ok(Self {
            traj,
            schedule,
            power,
            map,
            noise_power,
        })
    }

    fn voxel(&self, m0: usize, t0: usize) -> Result<VoxelIndex> {
        self.map.grid().index_of(self.traj.at(m0, t0))
    }

    fn sinr0(&self, n0: usize, t0: usize, omega: VoxelIndex) -> f64 {
        let signal = self.map.gain0(n0, t0, omega) * self.power.get0(n0, t0);
        let interference: f64 = (0..self.map.ugv_count())
            .filter(|&p| p != n0 && self.schedule.ugv_active0(p, t0))
            .map(|p| self.map.gain0(p, t0, omega) * self.power.get0(p, t0))
            .sum();
        signal / (interference + self.noise_power)
    }

    /// SINR of the scheduled link `m <- n` at slot `t`. Every other UGV
    /// served by some UAV at `t` interferes.
    pub fn sinr(&self, m: usize, n: usize, t: usize) -> Result<f64> {
        let m0 = Error::check_index("UAV", m, self.traj.uav_count())?;
        let n0 = Error::check_index("UGV", n, self.map.ugv_count())?;
        let t0 = Error::check_index("slot", t, self.traj.slots())?;
        if self.schedule.ugv0(m0, t0) != Some(n0) {
            return Err(Error::Unscheduled { m, n, t });
        }
        Ok(self.sinr0(n0, t0, self.voxel(m0, t0)?))
    }

    /// `log2(1 + a * SINR)`: exactly zero for unscheduled pairs.
    pub fn rate(&self, m: usize, n: usize, t: usize) -> Result<f64> {
        let m0 = Error::check_index("UAV", m, self.traj.uav_count())?;
        let n0 = Error::check_index("UGV", n, self.map.ugv_count())?;
        let t0 = Error::check_index("slot", t, self.traj.slots())?;
        if self.schedule.ugv0(m0, t0) != Some(n0) {
            return Ok(0.0);
        }
        Ok(self.sinr0(n0, t0, self.voxel(m0, t0)?).ln_1p() / std::f64::consts::LN_2)
    }

    /// Per-link rows for every `(m, t)`.
    pub fn slot_links(&self) -> Result<Vec<SlotLink>> {
        let mut rows = Vec::with_capacity(self.traj.uav_count() * self.traj.slots());
        for m0 in 0..self.traj.uav_count() {
            for t0 in 0..self.traj.slots() {
                let ugv = self.schedule.ugv0(m0, t0);
                let rate = match ugv {
                    Some(n0) => log2_1p(self.sinr0(n0, t0, self.voxel(m0, t0)?)),
                    None => 0.0,
                };
                rows.push(SlotLink {
                    m: m0 + 1,
                    t: t0 + 1,
                    position: *self.traj.at(m0, t0),
                    ugv: ugv.map(|n0| n0 + 1),
                    rate,
                });
            }
        }
        Ok(rows)
    }

    /// Total rate of each UGV over all UAVs and slots, indexed by `n - 1`.
    pub fn ugv_sum_rates(&self) -> Result<Vec<f64>> {
        let mut sums = vec![0.0; self.map.ugv_count()];
        for t0 in 0..self.traj.slots() {
            for m0 in 0..self.traj.uav_count() {
                if let Some(n0) = self.schedule.ugv0(m0, t0) {
                    sums[n0] += log2_1p(self.sinr0(n0, t0, self.voxel(m0, t0)?));
                }
            }
        }
        Ok(sums)
    }

    /// Minimum over UGVs of their total rate.
    pub fn min_sum_rate(&self) -> Result<f64> {
        Ok(self
            .ugv_sum_rates()?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Full power for every UGV and, per slot, greedy maximum-gain matching of
/// UAVs to UGVs. Ties go to the lowest `(m, n)`. Matched links whose rate
/// under the resulting interference falls below `r_min` are dropped.
pub fn greedy_schedule_and_power(
    traj: &TrajectorySet,
    scenario: &Scenario,
    map: &RadioMap,
) -> Result<(Schedule, PowerPlan)> {
    let (uavs, ugvs, slots) = (traj.uav_count(), map.ugv_count(), traj.slots());
    if uavs != scenario.uav_count || ugvs != scenario.ugv_count || slots != scenario.slots {
        return Err(Error::invalid("trajectory", "shape does not match scenario"));
    }
    if map.slot_count() != slots {
        return Err(Error::invalid("map", "slot count does not match scenario"));
    }
    let power = PowerPlan::uniform(ugvs, slots, scenario.p_max);
    let mut schedule = Schedule::empty(uavs, ugvs, slots);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(uavs * ugvs);
    let mut omegas = Vec::with_capacity(uavs);
    let mut uav_taken = vec![false; uavs];
    let mut ugv_taken = vec![false; ugvs];
    let mut matched: Vec<(usize, usize)> = Vec::with_capacity(uavs.min(ugvs));

    for t0 in 0..slots {
        omegas.clear();
        for m0 in 0..uavs {
            omegas.push(map.grid().index_of(traj.at(m0, t0))?);
        }
        pairs.clear();
        for (m0, &omega) in omegas.iter().enumerate() {
            for n0 in 0..ugvs {
                pairs.push((map.gain0(n0, t0, omega), m0, n0));
            }
        }
        // Stable sort keeps (m, n) order among equal gains.
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

        uav_taken.iter_mut().for_each(|x| *x = false);
        ugv_taken.iter_mut().for_each(|x| *x = false);
        matched.clear();
        for &(_, m0, n0) in &pairs {
            if !uav_taken[m0] && !ugv_taken[n0] {
                uav_taken[m0] = true;
                ugv_taken[n0] = true;
                matched.push((m0, n0));
                if matched.len() == uavs.min(ugvs) {
                    break;
                }
            }
        }

        // QoS filter against the full matched set's interference. Dropping
        // links only lowers interference, so survivors stay above r_min.
        for &(m0, n0) in &matched {
            let omega = omegas[m0];
            let signal = map.gain0(n0, t0, omega) * scenario.p_max;
            let interference: f64 = matched
                .iter()
                .filter(|&&(_, p)| p != n0)
                .map(|&(_, p)| map.gain0(p, t0, omega) * scenario.p_max)
                .sum();
            let rate = log2_1p(signal / (interference + scenario.n0));
            if rate >= scenario.r_min {
                schedule.assign[t0 * uavs + m0] = Some(n0);
            }
        }
    }
    Ok((schedule, power))
}
