//! Voxelized path-gain maps.
//!
//! The flight volume is cut into cubic cells of edge `delta`. A map stores,
//! for every UGV `n` and slot `t`, the linear power gain from that UGV's
//! ground position to the center of every voxel. Synthetic maps follow a
//! log-distance law with a fixed attenuation per building crossed by the
//! direct path and a smooth, seeded log-normal shadowing field.
//!
//! Slices are built on first access and cached, so a map can be shared
//! read-only between worker threads.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Axis, Error, Result};
use crate::scenario::Scenario;
use crate::Point3;

/// Leading bytes of a radio map snapshot file.
pub const MAP_FILE_MAGIC: [u8; 4] = *b"RMAP";
/// Snapshot layout version written by [`RadioMap::write_to`].
pub const MAP_FILE_VERSION: u32 = 1;

/// One-based voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl VoxelIndex {
    pub fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }
}

/// Regular cubic grid anchored at `(x_min, y_min, h_min)`.
///
/// `h_min` doubles as the lowest permitted flight altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub x_min: f64,
    pub y_min: f64,
    pub h_min: f64,
    pub delta: f64,
    pub dims: [usize; 3],
}

impl VoxelGrid {
    pub fn new(x_min: f64, y_min: f64, h_min: f64, delta: f64, dims: [usize; 3]) -> Result<Self> {
        let grid = Self {
            x_min,
            y_min,
            h_min,
            delta,
            dims,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grid.x_min", self.x_min),
            ("grid.y_min", self.y_min),
            ("grid.h_min", self.h_min),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid("grid.delta", "must be > 0"));
        }
        if self.dims.contains(&0) {
            return Err(Error::invalid("grid.dims", "every dimension must be >= 1"));
        }
        Ok(())
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.dims[0] as f64 * self.delta
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + self.dims[1] as f64 * self.delta
    }

    /// Upper altitude of the top voxel layer.
    pub fn h_top(&self) -> f64 {
        self.h_min + self.dims[2] as f64 * self.delta
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Maps a position to the voxel containing it.
    ///
    /// The box is closed: a coordinate on the upper face belongs to the last
    /// cell along that axis.
    pub fn index_of(&self, p: &Point3) -> Result<VoxelIndex> {
        Ok(VoxelIndex {
            x: self.axis_index(Axis::X, p.x, self.x_min, self.dims[0])?,
            y: self.axis_index(Axis::Y, p.y, self.y_min, self.dims[1])?,
            z: self.axis_index(Axis::Z, p.z, self.h_min, self.dims[2])?,
        })
    }

    fn axis_index(&self, axis: Axis, value: f64, lo: f64, dim: usize) -> Result<usize> {
        let hi = lo + dim as f64 * self.delta;
        if !(value >= lo && value <= hi) {
            return Err(Error::OutOfBounds { axis, value, lo, hi });
        }
        let k = ((value - lo) / self.delta).floor() as usize + 1;
        Ok(k.min(dim))
    }

    pub fn center(&self, idx: VoxelIndex) -> Point3 {
        let half = 0.5 * self.delta;
        Point3::new(
            self.x_min + (idx.x - 1) as f64 * self.delta + half,
            self.y_min + (idx.y - 1) as f64 * self.delta + half,
            self.h_min + (idx.z - 1) as f64 * self.delta + half,
        )
    }

    /// Half-open containment test `[lo, lo + delta)` per axis.
    pub fn voxel_contains(&self, idx: VoxelIndex, p: &Point3) -> bool {
        let lo = [
            self.x_min + (idx.x - 1) as f64 * self.delta,
            self.y_min + (idx.y - 1) as f64 * self.delta,
            self.h_min + (idx.z - 1) as f64 * self.delta,
        ];
        (0..3).all(|a| p[a] >= lo[a] && p[a] < lo[a] + self.delta)
    }

    pub fn check_index(&self, idx: VoxelIndex) -> Result<()> {
        Error::check_index("voxel x", idx.x, self.dims[0])?;
        Error::check_index("voxel y", idx.y, self.dims[1])?;
        Error::check_index("voxel z", idx.z, self.dims[2])?;
        Ok(())
    }

    /// Row-major offset with `z` varying fastest.
    pub(crate) fn flat(&self, idx: VoxelIndex) -> usize {
        ((idx.x - 1) * self.dims[1] + (idx.y - 1)) * self.dims[2] + (idx.z - 1)
    }

    pub(crate) fn unflat(&self, flat: usize) -> VoxelIndex {
        let z = flat % self.dims[2];
        let y = (flat / self.dims[2]) % self.dims[1];
        let x = flat / (self.dims[2] * self.dims[1]);
        VoxelIndex::new(x + 1, y + 1, z + 1)
    }
}

/// Axis-aligned block standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub height: f64,
}

impl Building {
    /// Closed footprint test in the horizontal plane.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Whether the segment `a -> b` passes through the building volume
    /// `[x_min, x_max] x [y_min, y_max] x [0, height]` (slab test).
    pub fn blocks_segment(&self, a: &Point3, b: &Point3) -> bool {
        if self.height <= 0.0 {
            return false;
        }
        let lo = [self.x_min, self.y_min, 0.0];
        let hi = [self.x_max, self.y_max, self.height];
        let d = b - a;
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for axis in 0..3 {
            if d[axis].abs() < 1e-12 {
                if a[axis] < lo[axis] || a[axis] > hi[axis] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[axis];
            let (mut near, mut far) = ((lo[axis] - a[axis]) * inv, (hi[axis] - a[axis]) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Log-distance propagation with per-building blockage and shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    /// Path-loss exponent.
    pub exponent: f64,
    /// Linear gain at `ref_distance`.
    pub ref_gain: f64,
    pub ref_distance: f64,
    /// Linear factor applied once per building crossed by the direct path.
    pub blockage_factor: f64,
    /// Standard deviation of the shadowing field in dB; zero disables it.
    pub shadowing_sigma_db: f64,
    /// Lattice spacing of the shadowing field, in voxels.
    pub shadowing_cell: usize,
}

impl Default for PropagationModel {
    fn default() -> Self {
        Self {
            exponent: 2.7,
            ref_gain: 1e-4,
            ref_distance: 1.0,
            blockage_factor: 1e-2,
            shadowing_sigma_db: 4.0,
            shadowing_cell: 4,
        }
    }
}

impl PropagationModel {
    pub fn without_shadowing(mut self) -> Self {
        self.shadowing_sigma_db = 0.0;
        self
    }

    /// Unobstructed gain at `distance` meters, flat inside `ref_distance`.
    pub fn open_space_gain(&self, distance: f64) -> f64 {
        self.ref_gain * (distance.max(self.ref_distance) / self.ref_distance).powf(-self.exponent)
    }

    fn validate(&self) -> Result<()> {
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::invalid("model.exponent", "must be > 0"));
        }
        if !(self.ref_gain > 0.0 && self.ref_gain <= 1.0) {
            return Err(Error::invalid("model.ref_gain", "must lie in (0, 1]"));
        }
        if !(self.ref_distance.is_finite() && self.ref_distance > 0.0) {
            return Err(Error::invalid("model.ref_distance", "must be > 0"));
        }
        if !(self.blockage_factor > 0.0 && self.blockage_factor <= 1.0) {
            return Err(Error::invalid("model.blockage_factor", "must lie in (0, 1]"));
        }
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            return Err(Error::invalid("model.shadowing_sigma_db", "must be >= 0"));
        }
        if self.shadowing_cell == 0 {
            return Err(Error::invalid("model.shadowing_cell", "must be >= 1"));
        }
        Ok(())
    }
}

/// Gaussian values on a coarse lattice, trilinearly interpolated per voxel.
#[derive(Debug, Clone)]
struct ShadowField {
    cell: usize,
    lattice: [usize; 3],
    db: Vec<f64>,
}

impl ShadowField {
    fn generate(grid: &VoxelGrid, model: &PropagationModel, rng: &mut ChaCha8Rng) -> Self {
        let cell = model.shadowing_cell;
        let lattice = grid.dims.map(|d| d / cell + 2);
        let db = (0..lattice.iter().product::<usize>())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                model.shadowing_sigma_db * z
            })
            .collect();
        Self { cell, lattice, db }
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.db[(i * self.lattice[1] + j) * self.lattice[2] + k]
    }

    /// Shadowing in dB at zero-based voxel coordinates.
    fn sample(&self, v: [usize; 3]) -> f64 {
        let c = self.cell as f64;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let u = v[a] as f64 / c;
            base[a] = u.floor() as usize;
            frac[a] = u - base[a] as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.at(idx[0], idx[1], idx[2]);
            }
        }
        acc
    }
}

#[derive(Debug)]
struct SyntheticSource {
    model: PropagationModel,
    /// UGV ground positions, indexed `n0 * slots + t0`.
    transmitters: Vec<Point3>,
    buildings: Vec<Building>,
    shadowing: Vec<ShadowField>,
}

/// Per-UGV, per-slot linear path gains over a voxel grid.
pub struct RadioMap {
    grid: VoxelGrid,
    ugv_count: usize,
    slot_count: usize,
    slices: Vec<OnceLock<Vec<f64>>>,
    source: Option<SyntheticSource>,
}

impl fmt::Debug for RadioMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadioMap")
            .field("grid", &self.grid)
            .field("ugv_count", &self.ugv_count)
            .field("slot_count", &self.slot_count)
            .field(
                "materialized",
                &self.slices.iter().filter(|s| s.get().is_some()).count(),
            )
            .field("synthetic", &self.source.is_some())
            .finish()
    }
}

impl RadioMap {
    /// Synthetic map with the default propagation model.
    pub fn generate(scenario: &Scenario, seed: u64) -> Result<Self> {
        Self::generate_with(scenario, seed, PropagationModel::default())
    }

    pub fn generate_with(scenario: &Scenario, seed: u64, model: PropagationModel) -> Result<Self> {
        scenario.validate()?;
        model.validate()?;
        let grid = scenario.grid;
        let (ugvs, slots) = (scenario.ugv_count, scenario.slots);

        let mut transmitters = Vec::with_capacity(ugvs * slots);
        for n in 1..=ugvs {
            for t in 1..=slots {
                transmitters.push(scenario.ugv_position(n, t)?);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shadowing = (0..ugvs)
            .map(|_| ShadowField::generate(&grid, &model, &mut rng))
            .collect();

        Ok(Self {
            grid,
            ugv_count: ugvs,
            slot_count: slots,
            slices: (0..ugvs * slots).map(|_| OnceLock::new()).collect(),
            source: Some(SyntheticSource {
                model,
                transmitters,
                buildings: scenario.buildings.clone(),
                shadowing,
            }),
        })
    }

    /// Map from explicit gains. `slices` is ordered UGV-major then slot, each
    /// slice row-major over `(x, y, z)` with `z` fastest.
    pub fn from_slices(
        grid: VoxelGrid,
        ugv_count: usize,
        slot_count: usize,
        slices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        grid.validate()?;
        if ugv_count == 0 || slot_count == 0 {
            return Err(Error::MapFormat("map needs at least one UGV and one slot".into()));
        }
        if slices.len() != ugv_count * slot_count {
            return Err(Error::MapFormat(format!(
                "expected {} slices, got {}",
                ugv_count * slot_count,
                slices.len()
            )));
        }
        let cells = grid.voxel_count();
        let mut cached = Vec::with_capacity(slices.len());
        for (k, slice) in slices.into_iter().enumerate() {
            if slice.len() != cells {
                return Err(Error::MapFormat(format!(
                    "slice {k} has {} gains, expected {cells}",
                    slice.len()
                )));
            }
            if let Some(bad) = slice.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
                return Err(Error::MapFormat(format!(
                    "slice {k} holds gain {bad} outside (0, 1]"
                )));
            }
            cached.push(OnceLock::from(slice));
        }
        Ok(Self {
            grid,
            ugv_count,
            slot_count,
            slices: cached,
            source: None,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn ugv_count(&self) -> usize {
        self.ugv_count
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    /// Gain from UGV `n` at slot `t` to voxel `idx`, all one-based.
    pub fn path_gain(&self, n: usize, t: usize, idx: VoxelIndex) -> Result<f64> {
        let n0 = Error::check_index("UGV", n, self.ugv_count)?;
        let t0 = Error::check_index("slot", t, self.slot_count)?;
        self.grid.check_index(idx)?;
        Ok(self.gain0(n0, t0, idx))
    }

    pub(crate) fn gain0(&self, n0: usize, t0: usize, idx: VoxelIndex) -> f64 {
        self.slice0(n0, t0)[self.grid.flat(idx)]
    }

    fn slice0(&self, n0: usize, t0: usize) -> &[f64] {
        self.slices[n0 * self.slot_count + t0].get_or_init(|| self.build_slice(n0, t0))
    }

    /// Gains of one `(n, t)` slice in file order (one-based `n`, `t`).
    pub fn slice(&self, n: usize, t: usize) -> Result<&[f64]> {
        let n0 = Error::check_index("UGV", n, self.ugv_count)?;
        let t0 = Error::check_index("slot", t, self.slot_count)?;
        Ok(self.slice0(n0, t0))
    }

    fn build_slice(&self, n0: usize, t0: usize) -> Vec<f64> {
        let src = self
            .source
            .as_ref()
            .expect("loaded maps are fully materialized");
        let tx = src.transmitters[n0 * self.slot_count + t0];
        let shadow = &src.shadowing[n0];
        (0..self.grid.voxel_count())
            .map(|flat| {
                let idx = self.grid.unflat(flat);
                let rx = self.grid.center(idx);
                let distance = if self.grid.voxel_contains(idx, &tx) {
                    0.0
                } else {
                    (rx - tx).norm()
                };
                let blocked = src
                    .buildings
                    .iter()
                    .filter(|b| b.blocks_segment(&tx, &rx))
                    .count();
                let mut gain = src.model.open_space_gain(distance)
                    * src.model.blockage_factor.powi(blocked as i32);
                if src.model.shadowing_sigma_db > 0.0 {
                    let db = shadow.sample([idx.x - 1, idx.y - 1, idx.z - 1]);
                    gain *= 10f64.powf(db / 10.0);
                }
                gain.clamp(f64::MIN_POSITIVE, 1.0)
            })
            .collect()
    }

    /// Writes a snapshot, materializing every slice first.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAP_FILE_MAGIC)?;
        w.write_all(&MAP_FILE_VERSION.to_le_bytes())?;
        for v in [self.grid.x_min, self.grid.y_min, self.grid.h_min, self.grid.delta] {
            w.write_all(&v.to_le_bytes())?;
        }
        for d in self.grid.dims {
            w.write_all(&to_u32(d)?.to_le_bytes())?;
        }
        w.write_all(&to_u32(self.ugv_count)?.to_le_bytes())?;
        w.write_all(&to_u32(self.slot_count)?.to_le_bytes())?;
        for n0 in 0..self.ugv_count {
            for t0 in 0..self.slot_count {
                for g in self.slice0(n0, t0) {
                    w.write_all(&g.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAP_FILE_MAGIC {
            return Err(Error::MapFormat("bad magic, expected RMAP".into()));
        }
        let version = read_u32(&mut r)?;
        if version != MAP_FILE_VERSION {
            return Err(Error::MapFormat(format!("unsupported version {version}")));
        }
        let x_min = read_f64(&mut r)?;
        let y_min = read_f64(&mut r)?;
        let h_min = read_f64(&mut r)?;
        let delta = read_f64(&mut r)?;
        let dims = [
            read_u32(&mut r)? as usize,
            read_u32(&mut r)? as usize,
            read_u32(&mut r)? as usize,
        ];
        let grid = VoxelGrid::new(x_min, y_min, h_min, delta, dims)?;
        let ugvs = read_u32(&mut r)? as usize;
        let slots = read_u32(&mut r)? as usize;
        let cells = grid.voxel_count();
        let mut slices = Vec::with_capacity(ugvs * slots);
        let mut buf = vec![0u8; cells * 8];
        for _ in 0..ugvs * slots {
            r.read_exact(&mut buf)?;
            slices.push(
                buf.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect(),
            );
        }
        Self::from_slices(grid, ugvs, slots, slices)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::MapFormat(format!("{v} does not fit in u32")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
