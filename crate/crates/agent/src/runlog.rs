//! Append-only run log: one JSON record per line.
//!
//! Opening a log replays it, so history served after a restart is the same
//! as before. A trailing line without its newline (a write cut short) is
//! dropped on open; any other unreadable line is an error.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarm_tuner_core::{FitnessBreakdown, HyperParams};

pub const RUN_RECORD_SCHEMA: u32 = 1;

/// Outcome of one optimizer run. `wall_ms` is the only non-reproducible
/// field and is absent wherever records must be byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetrics {
    pub min_sum_rate: f64,
    pub f_value: f64,
    pub s_value: f64,
    pub a_value: f64,
    pub c_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl RunMetrics {
    pub fn from_breakdown(b: &FitnessBreakdown, wall_ms: Option<f64>) -> Self {
        Self {
            min_sum_rate: b.t_value,
            f_value: b.f_value,
            s_value: b.s_value,
            a_value: b.a_value,
            c_value: b.c_value,
            wall_ms,
        }
    }

    pub fn without_timing(self) -> Self {
        Self {
            wall_ms: None,
            ..self
        }
    }

    /// Field-wise mean without timing; a single entry is returned as is.
    pub fn mean(all: &[Self]) -> Option<Self> {
        let n = all.len() as f64;
        let avg = |f: fn(&Self) -> f64| all.iter().map(f).sum::<f64>() / n;
        (!all.is_empty()).then(|| Self {
            min_sum_rate: avg(|m| m.min_sum_rate),
            f_value: avg(|m| m.f_value),
            s_value: avg(|m| m.s_value),
            a_value: avg(|m| m.a_value),
            c_value: avg(|m| m.c_value),
            wall_ms: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub schema: u32,
    pub run_id: u64,
    pub hyper: HyperParams,
    pub p_iter: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Milliseconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

#[derive(Debug)]
pub struct RunLog {
    records: Vec<RunRecord>,
    file: Option<(PathBuf, File)>,
}

fn corrupt(path: &Path, line: usize, msg: impl std::fmt::Display) -> io::Error {
    io::Error::new(
        io::ErrorKind::InvalidData,
        format!("{}:{line}: {msg}", path.display()),
    )
}

impl RunLog {
    /// A log that lives only as long as the process.
    pub fn in_memory() -> Self {
        Self {
            records: Vec::new(),
            file: None,
        }
    }

    /// Opens or creates the log at `path` and replays its records.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;

        let mut records: Vec<RunRecord> = Vec::new();
        let mut complete_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = Vec::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_until(b'\n', &mut line)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if line.last() != Some(&b'\n') {
                break;
            }
            complete_len += n as u64;
            let text = std::str::from_utf8(&line).map_err(|e| corrupt(&path, line_no, e))?;
            if text.trim().is_empty() {
                continue;
            }
            let rec: RunRecord =
                serde_json::from_str(text).map_err(|e| corrupt(&path, line_no, e))?;
            if rec.schema != RUN_RECORD_SCHEMA {
                return Err(corrupt(&path, line_no, format!("unsupported schema {}", rec.schema)));
            }
            if let Some(prev) = records.last() {
                if rec.run_id <= prev.run_id {
                    return Err(corrupt(&path, line_no, "run ids must increase"));
                }
            }
            records.push(rec);
        }
        drop(reader);
        if file.seek(SeekFrom::End(0))? != complete_len {
            file.set_len(complete_len)?;
        }
        Ok(Self {
            records,
            file: Some((path, file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn next_run_id(&self) -> u64 {
        self.records.last().map_or(1, |r| r.run_id + 1)
    }

    /// Assigns the next run id, persists the record and returns it.
    pub fn append(
        &mut self,
        hyper: HyperParams,
        p_iter: usize,
        seed: u64,
        metrics: RunMetrics,
        timestamp_ms: Option<u64>,
    ) -> io::Result<RunRecord> {
        let rec = RunRecord {
            schema: RUN_RECORD_SCHEMA,
            run_id: self.next_run_id(),
            hyper,
            p_iter,
            seed,
            metrics,
            timestamp_ms,
        };
        if let Some((_, file)) = &mut self.file {
            let mut line = serde_json::to_vec(&rec).map_err(io::Error::other)?;
            line.push(b'\n');
            file.write_all(&line)?;
            file.flush()?;
        }
        self.records.push(rec.clone());
        Ok(rec)
    }

    /// Oldest first.
    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    /// Up to `limit` records, newest first.
    pub fn recent(&self, limit: usize) -> Vec<RunRecord> {
        self.records.iter().rev().take(limit).cloned().collect()
    }
}
