use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Advice, Advisor, AgentError, AgentProfile, Bounds, Memory, TuningRecord};
use crate::client::{ClientError, ToolClient};
use crate::runlog::{RunMetrics, RunRecord};
use crate::tools::{self, RunArgs};

pub const SESSION_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    /// Upper bound on proposals executed.
    pub max_iters: usize,
    /// Stop after this many proposals in a row without a new best.
    pub patience: Option<usize>,
    pub p_iter: usize,
    /// First optimizer seed. Every proposal is run on the same seeds, so
    /// proposals are compared on equal footing.
    pub run_seed: u64,
    /// Runs per proposal, on seeds `run_seed, run_seed + 1, ...`; the
    /// proposal is scored by their mean.
    #[serde(default = "one")]
    pub run_seeds: usize,
}

fn one() -> usize {
    1
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            max_iters: 12,
            patience: Some(3),
            p_iter: 50,
            run_seed: 0,
            run_seeds: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AdvisorTerminated,
    Patience,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: TuningRecord,
    pub memory: Memory,
    pub stop: StopReason,
    pub stop_rationale: Option<String>,
}

/// Everything needed to audit a session; contains no clock readings so
/// seeded sessions serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub schema: u32,
    pub advisor: String,
    pub config: TuneConfig,
    pub bounds: Bounds,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_rationale: Option<String>,
    pub best_iteration: usize,
    pub best: TuningRecord,
    pub records: Vec<TuningRecord>,
}

impl SessionReport {
    pub fn new(advisor: &str, config: TuneConfig, bounds: Bounds, outcome: &TuneOutcome) -> Self {
        Self {
            schema: SESSION_SCHEMA,
            advisor: advisor.to_string(),
            config,
            bounds,
            stop_reason: outcome.stop,
            stop_rationale: outcome.stop_rationale.clone(),
            best_iteration: outcome.best.iteration,
            best: outcome.best.clone(),
            records: outcome.memory.records().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn protocol(msg: impl Into<String>) -> AgentError {
    AgentError::Client(ClientError::Protocol(msg.into()))
}

/// Runs the propose, execute, record loop until the advisor stops it, the
/// patience runs out or `max_iters` proposals have been executed. Every proposal is
/// clipped to the profile's bounds before it is executed.
pub fn tune(
    client: &mut dyn ToolClient,
    profile: &AgentProfile,
    advisor: &mut dyn Advisor,
    config: TuneConfig,
) -> Result<TuneOutcome, AgentError> {
    if config.max_iters == 0 {
        return Err(AgentError::Config("max_iters must be ≥ 1".into()));
    }
    if config.run_seeds == 0 {
        return Err(AgentError::Config("run_seeds must be ≥ 1".into()));
    }
    let seeds: Vec<u64> = (0..config.run_seeds as u64)
        .map(|k| config.run_seed.checked_add(k))
        .collect::<Option<_>>()
        .ok_or_else(|| AgentError::Config("run seeds overflow u64".into()))?;
    if config.patience == Some(0) {
        return Err(AgentError::Config("patience must be ≥ 1".into()));
    }
    profile.validate()?;

    let mut memory = Memory::new();
    let (stop, stop_rationale) = loop {
        if memory.len() >= config.max_iters {
            break (StopReason::MaxIters, None);
        }
        let (proposed, mut rationale) = match advisor.advise(profile, &memory)? {
            Advice::Terminate { rationale } => {
                break (StopReason::AdvisorTerminated, Some(rationale).filter(|r| !r.is_empty()))
            }
            Advice::Propose { hyper, rationale } => (hyper, rationale),
        };
        let hyper = profile.bounds.clamp(&proposed);
        if hyper != proposed {
            rationale.push_str(" (clipped to bounds)");
        }
        let mut run_ids = Vec::with_capacity(seeds.len());
        let mut metrics = Vec::with_capacity(seeds.len());
        for &seed in &seeds {
            let record = execute(client, RunArgs { hyper, p_iter: config.p_iter, seed })?;
            run_ids.push(record.run_id);
            metrics.push(record.metrics);
        }

        memory.push(TuningRecord {
            iteration: memory.next_iteration(),
            run_ids,
            hyper,
            p_iter: config.p_iter,
            seeds: seeds.clone(),
            metrics: RunMetrics::mean(&metrics).expect("at least one seed"),
            rationale,
        });

        if let Some(p) = config.patience {
            let best = memory.best().expect("non-empty").iteration;
            if memory.len() - best >= p {
                break (StopReason::Patience, None);
            }
        }
    };

    let best = memory.best().cloned().ok_or(AgentError::NoRuns)?;
    Ok(TuneOutcome {
        best,
        memory,
        stop,
        stop_rationale,
    })
}

/// One tool call, checked against its arguments and the server's history.
fn execute(client: &mut dyn ToolClient, args: RunArgs) -> Result<RunRecord, AgentError> {
    let result = client.call_tool(tools::RUN_TOOL, args.to_arguments())?;
    let record: RunRecord = serde_json::from_value(result)
        .map_err(|e| protocol(format!("run result is not a run record: {e}")))?;
    if (record.hyper, record.p_iter, record.seed) != (args.hyper, args.p_iter, args.seed) {
        return Err(AgentError::Mismatch(format!(
            "run {} echoes different arguments",
            record.run_id
        )));
    }
    cross_check(client, &record)?;
    Ok(record)
}

/// The server's history must hold the record just returned, unchanged.
fn cross_check(client: &mut dyn ToolClient, record: &RunRecord) -> Result<(), AgentError> {
    let history = client.call_tool(
        tools::HISTORY_TOOL,
        json!({ "limit": tools::DEFAULT_HISTORY_LIMIT }),
    )?;
    let records: Vec<RunRecord> = history
        .get("records")
        .cloned()
        .map(serde_json::from_value)
        .unwrap_or(Ok(Vec::new()))
        .map_err(|e| protocol(format!("history is not a list of run records: {e}")))?;
    match records.iter().find(|r| r.run_id == record.run_id) {
        Some(r) if r == record => Ok(()),
        Some(_) => Err(AgentError::Mismatch(format!(
            "history entry for run {} differs from the call result",
            record.run_id
        ))),
        None => Err(AgentError::Mismatch(format!(
            "run {} missing from history",
            record.run_id
        ))),
    }
}
