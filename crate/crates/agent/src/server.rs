//! Line-delimited JSON-RPC tool server.
//!
//! Each connection runs three activities: the reader (this thread) parses
//! lines and answers cheap methods inline, an executor thread runs the
//! optimizer, and a writer thread serializes responses. Responses can leave
//! out of request order; ids tie them back. At most one optimizer run is in
//! flight per server, across all connections; a second `run_ws_pso_cm`
//! while one is running gets `BUSY`.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use swarm_tuner_core::{run_ws_pso_cm, RadioMap, Scenario};

use crate::protocol::{
    self, parse_line, Request, RpcError, BUSY, INVALID_PARAMS, INVALID_REQUEST, METHOD_NOT_FOUND,
    RATE_LIMITED, TOOL_FAILURE,
};
use crate::runlog::{RunLog, RunMetrics, RunRecord};
use crate::tools::{self, RunArgs};

pub const SERVER_NAME: &str = "swarm-tuner";
pub const DEFAULT_RATE_LIMIT_PER_MIN: u32 = 10;
pub const DEFAULT_MAX_LINE_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    /// `tools/call` budget per minute; `None` disables the limit.
    pub rate_limit_per_min: Option<u32>,
    /// Longer lines are discarded and answered with `INVALID_REQUEST`.
    pub max_line_bytes: usize,
    /// Reported by `get_scenario`.
    pub map_seed: Option<u64>,
    /// Stamp records with wall-clock time and duration.
    pub record_timing: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            rate_limit_per_min: Some(DEFAULT_RATE_LIMIT_PER_MIN),
            max_line_bytes: DEFAULT_MAX_LINE_BYTES,
            map_seed: None,
            record_timing: true,
        }
    }
}

impl ServerConfig {
    /// No rate limit and no timing fields: for a server owned by a single
    /// in-process client whose records must be reproducible.
    pub fn in_process() -> Self {
        Self {
            rate_limit_per_min: None,
            record_timing: false,
            ..Self::default()
        }
    }
}

#[derive(Debug)]
struct TokenBucket {
    capacity: f64,
    tokens: f64,
    per_sec: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(per_min: u32) -> Self {
        Self {
            capacity: per_min as f64,
            tokens: per_min as f64,
            per_sec: per_min as f64 / 60.0,
            last: Instant::now(),
        }
    }

    fn try_take(&mut self) -> bool {
        let now = Instant::now();
        let dt = now.duration_since(self.last).as_secs_f64();
        self.last = now;
        self.tokens = (self.tokens + dt * self.per_sec).min(self.capacity);
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

struct Shared {
    scenario: Scenario,
    map: RadioMap,
    log: Mutex<RunLog>,
    busy: AtomicBool,
    limiter: Option<Mutex<TokenBucket>>,
    config: ServerConfig,
}

/// Cheap to clone; clones share the run log, the busy flag and the rate
/// limiter.
#[derive(Clone)]
pub struct ToolServer {
    shared: Arc<Shared>,
}

struct Job {
    id: Value,
    args: RunArgs,
}

impl ToolServer {
    pub fn new(scenario: Scenario, map: RadioMap, log: RunLog, config: ServerConfig) -> Self {
        let limiter = config.rate_limit_per_min.map(|n| Mutex::new(TokenBucket::new(n)));
        Self {
            shared: Arc::new(Shared {
                scenario,
                map,
                log: Mutex::new(log),
                busy: AtomicBool::new(false),
                limiter,
                config,
            }),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.shared.scenario
    }

    pub fn map(&self) -> &RadioMap {
        &self.shared.map
    }

    /// Snapshot of the log, oldest first.
    pub fn records(&self) -> Vec<RunRecord> {
        self.lock_log().records().to_vec()
    }

    fn lock_log(&self) -> std::sync::MutexGuard<'_, RunLog> {
        self.shared.log.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Serves one connection until `reader` reaches end of input, then waits
    /// for an in-flight run to finish and its response to be written.
    pub fn serve<R, W>(&self, reader: R, writer: W) -> io::Result<()>
    where
        R: BufRead,
        W: Write + Send + 'static,
    {
        let (out_tx, out_rx) = mpsc::channel::<String>();
        let writer_thread = thread::spawn(move || write_loop(writer, out_rx));

        let (job_tx, job_rx) = mpsc::channel::<Job>();
        let exec = {
            let server = self.clone();
            let out_tx = out_tx.clone();
            thread::spawn(move || {
                for job in job_rx {
                    let line = match server.execute(&job.args) {
                        Ok(record) => protocol::success(&job.id, tool_result(run_payload(&record))),
                        Err(e) => protocol::failure(&job.id, &e),
                    };
                    // The slot frees up before the client can see the result.
                    server.shared.busy.store(false, Ordering::SeqCst);
                    if out_tx.send(line).is_err() {
                        break;
                    }
                }
            })
        };

        let result = self.read_loop(reader, &out_tx, &job_tx);
        drop(job_tx);
        let _ = exec.join();
        drop(out_tx);
        let written = writer_thread
            .join()
            .unwrap_or_else(|_| Err(io::Error::other("writer thread panicked")));
        result.and(written)
    }

    fn read_loop<R: BufRead>(
        &self,
        mut reader: R,
        out: &mpsc::Sender<String>,
        jobs: &mpsc::Sender<Job>,
    ) -> io::Result<()> {
        let mut buf = Vec::new();
        loop {
            buf.clear();
            let line = match read_bounded_line(&mut reader, &mut buf, self.shared.config.max_line_bytes)?
            {
                Line::Eof => return Ok(()),
                Line::TooLong => {
                    let err = RpcError::new(INVALID_REQUEST, "invalid request: line too long");
                    if out.send(protocol::failure(&Value::Null, &err)).is_err() {
                        return Ok(());
                    }
                    continue;
                }
                Line::Complete => trim_line(&buf),
            };
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let reply = match parse_line(line) {
                Err(rejected) => Some(protocol::failure(&rejected.id, &rejected.error)),
                Ok(req) => self.dispatch(req, jobs),
            };
            if let Some(reply) = reply {
                if out.send(reply).is_err() {
                    return Ok(());
                }
            }
        }
    }

    /// Answers inline, hands a run to the executor, or stays silent for
    /// notifications.
    fn dispatch(&self, req: Request, jobs: &mpsc::Sender<Job>) -> Option<String> {
        let id = req.id?;
        let outcome = match req.method.as_str() {
            "initialize" => Ok(json!({
                "protocolVersion": protocol::MCP_PROTOCOL_VERSION,
                "serverInfo": { "name": SERVER_NAME, "version": env!("CARGO_PKG_VERSION") },
                "capabilities": { "tools": { "listChanged": false } },
            })),
            "ping" => Ok(json!({})),
            "tools/list" => Ok(json!({ "tools": tools::descriptors() })),
            "tools/call" => match self.call(&req.params) {
                Ok(Call::Done(v)) => Ok(v),
                Ok(Call::Run(args)) => {
                    if self
                        .shared
                        .busy
                        .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
                        .is_err()
                    {
                        Err(RpcError::new(BUSY, "busy: an optimizer run is already in progress"))
                    } else if jobs.send(Job { id: id.clone(), args }).is_err() {
                        self.shared.busy.store(false, Ordering::SeqCst);
                        Err(RpcError::new(TOOL_FAILURE, "executor stopped"))
                    } else {
                        return None;
                    }
                }
                Err(e) => Err(e),
            },
            other => Err(RpcError::new(
                METHOD_NOT_FOUND,
                format!("method not found: {other}"),
            )),
        };
        Some(match outcome {
            Ok(result) => protocol::success(&id, result),
            Err(e) => protocol::failure(&id, &e),
        })
    }

    fn call(&self, params: &Value) -> Result<Call, RpcError> {
        let name = params
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| RpcError::new(INVALID_PARAMS, "invalid params: `name` must be a string"))?;
        let args = params.get("arguments").cloned().unwrap_or(Value::Null);
        if let Some(limiter) = &self.shared.limiter {
            if !limiter.lock().unwrap_or_else(|e| e.into_inner()).try_take() {
                return Err(RpcError::new(RATE_LIMITED, "rate limit exceeded for tools/call"));
            }
        }
        match name {
            tools::RUN_TOOL => tools::parse_run_args(&args).map(Call::Run),
            tools::SCENARIO_TOOL => {
                tools::parse_no_args(&args)?;
                Ok(Call::Done(tool_result(self.scenario_summary())))
            }
            tools::HISTORY_TOOL => {
                let limit = tools::parse_history_args(&args)?;
                let records = self.lock_log().recent(limit);
                Ok(Call::Done(tool_result(json!({ "records": records }))))
            }
            other => {
                let mut e = RpcError::invalid_params(format!("invalid params: unknown tool `{other}`"));
                e.data = Some(json!({ "field": "name" }));
                Err(e)
            }
        }
    }

    /// Runs the optimizer and appends the record. Callers hold the busy slot.
    pub fn execute(&self, args: &RunArgs) -> Result<RunRecord, RpcError> {
        let s = &self.shared;
        let result = run_ws_pso_cm(&s.scenario, &s.map, &args.hyper, args.p_iter, args.seed)
            .map_err(|e| RpcError::new(TOOL_FAILURE, format!("optimizer failed: {e}")))?;
        let (wall_ms, timestamp_ms) = if s.config.record_timing {
            let ts = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0);
            (Some(result.wall_ms), Some(ts))
        } else {
            (None, None)
        };
        let metrics = RunMetrics::from_breakdown(&result.breakdown, wall_ms);
        self.lock_log()
            .append(args.hyper, args.p_iter, args.seed, metrics, timestamp_ms)
            .map_err(|e| RpcError::new(TOOL_FAILURE, format!("run log write failed: {e}")))
    }

    fn scenario_summary(&self) -> Value {
        let s = &self.shared.scenario;
        let g = &s.grid;
        json!({
            "uavs": s.uav_count,
            "ugvs": s.ugv_count,
            "slots": s.slots,
            "tau_s": s.tau,
            "v_max_m_s": s.v_max,
            "theta_max_rad": s.theta_max,
            "h_min_m": s.h_min,
            "h_max_m": s.h_max,
            "d_min_m": s.d_min,
            "r_min_bps_hz": s.r_min,
            "p_max_w": s.p_max,
            "n0_w": s.n0,
            "grid": {
                "origin": [g.x_min, g.y_min, g.h_min],
                "delta_m": g.delta,
                "dims": g.dims,
            },
            "buildings": s.buildings.len(),
            "map_seed": self.shared.config.map_seed,
        })
    }

    /// Accepts connections forever, one thread per connection.
    pub fn serve_tcp(&self, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let server = self.clone();
            thread::spawn(move || {
                let _ = server.serve_stream(stream);
            });
        }
        Ok(())
    }

    pub fn serve_stream(&self, stream: TcpStream) -> io::Result<()> {
        let reader = BufReader::new(stream.try_clone()?);
        self.serve(reader, stream)
    }
}

enum Call {
    Done(Value),
    Run(RunArgs),
}

fn run_payload(record: &RunRecord) -> Value {
    serde_json::to_value(record).unwrap_or(Value::Null)
}

/// MCP `tools/call` result: the payload as text and as structured content.
fn tool_result(payload: Value) -> Value {
    json!({
        "content": [{ "type": "text", "text": payload.to_string() }],
        "structuredContent": payload,
        "isError": false,
    })
}

fn write_loop<W: Write>(mut writer: W, rx: mpsc::Receiver<String>) -> io::Result<()> {
    for line in rx {
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

enum Line {
    Complete,
    TooLong,
    Eof,
}

/// Reads up to and including `\n` into `buf`, never buffering more than
/// `max` bytes. Overlong lines are consumed and reported as `TooLong`. A
/// final line without `\n` counts as complete.
fn read_bounded_line<R: BufRead>(r: &mut R, buf: &mut Vec<u8>, max: usize) -> io::Result<Line> {
    let mut overflow = false;
    let mut read_any = false;
    loop {
        let chunk = match r.fill_buf() {
            Ok(c) => c,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        };
        if chunk.is_empty() {
            return Ok(match (read_any, overflow) {
                (false, _) => Line::Eof,
                (true, true) => Line::TooLong,
                (true, false) => Line::Complete,
            });
        }
        read_any = true;
        let (take, done) = match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => (i + 1, true),
            None => (chunk.len(), false),
        };
        if !overflow {
            if buf.len() + take > max + 1 {
                overflow = true;
                buf.clear();
            } else {
                buf.extend_from_slice(&chunk[..take]);
            }
        }
        r.consume(take);
        if done {
            return Ok(if overflow { Line::TooLong } else { Line::Complete });
        }
    }
}

fn trim_line(buf: &[u8]) -> &[u8] {
    let mut end = buf.len();
    while end > 0 && matches!(buf[end - 1], b'\n' | b'\r') {
        end -= 1;
    }
    &buf[..end]
}
