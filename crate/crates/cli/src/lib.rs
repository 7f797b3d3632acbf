//! `swarm-tuner` command-line driver.
//!
//! Subcommands: `gen-map` writes a radio map snapshot, `run` executes one
//! optimization, `compare` runs several settings over a shared seed list,
//! `serve` exposes the optimizer as a JSON-RPC tool server and `tune` runs
//! a tuning session against such a server.

pub mod compare;
pub mod error;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use swarm_tuner_agent::agent::{
    tune, Advisor, AgentProfile, HeuristicAdvisor, HillClimbAdvisor, HttpChat, LlmAdvisor,
    RandomAdvisor, ReplayChat, SessionReport, TuneConfig, DEFAULT_API_KEY_ENV,
};
use swarm_tuner_agent::{RpcClient, RunLog, ServerConfig, ToolServer};
use swarm_tuner_core::swarm::{Optimizer, SwarmConfig};
use swarm_tuner_core::{
    greedy_schedule_and_power, load_scenario, HyperParams, LinkState, OptimizationResult, RadioMap,
    Scenario,
};

pub use error::{CliError, EXIT_OK, EXIT_PROTOCOL, EXIT_RUNTIME, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "swarm-tuner", version, about = "UAV trajectory optimizer, tool server and tuning agent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a radio map for a scenario and save it.
    GenMap(GenMapArgs),
    /// Run the optimizer once.
    Run(RunArgs),
    /// Run several settings over the same seeds and report relative gains.
    Compare(CompareArgs),
    /// Serve the optimizer as JSON-RPC tools on stdio or TCP.
    Serve(ServeArgs),
    /// Tune hyper-parameters with an advisor in the loop.
    Tune(TuneArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WorldArgs {
    /// Scenario file.
    #[arg(long, env = "SWARM_TUNER_SCENARIO", default_value = "scenarios/hitsz_like.toml")]
    pub scenario: PathBuf,
    /// Seed of the synthetic radio map.
    #[arg(long, default_value_t = 1)]
    pub map_seed: u64,
    /// Load a saved map instead of generating one.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

impl WorldArgs {
    pub fn load(&self) -> Result<(Scenario, RadioMap), CliError> {
        let scenario = load_scenario(&self.scenario)
            .map_err(|e| CliError::Validation(format!("{}: {e}", self.scenario.display())))?;
        let map = match &self.map {
            Some(path) => {
                let map = RadioMap::load(path)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                if *map.grid() != scenario.grid
                    || map.ugv_count() != scenario.ugv_count
                    || map.slot_count() != scenario.slots
                {
                    return Err(CliError::Validation(format!(
                        "{}: map does not match the scenario's grid, UGVs or slots",
                        path.display()
                    )));
                }
                map
            }
            None => RadioMap::generate(&scenario, self.map_seed)?,
        };
        Ok((scenario, map))
    }

    fn to_args(&self) -> Vec<String> {
        let mut v = vec![
            "--scenario".into(),
            self.scenario.display().to_string(),
            "--map-seed".into(),
            self.map_seed.to_string(),
        ];
        if let Some(m) = &self.map {
            v.extend(["--map".into(), m.display().to_string()]);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Baseline1,
    Baseline2,
}

impl Preset {
    pub fn hyper(self) -> HyperParams {
        match self {
            Self::Baseline1 => HyperParams::baseline1(),
            Self::Baseline2 => HyperParams::baseline2(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Named hyper-parameter set; the default is baseline1.
    #[arg(long, value_enum, conflicts_with = "params")]
    pub preset: Option<Preset>,
    /// JSON file with hyper-parameters, a run record or a tuning report.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub p_num: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long)]
    pub k3: Option<f64>,
    #[arg(long)]
    pub k4: Option<f64>,
}

impl HyperArgs {
    pub fn resolve(&self) -> Result<HyperParams, CliError> {
        let mut h = match (&self.params, self.preset) {
            (Some(path), _) => load_hyper(path)?,
            (None, Some(p)) => p.hyper(),
            (None, None) => HyperParams::baseline1(),
        };
        if let Some(v) = self.p_num {
            h.p_num = v;
        }
        for (slot, v) in [
            (&mut h.omega, self.omega),
            (&mut h.c1, self.c1),
            (&mut h.c2, self.c2),
            (&mut h.k1, self.k1),
            (&mut h.k2, self.k2),
            (&mut h.k3, self.k3),
            (&mut h.k4, self.k4),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        h.validate()?;
        Ok(h)
    }
}

/// Reads hyper-parameters from a bare object, anything with a `hyper`
/// field, or a tuning report (its best record).
pub fn load_hyper(path: &Path) -> Result<HyperParams, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let inner = v
        .pointer("/best/hyper")
        .or_else(|| v.get("hyper"))
        .unwrap_or(&v)
        .clone();
    serde_json::from_value(inner)
        .map_err(|e| CliError::Validation(format!("{}: no hyper-parameters found ({e})", path.display())))
}

/// Resolves `NAME=SOURCE` or `SOURCE`, where the source is a preset name or
/// a file accepted by [`load_hyper`].
pub fn parse_config_spec(spec: &str) -> Result<(String, HyperParams), CliError> {
    let (name, source) = spec.split_once('=').unwrap_or((spec, spec));
    let hyper = match Preset::from_str(source, true) {
        Ok(p) => p.hyper(),
        Err(_) => load_hyper(Path::new(source))?,
    };
    Ok((name.to_string(), hyper))
}

#[derive(Debug, Clone, Args)]
pub struct GenMapArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 50)]
    pub p_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `result.json` and `trajectory.tsv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate particles on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    /// `NAME=SOURCE` or `SOURCE`; SOURCE is baseline1, baseline2 or a JSON file. Repeat for each setting.
    #[arg(long = "config", required = true)]
    pub configs: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub seed_start: u64,
    #[arg(long, default_value_t = 10)]
    pub seed_count: u64,
    #[arg(long, default_value_t = 50)]
    pub p_iter: usize,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the jobs one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transport {
    Stdio,
    Tcp,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[arg(long, value_enum, default_value_t = Transport::Stdio)]
    pub transport: Transport,
    /// Listen address for the TCP transport.
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub addr: String,
    /// Append-only run log; replayed at startup.
    #[arg(long, env = "SWARM_TUNER_LOG")]
    pub log: Option<PathBuf>,
    /// `tools/call` requests per minute; 0 disables the limit.
    #[arg(long, default_value_t = 10)]
    pub rate_limit: u32,
    #[arg(long, default_value_t = swarm_tuner_agent::server::DEFAULT_MAX_LINE_BYTES)]
    pub max_line_bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdvisorKind {
    Llm,
    Random,
    Hillclimb,
    Heuristic,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[arg(long, value_enum)]
    pub advisor: AdvisorKind,
    /// Directory of numbered canned replies for the llm advisor.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub max_iters: usize,
    /// Stop after this many runs without a new best; 0 disables. Defaults
    /// to 3, or off for the llm advisor.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Advisor seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First optimizer seed; every proposal runs on the same seeds.
    #[arg(long, default_value_t = 0)]
    pub run_seed: u64,
    /// Runs per proposal, scored by their mean.
    #[arg(long, default_value_t = 1)]
    pub run_seeds: usize,
    #[arg(long, default_value_t = 50)]
    pub p_iter: usize,
    /// Hill-climb step as a fraction of each parameter's range.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Session report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Use a running server instead of an in-process one.
    #[arg(long, conflicts_with = "spawn")]
    pub connect: Option<String>,
    /// Start `swarm-tuner serve` as a child process and talk over its stdio.
    #[arg(long)]
    pub spawn: bool,
    /// Run log for the in-process server.
    #[arg(long, env = "SWARM_TUNER_LOG")]
    pub log: Option<PathBuf>,
    #[arg(long, default_value = "https://api.deepseek.com/chat/completions")]
    pub endpoint: String,
    #[arg(long, default_value = "deepseek-reasoner")]
    pub model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = DEFAULT_API_KEY_ENV)]
    pub api_key_env: String,
    #[arg(long, default_value_t = 120)]
    pub llm_timeout_secs: u64,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenMap(a) => gen_map(&a),
        Command::Run(a) => run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Serve(a) => serve(&a),
        Command::Tune(a) => cmd_tune(&a),
    }
}

fn gen_map(a: &GenMapArgs) -> Result<(), CliError> {
    let (scenario, map) = a.world.load()?;
    map.save(&a.out)?;
    let d = scenario.grid.dims;
    println!(
        "wrote {}: {} UGVs x {} slots x {}x{}x{} voxels",
        a.out.display(),
        map.ugv_count(),
        map.slot_count(),
        d[0],
        d[1],
        d[2]
    );
    Ok(())
}

/// Tab-separated `m t x y z n rate`, one row per UAV and slot; `n` is 0
/// when the UAV serves nobody in that slot.
pub fn trajectory_table(
    result: &OptimizationResult,
    scenario: &Scenario,
    map: &RadioMap,
) -> Result<String, CliError> {
    let (schedule, power) = greedy_schedule_and_power(&result.g_best, scenario, map)?;
    let links = LinkState::new(&result.g_best, &schedule, &power, map, scenario.n0)?.slot_links()?;
    let mut s = String::from("m\tt\tx\ty\tz\tn\trate\n");
    for l in links {
        let p = l.position;
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            l.m,
            l.t,
            p.x,
            p.y,
            p.z,
            l.ugv.unwrap_or(0),
            l.rate
        );
    }
    Ok(s)
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let hyper = a.hyper.resolve()?;
    let (scenario, map) = a.world.load()?;
    let result = Optimizer::new(&scenario, &map)
        .with_config(SwarmConfig {
            parallel: !a.sequential,
            ..SwarmConfig::default()
        })
        .run(hyper, a.p_iter, a.seed)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(&result).map_err(io::Error::other)?;
        json.push('\n');
        fs::write(dir.join("result.json"), json)?;
        fs::write(dir.join("trajectory.tsv"), trajectory_table(&result, &scenario, &map)?)?;
    }
    let b = &result.breakdown;
    println!("min_sum_rate {}", b.t_value);
    println!(
        "fitness {}  (S {}, A {}, C {})  evaluations {}",
        b.f_value, b.s_value, b.a_value, b.c_value, result.evaluations
    );
    // Timing goes to stderr so stdout stays reproducible.
    eprintln!("wall {:.0} ms", result.wall_ms);
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let configs = a
        .configs
        .iter()
        .map(|c| parse_config_spec(c))
        .collect::<Result<Vec<_>, _>>()?;
    if configs.len() < 2 {
        return Err(CliError::Validation("need ≥ 2 configs".into()));
    }
    let mut names: Vec<&str> = configs.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Validation("config names must be distinct".into()));
    }
    let (scenario, map) = a.world.load()?;
    let seeds: Vec<u64> = (a.seed_start..a.seed_start + a.seed_count).collect();
    let mut report = compare::compare(&scenario, &map, &configs, &seeds, a.p_iter, !a.sequential)?;
    report.map_seed = a.world.map.is_none().then_some(a.world.map_seed);
    print!("{}", report.render());
    if let Some(out) = &a.out {
        let mut json = serde_json::to_string_pretty(&report).map_err(io::Error::other)?;
        json.push('\n');
        fs::write(out, json)?;
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let (scenario, map) = a.world.load()?;
    let log = match &a.log {
        Some(p) => RunLog::open(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
        None => RunLog::in_memory(),
    };
    let config = ServerConfig {
        rate_limit_per_min: (a.rate_limit > 0).then_some(a.rate_limit),
        max_line_bytes: a.max_line_bytes,
        map_seed: a.world.map.is_none().then_some(a.world.map_seed),
        record_timing: true,
    };
    let server = ToolServer::new(scenario, map, log, config);
    match a.transport {
        Transport::Stdio => server.serve(io::stdin().lock(), BufWriter::new(io::stdout()))?,
        Transport::Tcp => {
            let listener = TcpListener::bind(&a.addr)
                .map_err(|e| CliError::Protocol(format!("bind {}: {e}", a.addr)))?;
            eprintln!("listening on {}", listener.local_addr()?);
            server.serve_tcp(listener)?;
        }
    }
    Ok(())
}

fn connect(a: &TuneArgs) -> Result<RpcClient, CliError> {
    let mut client = if let Some(addr) = &a.connect {
        RpcClient::connect_tcp(addr.as_str(), 10, Duration::from_millis(200))?
    } else if a.spawn {
        let exe = std::env::current_exe()?;
        let mut args = vec!["serve".to_string(), "--transport".into(), "stdio".into(), "--rate-limit".into(), "0".into()];
        args.extend(a.world.to_args());
        RpcClient::spawn(exe, &args)?
    } else {
        let (scenario, map) = a.world.load()?;
        let log = match &a.log {
            Some(p) => RunLog::open(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
            None => RunLog::in_memory(),
        };
        let config = ServerConfig {
            map_seed: a.world.map.is_none().then_some(a.world.map_seed),
            ..ServerConfig::in_process()
        };
        RpcClient::in_process(ToolServer::new(scenario, map, log, config))?
    };
    client.initialize()?;
    Ok(client)
}

fn cmd_tune(a: &TuneArgs) -> Result<(), CliError> {
    let profile = AgentProfile::default();
    let patience = match (a.patience, a.advisor) {
        (Some(0), _) | (None, AdvisorKind::Llm) => None,
        (Some(p), _) => Some(p),
        (None, _) => Some(3),
    };
    if a.replay.is_some() && a.advisor != AdvisorKind::Llm {
        return Err(CliError::Validation("--replay only applies to --advisor llm".into()));
    }
    let mut advisor: Box<dyn Advisor> = match a.advisor {
        AdvisorKind::Heuristic => Box::new(HeuristicAdvisor),
        AdvisorKind::Random => Box::new(RandomAdvisor::new(profile.bounds, a.seed)?),
        AdvisorKind::Hillclimb => Box::new(HillClimbAdvisor::new(
            profile.bounds,
            [a.step; 8],
            patience.unwrap_or(usize::MAX),
            a.seed,
        )?),
        AdvisorKind::Llm => match &a.replay {
            Some(dir) => Box::new(LlmAdvisor::new(ReplayChat::open(dir)?)),
            None => Box::new(LlmAdvisor::new(HttpChat::from_env(
                &a.endpoint,
                &a.model,
                &a.api_key_env,
                Duration::from_secs(a.llm_timeout_secs),
            )?)),
        },
    };
    let config = TuneConfig {
        max_iters: a.max_iters,
        patience,
        p_iter: a.p_iter,
        run_seed: a.run_seed,
        run_seeds: a.run_seeds,
    };
    let mut client = connect(a)?;
    let outcome = tune(&mut client, &profile, advisor.as_mut(), config)?;
    client.shutdown()?;

    let report = SessionReport::new(advisor.name(), config, profile.bounds, &outcome);
    if let Some(path) = &a.report {
        fs::write(path, report.to_json())?;
    }
    let mut out = io::stdout().lock();
    write!(out, "{}", outcome.memory.table())?;
    writeln!(
        out,
        "stopped: {:?}; best iteration {} with min_sum_rate {}",
        outcome.stop, outcome.best.iteration, outcome.best.metrics.min_sum_rate
    )?;
    writeln!(
        out,
        "{}",
        serde_json::to_string(&outcome.best.hyper).map_err(io::Error::other)?
    )?;
    Ok(())
}
