//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use swarm_tuner_agent::protocol::{BUSY, INVALID_PARAMS, INVALID_REQUEST, PARSE_ERROR};
use swarm_tuner_cli::compare::CompareReport;
use swarm_tuner_core::swarm::{
    angle_penalty, building_penalty, random_trajectory, speed_penalty, InitStrategy, Optimizer,
    SwarmConfig, FEASIBILITY_EPS,
};
use swarm_tuner_core::{
    greedy_schedule_and_power, load_scenario, HyperParams, LinkState, Point3, RadioMap, Scenario,
    TrajectorySet, UgvPath, VoxelGrid,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn reference_path() -> String {
    root().join("scenarios/hitsz_like.toml").display().to_string()
}

fn reference() -> Scenario {
    load_scenario(reference_path()).unwrap()
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swarm-tuner"));
    c.current_dir(root())
        .env_remove("SWARM_TUNER_LOG")
        .env_remove("SWARM_TUNER_SCENARIO");
    c
}

/// Runs the binary and returns stdout, failing on a non-zero exit.
fn run_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "swarm-tuner {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

// 1. Scheduling oracle on single-UAV micro-instances.

/// One UAV and one voxel; `gains[n][t]` is set by hand.
fn micro_world(gains: &[[f64; 2]; 2], r_min: f64, p_max: f64, n0: f64) -> (Scenario, RadioMap) {
    let grid = VoxelGrid::new(0.0, 0.0, 0.0, 10.0, [1, 1, 1]).unwrap();
    let scenario = Scenario {
        uav_count: 1,
        ugv_count: 2,
        slots: 2,
        tau: 1.0,
        v_max: 10.0,
        theta_max: PI / 2.0,
        h_min: 0.0,
        h_max: 10.0,
        d_min: 1.0,
        r_min,
        p_max,
        n0,
        grid,
        buildings: Vec::new(),
        ugv_paths: vec![
            UgvPath {
                waypoints: vec![Point3::new(5.0, 5.0, 0.0)],
                speed: 1.0,
            };
            2
        ],
    };
    let slices = gains.iter().flat_map(|row| row.iter().map(|g| vec![*g])).collect();
    let map = RadioMap::from_slices(grid, 2, 2, slices).unwrap();
    (scenario, map)
}

/// All 0/1 assignments `a[n][t]` with at most one UGV per slot, as
/// per-slot choices.
fn valid_schedules() -> Vec<[Option<usize>; 2]> {
    let mut out = Vec::new();
    for bits in 0u32..16 {
        let a = |n: usize, t: usize| bits >> (2 * n + t) & 1 == 1;
        let mut choice = [None; 2];
        let mut ok = true;
        for (t, c) in choice.iter_mut().enumerate() {
            match (a(0, t), a(1, t)) {
                (true, true) => ok = false,
                (true, false) => *c = Some(0),
                (false, true) => *c = Some(1),
                (false, false) => {}
            }
        }
        if ok {
            out.push(choice);
        }
    }
    out
}

/// Min-sum-rate at full power, no interference with one UAV.
fn schedule_value(gains: &[[f64; 2]; 2], choice: &[Option<usize>; 2], p: f64, n0: f64) -> f64 {
    let mut sums = [0.0; 2];
    for (t, c) in choice.iter().enumerate() {
        if let Some(n) = *c {
            sums[n] += (1.0 + gains[n][t] * p / n0).log2();
        }
    }
    sums[0].min(sums[1])
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let (p, n0) = (0.1, 1e-13);
    let mut cases = vec![
        ([[1e-9, 1e-10], [1e-10, 1e-9]], 1.0),
        ([[1e-9, 1e-9], [1e-9, 1e-9]], 0.0),
        ([[1e-9, 2e-9], [1e-10, 1e-10]], 0.0),
        ([[1e-9, 1e-16], [1e-10, 1e-17]], 1.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let mut g = [[0.0; 2]; 2];
        for row in &mut g {
            for x in row.iter_mut() {
                *x = 10f64.powf(rng.random_range(-15.0..-8.0));
            }
        }
        cases.push((g, rng.random_range(0.0..12.0)));
    }
    let schedules = valid_schedules();
    ensure!(schedules.len() == 9, "expected 9 valid schedules, got {}", schedules.len());

    let traj = TrajectorySet::from_fn(1, 2, |_, _| Point3::new(5.0, 5.0, 5.0));
    let mut worst = 0.0f64;
    for (gains, r_min) in &cases {
        let (scenario, map) = micro_world(gains, *r_min, p, n0);
        let (sched, power) = greedy_schedule_and_power(&traj, &scenario, &map).map_err(|e| e.to_string())?;
        let got = LinkState::new(&traj, &sched, &power, &map, n0)
            .and_then(|l| l.min_sum_rate())
            .map_err(|e| e.to_string())?;
        let produced = [0, 1].map(|t| sched.ugv_for(1, t + 1).map(|n| n - 1));
        let entry = schedules
            .iter()
            .find(|s| **s == produced)
            .ok_or_else(|| format!("produced schedule {produced:?} is not valid"))?;
        let expected = schedule_value(gains, entry, p, n0);
        let err = (got - expected).abs();
        worst = worst.max(err);
        ensure!(err <= 1e-12, "gains {gains:?}: {got} vs oracle {expected}");
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{} instances, max error {worst:.1e}, {elapsed:.2?}", cases.len()))
}

// 2. Penalty identities.

fn single(points: &[[f64; 3]]) -> TrajectorySet {
    TrajectorySet::new(1, points.len(), points.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()).unwrap()
}

/// Zigzag above every roof with steps of `0.3 v_max tau` and 60 degree turns.
fn feasible_zigzag(s: &Scenario, phase: usize) -> TrajectorySet {
    let step = 0.3 * s.v_max * s.tau;
    let roof = s.buildings.iter().map(|b| b.height).fold(s.h_min, f64::max);
    let z = (roof + 1.0).min(s.h_max);
    let (dx, dy) = (step * (PI / 6.0).sin(), step * (PI / 6.0).cos());
    TrajectorySet::from_fn(s.uav_count, s.slots, |m, t| {
        let mut p = Point3::new(20.0 + 60.0 * (m - 1) as f64, 10.0, z);
        for k in 1..t {
            let sign = if (k + phase).is_multiple_of(2) { 1.0 } else { -1.0 };
            p += Point3::new(sign * dx, dy, 0.0);
        }
        p
    })
}

fn turn(a: Point3, b: Point3) -> f64 {
    if a.norm() <= 1e-9 || b.norm() <= 1e-9 {
        0.0
    } else {
        (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
    }
}

/// Whether each constraint is violated anywhere, computed from scratch.
fn violations(traj: &TrajectorySet, s: &Scenario) -> (bool, bool, bool) {
    let (mut fast, mut sharp, mut inside) = (false, false, false);
    for m0 in 0..s.uav_count {
        let path = traj.uav_path(m0);
        for w in path.windows(2) {
            fast |= (w[1] - w[0]).norm() / s.tau > s.v_max * (1.0 + FEASIBILITY_EPS);
        }
        for w in path.windows(3) {
            sharp |= turn(w[1] - w[0], w[2] - w[1]) > s.theta_max * (1.0 + FEASIBILITY_EPS);
        }
        for p in &path[..s.slots - 1] {
            inside |= s
                .buildings
                .iter()
                .any(|b| b.footprint_contains(p.x, p.y) && p.z < b.height * (1.0 - FEASIBILITY_EPS));
        }
    }
    (fast, sharp, inside)
}

fn criterion_2() -> Outcome {
    let s = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut zeros = [0usize; 3];
    for k in 0..1000 {
        let raw = random_trajectory(&s, &mut rng);
        // Every other sample is shrunk towards its start so that some
        // constraints hold and the zero side is exercised too.
        let traj = if k % 2 == 0 {
            raw
        } else {
            let scale = rng.random_range(0.0..0.2);
            TrajectorySet::from_fn(s.uav_count, s.slots, |m, t| {
                let path = raw.uav_path(m - 1);
                path[0] + (path[t - 1] - path[0]) * scale
            })
        };
        let pen = [speed_penalty(&traj, &s), angle_penalty(&traj, &s), building_penalty(&traj, &s)];
        ensure!(pen.iter().all(|p| *p >= 0.0), "negative penalty {pen:?} at sample {k}");
        let (fast, sharp, inside) = violations(&traj, &s);
        ensure!(
            (pen[0] == 0.0, pen[1] == 0.0, pen[2] == 0.0) == (!fast, !sharp, !inside),
            "sample {k}: penalties {pen:?} disagree with violations {:?}",
            (fast, sharp, inside)
        );
        for (z, p) in zeros.iter_mut().zip(pen) {
            *z += (p == 0.0) as usize;
        }
    }
    for phase in 0..20 {
        let traj = feasible_zigzag(&s, phase);
        let pen = [speed_penalty(&traj, &s), angle_penalty(&traj, &s), building_penalty(&traj, &s)];
        ensure!(pen == [0.0; 3], "feasible zigzag {phase} has penalties {pen:?}");
    }

    // two_ugv: v_max = 10 m/s, tau = 1 s, theta_max = 90 degrees, one
    // 30 m building over [60, 80]^2.
    let small = load_scenario(root().join("crates/core/tests/data/two_ugv.toml")).unwrap();
    let speed = speed_penalty(&single(&[[0.0, 0.0, 30.0], [20.0, 0.0, 30.0], [20.0, 0.0, 30.0], [25.0, 0.0, 30.0]]), &small);
    let u_turn = angle_penalty(&single(&[[10.0, 0.0, 30.0], [20.0, 0.0, 30.0], [10.0, 0.0, 30.0], [10.0, 0.0, 30.0]]), &small);
    let inside = building_penalty(&single(&[[70.0, 70.0, 20.0], [70.0, 70.0, 35.0], [90.0, 90.0, 20.0], [90.0, 90.0, 20.0]]), &small);
    ensure!((speed - 1.0).abs() <= 1e-9, "2 v_max step gives S = {speed}");
    ensure!((u_turn - 1.0).abs() <= 1e-9, "U-turn gives A = {u_turn}");
    ensure!((inside - 10.0 / 30.0).abs() <= 1e-9, "20 m inside a 30 m building gives C = {inside}");
    Ok(format!(
        "1000 samples (zero S/A/C in {}/{}/{}), 20 feasible, hand cases S={speed} A={u_turn} C={inside:.9}",
        zeros[0], zeros[1], zeros[2]
    ))
}

// 3. Monotone convergence.

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let s = reference();
    let map = RadioMap::generate(&s, 1).map_err(|e| e.to_string())?;
    let hyper = HyperParams {
        p_num: 20,
        ..HyperParams::baseline1()
    };
    let opt = Optimizer::new(&s, &map);
    for seed in 0..100 {
        let r = opt.run(hyper, 20, seed).map_err(|e| e.to_string())?;
        ensure!(r.history.len() == 21, "seed {seed}: history length {}", r.history.len());
        if let Some(k) = r.history.windows(2).position(|w| w[1] < w[0]) {
            return Err(format!("seed {seed}: gBest fitness drops at iteration {}", k + 1));
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("100 runs non-decreasing, {elapsed:.1?}"))
}

// 4. Warm start against uniform initialization.

/// P(X >= wins) for X ~ Binomial(n, 1/2).
fn sign_test_p(wins: u64, n: u64) -> f64 {
    let choose = |k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (wins..=n).map(choose).sum::<f64>() / 2f64.powi(n as i32)
}

fn criterion_4() -> Outcome {
    let s = reference();
    let map = RadioMap::generate(&s, 1).map_err(|e| e.to_string())?;
    let hyper = HyperParams::baseline1();
    let initial = |init: InitStrategy, seed: u64| -> Result<f64, String> {
        let opt = Optimizer::new(&s, &map).with_config(SwarmConfig {
            init,
            ..SwarmConfig::default()
        });
        opt.run(hyper, 0, seed).map(|r| r.history[0]).map_err(|e| e.to_string())
    };
    let (mut wins, mut warm_sum, mut uniform_sum) = (0, 0.0, 0.0);
    for seed in 0..20 {
        let w = initial(InitStrategy::WarmStart, seed)?;
        let u = initial(InitStrategy::Uniform, seed)?;
        wins += (w > u) as u64;
        warm_sum += w;
        uniform_sum += u;
    }
    let p = sign_test_p(wins, 20);
    let (wm, um) = (warm_sum / 20.0, uniform_sum / 20.0);
    ensure!(wm > um, "mean initial fitness warm {wm} <= uniform {um}");
    ensure!(p < 0.05, "sign test: {wins}/20 wins, p = {p}");
    Ok(format!("mean initial fitness warm {wm:.3} vs uniform {um:.3}, {wins}/20 wins, p = {p:.2e}"))
}

// 5. Tuning gain direction.

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = dir.path().join("tuned.json");
    let compare = dir.path().join("compare.json");
    let scenario = reference_path();
    run_bin(&[
        "tune", "--scenario", &scenario, "--advisor", "hillclimb", "--run-seeds", "3",
        "--max-iters", "20", "--patience", "8", "--report", report.to_str().unwrap(),
    ])?;
    let tuned = format!("tuned={}", report.display());
    run_bin(&[
        "compare", "--scenario", &scenario, "--config", &tuned, "--config", "baseline1",
        "--config", "baseline2", "--seed-start", "100", "--seed-count", "10",
        "--out", compare.to_str().unwrap(),
    ])?;
    let r: CompareReport = serde_json::from_value(read_json(&compare)?).map_err(|e| e.to_string())?;
    let mean = |name: &str| r.summary(name).map(|c| c.mean).ok_or(format!("no {name} in report"));
    let (t, b1, b2) = (mean("tuned")?, mean("baseline1")?, mean("baseline2")?);
    let pct = |a: &str, b: &str| r.gain(a, b).map_or("n/a".into(), |g| format!("{g:+.2}%"));
    let detail = format!(
        "mean min_sum_rate tuned {t:.3}, baseline1 {b1:.3}, baseline2 {b2:.3}; gains {} over baseline1, {} over baseline2",
        pct("tuned", "baseline1"),
        pct("tuned", "baseline2")
    );
    ensure!(t > b2, "{detail}");
    ensure!(t >= b1, "{detail}");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    Ok(format!("{detail}, {elapsed:.0?}"))
}

// 6. Determinism of the binary.

fn criterion_6() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let scenario = reference_path();
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for dir in &dirs {
        let d = dir.path();
        let p = |name: &str| d.join(name).display().to_string();
        let mut got = vec![
            run_bin(&["gen-map", "--scenario", &scenario, "--map-seed", "3", "--out", &p("map.rmap")])?,
            run_bin(&["run", "--scenario", &scenario, "--seed", "4", "--p-iter", "10", "--out", &p("run")])?,
        ];
        got.push(run_bin(&[
            "compare", "--scenario", &scenario, "--config", "baseline1", "--config", "baseline2",
            "--seed-count", "2", "--p-iter", "5", "--out", &p("compare.json"),
        ])?);
        got.push(run_bin(&[
            "tune", "--scenario", &scenario, "--advisor", "hillclimb", "--max-iters", "10", "--seed", "7",
            "--report", &p("session.json"),
        ])?);
        // Output paths are echoed; only the directory differs.
        let dir_text = d.display().to_string();
        for out in &mut got {
            *out = String::from_utf8_lossy(out).replace(&dir_text, "<dir>").into_bytes();
        }
        for file in ["map.rmap", "run/result.json", "run/trajectory.tsv", "compare.json", "session.json"] {
            got.push(std::fs::read(d.join(file)).map_err(|e| format!("{file}: {e}"))?);
        }
        outputs.push(got);
    }
    let names = [
        "gen-map stdout", "run stdout", "compare stdout", "tune stdout", "map.rmap",
        "result.json", "trajectory.tsv", "compare.json", "session report",
    ];
    for (k, name) in names.iter().enumerate() {
        ensure!(outputs[0][k] == outputs[1][k], "{name} differs between executions");
    }
    let session: Value = serde_json::from_slice(&outputs[0][8]).map_err(|e| e.to_string())?;
    let iterations = session["records"].as_array().map_or(0, Vec::len);
    Ok(format!("{} artifacts byte-identical, tune session of {iterations} iterations", names.len()))
}

// 7. Protocol conformance over stdio.

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
}

impl Session {
    fn start() -> Self {
        let mut child = bin()
            .args(["serve", "--scenario", &reference_path(), "--rate-limit", "0"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let stdout = child.stdout.take().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Self {
            stdin: child.stdin.take(),
            child,
            lines: rx,
        }
    }

    fn send(&mut self, lines: &[String]) {
        let stdin = self.stdin.as_mut().unwrap();
        for l in lines {
            writeln!(stdin, "{l}").unwrap();
        }
        stdin.flush().unwrap();
    }

    fn recv(&self) -> Result<Value, String> {
        let line = self
            .lines
            .recv_timeout(Duration::from_secs(120))
            .map_err(|_| "server went silent".to_string())?;
        serde_json::from_str(&line).map_err(|e| format!("unparseable response {line:?}: {e}"))
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        drop(self.stdin.take());
        if self.child.wait_timeout_ok().is_err() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

trait WaitBriefly {
    fn wait_timeout_ok(&mut self) -> Result<(), ()>;
}

impl WaitBriefly for Child {
    fn wait_timeout_ok(&mut self) -> Result<(), ()> {
        let deadline = Instant::now() + Duration::from_secs(30);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.try_wait() {
                return Ok(());
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        Err(())
    }
}

fn request(id: u64, method: &str, params: Value) -> String {
    json!({"jsonrpc": "2.0", "id": id, "method": method, "params": params}).to_string()
}

fn run_call(id: u64, hyper: HyperParams, p_iter: usize) -> String {
    let mut args = serde_json::to_value(hyper).unwrap();
    args["p_iter"] = json!(p_iter);
    args["seed"] = json!(1);
    request(id, "tools/call", json!({"name": "run_ws_pso_cm", "arguments": args}))
}

fn error_code(v: &Value) -> Option<i64> {
    v["error"]["code"].as_i64()
}

fn fuzz_line(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => {
            let len = rng.random_range(0..120);
            let bytes: Vec<u8> = (0..len).map(|_| rng.random::<u8>()).filter(|b| *b != b'\n').collect();
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => {
            let pieces = ["{", "}", "[", "]", "\"", ":", ",", "jsonrpc", "2.0", "id", "method", "null", "1e999", "-"];
            (0..rng.random_range(1..20)).map(|_| pieces[rng.random_range(0..pieces.len())]).collect()
        }
        2 => {
            let ids = [json!(null), json!(true), json!([1]), json!({"a": 1})];
            json!({"jsonrpc": "2.0", "id": ids[rng.random_range(0..ids.len())], "method": "ping"}).to_string()
        }
        _ => {
            let versions = [json!("1.0"), json!(2), json!(null)];
            json!({"jsonrpc": versions[rng.random_range(0..versions.len())], "id": rng.random::<u32>(), "method": "ping"})
                .to_string()
        }
    }
}

fn criterion_7() -> Outcome {
    let mut s = Session::start();

    s.send(&[request(1, "initialize", json!({"protocolVersion": "2025-06-18", "capabilities": {}, "clientInfo": {"name": "acceptance", "version": "0"}}))]);
    let init = s.recv()?;
    ensure!(init["id"] == 1 && init["result"]["protocolVersion"].is_string(), "initialize: {init}");

    s.send(&[
        json!({"jsonrpc": "2.0", "method": "notifications/initialized"}).to_string(),
        request(2, "tools/list", json!({})),
    ]);
    let list = s.recv()?;
    let names: Vec<&str> = list["result"]["tools"]
        .as_array()
        .map(|t| t.iter().filter_map(|x| x["name"].as_str()).collect())
        .unwrap_or_default();
    ensure!(list["id"] == 2 && names == ["run_ws_pso_cm", "get_scenario", "get_history"], "tools/list: {list}");

    let small = HyperParams {
        p_num: 10,
        ..HyperParams::baseline1()
    };
    s.send(&[run_call(3, small, 2)]);
    let valid = s.recv()?;
    ensure!(
        valid["id"] == 3 && valid["result"]["isError"] == false && valid["result"]["structuredContent"]["run_id"] == 1,
        "valid call: {valid}"
    );

    let bad = HyperParams {
        p_num: 1,
        ..HyperParams::baseline1()
    };
    s.send(&[run_call(4, bad, 2)]);
    let invalid = s.recv()?;
    ensure!(invalid["id"] == 4 && error_code(&invalid) == Some(INVALID_PARAMS), "invalid params: {invalid}");

    s.send(&["{\"jsonrpc\": \"2.0\", \"id\": 5, \"method\": ".to_string()]);
    let parse = s.recv()?;
    ensure!(parse["id"].is_null() && error_code(&parse) == Some(PARSE_ERROR), "parse error: {parse}");

    // A long run followed at once by a second call: the second is refused.
    let long = HyperParams {
        p_num: 60,
        ..HyperParams::baseline1()
    };
    s.send(&[run_call(6, long, 80), run_call(7, small, 1)]);
    let busy = s.recv()?;
    ensure!(busy["id"] == 7 && error_code(&busy) == Some(BUSY), "expected busy reply to id 7, got {busy}");
    let finished = s.recv()?;
    ensure!(
        finished["id"] == 6 && finished["result"]["structuredContent"]["run_id"] == 2,
        "long run: {finished}"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let fuzz: Vec<String> = (0..10_000).map(|_| fuzz_line(&mut rng)).collect();
    let writer = {
        let mut stdin = s.stdin.take().unwrap();
        std::thread::spawn(move || {
            for l in fuzz {
                writeln!(stdin, "{l}").unwrap();
            }
            writeln!(stdin, "{}", request(u64::MAX, "ping", json!({}))).unwrap();
            stdin.flush().unwrap();
            stdin
        })
    };
    let mut answered = 0;
    loop {
        let v = s.recv()?;
        if v["id"] == json!(u64::MAX) {
            ensure!(v["result"] == json!({}), "ping after fuzz: {v}");
            break;
        }
        let code = error_code(&v);
        ensure!(code == Some(PARSE_ERROR) || code == Some(INVALID_REQUEST), "fuzz reply {v}");
        answered += 1;
    }
    s.stdin = Some(writer.join().map_err(|_| "fuzz writer panicked".to_string())?);
    s.send(&[request(8, "tools/call", json!({"name": "get_history", "arguments": {}}))]);
    let history = s.recv()?;
    let runs = history["result"]["structuredContent"]["records"].as_array().map_or(0, Vec::len);
    ensure!(history["id"] == 8 && runs == 2, "history after fuzz: {history}");
    Ok(format!("scripted session ok, {answered} fuzz lines answered with -32700/-32600, ping and history ok afterwards"))
}

// 8. Table I replay.

const TABLE_I: [(usize, [f64; 7]); 6] = [
    (46, [0.12, 0.65, 0.15, 0.06, 0.68, 1.55, 1.45]),
    (50, [0.1, 0.7, 0.1, 0.1, 0.729, 1.494, 1.494]),
    (40, [0.1, 0.7, 0.1, 0.05, 0.7, 1.5, 1.5]),
    (50, [0.15, 0.6, 0.3, 0.1, 0.6, 1.8, 1.8]),
    (40, [0.15, 0.6, 0.2, 0.05, 0.65, 1.6, 1.4]),
    (40, [0.12, 0.63, 0.2, 0.02, 0.68, 1.7, 1.3]),
];

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = dir.path().join("session.json");
    run_bin(&[
        "tune", "--scenario", &reference_path(), "--advisor", "llm", "--replay", "fixtures/tableI/",
        "--report", report.to_str().unwrap(),
    ])?;
    let session = read_json(&report)?;
    let records = session["records"].as_array().cloned().unwrap_or_default();
    ensure!(records.len() == 6, "{} iterations executed", records.len());
    for (k, (rec, (p_num, [k1, k2, k3, k4, w, c1, c2]))) in records.iter().zip(TABLE_I).enumerate() {
        let got: HyperParams = serde_json::from_value(rec["hyper"].clone()).map_err(|e| e.to_string())?;
        let want = HyperParams {
            p_num,
            omega: w,
            c1,
            c2,
            k1,
            k2,
            k3,
            k4,
        };
        ensure!(got == want, "row {}: {got:?} != {want:?}", k + 1);
    }
    ensure!(session["stop_reason"] == "advisor_terminated", "stop reason {}", session["stop_reason"]);
    Ok(format!(
        "6 proposals equal rows 1-6, best iteration {}",
        session["best_iteration"]
    ))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("scheduling oracle on micro-instances", criterion_1),
        ("penalty identities", criterion_2),
        ("monotone convergence", criterion_3),
        ("warm start beats uniform initialization", criterion_4),
        ("tuning gain direction", criterion_5),
        ("determinism of the binary", criterion_6),
        ("protocol conformance", criterion_7),
        ("table replay", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                Err(p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()))
            });
        match outcome {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {reason}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
