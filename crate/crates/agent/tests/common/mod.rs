#![allow(dead_code)]

use std::path::PathBuf;

use swarm_tuner_agent::{RunLog, ServerConfig, ToolServer};
use swarm_tuner_core::{load_scenario, RadioMap, Scenario};

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn small_scenario() -> Scenario {
    load_scenario(workspace_root().join("crates/core/tests/data/two_ugv.toml")).unwrap()
}

pub fn reference_scenario() -> Scenario {
    load_scenario(workspace_root().join("scenarios/hitsz_like.toml")).unwrap()
}

pub fn small_server(config: ServerConfig) -> ToolServer {
    let s = small_scenario();
    let map = RadioMap::generate(&s, 2).unwrap();
    ToolServer::new(s, map, RunLog::in_memory(), config)
}
