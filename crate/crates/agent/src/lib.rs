//! Tool server and tuning agent for the swarm trajectory optimizer.
//!
//! [`server::ToolServer`] exposes the optimizer over line-delimited JSON-RPC
//! 2.0 with MCP-style `initialize`, `tools/list` and `tools/call` methods.
//! [`agent::tune`] is the closed loop that asks an [`agent::Advisor`] for
//! hyper-parameters, runs them through a [`client::ToolClient`] and keeps
//! the results in its [`agent::Memory`].

pub mod agent;
pub mod client;
pub mod protocol;
pub mod runlog;
pub mod server;
pub mod tools;

pub use client::{ClientError, RpcClient, ToolClient};
pub use runlog::{RunLog, RunMetrics, RunRecord};
pub use server::{ServerConfig, ToolServer};
