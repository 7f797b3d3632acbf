//! The tuning loop: profile, advisor, tool call, memory.

mod advisor;
mod llm;
mod memory;
mod profile;
mod tune;

pub use advisor::{Advice, Advisor, HeuristicAdvisor, HillClimbAdvisor, RandomAdvisor};
pub use llm::{
    parse_reply, ChatMessage, ChatTransport, HttpChat, LlmAdvisor, ParsedReply, ReplayChat,
    DEFAULT_API_KEY_ENV, DEFAULT_LLM_TIMEOUT,
};
pub use memory::{Memory, TuningRecord};
pub use profile::{AgentProfile, Bounds, Range};
pub use tune::{tune, SessionReport, StopReason, TuneConfig, TuneOutcome, SESSION_SCHEMA};

use crate::client::ClientError;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("LLM request failed: {0}")]
    Llm(String),
    #[error("replay: {0}")]
    Replay(String),
    #[error("advisor reply could not be parsed ({reason}); raw reply:\n{raw}")]
    MalformedReply { reason: String, raw: String },
    #[error("server disagrees with the tuning memory: {0}")]
    Mismatch(String),
    #[error("advisor terminated before any run")]
    NoRuns,
}
