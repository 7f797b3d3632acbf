use swarm_tuner_agent::agent::AgentError;
use swarm_tuner_agent::protocol::INVALID_PARAMS;
use swarm_tuner_agent::ClientError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PROTOCOL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Runtime(_) => EXIT_RUNTIME,
            Self::Protocol(_) => EXIT_PROTOCOL,
        }
    }
}

impl From<swarm_tuner_core::Error> for CliError {
    fn from(e: swarm_tuner_core::Error) -> Self {
        match e {
            swarm_tuner_core::Error::Io(io) => Self::Runtime(io.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Rpc { code, .. } if code == INVALID_PARAMS => Self::Validation(e.to_string()),
            other => Self::Protocol(other.to_string()),
        }
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Client(c) => c.into(),
            AgentError::Config(_) | AgentError::Replay(_) => Self::Validation(e.to_string()),
            AgentError::Llm(_) | AgentError::MalformedReply { .. } | AgentError::Mismatch(_) => {
                Self::Protocol(e.to_string())
            }
            AgentError::NoRuns => Self::Runtime(e.to_string()),
        }
    }
}
