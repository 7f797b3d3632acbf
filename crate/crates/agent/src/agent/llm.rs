//! Chat-model advisor and its transports.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use swarm_tuner_core::HyperParams;

use super::{Advice, Advisor, AgentError, AgentProfile, Memory};

const ITERATION_TEMPLATE: &str = include_str!("../../prompts/iteration.md");
const CORRECTION_TEMPLATE: &str = include_str!("../../prompts/correction.md");

pub const DEFAULT_API_KEY_ENV: &str = "SWARM_TUNER_API_KEY";
pub const DEFAULT_LLM_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.into(),
            content: content.into(),
        }
    }
}

/// Sends a conversation, returns the assistant's reply text.
pub trait ChatTransport {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, AgentError>;
}

/// Chat-completions endpoint over HTTPS. The key is read from the
/// environment when the transport is built and is never written anywhere.
pub struct HttpChat {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
}

impl fmt::Debug for HttpChat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpChat")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpChat {
    pub fn from_env(
        endpoint: &str,
        model: &str,
        key_var: &str,
        timeout: Duration,
    ) -> Result<Self, AgentError> {
        let api_key = std::env::var(key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| AgentError::Config(format!("environment variable {key_var} is not set")))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
        })
    }
}

impl ChatTransport for HttpChat {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let body = json!({ "model": self.model, "messages": messages });
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| AgentError::Llm(e.to_string()))?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| AgentError::Llm(format!("unreadable response: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| AgentError::Llm(format!("response has no message content: {v}")))
    }
}

/// Canned replies read from a directory, one file per reply, consumed in
/// file-name order. Only names starting with a digit count.
#[derive(Debug, Clone)]
pub struct ReplayChat {
    files: Vec<PathBuf>,
    next: usize,
}

impl ReplayChat {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, AgentError> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| AgentError::Replay(format!("{}: {e}", dir.display())))?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| AgentError::Replay(e.to_string()))?;
            let name = entry.file_name();
            let starts_with_digit = name.to_string_lossy().starts_with(|c: char| c.is_ascii_digit());
            if starts_with_digit && entry.path().is_file() {
                files.push(entry.path());
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(AgentError::Replay(format!("no numbered replies in {}", dir.display())));
        }
        Ok(Self { files, next: 0 })
    }

    pub fn remaining(&self) -> usize {
        self.files.len() - self.next
    }
}

impl ChatTransport for ReplayChat {
    fn complete(&mut self, _: &[ChatMessage]) -> Result<String, AgentError> {
        let path = self.files.get(self.next).ok_or_else(|| {
            AgentError::Replay(format!("all {} replies consumed", self.files.len()))
        })?;
        self.next += 1;
        std::fs::read_to_string(path).map_err(|e| AgentError::Replay(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedReply {
    Propose {
        hyper: HyperParams,
        rationale: Option<String>,
    },
    Terminate {
        rationale: Option<String>,
    },
}

/// Fenced blocks as `(info string, body, text before the fence)`.
fn fenced_blocks(text: &str) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    let mut open: Option<(String, String, String)> = None;
    let mut prose = String::new();
    for line in text.lines() {
        let t = line.trim();
        match &mut open {
            None if t.starts_with("```") => {
                open = Some((t[3..].trim().to_lowercase(), String::new(), prose.clone()));
            }
            None => {
                prose.push_str(line);
                prose.push('\n');
            }
            Some(_) if t == "```" => out.push(open.take().expect("open block")),
            Some((_, body, _)) => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    out
}

fn canonical_key(key: &str) -> String {
    match key.trim().to_lowercase().as_str() {
        "w" | "ω" | "omega" => "omega".into(),
        "pnum" | "p_num" | "p-num" => "p_num".into(),
        other => other.into(),
    }
}

/// Extracts the structured block from a model reply. Errors are short
/// reasons suitable for a corrective prompt.
pub fn parse_reply(text: &str) -> Result<ParsedReply, String> {
    let blocks = fenced_blocks(text);
    let (body, prose) = blocks
        .iter()
        .rev()
        .find(|(info, _, _)| info == "json" || info.is_empty())
        .map(|(_, b, p)| (b.as_str(), p.as_str()))
        .ok_or_else(|| "no fenced json block found".to_string())?;
    let obj: Map<String, Value> = match serde_json::from_str(body) {
        Ok(Value::Object(o)) => o,
        Ok(_) => return Err("the json block is not an object".into()),
        Err(e) => return Err(format!("the json block is not valid JSON ({e})")),
    };
    let obj: Map<String, Value> = obj.into_iter().map(|(k, v)| (canonical_key(&k), v)).collect();

    let rationale = match obj.get("rationale") {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.trim().to_string()),
        _ => Some(prose.trim().to_string()).filter(|s| !s.is_empty()),
    };
    match obj.get("terminate") {
        None | Some(Value::Bool(false)) | Some(Value::Null) => {}
        Some(Value::Bool(true)) => return Ok(ParsedReply::Terminate { rationale }),
        Some(other) => return Err(format!("\"terminate\" must be true or false, got {other}")),
    }

    let mut v = [0.0; 8];
    for (slot, name) in v.iter_mut().zip(HyperParams::NAMES) {
        let x = obj
            .get(name)
            .ok_or_else(|| format!("missing \"{name}\""))?
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("\"{name}\" must be a number"))?;
        *slot = x;
    }
    if v[0] < 0.0 || v[0].fract() != 0.0 {
        return Err(format!("\"p_num\" must be a non-negative integer, got {}", v[0]));
    }
    Ok(ParsedReply::Propose {
        hyper: HyperParams::from_array(v),
        rationale,
    })
}

/// Advisor backed by a chat model. Each round sends the profile as the
/// system prompt and the memory table as the user turn; a reply without a
/// usable block gets one corrective follow-up before the round fails.
#[derive(Debug)]
pub struct LlmAdvisor<T> {
    transport: T,
}

impl<T: ChatTransport> LlmAdvisor<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    pub fn into_transport(self) -> T {
        self.transport
    }

    pub fn render_round(memory: &Memory) -> String {
        let best = memory.best().map_or("none yet".to_string(), |b| {
            format!(
                "iteration {} with min_sum_rate {:.4}",
                b.iteration, b.metrics.min_sum_rate
            )
        });
        let last = memory.last().map_or("none yet".to_string(), |r| {
            let m = &r.metrics;
            format!(
                "speed S = {}, turning A = {}, building C = {}, fitness = {}",
                m.s_value, m.a_value, m.c_value, m.f_value
            )
        });
        ITERATION_TEMPLATE
            .replace("{{count}}", &memory.len().to_string())
            .replace("{{table}}", memory.table().trim_end())
            .replace("{{best}}", &best)
            .replace("{{last}}", &last)
    }
}

impl<T: ChatTransport> Advisor for LlmAdvisor<T> {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn advise(&mut self, profile: &AgentProfile, memory: &Memory) -> Result<Advice, AgentError> {
        let mut messages = vec![
            ChatMessage::new("system", profile.render_system()),
            ChatMessage::new("user", Self::render_round(memory)),
        ];
        let reply = self.transport.complete(&messages)?;
        let parsed = match parse_reply(&reply) {
            Ok(p) => p,
            Err(reason) => {
                messages.push(ChatMessage::new("assistant", reply));
                messages.push(ChatMessage::new(
                    "user",
                    CORRECTION_TEMPLATE.replace("{{reason}}", &reason),
                ));
                let retry = self.transport.complete(&messages)?;
                parse_reply(&retry).map_err(|reason| AgentError::MalformedReply { reason, raw: retry })?
            }
        };
        Ok(match parsed {
            ParsedReply::Propose { hyper, rationale } => Advice::Propose {
                hyper,
                rationale: rationale.unwrap_or_default(),
            },
            ParsedReply::Terminate { rationale } => Advice::Terminate {
                rationale: rationale.unwrap_or_default(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_greek_and_short_omega_names() {
        let reply = "Lower inertia.\n\n```json\n{\"P_num\": 46, \"w\": 0.68, \"c1\": 1.55, \"c2\": 1.45, \
                     \"k1\": 0.12, \"k2\": 0.65, \"k3\": 0.15, \"k4\": 0.06}\n```\n";
        let ParsedReply::Propose { hyper, rationale } = parse_reply(reply).unwrap() else {
            panic!("expected a proposal");
        };
        assert_eq!(hyper.p_num, 46);
        assert_eq!(hyper.omega, 0.68);
        assert_eq!(rationale.as_deref(), Some("Lower inertia."));
        let greek = reply.replace("\"w\"", "\"ω\"");
        assert_eq!(parse_reply(&greek).unwrap(), parse_reply(reply).unwrap());
    }

    #[test]
    fn terminate_needs_no_parameters() {
        let r = parse_reply("Done.\n```json\n{\"terminate\": true, \"rationale\": \"converged\"}\n```").unwrap();
        assert_eq!(r, ParsedReply::Terminate { rationale: Some("converged".into()) });
    }

    #[test]
    fn rejects_prose_partial_and_fractional_replies() {
        assert!(parse_reply("I would lower omega a bit.").unwrap_err().contains("no fenced"));
        assert!(parse_reply("```json\n{\"p_num\": 40}\n```").unwrap_err().contains("missing \"omega\""));
        let frac = "```json\n{\"p_num\": 40.5, \"omega\": 1, \"c1\": 1, \"c2\": 1, \"k1\": 1, \"k2\": 1, \"k3\": 1, \"k4\": 1}\n```";
        assert!(parse_reply(frac).unwrap_err().contains("integer"));
        assert!(parse_reply("```json\n{oops\n```").unwrap_err().contains("not valid JSON"));
    }
}
