//! JSON-RPC 2.0 envelopes, one message per line.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const JSONRPC_VERSION: &str = "2.0";

/// MCP revision whose method names and result shapes the server follows.
pub const MCP_PROTOCOL_VERSION: &str = "2025-06-18";

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const TOOL_FAILURE: i64 = -32000;
pub const BUSY: i64 = -32001;
pub const RATE_LIMITED: i64 = -32002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn invalid_params(message: impl Into<String>) -> Self {
        Self::new(INVALID_PARAMS, message)
    }
}

/// A well-formed request or notification.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    /// `None` for notifications.
    pub id: Option<Value>,
    pub method: String,
    /// `Null` when absent.
    pub params: Value,
}

impl Request {
    pub fn is_notification(&self) -> bool {
        self.id.is_none()
    }
}

/// Why a line could not become a [`Request`], with the id to answer under.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub id: Value,
    pub error: RpcError,
}

/// Decodes one line. Invalid UTF-8 and invalid JSON are parse errors; valid
/// JSON that is not a single request object is an invalid request. Batches
/// are not supported and are rejected as invalid requests.
pub fn parse_line(line: &[u8]) -> Result<Request, Rejected> {
    let value: Value = serde_json::from_slice(line).map_err(|e| Rejected {
        id: Value::Null,
        error: RpcError::new(PARSE_ERROR, format!("parse error: {e}")),
    })?;
    let Value::Object(mut obj) = value else {
        return Err(Rejected {
            id: Value::Null,
            error: RpcError::new(INVALID_REQUEST, "invalid request: expected a single object"),
        });
    };

    let id = match obj.remove("id") {
        None => None,
        Some(id @ (Value::Number(_) | Value::String(_))) => Some(id),
        Some(_) => {
            return Err(Rejected {
                id: Value::Null,
                error: RpcError::new(INVALID_REQUEST, "invalid request: id must be a number or string"),
            })
        }
    };
    let reject = |message: &str| Rejected {
        id: id.clone().unwrap_or(Value::Null),
        error: RpcError::new(INVALID_REQUEST, format!("invalid request: {message}")),
    };

    if obj.get("jsonrpc").and_then(Value::as_str) != Some(JSONRPC_VERSION) {
        return Err(reject("jsonrpc must be \"2.0\""));
    }
    let method = match obj.remove("method") {
        Some(Value::String(m)) => m,
        Some(_) => return Err(reject("method must be a string")),
        None => return Err(reject("missing method")),
    };
    let params = match obj.remove("params") {
        None => Value::Null,
        Some(p @ (Value::Object(_) | Value::Array(_))) => p,
        Some(_) => return Err(reject("params must be an object or array")),
    };
    Ok(Request { id, method, params })
}

pub fn success(id: &Value, result: Value) -> String {
    json!({ "jsonrpc": JSONRPC_VERSION, "id": id, "result": result }).to_string()
}

pub fn failure(id: &Value, error: &RpcError) -> String {
    json!({ "jsonrpc": JSONRPC_VERSION, "id": id, "error": error }).to_string()
}

pub fn request(id: u64, method: &str, params: Value) -> String {
    json!({ "jsonrpc": JSONRPC_VERSION, "id": id, "method": method, "params": params }).to_string()
}

pub fn notification(method: &str, params: Value) -> String {
    json!({ "jsonrpc": JSONRPC_VERSION, "method": method, "params": params }).to_string()
}

/// A decoded response as seen by a client.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub id: Value,
    pub outcome: Result<Value, RpcError>,
}

/// Decodes a response line; `None` if it is not a response at all.
pub fn parse_response(line: &[u8]) -> Option<Response> {
    let Value::Object(mut obj) = serde_json::from_slice(line).ok()? else {
        return None;
    };
    let id = obj.remove("id")?;
    if let Some(err) = obj.remove("error") {
        let error = serde_json::from_value(err).ok()?;
        return Some(Response {
            id,
            outcome: Err(error),
        });
    }
    let result = obj.remove("result")?;
    Some(Response {
        id,
        outcome: Ok(result),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(line: &str) -> (Value, i64) {
        let r = parse_line(line.as_bytes()).unwrap_err();
        (r.id, r.error.code)
    }

    #[test]
    fn classifies_bad_lines() {
        assert_eq!(code("{not json"), (Value::Null, PARSE_ERROR));
        assert_eq!(code("[1,2]"), (Value::Null, INVALID_REQUEST));
        assert_eq!(code("[]"), (Value::Null, INVALID_REQUEST));
        assert_eq!(code("42"), (Value::Null, INVALID_REQUEST));
        assert_eq!(code(r#"{"jsonrpc":"2.0","id":7}"#), (json!(7), INVALID_REQUEST));
        assert_eq!(code(r#"{"jsonrpc":"1.0","id":"a","method":"x"}"#), (json!("a"), INVALID_REQUEST));
        assert_eq!(code(r#"{"jsonrpc":"2.0","id":{},"method":"x"}"#), (Value::Null, INVALID_REQUEST));
        assert_eq!(code(r#"{"jsonrpc":"2.0","id":1,"method":"x","params":3}"#), (json!(1), INVALID_REQUEST));
        let bad_utf8 = parse_line(b"{\"a\":\"\xff\"}").unwrap_err();
        assert_eq!(bad_utf8.error.code, PARSE_ERROR);
    }

    #[test]
    fn accepts_requests_and_notifications() {
        let r = parse_line(br#"{"jsonrpc":"2.0","id":"x1","method":"tools/list"}"#).unwrap();
        assert_eq!(r.id, Some(json!("x1")));
        assert_eq!(r.params, Value::Null);
        let n = parse_line(br#"{"jsonrpc":"2.0","method":"notifications/initialized"}"#).unwrap();
        assert!(n.is_notification());
    }

    #[test]
    fn responses_round_trip() {
        let ok = success(&json!(3), json!({"a": 1}));
        assert_eq!(
            parse_response(ok.as_bytes()).unwrap(),
            Response { id: json!(3), outcome: Ok(json!({"a": 1})) }
        );
        let err = failure(&json!("q"), &RpcError::new(BUSY, "busy"));
        let r = parse_response(err.as_bytes()).unwrap();
        assert_eq!(r.outcome.unwrap_err().code, BUSY);
    }
}
