//! Blocking JSON-RPC client over any line transport.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::{json, Value};

use crate::protocol::{self, parse_response, RpcError};
use crate::server::ToolServer;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Io(#[from] io::Error),
    #[error("server closed the connection")]
    Closed,
    #[error("server error {code}: {message}")]
    Rpc {
        code: i64,
        message: String,
        data: Option<Value>,
    },
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl From<RpcError> for ClientError {
    fn from(e: RpcError) -> Self {
        Self::Rpc {
            code: e.code,
            message: e.message,
            data: e.data,
        }
    }
}

/// What the tuning loop needs from a tool server.
pub trait ToolClient {
    /// Returns the tool's structured content.
    fn call_tool(&mut self, name: &str, arguments: Value) -> Result<Value, ClientError>;

    fn list_tools(&mut self) -> Result<Vec<Value>, ClientError>;
}

/// One connection. Requests are sent one at a time; responses with other
/// ids are skipped.
pub struct RpcClient {
    reader: Box<dyn BufRead + Send>,
    writer: Option<Box<dyn Write + Send>>,
    next_id: u64,
    child: Option<Child>,
    server_thread: Option<JoinHandle<io::Result<()>>>,
}

impl RpcClient {
    pub fn new(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        Self {
            reader: Box::new(reader),
            writer: Some(Box::new(writer)),
            next_id: 1,
            child: None,
            server_thread: None,
        }
    }

    /// Serves `server` on a thread of this process, connected by pipes.
    pub fn in_process(server: ToolServer) -> io::Result<Self> {
        let (to_server_r, to_server_w) = io::pipe()?;
        let (from_server_r, from_server_w) = io::pipe()?;
        let handle = thread::spawn(move || server.serve(BufReader::new(to_server_r), from_server_w));
        let mut client = Self::new(BufReader::new(from_server_r), to_server_w);
        client.server_thread = Some(handle);
        Ok(client)
    }

    /// Connects to `addr`, retrying refused connections up to `attempts`
    /// times with `delay` between tries.
    pub fn connect_tcp(
        addr: impl ToSocketAddrs,
        attempts: u32,
        delay: Duration,
    ) -> Result<Self, ClientError> {
        let addrs: Vec<_> = addr.to_socket_addrs()?.collect();
        let mut last = None;
        for attempt in 0..attempts.max(1) {
            if attempt > 0 {
                thread::sleep(delay);
            }
            match TcpStream::connect(&addrs[..]) {
                Ok(stream) => {
                    let reader = BufReader::new(stream.try_clone()?);
                    return Ok(Self::new(reader, stream));
                }
                Err(e) => last = Some(e),
            }
        }
        Err(ClientError::Io(last.unwrap_or_else(|| {
            io::Error::new(io::ErrorKind::NotFound, "no address to connect to")
        })))
    }

    /// Starts `program args...` and talks to it over its stdin and stdout.
    pub fn spawn(program: impl AsRef<Path>, args: &[String]) -> io::Result<Self> {
        let mut child = Command::new(program.as_ref())
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::new(BufReader::new(stdout), stdin);
        client.child = Some(child);
        Ok(client)
    }

    /// `initialize` followed by the `notifications/initialized` notice.
    pub fn initialize(&mut self) -> Result<Value, ClientError> {
        let info = self.request(
            "initialize",
            json!({
                "protocolVersion": protocol::MCP_PROTOCOL_VERSION,
                "clientInfo": { "name": "swarm-tuner-agent", "version": env!("CARGO_PKG_VERSION") },
                "capabilities": {},
            }),
        )?;
        self.notify("notifications/initialized", json!({}))?;
        Ok(info)
    }

    pub fn send_line(&mut self, line: &str) -> Result<(), ClientError> {
        let w = self.writer.as_mut().ok_or(ClientError::Closed)?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Next line from the server, without the newline; `None` at EOF.
    pub fn read_line(&mut self) -> Result<Option<String>, ClientError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        while line.ends_with(['\n', '\r']) {
            line.pop();
        }
        Ok(Some(line))
    }

    pub fn notify(&mut self, method: &str, params: Value) -> Result<(), ClientError> {
        self.send_line(&protocol::notification(method, params))
    }

    pub fn request(&mut self, method: &str, params: Value) -> Result<Value, ClientError> {
        let id = self.next_id;
        self.next_id += 1;
        self.send_line(&protocol::request(id, method, params))?;
        loop {
            let line = self.read_line()?.ok_or(ClientError::Closed)?;
            let Some(resp) = parse_response(line.as_bytes()) else {
                return Err(ClientError::Protocol(format!("not a response: {line}")));
            };
            if resp.id == json!(id) {
                return resp.outcome.map_err(ClientError::from);
            }
        }
    }

    /// Closes the sending side and waits for the server thread or child.
    pub fn shutdown(mut self) -> Result<(), ClientError> {
        self.finish()
    }

    fn finish(&mut self) -> Result<(), ClientError> {
        self.writer = None;
        if let Some(h) = self.server_thread.take() {
            h.join()
                .map_err(|_| ClientError::Protocol("server thread panicked".into()))??;
        }
        if let Some(mut child) = self.child.take() {
            child.wait()?;
        }
        Ok(())
    }
}

impl Drop for RpcClient {
    fn drop(&mut self) {
        let _ = self.finish();
    }
}

impl ToolClient for RpcClient {
    fn call_tool(&mut self, name: &str, arguments: Value) -> Result<Value, ClientError> {
        let mut result = self.request("tools/call", json!({ "name": name, "arguments": arguments }))?;
        if result.get("isError").and_then(Value::as_bool) == Some(true) {
            return Err(ClientError::Protocol(format!("tool `{name}` reported an error: {result}")));
        }
        result
            .get_mut("structuredContent")
            .map(Value::take)
            .ok_or_else(|| ClientError::Protocol("tool result lacks structuredContent".into()))
    }

    fn list_tools(&mut self) -> Result<Vec<Value>, ClientError> {
        match self.request("tools/list", json!({}))?.get_mut("tools").map(Value::take) {
            Some(Value::Array(tools)) => Ok(tools),
            _ => Err(ClientError::Protocol("tools/list result lacks a tools array".into())),
        }
    }
}
