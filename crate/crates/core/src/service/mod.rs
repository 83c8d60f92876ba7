//! Newline-delimited JSON session protocol over TCP or stdio.
//!
//! Each connection owns one [`Handler`], so one debug session. Requests are
//! handled strictly in order. While a `step` or `continue` request runs, a
//! heartbeat event goes out every [`ServerConfig::heartbeat`].

mod handler;

pub use handler::{code, event, Handler, SessionState, CAPABILITIES, PROTOCOL_VERSION};

use serde_json::Value;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub heartbeat: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            heartbeat: Duration::from_secs(5),
        }
    }
}

fn write_frame<W: Write>(out: &Mutex<W>, v: &Value) -> io::Result<()> {
    let mut w = out.lock().unwrap_or_else(|e| e.into_inner());
    serde_json::to_writer(&mut *w, v)?;
    w.write_all(b"\n")?;
    w.flush()
}

fn is_run_request(line: &str) -> bool {
    serde_json::from_str::<Value>(line)
        .ok()
        .and_then(|v| v.get("type").and_then(Value::as_str).map(|t| t == "step" || t == "continue"))
        .unwrap_or(false)
}

/// Serves one session until EOF or a `close` request.
pub fn serve_connection<R: BufRead, W: Write + Send>(mut reader: R, writer: W, config: &ServerConfig) -> io::Result<()> {
    let out = Mutex::new(writer);
    let mut handler = Handler::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut failed: Option<io::Error> = None;
        let reply = if is_run_request(line) {
            let (stop_tx, stop_rx) = mpsc::channel::<()>();
            thread::scope(|scope| {
                let out = &out;
                let interval = config.heartbeat;
                let beat = scope.spawn(move || {
                    while let Err(mpsc::RecvTimeoutError::Timeout) = stop_rx.recv_timeout(interval) {
                        let hb = event("heartbeat", serde_json::json!({ "state": "running" }));
                        if write_frame(out, &hb).is_err() {
                            break;
                        }
                    }
                });
                let reply = handler.handle_line(line, &mut |ev| {
                    if let Err(e) = write_frame(out, &ev) {
                        failed.get_or_insert(e);
                    }
                });
                drop(stop_tx);
                let _ = beat.join();
                reply
            })
        } else {
            handler.handle_line(line, &mut |ev| {
                if let Err(e) = write_frame(&out, &ev) {
                    failed.get_or_insert(e);
                }
            })
        };
        if let Some(e) = failed {
            return Err(e);
        }
        write_frame(&out, &reply)?;
        if handler.is_closed() {
            return Ok(());
        }
    }
}

pub fn serve_stdio(config: &ServerConfig) -> io::Result<()> {
    let stdin = io::stdin();
    serve_connection(stdin.lock(), io::stdout(), config)
}

pub fn bind(addr: impl ToSocketAddrs) -> io::Result<TcpListener> {
    TcpListener::bind(addr)
}

fn serve_stream(stream: TcpStream, config: &ServerConfig) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_connection(reader, stream, config)
}

/// Accepts connections forever, one thread per connection.
pub fn serve_listener(listener: TcpListener, config: ServerConfig) -> io::Result<()> {
    let config = Arc::new(config);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("qdb serve: accept failed: {e}");
                continue;
            }
        };
        let config = config.clone();
        thread::spawn(move || {
            if let Err(e) = serve_stream(stream, &config) {
                eprintln!("qdb serve: connection ended: {e}");
            }
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn roundtrip(lines: &[Value]) -> Vec<Value> {
        let input: String = lines.iter().map(|l| format!("{l}\n")).collect();
        let mut out = Vec::new();
        serve_connection(input.as_bytes(), &mut out, &ServerConfig::default()).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn hello_and_malformed() {
        let input = "{\"id\":1,\"type\":\"hello\"}\nnot json\n{\"id\":2,\"type\":\"step\"}\n";
        let mut out = Vec::new();
        serve_connection(input.as_bytes(), &mut out, &ServerConfig::default()).unwrap();
        let msgs: Vec<Value> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(msgs[0]["payload"]["protocol"], 1);
        assert_eq!(msgs[1]["id"], Value::Null);
        assert_eq!(msgs[1]["payload"]["code"], code::PARSE_ERROR);
        assert_eq!(msgs[2]["id"], 2);
        assert_eq!(msgs[2]["payload"]["code"], code::INVALID_STATE);
    }

    #[test]
    fn close_ends_connection() {
        let msgs = roundtrip(&[
            json!({"id": 1, "type": "close"}),
            json!({"id": 2, "type": "hello"}),
        ]);
        assert_eq!(msgs.len(), 1);
    }

    #[test]
    fn heartbeat_while_running() {
        let mut src = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[14];\n");
        for _ in 0..300 {
            src.push_str("h q; cx q[0],q[13];\n");
        }
        let lines = [
            json!({"id": 1, "type": "load", "payload": {"source": src}}),
            json!({"id": 2, "type": "continue"}),
        ];
        let input: String = lines.iter().map(|l| format!("{l}\n")).collect();
        let mut out = Vec::new();
        let config = ServerConfig {
            heartbeat: Duration::from_millis(1),
        };
        serve_connection(input.as_bytes(), &mut out, &config).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("\"heartbeat\""), "{text}");
    }
}
