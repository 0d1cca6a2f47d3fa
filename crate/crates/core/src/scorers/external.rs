//! Client for scorers served over the line-delimited JSON protocol, either
//! by a child process on stdio or over a TCP socket.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::protocol::{Reply, Request, PROTOCOL_VERSION};
use super::{logsumexp, Scorer, ScorerError};
use crate::textprep::{TokenId, Vocab};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Replies must be normalized to within this tolerance.
const NORMALIZATION_TOLERANCE: f64 = 1e-4;

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// One connection to an external scorer. Requests are serialized through
/// an internal lock, so a handle can be shared between decoding workers;
/// replies are matched to requests by id.
pub struct ExternalScorer {
    name: String,
    vocab: Vocab,
    timeout: Duration,
    conn: Mutex<Connection>,
    child: Option<Mutex<Child>>,
    socket: Option<TcpStream>,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("name", &self.name)
            .field("vocab_size", &self.vocab.len())
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalScorer {
    /// Runs `command` through `sh -c` and talks to it over stdio.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ScorerError> {
        let transport = |source| ScorerError::Transport {
            scorer: command.to_string(),
            source,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(transport)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut s = Self::handshake_over(command.to_string(), stdout, stdin, timeout);
        match &mut s {
            Ok(s) => s.child = Some(Mutex::new(child)),
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
        s
    }

    pub fn connect_tcp<A: ToSocketAddrs + std::fmt::Display>(
        addr: A,
        timeout: Duration,
    ) -> Result<Self, ScorerError> {
        let name = format!("tcp://{addr}");
        let transport = |source| ScorerError::Transport {
            scorer: name.clone(),
            source,
        };
        let stream = TcpStream::connect(&addr).map_err(transport)?;
        stream.set_nodelay(true).map_err(transport)?;
        let reader = stream.try_clone().map_err(transport)?;
        let socket = stream.try_clone().map_err(transport)?;
        let mut s = Self::handshake_over(name, reader, stream, timeout);
        match &mut s {
            Ok(s) => s.socket = Some(socket),
            Err(_) => {
                let _ = socket.shutdown(Shutdown::Both);
            }
        }
        s
    }

    /// Connects over arbitrary streams and performs the handshake.
    pub fn handshake_over<R, W>(
        name: String,
        reader: R,
        writer: W,
        timeout: Duration,
    ) -> Result<Self, ScorerError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name(format!("scorer-reader:{name}"))
            .spawn(move || {
                for line in BufReader::new(reader).lines() {
                    let stop = line.is_err();
                    if tx.send(line).is_err() || stop {
                        break;
                    }
                }
            })
            .map_err(|source| ScorerError::Transport {
                scorer: name.clone(),
                source,
            })?;
        let mut conn = Connection {
            writer: Box::new(writer),
            lines: rx,
            next_id: 1,
        };
        let vocab = handshake(&name, &mut conn, timeout)?;
        Ok(Self {
            name,
            vocab,
            timeout,
            conn: Mutex::new(conn),
            child: None,
            socket: None,
        })
    }
}

fn malformed(name: &str, detail: impl Into<String>) -> ScorerError {
    ScorerError::Malformed {
        scorer: name.to_string(),
        detail: detail.into(),
    }
}

fn call(
    name: &str,
    conn: &mut Connection,
    req: &Request,
    timeout: Duration,
) -> Result<Reply, ScorerError> {
    let transport = |source| ScorerError::Transport {
        scorer: name.to_string(),
        source,
    };
    let mut line = serde_json::to_string(req).expect("request serializes");
    line.push('\n');
    conn.writer.write_all(line.as_bytes()).map_err(transport)?;
    conn.writer.flush().map_err(transport)?;
    let reply = loop {
        let text = match conn.lines.recv_timeout(timeout) {
            Ok(Ok(text)) => text,
            Ok(Err(e)) => return Err(transport(e)),
            Err(RecvTimeoutError::Timeout) => {
                return Err(ScorerError::Timeout {
                    scorer: name.to_string(),
                    timeout_ms: timeout.as_millis(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(transport(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "scorer closed the connection",
                )))
            }
        };
        let reply: Reply =
            serde_json::from_str(&text).map_err(|e| malformed(name, e.to_string()))?;
        // Late replies to requests that already timed out are dropped.
        if reply.id < req.id() {
            continue;
        }
        if reply.id != req.id() {
            return Err(malformed(
                name,
                format!(
                    "reply id {} does not match request id {}",
                    reply.id,
                    req.id()
                ),
            ));
        }
        break reply;
    };
    if let Some(message) = reply.error {
        return Err(ScorerError::Remote {
            scorer: name.to_string(),
            message,
        });
    }
    Ok(reply)
}

fn handshake(name: &str, conn: &mut Connection, timeout: Duration) -> Result<Vocab, ScorerError> {
    let id = conn.next_id;
    conn.next_id += 1;
    let reply = call(
        name,
        conn,
        &Request::Hello {
            id,
            version: PROTOCOL_VERSION,
        },
        timeout,
    )?;
    if let Some(v) = reply.version {
        if v != PROTOCOL_VERSION {
            return Err(ScorerError::Version {
                scorer: name.to_string(),
                expected: PROTOCOL_VERSION,
                got: v,
            });
        }
    }
    let tokens = reply
        .vocab
        .ok_or_else(|| malformed(name, "hello reply without vocab"))?;
    Vocab::from_tokens(tokens).map_err(|source| ScorerError::Vocab {
        scorer: name.to_string(),
        source,
    })
}

impl Scorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logprobs(
        &self,
        prefix: &[TokenId],
        input: &[TokenId],
    ) -> Result<Vec<f64>, ScorerError> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let id = conn.next_id;
        conn.next_id += 1;
        let req = Request::NextLogprobs {
            id,
            prefix: prefix.to_vec(),
            input: input.to_vec(),
        };
        let reply = call(&self.name, &mut conn, &req, self.timeout)?;
        let lp = reply
            .logprobs
            .ok_or_else(|| malformed(&self.name, "reply without logprobs"))?;
        if lp.len() != self.vocab.len() {
            return Err(malformed(
                &self.name,
                format!("expected {} logprobs, got {}", self.vocab.len(), lp.len()),
            ));
        }
        let lp: Vec<f64> = lp
            .into_iter()
            .map(|x| x.unwrap_or(f64::NEG_INFINITY))
            .collect();
        if lp.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(malformed(&self.name, "non-finite log-probability"));
        }
        let z = logsumexp(&lp);
        if z.is_nan() || z.abs() > NORMALIZATION_TOLERANCE {
            return Err(malformed(
                &self.name,
                format!("log-probabilities sum to exp({z})"),
            ));
        }
        Ok(lp)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap_or_else(|p| p.into_inner());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
