//! JSON-lines provider protocol.
//!
//! Every request is one JSON object with an `op` key; every response is one
//! JSON object, or `{"error": "..."}` on failure:
//!
//! | op          | request payload                    | response                                              |
//! |-------------|------------------------------------|-------------------------------------------------------|
//! | `encode`    | `text`                             | `{"vector": [f64; dim]}`                              |
//! | `stance`    | `sentence`, `title`                | `{"unrelated", "agree", "disagree", "discuss"}`       |
//! | `syntax`    | `text`                             | `{"counts": {"NP": 2, ...}}`                          |
//! | `sentiment` | `text`                             | `{"positive", "neutral", "negative", "compound"}`     |
//! | `doc_score` | `sentences: [text]`                | `{"score": f64}`                                      |
//!
//! Unknown ops answer `{"error": "unknown_op"}`. Transports: a child process
//! exchanging lines on stdin/stdout, or HTTP POST of the same objects.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{
    DocScore, DocumentScorer, ProviderError, ProviderResult, Providers, SentenceEncoder,
    SentenceEncoding, SentimentAnalyzer, SentimentScores, StanceClassifier, StanceDistribution,
    SyntaxAnalyzer, SyntaxLabel, SyntaxProfile,
};
use crate::{Error, Result};

/// Carries one request object to a provider and returns its response object.
pub trait Transport: Send + Sync {
    fn call(&self, request: &Value) -> ProviderResult<Value>;
}

impl<F> Transport for F
where
    F: Fn(&Value) -> ProviderResult<Value> + Send + Sync,
{
    fn call(&self, request: &Value) -> ProviderResult<Value> {
        self(request)
    }
}

/// Client side: implements every provider trait over a [`Transport`] and
/// validates responses against the protocol.
pub struct RemoteProvider {
    transport: Box<dyn Transport>,
    dim: usize,
}

impl RemoteProvider {
    pub fn new(transport: Box<dyn Transport>, encoding_dim: usize) -> Self {
        RemoteProvider { transport, dim: encoding_dim }
    }

    pub fn remote_call(&self, request: &Value) -> ProviderResult<Value> {
        let response = self.transport.call(request)?;
        if !response.is_object() {
            return Err(ProviderError::Protocol(format!("response is not an object: {response}")));
        }
        if let Some(err) = response.get("error") {
            let msg = err.as_str().map_or_else(|| err.to_string(), str::to_string);
            return Err(ProviderError::Remote(msg));
        }
        Ok(response)
    }

    fn typed<T: for<'de> Deserialize<'de>>(&self, request: Value) -> ProviderResult<T> {
        let op = request["op"].as_str().unwrap_or_default().to_string();
        let response = self.remote_call(&request)?;
        serde_json::from_value(response).map_err(|e| ProviderError::Protocol(format!("{op}: {e}")))
    }
}

#[derive(Deserialize)]
struct VectorResponse {
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct CountsResponse {
    counts: BTreeMap<String, u32>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

impl SentenceEncoder for RemoteProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> ProviderResult<SentenceEncoding> {
        let r: VectorResponse = self.typed(json!({"op": "encode", "text": text}))?;
        if r.vector.len() != self.dim {
            return Err(ProviderError::Protocol(format!(
                "encode returned {} dimensions, configured {}",
                r.vector.len(),
                self.dim
            )));
        }
        if r.vector.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::Protocol("encode returned non-finite values".into()));
        }
        Ok(SentenceEncoding(r.vector))
    }
}

impl StanceClassifier for RemoteProvider {
    fn stance(&self, sentence: &str, title: &str) -> ProviderResult<StanceDistribution> {
        let d: StanceDistribution = self.typed(json!({"op": "stance", "sentence": sentence, "title": title}))?;
        d.validate()?;
        Ok(d)
    }
}

impl SyntaxAnalyzer for RemoteProvider {
    fn syntax(&self, sentence: &str) -> ProviderResult<SyntaxProfile> {
        let r: CountsResponse = self.typed(json!({"op": "syntax", "text": sentence}))?;
        let mut profile = SyntaxProfile::default();
        for (name, n) in r.counts {
            // Labels outside the fixed set count as unknown.
            let label = name.parse().unwrap_or(SyntaxLabel::Unknown);
            profile.add(label, n);
        }
        Ok(profile)
    }
}

impl SentimentAnalyzer for RemoteProvider {
    fn sentiment(&self, sentence: &str) -> ProviderResult<SentimentScores> {
        let s: SentimentScores = self.typed(json!({"op": "sentiment", "text": sentence}))?;
        s.validate()?;
        Ok(s)
    }
}

impl DocumentScorer for RemoteProvider {
    fn doc_score(&self, sentences: &[&str]) -> ProviderResult<DocScore> {
        let r: ScoreResponse = self.typed(json!({"op": "doc_score", "sentences": sentences}))?;
        DocScore::new(r.score)
    }
}

/// Server side: answers one protocol request with the given providers.
pub fn serve_request(providers: &Providers, request: &Value) -> Value {
    let text = |key: &str| request.get(key).and_then(Value::as_str);
    let missing = |key: &str| json!({"error": format!("missing_field:{key}")});
    let result: ProviderResult<Value> = match request.get("op").and_then(Value::as_str) {
        Some("encode") => match text("text") {
            Some(t) => providers.encoder.encode(t).map(|e| json!({"vector": e.0})),
            None => return missing("text"),
        },
        Some("stance") => match (text("sentence"), text("title")) {
            (Some(s), Some(t)) => providers.stance.stance(s, t).map(|d| json!(d)),
            (None, _) => return missing("sentence"),
            _ => return missing("title"),
        },
        Some("syntax") => match text("text") {
            Some(t) => providers.syntax.syntax(t).map(|p| json!({"counts": p})),
            None => return missing("text"),
        },
        Some("sentiment") => match text("text") {
            Some(t) => providers.sentiment.sentiment(t).map(|s| json!(s)),
            None => return missing("text"),
        },
        Some("doc_score") => {
            let Some(items) = request.get("sentences").and_then(Value::as_array) else {
                return missing("sentences");
            };
            let sentences: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
            if sentences.len() != items.len() {
                return json!({"error": "sentences_must_be_strings"});
            }
            providers.doc.doc_score(&sentences).map(|d| json!({"score": d.0}))
        }
        _ => return json!({"error": "unknown_op"}),
    };
    result.unwrap_or_else(|e| json!({"error": e.to_string()}))
}

/// Serves newline-delimited requests from `input` until EOF.
pub fn serve_lines(providers: &Providers, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Value>(&line) {
            Ok(request) => serve_request(providers, &request),
            Err(_) => json!({"error": "malformed_request"}),
        };
        writeln!(output, "{response}")?;
        output.flush()?;
    }
    Ok(())
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Child process speaking the protocol over stdin/stdout. Calls are serialized.
/// A timed-out or dead child is discarded and respawned on the next call.
pub struct SubprocessTransport {
    command: Vec<String>,
    timeout: Duration,
    worker: Mutex<Option<Worker>>,
}

impl SubprocessTransport {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let t = SubprocessTransport {
            command: command.to_vec(),
            timeout,
            worker: Mutex::new(None),
        };
        let worker = t.start().map_err(Error::Provider)?;
        *t.worker.lock().expect("fresh mutex") = Some(worker);
        Ok(t)
    }

    fn start(&self) -> ProviderResult<Worker> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| ProviderError::Unavailable("empty provider command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProviderError::Unavailable(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Worker { child, stdin, lines: rx })
    }
}

impl Transport for SubprocessTransport {
    fn call(&self, request: &Value) -> ProviderResult<Value> {
        let mut guard = self.worker.lock().map_err(|_| ProviderError::Unavailable("poisoned lock".into()))?;
        if guard.is_none() {
            *guard = Some(self.start()?);
        }
        let worker = guard.as_mut().expect("worker present");
        let sent = writeln!(worker.stdin, "{request}").and_then(|_| worker.stdin.flush());
        if let Err(e) = sent {
            *guard = None;
            return Err(ProviderError::Unavailable(format!("write to provider failed: {e}")));
        }
        match worker.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line)
                .map_err(|e| ProviderError::Protocol(format!("malformed response {line:?}: {e}"))),
            Ok(Err(e)) => {
                *guard = None;
                Err(ProviderError::Unavailable(format!("read from provider failed: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                *guard = None;
                Err(ProviderError::Timeout(self.timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => {
                *guard = None;
                Err(ProviderError::Unavailable("provider process exited".into()))
            }
        }
    }
}

/// HTTP POST of each request object to a fixed URL.
pub struct HttpTransport {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        HttpTransport {
            url: url.to_string(),
            timeout,
            agent: config.into(),
        }
    }
}

impl Transport for HttpTransport {
    fn call(&self, request: &Value) -> ProviderResult<Value> {
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout(self.timeout.as_millis() as u64),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
                ProviderError::Timeout(self.timeout.as_millis() as u64)
            }
            other => ProviderError::Unavailable(other.to_string()),
        };
        let mut response = self.agent.post(&self.url).send_json(request).map_err(map_err)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(map_err)?;
        if status >= 500 {
            return Err(ProviderError::Unavailable(format!("HTTP {status}: {body}")));
        }
        serde_json::from_str(&body)
            .map_err(|e| ProviderError::Protocol(format!("HTTP {status}, malformed body {body:?}: {e}")))
    }
}
