// Copyright 2026 The GFQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Client for model services reached over HTTP.
//!
//! Every call POSTs a JSON envelope to `<base>/<endpoint>`:
//!
//! ```json
//! {"id": "17", "capability": "answer_question", "payload": {"text": "...", "question": "..."}}
//! ```
//!
//! and expects `{"id": "17", "payload": {...}}` back (or `{"id": ..., "error": "..."}`).
//! Responses are matched to requests by `id`. Payloads per endpoint:
//!
//! | endpoint             | request                                  | response                                   |
//! |----------------------|------------------------------------------|--------------------------------------------|
//! | `generate_questions` | `text`, `answer_span {start,end,text}`   | `questions: [string]`                      |
//! | `answer_question`    | `text`, `question`                       | `answer: string` or `unanswerable: true`   |
//! | `parse`              | `text`                                   | `trees: [bracketed string]`, one/sentence  |
//! | `classify_nli`       | `premise`, `hypothesis`                  | `label: entailment/contradiction/neutral`  |
//!
//! Timeouts and network failures are retried with exponential backoff;
//! protocol violations are not.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::{
    BackendError, Capability, ConstituencyParser, EntailmentClassifier, NliLabel, QaVerdict, QuestionAnswerer,
    QuestionGenerator,
};
use crate::text::{TextRole, TokenizedText};
use crate::treebank::{parse_document, AnswerSpan, ParseTree};

/// How a single attempt failed at the transport level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    Timeout,
    /// Connection problems and 5xx responses; worth retrying.
    Network(String),
    /// The service refused the request (4xx); retrying will not help.
    Rejected(String),
}

/// Sends one request body to an endpoint and returns the response body.
pub trait Transport: Send + Sync {
    fn post(&self, endpoint: &str, body: &str) -> Result<String, TransportFailure>;

    fn describe(&self) -> String {
        String::from("custom transport")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemoteError {
    #[error("{endpoint}: transport error after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("{endpoint}: timed out after {attempts} attempt(s)")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("{endpoint}: protocol error after {attempts} attempt(s): {message}")]
    Protocol {
        endpoint: String,
        attempts: u32,
        message: String,
    },
}

impl RemoteError {
    pub fn attempts(&self) -> u32 {
        match self {
            RemoteError::Transport { attempts, .. }
            | RemoteError::Timeout { attempts, .. }
            | RemoteError::Protocol { attempts, .. } => *attempts,
        }
    }

    pub fn endpoint(&self) -> &str {
        match self {
            RemoteError::Transport { endpoint, .. }
            | RemoteError::Timeout { endpoint, .. }
            | RemoteError::Protocol { endpoint, .. } => endpoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(200),
            max_backoff: Duration::from_secs(5),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `failed + 1`, after `failed` failures.
    pub fn backoff(&self, failed: u32) -> Duration {
        let factor = 1u32.checked_shl(failed.saturating_sub(1)).unwrap_or(u32::MAX);
        self.initial_backoff
            .checked_mul(factor)
            .unwrap_or(self.max_backoff)
            .min(self.max_backoff)
    }
}

/// A successful call and how many attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteResponse {
    pub payload: Value,
    pub attempts: u32,
}

pub struct RemoteClient {
    transport: Box<dyn Transport>,
    policy: RetryPolicy,
    next_id: AtomicU64,
}

impl RemoteClient {
    pub fn new(transport: Box<dyn Transport>, policy: RetryPolicy) -> Self {
        RemoteClient {
            transport,
            policy,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn http(base_url: &str, timeout: Duration, policy: RetryPolicy) -> Result<Self, RemoteError> {
        Ok(Self::new(Box::new(HttpTransport::new(base_url, timeout)?), policy))
    }

    pub fn describe(&self) -> String {
        self.transport.describe()
    }

    /// Sends `payload` to the capability's endpoint, retrying transient failures.
    pub fn call(&self, capability: Capability, payload: Value) -> Result<RemoteResponse, RemoteError> {
        let endpoint = capability.endpoint();
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let body = json!({ "id": id, "capability": endpoint, "payload": payload }).to_string();
        let max = self.policy.max_attempts.max(1);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let failure = match self.transport.post(endpoint, &body) {
                Ok(text) => return unwrap_envelope(&text, &id, endpoint, attempts),
                Err(TransportFailure::Rejected(message)) => {
                    return Err(RemoteError::Protocol {
                        endpoint: endpoint.into(),
                        attempts,
                        message,
                    })
                }
                Err(f) => f,
            };
            if attempts >= max {
                return Err(match failure {
                    TransportFailure::Timeout => RemoteError::Timeout {
                        endpoint: endpoint.into(),
                        attempts,
                    },
                    TransportFailure::Network(message) | TransportFailure::Rejected(message) => {
                        RemoteError::Transport {
                            endpoint: endpoint.into(),
                            attempts,
                            message,
                        }
                    }
                });
            }
            std::thread::sleep(self.policy.backoff(attempts));
        }
    }

    fn protocol(&self, capability: Capability, attempts: u32, message: impl Into<String>) -> RemoteError {
        RemoteError::Protocol {
            endpoint: capability.endpoint().into(),
            attempts,
            message: message.into(),
        }
    }

    pub fn generate_questions(&self, text: &TokenizedText, span: &AnswerSpan) -> Result<Vec<String>, RemoteError> {
        let cap = Capability::GenerateQuestions;
        let r = self.call(
            cap,
            json!({
                "text": text.raw,
                "answer_span": { "start": span.span.start, "end": span.span.end, "text": span.text.raw },
            }),
        )?;
        let questions = r
            .payload
            .get("questions")
            .and_then(Value::as_array)
            .ok_or_else(|| self.protocol(cap, r.attempts, "missing `questions` array"))?;
        questions
            .iter()
            .map(|q| {
                q.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| self.protocol(cap, r.attempts, "non-string question"))
            })
            .collect()
    }

    pub fn answer_question(&self, text: &TokenizedText, question: &TokenizedText) -> Result<QaVerdict, RemoteError> {
        let cap = Capability::AnswerQuestion;
        let r = self.call(cap, json!({ "text": text.raw, "question": question.raw }))?;
        let unanswerable = r.payload.get("unanswerable").and_then(Value::as_bool).unwrap_or(false);
        match (unanswerable, r.payload.get("answer")) {
            (true, None | Some(Value::Null)) => Ok(QaVerdict::Unanswerable),
            (false, Some(Value::String(a))) => Ok(QaVerdict::answer(a)),
            _ => Err(self.protocol(
                cap,
                r.attempts,
                "expected exactly one of `answer` or `unanswerable: true`",
            )),
        }
    }

    pub fn parse(&self, text: &TokenizedText) -> Result<Vec<ParseTree>, RemoteError> {
        let cap = Capability::Parse;
        let r = self.call(cap, json!({ "text": text.raw }))?;
        let trees: Vec<&str> = r
            .payload
            .get("trees")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_str).collect())
            .ok_or_else(|| self.protocol(cap, r.attempts, "missing `trees` string array"))?;
        parse_document(&trees).map_err(|e| self.protocol(cap, r.attempts, e.to_string()))
    }

    pub fn classify_nli(&self, premise: &TokenizedText, hypothesis: &TokenizedText) -> Result<NliLabel, RemoteError> {
        let cap = Capability::ClassifyNli;
        let r = self.call(cap, json!({ "premise": premise.raw, "hypothesis": hypothesis.raw }))?;
        r.payload
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| "missing `label`".to_string())
            .and_then(str::parse)
            .map_err(|m| self.protocol(cap, r.attempts, m))
    }
}

fn unwrap_envelope(text: &str, id: &str, endpoint: &str, attempts: u32) -> Result<RemoteResponse, RemoteError> {
    let protocol = |message: String| RemoteError::Protocol {
        endpoint: endpoint.into(),
        attempts,
        message,
    };
    let doc: Value = serde_json::from_str(text).map_err(|e| protocol(format!("invalid JSON: {e}")))?;
    match doc.get("id").and_then(Value::as_str) {
        Some(got) if got == id => {}
        got => {
            return Err(protocol(format!(
                "response id {got:?} does not match request id {id:?}"
            )))
        }
    }
    if let Some(err) = doc.get("error") {
        return Err(protocol(format!("service error: {err}")));
    }
    match doc.get("payload") {
        Some(payload @ Value::Object(_)) => Ok(RemoteResponse {
            payload: payload.clone(),
            attempts,
        }),
        _ => Err(protocol("missing `payload` object".into())),
    }
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, RemoteError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RemoteError::Transport {
                endpoint: String::new(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpTransport {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
        })
    }
}

impl Transport for HttpTransport {
    fn post(&self, endpoint: &str, body: &str) -> Result<String, TransportFailure> {
        let url = format!("{}/{}", self.base_url, endpoint);
        let resp = self
            .client
            .post(&url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportFailure::Timeout
                } else {
                    TransportFailure::Network(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                TransportFailure::Timeout
            } else {
                TransportFailure::Network(e.to_string())
            }
        })?;
        if status.is_server_error() {
            Err(TransportFailure::Network(format!("HTTP {status}")))
        } else if !status.is_success() {
            Err(TransportFailure::Rejected(format!("HTTP {status}: {text}")))
        } else {
            Ok(text)
        }
    }

    fn describe(&self) -> String {
        self.base_url.clone()
    }
}

impl QuestionGenerator for RemoteClient {
    fn generate(&self, text: &TokenizedText, span: &AnswerSpan) -> Result<Vec<TokenizedText>, BackendError> {
        Ok(self
            .generate_questions(text, span)?
            .into_iter()
            .map(|q| TokenizedText::new(q, TextRole::Question))
            .collect())
    }
}

impl QuestionAnswerer for RemoteClient {
    fn answer(&self, text: &TokenizedText, question: &TokenizedText) -> Result<QaVerdict, BackendError> {
        Ok(self.answer_question(text, question)?)
    }
}

impl ConstituencyParser for RemoteClient {
    fn parse(&self, text: &TokenizedText) -> Result<Vec<ParseTree>, BackendError> {
        Ok(RemoteClient::parse(self, text)?)
    }
}

impl EntailmentClassifier for RemoteClient {
    fn classify(&self, premise: &TokenizedText, hypothesis: &TokenizedText) -> Result<NliLabel, BackendError> {
        Ok(self.classify_nli(premise, hypothesis)?)
    }
}
