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

//! Model capabilities consumed by the pipeline.
//!
//! Four capabilities are needed: question generation, question answering,
//! constituency parsing and entailment classification. Each is a trait so the
//! pipeline can run against the deterministic fact-world oracle, a scripted
//! lookup table, or model services reached over HTTP.

pub mod oracle;
pub mod remote;
pub mod scripted;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::TokenizedText;
use crate::treebank::{AnswerSpan, ParseTree};

pub use oracle::{Fact, FactWorld, OracleSuite, WorldError};
pub use remote::{HttpTransport, RemoteClient, RemoteError, RetryPolicy, Transport, TransportFailure};
pub use scripted::ScriptedSuite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    GenerateQuestions,
    AnswerQuestion,
    Parse,
    ClassifyNli,
}

impl Capability {
    /// Endpoint name on the wire.
    pub fn endpoint(self) -> &'static str {
        match self {
            Capability::GenerateQuestions => "generate_questions",
            Capability::AnswerQuestion => "answer_question",
            Capability::Parse => "parse",
            Capability::ClassifyNli => "classify_nli",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.endpoint())
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    /// The backend cannot handle this input (e.g. the oracle given free text).
    #[error("{capability}: unsupported input: {message}")]
    Input { capability: Capability, message: String },
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

impl BackendError {
    pub fn input(capability: Capability, message: impl Into<String>) -> Self {
        BackendError::Input {
            capability,
            message: message.into(),
        }
    }
}

/// Output of the question answerer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QaVerdict {
    Answer { answer_text: TokenizedText },
    Unanswerable,
}

impl QaVerdict {
    pub fn answer(text: &str) -> Self {
        QaVerdict::Answer {
            answer_text: TokenizedText::new(text, crate::text::TextRole::Answer),
        }
    }

    pub fn answer_text(&self) -> Option<&TokenizedText> {
        match self {
            QaVerdict::Answer { answer_text } => Some(answer_text),
            QaVerdict::Unanswerable => None,
        }
    }

    pub fn is_unanswerable(&self) -> bool {
        matches!(self, QaVerdict::Unanswerable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Contradiction,
    Neutral,
}

impl NliLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Contradiction => "contradiction",
            NliLabel::Neutral => "neutral",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NliLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entailment" => Ok(NliLabel::Entailment),
            "contradiction" => Ok(NliLabel::Contradiction),
            "neutral" => Ok(NliLabel::Neutral),
            other => Err(format!("unknown NLI label {other:?}")),
        }
    }
}

/// Generates questions whose answer should be the given span of `text`.
/// Results are in beam order, best first.
pub trait QuestionGenerator: Send + Sync {
    fn generate(&self, text: &TokenizedText, span: &AnswerSpan) -> Result<Vec<TokenizedText>, BackendError>;
}

pub trait QuestionAnswerer: Send + Sync {
    fn answer(&self, text: &TokenizedText, question: &TokenizedText) -> Result<QaVerdict, BackendError>;
}

/// Returns one tree per sentence, with spans numbered across the whole text.
pub trait ConstituencyParser: Send + Sync {
    fn parse(&self, text: &TokenizedText) -> Result<Vec<ParseTree>, BackendError>;
}

pub trait EntailmentClassifier: Send + Sync {
    fn classify(&self, premise: &TokenizedText, hypothesis: &TokenizedText) -> Result<NliLabel, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub version: String,
}

/// The four capabilities bundled together.
#[derive(Clone)]
pub struct BackendSuite {
    pub qg: Arc<dyn QuestionGenerator>,
    pub qa: Arc<dyn QuestionAnswerer>,
    pub parser: Arc<dyn ConstituencyParser>,
    pub nli: Arc<dyn EntailmentClassifier>,
    pub descriptor: BackendDescriptor,
}

impl fmt::Debug for BackendSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendSuite")
            .field("descriptor", &self.descriptor)
            .finish_non_exhaustive()
    }
}

impl BackendSuite {
    pub fn oracle() -> Self {
        let o = Arc::new(OracleSuite);
        BackendSuite {
            qg: o.clone(),
            qa: o.clone(),
            parser: o.clone(),
            nli: o,
            descriptor: BackendDescriptor {
                name: "oracle".into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
        }
    }

    pub fn remote(client: RemoteClient) -> Self {
        let descriptor = BackendDescriptor {
            name: "remote".into(),
            version: client.describe(),
        };
        let c = Arc::new(client);
        BackendSuite {
            qg: c.clone(),
            qa: c.clone(),
            parser: c.clone(),
            nli: c,
            descriptor,
        }
    }
}
