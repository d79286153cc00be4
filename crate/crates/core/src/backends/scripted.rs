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

//! Lookup-table backends for hand-built fixtures over free text.
//!
//! Keys are compared after normalization, so `"wearing?"` and `"wearing ?"`
//! hit the same entry. Unlisted questions are unanswerable, unlisted spans
//! generate nothing, unlisted NLI pairs are neutral, and unlisted texts fail
//! to parse.

use std::collections::HashMap;
use std::sync::Arc;

use super::{
    BackendDescriptor, BackendError, BackendSuite, Capability, ConstituencyParser, EntailmentClassifier, NliLabel,
    QaVerdict, QuestionAnswerer, QuestionGenerator,
};
use crate::text::{NormalizedPhrase, TextRole, TokenizedText};
use crate::treebank::{parse_document, AnswerSpan, ParseTree};

fn key(text: &str) -> String {
    NormalizedPhrase::from_str_lossy(text).to_string()
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedSuite {
    parses: HashMap<String, Vec<ParseTree>>,
    questions: HashMap<String, Vec<String>>,
    answers: HashMap<(String, String), String>,
    nli: HashMap<(String, String), NliLabel>,
}

impl ScriptedSuite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers the per-sentence trees for a text. Panics on malformed trees.
    pub fn parse(mut self, text: &str, trees: &[&str]) -> Self {
        let parsed = parse_document(trees).unwrap_or_else(|e| panic!("bad fixture tree for {text:?}: {e}"));
        self.parses.insert(key(text), parsed);
        self
    }

    /// Questions generated for a span, keyed by the span's text.
    pub fn questions(mut self, span_text: &str, questions: &[&str]) -> Self {
        self.questions
            .insert(key(span_text), questions.iter().map(|q| q.to_string()).collect());
        self
    }

    pub fn answer(mut self, text: &str, question: &str, answer: &str) -> Self {
        self.answers.insert((key(text), key(question)), answer.to_string());
        self
    }

    pub fn nli(mut self, premise: &str, hypothesis: &str, label: NliLabel) -> Self {
        self.nli.insert((key(premise), key(hypothesis)), label);
        self
    }

    pub fn into_suite(self) -> BackendSuite {
        let s = Arc::new(self);
        BackendSuite {
            qg: s.clone(),
            qa: s.clone(),
            parser: s.clone(),
            nli: s,
            descriptor: BackendDescriptor {
                name: "scripted".into(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
        }
    }
}

impl QuestionGenerator for ScriptedSuite {
    fn generate(&self, _text: &TokenizedText, span: &AnswerSpan) -> Result<Vec<TokenizedText>, BackendError> {
        Ok(self
            .questions
            .get(&key(&span.text.raw))
            .map(|qs| {
                qs.iter()
                    .map(|q| TokenizedText::new(q.as_str(), TextRole::Question))
                    .collect()
            })
            .unwrap_or_default())
    }
}

impl QuestionAnswerer for ScriptedSuite {
    fn answer(&self, text: &TokenizedText, question: &TokenizedText) -> Result<QaVerdict, BackendError> {
        Ok(self
            .answers
            .get(&(key(&text.raw), key(&question.raw)))
            .map_or(QaVerdict::Unanswerable, |a| QaVerdict::answer(a)))
    }
}

impl ConstituencyParser for ScriptedSuite {
    fn parse(&self, text: &TokenizedText) -> Result<Vec<ParseTree>, BackendError> {
        self.parses
            .get(&key(&text.raw))
            .cloned()
            .ok_or_else(|| BackendError::input(Capability::Parse, format!("no tree for {:?}", text.raw)))
    }
}

impl EntailmentClassifier for ScriptedSuite {
    fn classify(&self, premise: &TokenizedText, hypothesis: &TokenizedText) -> Result<NliLabel, BackendError> {
        Ok(*self
            .nli
            .get(&(key(&premise.raw), key(&hypothesis.raw)))
            .unwrap_or(&NliLabel::Neutral))
    }
}
