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

//! Deterministic backends over synthetic fact worlds.
//!
//! A world is a set of `(subject, attribute, value)` triples. It renders to
//! text as one sentence per triple, `The <subject> has <attribute> <value> .`,
//! with a fixed parse tree. Questions take the form
//! `What is the <attribute> of the <subject> ?`.
//!
//! The oracle backends recover the world from whatever text they are handed,
//! so they need no state: any rendered world (or the empty text) is valid
//! input.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    BackendError, Capability, ConstituencyParser, EntailmentClassifier, NliLabel, QaVerdict, QuestionAnswerer,
    QuestionGenerator,
};
use crate::text::{is_punct_token, tokenize, TextRole, TokenizedText};
use crate::treebank::{is_auxiliary, parse_bracketed, AnswerSpan, ParseTree};

/// Tokens per rendered sentence.
const SENTENCE_LEN: usize = 6;
/// Position of the value token inside a rendered sentence.
const VALUE_POS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub attribute: String,
    pub value: String,
}

impl Fact {
    pub fn new(subject: &str, attribute: &str, value: &str) -> Self {
        Fact {
            subject: subject.into(),
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    pub fn sentence(&self) -> String {
        format!("The {} has {} {} .", self.subject, self.attribute, self.value)
    }

    pub fn question(&self) -> String {
        format!("What is the {} of the {} ?", self.attribute, self.subject)
    }

    fn tree(&self) -> String {
        format!(
            "(S (NP (DT The) (NN {})) (VP (VBZ has) (NP (NN {}) (NN {}))) (. .))",
            self.subject, self.attribute, self.value
        )
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.subject, self.attribute, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("field {0:?} must be a single word without punctuation or '|'")]
    BadField(String),
    #[error("value {0:?} is an auxiliary and could never be asked about")]
    AuxiliaryValue(String),
    #[error("{subject} already has a {attribute}")]
    DuplicateAttribute { subject: String, attribute: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("sentence {index} is not a rendered fact: {text:?}")]
    NotRendered { index: usize, text: String },
    #[error("{0}")]
    Io(String),
}

/// A set of triples with at most one value per `(subject, attribute)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactWorld {
    facts: BTreeSet<Fact>,
}

fn check_field(field: &str) -> Result<(), WorldError> {
    let toks = tokenize(field).tokens;
    let ok = !field.contains(['|', '(', ')']) && toks.len() == 1 && toks[0] == field && !is_punct_token(field);
    if ok {
        Ok(())
    } else {
        Err(WorldError::BadField(field.to_string()))
    }
}

impl FactWorld {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts<I: IntoIterator<Item = Fact>>(facts: I) -> Result<Self, WorldError> {
        let mut w = FactWorld::new();
        for f in facts {
            w.insert(f)?;
        }
        Ok(w)
    }

    /// Adds a fact. Re-inserting an existing fact is a no-op.
    pub fn insert(&mut self, fact: Fact) -> Result<bool, WorldError> {
        check_field(&fact.subject)?;
        check_field(&fact.attribute)?;
        check_field(&fact.value)?;
        if is_auxiliary(&fact.value) {
            return Err(WorldError::AuxiliaryValue(fact.value));
        }
        if self.facts.contains(&fact) {
            return Ok(false);
        }
        if self.lookup(&fact.subject, &fact.attribute).is_some() {
            return Err(WorldError::DuplicateAttribute {
                subject: fact.subject,
                attribute: fact.attribute,
            });
        }
        Ok(self.facts.insert(fact))
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn lookup(&self, subject: &str, attribute: &str) -> Option<&Fact> {
        self.facts
            .iter()
            .find(|f| f.subject == subject && f.attribute == attribute)
    }

    pub fn is_subset(&self, other: &FactWorld) -> bool {
        self.facts.is_subset(&other.facts)
    }

    /// Reads the `subject|attribute|value` line format. `#` starts a comment line.
    pub fn parse_str(body: &str) -> Result<Self, WorldError> {
        let mut w = FactWorld::new();
        for (i, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('|').map(str::trim).collect();
            let [s, a, v] = parts[..] else {
                return Err(WorldError::Line {
                    line: i + 1,
                    message: format!("expected 3 '|'-separated fields, found {}", parts.len()),
                });
            };
            w.insert(Fact::new(s, a, v)).map_err(|e| WorldError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let body = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_str(&body)
    }

    pub fn to_file_string(&self) -> String {
        self.facts.iter().map(|f| format!("{f}\n")).collect()
    }

    /// Recovers the world from rendered text. The empty text is the empty world.
    pub fn from_text(text: &TokenizedText) -> Result<Self, WorldError> {
        let mut w = FactWorld::new();
        for (index, sentence) in sentences(&text.tokens).enumerate() {
            let not_rendered = || WorldError::NotRendered {
                index,
                text: sentence.join(" "),
            };
            match sentence {
                [the, s, has, a, v, dot] if the == "The" && has == "has" && dot == "." => {
                    w.insert(Fact::new(s, a, v)).map_err(|_| not_rendered())?;
                }
                _ => return Err(not_rendered()),
            }
        }
        Ok(w)
    }
}

/// Splits tokens after each "." token; a trailing fragment is its own sentence.
fn sentences(tokens: &[String]) -> impl Iterator<Item = &[String]> {
    tokens.split_inclusive(|t| t == ".")
}

/// Text and per-sentence trees for a world, in lexicographic triple order.
pub fn render_world(world: &FactWorld) -> (TokenizedText, Vec<ParseTree>) {
    let raw: Vec<String> = world.facts.iter().map(Fact::sentence).collect();
    let text = TokenizedText::new(raw.join(" "), TextRole::Source);
    let trees = world
        .facts
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut t = parse_bracketed(&f.tree()).expect("fact fields are validated single words");
            t.shift(i * SENTENCE_LEN);
            t
        })
        .collect();
    (text, trees)
}

/// Oracle question generation: only the value slot of a rendered sentence
/// yields a question.
pub fn oracle_qg(world: &FactWorld, span: &AnswerSpan) -> Vec<TokenizedText> {
    if span.span.len() != 1 || span.span.start % SENTENCE_LEN != VALUE_POS {
        return Vec::new();
    }
    let sentence = span.span.start / SENTENCE_LEN;
    match world.facts.iter().nth(sentence) {
        Some(f) if span.text.tokens == [f.value.as_str()] => {
            vec![TokenizedText::new(f.question(), TextRole::Question)]
        }
        _ => Vec::new(),
    }
}

/// `(attribute, subject)` from a canonical question, if it is one.
fn question_slots(question: &TokenizedText) -> Option<(&str, &str)> {
    match question.tokens.as_slice() {
        [what, is, the1, a, of, the2, s, q]
            if what.eq_ignore_ascii_case("what")
                && is.eq_ignore_ascii_case("is")
                && the1.eq_ignore_ascii_case("the")
                && of.eq_ignore_ascii_case("of")
                && the2.eq_ignore_ascii_case("the")
                && q == "?" =>
        {
            Some((a.as_str(), s.as_str()))
        }
        _ => None,
    }
}

pub fn oracle_qa(world: &FactWorld, question: &TokenizedText) -> QaVerdict {
    question_slots(question)
        .and_then(|(a, s)| world.lookup(s, a))
        .map_or(QaVerdict::Unanswerable, |f| QaVerdict::answer(&f.value))
}

/// Entailment iff every hypothesis fact is a premise fact; never contradiction.
pub fn oracle_nli(premise: &FactWorld, hypothesis: &FactWorld) -> NliLabel {
    if hypothesis.is_subset(premise) {
        NliLabel::Entailment
    } else {
        NliLabel::Neutral
    }
}

fn question_tree(attribute: &str, subject: &str) -> ParseTree {
    parse_bracketed(&format!(
        "(SBARQ (WHNP (WP What)) (SQ (VBZ is) (NP (NP (DT the) (NN {attribute})) \
         (PP (IN of) (NP (DT the) (NN {subject}))))) (. ?))"
    ))
    .expect("question slots are single tokens")
}

/// Stateless oracle implementing all four capabilities.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSuite;

fn world_of(text: &TokenizedText, capability: Capability) -> Result<FactWorld, BackendError> {
    FactWorld::from_text(text).map_err(|e| BackendError::input(capability, e.to_string()))
}

impl QuestionGenerator for OracleSuite {
    fn generate(&self, text: &TokenizedText, span: &AnswerSpan) -> Result<Vec<TokenizedText>, BackendError> {
        let world = world_of(text, Capability::GenerateQuestions)?;
        Ok(oracle_qg(&world, span))
    }
}

impl QuestionAnswerer for OracleSuite {
    fn answer(&self, text: &TokenizedText, question: &TokenizedText) -> Result<QaVerdict, BackendError> {
        let world = world_of(text, Capability::AnswerQuestion)?;
        Ok(oracle_qa(&world, question))
    }
}

impl ConstituencyParser for OracleSuite {
    fn parse(&self, text: &TokenizedText) -> Result<Vec<ParseTree>, BackendError> {
        if let Some((a, s)) = question_slots(text) {
            let ok = [a, s].iter().all(|f| check_field(f).is_ok());
            if ok {
                return Ok(vec![question_tree(a, s)]);
            }
        }
        let world = world_of(text, Capability::Parse)?;
        Ok(render_world(&world).1)
    }
}

impl EntailmentClassifier for OracleSuite {
    fn classify(&self, premise: &TokenizedText, hypothesis: &TokenizedText) -> Result<NliLabel, BackendError> {
        let p = world_of(premise, Capability::ClassifyNli)?;
        let h = world_of(hypothesis, Capability::ClassifyNli)?;
        Ok(oracle_nli(&p, &h))
    }
}

/// Maps each oracle question back to the fact it asks about.
pub fn question_index(world: &FactWorld) -> HashMap<String, Fact> {
    world.facts.iter().map(|f| (f.question(), f.clone())).collect()
}
