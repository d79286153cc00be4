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

//! Answerable candidate generation.
//!
//! The source text is parsed, answer spans are extracted, and the question
//! generator is asked for questions targeting each span. Questions are
//! deduplicated by normalized text and then kept only if the answerer,
//! reading the source text, recovers the target span (token F1 at least
//! `theta`).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, QaVerdict};
use crate::text::{normalize, token_f1, NormalizedPhrase, TextRole, TokenizedText};
use crate::treebank::{extract_answer_spans_traced, AnswerSpan, Span, SpanDrop};

pub const DEFAULT_THETA: f64 = 0.6;

/// Position of a candidate in generation order: the target span's pre-order
/// index, then the generator's beam rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceOrder {
    pub span_index: usize,
    pub beam_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generated,
    SurvivedCommonGround,
    Ranked,
}

/// Number of question constituents found inside the reveal set. Questions
/// that could not be parsed sort after every counted score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealScore {
    Count(usize),
    Unscored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateQuestion {
    pub id: String,
    pub question: TokenizedText,
    pub target_span: AnswerSpan,
    pub source_order: SourceOrder,
    pub stage_history: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reveal_score: Option<RevealScore>,
}

impl CandidateQuestion {
    pub fn new(question: TokenizedText, target_span: AnswerSpan, beam_rank: usize) -> Self {
        let source_order = SourceOrder {
            span_index: target_span.order_index,
            beam_rank,
        };
        CandidateQuestion {
            id: format!("q{}.{}", source_order.span_index, beam_rank),
            question: question.with_role(TextRole::Question),
            target_span,
            source_order,
            stage_history: vec![Stage::Generated],
            reveal_score: None,
        }
    }

    pub fn normalized_question(&self) -> NormalizedPhrase {
        normalize(&self.question)
    }

    pub(crate) fn mark(&mut self, stage: Stage) {
        if !self.stage_history.contains(&stage) {
            self.stage_history.push(stage);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub theta: f64,
    /// Keep only beams ranked below this; `None` keeps every beam.
    pub max_beam_rank: Option<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            theta: DEFAULT_THETA,
            max_beam_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateQuestion {
    pub question: String,
    pub kept: String,
    pub dropped_span: Span,
    pub dropped_order: SourceOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripDrop {
    pub id: String,
    pub question: String,
    pub target: String,
    /// What the answerer returned from the source text; `None` if unanswerable.
    pub answer: Option<String>,
    pub f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub span_drops: Vec<SpanDrop>,
    pub beam_cutoff_drops: usize,
    pub duplicates: Vec<DuplicateQuestion>,
    pub round_trip_drops: Vec<RoundTripDrop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutput {
    pub candidates: Vec<CandidateQuestion>,
    pub spans: Vec<AnswerSpan>,
    pub trace: GenerationTrace,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("source text is empty")]
    EmptySource,
    #[error("parsing the source text: {0}")]
    Parse(#[source] BackendError),
    #[error("generating questions for span {span} {text:?}: {source}")]
    Generate {
        span: Span,
        text: String,
        #[source]
        source: BackendError,
    },
    #[error("answering {question:?} against the source text: {source}")]
    RoundTrip {
        question: String,
        #[source]
        source: BackendError,
    },
}

impl GenerationError {
    pub fn backend(&self) -> Option<&BackendError> {
        match self {
            GenerationError::EmptySource => None,
            GenerationError::Parse(e) => Some(e),
            GenerationError::Generate { source, .. } | GenerationError::RoundTrip { source, .. } => Some(source),
        }
    }
}

/// Builds the answerable candidate set for `source`, in source order.
pub fn generate_candidates(
    source: &TokenizedText,
    suite: &BackendSuite,
    config: &GenerationConfig,
) -> Result<GenerationOutput, GenerationError> {
    if source.is_empty() {
        return Err(GenerationError::EmptySource);
    }
    let trees = suite.parser.parse(source).map_err(GenerationError::Parse)?;
    let extraction = extract_answer_spans_traced(&trees);
    let mut trace = GenerationTrace {
        span_drops: extraction.dropped,
        ..Default::default()
    };

    let generated: Vec<Result<Vec<TokenizedText>, BackendError>> = extraction
        .spans
        .par_iter()
        .map(|span| suite.qg.generate(source, span))
        .collect();

    let mut pool = Vec::new();
    let mut first_by_text: HashMap<NormalizedPhrase, String> = HashMap::new();
    for (span, questions) in extraction.spans.iter().zip(generated) {
        let questions = questions.map_err(|source| GenerationError::Generate {
            span: span.span,
            text: span.text.raw.clone(),
            source,
        })?;
        for (rank, q) in questions.into_iter().enumerate() {
            if config.max_beam_rank.is_some_and(|max| rank >= max) {
                trace.beam_cutoff_drops += 1;
                continue;
            }
            let cand = CandidateQuestion::new(q, span.clone(), rank);
            match first_by_text.get(&cand.normalized_question()) {
                Some(kept) => trace.duplicates.push(DuplicateQuestion {
                    question: cand.question.raw,
                    kept: kept.clone(),
                    dropped_span: span.span,
                    dropped_order: cand.source_order,
                }),
                None => {
                    first_by_text.insert(cand.normalized_question(), cand.id.clone());
                    pool.push(cand);
                }
            }
        }
    }

    let verdicts: Vec<Result<QaVerdict, BackendError>> =
        pool.par_iter().map(|c| suite.qa.answer(source, &c.question)).collect();

    let mut candidates = Vec::with_capacity(pool.len());
    for (cand, verdict) in pool.into_iter().zip(verdicts) {
        let verdict = verdict.map_err(|source| GenerationError::RoundTrip {
            question: cand.question.raw.clone(),
            source,
        })?;
        let answer = verdict.answer_text();
        let f1 = answer.map_or(0.0, |a| token_f1(&normalize(a), &normalize(&cand.target_span.text)));
        if answer.is_some() && f1 >= config.theta {
            candidates.push(cand);
        } else {
            trace.round_trip_drops.push(RoundTripDrop {
                id: cand.id,
                question: cand.question.raw,
                target: cand.target_span.text.raw,
                answer: answer.map(|a| a.raw.clone()),
                f1,
            });
        }
    }

    Ok(GenerationOutput {
        candidates,
        spans: extraction.spans,
        trace,
    })
}
