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

//! Ordering surviving questions by how much unknown material they reveal.
//!
//! The reveal set is the normalized target answers of the surviving
//! questions. A question's score is the number of distinct constituents of
//! its own parse that occur, as a contiguous token run, inside some member of
//! the reveal set. Lower is better; ties keep source order.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::BackendSuite;
use crate::generation::{CandidateQuestion, RevealScore, Stage};
use crate::text::{contains, normalize, NormalizedPhrase};
use crate::treebank::question_constituents;

pub type RevealSet = BTreeSet<NormalizedPhrase>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealTrace {
    pub question_id: String,
    pub constituents_checked: Vec<NormalizedPhrase>,
    pub matched: Vec<NormalizedPhrase>,
    pub score: RevealScore,
    /// Set when the question could not be parsed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

pub fn build_reveal_set(candidates: &[CandidateQuestion]) -> RevealSet {
    candidates
        .iter()
        .map(|c| normalize(&c.target_span.text))
        .filter(|p| !p.is_empty())
        .collect()
}

/// Scores distinct constituent texts against the reveal set.
pub fn score_constituents(
    constituents: &[NormalizedPhrase],
    reveal: &RevealSet,
) -> (Vec<NormalizedPhrase>, Vec<NormalizedPhrase>) {
    let mut checked: Vec<NormalizedPhrase> = Vec::new();
    for c in constituents {
        if !c.is_empty() && !checked.contains(c) {
            checked.push(c.clone());
        }
    }
    let matched = checked
        .iter()
        .filter(|c| reveal.iter().any(|r| contains(r, c)))
        .cloned()
        .collect();
    (checked, matched)
}

pub fn reveal_score(candidate: &CandidateQuestion, reveal: &RevealSet, suite: &BackendSuite) -> RevealTrace {
    match suite.parser.parse(&candidate.question) {
        Ok(trees) => {
            let constituents: Vec<NormalizedPhrase> = question_constituents(&trees)
                .iter()
                .map(|s| normalize(&s.text))
                .collect();
            let (checked, matched) = score_constituents(&constituents, reveal);
            RevealTrace {
                question_id: candidate.id.clone(),
                score: RevealScore::Count(matched.len()),
                constituents_checked: checked,
                matched,
                error: None,
            }
        }
        Err(e) => RevealTrace {
            question_id: candidate.id.clone(),
            constituents_checked: Vec::new(),
            matched: Vec::new(),
            score: RevealScore::Unscored,
            error: Some(e.to_string()),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingOutput {
    pub ranked: Vec<CandidateQuestion>,
    pub traces: Vec<RevealTrace>,
    pub reveal_set: RevealSet,
}

/// Stable sort by (reveal score, source order). Traces follow input order.
pub fn rank_candidates(candidates: &[CandidateQuestion], suite: &BackendSuite) -> RankingOutput {
    let reveal_set = build_reveal_set(candidates);
    let traces: Vec<RevealTrace> = candidates
        .par_iter()
        .map(|c| reveal_score(c, &reveal_set, suite))
        .collect();
    let mut ranked: Vec<CandidateQuestion> = candidates
        .iter()
        .zip(&traces)
        .map(|(c, t)| {
            let mut c = c.clone();
            c.reveal_score = Some(t.score);
            c.mark(Stage::Ranked);
            c
        })
        .collect();
    ranked.sort_by_key(|c| (c.reveal_score, c.source_order));
    RankingOutput {
        ranked,
        traces,
        reveal_set,
    }
}
