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

//! End-to-end runs: generation, common-ground removal, ranking, and the
//! choice of which question to return.
//!
//! All three stages always run so the result document shows every stage's
//! decisions. The mode only decides which list the returned question comes
//! from:
//!
//! * `step1` picks uniformly from the answerable set with a seeded SplitMix64.
//! * `step2` returns the first surviving question in source order.
//! * `step3` returns the first ranked question.
//!
//! A run whose common-ground-filtered set is empty reports `no_gap` and
//! returns nothing; this is a normal outcome, not an error.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendDescriptor, BackendError, BackendSuite, RemoteClient, RemoteError, RetryPolicy};
use crate::gap_filter::{filter_common_ground, CommonGroundRemoval, GapFilterError};
use crate::generation::{
    generate_candidates, CandidateQuestion, DuplicateQuestion, GenerationConfig, GenerationError, RoundTripDrop,
    DEFAULT_THETA,
};
use crate::ranking::{rank_candidates, RevealSet, RevealTrace};
use crate::rng::SplitMix64;
use crate::text::TokenizedText;
use crate::treebank::SpanDrop;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Step1,
    Step2,
    Step3,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Step1, Mode::Step2, Mode::Step3];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Step1 => "step1",
            Mode::Step2 => "step2",
            Mode::Step3 => "step3",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step1" => Ok(Mode::Step1),
            "step2" => Ok(Mode::Step2),
            "step3" => Ok(Mode::Step3),
            other => Err(format!("unknown mode {other:?} (expected step1, step2 or step3)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSelection {
    Oracle,
    Remote { url: String },
}

impl BackendSelection {
    pub fn build(&self, timeout: Duration, policy: RetryPolicy) -> Result<BackendSuite, RemoteError> {
        match self {
            BackendSelection::Oracle => Ok(BackendSuite::oracle()),
            BackendSelection::Remote { url } => Ok(BackendSuite::remote(RemoteClient::http(url, timeout, policy)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub seed: u64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_beam_rank: Option<usize>,
    pub backends: BackendSelection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Step3,
            seed: 0,
            theta: DEFAULT_THETA,
            max_beam_rank: None,
            backends: BackendSelection::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NoGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub span_drops: Vec<SpanDrop>,
    pub beam_cutoff_drops: usize,
    pub duplicates: Vec<DuplicateQuestion>,
    pub round_trip_drops: Vec<RoundTripDrop>,
    pub common_ground_removals: Vec<CommonGroundRemoval>,
    pub reveal_set: RevealSet,
    pub reveal: Vec<RevealTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub status: Status,
    pub config: PipelineConfig,
    pub backend: BackendDescriptor,
    pub source: TokenizedText,
    pub student: TokenizedText,
    pub q_t: Vec<CandidateQuestion>,
    pub q_g: Vec<CandidateQuestion>,
    pub ranked: Vec<CandidateQuestion>,
    pub selected: Option<CandidateQuestion>,
    pub trace: PipelineTrace,
}

impl PipelineResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline results serialize")
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("theta must lie in [0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("generation stage: {0}")]
    Generation(#[from] GenerationError),
    #[error("common-ground stage: {0}")]
    GapFilter(#[from] GapFilterError),
}

impl PipelineError {
    /// The backend failure underneath, if this error came from a backend.
    pub fn backend(&self) -> Option<&BackendError> {
        match self {
            PipelineError::InvalidTheta(_) => None,
            PipelineError::Generation(e) => e.backend(),
            PipelineError::GapFilter(e) => Some(&e.source),
        }
    }
}

pub fn run(
    source: &TokenizedText,
    student: &TokenizedText,
    config: &PipelineConfig,
    suite: &BackendSuite,
) -> Result<PipelineResult, PipelineError> {
    if !(0.0..=1.0).contains(&config.theta) {
        return Err(PipelineError::InvalidTheta(config.theta));
    }
    let gen_config = GenerationConfig {
        theta: config.theta,
        max_beam_rank: config.max_beam_rank,
    };
    let generated = generate_candidates(source, suite, &gen_config)?;
    let filtered = filter_common_ground(&generated.candidates, student, suite)?;
    let ranking = rank_candidates(&filtered.survivors, suite);

    let mut result = PipelineResult {
        status: if filtered.survivors.is_empty() {
            Status::NoGap
        } else {
            Status::Ok
        },
        config: config.clone(),
        backend: suite.descriptor.clone(),
        source: source.clone(),
        student: student.clone(),
        q_t: generated.candidates,
        q_g: filtered.survivors,
        ranked: ranking.ranked,
        selected: None,
        trace: PipelineTrace {
            span_drops: generated.trace.span_drops,
            beam_cutoff_drops: generated.trace.beam_cutoff_drops,
            duplicates: generated.trace.duplicates,
            round_trip_drops: generated.trace.round_trip_drops,
            common_ground_removals: filtered.removed,
            reveal_set: ranking.reveal_set,
            reveal: ranking.traces,
        },
    };
    result.selected = select_output(&result, config);
    Ok(result)
}

/// The question a given mode returns, or `None` when there is no gap.
pub fn select_output(result: &PipelineResult, config: &PipelineConfig) -> Option<CandidateQuestion> {
    if result.status == Status::NoGap {
        return None;
    }
    match config.mode {
        Mode::Step1 if !result.q_t.is_empty() => {
            let i = SplitMix64::new(config.seed).next_index(result.q_t.len());
            Some(result.q_t[i].clone())
        }
        Mode::Step1 => None,
        Mode::Step2 => result.q_g.iter().min_by_key(|c| c.source_order).cloned(),
        Mode::Step3 => result.ranked.first().cloned(),
    }
}
