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

//! Common-ground removal: a candidate survives only if the student text
//! cannot answer it. Any answer, right or wrong, removes the question.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, QaVerdict};
use crate::generation::{CandidateQuestion, Stage};
use crate::text::TokenizedText;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonGroundRemoval {
    pub id: String,
    pub question: String,
    /// The student-text answer that caused the removal.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFilterOutput {
    pub survivors: Vec<CandidateQuestion>,
    pub removed: Vec<CommonGroundRemoval>,
}

#[derive(Debug, Error)]
#[error("answering {question:?} against the student text: {source}")]
pub struct GapFilterError {
    pub question: String,
    #[source]
    pub source: BackendError,
}

pub fn filter_common_ground(
    candidates: &[CandidateQuestion],
    student: &TokenizedText,
    suite: &BackendSuite,
) -> Result<GapFilterOutput, GapFilterError> {
    let verdicts: Vec<Result<QaVerdict, BackendError>> = candidates
        .par_iter()
        .map(|c| suite.qa.answer(student, &c.question))
        .collect();
    let mut out = GapFilterOutput {
        survivors: Vec::new(),
        removed: Vec::new(),
    };
    for (cand, verdict) in candidates.iter().zip(verdicts) {
        let verdict = verdict.map_err(|source| GapFilterError {
            question: cand.question.raw.clone(),
            source,
        })?;
        match verdict {
            QaVerdict::Unanswerable => {
                let mut c = cand.clone();
                c.mark(Stage::SurvivedCommonGround);
                out.survivors.push(c);
            }
            QaVerdict::Answer { answer_text } => out.removed.push(CommonGroundRemoval {
                id: cand.id.clone(),
                question: cand.question.raw.clone(),
                answer: answer_text.raw,
            }),
        }
    }
    Ok(out)
}
