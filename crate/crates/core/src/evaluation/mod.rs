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

//! Human rating harness: task export, score import, per-model means and
//! paired significance tests.
//!
//! Task files are CSV with the header
//! `pair_id,source_text,student_text,model_id,question`. Rating files add
//! `rater_id,score`; an empty score cell marks a task row not yet rated.

pub mod wilcoxon;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntailmentPair;
use crate::rng::SplitMix64;
pub use wilcoxon::{signed_rank_test, wilcoxon_signed_rank, PValueMethod, Sidedness, SignedRankResult, WilcoxonError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Step1,
    Step2,
    Step3,
    Human,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Step1 => "step1",
            ModelId::Step2 => "step2",
            ModelId::Step3 => "step3",
            ModelId::Human => "human",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step1" => Ok(ModelId::Step1),
            "step2" => Ok(ModelId::Step2),
            "step3" => Ok(ModelId::Step3),
            "human" => Ok(ModelId::Human),
            other => Err(format!("unknown model id {other:?}")),
        }
    }
}

impl From<crate::pipeline::Mode> for ModelId {
    fn from(m: crate::pipeline::Mode) -> Self {
        match m {
            crate::pipeline::Mode::Step1 => ModelId::Step1,
            crate::pipeline::Mode::Step2 => ModelId::Step2,
            crate::pipeline::Mode::Step3 => ModelId::Step3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingTask {
    pub pair_id: String,
    pub source_text: String,
    pub student_text: String,
    pub model_id: ModelId,
    pub question: String,
}

impl RatingTask {
    pub fn new(pair: &EntailmentPair, model_id: ModelId, question: &str) -> Self {
        RatingTask {
            pair_id: pair.pair_id.clone(),
            source_text: pair.premise.raw.clone(),
            student_text: pair.hypothesis.raw.clone(),
            model_id,
            question: question.to_string(),
        }
    }
}

/// A 1–5 rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Score(u8);

impl Score {
    pub fn new(v: u8) -> Option<Score> {
        (1..=5).contains(&v).then_some(Score(v))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Score {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Score::new(v).ok_or_else(|| format!("score {v} outside 1..=5"))
    }
}

impl From<Score> for u8 {
    fn from(s: Score) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub pair_id: String,
    pub model_id: ModelId,
    pub question: String,
    pub rater_id: String,
    /// `None` for a task row nobody has rated yet.
    pub score: Option<Score>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("task for pair {pair_id} ({model_id}) has an empty question")]
    EmptyQuestion { pair_id: String, model_id: ModelId },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Wilcoxon(#[from] WilcoxonError),
    #[error("no pairs rated by both {0} and {1}")]
    NoPairs(ModelId, ModelId),
}

/// Writes task rows; with `blind_seed` the rows are shuffled so that
/// presentation order reveals nothing about the model.
pub fn write_rating_tasks<W: io::Write>(
    w: W,
    tasks: &[RatingTask],
    blind_seed: Option<u64>,
) -> Result<usize, EvalError> {
    if let Some(t) = tasks.iter().find(|t| t.question.trim().is_empty()) {
        return Err(EvalError::EmptyQuestion {
            pair_id: t.pair_id.clone(),
            model_id: t.model_id,
        });
    }
    let mut order: Vec<&RatingTask> = tasks.iter().collect();
    if let Some(seed) = blind_seed {
        SplitMix64::new(seed).shuffle(&mut order);
    }
    let mut out = csv::Writer::from_writer(w);
    for t in &order {
        out.serialize(t)?;
    }
    if order.is_empty() {
        out.write_record(["pair_id", "source_text", "student_text", "model_id", "question"])?;
    }
    out.flush()?;
    Ok(order.len())
}

pub fn export_rating_tasks(tasks: &[RatingTask], path: &Path, blind_seed: Option<u64>) -> Result<usize, EvalError> {
    write_rating_tasks(std::fs::File::create(path)?, tasks, blind_seed)
}

pub fn read_rating_tasks<R: io::Read>(r: R) -> Result<Vec<RatingTask>, EvalError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| EvalError::Row {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn import_rating_tasks(path: &Path) -> Result<Vec<RatingTask>, EvalError> {
    read_rating_tasks(std::fs::File::open(path)?)
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    pair_id: String,
    model_id: String,
    question: String,
    rater_id: String,
    score: String,
}

/// Reads a rating file. Extra columns (such as the texts) are ignored.
pub fn read_ratings<R: io::Read>(r: R) -> Result<Vec<RatingRecord>, EvalError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RatingRow>().enumerate() {
        let bad = |message: String| EvalError::Row { row: i + 1, message };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let model_id = row.model_id.parse().map_err(bad)?;
        let score = match row.score.trim() {
            "" => None,
            s => {
                let v: u8 = s.parse().map_err(|_| bad(format!("score {s:?} is not an integer")))?;
                Some(Score::try_from(v).map_err(bad)?)
            }
        };
        out.push(RatingRecord {
            pair_id: row.pair_id,
            model_id,
            question: row.question,
            rater_id: row.rater_id,
            score,
        });
    }
    Ok(out)
}

pub fn import_ratings(path: &Path) -> Result<Vec<RatingRecord>, EvalError> {
    read_ratings(std::fs::File::open(path)?)
}

/// How paired observations are formed for significance tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingUnit {
    /// One observation per pair: the mean of its raters' scores.
    #[default]
    QuestionMeans,
    /// One observation per (pair, rater).
    Ratings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub questions: usize,
    pub ratings: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub model_a: ModelId,
    pub model_b: ModelId,
    pub sidedness: Sidedness,
    pub unit: PairingUnit,
    pub w: f64,
    pub p: f64,
    pub n_effective: usize,
    pub method: PValueMethod,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub models: BTreeMap<ModelId, ModelSummary>,
    /// Questions that appear only with empty scores.
    pub excluded_questions: usize,
    pub tests: Vec<PairedTest>,
}

type QuestionKey<'a> = (ModelId, &'a str);

fn question_scores(records: &[RatingRecord]) -> BTreeMap<QuestionKey<'_>, Vec<u8>> {
    let mut by_question: BTreeMap<QuestionKey<'_>, Vec<u8>> = BTreeMap::new();
    for r in records {
        let entry = by_question.entry((r.model_id, r.pair_id.as_str())).or_default();
        if let Some(s) = r.score {
            entry.push(s.get());
        }
    }
    by_question
}

fn mean_of(scores: &[u8]) -> f64 {
    scores.iter().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64
}

/// Per-model mean of per-question means.
pub fn aggregate_scores(records: &[RatingRecord]) -> ScoreTable {
    let mut table = ScoreTable::default();
    let mut sums: BTreeMap<ModelId, (usize, usize, f64)> = BTreeMap::new();
    for ((model, _), scores) in question_scores(records) {
        if scores.is_empty() {
            table.excluded_questions += 1;
            continue;
        }
        let e = sums.entry(model).or_default();
        e.0 += 1;
        e.1 += scores.len();
        e.2 += mean_of(&scores);
    }
    table.models = sums
        .into_iter()
        .map(|(m, (q, r, total))| {
            (
                m,
                ModelSummary {
                    questions: q,
                    ratings: r,
                    mean: total / q as f64,
                },
            )
        })
        .collect();
    table
}

/// Paired observations for two models, aligned by pair (and rater, for
/// [`PairingUnit::Ratings`]) in key order. Keys present for only one model are skipped.
pub fn paired_observations(
    records: &[RatingRecord],
    a: ModelId,
    b: ModelId,
    unit: PairingUnit,
) -> (Vec<f64>, Vec<f64>) {
    let collect = |model: ModelId| -> BTreeMap<(String, String), f64> {
        match unit {
            PairingUnit::QuestionMeans => question_scores(records)
                .into_iter()
                .filter(|((m, _), s)| *m == model && !s.is_empty())
                .map(|((_, pair), s)| ((pair.to_string(), String::new()), mean_of(&s)))
                .collect(),
            PairingUnit::Ratings => records
                .iter()
                .filter(|r| r.model_id == model)
                .filter_map(|r| {
                    r.score
                        .map(|s| ((r.pair_id.clone(), r.rater_id.clone()), f64::from(s.get())))
                })
                .collect(),
        }
    };
    let xa = collect(a);
    let xb = collect(b);
    xa.iter().filter_map(|(k, va)| xb.get(k).map(|vb| (*va, *vb))).unzip()
}

pub fn paired_test(
    records: &[RatingRecord],
    a: ModelId,
    b: ModelId,
    unit: PairingUnit,
    sidedness: Sidedness,
) -> Result<PairedTest, EvalError> {
    let (x, y) = paired_observations(records, a, b, unit);
    if x.is_empty() {
        return Err(EvalError::NoPairs(a, b));
    }
    let r = wilcoxon_signed_rank(&x, &y, sidedness)?;
    Ok(PairedTest {
        model_a: a,
        model_b: b,
        sidedness,
        unit,
        w: r.w,
        p: r.p,
        n_effective: r.n_effective,
        method: r.method,
    })
}

impl ScoreTable {
    /// Plain-text table; means use two decimals.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8}{:>10}{:>9}{:>8}", "model", "questions", "ratings", "mean");
        for (m, sum) in &self.models {
            let _ = writeln!(
                s,
                "{:<8}{:>10}{:>9}{:>8.2}",
                m.as_str(),
                sum.questions,
                sum.ratings,
                sum.mean
            );
        }
        if self.excluded_questions > 0 {
            let _ = writeln!(s, "excluded questions (no ratings): {}", self.excluded_questions);
        }
        for t in &self.tests {
            let side = match t.sidedness {
                Sidedness::TwoSided => "two-sided",
                Sidedness::Greater => "one-sided, greater",
                Sidedness::Less => "one-sided, less",
            };
            let _ = writeln!(
                s,
                "wilcoxon {} vs {} ({side}): W = {:.1}, p = {:.6e}, n = {}",
                t.model_a, t.model_b, t.w, t.p, t.n_effective
            );
        }
        s
    }
}
