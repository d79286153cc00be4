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

//! NLI corpus ingestion.
//!
//! Reads SNLI-style JSON lines (`sentence1`, `sentence2`, `gold_label`,
//! `pairID`) and reduces them to one-directional entailments: the premise
//! entails the hypothesis by gold label, and the entailment classifier does
//! not find the reverse entailment. Premises become source texts and
//! hypotheses student texts.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, NliLabel};
use crate::rng::SplitMix64;
use crate::text::{TextRole, TokenizedText};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentPair {
    pub pair_id: String,
    pub premise: TokenizedText,
    pub hypothesis: TokenizedText,
    pub gold_label: NliLabel,
}

impl EntailmentPair {
    pub fn new(pair_id: &str, premise: &str, hypothesis: &str, gold_label: NliLabel) -> Self {
        EntailmentPair {
            pair_id: pair_id.into(),
            premise: TokenizedText::new(premise, TextRole::Source),
            hypothesis: TokenizedText::new(hypothesis, TextRole::Student),
            gold_label,
        }
    }
}

/// One line of an SNLI-layout file. Unknown fields are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnliRecord {
    #[serde(rename = "pairID")]
    pub pair_id: String,
    pub sentence1: String,
    pub sentence2: String,
    pub gold_label: String,
    /// Present in ingestion output; `false` rows are skipped on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kept: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub pairs: Vec<EntailmentPair>,
    /// Lines whose gold label is `-` (no annotator consensus).
    pub skipped_no_consensus: usize,
    /// Lines marked `kept: false` by an earlier ingestion.
    pub skipped_not_kept: usize,
    pub errors: Vec<LineError>,
}

pub fn read_pairs<R: BufRead>(reader: R) -> io::Result<LoadReport> {
    let mut report = LoadReport::default();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| LineError { line: i + 1, message };
        let rec: SnliRecord = match serde_json::from_str(&line) {
            Ok(rec) => rec,
            Err(e) => {
                report.errors.push(err(e.to_string()));
                continue;
            }
        };
        if rec.gold_label == "-" {
            report.skipped_no_consensus += 1;
            continue;
        }
        if rec.kept == Some(false) {
            report.skipped_not_kept += 1;
            continue;
        }
        let label = match rec.gold_label.parse::<NliLabel>() {
            Ok(l) => l,
            Err(m) => {
                report.errors.push(err(m));
                continue;
            }
        };
        if !ids.insert(rec.pair_id.clone()) {
            report.errors.push(err(format!("duplicate pairID {:?}", rec.pair_id)));
            continue;
        }
        report
            .pairs
            .push(EntailmentPair::new(&rec.pair_id, &rec.sentence1, &rec.sentence2, label));
    }
    Ok(report)
}

/// Loads a line-delimited SNLI-layout file. Malformed lines are collected in
/// the report; only I/O failures abort.
pub fn load_pairs(path: &Path) -> io::Result<LoadReport> {
    read_pairs(BufReader::new(File::open(path)?))
}

pub fn filter_entailed(pairs: &[EntailmentPair]) -> Vec<EntailmentPair> {
    pairs
        .iter()
        .filter(|p| p.gold_label == NliLabel::Entailment)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidirectionalDrop {
    pub pair_id: String,
    pub reverse_label: NliLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidirectionalOutput {
    pub kept: Vec<EntailmentPair>,
    pub dropped: Vec<BidirectionalDrop>,
}

#[derive(Debug, Error)]
#[error("classifying reverse direction of pair {pair_id}: {source}")]
pub struct CorpusError {
    pub pair_id: String,
    #[source]
    pub source: BackendError,
}

/// Drops pairs whose hypothesis also entails the premise.
pub fn filter_bidirectional(
    pairs: &[EntailmentPair],
    suite: &BackendSuite,
) -> Result<BidirectionalOutput, CorpusError> {
    let labels: Vec<Result<NliLabel, BackendError>> = pairs
        .par_iter()
        .map(|p| suite.nli.classify(&p.hypothesis, &p.premise))
        .collect();
    let mut out = BidirectionalOutput::default();
    for (pair, label) in pairs.iter().zip(labels) {
        let label = label.map_err(|source| CorpusError {
            pair_id: pair.pair_id.clone(),
            source,
        })?;
        if label == NliLabel::Entailment {
            out.dropped.push(BidirectionalDrop {
                pair_id: pair.pair_id.clone(),
                reverse_label: label,
            });
        } else {
            out.kept.push(pair.clone());
        }
    }
    Ok(out)
}

/// Picks `n` pairs uniformly without replacement, returned in corpus order.
pub fn sample_pairs(pairs: &[EntailmentPair], n: usize, seed: u64) -> Vec<EntailmentPair> {
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| pairs[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub load: LoadReport,
    /// Every loaded pair with its outcome, in input order.
    pub records: Vec<SnliRecord>,
    pub kept: Vec<EntailmentPair>,
}

/// `filter_entailed` then `filter_bidirectional`, with a per-pair record of why
/// each pair was dropped.
pub fn ingest(load: LoadReport, suite: &BackendSuite) -> Result<IngestReport, CorpusError> {
    let entailed = filter_entailed(&load.pairs);
    let bidi = filter_bidirectional(&entailed, suite)?;
    let kept_ids: HashSet<&str> = bidi.kept.iter().map(|p| p.pair_id.as_str()).collect();
    let records = load
        .pairs
        .iter()
        .map(|p| {
            let drop_reason = if p.gold_label != NliLabel::Entailment {
                Some(format!("gold_label:{}", p.gold_label))
            } else if !kept_ids.contains(p.pair_id.as_str()) {
                Some("bidirectional_entailment".to_string())
            } else {
                None
            };
            SnliRecord {
                pair_id: p.pair_id.clone(),
                sentence1: p.premise.raw.clone(),
                sentence2: p.hypothesis.raw.clone(),
                gold_label: p.gold_label.to_string(),
                kept: Some(drop_reason.is_none()),
                drop_reason,
            }
        })
        .collect();
    Ok(IngestReport {
        kept: bidi.kept,
        records,
        load,
    })
}

pub fn write_records<W: Write>(mut w: W, records: &[SnliRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
