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

//! One check per acceptance criterion. Each returns a description of the
//! first failure it finds.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gfq_core::backends::{BackendSuite, Fact, FactWorld};
use gfq_core::corpus;
use gfq_core::evaluation::{self, signed_rank_test, ModelId, Sidedness};
use gfq_core::generation::{CandidateQuestion, RevealScore, SourceOrder};
use gfq_core::pipeline::{self, Mode, PipelineConfig, Status};
use gfq_core::ranking::{rank_candidates, score_constituents, RevealSet};
use gfq_core::rng::SplitMix64;
use gfq_core::text::{NormalizedPhrase, TextRole, TokenizedText};
use gfq_core::treebank::{extract_answer_spans, parse_bracketed, AnswerSpan, Span};

use super::*;

pub type Check = Result<(), String>;

type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn config(mode: Mode, seed: u64) -> PipelineConfig {
    PipelineConfig {
        mode,
        seed,
        ..Default::default()
    }
}

fn target_facts(world: &FactWorld, questions: &[CandidateQuestion]) -> Result<BTreeSet<Fact>, String> {
    let by_question: HashMap<NormalizedPhrase, &Fact> = world
        .facts()
        .iter()
        .map(|f| (NormalizedPhrase::from_str_lossy(&f.question()), f))
        .collect();
    questions
        .iter()
        .map(|c| {
            by_question
                .get(&c.normalized_question())
                .map(|f| (*f).clone())
                .ok_or_else(|| format!("question {:?} targets no source fact", c.question.raw))
        })
        .collect()
}

pub fn oracle_brute_force() -> Check {
    let started = Instant::now();
    let suite = BackendSuite::oracle();
    for seed in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=8);
        let world = random_world(&mut rng, n);
        let known = random_subset(&mut rng, &world);
        let result = pipeline::run(
            &source_text(&world),
            &student_text(&known),
            &config(Mode::Step2, seed),
            &suite,
        )
        .map_err(|e| format!("world {seed}: {e}"))?;
        let got = target_facts(&world, &result.q_g)?;
        let want: BTreeSet<Fact> = world.facts().difference(known.facts()).cloned().collect();
        ensure!(got == want, "world {seed}: survivors target {got:?}, expected {want:?}");
        ensure!(result.q_g.len() == want.len(), "world {seed}: duplicate survivors");
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(())
}

fn phrases(texts: &[&str]) -> Vec<NormalizedPhrase> {
    texts.iter().map(|t| NormalizedPhrase::from_str_lossy(t)).collect()
}

/// (question constituents, reveal set) cases.
pub const RANKING_CASES: &[(&[&str], &[&str], usize)] = &[
    (
        &[
            "what is the man wearing ?",
            "is the man wearing",
            "the man",
            "man",
            "wearing",
        ],
        &["a blue hat", "a red shirt", "blue", "red"],
        0,
    ),
    (
        &[
            "what color hat is the man wearing ?",
            "what color hat",
            "color",
            "hat",
            "the man",
            "man",
            "wearing",
        ],
        &["a blue hat", "a red shirt", "blue", "red"],
        1,
    ),
    (&["hat"], &["a blue hat"], 1),
    (&["blue hat"], &["a blue hat"], 1),
    (&["a blue hat"], &["a blue hat"], 1),
    (&["hat blue"], &["a blue hat"], 0),
    (&["a hat"], &["a blue hat"], 0),
    (&["blue", "hat", "blue hat", "a blue hat"], &["a blue hat"], 4),
    (&["hat", "Hat", "HAT"], &["a blue hat"], 1),
    (&["shirt", "hat"], &["a blue hat", "a red shirt"], 2),
    (&["dog"], &[], 0),
    (&[], &["a blue hat"], 0),
    (&["", "hat"], &["a blue hat"], 1),
    (&["the park"], &["the dog in the park"], 1),
    (&["dog in"], &["the dog in the park"], 1),
    (&["in the", "the", "park"], &["the dog in the park", "the park"], 3),
    (&["ha"], &["a blue hat"], 0),
    (&["blue hats"], &["a blue hat"], 0),
    (&["red", "red shirt", "shirt red"], &["red", "a red shirt"], 2),
    (
        &["big brown dog", "brown dog", "dog"],
        &["the big brown dog", "brown"],
        3,
    ),
    (&["old man", "the old"], &["the old man 's hat"], 2),
    (&["'s hat"], &["the old man 's hat"], 1),
];

fn candidate(question: &str, target: &str, span_index: usize) -> CandidateQuestion {
    let span = AnswerSpan {
        span: Span::new(span_index, span_index + 1),
        text: TokenizedText::new(target, TextRole::Answer),
        label: "NP".into(),
        order_index: span_index,
    };
    CandidateQuestion::new(TokenizedText::new(question, TextRole::Question), span, 0)
}

pub fn ranking_oracle() -> Check {
    ensure!(RANKING_CASES.len() >= 20, "only {} cases", RANKING_CASES.len());
    for (i, (cs, r, hand)) in RANKING_CASES.iter().enumerate() {
        let reveal: RevealSet = phrases(r).into_iter().filter(|p| !p.is_empty()).collect();
        let (_, matched) = score_constituents(&phrases(cs), &reveal);
        let want = containment_count(cs, r);
        ensure!(want == *hand, "case {i}: exhaustive count {want} vs hand count {hand}");
        ensure!(
            matched.len() == want,
            "case {i}: score {} vs exhaustive {want}",
            matched.len()
        );
    }

    // Full pipeline over the guitar fixture.
    let suite = guitar_suite().into_suite();
    let source = TokenizedText::new(GUITAR_SOURCE, TextRole::Source);
    let student = TokenizedText::new(GUITAR_STUDENT, TextRole::Student);
    let result = pipeline::run(&source, &student, &config(Mode::Step3, 0), &suite).map_err(|e| e.to_string())?;
    let pos = |q: &str| result.ranked.iter().position(|c| c.question.raw == q);
    ensure!(
        matches!((pos(WHAT_WEARING), pos(WHAT_COLOR_HAT)), (Some(a), Some(b)) if a < b),
        "guitar fixture ranked {:?}",
        result.ranked.iter().map(|c| &c.question.raw).collect::<Vec<_>>()
    );
    ensure!(
        result.selected.as_ref().map(|c| c.question.raw.as_str()) == Some(WHAT_WEARING),
        "guitar fixture selected {:?}",
        result.selected
    );

    // The same two questions with the revealing one earlier in the source.
    let cands = [
        candidate(WHAT_COLOR_HAT, "blue", 0),
        candidate(WHAT_WEARING, "a blue hat", 1),
        candidate("Which shirt is the man wearing ?", "a red shirt", 2),
        candidate("What color shirt is the man wearing ?", "red", 3),
    ];
    let out = rank_candidates(&cands, &suite);
    ensure!(
        out.ranked[0].question.raw == WHAT_WEARING,
        "reordered fixture ranked {:?} first",
        out.ranked[0].question.raw
    );
    let keys: Vec<(Option<RevealScore>, SourceOrder)> =
        out.ranked.iter().map(|c| (c.reveal_score, c.source_order)).collect();
    ensure!(keys.windows(2).all(|w| w[0] <= w[1]), "not ascending: {keys:?}");
    let mut ids: Vec<&str> = out.ranked.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    let mut input: Vec<&str> = cands.iter().map(|c| c.id.as_str()).collect();
    input.sort_unstable();
    ensure!(ids == input, "ranking is not a permutation of its input");
    // Ties keep input order: shirt questions both score 1 after the hat question.
    let tail: Vec<&str> = out.ranked[1..].iter().map(|c| c.question.raw.as_str()).collect();
    ensure!(
        tail == [
            WHAT_COLOR_HAT,
            "Which shirt is the man wearing ?",
            "What color shirt is the man wearing ?"
        ],
        "tie order {tail:?}"
    );
    Ok(())
}

pub fn pipeline_fuzz() -> Check {
    let suite = BackendSuite::oracle();
    let mut gaps = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n = rng.gen_range(1..=8);
        let world = random_world(&mut rng, n);
        let mode = Mode::ALL[rng.gen_range(0..3)];
        let cfg = config(mode, rng.gen());
        let same = seed % 10 == 0;
        let known = if same {
            world.clone()
        } else {
            random_subset(&mut rng, &world)
        };
        let source = source_text(&world);
        let student = student_text(&known);
        let run = || pipeline::run(&source, &student, &cfg, &suite).map_err(|e| format!("run {seed}: {e}"));
        let result = run()?;

        let q_t: BTreeSet<(&str, &str)> = result
            .q_t
            .iter()
            .map(|c| (c.id.as_str(), c.question.raw.as_str()))
            .collect();
        ensure!(
            result
                .q_g
                .iter()
                .all(|c| q_t.contains(&(c.id.as_str(), c.question.raw.as_str()))),
            "run {seed}: Q_G is not a subset of Q_T"
        );
        let mut ranked: Vec<&str> = result.ranked.iter().map(|c| c.id.as_str()).collect();
        let mut q_g: Vec<&str> = result.q_g.iter().map(|c| c.id.as_str()).collect();
        ranked.sort_unstable();
        q_g.sort_unstable();
        ensure!(ranked == q_g, "run {seed}: ranked is not a permutation of Q_G");
        if same {
            ensure!(
                result.status == Status::NoGap && result.selected.is_none(),
                "run {seed}: student = source but {:?}",
                result.status
            );
        }
        ensure!(run()?.to_json() == result.to_json(), "run {seed}: rerun differs");
        gaps += usize::from(result.status == Status::Ok);
    }
    ensure!(gaps >= 500, "only {gaps} runs had a gap");
    Ok(())
}

pub fn step1_determinism() -> Check {
    ensure!(
        SplitMix64::new(0).next_index(3) == 1,
        "seed 0 over 3 did not pick index 1"
    );
    let mut g = SplitMix64::new(0);
    for (i, want) in SPLITMIX64_SEED0.iter().enumerate() {
        let got = g.next_u64();
        ensure!(got == *want, "output {i}: {got:#018x} != {want:#018x}");
    }
    // Through the pipeline: three candidates, nothing known, seed 0.
    let world = FactWorld::from_facts([
        Fact::new("dog", "color", "brown"),
        Fact::new("dog", "size", "big"),
        Fact::new("cat", "age", "old"),
    ])
    .unwrap();
    let result = pipeline::run(
        &source_text(&world),
        &TokenizedText::new("", TextRole::Student),
        &config(Mode::Step1, 0),
        &BackendSuite::oracle(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(result.q_t.len() == 3, "expected 3 candidates, got {}", result.q_t.len());
    ensure!(
        result.selected.as_ref() == Some(&result.q_t[1]),
        "step1 selected {:?}",
        result.selected
    );
    Ok(())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn wilcoxon_correctness() -> Check {
    const SIDES: [Sidedness; 3] = [Sidedness::TwoSided, Sidedness::Greater, Sidedness::Less];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for n in 1..=10usize {
        for k in 0..100 {
            // Half-unit steps with zeros make ties and dropped zeros common.
            let d: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-6i32..=6)) / 2.0).collect();
            for side in SIDES {
                match (brute_force_wilcoxon(&d, side), signed_rank_test(&d, side)) {
                    (None, Err(_)) => {}
                    (Some((w, p)), Ok(r)) => {
                        ensure!(r.w == w, "n={n} #{k} {side:?}: W {} vs {w}", r.w);
                        ensure!(close(r.p, p, 1e-12), "n={n} #{k} {side:?} {d:?}: p {} vs {p}", r.p);
                    }
                    (want, got) => return Err(format!("n={n} #{k}: brute force {want:?}, test {got:?}")),
                }
            }
        }
    }
    let five = signed_rank_test(&[1.0, 2.0, 3.0, 4.0, 5.0], Sidedness::Greater).map_err(|e| e.to_string())?;
    ensure!(five.p == 0.03125, "all-positive n=5 gave {}", five.p);

    for (k, n) in [(0, 8), (1, 12), (2, 30), (3, 60)] {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.5)).collect();
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let p = |d: &[f64], s| signed_rank_test(d, s).map_err(|e| e.to_string());
        let (g, l) = (p(&d, Sidedness::Greater)?, p(&neg, Sidedness::Less)?);
        ensure!(close(g.p, l.p, 1e-12), "case {k}: antisymmetry {} vs {}", g.p, l.p);
        let (t, tn) = (p(&d, Sidedness::TwoSided)?, p(&neg, Sidedness::TwoSided)?);
        ensure!(
            close(t.p, tn.p, 1e-12),
            "case {k}: two-sided under negation {} vs {}",
            t.p,
            tn.p
        );
        let m = g.n_effective as f64;
        ensure!(
            close(g.w + l.w, m * (m + 1.0) / 2.0, 1e-9),
            "case {k}: W + W' != n(n+1)/2"
        );
        for c in [0.001, 3.0, 1e6] {
            let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
            for side in SIDES {
                let (a, b) = (p(&d, side)?, p(&scaled, side)?);
                ensure!(
                    a.w == b.w && close(a.p, b.p, 1e-12),
                    "case {k}: scale {c} changed {side:?}"
                );
            }
        }
    }
    Ok(())
}

pub fn aggregation() -> Check {
    let records = evaluation::import_ratings(&fixture("rating_sheet.csv")).map_err(|e| e.to_string())?;
    let table = evaluation::aggregate_scores(&records);
    for (model, want) in [
        (ModelId::Step1, "3.72"),
        (ModelId::Step2, "3.86"),
        (ModelId::Step3, "3.94"),
        (ModelId::Human, "4.06"),
    ] {
        let got = table.models.get(&model).map(|s| format!("{:.2}", s.mean));
        ensure!(got.as_deref() == Some(want), "{model}: {got:?} != {want}");
        let rendered = table.render();
        ensure!(
            rendered
                .lines()
                .any(|l| l.starts_with(model.as_str()) && l.ends_with(want)),
            "rendered table lacks {model} {want}:\n{rendered}"
        );
    }
    Ok(())
}

pub fn corpus_filtering() -> Check {
    let load = corpus::read_pairs(snli_fixture().as_bytes()).map_err(|e| e.to_string())?;
    ensure!(
        load.pairs.len() == 10 && load.errors.is_empty(),
        "fixture loaded {:?}",
        load.errors
    );
    let report = corpus::ingest(load, &BackendSuite::oracle()).map_err(|e| e.to_string())?;
    let ids: Vec<&str> = report.kept.iter().map(|p| p.pair_id.as_str()).collect();
    ensure!(ids == ["e1", "e2", "e3", "e4", "e5"], "kept {ids:?}");
    for p in &report.kept {
        let premise = FactWorld::from_text(&p.premise).map_err(|e| e.to_string())?;
        let hypothesis = FactWorld::from_text(&p.hypothesis).map_err(|e| e.to_string())?;
        ensure!(
            hypothesis.is_subset(&premise) && premise.len() > hypothesis.len(),
            "{}: premise facts are not a strict superset",
            p.pair_id
        );
    }
    Ok(())
}

pub fn treebank_rules() -> Check {
    let tree =
        parse_bracketed("(S (NP (DT The) (NN dog)) (VP (VBZ is) (ADJP (JJ brown))))").map_err(|e| e.to_string())?;
    let got: BTreeSet<String> = extract_answer_spans(&tree).iter().map(|s| s.text.raw.clone()).collect();
    let want: BTreeSet<String> = ["The dog", "dog", "is brown", "brown"].map(String::from).into();
    ensure!(got == want, "brown dog spans {got:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..500 {
        let text = random_tree(&mut rng);
        let tree = parse_bracketed(&text).map_err(|e| format!("tree {i}: {e}"))?;
        let tags = tree.pos_tags();
        let content: Vec<usize> = (0..tags.len()).filter(|&k| !is_generated_punct(tags[k])).collect();
        let extent = content.first().map(|&a| Span::new(a, content.last().unwrap() + 1));
        for s in extract_answer_spans(&tree) {
            ensure!(
                Some(s.span) != extent,
                "tree {i} {text}: kept whole-sentence span {}",
                s.span
            );
            ensure!(!s.text.is_empty(), "tree {i}: empty span");
        }
    }
    Ok(())
}

pub fn gfq(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gfq"));
    cmd.args(args).env_remove("GFQ_REMOTE_URL");
    match stdin {
        None => cmd.output().expect("gfq runs"),
        Some(input) => {
            let mut child = cmd
                .stdin(std::process::Stdio::piped())
                .stdout(std::process::Stdio::piped())
                .stderr(std::process::Stdio::piped())
                .spawn()
                .expect("gfq runs");
            child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
            child.wait_with_output().unwrap()
        }
    }
}

fn expect_exit(out: &Output, code: i32, what: &str) -> Check {
    ensure!(
        out.status.code() == Some(code),
        "{what}: exit {:?}, wanted {code}; stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

/// A localhost port with nothing listening on it.
pub fn closed_port() -> u16 {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().port()
}

pub fn batch_corpus(n: usize, malformed_at: Option<usize>) -> (String, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut ids = Vec::new();
    let mut body = String::new();
    for i in 0..n {
        let id = format!("pair{i:03}");
        let line = if Some(i) == malformed_at {
            serde_json::json!({"pairID": id, "sentence1": "not a rendered world", "sentence2": "", "gold_label": "entailment"})
        } else {
            let k = rng.gen_range(1..=6);
            let world = random_world(&mut rng, k);
            let known = random_subset(&mut rng, &world);
            serde_json::json!({
                "pairID": id,
                "sentence1": source_text(&world).raw,
                "sentence2": student_text(&known).raw,
                "gold_label": "entailment",
            })
        };
        body.push_str(&line.to_string());
        body.push('\n');
        ids.push(id);
    }
    (body, ids)
}

pub fn cli_contract() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let source = sentence_of(&[("dog", "color", "brown"), ("dog", "size", "big")]);
    let student = sentence_of(&[("dog", "color", "brown")]);

    let ok = gfq(
        &[
            "generate",
            "--source",
            &source,
            "--student",
            &student,
            "--mode",
            "step3",
        ],
        None,
    );
    expect_exit(&ok, 0, "oracle generate")?;
    let printed = String::from_utf8_lossy(&ok.stdout);
    ensure!(
        printed.trim() == "What is the size of the dog ?",
        "generate printed {printed:?}"
    );

    let usage = gfq(&["generate", "--source", &source], None);
    expect_exit(&usage, 2, "missing --student")?;
    ensure!(
        String::from_utf8_lossy(&usage.stderr).contains("Usage"),
        "no usage message"
    );

    let url = format!("http://127.0.0.1:{}", closed_port());
    let down = gfq(
        &[
            "generate",
            "--source",
            &source,
            "--student",
            &student,
            "--backends",
            "remote",
            "--remote-url",
            &url,
        ],
        None,
    );
    expect_exit(&down, 3, "remote backend down")?;
    ensure!(
        String::from_utf8_lossy(&down.stderr).contains("generation stage"),
        "stage not named"
    );

    let ratings = dir.path().join("bad.csv");
    std::fs::write(
        &ratings,
        "pair_id,source_text,student_text,model_id,question,rater_id,score\np1,s,t,step1,q,r0,9\n",
    )
    .map_err(|e| e.to_string())?;
    let bad = gfq(&["score", "--ratings", ratings.to_str().unwrap()], None);
    expect_exit(&bad, 4, "malformed ratings")?;

    let (body, ids) = batch_corpus(40, Some(17));
    let pairs = dir.path().join("pairs.jsonl");
    let out = dir.path().join("out.jsonl");
    std::fs::write(&pairs, body).map_err(|e| e.to_string())?;
    let batch = gfq(
        &[
            "batch",
            "--pairs",
            pairs.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    expect_exit(&batch, 0, "batch")?;
    let written = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let rows: Vec<serde_json::Value> = written.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let got: Vec<&str> = rows.iter().map(|r| r["pair_id"].as_str().unwrap_or("")).collect();
    ensure!(got == ids, "batch order differs from input");
    let failed = rows.iter().filter(|r| r["status"] == "failed").count();
    ensure!(
        failed == 1 && rows[17]["status"] == "failed",
        "expected one failure at line 18"
    );
    Ok(())
}

pub const ALL: &[Criterion] = &[
    ("oracle brute-force equivalence", oracle_brute_force),
    ("ranking oracle", ranking_oracle),
    ("pipeline invariants under fuzzing", pipeline_fuzz),
    ("step1 baseline determinism", step1_determinism),
    ("wilcoxon correctness", wilcoxon_correctness),
    ("aggregation fixture", aggregation),
    ("corpus filtering", corpus_filtering),
    ("treebank rules", treebank_rules),
    ("cli contract", cli_contract),
];
