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

//! Helpers shared by the integration tests. Every reference computation
//! here is written independently of the library code it checks.

#![allow(dead_code)]

pub mod criteria;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use gfq_core::backends::oracle::render_world;
use gfq_core::backends::{Fact, FactWorld, ScriptedSuite};
use gfq_core::evaluation::Sidedness;
use gfq_core::text::{TextRole, TokenizedText};

pub const SUBJECTS: &[&str] = &["dog", "cat", "man", "woman", "car", "house", "tree", "bird"];
pub const ATTRIBUTES: &[&str] = &["color", "size", "age", "shape", "owner", "mood"];
pub const VALUES: &[&str] = &[
    "brown", "big", "old", "red", "round", "happy", "small", "green", "tall", "young", "blue", "sad",
];

/// Splitmix64 outputs for seed 0, from the reference C implementation.
pub const SPLITMIX64_SEED0: [u64; 10] = [
    0xe220a8397b1dcdaf,
    0x6e789e6aa1b965f4,
    0x06c45d188009454f,
    0xf88bb8a8724c81ec,
    0x1b39896a51a8749b,
    0x53cb9f0c747ea2ea,
    0x2c829abe1f4532e1,
    0xc584133ac916ab3c,
    0x3ee5789041c98ac3,
    0xf3b8488c368cb0a6,
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// A world of `n` facts with distinct (subject, attribute) slots.
pub fn random_world<R: Rng>(rng: &mut R, n: usize) -> FactWorld {
    let mut slots: Vec<(&str, &str)> = SUBJECTS
        .iter()
        .flat_map(|s| ATTRIBUTES.iter().map(move |a| (*s, *a)))
        .collect();
    slots.shuffle(rng);
    FactWorld::from_facts(
        slots[..n]
            .iter()
            .map(|(s, a)| Fact::new(s, a, VALUES.choose(rng).unwrap())),
    )
    .unwrap()
}

pub fn random_subset<R: Rng>(rng: &mut R, world: &FactWorld) -> FactWorld {
    FactWorld::from_facts(world.facts().iter().filter(|_| rng.gen_bool(0.5)).cloned()).unwrap()
}

pub fn source_text(world: &FactWorld) -> TokenizedText {
    render_world(world).0
}

pub fn student_text(world: &FactWorld) -> TokenizedText {
    render_world(world).0.with_role(TextRole::Student)
}

pub fn sentence_of(facts: &[(&str, &str, &str)]) -> String {
    facts
        .iter()
        .map(|(s, a, v)| Fact::new(s, a, v).sentence())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Wilcoxon signed-rank p-value by enumerating every sign assignment.
/// Returns `None` when all differences are zero.
pub fn brute_force_wilcoxon(d: &[f64], side: Sidedness) -> Option<(f64, f64)> {
    let nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    let m = nz.len();
    if m == 0 {
        return None;
    }
    let ranks: Vec<f64> = (0..m)
        .map(|i| {
            let a = nz[i].abs();
            let below = nz.iter().filter(|x| x.abs() < a).count() as f64;
            let tied = nz.iter().filter(|x| x.abs() == a).count() as f64;
            below + (tied + 1.0) / 2.0
        })
        .collect();
    let w: f64 = (0..m).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
    let (mut ge, mut le) = (0u64, 0u64);
    for mask in 0u32..(1 << m) {
        let s: f64 = (0..m).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if s >= w - 1e-9 {
            ge += 1;
        }
        if s <= w + 1e-9 {
            le += 1;
        }
    }
    let total = f64::from(1u32 << m);
    let (upper, lower) = (ge as f64 / total, le as f64 / total);
    let p = match side {
        Sidedness::Greater => upper,
        Sidedness::Less => lower,
        Sidedness::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    };
    Some((w, p))
}

/// Number of distinct non-empty phrases occurring as a contiguous run in
/// some reveal phrase. Matching is done on space-delimited strings.
pub fn containment_count(constituents: &[&str], reveal: &[&str]) -> usize {
    let norm = |s: &str| {
        s.split_whitespace()
            .map(str::to_lowercase)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let reveal: Vec<String> = reveal.iter().map(|r| format!(" {} ", norm(r))).collect();
    let mut seen: Vec<String> = Vec::new();
    for c in constituents {
        let c = norm(c);
        if !c.is_empty() && !seen.contains(&c) {
            seen.push(c);
        }
    }
    seen.iter()
        .filter(|c| reveal.iter().any(|r| r.contains(&format!(" {c} "))))
        .count()
}

pub const GUITAR_SOURCE: &str = "A man wearing a blue hat and a red shirt is playing the guitar .";
pub const GUITAR_STUDENT: &str = "A man is playing the guitar .";
pub const WHAT_WEARING: &str = "What is the man wearing ?";
pub const WHAT_COLOR_HAT: &str = "What color hat is the man wearing ?";

/// The man with the guitar: two facts about his clothes are missing from
/// the student's version.
pub fn guitar_suite() -> ScriptedSuite {
    let q = |what: &str| format!("(SBARQ (WHNP {what}) (SQ (VBZ is) (NP (DT the) (NN man)) (VP (VBG wearing))) (. ?))");
    ScriptedSuite::new()
        .parse(
            GUITAR_SOURCE,
            &[
                "(S (NP (NP (DT A) (NN man)) (VP (VBG wearing) (NP (NP (DT a) (JJ blue) (NN hat)) (CC and) \
               (NP (DT a) (JJ red) (NN shirt))))) (VP (VBZ is) (VP (VBG playing) (NP (DT the) (NN guitar)))) (. .))",
            ],
        )
        .parse(WHAT_WEARING, &[q("(WP What)").as_str()])
        .parse(WHAT_COLOR_HAT, &[q("(WDT What) (NN color) (NN hat)").as_str()])
        .parse(
            "Which shirt is the man wearing ?",
            &[q("(WDT Which) (NN shirt)").as_str()],
        )
        .parse(
            "What color shirt is the man wearing ?",
            &[q("(WDT What) (NN color) (NN shirt)").as_str()],
        )
        .parse(
            "What is the man playing ?",
            &["(SBARQ (WHNP (WP What)) (SQ (VBZ is) (NP (DT the) (NN man)) (VP (VBG playing))) (. ?))"],
        )
        .questions("a blue hat", &[WHAT_WEARING])
        .questions("blue", &[WHAT_COLOR_HAT])
        .questions("a red shirt", &["Which shirt is the man wearing ?"])
        .questions("red", &["What color shirt is the man wearing ?"])
        .questions("the guitar", &["What is the man playing ?"])
        .answer(GUITAR_SOURCE, WHAT_WEARING, "a blue hat")
        .answer(GUITAR_SOURCE, WHAT_COLOR_HAT, "blue")
        .answer(GUITAR_SOURCE, "Which shirt is the man wearing ?", "a red shirt")
        .answer(GUITAR_SOURCE, "What color shirt is the man wearing ?", "red")
        .answer(GUITAR_SOURCE, "What is the man playing ?", "the guitar")
        .answer(GUITAR_STUDENT, "What is the man playing ?", "the guitar")
}

/// Random bracketed tree. Punctuation tags only carry punctuation words and
/// the other tags only carry letters.
pub fn random_tree<R: Rng>(rng: &mut R) -> String {
    fn node<R: Rng>(rng: &mut R, depth: usize) -> String {
        if depth == 0 || rng.gen_bool(0.35) {
            return leaf(rng);
        }
        let label = ["S", "NP", "VP", "PP", "ADJP", "SBAR"].choose(rng).unwrap();
        let kids: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| node(rng, depth - 1)).collect();
        format!("({label} {})", kids.join(" "))
    }
    fn leaf<R: Rng>(rng: &mut R) -> String {
        const WORDS: &[(&str, &[&str])] = &[
            ("NN", &["dog", "hat", "park", "man"]),
            ("JJ", &["brown", "big"]),
            ("VBZ", &["runs", "is", "has"]),
            ("DT", &["the", "a"]),
            ("IN", &["in", "of"]),
            ("PRP", &["it"]),
            (",", &[","]),
            (".", &[".", "?", "!"]),
            ("``", &["``"]),
        ];
        let (tag, words) = WORDS.choose(rng).unwrap();
        format!("({tag} {})", words.choose(rng).unwrap())
    }
    let depth = rng.gen_range(1..=5);
    let body = node(rng, depth);
    // Unary chains and sentence-final punctuation are the cases R1 must survive.
    let body = if rng.gen_bool(0.3) {
        format!("(VP {body})")
    } else {
        body
    };
    if rng.gen_bool(0.5) {
        format!("(S {body} (. .))")
    } else {
        format!("(ROOT {body})")
    }
}

/// Tags that count as punctuation in [`random_tree`].
pub fn is_generated_punct(tag: &str) -> bool {
    matches!(tag, "," | "." | "``")
}

/// Ten SNLI-layout lines over oracle fact sentences: five one-directional
/// entailments, two that hold both ways and three non-entailment labels.
pub fn snli_fixture() -> String {
    let dog = ("dog", "color", "brown");
    let big = ("dog", "size", "big");
    let cat = ("cat", "age", "old");
    let man = ("man", "mood", "happy");
    let car = ("car", "color", "red");
    let lines: [(&str, Vec<_>, Vec<_>, &str); 10] = [
        ("e1", vec![dog, big], vec![dog], "entailment"),
        ("e2", vec![dog, big, cat], vec![big, cat], "entailment"),
        ("b1", vec![man], vec![man], "entailment"),
        ("e3", vec![cat, man], vec![man], "entailment"),
        ("n1", vec![dog], vec![car], "neutral"),
        ("e4", vec![car, dog, man], vec![dog], "entailment"),
        ("c1", vec![dog, big], vec![dog], "contradiction"),
        ("b2", vec![car, cat], vec![cat, car], "entailment"),
        ("n2", vec![man, cat], vec![man], "neutral"),
        ("e5", vec![dog, cat, man, car], vec![car], "entailment"),
    ];
    lines
        .iter()
        .map(|(id, p, h, label)| {
            serde_json::json!({
                "pairID": id,
                "sentence1": sentence_of(p),
                "sentence2": sentence_of(h),
                "gold_label": label,
            })
            .to_string()
                + "\n"
        })
        .collect()
}
