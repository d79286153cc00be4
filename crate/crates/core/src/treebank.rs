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

//! Bracketed constituency trees and answer-span extraction.
//!
//! Trees are read from the usual `(LABEL child ...)` notation with
//! preterminals written `(TAG word)`. Leaves are numbered left to right, so
//! every node carries a half-open token interval.
//!
//! Answer spans are the constituents left after three rules, applied in
//! order:
//!
//! * **R1** drops constituents covering every non-punctuation token of their
//!   sentence.
//! * **R2** drops single-token constituents whose part-of-speech tag is a
//!   closed-class tag or whose word is an auxiliary/copula.
//! * **R3** keeps only the first (highest) node for each interval.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{is_punct_token, TextRole, TokenizedText};

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn covers(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    fn shifted(self, delta: usize) -> Span {
        Span::new(self.start + delta, self.end + delta)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    pub label: String,
    pub span: Span,
    pub children: Vec<ParseTree>,
    /// The word, for preterminals only.
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed bracketed tree at offset {offset}: {message}")]
pub struct TreeParseError {
    /// Character (not byte) offset into the input.
    pub offset: usize,
    pub message: String,
}

impl ParseTree {
    pub fn is_preterminal(&self) -> bool {
        self.token.is_some()
    }

    /// Leaf words in order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.span.len());
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.token {
            Some(t) => out.push(t),
            None => self.children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Preterminal tags in leaf order.
    pub fn pos_tags(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.span.len());
        self.collect_tags(&mut out);
        out
    }

    fn collect_tags<'a>(&'a self, out: &mut Vec<&'a str>) {
        if self.is_preterminal() {
            out.push(&self.label);
        } else {
            self.children.iter().for_each(|c| c.collect_tags(out));
        }
    }

    /// Moves every span right by `delta` tokens.
    pub fn shift(&mut self, delta: usize) {
        self.span = self.span.shifted(delta);
        for c in &mut self.children {
            c.shift(delta);
        }
    }

    /// Renders the tree back to bracketed notation.
    pub fn to_bracketed(&self) -> String {
        match &self.token {
            Some(t) => format!("({} {})", self.label, t),
            None => {
                let kids: Vec<String> = self.children.iter().map(|c| c.to_bracketed()).collect();
                format!("({} {})", self.label, kids.join(" "))
            }
        }
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a ParseTree>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }

    /// All nodes in pre-order.
    pub fn nodes(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        self.walk(&mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(usize),
    Close(usize),
    Atom(usize, String),
}

fn lex(s: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut atom = String::new();
    let mut atom_start = 0;
    for (i, c) in s.chars().enumerate() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !atom.is_empty() {
                toks.push(Tok::Atom(atom_start, std::mem::take(&mut atom)));
            }
            match c {
                '(' => toks.push(Tok::Open(i)),
                ')' => toks.push(Tok::Close(i)),
                _ => {}
            }
        } else {
            if atom.is_empty() {
                atom_start = i;
            }
            atom.push(c);
        }
    }
    if !atom.is_empty() {
        toks.push(Tok::Atom(atom_start, atom));
    }
    toks
}

struct TreeReader {
    toks: Vec<Tok>,
    pos: usize,
    end_offset: usize,
    next_leaf: usize,
}

impl TreeReader {
    fn err(&self, offset: usize, message: impl Into<String>) -> TreeParseError {
        TreeParseError {
            offset,
            message: message.into(),
        }
    }

    fn offset_here(&self) -> usize {
        match self.toks.get(self.pos) {
            Some(Tok::Open(o) | Tok::Close(o) | Tok::Atom(o, _)) => *o,
            None => self.end_offset,
        }
    }

    fn node(&mut self) -> Result<ParseTree, TreeParseError> {
        match self.toks.get(self.pos) {
            Some(Tok::Open(_)) => self.pos += 1,
            Some(_) => return Err(self.err(self.offset_here(), "expected '('")),
            None => return Err(self.err(self.end_offset, "unexpected end of input")),
        }
        let label = match self.toks.get(self.pos) {
            Some(Tok::Atom(_, l)) => {
                let l = l.clone();
                self.pos += 1;
                l
            }
            // PTB files wrap each tree in an unlabeled bracket.
            Some(Tok::Open(_)) => String::new(),
            Some(Tok::Close(o)) => return Err(self.err(*o, "empty bracket")),
            None => return Err(self.err(self.end_offset, "unexpected end of input")),
        };
        let start = self.next_leaf;
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Atom(o, word)) => {
                self.pos += 1;
                match self.toks.get(self.pos) {
                    Some(Tok::Close(_)) => self.pos += 1,
                    Some(_) => return Err(self.err(self.offset_here(), "preterminal must hold exactly one word")),
                    None => return Err(self.err(self.end_offset, "unexpected end of input")),
                }
                if label.is_empty() {
                    return Err(self.err(o, "preterminal without a tag"));
                }
                self.next_leaf += 1;
                Ok(ParseTree {
                    label,
                    span: Span::new(start, start + 1),
                    children: Vec::new(),
                    token: Some(word),
                })
            }
            Some(Tok::Open(_)) => {
                let mut children = Vec::new();
                loop {
                    match self.toks.get(self.pos) {
                        Some(Tok::Open(_)) => children.push(self.node()?),
                        Some(Tok::Close(_)) => {
                            self.pos += 1;
                            break;
                        }
                        Some(Tok::Atom(o, _)) => return Err(self.err(*o, "bare word among constituents")),
                        None => return Err(self.err(self.end_offset, "unexpected end of input")),
                    }
                }
                if label.is_empty() {
                    if children.len() == 1 {
                        return Ok(children.pop().expect("one child"));
                    }
                    return Err(self.err(self.end_offset, "unlabeled bracket with several children"));
                }
                Ok(ParseTree {
                    label,
                    span: Span::new(start, self.next_leaf),
                    children,
                    token: None,
                })
            }
            Some(Tok::Close(o)) => Err(self.err(o, "constituent without children")),
            None => Err(self.err(self.end_offset, "unexpected end of input")),
        }
    }
}

/// Parses one bracketed tree. Leaf numbering starts at zero.
pub fn parse_bracketed(s: &str) -> Result<ParseTree, TreeParseError> {
    let mut reader = TreeReader {
        toks: lex(s),
        pos: 0,
        end_offset: s.chars().count(),
        next_leaf: 0,
    };
    let tree = reader.node()?;
    if reader.pos < reader.toks.len() {
        return Err(reader.err(reader.offset_here(), "trailing input after tree"));
    }
    Ok(tree)
}

/// Reads a fixture file body: one tree per line, `#` comment lines and blank lines ignored.
///
/// Errors carry the 1-based line number.
pub fn parse_tree_lines(body: &str) -> Result<Vec<ParseTree>, (usize, TreeParseError)> {
    body.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| parse_bracketed(l).map_err(|e| (i + 1, e)))
        .collect()
}

/// Parses per-sentence trees and renumbers them so spans index into the
/// concatenated token sequence.
pub fn parse_document<S: AsRef<str>>(sentences: &[S]) -> Result<Vec<ParseTree>, TreeParseError> {
    let mut offset = 0;
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut tree = parse_bracketed(s.as_ref())?;
        tree.shift(offset);
        offset = tree.span.end;
        out.push(tree);
    }
    Ok(out)
}

/// Pre-order `(label, span)` listing of every node.
pub fn enumerate_constituents(tree: &ParseTree) -> Vec<(String, Span)> {
    tree.nodes().into_iter().map(|n| (n.label.clone(), n.span)).collect()
}

/// Closed-class part-of-speech tags excluded as single-token answers.
pub const CLOSED_CLASS_TAGS: &[&str] = &[
    "DT", "PDT", "IN", "TO", "CC", "POS", "RP", "EX", "MD", "PRP", "PRP$", "WDT", "WP", "WP$", "WRB", "UH",
];

/// Punctuation tags, also excluded as single-token answers.
pub const PUNCT_TAGS: &[&str] = &[
    ".", ",", ":", "``", "''", "\"", "-LRB-", "-RRB-", "-LCB-", "-RCB-", "-LSB-", "-RSB-", "#", "$", "HYPH", "NFP",
    "SYM",
];

/// Auxiliaries and copulas, matched case-insensitively.
pub const AUXILIARY_LEXICON: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "being", "do", "does", "did", "have", "has", "had", "will",
    "would", "can", "could", "shall", "should", "may", "might", "must",
];

/// Strips function tags and indices (`NP-SBJ-1` -> `NP`); bracket tags like `-LRB-` are kept.
fn base_tag(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    label.split(['-', '=']).next().unwrap_or(label)
}

pub fn is_punct_tag(label: &str) -> bool {
    PUNCT_TAGS.contains(&base_tag(label))
}

pub fn is_closed_class_tag(label: &str) -> bool {
    let tag = base_tag(label);
    CLOSED_CLASS_TAGS.contains(&tag) || PUNCT_TAGS.contains(&tag)
}

pub fn is_auxiliary(word: &str) -> bool {
    AUXILIARY_LEXICON.iter().any(|aux| aux.eq_ignore_ascii_case(word))
}

/// Which rule removed a constituent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionRule {
    /// Covers the whole sentence, ignoring punctuation.
    R1,
    /// Single functional token.
    R2,
    /// Same interval as an earlier node.
    R3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub span: Span,
    pub text: TokenizedText,
    pub label: String,
    /// Pre-order position among all nodes of the document.
    pub order_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanDrop {
    pub label: String,
    pub span: Span,
    pub text: String,
    pub rule: ExclusionRule,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanExtraction {
    pub spans: Vec<AnswerSpan>,
    pub dropped: Vec<SpanDrop>,
}

fn is_punct_leaf(tag: &str, word: &str) -> bool {
    is_punct_tag(tag) || is_punct_token(word)
}

/// Extent from the first to the last non-punctuation token, if any.
fn content_extent(tree: &ParseTree) -> Option<Span> {
    let words = tree.leaves();
    let tags = tree.pos_tags();
    let content: Vec<usize> = (0..words.len())
        .filter(|&i| !is_punct_leaf(tags[i], words[i]))
        .collect();
    let first = *content.first()?;
    let last = *content.last()?;
    Some(Span::new(tree.span.start + first, tree.span.start + last + 1))
}

struct RuleSet {
    whole_sentence: bool,
}

fn extract_with(trees: &[ParseTree], rules: RuleSet) -> SpanExtraction {
    let mut out = SpanExtraction::default();
    let mut seen: HashSet<Span> = HashSet::new();
    let mut order = 0usize;
    for tree in trees {
        let words = tree.leaves();
        let tags = tree.pos_tags();
        let extent = content_extent(tree);
        for node in tree.nodes() {
            let order_index = order;
            order += 1;
            let local = node.span.start - tree.span.start..node.span.end - tree.span.start;
            let text = TokenizedText::from_tokens(&words[local.clone()], TextRole::Answer);
            let rule = if rules.whole_sentence && extent.is_none_or(|e| node.span.covers(&e)) {
                Some(ExclusionRule::R1)
            } else if node.span.len() == 1
                && (is_closed_class_tag(tags[local.start]) || is_auxiliary(words[local.start]))
            {
                Some(ExclusionRule::R2)
            } else if !seen.insert(node.span) {
                Some(ExclusionRule::R3)
            } else {
                None
            };
            match rule {
                Some(rule) => out.dropped.push(SpanDrop {
                    label: node.label.clone(),
                    span: node.span,
                    text: text.raw,
                    rule,
                }),
                None => out.spans.push(AnswerSpan {
                    span: node.span,
                    text,
                    label: node.label.clone(),
                    order_index,
                }),
            }
        }
    }
    out
}

/// Applies R1–R3 to each sentence tree and records every dropped node.
///
/// `order_index` runs across all trees in document order.
pub fn extract_answer_spans_traced(trees: &[ParseTree]) -> SpanExtraction {
    extract_with(trees, RuleSet { whole_sentence: true })
}

/// Answer spans of a single sentence tree.
pub fn extract_answer_spans(tree: &ParseTree) -> Vec<AnswerSpan> {
    extract_answer_spans_traced(std::slice::from_ref(tree)).spans
}

/// Constituents kept by R2 and R3 only. Used for scoring questions, where
/// the whole-sentence node is not excluded.
pub fn question_constituents(trees: &[ParseTree]) -> Vec<AnswerSpan> {
    extract_with(trees, RuleSet { whole_sentence: false }).spans
}
