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

//! Text primitives shared by every pipeline stage.
//!
//! Tokenization is a whitespace split followed by detaching leading and
//! trailing punctuation marks and the possessive clitic `'s`. Comparisons
//! between phrases happen on [`NormalizedPhrase`]s: lowercased, NFC-composed
//! tokens with surrounding punctuation tokens removed.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// What a piece of text is in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    Source,
    Student,
    Question,
    Answer,
}

/// Raw text together with its token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub raw: String,
    pub tokens: Vec<String>,
    pub role: TextRole,
}

impl TokenizedText {
    pub fn new(raw: impl Into<String>, role: TextRole) -> Self {
        let raw = raw.into();
        let tokens = tokenize_str(&raw);
        TokenizedText { raw, tokens, role }
    }

    /// Builds a text directly from tokens; `raw` is the space-joined tokens.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], role: TextRole) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
        TokenizedText {
            raw: tokens.join(" "),
            tokens,
            role,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn with_role(mut self, role: TextRole) -> Self {
        self.role = role;
        self
    }
}

impl fmt::Display for TokenizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Lowercased, punctuation-trimmed token sequence used for matching.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedPhrase {
    tokens: Vec<String>,
}

impl NormalizedPhrase {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Normalizes an arbitrary token slice.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        normalize_tokens(tokens)
    }

    /// Tokenizes and normalizes a string.
    pub fn from_str_lossy(raw: &str) -> Self {
        normalize_tokens(&tokenize_str(raw))
    }
}

impl fmt::Display for NormalizedPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// True for characters treated as punctuation by the tokenizer.
pub fn is_punct_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2026}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{00BF}'
                | '\u{00A1}'
        )
}

/// A token made only of punctuation characters.
pub fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct_char)
}

fn is_clitic(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(
        (chars.next(), chars.next(), chars.next()),
        (Some('\'' | '\u{2019}'), Some('s' | 'S'), None)
    )
}

fn ends_with_clitic(s: &str) -> Option<usize> {
    let (idx, _) = s.char_indices().rev().nth(1)?;
    if idx > 0 && is_clitic(&s[idx..]) {
        Some(idx)
    } else {
        None
    }
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut core = chunk;
    let mut trailing = Vec::new();
    while let Some(c) = core.chars().next_back() {
        if !is_punct_char(c) || is_clitic(core) {
            break;
        }
        trailing.push(c.to_string());
        core = &core[..core.len() - c.len_utf8()];
    }
    while let Some(c) = core.chars().next() {
        if !is_punct_char(c) || is_clitic(core) {
            break;
        }
        out.push(c.to_string());
        core = &core[c.len_utf8()..];
    }
    if !core.is_empty() {
        match ends_with_clitic(core) {
            Some(idx) => {
                out.push(core[..idx].to_string());
                out.push(core[idx..].to_string());
            }
            None => out.push(core.to_string()),
        }
    }
    out.extend(trailing.into_iter().rev());
}

fn tokenize_str(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in raw.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    tokens
}

/// Splits raw text into tokens; punctuation marks and `'s` become their own tokens.
pub fn tokenize(raw: &str) -> TokenizedText {
    TokenizedText::new(raw, TextRole::Source)
}

fn normalize_tokens<S: AsRef<str>>(tokens: &[S]) -> NormalizedPhrase {
    let mut out: Vec<String> = tokens
        .iter()
        .map(|t| {
            t.as_ref()
                .split_whitespace()
                .collect::<String>()
                .nfc()
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect();
    let start = out.iter().position(|t| !is_punct_token(t)).unwrap_or(out.len());
    let end = out.iter().rposition(|t| !is_punct_token(t)).map_or(start, |i| i + 1);
    out.truncate(end);
    out.drain(..start);
    NormalizedPhrase { tokens: out }
}

/// Lowercases, composes, and strips leading/trailing punctuation tokens.
pub fn normalize(phrase: &TokenizedText) -> NormalizedPhrase {
    normalize_tokens(&phrase.tokens)
}

/// Contiguous token-level containment. An empty needle is never contained.
pub fn contains(haystack: &NormalizedPhrase, needle: &NormalizedPhrase) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack
        .tokens
        .windows(needle.len())
        .any(|w| w == needle.tokens.as_slice())
}

/// Harmonic mean of token precision and recall over normalized multisets.
///
/// Two empty phrases score 1.0; one empty side scores 0.0.
pub fn token_f1(prediction: &NormalizedPhrase, gold: &NormalizedPhrase) -> f64 {
    if prediction.is_empty() || gold.is_empty() {
        return if prediction.is_empty() && gold.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold.tokens() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in prediction.tokens() {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / prediction.len() as f64;
    let recall = overlap as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
