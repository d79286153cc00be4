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

//! Gap-focused question generation.
//!
//! Given a source text and a student's summary of it, the pipeline proposes
//! questions whose answers are in the source but missing from the summary,
//! ordered so that the least revealing question comes first.

pub mod backends;
pub mod corpus;
pub mod evaluation;
pub mod gap_filter;
pub mod generation;
pub mod pipeline;
pub mod ranking;
pub mod rng;
pub mod text;
pub mod treebank;

pub use pipeline::{run, Mode, PipelineConfig, PipelineResult, Status};
pub use text::{tokenize, TextRole, TokenizedText};
