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

//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped. Absolute differences get average ranks on
//! ties, and `W` is the sum of ranks of the positive differences. Up to
//! [`EXACT_MAX_N`] nonzero differences the p-value is exact: a subset-sum
//! count over the realized (possibly tied) ranks, which is the same as
//! enumerating all `2^n` sign assignments. Above that, the normal
//! approximation with tie-corrected variance and a continuity correction is
//! used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest effective sample size handled by the exact distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    /// Alternative: `x` tends to exceed `y`.
    Greater,
    /// Alternative: `x` tends to fall below `y`.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankResult {
    pub w: f64,
    pub p: f64,
    pub n_effective: usize,
    pub method: PValueMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WilcoxonError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("samples are empty")]
    Empty,
    #[error("non-finite value in samples")]
    NonFinite,
    #[error("no nonzero differences")]
    NoNonzeroDifferences,
}

/// Average ranks (1-based) of `values`; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.chunk_by(|a, b| a == b).map(<[f64]>::len).collect()
}

/// Counts sign assignments by doubled rank sum: `counts[s]` is the number of
/// subsets of `doubled_ranks` summing to `s`.
fn subset_sum_counts(doubled_ranks: &[usize]) -> Vec<u64> {
    let total: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

fn exact_p(ranks: &[f64], w: f64, side: Sidedness) -> f64 {
    // Average ranks are multiples of 1/2.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let w2 = (w * 2.0).round() as usize;
    let counts = subset_sum_counts(&doubled);
    let total = 2f64.powi(ranks.len() as i32);
    let upper = counts[w2..].iter().sum::<u64>() as f64 / total;
    let lower = counts[..=w2].iter().sum::<u64>() as f64 / total;
    match side {
        Sidedness::Greater => upper,
        Sidedness::Less => lower,
        Sidedness::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

fn normal_p(abs_d: &[f64], w: f64, side: Sidedness) -> f64 {
    let n = abs_d.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let ties: f64 = tie_group_sizes(abs_d)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let sd = var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let diff = w - mean;
    match side {
        Sidedness::TwoSided => {
            let corrected = if diff == 0.0 { 0.0 } else { diff - 0.5 * diff.signum() };
            (2.0 * std_normal.sf(corrected.abs() / sd)).min(1.0)
        }
        Sidedness::Greater => std_normal.sf((diff - 0.5) / sd),
        Sidedness::Less => std_normal.cdf((diff + 0.5) / sd),
    }
}

/// Signed-rank test on precomputed differences.
pub fn signed_rank_test(differences: &[f64], side: Sidedness) -> Result<SignedRankResult, WilcoxonError> {
    if differences.is_empty() {
        return Err(WilcoxonError::Empty);
    }
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(WilcoxonError::NonFinite);
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(WilcoxonError::NoNonzeroDifferences);
    }
    let abs_d: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs_d);
    let w: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = nonzero.len();
    let (p, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w, side), PValueMethod::Exact)
    } else {
        (normal_p(&abs_d, w, side), PValueMethod::NormalApproximation)
    };
    Ok(SignedRankResult {
        w,
        p,
        n_effective: n,
        method,
    })
}

/// Paired test of `x` against `y` on the differences `x - y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], side: Sidedness) -> Result<SignedRankResult, WilcoxonError> {
    if x.len() != y.len() {
        return Err(WilcoxonError::LengthMismatch(x.len(), y.len()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    signed_rank_test(&d, side)
}
