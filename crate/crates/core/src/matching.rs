//! Descriptor association between two frames.
//!
//! Exhaustive nearest-neighbor search with the classic ratio test: a
//! query matches its nearest train descriptor only when the nearest is
//! clearly better than the runner-up. A sign-of-Laplacian prefilter
//! discards candidates whose blob polarity disagrees (dark-on-light
//! never matches light-on-dark), and an optional cross-check keeps
//! only mutual best pairs. Frames here carry a few hundred keypoints,
//! so the O(N^2) scan is both the implementation and its own oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Descriptor, Keypoint};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

/// One accepted association between a query and a train keypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub query_index: usize,
    pub train_index: usize,
    /// Euclidean distance between the two descriptors.
    pub distance: f64,
    /// Best/second-best distance ratio that admitted the match; with
    /// cross-check on, the larger of the two directions' ratios.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchParams {
    /// A match is emitted iff best/second-best < this threshold.
    pub ratio_threshold: f64,
    /// Restrict candidates to keypoints with the same laplacian sign.
    pub use_laplacian_prefilter: bool,
    /// Keep only pairs that are each other's best match, with the ratio
    /// test passing in both directions.
    pub cross_check: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams { ratio_threshold: 0.8, use_laplacian_prefilter: true, cross_check: false }
    }
}

/// Exhaustive nearest and second-nearest neighbor of one descriptor.
///
/// Returns (best index, best distance, second distance). With a single
/// train descriptor the second distance is the +infinity sentinel: the
/// ratio test treats such a lone candidate as passing (ratio 0).
pub fn brute_force_nn(
    query: &Descriptor,
    train: &[Descriptor],
) -> Result<(usize, f64, f64), MatchError> {
    if train.is_empty() {
        return Err(MatchError::EmptyInput("train descriptor list"));
    }
    let mut best = (0usize, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (idx, t) in train.iter().enumerate() {
        let d = query.distance(t);
        if d < best.1 {
            second = best.1;
            best = (idx, d);
        } else if d < second {
            second = d;
        }
    }
    Ok((best.0, best.1, second))
}

/// Ratio of best to second-best distance under the sentinel rules:
/// a lone candidate passes outright; duplicate zero-distance candidates
/// are ambiguous and rejected.
fn nn_ratio(best: f64, second: f64) -> f64 {
    if second.is_infinite() {
        0.0
    } else if second == 0.0 {
        1.0
    } else {
        best / second
    }
}

/// Associates query keypoints with train keypoints.
///
/// Zero-vector (flat-patch) descriptors never participate. Output is
/// sorted by ascending distance, ties by (query_index, train_index).
pub fn match_descriptors(
    query: &[Keypoint],
    train: &[Keypoint],
    params: &MatchParams,
) -> Result<Vec<Match>, MatchError> {
    assert!(
        params.ratio_threshold > 0.0 && params.ratio_threshold <= 1.0,
        "ratio threshold must be in (0, 1]"
    );
    if query.is_empty() {
        return Err(MatchError::EmptyInput("query keypoint list"));
    }
    if train.is_empty() {
        return Err(MatchError::EmptyInput("train keypoint list"));
    }

    let forward = directed_matches(query, train, params);
    if !params.cross_check {
        return Ok(sorted(forward));
    }

    let backward = directed_matches(train, query, params);
    let mut best_backward = vec![None; train.len()];
    for m in &backward {
        best_backward[m.query_index] = Some((m.train_index, m.ratio));
    }
    let mutual = forward
        .into_iter()
        .filter_map(|m| match best_backward[m.train_index] {
            Some((back_idx, back_ratio)) if back_idx == m.query_index => {
                Some(Match { ratio: m.ratio.max(back_ratio), ..m })
            }
            _ => None,
        })
        .collect();
    Ok(sorted(mutual))
}

/// One direction of the search: per-query nearest neighbor among
/// sign-compatible, non-flat candidates, accepted by the ratio test.
fn directed_matches(query: &[Keypoint], train: &[Keypoint], params: &MatchParams) -> Vec<Match> {
    let train_descriptors: Vec<Descriptor> = train.iter().map(|k| k.descriptor()).collect();
    let mut out = Vec::new();

    for (qi, q) in query.iter().enumerate() {
        let qd = q.descriptor();
        if qd.is_zero() {
            continue;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (ti, td) in train_descriptors.iter().enumerate() {
            if td.is_zero() {
                continue;
            }
            if params.use_laplacian_prefilter && train[ti].laplacian_sign != q.laplacian_sign {
                continue;
            }
            let d = qd.distance(td);
            if d < best.1 {
                second = best.1;
                best = (ti, d);
            } else if d < second {
                second = d;
            }
        }
        if best.0 == usize::MAX {
            continue;
        }
        let ratio = nn_ratio(best.1, second);
        if ratio < params.ratio_threshold {
            out.push(Match { query_index: qi, train_index: best.0, distance: best.1, ratio });
        }
    }
    out
}

fn sorted(mut matches: Vec<Match>) -> Vec<Match> {
    matches.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap()
            .then(a.query_index.cmp(&b.query_index))
            .then(a.train_index.cmp(&b.train_index))
    });
    matches
}

pub fn matches_to_json(matches: &[Match]) -> String {
    serde_json::to_string_pretty(matches).expect("match serialization cannot fail")
}

pub fn matches_from_json(json: &str) -> Result<Vec<Match>, serde_json::Error> {
    serde_json::from_str(json)
}
