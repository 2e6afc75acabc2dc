//! Robust 2D translation estimation from noisy match sets.
//!
//! One match fully determines a translation, so the consensus search
//! uses minimal samples of size one: hypothesize the displacement of a
//! randomly drawn match, count how many other matches agree within
//! tolerance, keep the best hypothesis, then refine by averaging the
//! inlier displacements (the least-squares optimum for a translation).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::Match;
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("need at least {need} matches, got {got}")]
    InsufficientMatches { got: usize, need: usize },
    #[error("no consensus: best hypothesis kept {inliers}/{matches} matches (need >= {need} and fraction >= {min_fraction})")]
    NoConsensus { inliers: usize, matches: usize, need: usize, min_fraction: f64 },
    #[error("match references point {index}, but the {side} list has {len} points")]
    IndexOutOfRange { index: usize, side: &'static str, len: usize },
}

/// Position of frame B's origin expressed in frame A's coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Translation2D {
    pub tx: f64,
    pub ty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacParams {
    pub iterations: u32,
    /// Residual (pixels) below which a match supports a hypothesis.
    pub inlier_tolerance: f64,
    /// Minimum surviving inliers for a usable estimate.
    pub min_matches: usize,
    /// Minimum surviving fraction of the input matches.
    pub min_inlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 200,
            inlier_tolerance: 2.0,
            min_matches: 4,
            min_inlier_fraction: 0.25,
            rng_seed: 7,
        }
    }
}

/// A consensus translation with its supporting evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformEstimate {
    pub translation: Translation2D,
    /// Indices into the input match list, ascending.
    pub inlier_indices: Vec<usize>,
    /// Root-mean-square residual of the inliers under the translation.
    pub inlier_rms: f64,
}

/// Interchange form of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub tx: f64,
    pub ty: f64,
    pub inliers: Vec<usize>,
    pub inlier_rms: f64,
}

impl TransformEstimate {
    pub fn to_record(&self) -> EstimateRecord {
        EstimateRecord {
            tx: self.translation.tx,
            ty: self.translation.ty,
            inliers: self.inlier_indices.clone(),
            inlier_rms: self.inlier_rms,
        }
    }
}

/// Per-match Euclidean residual ‖(p_a − p_b) − t‖.
pub fn displacement_residuals(
    points_a: &[(f64, f64)],
    points_b: &[(f64, f64)],
    matches: &[Match],
    t: Translation2D,
) -> Result<Vec<f64>, TransformError> {
    let displacements = match_displacements(points_a, points_b, matches)?;
    Ok(displacements
        .iter()
        .map(|d| {
            let rx = d.0 - t.tx;
            let ry = d.1 - t.ty;
            (rx * rx + ry * ry).sqrt()
        })
        .collect())
}

fn match_displacements(
    points_a: &[(f64, f64)],
    points_b: &[(f64, f64)],
    matches: &[Match],
) -> Result<Vec<(f64, f64)>, TransformError> {
    matches
        .iter()
        .map(|m| {
            let pa = points_a.get(m.query_index).ok_or(TransformError::IndexOutOfRange {
                index: m.query_index,
                side: "query",
                len: points_a.len(),
            })?;
            let pb = points_b.get(m.train_index).ok_or(TransformError::IndexOutOfRange {
                index: m.train_index,
                side: "train",
                len: points_b.len(),
            })?;
            Ok((pa.0 - pb.0, pa.1 - pb.1))
        })
        .collect()
}

/// Estimates the translation mapping B's coordinates into A's.
///
/// Seeded hypothesis sampling; the best hypothesis (most inliers, ties
/// by lower inlier RMS, then by earlier sample) is refined once by the
/// mean of its inlier displacements and the inlier set is recomputed
/// once against the refined translation. The mean is accumulated as
/// deviations from the hypothesis displacement, so a set of identical
/// displacements is returned exactly.
pub fn estimate_translation(
    points_a: &[(f64, f64)],
    points_b: &[(f64, f64)],
    matches: &[Match],
    params: &RansacParams,
) -> Result<TransformEstimate, TransformError> {
    assert!(params.iterations >= 1, "iterations must be >= 1");
    assert!(params.inlier_tolerance > 0.0, "tolerance must be positive");
    assert!(params.min_matches >= 1, "min_matches must be >= 1");
    if matches.len() < params.min_matches {
        return Err(TransformError::InsufficientMatches {
            got: matches.len(),
            need: params.min_matches,
        });
    }

    let displacements = match_displacements(points_a, points_b, matches)?;
    let n = displacements.len();
    let tol_sq = params.inlier_tolerance * params.inlier_tolerance;
    let mut rng = Rng::new(params.rng_seed);

    // Best hypothesis: (inlier count, negative so lower rms wins) kept
    // by first-strictly-better, which preserves earliest-sample ties.
    let mut best: Option<((f64, f64), usize, f64)> = None;
    for _ in 0..params.iterations {
        let pick = displacements[rng.next_below(n as u64) as usize];
        let mut count = 0usize;
        let mut sq_sum = 0.0f64;
        for d in &displacements {
            let rx = d.0 - pick.0;
            let ry = d.1 - pick.1;
            let sq = rx * rx + ry * ry;
            if sq <= tol_sq {
                count += 1;
                sq_sum += sq;
            }
        }
        let rms = (sq_sum / count as f64).sqrt();
        let better = match &best {
            None => true,
            Some((_, best_count, best_rms)) => {
                count > *best_count || (count == *best_count && rms < *best_rms)
            }
        };
        if better {
            best = Some((pick, count, rms));
        }
    }
    let (hypothesis, _, _) = best.expect("iterations >= 1 always yields a hypothesis");

    // Refine: mean of inlier displacements, accumulated as deviations
    // from the hypothesis so identical displacements average exactly.
    let inliers: Vec<usize> = (0..n)
        .filter(|&i| {
            let rx = displacements[i].0 - hypothesis.0;
            let ry = displacements[i].1 - hypothesis.1;
            rx * rx + ry * ry <= tol_sq
        })
        .collect();
    let inv = 1.0 / inliers.len() as f64;
    let refined = Translation2D {
        tx: hypothesis.0 + inliers.iter().map(|&i| displacements[i].0 - hypothesis.0).sum::<f64>() * inv,
        ty: hypothesis.1 + inliers.iter().map(|&i| displacements[i].1 - hypothesis.1).sum::<f64>() * inv,
    };

    // One recomputation of the inlier set against the refined estimate.
    let mut final_inliers = Vec::new();
    let mut sq_sum = 0.0f64;
    for (i, d) in displacements.iter().enumerate() {
        let rx = d.0 - refined.tx;
        let ry = d.1 - refined.ty;
        let sq = rx * rx + ry * ry;
        if sq <= tol_sq {
            final_inliers.push(i);
            sq_sum += sq;
        }
    }

    if final_inliers.len() < params.min_matches
        || (final_inliers.len() as f64) < params.min_inlier_fraction * n as f64
    {
        return Err(TransformError::NoConsensus {
            inliers: final_inliers.len(),
            matches: n,
            need: params.min_matches,
            min_fraction: params.min_inlier_fraction,
        });
    }

    let inlier_rms = (sq_sum / final_inliers.len() as f64).sqrt();
    Ok(TransformEstimate { translation: refined, inlier_indices: final_inliers, inlier_rms })
}
