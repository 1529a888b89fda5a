//! Dataset normalization.
//!
//! Statistics are per coordinate axis (x, y, z), pooled over every joint of
//! every frame of every clip. Normalized values are (v - mean) / (2 * std),
//! which brings most joint coordinates into [-1, 1].

use super::PoseSequence;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: [Real; 3],
    pub std: [Real; 3],
}

impl NormalizationStats {
    pub fn identity() -> NormalizationStats {
        NormalizationStats { mean: [0.0; 3], std: [0.5; 3] }
    }
}

/// Population mean and standard deviation per coordinate axis over the
/// whole dataset.
pub fn compute_stats(dataset: &[PoseSequence]) -> Result<NormalizationStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let total_frames: usize = dataset.iter().map(|c| c.len()).sum();
    if total_frames < 2 {
        return Err(Error::DegenerateCoordinate(
            "standard deviation undefined over a single frame".into(),
        ));
    }
    let mut sum = [0.0; 3];
    let mut sum_sq = [0.0; 3];
    let mut count = [0usize; 3];
    for clip in dataset {
        for (i, v) in clip.values().iter().enumerate() {
            let axis = i % 3;
            sum[axis] += v;
            sum_sq[axis] += v * v;
            count[axis] += 1;
        }
    }
    let mut mean = [0.0; 3];
    let mut std = [0.0; 3];
    for axis in 0..3 {
        let n = count[axis] as Real;
        mean[axis] = sum[axis] / n;
        let var = (sum_sq[axis] / n - mean[axis] * mean[axis]).max(0.0);
        std[axis] = var.sqrt();
        if std[axis] <= 0.0 {
            return Err(Error::DegenerateCoordinate(format!(
                "axis {} has zero variance",
                ["x", "y", "z"][axis]
            )));
        }
    }
    Ok(NormalizationStats { mean, std })
}

/// (v - mean) / (2 * std) per coordinate.
pub fn normalize(seq: &PoseSequence, stats: &NormalizationStats) -> PoseSequence {
    let mut out = seq.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let axis = i % 3;
        *v = (*v - stats.mean[axis]) / (2.0 * stats.std[axis]);
    }
    out
}

/// Exact inverse of [`normalize`].
pub fn denormalize(seq: &PoseSequence, stats: &NormalizationStats) -> PoseSequence {
    let mut out = seq.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let axis = i % 3;
        *v = *v * 2.0 * stats.std[axis] + stats.mean[axis];
    }
    out
}
