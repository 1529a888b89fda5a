//! Clip segmentation, frame subsampling, and training-pair sampling.

use super::PoseSequence;
use crate::rng::Rng;
use crate::{Error, Result};

/// An observed prefix and the future that follows it, contiguous in the
/// source segment.
#[derive(Debug, Clone)]
pub struct SequencePair {
    pub prior: PoseSequence,
    pub future: PoseSequence,
}

/// Splits a clip into subsampled windows of `segment_len` frames, taking
/// every `frame_stride`-th frame. `hop` is the distance in source frames
/// between window starts; `None` means non-overlapping windows
/// (`segment_len * frame_stride`). Clips too short for a single window
/// yield an empty list.
pub fn split_segments(
    clip: &PoseSequence,
    segment_len: usize,
    frame_stride: usize,
    hop: Option<usize>,
) -> Vec<PoseSequence> {
    assert!(segment_len > 0 && frame_stride > 0);
    let span = (segment_len - 1) * frame_stride + 1;
    if clip.len() < span {
        return Vec::new();
    }
    let hop = hop.unwrap_or(segment_len * frame_stride).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start + span <= clip.len() {
        let width = clip.joint_count() * 3;
        let mut data = Vec::with_capacity(segment_len * width);
        for i in 0..segment_len {
            data.extend_from_slice(clip.frame(start + i * frame_stride));
        }
        let mut seg = PoseSequence::new(data, segment_len, clip.joint_count())
            .expect("subsampled frames of a valid clip are valid");
        seg.label = clip.label;
        seg.subject = clip.subject;
        out.push(seg);
        start += hop;
    }
    out
}

/// Uniformly random contiguous window of `m + n` frames, split into an
/// m-frame prior and an n-frame future.
pub fn sample_training_pair(
    segment: &PoseSequence,
    m: usize,
    n: usize,
    rng: &mut Rng,
) -> Result<SequencePair> {
    assert!(m > 0 && n > 0);
    let need = m + n;
    if segment.len() < need {
        return Err(Error::SegmentTooShort { need, have: segment.len() });
    }
    let max_offset = segment.len() - need;
    let offset = if max_offset == 0 { 0 } else { rng.below(max_offset + 1) };
    Ok(SequencePair {
        prior: segment.window(offset, m),
        future: segment.window(offset + m, n),
    })
}
