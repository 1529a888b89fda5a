//! Static SVG stick-figure strips.
//!
//! Each sequence becomes one horizontal strip of frames (orthographic x/y
//! projection, y up); multiple sequences stack vertically so predictions
//! for different latent draws can be compared at a glance.

use crate::data::{PoseSequence, SkeletonSpec};
use crate::Real;

const FRAME_W: Real = 60.0;
const FRAME_H: Real = 110.0;
const MARGIN: Real = 8.0;
/// Frames drawn per strip; longer sequences are subsampled evenly.
const MAX_FRAMES: usize = 24;

pub fn render_strips(sequences: &[&PoseSequence], spec: &SkeletonSpec, labels: &[String]) -> String {
    assert!(!sequences.is_empty());
    assert!(labels.is_empty() || labels.len() == sequences.len());

    // Global bounds over all drawn frames so every strip shares one scale.
    let mut min = [Real::INFINITY; 2];
    let mut max = [Real::NEG_INFINITY; 2];
    for seq in sequences {
        for t in 0..seq.len() {
            for joint in seq.frame(t).chunks(3) {
                for c in 0..2 {
                    min[c] = min[c].min(joint[c]);
                    max[c] = max[c].max(joint[c]);
                }
            }
        }
    }
    let span = ((max[0] - min[0]).max(max[1] - min[1])).max(1e-6);
    let scale = (FRAME_H - 2.0 * MARGIN) / span;

    let frames_drawn = sequences.iter().map(|s| s.len().min(MAX_FRAMES)).max().unwrap();
    let width = frames_drawn as Real * FRAME_W;
    let height = sequences.len() as Real * FRAME_H;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         width=\"{width}\" height=\"{height}\">\n<rect width=\"100%\" height=\"100%\" \
         fill=\"white\"/>\n"
    );

    for (row, seq) in sequences.iter().enumerate() {
        let row_y = row as Real * FRAME_H;
        let count = seq.len().min(MAX_FRAMES);
        for slot in 0..count {
            // Even subsample across the sequence.
            let t = if count == seq.len() { slot } else { slot * (seq.len() - 1) / (count - 1).max(1) };
            let frame = seq.frame(t);
            let ox = slot as Real * FRAME_W + FRAME_W / 2.0;
            let project = |j: usize| -> (Real, Real) {
                let x = (frame[j * 3] - (min[0] + max[0]) / 2.0) * scale + ox;
                let y = row_y + FRAME_H - MARGIN - (frame[j * 3 + 1] - min[1]) * scale;
                (x, y)
            };
            for &(a, b) in &spec.bones {
                let (x1, y1) = project(a);
                let (x2, y2) = project(b);
                out.push_str(&format!(
                    "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
                     stroke=\"#1f3b73\" stroke-width=\"1.4\"/>\n"
                ));
            }
            for j in 0..spec.joint_count {
                let (x, y) = project(j);
                out.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.6\" fill=\"#c23f3f\"/>\n"
                ));
            }
        }
        if let Some(label) = labels.get(row) {
            out.push_str(&format!(
                "<text x=\"4\" y=\"{:.2}\" font-size=\"9\" fill=\"#333\">{label}</text>\n",
                row_y + 12.0
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
