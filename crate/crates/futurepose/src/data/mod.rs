//! Skeleton topology, pose sequences, preprocessing, and synthetic motion.

mod segment;
mod skeleton;
mod stats;
mod synth;

pub use segment::{sample_training_pair, split_segments, SequencePair};
pub use skeleton::{bone_lengths, center_of_mass, PoseSequence, SkeletonSpec};
pub use stats::{compute_stats, denormalize, normalize, NormalizationStats};
pub use synth::{class_name, make_synth_dataset, synth_motion, synth_skeleton, SYNTH_CLASS_COUNT};
