//! Synthetic articulated motion: a desk-scale labeled dataset substitute.
//!
//! Four motion classes over a fixed 8-joint skeleton, each a smooth
//! parametric gait driven by unit direction vectors, so bone lengths are
//! constant across frames by construction. Per-clip phase, speed, and
//! subject scale are drawn from the rng, making clips within a class vary
//! while classes stay separable.

use super::{PoseSequence, SkeletonSpec};
use crate::rng::Rng;
use crate::{Error, Real, Result};

/// Number of motion classes the generator knows.
///
/// The first four are grossly different motions. "march" and "pace" are a
/// deliberately hard pair: identical per-joint amplitudes and frequencies,
/// stationary root, differing only in the phase of the arms relative to the
/// legs (opposite-side versus same-side coordination). With a random phase
/// offset per clip they are not linearly separable from raw coordinates,
/// which is what makes them useful for transfer-learning experiments.
pub const SYNTH_CLASS_COUNT: usize = 6;

const CLASS_NAMES: [&str; SYNTH_CLASS_COUNT] = ["walk", "wave", "jump", "turn", "march", "pace"];

// Joint layout: 0 pelvis, 1 spine, 2 head, 3 left hand, 4 right hand,
// 5 left foot, 6 right foot, 7 crown.
const J_PELVIS: usize = 0;
const J_SPINE: usize = 1;
const J_HEAD: usize = 2;
const J_LHAND: usize = 3;
const J_RHAND: usize = 4;
const J_LFOOT: usize = 5;
const J_RFOOT: usize = 6;
const J_CROWN: usize = 7;

/// The 8-joint skeleton all synthetic motion uses.
pub fn synth_skeleton() -> SkeletonSpec {
    SkeletonSpec::new(
        "synth-8",
        8,
        vec![
            (J_PELVIS, J_SPINE),
            (J_SPINE, J_HEAD),
            (J_SPINE, J_LHAND),
            (J_SPINE, J_RHAND),
            (J_PELVIS, J_LFOOT),
            (J_PELVIS, J_RFOOT),
            (J_HEAD, J_CROWN),
        ],
    )
    .expect("static skeleton is valid")
}

pub fn class_name(class_id: usize) -> Option<&'static str> {
    CLASS_NAMES.get(class_id).copied()
}

struct Gait {
    phase: Real,
    omega: Real,
    arm_amp: Real,
    leg_amp: Real,
    speed: Real,
    scale: Real,
}

/// Deterministic-given-rng articulated motion for one class.
///
/// Coordinates are meters with y up; the figure faces +x. Frame-to-frame
/// displacement is bounded by the small per-frame phase increment.
pub fn synth_motion(
    class_id: usize,
    frames: usize,
    spec: &SkeletonSpec,
    rng: &mut Rng,
) -> Result<PoseSequence> {
    if class_id >= SYNTH_CLASS_COUNT {
        return Err(Error::UnknownClass(class_id));
    }
    if *spec != synth_skeleton() {
        return Err(Error::InvalidSkeleton(
            "synthetic motion is defined for the synth-8 skeleton".into(),
        ));
    }
    assert!(frames >= 1);

    let g = Gait {
        phase: rng.uniform(0.0, std::f64::consts::TAU as Real),
        omega: 0.18 * rng.uniform(0.85, 1.15),
        arm_amp: 0.5 * rng.uniform(0.9, 1.1),
        leg_amp: 0.45 * rng.uniform(0.9, 1.1),
        speed: 0.02 * rng.uniform(0.8, 1.2),
        scale: rng.uniform(0.9, 1.1),
    };

    // Segment lengths (meters), scaled per subject.
    let l_spine = 0.50 * g.scale;
    let l_neck = 0.25 * g.scale;
    let l_arm = 0.55 * g.scale;
    let l_leg = 0.80 * g.scale;
    let l_crown = 0.15 * g.scale;
    let hip_y = l_leg; // pelvis height when legs hang straight

    let mut data = Vec::with_capacity(frames * 8 * 3);
    for t in 0..frames {
        let ph = g.phase + g.omega * t as Real;
        let mut joints = [[0.0 as Real; 3]; 8];

        // Class-specific root path and limb angles (measured from straight
        // down for limbs attached below, from the facing axis for yaw).
        let (root, arm_l, arm_r, leg_l, leg_r, yaw): ([Real; 3], Real, Real, Real, Real, Real) =
            match class_id {
                // walk: root advances along x, limbs swing in anti-phase.
                0 => (
                    [g.speed * t as Real, hip_y, 0.0],
                    g.arm_amp * ph.sin(),
                    -g.arm_amp * ph.sin(),
                    -g.leg_amp * ph.sin(),
                    g.leg_amp * ph.sin(),
                    0.0,
                ),
                // wave: stationary, right arm raised and oscillating.
                1 => (
                    [0.0, hip_y, 0.0],
                    0.15,
                    2.4 + 0.5 * ph.sin(),
                    0.0,
                    0.0,
                    0.0,
                ),
                // jump: root bounces vertically, arms flare with height.
                2 => {
                    let bounce = 0.18 * (0.5 - 0.5 * (2.0 * ph).cos());
                    let flare = 0.4 + 0.8 * bounce / 0.18;
                    ([0.0, hip_y + bounce, 0.0], flare, flare, 0.12, -0.12, 0.0)
                }
                // turn: body yaws about the vertical axis, arms slightly out.
                3 => ([0.0, hip_y, 0.0], 0.35, 0.35, 0.08, -0.08, ph),
                // march: stationary, opposite-side coordination (left arm
                // swings with right leg).
                4 => (
                    [0.0, hip_y, 0.0],
                    -g.arm_amp * ph.sin(),
                    g.arm_amp * ph.sin(),
                    g.leg_amp * ph.sin(),
                    -g.leg_amp * ph.sin(),
                    0.0,
                ),
                // pace: stationary, same-side coordination (left arm swings
                // with left leg). Identical marginals to march.
                5 => (
                    [0.0, hip_y, 0.0],
                    g.arm_amp * ph.sin(),
                    -g.arm_amp * ph.sin(),
                    g.leg_amp * ph.sin(),
                    -g.leg_amp * ph.sin(),
                    0.0,
                ),
                _ => unreachable!(),
            };

        let (yaw_s, yaw_c) = (yaw.sin(), yaw.cos());
        // Facing and lateral directions after yaw.
        let fwd = [yaw_c, 0.0, yaw_s];
        let lat = [-yaw_s, 0.0, yaw_c];

        joints[J_PELVIS] = root;
        joints[J_SPINE] = add(root, [0.0, l_spine, 0.0]);
        joints[J_HEAD] = add(joints[J_SPINE], [0.0, l_neck, 0.0]);
        joints[J_CROWN] = add(joints[J_HEAD], [0.0, l_crown, 0.0]);

        // Limbs swing in the sagittal (fwd, up) plane with a constant
        // lateral tilt of magnitude `side`. The direction is a unit vector
        // by construction: side^2 + (1 - side^2)(sin^2 + cos^2) = 1, so
        // segment lengths are exact.
        let swing = |base: [Real; 3], angle: Real, len: Real, side: Real| -> [Real; 3] {
            let plane = (1.0 - side * side).sqrt();
            let dir = [
                plane * fwd[0] * angle.sin() + side * lat[0],
                -plane * angle.cos(),
                plane * fwd[2] * angle.sin() + side * lat[2],
            ];
            add(base, [dir[0] * len, dir[1] * len, dir[2] * len])
        };
        const TILT: Real = 0.22;
        joints[J_LHAND] = swing(joints[J_SPINE], arm_l, l_arm, TILT);
        joints[J_RHAND] = swing(joints[J_SPINE], arm_r, l_arm, -TILT);
        joints[J_LFOOT] = swing(joints[J_PELVIS], leg_l, l_leg, TILT * 0.5);
        joints[J_RFOOT] = swing(joints[J_PELVIS], leg_r, l_leg, -TILT * 0.5);

        for j in joints {
            data.extend_from_slice(&j);
        }
    }

    Ok(PoseSequence::new(data, frames, 8)?.with_label(class_id))
}

fn add(a: [Real; 3], b: [Real; 3]) -> [Real; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Builds a labeled dataset of `clips_per_class` clips for each class id in
/// `classes`, each `frames` long.
pub fn make_synth_dataset(
    classes: &[usize],
    clips_per_class: usize,
    frames: usize,
    rng: &mut Rng,
) -> Result<(Vec<PoseSequence>, SkeletonSpec)> {
    let spec = synth_skeleton();
    let mut clips = Vec::with_capacity(classes.len() * clips_per_class);
    for &class in classes {
        for i in 0..clips_per_class {
            let clip = synth_motion(class, frames, &spec, rng)?.with_subject(i as u32);
            clips.push(clip);
        }
    }
    Ok((clips, spec))
}
