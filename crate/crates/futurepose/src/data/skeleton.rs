//! Skeleton topology and pose-sequence storage.

use crate::{Error, Real, Result};

/// Joint/bone topology of a skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSpec {
    pub name: String,
    pub joint_count: usize,
    /// (parent, child) joint index pairs.
    pub bones: Vec<(usize, usize)>,
}

impl SkeletonSpec {
    /// Validates: indices in range, no duplicate bones, bone graph connected
    /// and acyclic.
    pub fn new(name: impl Into<String>, joint_count: usize, bones: Vec<(usize, usize)>) -> Result<SkeletonSpec> {
        if joint_count == 0 {
            return Err(Error::InvalidSkeleton("zero joints".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &bones {
            if a >= joint_count || b >= joint_count {
                return Err(Error::InvalidSkeleton(format!(
                    "bone ({a},{b}) references a joint >= {joint_count}"
                )));
            }
            if a == b {
                return Err(Error::InvalidSkeleton(format!("self-loop bone at joint {a}")));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::InvalidSkeleton(format!("duplicate bone ({a},{b})")));
            }
        }
        // A connected acyclic graph over n joints has exactly n-1 edges, and
        // a union-find sweep must never join two already-joined components.
        if bones.len() + 1 != joint_count {
            return Err(Error::InvalidSkeleton(format!(
                "{} bones cannot form a tree over {} joints",
                bones.len(),
                joint_count
            )));
        }
        let mut parent: Vec<usize> = (0..joint_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &bones {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(Error::InvalidSkeleton("bone graph contains a cycle".into()));
            }
            parent[ra] = rb;
        }
        Ok(SkeletonSpec { name: name.into(), joint_count, bones })
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }
}

/// A motion clip: frames x joints x 3 coordinates, in meters, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    data: Vec<Real>,
    frame_count: usize,
    joint_count: usize,
    pub label: Option<usize>,
    pub subject: Option<u32>,
}

impl PoseSequence {
    pub fn new(data: Vec<Real>, frame_count: usize, joint_count: usize) -> Result<PoseSequence> {
        if frame_count == 0 {
            return Err(Error::ShapeMismatch("pose sequence needs at least one frame".into()));
        }
        if data.len() != frame_count * joint_count * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot hold {} frames x {} joints x 3",
                data.len(),
                frame_count,
                joint_count
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite coordinate in pose sequence".into()));
        }
        Ok(PoseSequence { data, frame_count, joint_count, label: None, subject: None })
    }

    pub fn with_label(mut self, label: usize) -> PoseSequence {
        self.label = Some(label);
        self
    }

    pub fn with_subject(mut self, subject: u32) -> PoseSequence {
        self.subject = Some(subject);
        self
    }

    pub fn len(&self) -> usize {
        self.frame_count
    }

    pub fn is_empty(&self) -> bool {
        self.frame_count == 0
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    /// Flat [joint_count * 3] view of one frame.
    pub fn frame(&self, t: usize) -> &[Real] {
        let w = self.joint_count * 3;
        &self.data[t * w..(t + 1) * w]
    }

    pub fn values(&self) -> &[Real] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Real] {
        &mut self.data
    }

    /// Contiguous sub-clip [start, start+len).
    pub fn window(&self, start: usize, len: usize) -> PoseSequence {
        assert!(start + len <= self.frame_count);
        let w = self.joint_count * 3;
        let mut out = PoseSequence {
            data: self.data[start * w..(start + len) * w].to_vec(),
            frame_count: len,
            joint_count: self.joint_count,
            label: self.label,
            subject: self.subject,
        };
        out.label = self.label;
        out
    }
}

/// Unweighted mean of joint positions of one pose (flat [J*3] slice).
pub fn center_of_mass(pose: &[Real]) -> [Real; 3] {
    assert!(!pose.is_empty() && pose.len().is_multiple_of(3));
    let joints = pose.len() / 3;
    let mut com = [0.0; 3];
    for j in 0..joints {
        for c in 0..3 {
            com[c] += pose[j * 3 + c];
        }
    }
    for c in com.iter_mut() {
        *c /= joints as Real;
    }
    com
}

/// Euclidean length of each bone edge of one pose, in spec bone order.
pub fn bone_lengths(pose: &[Real], spec: &SkeletonSpec) -> Vec<Real> {
    assert_eq!(pose.len(), spec.joint_count * 3, "pose does not match skeleton");
    spec.bones
        .iter()
        .map(|&(a, b)| {
            let mut sq = 0.0;
            for c in 0..3 {
                let d = pose[a * 3 + c] - pose[b * 3 + c];
                sq += d * d;
            }
            sq.sqrt()
        })
        .collect()
}
