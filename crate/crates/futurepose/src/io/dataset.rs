//! Line-oriented dataset interchange format.
//!
//! ```text
//! posedata 1
//! name <skeleton name>
//! units meters
//! joints <J>
//! bones <count>
//! bone <parent> <child>        (one per bone)
//! classes <count>
//! class <id> <name>            (one per class)
//! clips <count>
//! clip <id> frames <T> label <id|-> subject <id|->
//! <x y z x y z ...>            (J*3 values per line, one line per frame)
//! ```
//!
//! Coordinates are written with 9 significant digits; a file read back and
//! rewritten is byte-identical, so round trips are lossless to the stored
//! precision.

use super::atomic_write;
use crate::data::{PoseSequence, SkeletonSpec};
use crate::{Error, Real, Result};
use std::path::Path;

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub skeleton: SkeletonSpec,
    /// Class-label table: (id, name). Every clip label must appear here.
    pub classes: Vec<(usize, String)>,
    pub units: String,
    pub clips: Vec<PoseSequence>,
}

impl Dataset {
    pub fn new(
        skeleton: SkeletonSpec,
        classes: Vec<(usize, String)>,
        clips: Vec<PoseSequence>,
    ) -> Result<Dataset> {
        let ds = Dataset { skeleton, classes, units: "meters".into(), clips };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clips.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (index, clip) in self.clips.iter().enumerate() {
            if clip.joint_count() != self.skeleton.joint_count {
                return Err(Error::MalformedRecord {
                    index,
                    msg: format!(
                        "clip has {} joints, header skeleton has {}",
                        clip.joint_count(),
                        self.skeleton.joint_count
                    ),
                });
            }
            if let Some(label) = clip.label {
                if !self.classes.iter().any(|(id, _)| *id == label) {
                    return Err(Error::MalformedRecord {
                        index,
                        msg: format!("label {label} missing from the class table"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

fn fmt_coord(v: Real) -> String {
    format!("{:.8e}", v)
}

pub fn format_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(&format!("posedata {DATASET_VERSION}\n"));
    out.push_str(&format!("name {}\n", ds.skeleton.name));
    out.push_str(&format!("units {}\n", ds.units));
    out.push_str(&format!("joints {}\n", ds.skeleton.joint_count));
    out.push_str(&format!("bones {}\n", ds.skeleton.bones.len()));
    for &(a, b) in &ds.skeleton.bones {
        out.push_str(&format!("bone {a} {b}\n"));
    }
    out.push_str(&format!("classes {}\n", ds.classes.len()));
    for (id, name) in &ds.classes {
        out.push_str(&format!("class {id} {name}\n"));
    }
    out.push_str(&format!("clips {}\n", ds.clips.len()));
    for (i, clip) in ds.clips.iter().enumerate() {
        let label = clip.label.map_or("-".to_string(), |l| l.to_string());
        let subject = clip.subject.map_or("-".to_string(), |s| s.to_string());
        out.push_str(&format!(
            "clip {i} frames {} label {label} subject {subject}\n",
            clip.len()
        ));
        for t in 0..clip.len() {
            let row: Vec<String> = clip.frame(t).iter().map(|&v| fmt_coord(v)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        Lines { iter: text.lines().enumerate() }
    }

    /// Next non-empty, non-comment line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Some((i + 1, trimmed));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn keyed<'a>(line: usize, text: &'a str, key: &str) -> Result<&'a str> {
    text.strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| parse_err(line, format!("expected `{key} ...`, got `{text}`")))
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from `{token}`")))
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = Lines::new(text);

    let (ln, header) = lines.expect("header")?;
    let version: u32 = parse_num(ln, keyed(ln, header, "posedata")?, "version")?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch { found: version, supported: DATASET_VERSION });
    }

    let (ln, l) = lines.expect("name")?;
    let name = keyed(ln, l, "name")?.to_string();
    let (ln, l) = lines.expect("units")?;
    let units = keyed(ln, l, "units")?.to_string();
    let (ln, l) = lines.expect("joints")?;
    let joints: usize = parse_num(ln, keyed(ln, l, "joints")?, "joint count")?;
    let (ln, l) = lines.expect("bones")?;
    let bone_count: usize = parse_num(ln, keyed(ln, l, "bones")?, "bone count")?;

    let mut bones = Vec::with_capacity(bone_count);
    for _ in 0..bone_count {
        let (ln, l) = lines.expect("bone")?;
        let rest = keyed(ln, l, "bone")?;
        let mut parts = rest.split_whitespace();
        let a: usize = parse_num(ln, parts.next().unwrap_or(""), "bone parent")?;
        let b: usize = parse_num(ln, parts.next().unwrap_or(""), "bone child")?;
        bones.push((a, b));
    }
    let skeleton = SkeletonSpec::new(name, joints, bones)?;

    let (ln, l) = lines.expect("classes")?;
    let class_count: usize = parse_num(ln, keyed(ln, l, "classes")?, "class count")?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        let (ln, l) = lines.expect("class")?;
        let rest = keyed(ln, l, "class")?;
        let mut parts = rest.splitn(2, ' ');
        let id: usize = parse_num(ln, parts.next().unwrap_or(""), "class id")?;
        let cname = parts.next().unwrap_or("").trim().to_string();
        if cname.is_empty() {
            return Err(parse_err(ln, "class entry needs a name"));
        }
        classes.push((id, cname));
    }

    let (ln, l) = lines.expect("clips")?;
    let clip_count: usize = parse_num(ln, keyed(ln, l, "clips")?, "clip count")?;
    if clip_count == 0 {
        return Err(Error::EmptyDataset);
    }

    let width = joints * 3;
    let mut clips = Vec::with_capacity(clip_count);
    for index in 0..clip_count {
        let (ln, l) = lines.expect("clip header")?;
        let rest = keyed(ln, l, "clip")?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        if tokens.len() != 7 || tokens[1] != "frames" || tokens[3] != "label" || tokens[5] != "subject" {
            return Err(Error::MalformedRecord {
                index,
                msg: format!("bad clip header at line {ln}: `{l}`"),
            });
        }
        let frames: usize = parse_num(ln, tokens[2], "frame count")?;
        let label = match tokens[4] {
            "-" => None,
            t => Some(parse_num(ln, t, "label")?),
        };
        let subject = match tokens[6] {
            "-" => None,
            t => Some(parse_num(ln, t, "subject")?),
        };

        let mut data = Vec::with_capacity(frames * width);
        for _ in 0..frames {
            let (ln, l) = lines.expect("frame row")?;
            let mut count = 0;
            for token in l.split_whitespace() {
                let v: Real = token.parse().map_err(|_| Error::MalformedRecord {
                    index,
                    msg: format!("bad coordinate `{token}` at line {ln}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::MalformedRecord {
                        index,
                        msg: format!("non-finite coordinate at line {ln}"),
                    });
                }
                data.push(v);
                count += 1;
            }
            if count != width {
                return Err(Error::MalformedRecord {
                    index,
                    msg: format!("frame at line {ln} has {count} values, expected {width}"),
                });
            }
        }

        let mut clip = PoseSequence::new(data, frames, joints)
            .map_err(|e| Error::MalformedRecord { index, msg: e.to_string() })?;
        clip.label = label;
        clip.subject = subject;
        clips.push(clip);
    }

    if let Some((ln, l)) = lines.next() {
        return Err(parse_err(ln, format!("trailing content `{l}`")));
    }

    let mut ds = Dataset::new(skeleton, classes, clips)?;
    ds.units = units;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    ds.validate()?;
    atomic_write(path, format_dataset(ds).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}
