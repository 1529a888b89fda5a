//! Versioned binary checkpoint format.
//!
//! Layout: magic `FPCK`, u32 version, then length-prefixed sections in a
//! fixed order. All integers are little-endian; floats are f64 bits, so a
//! round trip reproduces forward passes exactly. Any length that disagrees
//! with the actual payload aborts the load before anything is returned —
//! there is no partial checkpoint.

use super::atomic_write;
use crate::data::{NormalizationStats, SkeletonSpec};
use crate::nets::{DiscriminatorConfig, GeneratorConfig, LatentDist, LatentSpec, QualityConfig};
use crate::train::{AdamState, Checkpoint, MetricRow, NetSnapshot};
use crate::{Error, Real, Result};
use std::path::Path;

const MAGIC: &[u8; 4] = b"FPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Writer {
        Writer { buf: Vec::new() }
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn real(&mut self, v: Real) {
        // The cast matters under the real32 feature where Real = f32.
        #[allow(clippy::unnecessary_cast)]
        self.f64(v as f64);
    }

    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn usizes(&mut self, v: &[usize]) {
        self.u32(v.len() as u32);
        for &x in v {
            self.u64(x as u64);
        }
    }

    fn reals(&mut self, v: &[Real]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.real(x);
        }
    }

    /// Appends a length-prefixed section produced by `f`.
    fn section(&mut self, name: &str, f: impl FnOnce(&mut Writer)) {
        self.string(name);
        let mut inner = Writer::new();
        f(&mut inner);
        self.u64(inner.buf.len() as u64);
        self.buf.extend_from_slice(&inner.buf);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Corrupt(format!(
                    "needed {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.buf.len()
                ))
            })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn real(&mut self) -> Result<Real> {
        #[allow(clippy::unnecessary_cast)]
        Ok(self.f64()? as Real)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Corrupt("non-utf8 string".into()))
    }

    fn usizes(&mut self) -> Result<Vec<usize>> {
        let len = self.u32()? as usize;
        (0..len).map(|_| Ok(self.u64()? as usize)).collect()
    }

    fn reals(&mut self) -> Result<Vec<Real>> {
        let len = self.u64()? as usize;
        if self.pos.saturating_add(len.saturating_mul(8)) > self.buf.len() {
            return Err(Error::Corrupt(format!("vector length {len} exceeds file size")));
        }
        (0..len).map(|_| self.real()).collect()
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }

    /// Opens the named section and returns a reader scoped to its payload.
    fn section(&mut self, expect: &str) -> Result<Reader<'a>> {
        let name = self.string()?;
        if name != expect {
            return Err(Error::Corrupt(format!("expected section `{expect}`, found `{name}`")));
        }
        let len = self.u64()? as usize;
        let payload = self.take(len)?;
        Ok(Reader::new(payload))
    }
}

fn write_snapshot(w: &mut Writer, snap: &NetSnapshot) {
    w.u32(snap.entries.len() as u32);
    for (name, shape, data) in &snap.entries {
        w.string(name);
        w.usizes(shape);
        w.reals(data);
    }
}

fn read_snapshot(r: &mut Reader) -> Result<NetSnapshot> {
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.string()?;
        let shape = r.usizes()?;
        let data = r.reals()?;
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::Corrupt(format!("tensor `{name}` length mismatch")));
        }
        entries.push((name, shape, data));
    }
    Ok(NetSnapshot { entries })
}

fn write_adam(w: &mut Writer, s: &AdamState) {
    w.u64(s.step);
    w.u32(s.m.len() as u32);
    for v in &s.m {
        w.reals(v);
    }
    for v in &s.v {
        w.reals(v);
    }
}

fn read_adam(r: &mut Reader) -> Result<AdamState> {
    let step = r.u64()?;
    let count = r.u32()? as usize;
    let m = (0..count).map(|_| r.reals()).collect::<Result<Vec<_>>>()?;
    let v = (0..count).map(|_| r.reals()).collect::<Result<Vec<_>>>()?;
    Ok(AdamState { step, m, v })
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(CHECKPOINT_VERSION);

    w.section("meta", |w| {
        w.u64(ckpt.epoch as u64);
        w.u64(ckpt.k_best as u64);
        w.u64(ckpt.m as u64);
        w.u64(ckpt.n as u64);
    });
    w.section("skeleton", |w| {
        w.string(&ckpt.skeleton.name);
        w.u32(ckpt.skeleton.joint_count as u32);
        w.u32(ckpt.skeleton.bones.len() as u32);
        for &(a, b) in &ckpt.skeleton.bones {
            w.u32(a as u32);
            w.u32(b as u32);
        }
    });
    w.section("stats", |w| {
        for v in ckpt.stats.mean.iter().chain(&ckpt.stats.std) {
            w.real(*v);
        }
    });
    w.section("latent", |w| {
        w.u32(ckpt.latent.dim as u32);
        match ckpt.latent.dist {
            LatentDist::Uniform { lo, hi } => {
                w.u32(0);
                w.real(lo);
                w.real(hi);
            }
            LatentDist::Gaussian { mean, std } => {
                w.u32(1);
                w.real(mean);
                w.real(std);
            }
        }
    });
    w.section("gen_cfg", |w| {
        w.u32(ckpt.gen_cfg.pose_dim as u32);
        w.u32(ckpt.gen_cfg.hidden as u32);
        w.u32(ckpt.gen_cfg.layers as u32);
        w.u32(ckpt.gen_cfg.z_dim as u32);
        w.real(ckpt.gen_cfg.z_proj_gain);
    });
    w.section("disc_cfg", |w| {
        w.u32(ckpt.disc_cfg.input_dim as u32);
        w.u32(ckpt.disc_cfg.width as u32);
        w.u32(ckpt.disc_cfg.depth as u32);
        w.real(ckpt.disc_cfg.leak);
    });
    w.section("quality_cfg", |w| {
        w.u32(ckpt.quality_cfg.pose_dim as u32);
        w.u32(ckpt.quality_cfg.hidden as u32);
        w.u32(ckpt.quality_cfg.layers as u32);
    });
    w.section("gen", |w| write_snapshot(w, &ckpt.gen));
    w.section("disc", |w| write_snapshot(w, &ckpt.disc));
    w.section("quality", |w| write_snapshot(w, &ckpt.quality));
    w.section("opt_g", |w| write_adam(w, &ckpt.opt_g));
    w.section("opt_d", |w| write_adam(w, &ckpt.opt_d));
    w.section("opt_q", |w| write_adam(w, &ckpt.opt_q));
    w.section("history", |w| {
        w.u64(ckpt.loss_history.len() as u64);
        for row in &ckpt.loss_history {
            w.u64(row.step as u64);
            for v in [
                row.d_total,
                row.g_total,
                row.q_total,
                row.consistency,
                row.diversity,
                row.energy,
                row.bone,
                row.d_gan,
                row.g_gan,
                row.q_gan,
                row.grad_penalty,
            ] {
                w.real(v);
            }
        }
    });
    w.buf
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { found: version, supported: CHECKPOINT_VERSION });
    }

    let mut s = r.section("meta")?;
    let epoch = s.u64()? as usize;
    let k_best = s.u64()? as usize;
    let m = s.u64()? as usize;
    let n = s.u64()? as usize;

    let mut s = r.section("skeleton")?;
    let name = s.string()?;
    let joint_count = s.u32()? as usize;
    let bone_count = s.u32()? as usize;
    let mut bones = Vec::with_capacity(bone_count);
    for _ in 0..bone_count {
        bones.push((s.u32()? as usize, s.u32()? as usize));
    }
    let skeleton = SkeletonSpec::new(name, joint_count, bones)?;

    let mut s = r.section("stats")?;
    let mut stats = NormalizationStats { mean: [0.0; 3], std: [1.0; 3] };
    for v in stats.mean.iter_mut().chain(stats.std.iter_mut()) {
        *v = s.real()?;
    }

    let mut s = r.section("latent")?;
    let dim = s.u32()? as usize;
    let dist = match s.u32()? {
        0 => LatentDist::Uniform { lo: s.real()?, hi: s.real()? },
        1 => LatentDist::Gaussian { mean: s.real()?, std: s.real()? },
        tag => return Err(Error::Corrupt(format!("unknown latent distribution tag {tag}"))),
    };
    let latent = LatentSpec { dim, dist };

    let mut s = r.section("gen_cfg")?;
    let gen_cfg = GeneratorConfig {
        pose_dim: s.u32()? as usize,
        hidden: s.u32()? as usize,
        layers: s.u32()? as usize,
        z_dim: s.u32()? as usize,
        z_proj_gain: s.real()?,
    };
    let mut s = r.section("disc_cfg")?;
    let disc_cfg = DiscriminatorConfig {
        input_dim: s.u32()? as usize,
        width: s.u32()? as usize,
        depth: s.u32()? as usize,
        leak: s.real()?,
    };
    let mut s = r.section("quality_cfg")?;
    let quality_cfg = QualityConfig {
        pose_dim: s.u32()? as usize,
        hidden: s.u32()? as usize,
        layers: s.u32()? as usize,
    };

    let gen = read_snapshot(&mut r.section("gen")?)?;
    let disc = read_snapshot(&mut r.section("disc")?)?;
    let quality = read_snapshot(&mut r.section("quality")?)?;
    let opt_g = read_adam(&mut r.section("opt_g")?)?;
    let opt_d = read_adam(&mut r.section("opt_d")?)?;
    let opt_q = read_adam(&mut r.section("opt_q")?)?;

    let mut s = r.section("history")?;
    let rows = s.u64()? as usize;
    if rows.saturating_mul(8 + 11 * 8) > s.buf.len() {
        return Err(Error::Corrupt(format!("history length {rows} exceeds section size")));
    }
    let mut loss_history = Vec::with_capacity(rows);
    for _ in 0..rows {
        loss_history.push(MetricRow {
            step: s.u64()? as usize,
            d_total: s.real()?,
            g_total: s.real()?,
            q_total: s.real()?,
            consistency: s.real()?,
            diversity: s.real()?,
            energy: s.real()?,
            bone: s.real()?,
            d_gan: s.real()?,
            g_gan: s.real()?,
            q_gan: s.real()?,
            grad_penalty: s.real()?,
        });
    }

    if !r.done() {
        return Err(Error::Corrupt("trailing bytes after final section".into()));
    }

    Ok(Checkpoint {
        epoch,
        k_best,
        m,
        n,
        skeleton,
        stats,
        latent,
        gen_cfg,
        disc_cfg,
        quality_cfg,
        gen,
        disc,
        quality,
        opt_g,
        opt_d,
        opt_q,
        loss_history,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    atomic_write(path, &write_checkpoint(ckpt))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synth_dataset;
    use crate::rng::Rng;
    use crate::train::{GanTrainer, TrainConfig};

    fn sample_checkpoint() -> Checkpoint {
        let mut rng = Rng::new(1);
        let (clips, skeleton) = make_synth_dataset(&[0, 1], 6, 70, &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 4,
            k_disc_iters: 1,
            segment_len: 30,
            gen_hidden: 6,
            gen_layers: 1,
            disc_width: 8,
            disc_depth: 2,
            quality_hidden: 6,
            quality_layers: 1,
            ..TrainConfig::desk()
        };
        let mut trainer = GanTrainer::new(&clips, &skeleton, cfg).unwrap();
        let row = trainer.outer_step().unwrap();
        trainer.checkpoint(1, 3, &[row])
    }

    #[test]
    fn byte_round_trip_is_exact() {
        let ckpt = sample_checkpoint();
        let bytes = write_checkpoint(&ckpt);
        let back = read_checkpoint(&bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.k_best, 3);
        assert_eq!(write_checkpoint(&back), bytes);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = write_checkpoint(&sample_checkpoint());
        for cut in [3usize, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(read_checkpoint(&bytes[..cut]), Err(Error::Corrupt(_))),
                "cut at {cut} was accepted"
            );
        }
    }

    #[test]
    fn tampered_length_is_rejected_without_partial_load() {
        let mut bytes = write_checkpoint(&sample_checkpoint());
        // The first section header sits right after magic + version: a
        // 4-byte string length, the name, then the u64 payload length.
        let name_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let len_at = 12 + name_len;
        bytes[len_at..len_at + 8].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(read_checkpoint(&bytes), Err(Error::Corrupt(_))));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut bytes = write_checkpoint(&sample_checkpoint());
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            read_checkpoint(&bytes),
            Err(Error::VersionMismatch { found: 7, supported: 1 })
        ));
    }
}
