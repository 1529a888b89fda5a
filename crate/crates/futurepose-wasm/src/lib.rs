//! Browser demo bindings.
//!
//! Three interactive surfaces over the core crate:
//! - synthetic motion clips for any class/seed (stick-figure playback),
//! - a live miniature GAN training session with per-step losses,
//! - multiple predicted futures for one observed prior, each scored by the
//!   quality network.
//!
//! All returns are flat `f64` buffers or small JSON strings so the page
//! needs nothing beyond `wasm-bindgen`.

use futurepose::autodiff::{no_grad, Tensor};
use futurepose::data::{make_synth_dataset, synth_motion, synth_skeleton, SYNTH_CLASS_COUNT};
use futurepose::nets::{LatentDist, LatentSpec};
use futurepose::rng::Rng;
use futurepose::train::{GanTrainer, TrainConfig};
use wasm_bindgen::prelude::*;

/// Number of joints in the demo skeleton.
#[wasm_bindgen]
pub fn joint_count() -> u32 {
    synth_skeleton().joint_count as u32
}

/// Bone topology as a flat [parent, child, parent, child, ...] list.
#[wasm_bindgen]
pub fn bone_list() -> Vec<u32> {
    synth_skeleton()
        .bones
        .iter()
        .flat_map(|&(a, b)| [a as u32, b as u32])
        .collect()
}

#[wasm_bindgen]
pub fn class_count() -> u32 {
    SYNTH_CLASS_COUNT as u32
}

#[wasm_bindgen]
pub fn class_label(class_id: u32) -> String {
    futurepose::data::class_name(class_id as usize)
        .unwrap_or("unknown")
        .to_string()
}

/// One synthetic clip, flattened frame-major: frames x joints x 3 meters.
#[wasm_bindgen]
pub fn synth_clip(class_id: u32, frames: u32, seed: u64) -> Result<Vec<f64>, String> {
    let spec = synth_skeleton();
    let clip = synth_motion(class_id as usize, frames as usize, &spec, &mut Rng::new(seed))
        .map_err(|e| e.to_string())?;
    Ok(clip.values().to_vec())
}

fn demo_config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        epochs: 1, // the page drives epochs itself
        batch_size: 8,
        k_disc_iters: 5,
        lr: 5e-4,
        lr_quality: 2.5e-4,
        segment_len: 32,
        frame_stride: 2,
        latent: LatentSpec { dim: 6, dist: LatentDist::Uniform { lo: -1.0, hi: 1.0 } },
        n_selection: 4,
        selection_warmup_epochs: 1,
        eval_samples: 6,
        gen_hidden: 24,
        gen_layers: 1,
        disc_width: 48,
        disc_depth: 3,
        quality_hidden: 48,
        quality_layers: 1,
        class_head_hidden: 16,
        ..TrainConfig::default()
    }
}

/// A live miniature training session over a synthetic two-class dataset.
#[wasm_bindgen]
pub struct DemoSession {
    trainer: GanTrainer,
    eval_prior: Vec<Tensor>,  // m steps, [1, pose_dim], normalized
    eval_future: Vec<Tensor>, // n steps (ground truth)
    epoch: usize,
}

#[wasm_bindgen]
impl DemoSession {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<DemoSession, String> {
        let mut data_rng = Rng::new(seed ^ 0x5eed);
        let (clips, skeleton) =
            make_synth_dataset(&[0, 1], 30, 70, &mut data_rng).map_err(|e| e.to_string())?;
        let trainer = GanTrainer::new(&clips, &skeleton, demo_config(seed))
            .map_err(|e| e.to_string())?;

        // A fixed evaluation window from the first clip: prior for the
        // prediction panel, future as the ground-truth reference.
        let cfg = &trainer.cfg;
        let normed = futurepose::data::normalize(&clips[0], &trainer.stats);
        let segs = futurepose::data::split_segments(&normed, cfg.segment_len, cfg.frame_stride, None);
        let window = &segs[0];
        let d = skeleton.joint_count * 3;
        let eval_prior: Vec<Tensor> = (0..cfg.m)
            .map(|t| Tensor::from_vec(window.frame(t).to_vec(), &[1, d]))
            .collect();
        let eval_future: Vec<Tensor> = (cfg.m..cfg.m + cfg.n)
            .map(|t| Tensor::from_vec(window.frame(t).to_vec(), &[1, d]))
            .collect();

        Ok(DemoSession { trainer, eval_prior, eval_future, epoch: 0 })
    }

    pub fn m(&self) -> u32 {
        self.trainer.cfg.m as u32
    }

    pub fn n(&self) -> u32 {
        self.trainer.cfg.n as u32
    }

    pub fn steps_per_epoch(&self) -> u32 {
        self.trainer.steps_per_epoch() as u32
    }

    pub fn step_count(&self) -> u32 {
        self.trainer.step_counter() as u32
    }

    /// One outer optimizer step; returns the loss row as JSON.
    pub fn step(&mut self) -> Result<String, String> {
        let row = self.trainer.outer_step().map_err(|e| e.to_string())?;
        Ok(format!(
            "{{\"step\":{},\"d\":{:.6},\"g\":{:.6},\"q\":{:.6},\"gp\":{:.6},\"bone\":{:.6},\"diversity\":{:.6}}}",
            row.step, row.d_total, row.g_total, row.q_total, row.grad_penalty, row.bone, row.diversity
        ))
    }

    /// Epoch-level evaluation (bone error, quality means) as JSON.
    pub fn evaluate(&mut self) -> Result<String, String> {
        self.epoch += 1;
        let eval = self
            .trainer
            .epoch_eval(self.epoch, true)
            .map_err(|e| e.to_string())?;
        Ok(format!(
            "{{\"epoch\":{},\"bone_error_m\":{:.6},\"quality_real\":{:.4},\"quality_fake\":{:.4},\"selection\":{}}}",
            eval.epoch,
            eval.bone_error_m,
            eval.quality_real_mean,
            eval.quality_fake_mean,
            eval.selection_count.map_or("null".to_string(), |c| c.to_string())
        ))
    }

    fn denorm_flat(&self, steps: &[Tensor]) -> Vec<f64> {
        let stats = &self.trainer.stats;
        let mut out = Vec::new();
        for s in steps {
            for (i, v) in s.to_vec().into_iter().enumerate() {
                let axis = i % 3;
                out.push(v * 2.0 * stats.std[axis] + stats.mean[axis]);
            }
        }
        out
    }

    /// The observed prior, denormalized: m x joints x 3.
    pub fn prior(&self) -> Vec<f64> {
        self.denorm_flat(&self.eval_prior)
    }

    /// The real continuation, denormalized: n x joints x 3.
    pub fn ground_truth(&self) -> Vec<f64> {
        self.denorm_flat(&self.eval_future)
    }

    /// `samples` predicted futures for the fixed prior, concatenated:
    /// samples x n x joints x 3, denormalized.
    pub fn predict(&self, samples: u32, z_seed: u64) -> Result<Vec<f64>, String> {
        let mut rng = Rng::new(z_seed);
        let mut out = Vec::new();
        for _ in 0..samples {
            let z = self.trainer.cfg.latent.sample(1, &mut rng);
            let pred = no_grad(|| {
                self.trainer
                    .gen
                    .forward(&self.eval_prior, &z, self.trainer.cfg.n)
            })
            .map_err(|e| e.to_string())?;
            out.extend(self.denorm_flat(&pred));
        }
        Ok(out)
    }

    /// Quality probability of each predicted future (same draws as
    /// [`DemoSession::predict`] for the same seed), then of the real
    /// continuation as the last element.
    pub fn quality_scores(&self, samples: u32, z_seed: u64) -> Result<Vec<f64>, String> {
        let mut rng = Rng::new(z_seed);
        let mut out = Vec::new();
        for _ in 0..samples {
            let z = self.trainer.cfg.latent.sample(1, &mut rng);
            let score = no_grad(|| -> futurepose::Result<f64> {
                let pred = self
                    .trainer
                    .gen
                    .forward(&self.eval_prior, &z, self.trainer.cfg.n)?;
                let seq: Vec<Tensor> =
                    self.eval_prior.iter().cloned().chain(pred).collect();
                Ok(self.trainer.quality.forward(&seq)?.prob.value())
            })
            .map_err(|e| e.to_string())?;
            out.push(score);
        }
        let real = no_grad(|| -> futurepose::Result<f64> {
            let seq: Vec<Tensor> = self
                .eval_prior
                .iter()
                .chain(self.eval_future.iter())
                .cloned()
                .collect();
            Ok(self.trainer.quality.forward(&seq)?.prob.value())
        })
        .map_err(|e| e.to_string())?;
        out.push(real);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_clip_shape() {
        let v = synth_clip(0, 12, 1).unwrap();
        assert_eq!(v.len(), 12 * 8 * 3);
        assert!(synth_clip(99, 12, 1).is_err());
    }

    #[test]
    fn session_steps_and_predicts() {
        let mut s = DemoSession::new(1).unwrap();
        let row = s.step().unwrap();
        assert!(row.contains("\"step\":1"));
        let eval = s.evaluate().unwrap();
        assert!(eval.contains("bone_error_m"));

        let pred = s.predict(2, 9).unwrap();
        assert_eq!(pred.len(), 2 * s.n() as usize * 8 * 3);
        let scores = s.quality_scores(2, 9).unwrap();
        assert_eq!(scores.len(), 3);
        for q in scores {
            assert!((0.0..=1.0).contains(&q));
        }
    }
}
