//! Alternating GAN training with co-trained quality assessment.
//!
//! Each outer step runs k discriminator updates, then one generator update
//! and one quality update on a shared batch. The generator update draws two
//! latents per batch for the diversity term; the quality update scores a
//! detached copy of the generated batch so nothing flows back into the
//! generator.

use super::{Adam, Checkpoint, MetricRow, NetSnapshot, TrainConfig};
use crate::autodiff::{backward, concat, no_grad, Tensor};
use crate::data::{
    bone_lengths, compute_stats, normalize, sample_training_pair, split_segments,
    NormalizationStats, PoseSequence, SequencePair, SkeletonSpec,
};
use crate::loss::{
    bone_loss_batched, com_sequence, consistency_loss, d_gan_loss, d_total_loss, diversity_loss,
    energy_loss, g_gan_loss, g_total_loss, gradient_penalty, params_l2_norm, q_loss,
};
use crate::nets::{
    DiscriminatorParams, GeneratorParams, LatentSpec, Param, QualityParams,
};
use crate::rng::Rng;
use crate::{Error, Real, Result};

/// Per-epoch evaluation numbers.
#[derive(Debug, Clone)]
pub struct EpochEval {
    pub epoch: usize,
    /// Mean absolute bone-length error of predictions, meters.
    pub bone_error_m: Real,
    /// Mean quality probability on held-out real sequences.
    pub quality_real_mean: Real,
    /// Mean quality probability on generated sequences.
    pub quality_fake_mean: Real,
    /// Quality-selection count (after warmup), if evaluated.
    pub selection_count: Option<usize>,
}

/// Everything a GAN training run produces.
#[derive(Debug, Clone)]
pub struct GanTrainOutput {
    /// State at the end of training.
    pub checkpoint: Checkpoint,
    /// Checkpoint with the highest quality-selection count, if tracking
    /// started (after the warmup epochs).
    pub best: Option<Checkpoint>,
    pub metrics: Vec<MetricRow>,
    pub evals: Vec<EpochEval>,
    pub warnings: Vec<String>,
}

struct Batch {
    prior_steps: Vec<Tensor>,  // m tensors [B, D], normalized
    future_steps: Vec<Tensor>, // n tensors [B, D], normalized
    prior_flat: Tensor,        // [B, m * D]
    future_flat: Tensor,       // [B, n * D]
    /// Reference bone lengths of each sample's prior skeleton, meters.
    bone_refs: Tensor, // [B, bones]
}

/// Batch plus generated prediction handed from the generator update to the
/// quality update (shared-batch schedule).
pub struct QualityBatch {
    real_steps: Vec<Tensor>,
    fake_steps: Vec<Tensor>, // detached
}

impl QualityBatch {
    pub fn real_steps(&self) -> &[Tensor] {
        &self.real_steps
    }

    pub fn fake_steps(&self) -> &[Tensor] {
        &self.fake_steps
    }
}

/// Incremental GAN trainer. [`train_gan`] drives it through whole epochs;
/// callers that need finer control (isolation tests, interactive demos)
/// can run the step methods directly.
pub struct GanTrainer {
    pub gen: GeneratorParams,
    pub disc: DiscriminatorParams,
    pub quality: QualityParams,
    gen_params: Vec<Param>,
    disc_params: Vec<Param>,
    q_params: Vec<Param>,
    opt_g: Adam,
    opt_d: Adam,
    opt_q: Adam,
    segments: Vec<PoseSequence>,
    holdout: Vec<PoseSequence>,
    pub stats: NormalizationStats,
    pub skeleton: SkeletonSpec,
    pub cfg: TrainConfig,
    data_rng: Rng,
    z_rng: Rng,
    eps_rng: Rng,
    eval_rng: Rng,
    step_counter: usize,
    denorm_scale: Vec<Real>,
    denorm_offset: Vec<Real>,
    pub warnings: Vec<String>,
}

impl GanTrainer {
    pub fn new(clips: &[PoseSequence], skeleton: &SkeletonSpec, cfg: TrainConfig) -> Result<GanTrainer> {
        cfg.validate()?;
        if clips.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for clip in clips {
            if clip.joint_count() != skeleton.joint_count {
                return Err(Error::ShapeMismatch(format!(
                    "clip has {} joints, skeleton has {}",
                    clip.joint_count(),
                    skeleton.joint_count
                )));
            }
        }
        let stats = compute_stats(clips)?;
        let normalized: Vec<PoseSequence> = clips.iter().map(|c| normalize(c, &stats)).collect();

        let mut segments: Vec<PoseSequence> = normalized
            .iter()
            .flat_map(|c| split_segments(c, cfg.segment_len, cfg.frame_stride, None))
            .collect();
        if segments.is_empty() {
            return Err(Error::SegmentTooShort {
                need: (cfg.segment_len - 1) * cfg.frame_stride + 1,
                have: clips.iter().map(|c| c.len()).max().unwrap_or(0),
            });
        }

        let root = Rng::new(cfg.seed);
        let mut split_rng = root.stream(0xda7a);
        split_rng.shuffle(&mut segments);
        let holdout_len = ((segments.len() as Real * cfg.holdout_fraction) as usize)
            .min(segments.len().saturating_sub(1));
        let holdout = segments.split_off(segments.len() - holdout_len);

        let pose_dim = skeleton.joint_count * 3;
        let mut init_rng = root.stream(0x1217);
        let gen = GeneratorParams::new(cfg.generator_config(pose_dim), &mut init_rng);
        let disc = DiscriminatorParams::new(cfg.discriminator_config(pose_dim), &mut init_rng);
        let quality = QualityParams::new(cfg.quality_config(pose_dim), &mut init_rng);

        let gen_params = gen.params();
        let disc_params = disc.params();
        let q_params = quality.params();
        let opt_g = Adam::new(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, &gen_params);
        let opt_d = Adam::new(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, &disc_params);
        let opt_q = Adam::new(cfg.lr_quality, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, &q_params);

        let mut denorm_scale = Vec::with_capacity(pose_dim);
        let mut denorm_offset = Vec::with_capacity(pose_dim);
        for i in 0..pose_dim {
            denorm_scale.push(2.0 * stats.std[i % 3]);
            denorm_offset.push(stats.mean[i % 3]);
        }

        let mut warnings = Vec::new();
        if cfg.weights.lambda_gp == 0.0 {
            warnings.push(
                "unstable configuration: gradient penalty disabled (lambda_gp = 0); GAN training \
                 is not expected to converge"
                    .to_string(),
            );
        }

        Ok(GanTrainer {
            gen,
            disc,
            quality,
            gen_params,
            disc_params,
            q_params,
            opt_g,
            opt_d,
            opt_q,
            segments,
            holdout,
            stats,
            skeleton: skeleton.clone(),
            data_rng: root.stream(0xba7c),
            z_rng: root.stream(0x2a77),
            eps_rng: root.stream(0xe525),
            eval_rng: root.stream(0xe7a1),
            cfg,
            step_counter: 0,
            denorm_scale,
            denorm_offset,
            warnings,
        })
    }

    pub fn steps_per_epoch(&self) -> usize {
        (self.segments.len() / self.cfg.batch_size).max(1)
    }

    pub fn step_counter(&self) -> usize {
        self.step_counter
    }

    pub fn gen_params(&self) -> &[Param] {
        &self.gen_params
    }

    pub fn disc_params(&self) -> &[Param] {
        &self.disc_params
    }

    pub fn quality_params(&self) -> &[Param] {
        &self.q_params
    }

    fn pose_dim(&self) -> usize {
        self.skeleton.joint_count * 3
    }

    fn sample_batch(&mut self) -> Batch {
        let (m, n, b) = (self.cfg.m, self.cfg.n, self.cfg.batch_size);
        let d = self.pose_dim();
        let mut pairs: Vec<SequencePair> = Vec::with_capacity(b);
        for _ in 0..b {
            let seg = &self.segments[self.data_rng.below(self.segments.len())];
            pairs.push(
                sample_training_pair(seg, m, n, &mut self.data_rng)
                    .expect("segments are validated to hold m + n frames"),
            );
        }

        let step_tensor = |take: &dyn Fn(&SequencePair) -> &PoseSequence, t: usize| -> Tensor {
            let mut data = Vec::with_capacity(b * d);
            for pair in &pairs {
                data.extend_from_slice(take(pair).frame(t));
            }
            Tensor::from_vec(data, &[b, d])
        };
        let prior_steps: Vec<Tensor> = (0..m).map(|t| step_tensor(&|p| &p.prior, t)).collect();
        let future_steps: Vec<Tensor> = (0..n).map(|t| step_tensor(&|p| &p.future, t)).collect();

        let mut prior_flat = Vec::with_capacity(b * m * d);
        let mut future_flat = Vec::with_capacity(b * n * d);
        for pair in &pairs {
            prior_flat.extend_from_slice(pair.prior.values());
            future_flat.extend_from_slice(pair.future.values());
        }

        let bones = self.skeleton.bone_count();
        let mut refs = Vec::with_capacity(b * bones);
        for pair in &pairs {
            let meters = self.denorm_frame(pair.prior.frame(m - 1));
            refs.extend(bone_lengths(&meters, &self.skeleton));
        }

        Batch {
            prior_steps,
            future_steps,
            prior_flat: Tensor::from_vec(prior_flat, &[b, m * d]),
            future_flat: Tensor::from_vec(future_flat, &[b, n * d]),
            bone_refs: Tensor::from_vec(refs, &[b, bones]),
        }
    }

    fn denorm_frame(&self, frame: &[Real]) -> Vec<Real> {
        frame
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.denorm_scale[i] + self.denorm_offset[i])
            .collect()
    }

    /// Denormalizes per-step tensors on-graph (affine, differentiable).
    fn denorm_steps(&self, steps: &[Tensor]) -> Vec<Tensor> {
        let b = steps[0].shape()[0];
        let d = self.pose_dim();
        let scale = {
            let mut v = Vec::with_capacity(b * d);
            for _ in 0..b {
                v.extend_from_slice(&self.denorm_scale);
            }
            Tensor::from_vec(v, &[b, d])
        };
        let offset = {
            let mut v = Vec::with_capacity(b * d);
            for _ in 0..b {
                v.extend_from_slice(&self.denorm_offset);
            }
            Tensor::from_vec(v, &[b, d])
        };
        steps.iter().map(|s| s.mul(&scale).add(&offset)).collect()
    }

    /// One discriminator update (Eq.-1-style total). Generator and quality
    /// parameters are left untouched.
    pub fn d_step(&mut self) -> Result<(Real, Real, Real)> {
        let batch = self.sample_batch();
        let n = self.cfg.n;

        // Fake futures are produced without recording; the D step must not
        // build generator gradients.
        let z = self.cfg.latent.sample(self.cfg.batch_size, &mut self.z_rng);
        let fake_steps =
            no_grad(|| self.gen.forward(&batch.prior_steps, &z, n))?;
        let fake_flat = {
            let parts: Vec<&Tensor> = std::iter::once(&batch.prior_flat).chain(&fake_steps).collect();
            no_grad(|| concat(&parts, 1))
        };
        let real_flat = concat(&[&batch.prior_flat, &batch.future_flat], 1);

        let (p_real, _) = self.disc.forward(&real_flat)?;
        let (p_fake, _) = self.disc.forward(&fake_flat)?;
        let gan = d_gan_loss(&p_real, &p_fake);

        let disc = &self.disc;
        let score = |x: &Tensor| -> Result<Tensor> { Ok(disc.forward(x)?.0) };
        let gp = gradient_penalty(&score, &real_flat, &fake_flat, &mut self.eps_rng)?;

        let l2 = params_l2_norm(&self.disc_params);
        let total = d_total_loss(&gan, &gp, &l2, &self.cfg.weights);

        let wrt: Vec<&Tensor> = self.disc_params.iter().map(|p| &p.tensor).collect();
        let grads = backward(&total, &wrt)?;
        self.opt_d.step(&self.disc_params, &grads);
        Ok((total.value(), gan.value(), gp.value()))
    }

    /// One generator update. Returns the loss components and the batch plus
    /// detached prediction for the paired quality update.
    pub fn g_step(&mut self) -> Result<(GStepMetrics, QualityBatch)> {
        let batch = self.sample_batch();
        let n = self.cfg.n;
        let b = self.cfg.batch_size;

        let z1 = self.cfg.latent.sample(b, &mut self.z_rng);
        let z2 = self.cfg.latent.sample(b, &mut self.z_rng);
        let pred1 = self.gen.forward(&batch.prior_steps, &z1, n)?;
        let pred2 = self.gen.forward(&batch.prior_steps, &z2, n)?;

        let fake_flat = {
            let parts: Vec<&Tensor> = std::iter::once(&batch.prior_flat).chain(&pred1).collect();
            concat(&parts, 1)
        };
        let (p_fake, _) = self.disc.forward(&fake_flat)?;
        let gan = g_gan_loss(&p_fake);

        let last_prior = batch.prior_steps.last().expect("m >= 1");
        let pg = consistency_loss(&pred1, Some(last_prior), &self.cfg.weights)?;
        let div = diversity_loss(&pred1, &pred2, &self.cfg.weights);

        let pred1_m = self.denorm_steps(&pred1);
        let energy = energy_loss(&com_sequence(&pred1_m), &self.cfg.weights).value;
        let bone = bone_loss_batched(&pred1_m, &batch.bone_refs, &self.skeleton)?;

        let total = g_total_loss(&gan, &pg, &div, &energy, &bone, &self.cfg.weights);
        let wrt: Vec<&Tensor> = self.gen_params.iter().map(|p| &p.tensor).collect();
        let grads = backward(&total, &wrt)?;
        self.opt_g.step(&self.gen_params, &grads);

        let metrics = GStepMetrics {
            total: total.value(),
            gan: gan.value(),
            consistency: pg.value(),
            diversity: div.value(),
            energy: energy.value(),
            bone: bone.value(),
        };
        let real_steps = batch
            .prior_steps
            .iter()
            .chain(&batch.future_steps)
            .cloned()
            .collect();
        let fake_steps = batch
            .prior_steps
            .iter()
            .cloned()
            .chain(pred1.iter().map(|p| p.detach()))
            .collect();
        Ok((metrics, QualityBatch { real_steps, fake_steps }))
    }

    /// One quality-network update on the batch the generator just used. The
    /// fake sequence arrives detached, so no gradient reaches the generator.
    pub fn q_step(&mut self, qb: &QualityBatch) -> Result<(Real, Real)> {
        let p_real = self.quality.forward(&qb.real_steps)?.prob;
        let p_fake = self.quality.forward(&qb.fake_steps)?.prob;
        let l2 = params_l2_norm(&self.q_params);
        let total = q_loss(&p_real, &p_fake, &l2, &self.cfg.weights);
        let gan = d_gan_loss(&p_real, &p_fake);

        let wrt: Vec<&Tensor> = self.q_params.iter().map(|p| &p.tensor).collect();
        let grads = backward(&total, &wrt)?;
        self.opt_q.step(&self.q_params, &grads);
        Ok((total.value(), gan.value()))
    }

    /// k discriminator updates, one generator update, one quality update.
    pub fn outer_step(&mut self) -> Result<MetricRow> {
        let mut d_last = (0.0, 0.0, 0.0);
        for _ in 0..self.cfg.k_disc_iters {
            d_last = self.d_step()?;
        }
        let (g, qb) = self.g_step()?;
        let (q_total, q_gan) = self.q_step(&qb)?;
        self.step_counter += 1;

        let row = MetricRow {
            step: self.step_counter,
            d_total: d_last.0,
            g_total: g.total,
            q_total,
            consistency: g.consistency,
            diversity: g.diversity,
            energy: g.energy,
            bone: g.bone,
            d_gan: d_last.1,
            g_gan: g.gan,
            q_gan,
            grad_penalty: d_last.2,
        };
        if !row.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: self.step_counter,
                msg: format!(
                    "d_total={} g_total={} q_total={} gp={} (diagnostic snapshot of the step)",
                    row.d_total, row.g_total, row.q_total, row.grad_penalty
                ),
            });
        }
        Ok(row)
    }

    fn eval_set(&self) -> &[PoseSequence] {
        if self.holdout.is_empty() {
            &self.segments
        } else {
            &self.holdout
        }
    }

    /// Prior steps (and matching real windows) from the evaluation set, all
    /// stacked into one batch of up to `eval_samples` inputs.
    fn eval_inputs(&self) -> (Vec<Tensor>, Vec<Tensor>) {
        let (m, n) = (self.cfg.m, self.cfg.n);
        let d = self.pose_dim();
        let set = self.eval_set();
        let count = set.len().min(self.cfg.eval_samples).max(1);
        let mut prior_steps = Vec::with_capacity(m);
        let mut real_steps = Vec::with_capacity(m + n);
        for t in 0..m + n {
            let mut data = Vec::with_capacity(count * d);
            for seg in set.iter().take(count) {
                data.extend_from_slice(seg.frame(t));
            }
            let tensor = Tensor::from_vec(data, &[count, d]);
            if t < m {
                prior_steps.push(tensor.clone());
            }
            real_steps.push(tensor);
        }
        (prior_steps, real_steps)
    }

    /// Bone-length error (meters), quality means, and the selection count.
    pub fn epoch_eval(&mut self, epoch: usize, with_selection: bool) -> Result<EpochEval> {
        let (prior_steps, real_steps) = self.eval_inputs();
        let count = prior_steps[0].shape()[0];
        let n = self.cfg.n;

        let mut eval_rng = self.eval_rng.clone();
        let out = no_grad(|| -> Result<EpochEval> {
            let z = self.cfg.latent.sample(count, &mut eval_rng);
            let pred = self.gen.forward(&prior_steps, &z, n)?;

            // Bone error in meters against each sample's prior skeleton.
            let mut err_sum = 0.0;
            let mut err_count = 0usize;
            let last_prior = &prior_steps[self.cfg.m - 1];
            for s in 0..count {
                let prior_m = self.denorm_frame(&row(last_prior, s));
                let refs = bone_lengths(&prior_m, &self.skeleton);
                for step in &pred {
                    let frame_m = self.denorm_frame(&row(step, s));
                    for (a, b) in bone_lengths(&frame_m, &self.skeleton).iter().zip(&refs) {
                        err_sum += (a - b).abs();
                        err_count += 1;
                    }
                }
            }

            let q_real = self.quality.forward(&real_steps)?.prob;
            let fake_steps: Vec<Tensor> =
                prior_steps.iter().cloned().chain(pred.iter().cloned()).collect();
            let q_fake = self.quality.forward(&fake_steps)?.prob;

            let selection_count = if with_selection {
                Some(quality_selection_count(
                    &self.gen,
                    &self.quality,
                    &prior_steps,
                    n,
                    self.cfg.n_selection,
                    &self.cfg.latent,
                    &mut eval_rng,
                )?)
            } else {
                None
            };

            Ok(EpochEval {
                epoch,
                bone_error_m: err_sum / err_count.max(1) as Real,
                quality_real_mean: mean_of(&q_real),
                quality_fake_mean: mean_of(&q_fake),
                selection_count,
            })
        })?;
        self.eval_rng = eval_rng;
        Ok(out)
    }

    /// Snapshot of the full training state.
    pub fn checkpoint(&self, epoch: usize, k_best: usize, history: &[MetricRow]) -> Checkpoint {
        Checkpoint {
            epoch,
            k_best,
            m: self.cfg.m,
            n: self.cfg.n,
            skeleton: self.skeleton.clone(),
            stats: self.stats.clone(),
            latent: self.cfg.latent.clone(),
            gen_cfg: self.gen.cfg.clone(),
            disc_cfg: self.disc.cfg.clone(),
            quality_cfg: self.quality.cfg.clone(),
            gen: NetSnapshot::of(&self.gen_params),
            disc: NetSnapshot::of(&self.disc_params),
            quality: NetSnapshot::of(&self.q_params),
            opt_g: self.opt_g.state().clone(),
            opt_d: self.opt_d.state().clone(),
            opt_q: self.opt_q.state().clone(),
            loss_history: history.to_vec(),
        }
    }
}

fn row(t: &Tensor, index: usize) -> Vec<Real> {
    let cols = t.shape()[1];
    let v = t.to_vec();
    v[index * cols..(index + 1) * cols].to_vec()
}

fn mean_of(t: &Tensor) -> Real {
    let v = t.to_vec();
    v.iter().sum::<Real>() / v.len() as Real
}

#[derive(Debug, Clone, Copy)]
pub struct GStepMetrics {
    pub total: Real,
    pub gan: Real,
    pub consistency: Real,
    pub diversity: Real,
    pub energy: Real,
    pub bone: Real,
}

/// Threshold counting used by quality-driven selection: how many scores
/// exceed 1/2. Monotone: raising any score never lowers the count.
pub fn count_above_half(scores: &[Real]) -> usize {
    scores.iter().filter(|&&s| s > 0.5).count()
}

/// Draws `n_draws` latents per validation input, scores each prior-plus-
/// prediction sequence with the quality network, and counts scores above
/// 1/2. The checkpoint maximizing this count is the selected model.
pub fn quality_selection_count(
    gen: &GeneratorParams,
    quality: &QualityParams,
    prior_steps: &[Tensor],
    horizon: usize,
    n_draws: usize,
    latent: &LatentSpec,
    rng: &mut Rng,
) -> Result<usize> {
    let batch = prior_steps[0].shape()[0];
    no_grad(|| {
        let mut count = 0;
        for _ in 0..n_draws {
            let z = latent.sample(batch, rng);
            let pred = gen.forward(prior_steps, &z, horizon)?;
            let seq: Vec<Tensor> = prior_steps.iter().cloned().chain(pred).collect();
            let probs = quality.forward(&seq)?.prob;
            count += count_above_half(&probs.to_vec());
        }
        Ok(count)
    })
}

/// Full training run: validates the config, runs every epoch, evaluates
/// after each, and tracks the best checkpoint by selection count once the
/// warmup has passed. Non-finite losses abort with a diagnostic error.
pub fn train_gan(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    config: &TrainConfig,
) -> Result<GanTrainOutput> {
    let mut trainer = GanTrainer::new(clips, skeleton, config.clone())?;
    let steps = trainer.steps_per_epoch();
    let mut metrics: Vec<MetricRow> = Vec::with_capacity(steps * config.epochs);
    let mut evals: Vec<EpochEval> = Vec::with_capacity(config.epochs);
    let mut best: Option<Checkpoint> = None;
    let mut k_best = 0usize;

    for epoch in 1..=config.epochs {
        for _ in 0..steps {
            metrics.push(trainer.outer_step()?);
        }
        let with_selection = epoch > config.selection_warmup_epochs;
        let eval = trainer.epoch_eval(epoch, with_selection)?;
        if let Some(count) = eval.selection_count {
            if count > k_best || best.is_none() {
                k_best = count;
                best = Some(trainer.checkpoint(epoch, k_best, &metrics));
            }
        }
        evals.push(eval);
    }

    let warnings = trainer.warnings.clone();
    let checkpoint = trainer.checkpoint(config.epochs, k_best, &metrics);
    Ok(GanTrainOutput { checkpoint, best, metrics, evals, warnings })
}
