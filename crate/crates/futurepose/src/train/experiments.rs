//! Experiment runners: transfer versus scratch, unseen classes, reduced
//! labeled data, and loss-term ablations.

use super::{train_classifier, train_gan, ClassifierInit, ClassifierRunResult, GanTrainOutput, TrainConfig};
use crate::autodiff::{no_grad, Tensor};
use crate::data::{normalize, split_segments, PoseSequence, SkeletonSpec};
use crate::nets::{GeneratorParams, LatentSpec};
use crate::rng::Rng;
use crate::train::Checkpoint;
use crate::{Error, Real, Result};

/// The two classification arms of a comparison.
#[derive(Debug, Clone)]
pub struct PairedClassifierRuns {
    pub pretrained: ClassifierRunResult,
    pub scratch: ClassifierRunResult,
}

/// First 1-based epoch at which the accuracy curve reaches `threshold`.
pub fn epochs_to_reach(curve: &[Real], threshold: Real) -> Option<usize> {
    curve.iter().position(|&a| a >= threshold).map(|i| i + 1)
}

/// First 1-based epoch from which the curve stays at or above `threshold`
/// to the end. Less sensitive to single-epoch spikes than
/// [`epochs_to_reach`] on noisy curves.
pub fn epochs_to_sustain(curve: &[Real], threshold: Real) -> Option<usize> {
    match curve.iter().rposition(|&a| a < threshold) {
        None if curve.is_empty() => None,
        None => Some(1),
        Some(last_below) if last_below + 1 < curve.len() => Some(last_below + 2),
        Some(_) => None,
    }
}

fn paired_runs(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    ckpt: &Checkpoint,
    config: &TrainConfig,
) -> Result<PairedClassifierRuns> {
    let (_, disc, _) = ckpt.instantiate();
    let pretrained = train_classifier(
        clips,
        skeleton,
        ClassifierInit::Pretrained(&disc),
        config,
        Some(&ckpt.stats),
    )?;
    let scratch =
        train_classifier(clips, skeleton, ClassifierInit::Random, config, Some(&ckpt.stats))?;
    Ok(PairedClassifierRuns { pretrained, scratch })
}

#[derive(Debug, Clone)]
pub struct UnseenClassOutput {
    pub gan: GanTrainOutput,
    pub runs: PairedClassifierRuns,
    pub holdout_classes: Vec<usize>,
}

/// GAN phase without the holdout classes; classification phase with every
/// class restored.
pub fn run_unseen_class_experiment(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    holdout_classes: &[usize],
    config: &TrainConfig,
) -> Result<UnseenClassOutput> {
    if holdout_classes.is_empty() {
        return Err(Error::InvalidConfig("holdout class set is empty".into()));
    }
    let gan_clips: Vec<PoseSequence> = clips
        .iter()
        .filter(|c| c.label.is_none_or(|l| !holdout_classes.contains(&l)))
        .cloned()
        .collect();
    if gan_clips.is_empty() {
        return Err(Error::InvalidConfig(
            "holdout class set covers the whole dataset".into(),
        ));
    }
    debug_assert!(gan_clips
        .iter()
        .all(|c| c.label.is_none_or(|l| !holdout_classes.contains(&l))));

    let gan = train_gan(&gan_clips, skeleton, config)?;
    let runs = paired_runs(clips, skeleton, &gan.checkpoint, config)?;
    Ok(UnseenClassOutput { gan, runs, holdout_classes: holdout_classes.to_vec() })
}

/// Classification on a stratified random subset of the labeled data; the
/// GAN checkpoint is reused unchanged.
pub fn run_reduced_data_experiment(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    fraction: Real,
    ckpt: &Checkpoint,
    config: &TrainConfig,
) -> Result<PairedClassifierRuns> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("fraction {fraction} not in (0, 1]")));
    }
    let subset = stratified_subset(clips, fraction, &mut Rng::new(config.seed).stream(0xf7ac))?;
    paired_runs(&subset, skeleton, ckpt, config)
}

/// Per class, keeps round(count * fraction) clips chosen at random.
pub fn stratified_subset(
    clips: &[PoseSequence],
    fraction: Real,
    rng: &mut Rng,
) -> Result<Vec<PoseSequence>> {
    let mut by_class: Vec<(usize, Vec<&PoseSequence>)> = Vec::new();
    for clip in clips {
        let label = clip
            .label
            .ok_or_else(|| Error::InvalidConfig("unlabeled clip in stratified subset".into()))?;
        match by_class.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(clip),
            None => by_class.push((label, vec![clip])),
        }
    }
    let mut out = Vec::new();
    for (label, mut bucket) in by_class {
        let keep = ((bucket.len() as Real) * fraction).round() as usize;
        if keep == 0 {
            return Err(Error::InvalidConfig(format!(
                "fraction {fraction} leaves class {label} empty"
            )));
        }
        rng.shuffle(&mut bucket);
        out.extend(bucket.into_iter().take(keep).cloned());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationToggle {
    Diversity,
    Consistency,
    GradientPenalty,
}

impl AblationToggle {
    pub fn name(&self) -> &'static str {
        match self {
            AblationToggle::Diversity => "diversity",
            AblationToggle::Consistency => "consistency",
            AblationToggle::GradientPenalty => "gradient-penalty",
        }
    }

    /// Zeroes the toggled term's weight.
    pub fn apply(&self, config: &TrainConfig) -> TrainConfig {
        let mut cfg = config.clone();
        match self {
            AblationToggle::Diversity => cfg.weights.alpha_d = 0.0,
            AblationToggle::Consistency => cfg.weights.alpha_pg = 0.0,
            AblationToggle::GradientPenalty => cfg.weights.lambda_gp = 0.0,
        }
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub toggle: AblationToggle,
    /// The exact configuration trained with (toggled weight is zero).
    pub config_used: TrainConfig,
    /// None when training aborted on a non-finite loss.
    pub gan: Option<GanTrainOutput>,
    pub converged: bool,
    pub divergence: Option<String>,
    /// Mean pairwise distance between predictions across latent draws.
    pub diversity_metric: Option<Real>,
    /// Largest single-coordinate jump between consecutive frames, including
    /// the transition from the last prior pose.
    pub consistency_metric: Option<Real>,
}

/// Trains with the toggled loss term zeroed and reports the post-hoc
/// diversity and smoothness of its predictions.
pub fn run_ablation(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    config: &TrainConfig,
    toggle: AblationToggle,
) -> Result<AblationReport> {
    let config_used = toggle.apply(config);
    match train_gan(clips, skeleton, &config_used) {
        Ok(gan) => {
            let (gen, _, _) = gan.checkpoint.instantiate();
            let priors = eval_priors(clips, skeleton, &gan.checkpoint, &config_used, 8)?;
            let mut rng = Rng::new(config_used.seed).stream(0xab1a);
            let diversity = prediction_diversity(
                &gen,
                &priors,
                config_used.n,
                8,
                &gan.checkpoint.latent,
                &mut rng,
            )?;
            let consistency = {
                let z = gan.checkpoint.latent.sample(priors[0].shape()[0], &mut rng);
                let pred = no_grad(|| gen.forward(&priors, &z, config_used.n))?;
                max_interframe_displacement(priors.last().unwrap(), &pred)
            };
            Ok(AblationReport {
                toggle,
                config_used,
                gan: Some(gan),
                converged: true,
                divergence: None,
                diversity_metric: Some(diversity),
                consistency_metric: Some(consistency),
            })
        }
        Err(Error::NonFiniteLoss { step, msg }) => Ok(AblationReport {
            toggle,
            config_used,
            gan: None,
            converged: false,
            divergence: Some(format!("step {step}: {msg}")),
            diversity_metric: None,
            consistency_metric: None,
        }),
        Err(e) => Err(e),
    }
}

/// Prior windows from the first segments of the dataset, normalized with
/// the checkpoint's statistics, stacked as per-step [count, pose_dim].
pub fn eval_priors(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    ckpt: &Checkpoint,
    config: &TrainConfig,
    count: usize,
) -> Result<Vec<Tensor>> {
    let d = skeleton.joint_count * 3;
    let mut rows: Vec<PoseSequence> = Vec::new();
    for clip in clips {
        let normed = normalize(clip, &ckpt.stats);
        for seg in split_segments(&normed, config.segment_len, config.frame_stride, None) {
            rows.push(seg.window(0, config.m));
            if rows.len() == count {
                break;
            }
        }
        if rows.len() == count {
            break;
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((0..config.m)
        .map(|t| {
            let mut data = Vec::with_capacity(rows.len() * d);
            for r in &rows {
                data.extend_from_slice(r.frame(t));
            }
            Tensor::from_vec(data, &[rows.len(), d])
        })
        .collect())
}

/// Mean pairwise L2 distance between predictions for `draws` latent
/// samples, averaged over inputs. Near zero means the latent is ignored.
pub fn prediction_diversity(
    gen: &GeneratorParams,
    prior_steps: &[Tensor],
    horizon: usize,
    draws: usize,
    latent: &LatentSpec,
    rng: &mut Rng,
) -> Result<Real> {
    assert!(draws >= 2);
    let batch = prior_steps[0].shape()[0];
    let preds: Vec<Vec<Vec<Real>>> = no_grad(|| -> Result<_> {
        (0..draws)
            .map(|_| {
                let z = latent.sample(batch, rng);
                let steps = gen.forward(prior_steps, &z, horizon)?;
                Ok(steps.iter().map(|s| s.to_vec()).collect())
            })
            .collect()
    })?;

    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..draws {
        for j in (i + 1)..draws {
            let mut sq = 0.0;
            for (a, b) in preds[i].iter().zip(&preds[j]) {
                for (x, y) in a.iter().zip(b) {
                    sq += (x - y) * (x - y);
                }
            }
            total += (sq / batch as Real).sqrt();
            pairs += 1;
        }
    }
    Ok(total / pairs as Real)
}

/// Largest absolute coordinate change between consecutive frames of a
/// prediction, including the transition from the last prior pose.
pub fn max_interframe_displacement(prior_last: &Tensor, pred: &[Tensor]) -> Real {
    let mut prev = prior_last.to_vec();
    let mut worst = 0.0 as Real;
    for step in pred {
        let cur = step.to_vec();
        for (a, b) in prev.iter().zip(&cur) {
            worst = worst.max((a - b).abs());
        }
        prev = cur;
    }
    worst
}
