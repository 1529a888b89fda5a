//! Supervised action classification on the discriminator trunk.
//!
//! The same network is trained either from the GAN-pretrained trunk or from
//! random initialization; everything else (head init, data order, splits)
//! is derived from the seed identically, so the two arms differ only in the
//! trunk weights they start from.

use super::TrainConfig;
use crate::autodiff::{backward, no_grad, Tensor};
use crate::data::{compute_stats, normalize, split_segments, NormalizationStats, PoseSequence, SkeletonSpec};
use crate::loss::classification_loss;
use crate::nets::DiscriminatorParams;
use crate::rng::Rng;
use crate::train::Adam;
use crate::{Error, Real, Result};

/// Trunk initialization for the classification phase.
pub enum ClassifierInit<'a> {
    Random,
    Pretrained(&'a DiscriminatorParams),
}

#[derive(Debug, Clone)]
pub struct ClassifierRunResult {
    /// Per-epoch accuracy on the training split.
    pub train_accuracy: Vec<Real>,
    /// Per-epoch accuracy on the test split.
    pub test_accuracy: Vec<Real>,
    /// Final test confusion matrix, rows = true class, columns = predicted.
    pub confusion: Vec<Vec<usize>>,
    pub classes: usize,
    pub train_size: usize,
    pub test_size: usize,
}

struct Example {
    flat: Vec<Real>,
    label: usize,
}

fn examples_from_clips(
    clips: &[PoseSequence],
    stats: &NormalizationStats,
    cfg: &TrainConfig,
) -> Result<Vec<Example>> {
    let window = cfg.m + cfg.n;
    let mut out = Vec::new();
    for clip in clips {
        let label = clip.label.ok_or_else(|| {
            Error::InvalidConfig("classification needs a label on every clip".into())
        })?;
        let normed = normalize(clip, stats);
        for seg in split_segments(&normed, cfg.segment_len, cfg.frame_stride, None) {
            let w = seg.window(0, window);
            out.push(Example { flat: w.values().to_vec(), label });
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Stratified split: within each class the examples are shuffled and the
/// last `test_fraction` go to the test side.
fn stratified_split(
    examples: Vec<Example>,
    classes: usize,
    test_fraction: Real,
    rng: &mut Rng,
) -> Result<(Vec<Example>, Vec<Example>)> {
    let mut per_class: Vec<Vec<Example>> = (0..classes).map(|_| Vec::new()).collect();
    for e in examples {
        per_class[e.label].push(e);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for bucket in per_class.iter_mut() {
        if bucket.is_empty() {
            continue;
        }
        rng.shuffle(bucket);
        let n_test = ((bucket.len() as Real * test_fraction).round() as usize)
            .clamp(1, bucket.len().saturating_sub(1).max(1));
        if bucket.len() < 2 {
            return Err(Error::InvalidConfig(
                "every class needs at least two examples to split".into(),
            ));
        }
        for (i, e) in bucket.drain(..).enumerate() {
            if i < n_test {
                test.push(e);
            } else {
                train.push(e);
            }
        }
    }
    Ok((train, test))
}

fn batch_tensor(examples: &[Example], indices: &[usize]) -> (Tensor, Vec<usize>) {
    let dim = examples[indices[0]].flat.len();
    let mut data = Vec::with_capacity(indices.len() * dim);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        data.extend_from_slice(&examples[i].flat);
        labels.push(examples[i].label);
    }
    (Tensor::from_vec(data, &[indices.len(), dim]), labels)
}

fn evaluate(
    net: &DiscriminatorParams,
    examples: &[Example],
    classes: usize,
    batch: usize,
) -> Result<(Real, Vec<Vec<usize>>)> {
    let mut correct = 0usize;
    let mut confusion = vec![vec![0usize; classes]; classes];
    no_grad(|| -> Result<()> {
        for chunk in (0..examples.len()).collect::<Vec<_>>().chunks(batch) {
            let (x, labels) = batch_tensor(examples, chunk);
            let scores = net.classify(&x)?;
            let s = scores.to_vec();
            for (b, &label) in labels.iter().enumerate() {
                let row = &s[b * classes..(b + 1) * classes];
                let pred = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                confusion[label][pred] += 1;
                if pred == label {
                    correct += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok((correct as Real / examples.len() as Real, confusion))
}

/// Trains the classification network and logs per-epoch accuracy. `stats`
/// lets the caller force the normalization the trunk was pretrained with;
/// when absent, statistics are computed from `clips`.
pub fn train_classifier(
    clips: &[PoseSequence],
    skeleton: &SkeletonSpec,
    init: ClassifierInit<'_>,
    config: &TrainConfig,
    stats: Option<&NormalizationStats>,
) -> Result<ClassifierRunResult> {
    config.validate()?;
    let owned_stats;
    let stats = match stats {
        Some(s) => s,
        None => {
            owned_stats = compute_stats(clips)?;
            &owned_stats
        }
    };

    let examples = examples_from_clips(clips, stats, config)?;
    let classes = examples.iter().map(|e| e.label).max().unwrap() + 1;

    let root = Rng::new(config.seed);
    let (train, test) =
        stratified_split(examples, classes, config.test_fraction, &mut root.stream(0x59f1))?;

    let pose_dim = skeleton.joint_count * 3;
    let mut net = DiscriminatorParams::new(
        config.discriminator_config(pose_dim),
        &mut root.stream(0x7210),
    );
    if let ClassifierInit::Pretrained(src) = &init {
        if src.cfg != net.cfg {
            return Err(Error::InvalidConfig(
                "pretrained trunk configuration differs from the classifier configuration".into(),
            ));
        }
        net.copy_trunk_from(src);
    }
    net.init_class_head(config.class_head_hidden, classes, &mut root.stream(0x4ead));

    let params = net.classifier_params();
    let mut opt = Adam::new(
        config.classifier_lr,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
        &params,
    );

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_rng = root.stream(0xe60c);
    let mut train_accuracy = Vec::with_capacity(config.classifier_epochs);
    let mut test_accuracy = Vec::with_capacity(config.classifier_epochs);
    let mut confusion = vec![vec![0usize; classes]; classes];

    for _ in 0..config.classifier_epochs {
        epoch_rng.shuffle(&mut order);
        for chunk in order.chunks(config.classifier_batch) {
            let (x, labels) = batch_tensor(&train, chunk);
            let scores = net.classify(&x)?;
            let loss = classification_loss(&scores, &labels)?;
            let wrt: Vec<&Tensor> = params.iter().map(|p| &p.tensor).collect();
            let grads = backward(&loss, &wrt)?;
            opt.step(&params, &grads);
        }
        let (train_acc, _) = evaluate(&net, &train, classes, config.classifier_batch)?;
        let (test_acc, conf) = evaluate(&net, &test, classes, config.classifier_batch)?;
        train_accuracy.push(train_acc);
        test_accuracy.push(test_acc);
        confusion = conf;
    }

    Ok(ClassifierRunResult {
        train_accuracy,
        test_accuracy,
        confusion,
        classes,
        train_size: train.len(),
        test_size: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synth_dataset;

    fn small_config() -> TrainConfig {
        TrainConfig {
            classifier_epochs: 4,
            classifier_batch: 8,
            classifier_lr: 1e-3,
            disc_width: 24,
            disc_depth: 2,
            class_head_hidden: 12,
            segment_len: 30,
            frame_stride: 2,
            ..TrainConfig::desk()
        }
    }

    #[test]
    fn identical_seeds_give_identical_curves() {
        let mut rng = Rng::new(3);
        let (clips, skeleton) = make_synth_dataset(&[0, 1], 12, 70, &mut rng).unwrap();
        let cfg = small_config();
        let a = train_classifier(&clips, &skeleton, ClassifierInit::Random, &cfg, None).unwrap();
        let b = train_classifier(&clips, &skeleton, ClassifierInit::Random, &cfg, None).unwrap();
        assert_eq!(a.train_accuracy, b.train_accuracy);
        assert_eq!(a.test_accuracy, b.test_accuracy);
        assert_eq!(a.confusion, b.confusion);
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let mut rng = Rng::new(4);
        let (clips, skeleton) = make_synth_dataset(&[0, 1], 10, 70, &mut rng).unwrap();
        let cfg = small_config();
        let out = train_classifier(&clips, &skeleton, ClassifierInit::Random, &cfg, None).unwrap();
        let total: usize = out.confusion.iter().flatten().sum();
        assert_eq!(total, out.test_size);
        for row in &out.confusion {
            let s: usize = row.iter().sum();
            assert!(s > 0, "every class must appear in the test split");
        }
    }

    #[test]
    fn unlabeled_clip_is_an_error() {
        let mut rng = Rng::new(5);
        let (mut clips, skeleton) = make_synth_dataset(&[0], 4, 70, &mut rng).unwrap();
        clips[0].label = None;
        let cfg = small_config();
        assert!(train_classifier(&clips, &skeleton, ClassifierInit::Random, &cfg, None).is_err());
    }
}
