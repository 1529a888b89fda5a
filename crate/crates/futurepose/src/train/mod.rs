//! Training: the alternating GAN loop, quality-driven model selection, and
//! the supervised classification phase with its experiment runners.

mod adam;
mod classify;
mod experiments;
mod gan;

pub use adam::{Adam, AdamState};
pub use classify::{train_classifier, ClassifierInit, ClassifierRunResult};
pub use experiments::{
    epochs_to_reach, epochs_to_sustain, eval_priors, max_interframe_displacement, prediction_diversity,
    run_ablation, run_reduced_data_experiment, run_unseen_class_experiment, stratified_subset,
    AblationReport, AblationToggle, PairedClassifierRuns, UnseenClassOutput,
};
pub use gan::{
    count_above_half, quality_selection_count, train_gan, EpochEval, GanTrainOutput, GanTrainer,
    QualityBatch,
};

use crate::data::{NormalizationStats, SkeletonSpec};
use crate::loss::LossWeights;
use crate::nets::{
    DiscriminatorConfig, DiscriminatorParams, GeneratorConfig, GeneratorParams, LatentSpec,
    Param, QualityConfig, QualityParams,
};
use crate::rng::Rng;
use crate::{Error, Real, Result};

/// Schedule constants and model sizes for both training phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Discriminator iterations per generator/quality iteration.
    pub k_disc_iters: usize,
    /// Learning rate for discriminator and generator.
    pub lr: Real,
    /// Learning rate for the quality network (half of `lr` by default).
    pub lr_quality: Real,
    pub adam_beta1: Real,
    pub adam_beta2: Real,
    pub adam_eps: Real,
    pub epochs: usize,
    pub batch_size: usize,
    /// Observed prior length.
    pub m: usize,
    /// Prediction horizon.
    pub n: usize,
    pub latent: LatentSpec,
    pub weights: LossWeights,
    /// Latent draws per validation input during model selection.
    pub n_selection: usize,
    /// Epochs before best-model tracking starts.
    pub selection_warmup_epochs: usize,
    pub seed: u64,

    /// Frames per training segment after subsampling.
    pub segment_len: usize,
    /// Keep every `frame_stride`-th source frame.
    pub frame_stride: usize,
    /// Fraction of segments held out for evaluation and selection.
    pub holdout_fraction: Real,
    /// Cap on holdout inputs used per evaluation pass.
    pub eval_samples: usize,

    pub gen_hidden: usize,
    pub gen_layers: usize,
    pub z_proj_gain: Real,
    pub disc_width: usize,
    pub disc_depth: usize,
    pub disc_leak: Real,
    pub quality_hidden: usize,
    pub quality_layers: usize,

    pub class_head_hidden: usize,
    pub classifier_epochs: usize,
    pub classifier_lr: Real,
    pub classifier_batch: usize,
    /// Fraction of labeled data reserved as the classification test split.
    pub test_fraction: Real,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            k_disc_iters: 10,
            lr: 5e-5,
            lr_quality: 2.5e-5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 300,
            batch_size: 32,
            m: 10,
            n: 20,
            latent: LatentSpec::default(),
            weights: LossWeights::default(),
            n_selection: 16,
            selection_warmup_epochs: 30,
            seed: 0,
            segment_len: 32,
            frame_stride: 2,
            holdout_fraction: 0.1,
            eval_samples: 16,
            gen_hidden: 256,
            gen_layers: 2,
            z_proj_gain: 0.1,
            disc_width: 512,
            disc_depth: 6,
            disc_leak: 0.2,
            quality_hidden: 128,
            quality_layers: 2,
            class_head_hidden: 256,
            classifier_epochs: 40,
            classifier_lr: 5e-5,
            classifier_batch: 32,
            test_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    /// Small preset sized for minutes-long runs on a laptop: tiny networks,
    /// a short latent, and a faster learning rate. The quality network is
    /// deliberately wider than the generator so it stays ahead of the
    /// improving fakes instead of collapsing toward 0.5.
    pub fn desk() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 16,
            lr: 5e-4,
            lr_quality: 2.5e-4,
            latent: LatentSpec {
                dim: 8,
                dist: crate::nets::LatentDist::Uniform { lo: -1.0, hi: 1.0 },
            },
            n_selection: 8,
            selection_warmup_epochs: 2,
            eval_samples: 12,
            gen_hidden: 32,
            gen_layers: 1,
            disc_width: 64,
            disc_depth: 4,
            quality_hidden: 64,
            quality_layers: 1,
            class_head_hidden: 32,
            classifier_epochs: 30,
            classifier_lr: 3e-4,
            classifier_batch: 16,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_disc_iters < 1 {
            return Err(Error::InvalidConfig("k_disc_iters must be >= 1".into()));
        }
        if self.lr <= 0.0 || self.lr_quality <= 0.0 || self.classifier_lr <= 0.0 {
            return Err(Error::InvalidConfig("learning rates must be > 0".into()));
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("m and n must be >= 1".into()));
        }
        if self.segment_len < self.m + self.n {
            return Err(Error::InvalidConfig(format!(
                "segment_len {} shorter than m + n = {}",
                self.segment_len,
                self.m + self.n
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch_size and epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidConfig("holdout_fraction must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) || self.test_fraction == 0.0 {
            return Err(Error::InvalidConfig("test_fraction must be in (0, 1)".into()));
        }
        self.weights.validate()
    }

    pub fn generator_config(&self, pose_dim: usize) -> GeneratorConfig {
        GeneratorConfig {
            pose_dim,
            hidden: self.gen_hidden,
            layers: self.gen_layers,
            z_dim: self.latent.dim,
            z_proj_gain: self.z_proj_gain,
        }
    }

    pub fn discriminator_config(&self, pose_dim: usize) -> DiscriminatorConfig {
        DiscriminatorConfig {
            input_dim: (self.m + self.n) * pose_dim,
            width: self.disc_width,
            depth: self.disc_depth,
            leak: self.disc_leak,
        }
    }

    pub fn quality_config(&self, pose_dim: usize) -> QualityConfig {
        QualityConfig { pose_dim, hidden: self.quality_hidden, layers: self.quality_layers }
    }
}

/// One row of the per-step loss log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub d_total: Real,
    pub g_total: Real,
    pub q_total: Real,
    pub consistency: Real,
    pub diversity: Real,
    pub energy: Real,
    pub bone: Real,
    pub d_gan: Real,
    pub g_gan: Real,
    pub q_gan: Real,
    pub grad_penalty: Real,
}

impl MetricRow {
    pub fn is_finite(&self) -> bool {
        [
            self.d_total,
            self.g_total,
            self.q_total,
            self.consistency,
            self.diversity,
            self.energy,
            self.bone,
            self.d_gan,
            self.g_gan,
            self.q_gan,
            self.grad_penalty,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Deep copy of a parameter set, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSnapshot {
    pub entries: Vec<(String, Vec<usize>, Vec<Real>)>,
}

impl NetSnapshot {
    pub fn of(params: &[Param]) -> NetSnapshot {
        NetSnapshot {
            entries: params
                .iter()
                .map(|p| (p.name.clone(), p.tensor.shape().to_vec(), p.tensor.to_vec()))
                .collect(),
        }
    }

    /// Writes the snapshot back into a matching parameter set.
    pub fn restore(&self, params: &[Param]) {
        assert_eq!(params.len(), self.entries.len(), "parameter arity mismatch");
        for (p, (name, shape, data)) in params.iter().zip(&self.entries) {
            assert_eq!(&p.name, name, "parameter order mismatch");
            assert_eq!(p.tensor.shape(), &shape[..], "parameter shape mismatch");
            p.tensor.set_data(data);
        }
    }
}

/// Persisted model state: everything needed to rebuild the three networks,
/// resume optimization, and reproduce forward passes bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    /// Best quality-selection count seen when this checkpoint was taken.
    pub k_best: usize,
    pub m: usize,
    pub n: usize,
    pub skeleton: SkeletonSpec,
    pub stats: NormalizationStats,
    pub latent: LatentSpec,
    pub gen_cfg: GeneratorConfig,
    pub disc_cfg: DiscriminatorConfig,
    pub quality_cfg: QualityConfig,
    pub gen: NetSnapshot,
    pub disc: NetSnapshot,
    pub quality: NetSnapshot,
    pub opt_g: AdamState,
    pub opt_d: AdamState,
    pub opt_q: AdamState,
    pub loss_history: Vec<MetricRow>,
}

impl Checkpoint {
    /// Rebuilds the three networks and loads the stored weights.
    pub fn instantiate(&self) -> (GeneratorParams, DiscriminatorParams, QualityParams) {
        let mut rng = Rng::new(0);
        let gen = GeneratorParams::new(self.gen_cfg.clone(), &mut rng);
        let disc = DiscriminatorParams::new(self.disc_cfg.clone(), &mut rng);
        let quality = QualityParams::new(self.quality_cfg.clone(), &mut rng);
        self.gen.restore(&gen.params());
        self.disc.restore(&disc.params());
        self.quality.restore(&quality.params());
        (gen, disc, quality)
    }
}
