//! Command-line surface: training, prediction, quality scoring,
//! classification, ablations, synthetic data, and gradient checks.

use clap::{Parser, Subcommand, ValueEnum};
use futurepose::autodiff::{no_grad, Tensor};
use futurepose::data::{
    class_name, denormalize, make_synth_dataset, normalize, PoseSequence,
};
use futurepose::io::{
    accuracy_csv, atomic_write, confusion_csv, eval_csv, load_checkpoint, load_dataset,
    metrics_csv, parse_run_config, render_strips, save_checkpoint, save_dataset,
    write_run_config, Dataset,
};
use futurepose::rng::Rng;
use futurepose::train::{
    run_ablation, train_classifier, train_gan, AblationToggle,
    Checkpoint, ClassifierInit, TrainConfig,
};
use futurepose::Real;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "futurepose",
    about = "GAN-trained prediction of future 3D skeleton poses, with quality assessment and discriminator-feature transfer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Pretrained,
    Random,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToggleArg {
    Diversity,
    Consistency,
    GradientPenalty,
}

impl From<ToggleArg> for AblationToggle {
    fn from(t: ToggleArg) -> AblationToggle {
        match t {
            ToggleArg::Diversity => AblationToggle::Diversity,
            ToggleArg::Consistency => AblationToggle::Consistency,
            ToggleArg::GradientPenalty => AblationToggle::GradientPenalty,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the generator, discriminator, and quality network.
    TrainGan {
        /// Dataset file to train on.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for checkpoints and metric CSVs.
        #[arg(long)]
        out: PathBuf,
        /// Run configuration file (defaults apply for missing keys).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated class ids excluded from GAN training.
        #[arg(long, value_delimiter = ',')]
        holdout_classes: Vec<usize>,
        /// Use the small desk-scale preset as the base configuration.
        #[arg(long)]
        desk: bool,
    },
    /// Predict future pose sequences from a checkpoint and prior poses.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset file providing the prior poses.
        #[arg(long)]
        data: PathBuf,
        /// Clip index the prior is taken from.
        #[arg(long, default_value_t = 0)]
        clip: usize,
        /// Number of observed frames.
        #[arg(long, default_value_t = 10)]
        priors: usize,
        /// Number of predicted frames.
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        /// Latent draws; one predicted sequence per draw.
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write a stick-figure SVG strip per sample.
        #[arg(long)]
        svg: bool,
    },
    /// Score sequences with the quality network.
    ScoreQuality {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Supervised action classification on the discriminator trunk.
    TrainClassifier {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// GAN checkpoint supplying the pretrained trunk and normalization.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Which arm(s) to train.
        #[arg(long, value_enum)]
        init: Option<InitArg>,
        /// Stratified fraction of labeled clips to keep.
        #[arg(long)]
        fraction: Option<Real>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        desk: bool,
    },
    /// Retrain with one generator loss term zeroed and report its effect.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        toggle: ToggleArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        desk: bool,
    },
    /// Write a synthetic labeled motion dataset.
    MakeSynth {
        /// Comma-separated class ids (0=walk 1=wave 2=jump 3=turn 4=march 5=pace).
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        classes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        clips_per_class: usize,
        #[arg(long, default_value_t = 80)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the finite-difference gradient-check suites.
    Gradcheck {
        /// Random instances per suite.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>, desk: bool, seed: Option<u64>) -> Result<TrainConfig, futurepose::Error> {
    let mut cfg = match path {
        Some(p) => parse_run_config(&std::fs::read_to_string(p)?)?,
        None if desk => TrainConfig::desk(),
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<ExitCode, futurepose::Error> {
    match command {
        Command::TrainGan { data, out, config, seed, holdout_classes, desk } => {
            let cfg = load_config(&config, desk, seed)?;
            let ds = load_dataset(&data)?;
            println!(
                "loaded {} clips, {} classes, skeleton `{}` ({} joints)",
                ds.clips.len(),
                ds.class_count(),
                ds.skeleton.name,
                ds.skeleton.joint_count
            );
            let clips: Vec<PoseSequence> = if holdout_classes.is_empty() {
                ds.clips.clone()
            } else {
                let kept: Vec<PoseSequence> = ds
                    .clips
                    .iter()
                    .filter(|c| c.label.is_none_or(|l| !holdout_classes.contains(&l)))
                    .cloned()
                    .collect();
                println!(
                    "holdout classes {:?}: training on {} of {} clips",
                    holdout_classes,
                    kept.len(),
                    ds.clips.len()
                );
                kept
            };

            std::fs::create_dir_all(&out)?;
            atomic_write(&out.join("config.used.cfg"), write_run_config(&cfg).as_bytes())?;

            let result = train_gan(&clips, &ds.skeleton, &cfg)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            atomic_write(&out.join("metrics.csv"), metrics_csv(&result.metrics).as_bytes())?;
            atomic_write(&out.join("eval.csv"), eval_csv(&result.evals).as_bytes())?;
            save_checkpoint(&result.checkpoint, &out.join("checkpoint.fpck"))?;
            if let Some(best) = &result.best {
                save_checkpoint(best, &out.join("best.fpck"))?;
                println!(
                    "best checkpoint: epoch {} with selection count {}",
                    best.epoch, best.k_best
                );
            }
            let last = result.evals.last().expect("at least one epoch");
            println!(
                "done: {} steps; final bone error {:.4} m; quality real/fake {:.3}/{:.3}",
                result.metrics.len(),
                last.bone_error_m,
                last.quality_real_mean,
                last.quality_fake_mean
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Predict { checkpoint, data, clip, priors, horizon, samples, out, seed, svg } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&data)?;
            if ds.skeleton != ckpt.skeleton {
                return Err(futurepose::Error::InvalidConfig(
                    "dataset skeleton differs from the checkpoint's".into(),
                ));
            }
            let source = ds.clips.get(clip).ok_or_else(|| {
                futurepose::Error::InvalidConfig(format!("clip {clip} out of range"))
            })?;
            if source.len() < priors {
                return Err(futurepose::Error::SegmentTooShort {
                    need: priors,
                    have: source.len(),
                });
            }
            let (gen, _, quality) = ckpt.instantiate();
            let normed = normalize(source, &ckpt.stats);
            let d = ds.skeleton.joint_count * 3;
            let prior_steps: Vec<Tensor> = (0..priors)
                .map(|t| Tensor::from_vec(normed.frame(t).to_vec(), &[1, d]))
                .collect();

            let mut rng = Rng::new(seed.unwrap_or(0));
            let mut outputs: Vec<PoseSequence> = Vec::with_capacity(samples);
            let mut quality_scores = Vec::with_capacity(samples);
            for _ in 0..samples {
                let z = ckpt.latent.sample(1, &mut rng);
                let pred = no_grad(|| gen.forward(&prior_steps, &z, horizon))?;
                let seq: Vec<Tensor> = prior_steps.iter().cloned().chain(pred.iter().cloned()).collect();
                let q = no_grad(|| quality.forward(&seq))?.prob.value();
                quality_scores.push(q);

                let mut flat = Vec::with_capacity(horizon * d);
                for p in &pred {
                    flat.extend(p.to_vec());
                }
                let normed_pred = PoseSequence::new(flat, horizon, ds.skeleton.joint_count)?;
                outputs.push(denormalize(&normed_pred, &ckpt.stats));
            }

            std::fs::create_dir_all(&out)?;
            let pred_ds = Dataset::new(ds.skeleton.clone(), ds.classes.clone(), outputs.clone())?;
            save_dataset(&pred_ds, &out.join("predictions.pose"))?;
            for (i, q) in quality_scores.iter().enumerate() {
                println!("sample {i}: quality probability {q:.4}");
            }
            if svg {
                let refs: Vec<&PoseSequence> = outputs.iter().collect();
                let labels: Vec<String> =
                    (0..samples).map(|i| format!("z draw {i}")).collect();
                let rendered = render_strips(&refs, &ds.skeleton, &labels);
                atomic_write(&out.join("predictions.svg"), rendered.as_bytes())?;
            }
            println!("wrote {} predicted sequences of {horizon} poses", samples);
            Ok(ExitCode::SUCCESS)
        }

        Command::ScoreQuality { checkpoint, data } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let ds = load_dataset(&data)?;
            let (_, _, quality) = ckpt.instantiate();
            let d = ds.skeleton.joint_count * 3;
            let window = ckpt.m + ckpt.n;
            for (i, clip) in ds.clips.iter().enumerate() {
                if clip.len() < window {
                    println!("clip {i}: too short ({} < {window} frames)", clip.len());
                    continue;
                }
                let normed = normalize(clip, &ckpt.stats);
                let steps: Vec<Tensor> = (0..window)
                    .map(|t| Tensor::from_vec(normed.frame(t).to_vec(), &[1, d]))
                    .collect();
                let q = no_grad(|| quality.forward(&steps))?.prob.value();
                println!("clip {i}: quality probability {q:.4}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::TrainClassifier { data, out, checkpoint, init, fraction, config, seed, desk } => {
            let cfg = load_config(&config, desk, seed)?;
            let ds = load_dataset(&data)?;
            let ckpt: Option<Checkpoint> = match &checkpoint {
                Some(p) => Some(load_checkpoint(p)?),
                None => None,
            };
            let init = init.unwrap_or(if ckpt.is_some() { InitArg::Both } else { InitArg::Random });
            if matches!(init, InitArg::Pretrained | InitArg::Both) && ckpt.is_none() {
                return Err(futurepose::Error::InvalidConfig(
                    "--init pretrained/both needs --checkpoint".into(),
                ));
            }
            std::fs::create_dir_all(&out)?;

            let fraction = fraction.unwrap_or(1.0);
            let instantiated = ckpt.as_ref().map(|c| c.instantiate());
            let stats = ckpt.as_ref().map(|c| &c.stats);

            let run_arm = |label: &str, arm_init: ClassifierInit| -> Result<(), futurepose::Error> {
                let result = if fraction < 1.0 {
                    let subset = futurepose::train::stratified_subset(
                        &ds.clips,
                        fraction,
                        &mut Rng::new(cfg.seed).stream(0xf7ac),
                    )?;
                    train_classifier(&subset, &ds.skeleton, arm_init, &cfg, stats)?
                } else {
                    train_classifier(&ds.clips, &ds.skeleton, arm_init, &cfg, stats)?
                };
                atomic_write(
                    &out.join(format!("accuracy_{label}.csv")),
                    accuracy_csv(&result.train_accuracy, &result.test_accuracy).as_bytes(),
                )?;
                atomic_write(
                    &out.join(format!("confusion_{label}.csv")),
                    confusion_csv(&result.confusion).as_bytes(),
                )?;
                println!(
                    "{label}: final train/test accuracy {:.3}/{:.3} ({} train, {} test examples)",
                    result.train_accuracy.last().unwrap(),
                    result.test_accuracy.last().unwrap(),
                    result.train_size,
                    result.test_size
                );
                Ok(())
            };

            match (init, &instantiated) {
                (InitArg::Random, _) => run_arm("random", ClassifierInit::Random)?,
                (InitArg::Pretrained, Some((_, disc, _))) => {
                    run_arm("pretrained", ClassifierInit::Pretrained(disc))?
                }
                (InitArg::Both, Some((_, disc, _))) => {
                    run_arm("pretrained", ClassifierInit::Pretrained(disc))?;
                    run_arm("random", ClassifierInit::Random)?;
                }
                _ => unreachable!("checked above"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Ablate { data, toggle, out, config, seed, desk } => {
            let cfg = load_config(&config, desk, seed)?;
            let ds = load_dataset(&data)?;
            std::fs::create_dir_all(&out)?;
            let report = run_ablation(&ds.clips, &ds.skeleton, &cfg, toggle.into())?;
            atomic_write(
                &out.join("config.used.cfg"),
                write_run_config(&report.config_used).as_bytes(),
            )?;
            if let Some(gan) = &report.gan {
                atomic_write(&out.join("metrics.csv"), metrics_csv(&gan.metrics).as_bytes())?;
                save_checkpoint(&gan.checkpoint, &out.join("checkpoint.fpck"))?;
            }
            println!("toggle: {}", report.toggle.name());
            println!("converged: {}", report.converged);
            if let Some(msg) = &report.divergence {
                println!("divergence: {msg}");
            }
            if let Some(d) = report.diversity_metric {
                println!("diversity metric (mean pairwise prediction distance): {d:.5}");
            }
            if let Some(c) = report.consistency_metric {
                println!("consistency metric (max inter-frame displacement): {c:.5}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::MakeSynth { classes, clips_per_class, frames, seed, out } => {
            let mut rng = Rng::new(seed);
            let (clips, skeleton) = make_synth_dataset(&classes, clips_per_class, frames, &mut rng)?;
            let table: Vec<(usize, String)> = classes
                .iter()
                .map(|&c| (c, class_name(c).unwrap_or("unknown").to_string()))
                .collect();
            let ds = Dataset::new(skeleton, table, clips)?;
            save_dataset(&ds, &out)?;
            println!(
                "wrote {} clips x {frames} frames for classes {:?}",
                ds.clips.len(),
                classes
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Gradcheck { trials, seed } => {
            let mut all_passed = true;
            println!("primitive gradient checks ({trials} random instances each):");
            for r in futurepose::verify::primitive_suites(trials, seed)? {
                println!("  {}", r.line());
                all_passed &= r.passed;
            }
            println!("loss gradient checks ({trials} random instances each):");
            for r in futurepose::verify::loss_suites(trials, seed ^ 1)? {
                println!("  {}", r.line());
                all_passed &= r.passed;
            }
            if all_passed {
                println!("all gradient checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("gradient checks FAILED");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
