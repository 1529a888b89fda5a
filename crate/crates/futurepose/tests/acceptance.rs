//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Heavy training runs are shared across criteria through lazy
//! statics. Run with `cargo test -p futurepose --test acceptance --
//! --nocapture` to see every line.

use futurepose::autodiff::{backward, no_grad, Tensor};
use futurepose::data::{
    make_synth_dataset, normalize, split_segments, PoseSequence, SkeletonSpec,
};
use futurepose::io::{format_dataset, parse_dataset, read_checkpoint, write_checkpoint, Dataset};
use futurepose::loss::{
    bone_loss, classification_loss, consistency_loss, d_gan_loss, d_total_loss, diversity_loss,
    energy_loss, g_gan_loss, g_total_loss, gradient_penalty, q_loss, LossWeights,
};
use futurepose::nets::QualityParams;
use futurepose::rng::Rng;
use futurepose::train::{
    epochs_to_reach, prediction_diversity, run_ablation, run_reduced_data_experiment,
    train_classifier, train_gan, AblationToggle, ClassifierInit, GanTrainOutput, GanTrainer,
    TrainConfig,
};
use futurepose::Real;
use std::sync::OnceLock;
use std::time::Instant;

const TOL: Real = 1e-9;

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[{}] criterion {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Shared desk-scale runs
// ---------------------------------------------------------------------------

struct DeskRun {
    clips: Vec<PoseSequence>,
    skeleton: SkeletonSpec,
    config: TrainConfig,
    output: GanTrainOutput,
}

/// Criterion-5 setting: 8-joint skeleton, 2 classes, 400 clips, m=10, n=20,
/// fixed seed.
fn desk_run() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut rng = Rng::new(123);
        let (clips, skeleton) = make_synth_dataset(&[0, 1], 200, 80, &mut rng).unwrap();
        let config = TrainConfig { seed: 11, ..TrainConfig::desk() };
        let output = train_gan(&clips, &skeleton, &config).unwrap();
        DeskRun { clips, skeleton, config, output }
    })
}

/// Transfer setting shared by criteria 7 and 8: all six classes, one GAN
/// pretraining run.
fn transfer_run() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut rng = Rng::new(123);
        let (clips, skeleton) = make_synth_dataset(&[0, 1, 2, 3, 4, 5], 66, 80, &mut rng).unwrap();
        let config = TrainConfig {
            seed: 11,
            epochs: 12,
            classifier_lr: 3e-4,
            classifier_epochs: 30,
            ..TrainConfig::desk()
        };
        let output = train_gan(&clips, &skeleton, &config).unwrap();
        DeskRun { clips, skeleton, config, output }
    })
}

fn fresh_eval_windows(run: &DeskRun, count_per_class: usize, seed: u64) -> Vec<Vec<Tensor>> {
    // Clips never seen in training: same generator, different stream.
    let mut rng = Rng::new(seed);
    let (clips, _) = make_synth_dataset(&[0, 1], count_per_class, 80, &mut rng).unwrap();
    let cfg = &run.config;
    let stats = &run.output.checkpoint.stats;
    let d = run.skeleton.joint_count * 3;
    let mut windows = Vec::new();
    for clip in &clips {
        let normed = normalize(clip, stats);
        for seg in split_segments(&normed, cfg.segment_len, cfg.frame_stride, None) {
            let w = seg.window(0, cfg.m + cfg.n);
            let steps: Vec<Tensor> = (0..cfg.m + cfg.n)
                .map(|t| Tensor::from_vec(w.frame(t).to_vec(), &[1, d]))
                .collect();
            windows.push(steps);
        }
    }
    windows
}

fn quality_mean(quality: &QualityParams, windows: &[Vec<Tensor>]) -> Real {
    let sum: Real = windows
        .iter()
        .map(|w| no_grad(|| quality.forward(w)).unwrap().prob.value())
        .sum();
    sum / windows.len() as Real
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gradient_correctness() {
    let start = Instant::now();
    let mut all = futurepose::verify::primitive_suites(100, 42).unwrap();
    all.extend(futurepose::verify::loss_suites(100, 43).unwrap());
    let elapsed = start.elapsed();
    let mut failed = Vec::new();
    for r in &all {
        if !r.passed {
            failed.push(r.line());
        }
    }
    let in_time = elapsed.as_secs_f64() < 120.0;
    report(
        "1 (gradient correctness)",
        failed.is_empty() && in_time,
        &format!(
            "{} suites x 100 random instances, all within tolerance; runtime {:.1}s (< 120s) {}",
            all.len(),
            elapsed.as_secs_f64(),
            failed.join("; ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Loss unit values
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_loss_unit_values() {
    let scalar = |v: Real| Tensor::from_vec(vec![v], &[1, 1]);
    let ln2 = (2.0 as Real).ln();

    let mut checks: Vec<(String, Real, Real)> = vec![(
        "d_gan(0.5,0.5)=2ln2".into(),
        d_gan_loss(&scalar(0.5), &scalar(0.5)).value(),
        2.0 * ln2,
    )];
    checks.push((
        "d_gan(0.9,0.1)".into(),
        d_gan_loss(&scalar(0.9), &scalar(0.1)).value(),
        -((0.9 as Real).ln() + (0.9 as Real).ln()),
    ));
    checks.push(("g_gan(1)=0".into(), g_gan_loss(&scalar(1.0)).value(), 0.0));
    checks.push(("g_gan(0.5)=ln2".into(), g_gan_loss(&scalar(0.5)).value(), ln2));
    checks.push((
        "g_gan(1/e)=1".into(),
        g_gan_loss(&scalar((1.0 as Real).exp().recip())).value(),
        1.0,
    ));

    let w = LossWeights { eta: 1.0, ..Default::default() };
    let step = |v: Real| vec![Tensor::from_vec(vec![v], &[1, 1])];
    checks.push((
        "diversity(delta=0)=0.5".into(),
        diversity_loss(&step(0.0), &step(0.0), &w).value(),
        0.5,
    ));
    checks.push((
        "diversity(eta=1,delta=ln3)=0.25".into(),
        diversity_loss(&step(0.0), &step((3.0 as Real).ln()), &w).value(),
        0.25,
    ));

    let spec = SkeletonSpec::new("pair", 2, vec![(0, 1)]).unwrap();
    let frame = Tensor::from_vec(vec![0.0, 0.0, 0.0, 0.0, 3.0, 4.0], &[1, 6]);
    checks.push((
        "bone single-bone |5-3| -> 2".into(),
        bone_loss(std::slice::from_ref(&frame), &[3.0], &spec).unwrap().value(),
        2.0,
    ));
    checks.push((
        "bone two frames -> 4".into(),
        bone_loss(&[frame.clone(), frame], &[3.0], &spec).unwrap().value(),
        4.0,
    ));

    // Constant-velocity COM {0,1,2}: energy = 2 * beta_v.
    for beta_v in [1.0 as Real, 0.7] {
        let w = LossWeights { beta_v, beta_a: 0.0, ..Default::default() };
        let com: Vec<Tensor> =
            [0.0, 1.0, 2.0].iter().map(|&v| Tensor::from_vec(vec![v], &[1, 1])).collect();
        checks.push((
            format!("energy constant-velocity = 2*beta_v ({beta_v})"),
            energy_loss(&com, &w).value.value(),
            2.0 * beta_v,
        ));
    }
    let w_acc = LossWeights { beta_v: 0.0, beta_a: 1.0, ..Default::default() };
    let com: Vec<Tensor> =
        [0.0, 1.0, 3.0].iter().map(|&v| Tensor::from_vec(vec![v], &[1, 1])).collect();
    checks.push((
        "energy accel {0,1,3} -> 1".into(),
        energy_loss(&com, &w_acc).value.value(),
        1.0,
    ));

    let w0 = LossWeights { consistency_floor: 0.0, ..Default::default() };
    let two: Vec<Tensor> = [0.0, 3.0].iter().map(|&v| Tensor::from_vec(vec![v], &[1, 1])).collect();
    checks.push((
        "consistency {0,3} -> 3".into(),
        consistency_loss(&two, None, &w0).unwrap().value(),
        3.0,
    ));
    let three: Vec<Tensor> =
        [0.0, 3.0, 7.0].iter().map(|&v| Tensor::from_vec(vec![v], &[1, 1])).collect();
    checks.push((
        "consistency {0,3,7} -> 5".into(),
        consistency_loss(&three, None, &w0).unwrap().value(),
        5.0,
    ));
    let wc = LossWeights { consistency_floor: 0.1, ..Default::default() };
    let flat: Vec<Tensor> = (0..3).map(|_| Tensor::from_vec(vec![2.0], &[1, 1])).collect();
    let prior = Tensor::from_vec(vec![2.0], &[1, 1]);
    checks.push((
        "consistency floor C on constant".into(),
        consistency_loss(&flat, Some(&prior), &wc).unwrap().value(),
        0.1,
    ));

    let uniform = Tensor::from_vec(vec![0.0; 49], &[1, 49]);
    checks.push((
        "classification uniform(49) = ln 49".into(),
        classification_loss(&uniform, &[13]).unwrap().value(),
        (49.0 as Real).ln(),
    ));

    let wq = LossWeights { alpha: 0.0, ..Default::default() };
    let (pr, pf) = (scalar(0.7), scalar(0.2));
    checks.push((
        "q_loss == d_gan_loss at alpha=0".into(),
        q_loss(&pr, &pf, &Tensor::scalar(5.0), &wq).value(),
        d_gan_loss(&pr, &pf).value(),
    ));

    let wu = LossWeights { alpha_pg: 1.0, alpha_d: 1.0, alpha_e: 1.0, alpha_b: 1.0, ..Default::default() };
    let parts: Vec<Tensor> = (1..=5).map(|i| Tensor::scalar(i as Real)).collect();
    checks.push((
        "g_total unit weights {1..5} -> 15".into(),
        g_total_loss(&parts[0], &parts[1], &parts[2], &parts[3], &parts[4], &wu).value(),
        15.0,
    ));
    let wd = LossWeights::default();
    checks.push((
        "d_total defaults (1 + 10*2 + 0.001*3)".into(),
        d_total_loss(&Tensor::scalar(1.0), &Tensor::scalar(2.0), &Tensor::scalar(3.0), &wd).value(),
        1.0 + 10.0 * 2.0 + 0.001 * 3.0,
    ));

    let mut bad = Vec::new();
    for (name, got, want) in &checks {
        if (got - want).abs() > TOL {
            bad.push(format!("{name}: got {got}, want {want}"));
        }
    }
    report(
        "2 (loss unit values)",
        bad.is_empty(),
        &format!("{} hand-computed values reproduced within 1e-9 {}", checks.len(), bad.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// 3. Gradient-penalty semantics
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_gradient_penalty_semantics() {
    let mut bad = Vec::new();
    for g in [0.5 as Real, 1.0, 2.0] {
        let coeff = Tensor::param(vec![g], &[1, 1]);
        let cc = coeff.clone();
        let score = move |x: &Tensor| -> futurepose::Result<Tensor> { Ok(x.matmul(&cc)) };
        let real = Tensor::from_vec(vec![0.3, -0.1], &[2, 1]);
        let fake = Tensor::from_vec(vec![0.8, 0.4], &[2, 1]);
        let penalty = gradient_penalty(&score, &real, &fake, &mut Rng::new(7)).unwrap();
        let want = (g - 1.0) * (g - 1.0);
        if (penalty.value() - want).abs() > TOL {
            bad.push(format!("g={g}: penalty {} != {want}", penalty.value()));
        }
    }

    // Gradients flow into the scorer's parameters and into nothing else,
    // even when the fake batch came from a generator graph.
    let theta_d = Tensor::param(vec![2.0], &[1, 1]);
    let theta_g = Tensor::param(vec![0.7], &[1, 1]);
    let fake = Tensor::from_vec(vec![0.5], &[1, 1]).matmul(&theta_g); // graph through theta_g
    let real = Tensor::from_vec(vec![0.2], &[1, 1]);
    let td = theta_d.clone();
    let score = move |x: &Tensor| -> futurepose::Result<Tensor> { Ok(x.matmul(&td)) };
    let penalty = gradient_penalty(&score, &real, &fake, &mut Rng::new(9)).unwrap();
    let grads = backward(&penalty, &[&theta_d, &theta_g]).unwrap();
    let d_grad = grads.get(&theta_d).value();
    let g_grad = grads.get(&theta_g).value();
    if (d_grad - 2.0).abs() > 1e-6 {
        bad.push(format!("d(penalty)/d(theta_d) = {d_grad}, want 2(g-1) = 2"));
    }
    if g_grad != 0.0 {
        bad.push(format!("d(penalty)/d(theta_g) = {g_grad}, want exactly 0"));
    }

    report(
        "3 (gradient-penalty semantics)",
        bad.is_empty(),
        &format!(
            "penalty = (g-1)^2 for g in {{0.5, 1, 2}} within 1e-9; gradients reach theta_d only {}",
            bad.join("; ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Isolation contracts
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_isolation_contracts() {
    let mut rng = Rng::new(5);
    let (clips, skeleton) = make_synth_dataset(&[0, 1], 8, 70, &mut rng).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        k_disc_iters: 2,
        segment_len: 30,
        gen_hidden: 8,
        gen_layers: 1,
        disc_width: 12,
        disc_depth: 2,
        quality_hidden: 8,
        quality_layers: 1,
        seed: 3,
        ..TrainConfig::desk()
    };
    let mut trainer = GanTrainer::new(&clips, &skeleton, cfg).unwrap();
    let snap = |ps: &[futurepose::nets::Param]| -> Vec<Vec<Real>> {
        ps.iter().map(|p| p.tensor.to_vec()).collect()
    };

    let mut bad = Vec::new();

    let (g0, q0) = (snap(trainer.gen_params()), snap(trainer.quality_params()));
    trainer.d_step().unwrap();
    if snap(trainer.gen_params()) != g0 {
        bad.push("D-step changed theta_g".into());
    }
    if snap(trainer.quality_params()) != q0 {
        bad.push("D-step changed theta_q".into());
    }

    let (d0, q1) = (snap(trainer.disc_params()), snap(trainer.quality_params()));
    let (_, qb) = trainer.g_step().unwrap();
    if snap(trainer.disc_params()) != d0 {
        bad.push("G-step changed theta_d".into());
    }
    if snap(trainer.quality_params()) != q1 {
        bad.push("G-step changed theta_q".into());
    }

    let g1 = snap(trainer.gen_params());
    trainer.q_step(&qb).unwrap();
    if snap(trainer.disc_params()) != d0 {
        bad.push("Q-step changed theta_d".into());
    }
    if snap(trainer.gen_params()) != g1 {
        bad.push("Q-step changed theta_g".into());
    }

    // Quality-loss gradients never reach generator parameters.
    let (_, qb) = trainer.g_step().unwrap();
    let p_real = trainer.quality.forward(qb.real_steps()).unwrap().prob;
    let p_fake = trainer.quality.forward(qb.fake_steps()).unwrap().prob;
    let l2 = futurepose::loss::params_l2_norm(trainer.quality_params());
    let loss = q_loss(&p_real, &p_fake, &l2, &trainer.cfg.weights);
    let wrt: Vec<&Tensor> = trainer.gen_params().iter().map(|p| &p.tensor).collect();
    let grads = backward(&loss, &wrt).unwrap();
    for p in trainer.gen_params() {
        if grads.get(&p.tensor).to_vec().iter().any(|&v| v != 0.0) {
            bad.push(format!("quality-loss gradient nonzero for {}", p.name));
        }
    }

    report(
        "4 (isolation contracts)",
        bad.is_empty(),
        &format!(
            "each step leaves the other two parameter sets bit-identical; q-loss grad wrt theta_g is exactly zero {}",
            bad.join("; ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Desk-scale GAN run
// ---------------------------------------------------------------------------

#[test]
fn criterion_5a_losses_stay_finite() {
    let run = desk_run();
    let finite = run.output.metrics.iter().all(|r| r.is_finite());
    report(
        "5a (finite losses)",
        finite,
        &format!("{} optimizer steps, every loss component finite", run.output.metrics.len()),
    );
}

#[test]
fn criterion_5b_quality_separates_real_from_noise() {
    let run = desk_run();
    let (_, _, quality) = run.output.checkpoint.instantiate();
    let windows = fresh_eval_windows(run, 8, 999);

    let d = run.skeleton.joint_count * 3;
    let steps = run.config.m + run.config.n;
    let mut noise_rng = Rng::new(777);
    let noise: Vec<Vec<Tensor>> = (0..windows.len())
        .map(|_| {
            (0..steps)
                .map(|_| {
                    Tensor::from_vec(
                        (0..d).map(|_| noise_rng.uniform(-1.0, 1.0)).collect(),
                        &[1, d],
                    )
                })
                .collect()
        })
        .collect();

    let real_mean = quality_mean(&quality, &windows);
    let noise_mean = quality_mean(&quality, &noise);
    let gap = real_mean - noise_mean;
    report(
        "5b (quality gap)",
        gap >= 0.3,
        &format!(
            "mean quality on held-out real {real_mean:.3} vs uniform noise {noise_mean:.3}: gap {gap:.3} >= 0.3"
        ),
    );
}

#[test]
fn criterion_5c_bone_error_halves() {
    let run = desk_run();
    let first = run.output.evals.first().unwrap().bone_error_m;
    let last = run.output.evals.last().unwrap().bone_error_m;
    report(
        "5c (bone error decrease)",
        last <= 0.5 * first,
        &format!(
            "mean bone-length error {first:.4} m (epoch 1) -> {last:.4} m (final): {:.0}% decrease >= 50%",
            (1.0 - last / first) * 100.0
        ),
    );
}

#[test]
fn criterion_5d_initial_outputs_near_half() {
    let run = desk_run();
    let d = run.skeleton.joint_count * 3;
    let mut rng = Rng::new(6);
    let disc = futurepose::nets::DiscriminatorParams::new(
        run.config.discriminator_config(d),
        &mut rng,
    );
    let quality = QualityParams::new(run.config.quality_config(d), &mut rng);

    let windows = fresh_eval_windows(run, 2, 1001);
    let mut worst: Real = 0.5;
    for w in &windows {
        let refs: Vec<&Tensor> = w.iter().collect();
        let flat = futurepose::autodiff::concat(&refs, 1);
        let (p, _) = disc.forward(&flat).unwrap();
        let q = quality.forward(w).unwrap().prob;
        for v in [p.value(), q.value()] {
            if (v - 0.5).abs() > (worst - 0.5).abs() {
                worst = v;
            }
        }
    }
    report(
        "5d (initial outputs)",
        (worst - 0.5).abs() <= 0.2,
        &format!("fresh discriminator and quality outputs within 0.5 +/- 0.2 (worst {worst:.3})"),
    );
}

// ---------------------------------------------------------------------------
// 6. Diversity ablation
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_diversity_ablation() {
    let run = desk_run();
    let (gen_on, _, _) = run.output.checkpoint.instantiate();
    let priors = futurepose::train::eval_priors(
        &run.clips,
        &run.skeleton,
        &run.output.checkpoint,
        &run.config,
        8,
    )
    .unwrap();
    let div_on = prediction_diversity(
        &gen_on,
        &priors,
        run.config.n,
        8,
        &run.output.checkpoint.latent,
        &mut Rng::new(2024),
    )
    .unwrap();

    let ablation = run_ablation(&run.clips, &run.skeleton, &run.config, AblationToggle::Diversity)
        .unwrap();
    let div_off = ablation.diversity_metric.expect("ablation run converged");
    let ratio = div_on / div_off;
    report(
        "6 (diversity ablation)",
        ratio >= 5.0,
        &format!(
            "mean pairwise prediction distance across 8 draws: on {div_on:.4}, off {div_off:.4}, ratio {ratio:.1}x >= 5x"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Transfer pattern
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_transfer_pattern() {
    let run = transfer_run();
    let (_, disc, _) = run.output.checkpoint.instantiate();
    let stats = &run.output.checkpoint.stats;

    let mut ratios: Vec<Real> = Vec::new();
    let mut lines = Vec::new();
    for seed in [1u64, 2, 3] {
        let cfg = TrainConfig { seed, ..run.config.clone() };
        let pre = train_classifier(
            &run.clips,
            &run.skeleton,
            ClassifierInit::Pretrained(&disc),
            &cfg,
            Some(stats),
        )
        .unwrap();
        let scr =
            train_classifier(&run.clips, &run.skeleton, ClassifierInit::Random, &cfg, Some(stats))
                .unwrap();
        let plateau = *scr.test_accuracy.last().unwrap();
        let threshold = plateau - 0.02;
        let e_pre = epochs_to_reach(&pre.test_accuracy, threshold);
        let e_scr = epochs_to_reach(&scr.test_accuracy, threshold);
        let ratio = match (e_pre, e_scr) {
            (Some(p), Some(s)) => p as Real / s as Real,
            _ => Real::INFINITY,
        };
        ratios.push(ratio);
        lines.push(format!(
            "seed {seed}: threshold {threshold:.3}, pretrained {e_pre:?} vs scratch {e_scr:?} epochs (ratio {ratio:.2})"
        ));
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[1];
    let all_within = ratios.iter().all(|&r| r <= 0.75);
    report(
        "7 (transfer pattern)",
        all_within && median <= 0.5,
        &format!(
            "pretrained/scratch epoch ratios {:?} (need all <= 0.75, median <= 0.5; median {median:.2}); {}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            lines.join(" | ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Reduced-data pattern
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_reduced_data_pattern() {
    let run = transfer_run();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in [1u64, 2, 3] {
        let cfg = TrainConfig { seed, ..run.config.clone() };
        let paired = run_reduced_data_experiment(
            &run.clips,
            &run.skeleton,
            0.25,
            &run.output.checkpoint,
            &cfg,
        )
        .unwrap();
        let pre = *paired.pretrained.test_accuracy.last().unwrap();
        let scr = *paired.scratch.test_accuracy.last().unwrap();
        if pre >= scr {
            wins += 1;
        }
        lines.push(format!("seed {seed}: pretrained {pre:.3} vs scratch {scr:.3}"));
    }
    report(
        "8 (reduced-data pattern)",
        wins >= 2,
        &format!(
            "fraction 0.25: pretrained final >= scratch final in {wins}/3 seeds (need >= 2); {}",
            lines.join(" | ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. Reproducibility and persistence
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_reproducibility_and_persistence() {
    let mut bad = Vec::new();

    // Fixed-seed bit-reproducible training.
    let short_run = |seed: u64| {
        let mut rng = Rng::new(77);
        let (clips, skeleton) = make_synth_dataset(&[0, 1], 8, 70, &mut rng).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 4,
            k_disc_iters: 2,
            segment_len: 30,
            gen_hidden: 8,
            gen_layers: 1,
            disc_width: 12,
            disc_depth: 2,
            quality_hidden: 8,
            quality_layers: 1,
            seed,
            ..TrainConfig::desk()
        };
        let mut t = GanTrainer::new(&clips, &skeleton, cfg).unwrap();
        let rows: Vec<_> = (0..4).map(|_| t.outer_step().unwrap()).collect();
        (t, rows)
    };
    let (trainer_a, rows_a) = short_run(9);
    let (_, rows_b) = short_run(9);
    if rows_a != rows_b {
        bad.push("identical seeds produced different loss curves".to_string());
    }
    let (_, rows_c) = short_run(10);
    if rows_a == rows_c {
        bad.push("different seeds produced identical loss curves".to_string());
    }

    // Checkpoint round trip preserves forward outputs bit-exactly.
    let ckpt = trainer_a.checkpoint(1, 2, &rows_a);
    let bytes = write_checkpoint(&ckpt);
    let loaded = read_checkpoint(&bytes).unwrap();
    if loaded != ckpt {
        bad.push("checkpoint round trip changed contents".to_string());
    }
    let (gen_a, _, _) = ckpt.instantiate();
    let (gen_b, _, _) = loaded.instantiate();
    let d = trainer_a.skeleton.joint_count * 3;
    let prior: Vec<Tensor> = (0..ckpt.m)
        .map(|t| Tensor::from_vec(vec![0.1 * t as Real; d], &[1, d]))
        .collect();
    let z = ckpt.latent.sample(1, &mut Rng::new(4));
    let out_a = no_grad(|| gen_a.forward(&prior, &z, ckpt.n)).unwrap();
    let out_b = no_grad(|| gen_b.forward(&prior, &z, ckpt.n)).unwrap();
    for (a, b) in out_a.iter().zip(&out_b) {
        if a.to_vec() != b.to_vec() {
            bad.push("forward outputs differ after checkpoint reload".to_string());
        }
    }

    // Dataset file round trip is lossless at stored precision.
    let mut rng = Rng::new(15);
    let (clips, skeleton) = make_synth_dataset(&[0, 1], 3, 20, &mut rng).unwrap();
    let ds = Dataset::new(
        skeleton,
        vec![(0, "walk".into()), (1, "wave".into())],
        clips,
    )
    .unwrap();
    let text = format_dataset(&ds);
    let reread = parse_dataset(&text).unwrap();
    if format_dataset(&reread) != text {
        bad.push("dataset text round trip is not a fixed point".to_string());
    }

    report(
        "9 (reproducibility and persistence)",
        bad.is_empty(),
        &format!(
            "fixed-seed runs bit-identical; checkpoint and dataset round trips exact {}",
            bad.join("; ")
        ),
    );
}
