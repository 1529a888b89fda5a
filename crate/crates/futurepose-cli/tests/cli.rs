//! End-to-end tests of the command-line surface: every subcommand runs
//! against a tiny synthetic dataset and a miniature configuration.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_futurepose")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

struct Workdir {
    root: PathBuf,
}

impl Workdir {
    fn new(name: &str) -> Workdir {
        let root = std::env::temp_dir().join(format!("futurepose-cli-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&root);
        std::fs::create_dir_all(&root).unwrap();
        Workdir { root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn s(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.root);
    }
}

fn write_tiny_config(path: &Path) {
    std::fs::write(
        path,
        "epochs = 2\nbatch_size = 4\nk_disc_iters = 2\nsegment_len = 30\n\
         gen_hidden = 8\ngen_layers = 1\ndisc_width = 12\ndisc_depth = 2\n\
         quality_hidden = 8\nquality_layers = 1\neval_samples = 4\n\
         selection_warmup_epochs = 0\nlr = 0.001\nlr_quality = 0.0005\n\
         z_dim = 4\nclassifier_epochs = 2\nclassifier_lr = 0.001\n\
         classifier_batch = 8\nclass_head_hidden = 8\n",
    )
    .unwrap();
}

#[test]
fn full_pipeline_round_trip() {
    let dir = Workdir::new("pipeline");
    write_tiny_config(&dir.path("tiny.cfg"));

    let out = run(&[
        "make-synth",
        "--classes", "0,1",
        "--clips-per-class", "10",
        "--frames", "70",
        "--seed", "3",
        "--out", &dir.s("data.pose"),
    ]);
    assert_ok(&out, "make-synth");

    let out = run(&[
        "train-gan",
        "--data", &dir.s("data.pose"),
        "--out", &dir.s("run"),
        "--config", &dir.s("tiny.cfg"),
        "--seed", "5",
    ]);
    assert_ok(&out, "train-gan");
    for artifact in ["checkpoint.fpck", "metrics.csv", "eval.csv", "config.used.cfg"] {
        assert!(dir.path("run").join(artifact).exists(), "missing {artifact}");
    }
    let metrics = std::fs::read_to_string(dir.path("run/metrics.csv")).unwrap();
    assert!(metrics.starts_with("step,d_total,g_total,q_total,"));
    // 20 segments minus the 10% evaluation holdout leaves 18; 2 epochs x
    // (18 / 4 per batch) = 8 optimizer steps, plus the header line.
    assert_eq!(metrics.lines().count(), 9);

    let out = run(&[
        "predict",
        "--checkpoint", &dir.s("run/checkpoint.fpck"),
        "--data", &dir.s("data.pose"),
        "--priors", "10",
        "--horizon", "20",
        "--samples", "3",
        "--seed", "7",
        "--svg",
        "--out", &dir.s("pred"),
    ]);
    assert_ok(&out, "predict");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("wrote 3 predicted sequences of 20 poses"), "{stdout}");
    let pred_text = std::fs::read_to_string(dir.path("pred/predictions.pose")).unwrap();
    assert_eq!(pred_text.matches("frames 20").count(), 3);
    assert!(std::fs::read_to_string(dir.path("pred/predictions.svg"))
        .unwrap()
        .starts_with("<svg"));

    let out = run(&[
        "score-quality",
        "--checkpoint", &dir.s("run/checkpoint.fpck"),
        "--data", &dir.s("data.pose"),
    ]);
    assert_ok(&out, "score-quality");
    let stdout = String::from_utf8_lossy(&out.stdout);
    // Every clip gets a probability line; values are parseable and in (0,1).
    let mut scored = 0;
    for line in stdout.lines() {
        if let Some(rest) = line.split("quality probability ").nth(1) {
            let p: f64 = rest.trim().parse().unwrap();
            assert!(p > 0.0 && p < 1.0, "probability out of range: {line}");
            scored += 1;
        }
    }
    assert_eq!(scored, 20);

    let out = run(&[
        "train-classifier",
        "--data", &dir.s("data.pose"),
        "--out", &dir.s("cls"),
        "--checkpoint", &dir.s("run/checkpoint.fpck"),
        "--config", &dir.s("tiny.cfg"),
        "--seed", "1",
    ]);
    assert_ok(&out, "train-classifier");
    for artifact in [
        "accuracy_pretrained.csv",
        "accuracy_random.csv",
        "confusion_pretrained.csv",
        "confusion_random.csv",
    ] {
        assert!(dir.path("cls").join(artifact).exists(), "missing {artifact}");
    }
    let acc = std::fs::read_to_string(dir.path("cls/accuracy_random.csv")).unwrap();
    assert!(acc.starts_with("epoch,train_accuracy,test_accuracy"));

    let out = run(&[
        "ablate",
        "--data", &dir.s("data.pose"),
        "--toggle", "diversity",
        "--out", &dir.s("abl"),
        "--config", &dir.s("tiny.cfg"),
    ]);
    assert_ok(&out, "ablate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("toggle: diversity"));
    assert!(stdout.contains("diversity metric"));
    let used = std::fs::read_to_string(dir.path("abl/config.used.cfg")).unwrap();
    assert!(used.contains("alpha_d = 0"), "toggled weight must be logged as zero");
}

#[test]
fn gradcheck_passes_with_exit_zero() {
    let out = run(&["gradcheck", "--trials", "4"]);
    assert_ok(&out, "gradcheck");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all gradient checks passed"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["predict", "--no-such-flag"]);
    assert!(!out.status.success());
}

#[test]
fn operation_errors_exit_nonzero_with_message() {
    let dir = Workdir::new("errors");
    // Missing data file.
    let out = run(&["train-gan", "--data", &dir.s("absent.pose"), "--out", &dir.s("x")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    // Pretrained init without a checkpoint.
    let out = run(&[
        "make-synth", "--classes", "0", "--clips-per-class", "4", "--frames", "40",
        "--out", &dir.s("d.pose"),
    ]);
    assert_ok(&out, "make-synth");
    let out = run(&[
        "train-classifier", "--data", &dir.s("d.pose"), "--out", &dir.s("c"),
        "--init", "pretrained",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("checkpoint"));
}

#[test]
fn fixed_seed_runs_are_reproducible_end_to_end() {
    let dir = Workdir::new("repro");
    write_tiny_config(&dir.path("tiny.cfg"));
    let out = run(&[
        "make-synth", "--classes", "0,1", "--clips-per-class", "6", "--frames", "70",
        "--seed", "4", "--out", &dir.s("data.pose"),
    ]);
    assert_ok(&out, "make-synth");
    for name in ["a", "b"] {
        let out = run(&[
            "train-gan",
            "--data", &dir.s("data.pose"),
            "--out", &dir.s(name),
            "--config", &dir.s("tiny.cfg"),
            "--seed", "9",
        ]);
        assert_ok(&out, "train-gan");
    }
    let a = std::fs::read(dir.path("a/metrics.csv")).unwrap();
    let b = std::fs::read(dir.path("b/metrics.csv")).unwrap();
    assert_eq!(a, b, "same seed must produce identical metric logs");
    let ca = std::fs::read(dir.path("a/checkpoint.fpck")).unwrap();
    let cb = std::fs::read(dir.path("b/checkpoint.fpck")).unwrap();
    assert_eq!(ca, cb, "same seed must produce identical checkpoints");
}

#[test]
fn holdout_classes_filter_gan_training() {
    let dir = Workdir::new("holdout");
    write_tiny_config(&dir.path("tiny.cfg"));
    let out = run(&[
        "make-synth", "--classes", "0,1", "--clips-per-class", "8", "--frames", "70",
        "--seed", "2", "--out", &dir.s("data.pose"),
    ]);
    assert_ok(&out, "make-synth");
    let out = run(&[
        "train-gan",
        "--data", &dir.s("data.pose"),
        "--out", &dir.s("run"),
        "--config", &dir.s("tiny.cfg"),
        "--holdout-classes", "1",
    ]);
    assert_ok(&out, "train-gan with holdout");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("training on 8 of 16 clips"), "{stdout}");
}
