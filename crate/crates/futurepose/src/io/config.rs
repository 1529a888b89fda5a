//! Run configuration documents.
//!
//! A flat `key = value` text format with `#` comments. Unknown keys are
//! rejected. When writing, every value carries a provenance comment:
//! `reference setting` for values taken from the published training recipe,
//! `implementation default` for values this implementation had to choose.

use crate::nets::{LatentDist, LatentSpec};
use crate::train::TrainConfig;
use crate::{Error, Real, Result};

fn provenance(key: &str) -> &'static str {
    const REFERENCE: &[&str] = &[
        "k_disc_iters",
        "lr",
        "lr_quality",
        "lambda_gp",
        "alpha",
        "m",
        "n",
        "z_dim",
        "p_norm",
    ];
    if REFERENCE.contains(&key) {
        "reference setting"
    } else {
        "implementation default"
    }
}

pub fn write_run_config(cfg: &TrainConfig) -> String {
    let mut out = String::from("# futurepose run configuration\n");
    let mut push = |key: &str, value: String| {
        out.push_str(&format!("{key} = {value}  # {}\n", provenance(key)));
    };

    push("seed", cfg.seed.to_string());
    push("epochs", cfg.epochs.to_string());
    push("batch_size", cfg.batch_size.to_string());
    push("k_disc_iters", cfg.k_disc_iters.to_string());
    push("lr", fmt_real(cfg.lr));
    push("lr_quality", fmt_real(cfg.lr_quality));
    push("adam_beta1", fmt_real(cfg.adam_beta1));
    push("adam_beta2", fmt_real(cfg.adam_beta2));
    push("adam_eps", fmt_real(cfg.adam_eps));
    push("m", cfg.m.to_string());
    push("n", cfg.n.to_string());
    push("z_dim", cfg.latent.dim.to_string());
    match cfg.latent.dist {
        LatentDist::Uniform { lo, hi } => {
            push("z_dist", "uniform".into());
            push("z_lo", fmt_real(lo));
            push("z_hi", fmt_real(hi));
        }
        LatentDist::Gaussian { mean, std } => {
            push("z_dist", "gaussian".into());
            push("z_mean", fmt_real(mean));
            push("z_std", fmt_real(std));
        }
    }
    push("lambda_gp", fmt_real(cfg.weights.lambda_gp));
    push("alpha", fmt_real(cfg.weights.alpha));
    push("alpha_pg", fmt_real(cfg.weights.alpha_pg));
    push("alpha_d", fmt_real(cfg.weights.alpha_d));
    push("alpha_e", fmt_real(cfg.weights.alpha_e));
    push("alpha_b", fmt_real(cfg.weights.alpha_b));
    push("eta", fmt_real(cfg.weights.eta));
    push("beta_v", fmt_real(cfg.weights.beta_v));
    push("beta_a", fmt_real(cfg.weights.beta_a));
    push("consistency_floor", fmt_real(cfg.weights.consistency_floor));
    push("p_norm", fmt_real(cfg.weights.p_norm));
    push("n_selection", cfg.n_selection.to_string());
    push("selection_warmup_epochs", cfg.selection_warmup_epochs.to_string());
    push("segment_len", cfg.segment_len.to_string());
    push("frame_stride", cfg.frame_stride.to_string());
    push("holdout_fraction", fmt_real(cfg.holdout_fraction));
    push("eval_samples", cfg.eval_samples.to_string());
    push("gen_hidden", cfg.gen_hidden.to_string());
    push("gen_layers", cfg.gen_layers.to_string());
    push("z_proj_gain", fmt_real(cfg.z_proj_gain));
    push("disc_width", cfg.disc_width.to_string());
    push("disc_depth", cfg.disc_depth.to_string());
    push("disc_leak", fmt_real(cfg.disc_leak));
    push("quality_hidden", cfg.quality_hidden.to_string());
    push("quality_layers", cfg.quality_layers.to_string());
    push("class_head_hidden", cfg.class_head_hidden.to_string());
    push("classifier_epochs", cfg.classifier_epochs.to_string());
    push("classifier_lr", fmt_real(cfg.classifier_lr));
    push("classifier_batch", cfg.classifier_batch.to_string());
    push("test_fraction", fmt_real(cfg.test_fraction));
    out
}

fn fmt_real(v: Real) -> String {
    // Shortest representation that round-trips.
    format!("{v}")
}

/// Parses a config document over the defaults. Keys may be omitted; unknown
/// keys are an error.
pub fn parse_run_config(text: &str) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    let mut z_dim = cfg.latent.dim;
    let mut z_dist = match cfg.latent.dist {
        LatentDist::Uniform { .. } => "uniform".to_string(),
        LatentDist::Gaussian { .. } => "gaussian".to_string(),
    };
    let (mut z_lo, mut z_hi, mut z_mean, mut z_std) = (-1.0, 1.0, 0.0, 1.0);

    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ln = i + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: ln,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());

        let eu = |what: &str| Error::Parse { line: ln, msg: format!("bad {what}: `{value}`") };
        macro_rules! as_usize {
            () => {
                value.parse::<usize>().map_err(|_| eu("integer"))?
            };
        }
        macro_rules! as_real {
            () => {
                value.parse::<Real>().map_err(|_| eu("number"))?
            };
        }

        match key {
            "seed" => cfg.seed = value.parse::<u64>().map_err(|_| eu("integer"))?,
            "epochs" => cfg.epochs = as_usize!(),
            "batch_size" => cfg.batch_size = as_usize!(),
            "k_disc_iters" => cfg.k_disc_iters = as_usize!(),
            "lr" => cfg.lr = as_real!(),
            "lr_quality" => cfg.lr_quality = as_real!(),
            "adam_beta1" => cfg.adam_beta1 = as_real!(),
            "adam_beta2" => cfg.adam_beta2 = as_real!(),
            "adam_eps" => cfg.adam_eps = as_real!(),
            "m" => cfg.m = as_usize!(),
            "n" => cfg.n = as_usize!(),
            "z_dim" => z_dim = as_usize!(),
            "z_dist" => z_dist = value.to_string(),
            "z_lo" => z_lo = as_real!(),
            "z_hi" => z_hi = as_real!(),
            "z_mean" => z_mean = as_real!(),
            "z_std" => z_std = as_real!(),
            "lambda_gp" => cfg.weights.lambda_gp = as_real!(),
            "alpha" => cfg.weights.alpha = as_real!(),
            "alpha_pg" => cfg.weights.alpha_pg = as_real!(),
            "alpha_d" => cfg.weights.alpha_d = as_real!(),
            "alpha_e" => cfg.weights.alpha_e = as_real!(),
            "alpha_b" => cfg.weights.alpha_b = as_real!(),
            "eta" => cfg.weights.eta = as_real!(),
            "beta_v" => cfg.weights.beta_v = as_real!(),
            "beta_a" => cfg.weights.beta_a = as_real!(),
            "consistency_floor" => cfg.weights.consistency_floor = as_real!(),
            "p_norm" => cfg.weights.p_norm = as_real!(),
            "n_selection" => cfg.n_selection = as_usize!(),
            "selection_warmup_epochs" => cfg.selection_warmup_epochs = as_usize!(),
            "segment_len" => cfg.segment_len = as_usize!(),
            "frame_stride" => cfg.frame_stride = as_usize!(),
            "holdout_fraction" => cfg.holdout_fraction = as_real!(),
            "eval_samples" => cfg.eval_samples = as_usize!(),
            "gen_hidden" => cfg.gen_hidden = as_usize!(),
            "gen_layers" => cfg.gen_layers = as_usize!(),
            "z_proj_gain" => cfg.z_proj_gain = as_real!(),
            "disc_width" => cfg.disc_width = as_usize!(),
            "disc_depth" => cfg.disc_depth = as_usize!(),
            "disc_leak" => cfg.disc_leak = as_real!(),
            "quality_hidden" => cfg.quality_hidden = as_usize!(),
            "quality_layers" => cfg.quality_layers = as_usize!(),
            "class_head_hidden" => cfg.class_head_hidden = as_usize!(),
            "classifier_epochs" => cfg.classifier_epochs = as_usize!(),
            "classifier_lr" => cfg.classifier_lr = as_real!(),
            "classifier_batch" => cfg.classifier_batch = as_usize!(),
            "test_fraction" => cfg.test_fraction = as_real!(),
            other => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    cfg.latent = LatentSpec {
        dim: z_dim,
        dist: match z_dist.as_str() {
            "uniform" => LatentDist::Uniform { lo: z_lo, hi: z_hi },
            "gaussian" => LatentDist::Gaussian { mean: z_mean, std: z_std },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "z_dist must be uniform or gaussian, got `{other}`"
                )))
            }
        },
    };
    cfg.validate()?;
    Ok(cfg)
}
