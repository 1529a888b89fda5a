//! Training objectives.
//!
//! Sequences are slices of per-step [batch, pose_dim] tensors. Per-sample
//! quantities are averaged over the batch, so single-sample values match
//! hand calculations directly. Objectives written in maximization form in
//! the usual GAN formulation are negated here; everything is minimized.

use crate::autodiff::{backward_with_graph, Tensor};
use crate::data::SkeletonSpec;
use crate::nets::Param;
use crate::rng::Rng;
use crate::{Error, Real, Result};

/// Probability floor before taking logs.
const LOG_EPS: Real = 1e-12;

/// Guard under norm-style roots; see `autodiff::ops::NORM_EPS`.
const NORM_EPS: Real = 1e-30;

/// Every scalar coefficient of the discriminator, generator, and quality
/// objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    /// Gradient-penalty coefficient.
    pub lambda_gp: Real,
    /// L2 regularization coefficient (discriminator and quality network).
    pub alpha: Real,
    /// Consistency (pose gradient) weight in the generator total.
    pub alpha_pg: Real,
    /// Diversity weight in the generator total.
    pub alpha_d: Real,
    /// Energy weight in the generator total.
    pub alpha_e: Real,
    /// Bone-length weight in the generator total.
    pub alpha_b: Real,
    /// Diversity sharpness.
    pub eta: Real,
    /// Squared-velocity coefficient of the energy term.
    pub beta_v: Real,
    /// Squared-acceleration coefficient of the energy term.
    pub beta_a: Real,
    /// Floor C of the consistency loss.
    pub consistency_floor: Real,
    /// Norm order p of the consistency loss.
    pub p_norm: Real,
}

impl Default for LossWeights {
    fn default() -> LossWeights {
        LossWeights {
            lambda_gp: 10.0,
            alpha: 0.001,
            alpha_pg: 0.01,
            alpha_d: 1.0,
            alpha_e: 0.001,
            alpha_b: 0.1,
            eta: 10.0,
            beta_v: 1.0,
            beta_a: 1.0,
            consistency_floor: 0.001,
            p_norm: 2.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_gp < 0.0 {
            return Err(Error::InvalidConfig("lambda_gp must be >= 0".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidConfig("alpha must be >= 0".into()));
        }
        if self.p_norm < 1.0 {
            return Err(Error::InvalidConfig("p_norm must be >= 1".into()));
        }
        if self.consistency_floor < 0.0 {
            return Err(Error::InvalidConfig("consistency floor must be >= 0".into()));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidConfig("eta must be > 0".into()));
        }
        Ok(())
    }
}

fn clamped_log(p: &Tensor) -> Tensor {
    p.max_scalar(LOG_EPS).log()
}

/// Discriminator GAN loss: -[log p_real + log(1 - p_fake)], batch-averaged.
pub fn d_gan_loss(p_real: &Tensor, p_fake: &Tensor) -> Tensor {
    let real_term = clamped_log(p_real).mean();
    let fake_term = clamped_log(&p_fake.neg().add_scalar(1.0)).mean();
    real_term.add(&fake_term).neg()
}

/// Generator GAN loss (non-saturating): -log p_fake, batch-averaged.
pub fn g_gan_loss(p_fake: &Tensor) -> Tensor {
    clamped_log(p_fake).mean().neg()
}

/// Gradient penalty on epsilon-interpolated real/fake inputs:
/// mean over the batch of (||grad_xhat D(xhat)||_2 - 1)^2.
///
/// `score` maps a [batch, dim] input to per-sample scores ([batch, 1] or
/// [batch]); rows must be scored independently, which holds for any
/// feed-forward network applied row-wise. The interpolation point is built
/// from detached values, so the returned tensor carries gradients for the
/// scorer's parameters only (second-order, via the recorded backward pass)
/// and none for whatever produced `fake`.
pub fn gradient_penalty(
    score: &dyn Fn(&Tensor) -> Result<Tensor>,
    real: &Tensor,
    fake: &Tensor,
    rng: &mut Rng,
) -> Result<Tensor> {
    if real.shape() != fake.shape() {
        return Err(Error::ShapeMismatch(format!(
            "gradient penalty inputs {:?} vs {:?}",
            real.shape(),
            fake.shape()
        )));
    }
    assert_eq!(real.shape().len(), 2, "gradient penalty expects [batch, dim]");
    let (batch, dim) = (real.shape()[0], real.shape()[1]);

    let mut mixed = Vec::with_capacity(batch * dim);
    real.with_data(|r| {
        fake.with_data(|f| {
            for b in 0..batch {
                let eps = rng.unit();
                for i in 0..dim {
                    let idx = b * dim + i;
                    mixed.push(eps * r[idx] + (1.0 - eps) * f[idx]);
                }
            }
        })
    });
    let x_hat = Tensor::param(mixed, &[batch, dim]);

    let scores = score(&x_hat)?;
    assert_eq!(scores.numel(), batch, "score must be per-sample");
    let root = scores.sum();
    let grad = backward_with_graph(&root, &[&x_hat])?.get(&x_hat).clone();

    let row_norms = grad.square().sum_axis(1).add_scalar(NORM_EPS).sqrt(); // [batch]
    Ok(row_norms.add_scalar(-1.0).square().mean())
}

/// Consistency (pose gradient) loss with floor C:
/// max(C, [sum_t |y_t - y_{t-1}|^p]^{1/p}), batch-averaged before the floor.
/// The first difference uses the last prior pose when one is given.
pub fn consistency_loss(
    pred: &[Tensor],
    prior_last: Option<&Tensor>,
    weights: &LossWeights,
) -> Result<Tensor> {
    let p = weights.p_norm;
    if prior_last.is_none() && pred.len() < 2 {
        return Err(Error::ShapeMismatch(
            "consistency loss needs two predicted poses or a prior pose".into(),
        ));
    }
    assert!(!pred.is_empty());
    let batch = pred[0].shape()[0];

    let mut diffs: Vec<Tensor> = Vec::new();
    if let Some(last) = prior_last {
        diffs.push(pred[0].sub(last));
    }
    for w in pred.windows(2) {
        diffs.push(w[1].sub(&w[0]));
    }

    let mut acc = Tensor::zeros(&[batch]);
    for d in &diffs {
        let powered = if p == 2.0 { d.square() } else { d.abs().powf(p) };
        acc = acc.add(&powered.sum_axis(1));
    }
    let per_sample = acc.add_scalar(NORM_EPS).powf(1.0 / p);
    Ok(per_sample.mean().max_scalar(weights.consistency_floor))
}

/// Diversity loss: 1 - sigmoid(eta * delta) where delta is the mean
/// absolute elementwise difference between two predictions for the same
/// input but different latents. Lies in (0, 0.5]; computed as
/// sigmoid(-eta * delta), which stays strictly positive where the naive
/// form would round to zero.
pub fn diversity_loss(pred1: &[Tensor], pred2: &[Tensor], weights: &LossWeights) -> Tensor {
    assert_eq!(pred1.len(), pred2.len(), "prediction lengths differ");
    assert!(!pred1.is_empty());
    let mut abs_sum = Tensor::zeros(&[1]);
    let mut count = 0usize;
    for (a, b) in pred1.iter().zip(pred2) {
        assert_eq!(a.shape(), b.shape());
        abs_sum = abs_sum.add(&a.sub(b).abs().sum());
        count += a.numel();
    }
    let delta = abs_sum.scale(1.0 / count as Real);
    delta.scale(-weights.eta).sigmoid()
}

/// Center of mass of each predicted step: [batch, J*3] -> [batch, 3] via a
/// constant averaging matrix, so the path stays differentiable.
pub fn com_sequence(pred: &[Tensor]) -> Vec<Tensor> {
    assert!(!pred.is_empty());
    let width = pred[0].shape()[1];
    assert!(width.is_multiple_of(3));
    let joints = width / 3;
    let mut avg = vec![0.0; width * 3];
    for j in 0..joints {
        for c in 0..3 {
            avg[(j * 3 + c) * 3 + c] = 1.0 / joints as Real;
        }
    }
    let avg = Tensor::from_vec(avg, &[width, 3]);
    pred.iter().map(|p| p.matmul(&avg)).collect()
}

/// Energy loss value plus whether the acceleration term could be formed.
#[derive(Debug, Clone)]
pub struct EnergyLoss {
    pub value: Tensor,
    pub acceleration_included: bool,
}

/// Energy expenditure of the center-of-mass trajectory:
/// sum_t [beta_v v(t)^2 + beta_a a(t)^2] with unit-frame time steps,
/// batch-averaged. Fewer than three points: the acceleration term is
/// omitted and flagged.
pub fn energy_loss(com: &[Tensor], weights: &LossWeights) -> EnergyLoss {
    assert!(com.len() >= 2, "energy loss needs at least two frames");
    let batch = com[0].shape()[0];

    let velocities: Vec<Tensor> = com.windows(2).map(|w| w[1].sub(&w[0])).collect();
    let mut acc = Tensor::zeros(&[batch]);
    for v in &velocities {
        acc = acc.add(&v.square().sum_axis(1).scale(weights.beta_v));
    }
    let acceleration_included = velocities.len() >= 2;
    if acceleration_included {
        for a in velocities.windows(2).map(|w| w[1].sub(&w[0])) {
            acc = acc.add(&a.square().sum_axis(1).scale(weights.beta_a));
        }
    }
    EnergyLoss { value: acc.mean(), acceleration_included }
}

/// Bone-length loss: sum over frames of the L2 norm over bones of the
/// length mismatch against `reference` (one length per bone, in spec bone
/// order, shared by the whole batch), batch-averaged.
pub fn bone_loss(pred: &[Tensor], reference: &[Real], spec: &SkeletonSpec) -> Result<Tensor> {
    if reference.len() != spec.bone_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} reference lengths for {} bones",
            reference.len(),
            spec.bone_count()
        )));
    }
    assert!(!pred.is_empty());
    let batch = pred[0].shape()[0];
    let mut tiled = Vec::with_capacity(batch * reference.len());
    for _ in 0..batch {
        tiled.extend_from_slice(reference);
    }
    bone_loss_batched(pred, &Tensor::from_vec(tiled, &[batch, reference.len()]), spec)
}

/// [`bone_loss`] with per-sample reference lengths [batch, bones], for
/// batches mixing skeleton scales.
pub fn bone_loss_batched(pred: &[Tensor], reference: &Tensor, spec: &SkeletonSpec) -> Result<Tensor> {
    assert!(!pred.is_empty());
    let batch = pred[0].shape()[0];
    if reference.shape() != [batch, spec.bone_count()] {
        return Err(Error::ShapeMismatch(format!(
            "reference shape {:?} for {} bones",
            reference.shape(),
            spec.bone_count()
        )));
    }
    let width = pred[0].shape()[1];
    if width != spec.joint_count * 3 {
        return Err(Error::ShapeMismatch(format!(
            "pose width {} does not match skeleton with {} joints",
            width, spec.joint_count
        )));
    }

    let mut total = Tensor::zeros(&[batch]);
    for frame in pred {
        let mut frame_sq = Tensor::zeros(&[batch]);
        for (i, &(a, b)) in spec.bones.iter().enumerate() {
            let ja = frame.slice(1, a * 3, 3);
            let jb = frame.slice(1, b * 3, 3);
            let len = ja.sub(&jb).square().sum_axis(1).add_scalar(NORM_EPS).sqrt();
            let ref_i = reference.slice(1, i, 1).reshape(&[batch]);
            frame_sq = frame_sq.add(&len.sub(&ref_i).square());
        }
        total = total.add(&frame_sq.add_scalar(NORM_EPS).sqrt());
    }
    Ok(total.mean())
}

/// Generator total: L_gan + a_pg L_pg + a_d L_div + a_e L_e + a_b L_b.
pub fn g_total_loss(
    gan: &Tensor,
    consistency: &Tensor,
    diversity: &Tensor,
    energy: &Tensor,
    bone: &Tensor,
    weights: &LossWeights,
) -> Tensor {
    gan.add(&consistency.scale(weights.alpha_pg))
        .add(&diversity.scale(weights.alpha_d))
        .add(&energy.scale(weights.alpha_e))
        .add(&bone.scale(weights.alpha_b))
}

/// Discriminator total: L_gan + lambda_gp L_gp + alpha ||theta_d||_2.
pub fn d_total_loss(gan: &Tensor, penalty: &Tensor, param_norm: &Tensor, weights: &LossWeights) -> Tensor {
    gan.add(&penalty.scale(weights.lambda_gp))
        .add(&param_norm.scale(weights.alpha))
}

/// Quality loss: the GAN discriminator loss plus alpha ||theta_q||_2. The
/// caller must score a detached fake sequence so no gradient reaches the
/// generator.
pub fn q_loss(p_real: &Tensor, p_fake: &Tensor, theta_q_norm: &Tensor, weights: &LossWeights) -> Tensor {
    d_gan_loss(p_real, p_fake).add(&theta_q_norm.scale(weights.alpha))
}

/// L2 norm (not squared) over a whole parameter set.
pub fn params_l2_norm(params: &[Param]) -> Tensor {
    let mut sq = Tensor::zeros(&[1]);
    for p in params {
        sq = sq.add(&p.tensor.square().sum());
    }
    sq.add_scalar(NORM_EPS).sqrt()
}

/// Softmax cross-entropy: -log softmax(scores)[label], batch-averaged.
pub fn classification_loss(scores: &Tensor, labels: &[usize]) -> Result<Tensor> {
    assert_eq!(scores.shape().len(), 2);
    let (batch, classes) = (scores.shape()[0], scores.shape()[1]);
    assert_eq!(labels.len(), batch, "one label per row");
    for &label in labels {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
    }
    // Shift by the detached row max: the value is mathematically independent
    // of the shift, so treating it as a constant leaves both the value and
    // the gradient exact while keeping exp() in range.
    let row_max: Vec<Real> = scores.with_data(|d| {
        (0..batch)
            .map(|b| d[b * classes..(b + 1) * classes].iter().cloned().fold(Real::NEG_INFINITY, Real::max))
            .collect()
    });
    let shift = Tensor::from_vec(row_max, &[batch, 1]).repeat_col(classes);
    let shifted = scores.sub(&shift);
    let lse = shifted.exp().sum_axis(1).log(); // [batch]

    let mut one_hot = vec![0.0; batch * classes];
    for (b, &label) in labels.iter().enumerate() {
        one_hot[b * classes + label] = 1.0;
    }
    let picked = shifted.mul(&Tensor::from_vec(one_hot, &[batch, classes])).sum_axis(1);
    Ok(lse.sub(&picked).mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::backward;

    fn steps(values: &[&[Real]], batch: usize) -> Vec<Tensor> {
        values
            .iter()
            .map(|v| Tensor::from_vec(v.to_vec(), &[batch, v.len() / batch]))
            .collect()
    }

    #[test]
    fn d_gan_loss_values() {
        let half = Tensor::from_vec(vec![0.5], &[1, 1]);
        let v = d_gan_loss(&half, &half).value();
        assert!((v - 2.0 * (2.0 as Real).ln()).abs() < 1e-9);

        let p9 = Tensor::from_vec(vec![0.9], &[1, 1]);
        let p1 = Tensor::from_vec(vec![0.1], &[1, 1]);
        let v = d_gan_loss(&p9, &p1).value();
        assert!((v + 2.0 * (0.9 as Real).ln()).abs() < 1e-9);

        // Perfect discriminator: zero loss (clamping keeps it finite).
        let one = Tensor::from_vec(vec![1.0], &[1, 1]);
        let zero = Tensor::from_vec(vec![0.0], &[1, 1]);
        assert!(d_gan_loss(&one, &zero).value().abs() < 1e-9);
    }

    #[test]
    fn g_gan_loss_values() {
        let one = Tensor::from_vec(vec![1.0], &[1, 1]);
        assert!(g_gan_loss(&one).value().abs() < 1e-9);

        let half = Tensor::from_vec(vec![0.5], &[1, 1]);
        assert!((g_gan_loss(&half).value() - (2.0 as Real).ln()).abs() < 1e-9);

        let inv_e = Tensor::from_vec(vec![(1.0 as Real).exp().recip()], &[1, 1]);
        assert!((g_gan_loss(&inv_e).value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn q_loss_matches_d_gan_loss_when_unregularized() {
        let p_r = Tensor::from_vec(vec![0.8, 0.6], &[2, 1]);
        let p_f = Tensor::from_vec(vec![0.3, 0.4], &[2, 1]);
        let w = LossWeights { alpha: 0.0, ..Default::default() };
        let norm = Tensor::scalar(123.0);
        let q = q_loss(&p_r, &p_f, &norm, &w).value();
        let d = d_gan_loss(&p_r, &p_f).value();
        assert!((q - d).abs() < 1e-12);
    }

    #[test]
    fn consistency_hand_values() {
        let w = LossWeights { consistency_floor: 0.0, ..Default::default() };

        // Two 1-D poses {0, 3}: single difference of 3 -> norm 3.
        let pred = steps(&[&[0.0], &[3.0]], 1);
        assert!((consistency_loss(&pred, None, &w).unwrap().value() - 3.0).abs() < 1e-9);

        // {0, 3, 7}: diffs {3, 4} -> sqrt(9 + 16) = 5.
        let pred = steps(&[&[0.0], &[3.0], &[7.0]], 1);
        assert!((consistency_loss(&pred, None, &w).unwrap().value() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn consistency_floor_on_constant_sequence() {
        let w = LossWeights { consistency_floor: 0.1, ..Default::default() };
        let pred = steps(&[&[2.0], &[2.0], &[2.0]], 1);
        let prior = Tensor::from_vec(vec![2.0], &[1, 1]);
        let v = consistency_loss(&pred, Some(&prior), &w).unwrap().value();
        assert!((v - 0.1).abs() < 1e-9);
    }

    #[test]
    fn consistency_uses_prior_transition() {
        let w = LossWeights { consistency_floor: 0.0, ..Default::default() };
        let pred = steps(&[&[3.0]], 1);
        let prior = Tensor::from_vec(vec![0.0], &[1, 1]);
        let v = consistency_loss(&pred, Some(&prior), &w).unwrap().value();
        assert!((v - 3.0).abs() < 1e-9);
        // A single pose with no prior cannot form a difference.
        assert!(consistency_loss(&pred, None, &w).is_err());
    }

    #[test]
    fn diversity_values() {
        let w = LossWeights { eta: 1.0, ..Default::default() };
        let a = steps(&[&[0.0]], 1);
        let b = steps(&[&[0.0]], 1);
        assert!((diversity_loss(&a, &b, &w).value() - 0.5).abs() < 1e-9);

        // eta = 1, delta = ln 3 -> 1 - 1/(1 + 1/3) = 0.25.
        let c = steps(&[&[(3.0 as Real).ln()]], 1);
        assert!((diversity_loss(&a, &c, &w).value() - 0.25).abs() < 1e-9);

        // Huge delta -> loss -> 0.
        let d = steps(&[&[1.0e6]], 1);
        assert!(diversity_loss(&a, &d, &w).value() < 1e-6);
    }

    #[test]
    fn energy_hand_values() {
        let w = LossWeights { beta_v: 1.0, beta_a: 0.0, ..Default::default() };
        // COM at 1-D positions {0, 1, 2}: v = {1, 1} -> 2.
        let com = steps(&[&[0.0], &[1.0], &[2.0]], 1);
        let e = energy_loss(&com, &w);
        assert!((e.value.value() - 2.0).abs() < 1e-9);
        assert!(e.acceleration_included);

        // {0, 1, 3}: v = {1, 2}, a = {1} -> 1 with beta_v = 0.
        let w = LossWeights { beta_v: 0.0, beta_a: 1.0, ..Default::default() };
        let com = steps(&[&[0.0], &[1.0], &[3.0]], 1);
        assert!((energy_loss(&com, &w).value.value() - 1.0).abs() < 1e-9);

        // Stationary sequence -> 0.
        let w = LossWeights::default();
        let com = steps(&[&[5.0], &[5.0], &[5.0]], 1);
        assert!(energy_loss(&com, &w).value.value().abs() < 1e-9);
    }

    #[test]
    fn energy_flags_missing_acceleration() {
        let w = LossWeights::default();
        let com = steps(&[&[0.0], &[1.0]], 1);
        let e = energy_loss(&com, &w);
        assert!(!e.acceleration_included);
        assert!((e.value.value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bone_loss_hand_values() {
        let spec = SkeletonSpec::new("pair", 2, vec![(0, 1)]).unwrap();
        // One frame, one bone: predicted length 5, reference 3 -> 2.
        let frame = Tensor::from_vec(vec![0.0, 0.0, 0.0, 0.0, 3.0, 4.0], &[1, 6]);
        let v = bone_loss(std::slice::from_ref(&frame), &[3.0], &spec).unwrap().value();
        assert!((v - 2.0).abs() < 1e-9);

        // Two identical frames each contributing 2 -> 4.
        let v = bone_loss(&[frame.clone(), frame.clone()], &[3.0], &spec).unwrap().value();
        assert!((v - 4.0).abs() < 1e-9);

        // Exactly matching lengths -> 0.
        let v = bone_loss(&[frame], &[5.0], &spec).unwrap().value();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn bone_loss_rejects_mismatched_reference() {
        let spec = SkeletonSpec::new("pair", 2, vec![(0, 1)]).unwrap();
        let frame = Tensor::from_vec(vec![0.0; 6], &[1, 6]);
        assert!(bone_loss(&[frame], &[1.0, 2.0], &spec).is_err());
    }

    #[test]
    fn g_total_is_linear_in_components() {
        let w = LossWeights {
            alpha_pg: 1.0,
            alpha_d: 1.0,
            alpha_e: 1.0,
            alpha_b: 1.0,
            ..Default::default()
        };
        let c: Vec<Tensor> = (1..=5).map(|i| Tensor::scalar(i as Real)).collect();
        let v = g_total_loss(&c[0], &c[1], &c[2], &c[3], &c[4], &w).value();
        assert!((v - 15.0).abs() < 1e-12);

        // All alpha = 0 reduces to the GAN term.
        let w0 = LossWeights { alpha_pg: 0.0, alpha_d: 0.0, alpha_e: 0.0, alpha_b: 0.0, ..Default::default() };
        let v = g_total_loss(&c[0], &c[1], &c[2], &c[3], &c[4], &w0).value();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_total_component_weights() {
        let w = LossWeights::default();
        let v = d_total_loss(&Tensor::scalar(1.0), &Tensor::scalar(2.0), &Tensor::scalar(3.0), &w).value();
        assert!((v - (1.0 + 10.0 * 2.0 + 0.001 * 3.0)).abs() < 1e-12);

        let zero = Tensor::scalar(0.0);
        assert_eq!(d_total_loss(&zero, &zero, &zero, &w).value(), 0.0);

        let w0 = LossWeights { lambda_gp: 0.0, alpha: 0.0, ..Default::default() };
        let v = d_total_loss(&Tensor::scalar(0.7), &Tensor::scalar(9.0), &Tensor::scalar(9.0), &w0).value();
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn classification_loss_values() {
        // Uniform scores over 49 classes -> ln 49.
        let scores = Tensor::from_vec(vec![0.0; 49], &[1, 49]);
        let v = classification_loss(&scores, &[7]).unwrap().value();
        assert!((v - (49.0 as Real).ln()).abs() < 1e-9);

        // Strongly one-hot scores -> loss near 0.
        let mut s = vec![0.0; 10];
        s[3] = 50.0;
        let scores = Tensor::from_vec(s, &[1, 10]);
        assert!(classification_loss(&scores, &[3]).unwrap().value() < 1e-9);

        // Score shift invariance.
        let scores = Tensor::from_vec(vec![1.0, 2.0, 3.0], &[1, 3]);
        let shifted = scores.add_scalar(500.0);
        let a = classification_loss(&scores, &[1]).unwrap().value();
        let b = classification_loss(&shifted, &[1]).unwrap().value();
        assert!((a - b).abs() < 1e-9);

        // Out-of-range label.
        assert!(matches!(
            classification_loss(&scores, &[3]),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        ));
    }

    #[test]
    fn gradient_penalty_linear_scorer() {
        let mut rng = Rng::new(1);
        // score(v) = 2 * sum(v) over dim-1 input: gradient is 2 everywhere,
        // penalty (2 - 1)^2 = 1.
        let coeff = Tensor::param(vec![2.0], &[1, 1]);
        let cc = coeff.clone();
        let score = move |x: &Tensor| -> Result<Tensor> { Ok(x.matmul(&cc)) };
        let real = Tensor::from_vec(vec![0.3, -0.4], &[2, 1]);
        let fake = Tensor::from_vec(vec![0.9, 0.1], &[2, 1]);
        let gp = gradient_penalty(&score, &real, &fake, &mut rng).unwrap();
        assert!((gp.value() - 1.0).abs() < 1e-9);

        // Swapping real and fake when both are equal changes nothing.
        let same = Tensor::from_vec(vec![0.5, 0.5], &[2, 1]);
        let a = gradient_penalty(&score, &same, &same, &mut Rng::new(2)).unwrap();
        let b = gradient_penalty(&score, &same, &same, &mut Rng::new(2)).unwrap();
        assert!((a.value() - b.value()).abs() < 1e-12);

        // Unit-gradient scorer: zero penalty.
        let unit = Tensor::param(vec![1.0], &[1, 1]);
        let score = move |x: &Tensor| -> Result<Tensor> { Ok(x.matmul(&unit)) };
        let gp = gradient_penalty(&score, &real, &fake, &mut rng).unwrap();
        assert!(gp.value().abs() < 1e-9);
    }

    #[test]
    fn gradient_penalty_rejects_shape_mismatch() {
        let score = |x: &Tensor| -> Result<Tensor> { Ok(x.sum_axis(1)) };
        let real = Tensor::from_vec(vec![0.0; 4], &[2, 2]);
        let fake = Tensor::from_vec(vec![0.0; 6], &[2, 3]);
        assert!(gradient_penalty(&score, &real, &fake, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn gradient_penalty_reaches_scorer_parameters() {
        // d(gp)/d(coeff) of penalty (c - 1)^2 is 2(c - 1) for dim-1 inputs.
        let coeff = Tensor::param(vec![2.0], &[1, 1]);
        let cc = coeff.clone();
        let score = move |x: &Tensor| -> Result<Tensor> { Ok(x.matmul(&cc)) };
        let real = Tensor::from_vec(vec![0.3], &[1, 1]);
        let fake = Tensor::from_vec(vec![0.9], &[1, 1]);
        let gp = gradient_penalty(&score, &real, &fake, &mut Rng::new(3)).unwrap();
        let grads = backward(&gp, &[&coeff]).unwrap();
        assert!((grads.get(&coeff).value() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bone_and_energy_invariant_under_translation() {
        let spec = SkeletonSpec::new("pair", 2, vec![(0, 1)]).unwrap();
        let w = LossWeights::default();
        let frames: Vec<Tensor> = (0..3)
            .map(|t| {
                let t = t as Real;
                Tensor::from_vec(vec![t, 0.0, 0.0, t + 0.3, 0.4, 0.0], &[1, 6])
            })
            .collect();
        let shifted: Vec<Tensor> = frames.iter().map(|f| f.add_scalar(7.5)).collect();

        let b0 = bone_loss(&frames, &[0.9], &spec).unwrap().value();
        let b1 = bone_loss(&shifted, &[0.9], &spec).unwrap().value();
        assert!((b0 - b1).abs() < 1e-9);

        let e0 = energy_loss(&com_sequence(&frames), &w).value.value();
        let e1 = energy_loss(&com_sequence(&shifted), &w).value.value();
        assert!((e0 - e1).abs() < 1e-9);
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::default().validate().is_ok());
        assert!(LossWeights { lambda_gp: -1.0, ..Default::default() }.validate().is_err());
        assert!(LossWeights { p_norm: 0.5, ..Default::default() }.validate().is_err());
        assert!(LossWeights { eta: 0.0, ..Default::default() }.validate().is_err());
    }
}
