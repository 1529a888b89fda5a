//! Finite-difference verification suites.
//!
//! Each suite checks one primitive or one loss against central differences
//! on many random small instances. These back the `gradcheck` CLI command
//! and the acceptance tests. The gradient-penalty suite differentiates the
//! penalty with respect to the scorer's parameters, exercising the
//! second-order path end to end.

use crate::autodiff::gradcheck::check_param_gradient;
use crate::autodiff::{concat, Tensor};
use crate::data::SkeletonSpec;
use crate::loss::{
    bone_loss, classification_loss, consistency_loss, d_gan_loss, diversity_loss, energy_loss,
    g_gan_loss, gradient_penalty, LossWeights,
};
use crate::rng::Rng;
use crate::{Real, Result};

const STEP: Real = 1e-5;
pub const PRIMITIVE_TOL: Real = 1e-4;
pub const PENALTY_TOL: Real = 1e-3;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub max_rel_err: Real,
    pub tol: Real,
    pub passed: bool,
}

impl SuiteResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:<28} cases {:>4}  max rel err {:.3e}  (tol {:.0e})",
            if self.passed { "pass" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_rel_err,
            self.tol
        )
    }
}

struct Suite {
    rng: Rng,
}

impl Suite {
    fn tensor(&mut self, shape: &[usize], lo: Real, hi: Real) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::param((0..n).map(|_| self.rng.uniform(lo, hi)).collect(), shape)
    }

    /// Random point avoiding |v| < margin (for kinked primitives).
    fn tensor_off_kink(&mut self, shape: &[usize], margin: Real) -> Tensor {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                let v = self.rng.uniform(margin, 1.5);
                if self.rng.unit() < 0.5 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Tensor::param(data, shape)
    }

    fn small_shape(&mut self) -> Vec<usize> {
        vec![self.rng.below(3) + 1, self.rng.below(3) + 1]
    }
}

/// Checks `build(x)` as a scalar function of one parameter tensor.
fn check_fn(
    suite: &mut Suite,
    trials: usize,
    tol: Real,
    name: &str,
    mut make: impl FnMut(&mut Suite) -> (Tensor, Box<dyn Fn() -> Tensor>),
) -> Result<SuiteResult> {
    let mut worst = 0.0 as Real;
    for _ in 0..trials {
        let (param, f) = make(suite);
        let report = check_param_gradient(&*f, &param, STEP, tol)?;
        worst = worst.max(report.max_rel_err);
    }
    Ok(SuiteResult { name: name.into(), cases: trials, max_rel_err: worst, tol, passed: worst <= tol })
}

/// Finite-difference suites for every differentiable primitive.
pub fn primitive_suites(trials: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut s = Suite { rng: Rng::new(seed) };
    let mut out = Vec::new();

    // A random weighted-sum reduction makes gradients non-uniform so
    // asymmetric errors cannot cancel.
    macro_rules! unary {
        ($name:literal, $make_x:expr, $apply:expr) => {{
            let make_x: &dyn Fn(&mut Suite) -> Tensor = &$make_x;
            let apply: std::rc::Rc<dyn Fn(&Tensor) -> Tensor> = std::rc::Rc::new($apply);
            out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, $name, |s| {
                let x = make_x(s);
                let xc = x.clone();
                let ap = apply.clone();
                let out_shape = crate::autodiff::no_grad(|| ap(&x)).shape().to_vec();
                let w = Tensor::from_vec(
                    (0..out_shape.iter().product::<usize>())
                        .map(|_| s.rng.uniform(-2.0, 2.0))
                        .collect(),
                    &out_shape,
                );
                (x, Box::new(move || ap(&xc).mul(&w).sum()))
            })?);
        }};
    }

    unary!("add", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .add(&x.scale(0.5)));
    unary!("sub", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .sub(&x.square()));
    unary!("mul", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .mul(&x.add_scalar(1.0)));
    unary!("neg", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x.neg());
    unary!("scale", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .scale(-1.7));
    unary!("add_scalar", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .add_scalar(0.3));
    unary!("max_scalar", |s: &mut Suite| { let sh = s.small_shape(); s.tensor_off_kink(&sh, 0.1) }, |x| x
        .max_scalar(0.0));
    unary!("pow_scalar", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, 0.3, 2.0) }, |x| x
        .powf(1.7));
    unary!("sigmoid", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -3.0, 3.0) }, |x| x
        .sigmoid());
    unary!("tanh", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -3.0, 3.0) }, |x| x.tanh());
    unary!("relu", |s: &mut Suite| { let sh = s.small_shape(); s.tensor_off_kink(&sh, 0.05) }, |x| x
        .relu());
    unary!("leaky_relu", |s: &mut Suite| { let sh = s.small_shape(); s.tensor_off_kink(&sh, 0.05) }, |x| x
        .leaky_relu(0.2));
    unary!("square", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .square());
    unary!("sqrt", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, 0.2, 3.0) }, |x| x.sqrt());
    unary!("abs", |s: &mut Suite| { let sh = s.small_shape(); s.tensor_off_kink(&sh, 0.05) }, |x| x
        .abs());
    unary!("exp", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x.exp());
    unary!("log", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, 0.2, 3.0) }, |x| x.log());
    unary!("softmax", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .softmax());
    unary!("transpose", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, -2.0, 2.0) }, |x| x
        .t());
    unary!("reshape", |s: &mut Suite| s.tensor(&[2, 3], -2.0, 2.0), |x| x.reshape(&[3, 2]));
    unary!("slice", |s: &mut Suite| s.tensor(&[3, 4], -2.0, 2.0), |x| x.slice(1, 1, 2));
    unary!("pad", |s: &mut Suite| s.tensor(&[2, 2], -2.0, 2.0), |x| x.pad(0, 1, 2));
    unary!("repeat_col", |s: &mut Suite| s.tensor(&[3], -2.0, 2.0), |x| x.repeat_col(4));
    unary!("repeat_row", |s: &mut Suite| s.tensor(&[3], -2.0, 2.0), |x| x.repeat_row(4));
    unary!("broadcast", |s: &mut Suite| s.tensor(&[1], -2.0, 2.0), |x| x.broadcast_to(&[2, 3]));
    unary!("norm", |s: &mut Suite| { let sh = s.small_shape(); s.tensor(&sh, 0.3, 2.0) }, |x| x
        .l2_norm().broadcast_to(&[1]));

    // sum / mean / sum_axis get scalar outputs already; check directly.
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "sum", |s| {
        let sh = s.small_shape();
        let x = s.tensor(&sh, -2.0, 2.0);
        let xc = x.clone();
        (x, Box::new(move || xc.square().sum()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "mean", |s| {
        let sh = s.small_shape();
        let x = s.tensor(&sh, -2.0, 2.0);
        let xc = x.clone();
        (x, Box::new(move || xc.square().mean()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "sum_axis", |s| {
        let x = s.tensor(&[3, 4], -2.0, 2.0);
        let xc = x.clone();
        let mut wrng = s.rng.stream(3);
        let w = Tensor::from_vec((0..3).map(|_| wrng.uniform(-2.0, 2.0)).collect(), &[3]);
        (x, Box::new(move || xc.sum_axis(1).mul(&w).sum()))
    })?);

    // Binary primitives with two independent parameters: check each side.
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "matmul(lhs)", |s| {
        let a = s.tensor(&[2, 3], -1.5, 1.5);
        let b = s.tensor(&[3, 2], -1.5, 1.5).detach();
        let ac = a.clone();
        (a, Box::new(move || ac.matmul(&b).square().sum()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "matmul(rhs)", |s| {
        let a = s.tensor(&[2, 3], -1.5, 1.5).detach();
        let b = s.tensor(&[3, 2], -1.5, 1.5);
        let bc = b.clone();
        (b, Box::new(move || a.matmul(&bc).square().sum()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "concat", |s| {
        let a = s.tensor(&[2, 2], -1.5, 1.5);
        let b = s.tensor(&[2, 3], -1.5, 1.5).detach();
        let ac = a.clone();
        (a, Box::new(move || concat(&[&ac, &b], 1).square().sum()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "add_row", |s| {
        let m = s.tensor(&[3, 2], -1.5, 1.5).detach();
        let r = s.tensor(&[2], -1.5, 1.5);
        let rc = r.clone();
        (r, Box::new(move || m.add_row(&rc).square().sum()))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "mul_col", |s| {
        let m = s.tensor(&[3, 2], -1.5, 1.5).detach();
        let c = s.tensor(&[3, 1], -1.5, 1.5);
        let cc = c.clone();
        (c, Box::new(move || m.mul_col(&cc).square().sum()))
    })?);

    Ok(out)
}

/// Finite-difference suites for every loss, including the second-order
/// gradient-penalty parameter path.
pub fn loss_suites(trials: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    let mut s = Suite { rng: Rng::new(seed) };
    let weights = LossWeights { consistency_floor: 0.0, ..Default::default() };
    let mut out = Vec::new();

    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "d_gan_loss", |s| {
        let p = s.tensor(&[2, 1], 0.05, 0.95);
        let q = s.tensor(&[2, 1], 0.05, 0.95).detach();
        let pc = p.clone();
        (p, Box::new(move || d_gan_loss(&pc, &q)))
    })?);
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "g_gan_loss", |s| {
        let p = s.tensor(&[2, 1], 0.05, 0.95);
        let pc = p.clone();
        (p, Box::new(move || g_gan_loss(&pc)))
    })?);

    let w_cons = weights.clone();
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "consistency_loss", move |s| {
        let steps: Vec<Tensor> = (0..3).map(|_| s.tensor(&[2, 4], -1.0, 1.0)).collect();
        let prior = s.tensor(&[2, 4], -1.0, 1.0).detach();
        let target = steps[1].clone();
        let w = w_cons.clone();
        (
            target,
            Box::new(move || consistency_loss(&steps, Some(&prior), &w).unwrap()),
        )
    })?);

    let w_div = weights.clone();
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "diversity_loss", move |s| {
        let a: Vec<Tensor> = (0..2).map(|_| s.tensor(&[2, 3], -1.0, 1.0)).collect();
        let b: Vec<Tensor> = (0..2).map(|_| s.tensor(&[2, 3], -1.0, 1.0)).collect();
        let target = a[0].clone();
        let w = w_div.clone();
        (target, Box::new(move || diversity_loss(&a, &b, &w)))
    })?);

    let w_energy = weights.clone();
    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "energy_loss", move |s| {
        let com: Vec<Tensor> = (0..4).map(|_| s.tensor(&[2, 3], -1.0, 1.0)).collect();
        let target = com[1].clone();
        let w = w_energy.clone();
        (target, Box::new(move || energy_loss(&com, &w).value))
    })?);

    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "bone_loss", |s| {
        let spec = SkeletonSpec::new("probe", 3, vec![(0, 1), (1, 2)]).unwrap();
        let frames: Vec<Tensor> = (0..2).map(|_| s.tensor(&[2, 9], -1.0, 1.0)).collect();
        let target = frames[0].clone();
        (
            target,
            Box::new(move || bone_loss(&frames, &[0.8, 1.1], &spec).unwrap()),
        )
    })?);

    out.push(check_fn(&mut s, trials, PRIMITIVE_TOL, "classification_loss", |s| {
        let scores = s.tensor(&[2, 5], -2.0, 2.0);
        let sc = scores.clone();
        (
            scores,
            Box::new(move || classification_loss(&sc, &[1, 4]).unwrap()),
        )
    })?);

    // Quality loss shares the d_gan_loss formula; its regularizer path is
    // covered by `norm`. The totals are linear combinations (covered by
    // scale/add), so the remaining second-order path is the penalty itself.
    out.push(gradient_penalty_suite(trials, seed ^ 0x9e37)?);

    Ok(out)
}

/// d(penalty)/d(theta) of a small randomly initialized scorer, against
/// central differences of the penalty value. Exercises double backward.
pub fn gradient_penalty_suite(trials: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0 as Real;
    for _ in 0..trials {
        let dim = rng.below(3) + 2;
        let hidden = rng.below(3) + 2;
        let batch = rng.below(2) + 1;
        let w1 = Tensor::param(
            (0..dim * hidden).map(|_| rng.uniform(-0.8, 0.8)).collect(),
            &[dim, hidden],
        );
        let w2 = Tensor::param(
            (0..hidden).map(|_| rng.uniform(-0.8, 0.8)).collect(),
            &[hidden, 1],
        );
        let real = Tensor::from_vec(
            (0..batch * dim).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            &[batch, dim],
        );
        let fake = Tensor::from_vec(
            (0..batch * dim).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            &[batch, dim],
        );
        let eps_seed = rng.next_u64();

        for p in [&w1, &w2] {
            let (w1c, w2c) = (w1.clone(), w2.clone());
            let (rc, fc) = (real.clone(), fake.clone());
            let f = move || {
                // Same interpolation draw every evaluation so the function
                // is deterministic in theta.
                let mut eps_rng = Rng::new(eps_seed);
                let score = |x: &Tensor| -> Result<Tensor> {
                    Ok(x.matmul(&w1c).tanh().matmul(&w2c))
                };
                gradient_penalty(&score, &rc, &fc, &mut eps_rng).unwrap()
            };
            let report = check_param_gradient(&f, p, STEP, PENALTY_TOL)?;
            worst = worst.max(report.max_rel_err);
        }
    }
    Ok(SuiteResult {
        name: "gradient_penalty (2nd order)".into(),
        cases: trials * 2,
        max_rel_err: worst,
        tol: PENALTY_TOL,
        passed: worst <= PENALTY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_suites_pass_quickly() {
        for r in primitive_suites(8, 1).unwrap() {
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn loss_suites_pass_quickly() {
        for r in loss_suites(6, 2).unwrap() {
            assert!(r.passed, "{}", r.line());
        }
    }
}
