//! Finite-difference verification of analytic gradients.
//!
//! The oracle is a central difference: (f(x + h) - f(x - h)) / 2h per
//! coordinate, compared against the engine's backward pass. It is the
//! independent reference used by the test suites and the `gradcheck` CLI
//! command; it never touches the backward rules it is checking.

use super::{backward, no_grad, Tensor};
use crate::{Real, Result};

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Relative error per coordinate of the checked tensor.
    pub per_coordinate: Vec<Real>,
    pub max_rel_err: Real,
    pub worst_coordinate: usize,
    pub tol: Real,
    pub passed: bool,
}

impl GradCheckReport {
    fn from_errors(per_coordinate: Vec<Real>, tol: Real) -> GradCheckReport {
        let (worst_coordinate, max_rel_err) = per_coordinate
            .iter()
            .cloned()
            .enumerate()
            .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
        GradCheckReport {
            per_coordinate,
            max_rel_err,
            worst_coordinate,
            tol,
            passed: max_rel_err <= tol,
        }
    }
}

fn rel_err(analytic: Real, numeric: Real) -> Real {
    let denom = (analytic.abs() + numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Checks d f(x) / dx at `point` against central differences.
///
/// `f` must map a tensor of `point`'s shape to a scalar tensor.
pub fn check_gradient(
    f: &dyn Fn(&Tensor) -> Tensor,
    point: &Tensor,
    step: Real,
    tol: Real,
) -> Result<GradCheckReport> {
    assert!(step > 0.0 && tol > 0.0);
    let x = Tensor::param(point.to_vec(), point.shape());
    let y = f(&x);
    let analytic = backward(&y, &[&x])?.get(&x).to_vec();

    let base = point.to_vec();
    let mut errors = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let numeric = no_grad(|| {
            let mut plus = base.clone();
            plus[i] += step;
            let mut minus = base.clone();
            minus[i] -= step;
            let fp = f(&Tensor::from_vec(plus, point.shape())).value();
            let fm = f(&Tensor::from_vec(minus, point.shape())).value();
            (fp - fm) / (2.0 * step)
        });
        errors.push(rel_err(analytic[i], numeric));
    }
    Ok(GradCheckReport::from_errors(errors, tol))
}

/// Checks the gradient of `f()` with respect to `param`, a leaf tensor the
/// closure captures. The parameter is perturbed in place for the numeric
/// side and restored afterwards. Works for second-order paths too: if `f`
/// internally builds a gradient with `backward_with_graph`, the analytic
/// side here differentiates through it.
pub fn check_param_gradient(
    f: &dyn Fn() -> Tensor,
    param: &Tensor,
    step: Real,
    tol: Real,
) -> Result<GradCheckReport> {
    assert!(step > 0.0 && tol > 0.0);
    let y = f();
    let analytic = backward(&y, &[param])?.get(param).to_vec();

    let base = param.to_vec();
    let mut errors = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += step;
        param.set_data(&plus);
        let fp = f().value();
        let mut minus = base.clone();
        minus[i] -= step;
        param.set_data(&minus);
        let fm = f().value();
        param.set_data(&base);
        let numeric = (fp - fm) / (2.0 * step);
        errors.push(rel_err(analytic[i], numeric));
    }
    Ok(GradCheckReport::from_errors(errors, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn sum_of_squares_passes() {
        let mut rng = Rng::new(9);
        let point = Tensor::from_vec((0..5).map(|_| rng.uniform(-2.0, 2.0)).collect(), &[5]);
        let report = check_gradient(&|x| x.square().sum(), &point, 1e-5, 1e-4).unwrap();
        assert!(report.passed, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn constant_function_passes_with_zero_grads() {
        let point = Tensor::from_vec(vec![1.0, -2.0], &[2]);
        let report =
            check_gradient(&|x| x.detach().sum().scale(0.0).add_scalar(3.0), &point, 1e-5, 1e-4)
                .unwrap();
        assert!(report.passed);
        assert_eq!(report.max_rel_err, 0.0);
    }

    #[test]
    fn corrupted_gradient_fails() {
        // Negative control: the forward value is x^2 but the graph is cut by
        // a detach, so the analytic gradient is 0 while the numeric one is 2x.
        let point = Tensor::from_vec(vec![1.5], &[1]);
        let report = check_gradient(&|x| x.detach().square().sum().add(&x.sum().scale(0.0)),
            &point, 1e-5, 1e-4).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn param_gradient_matches_for_matmul_chain() {
        let mut rng = Rng::new(4);
        let w = Tensor::param((0..6).map(|_| rng.uniform(-1.0, 1.0)).collect(), &[3, 2]);
        let x = Tensor::from_vec((0..6).map(|_| rng.uniform(-1.0, 1.0)).collect(), &[2, 3]);
        let wc = w.clone();
        let f = move || x.matmul(&wc).tanh().square().sum();
        let report = check_param_gradient(&f, &w, 1e-5, 1e-4).unwrap();
        assert!(report.passed, "max rel err {}", report.max_rel_err);
    }
}
