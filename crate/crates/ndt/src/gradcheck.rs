//! Central finite-difference verification, `f64` only.
//!
//! This path never touches the tape's backward code: the caller supplies a
//! closure that rebuilds the forward computation from plain tensors, and we
//! difference it numerically.

use crate::tensor::Tensor;

/// Central differences of `f` at `inputs`, one perturbed coordinate at a
/// time: `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<F>(f: F, inputs: &[Tensor<f64>], h: f64) -> Vec<Tensor<f64>>
where
    F: Fn(&[Tensor<f64>]) -> f64,
{
    let mut out = Vec::with_capacity(inputs.len());
    for (i, t) in inputs.iter().enumerate() {
        let mut grad = Tensor::zeros(t.shape());
        for j in 0..t.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            grad.data_mut()[j] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        out.push(grad);
    }
    out
}

/// `max |a - b| / max(scale, |a|_inf, |b|_inf)` over paired tensors.
pub fn max_relative_error(analytic: &[Tensor<f64>], numeric: &[Tensor<f64>]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        let inf = |t: &Tensor<f64>| t.data().iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let scale = inf(a).max(inf(n)).max(1e-6);
        for (&x, &y) in a.data().iter().zip(n.data()) {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    worst
}
