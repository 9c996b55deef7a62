//! Central-difference gradient checking.
//!
//! Used by the verification suites to validate analytic gradients without
//! touching the tape's backward pass.

use super::tensor::Tensor;

/// Central finite differences of `loss` w.r.t. every entry of `params`.
pub fn finite_difference_gradients(
    params: &[Tensor],
    step: f64,
    loss: impl Fn(&[Tensor]) -> f64,
) -> Vec<Tensor> {
    let mut out = Vec::with_capacity(params.len());
    let mut work: Vec<Tensor> = params.to_vec();
    for t in 0..params.len() {
        let mut grad = Tensor::zeros(params[t].shape().to_vec());
        for i in 0..params[t].len() {
            let orig = work[t].data()[i];
            work[t].data_mut()[i] = orig + step;
            let up = loss(&work);
            work[t].data_mut()[i] = orig - step;
            let down = loss(&work);
            work[t].data_mut()[i] = orig;
            grad.data_mut()[i] = (up - down) / (2.0 * step);
        }
        out.push(grad);
    }
    out
}

/// Largest relative discrepancy between two gradient tensors.
///
/// The denominator is floored at 1e-3 so near-zero entries are compared
/// on an absolute scale, where finite differences are noise-limited.
pub fn max_relative_error(a: &Tensor, b: &Tensor) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-3))
        .fold(0.0, f64::max)
}
