//! Central finite-difference gradient checking.

use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Central-difference gradient of `f` at `x`.
pub fn numerical_gradient(x: &Tensor, step: f64, mut f: impl FnMut(&Tensor) -> f64) -> Tensor {
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for k in 0..x.len() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + step;
        let up = f(&probe);
        probe.data_mut()[k] = orig - step;
        let down = f(&probe);
        probe.data_mut()[k] = orig;
        grad.data_mut()[k] = (up - down) / (2.0 * step);
    }
    grad
}

/// Central-difference gradients of `loss` with respect to every parameter
/// tensor that `params` exposes.
pub fn numerical_param_gradients<T: Clone>(
    model: &T,
    params: impl Fn(&mut T) -> Vec<&mut Tensor>,
    loss: impl Fn(&T) -> f64,
    step: f64,
) -> Vec<Tensor> {
    let mut probe = model.clone();
    let count = params(&mut probe).len();
    let mut grads = Vec::with_capacity(count);
    for p in 0..count {
        let len = params(&mut probe)[p].len();
        let mut g = Tensor::zeros(params(&mut probe)[p].shape());
        for k in 0..len {
            let orig = params(&mut probe)[p].data()[k];
            params(&mut probe)[p].data_mut()[k] = orig + step;
            let up = loss(&probe);
            params(&mut probe)[p].data_mut()[k] = orig - step;
            let down = loss(&probe);
            params(&mut probe)[p].data_mut()[k] = orig;
            g.data_mut()[k] = (up - down) / (2.0 * step);
        }
        grads.push(g);
    }
    grads
}

/// `‖a − b‖ / (‖a‖ + ‖b‖)`, or 0 when both gradients vanish.
pub fn relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes differ");
    let norm = |t: &mut dyn Iterator<Item = f64>| t.map(|v| v * v).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.data().iter().zip(numeric.data()).map(|(a, b)| a - b));
    let scale = norm(&mut analytic.data().iter().copied()) + norm(&mut numeric.data().iter().copied());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
