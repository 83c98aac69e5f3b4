//! Weight initialization.

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::{NdtError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Glorot/Xavier uniform init on `±sqrt(6 / (fan_in + fan_out))`,
/// deterministic in `seed`.
///
/// Fans: `[in, out]` for dense weights, `[width, in_ch, out_ch]` for conv
/// kernels (`fan_in = width * in_ch`, `fan_out = width * out_ch`).
pub fn glorot_uniform<S: Scalar>(shape: &[usize], seed: u64) -> Result<Tensor<S>> {
    let (fan_in, fan_out) = match shape {
        [a, b] => (*a, *b),
        [w, ic, oc] => (w * ic, w * oc),
        _ => {
            return Err(NdtError::InvalidShape {
                op: "glorot_uniform",
                shape: shape.to_vec(),
            })
        }
    };
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| S::from_f64(rng.random_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data)
}
