//! Forward semantics: convolution against a nested-loop oracle, pooling tie
//! rules, init statistics, tape linearity.

use ndt::{glorot_uniform, NdtError, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

#[test]
fn conv1d_examples() {
    let mut tape: Tape<f64> = Tape::new();
    let input = tape.input(Tensor::from_vec(&[4, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let kernel = tape.input(Tensor::from_vec(&[2, 1, 1], vec![1.0, 1.0]).unwrap());
    let out = tape.conv1d(input, kernel, 1).unwrap();
    assert_eq!(tape.value(out).shape(), &[3, 1]);
    assert_eq!(tape.value(out).data(), &[3.0, 5.0, 7.0]);

    let out2 = tape.conv1d(input, kernel, 2).unwrap();
    assert_eq!(tape.value(out2).data(), &[3.0, 7.0]);
}

/// Direct nested-loop convolution, independent of the tape implementation.
fn conv_oracle(
    input: &Tensor<f64>,
    kernel: &Tensor<f64>,
    stride: usize,
) -> Vec<f64> {
    let (time, in_ch) = (input.shape()[0], input.shape()[1]);
    let (width, out_ch) = (kernel.shape()[0], kernel.shape()[2]);
    let out_time = (time - width) / stride + 1;
    let mut out = vec![0.0; out_time * out_ch];
    for t in 0..out_time {
        for o in 0..out_ch {
            let mut acc = 0.0;
            for w in 0..width {
                for ic in 0..in_ch {
                    acc += input.data()[(t * stride + w) * in_ch + ic]
                        * kernel.data()[(w * in_ch + ic) * out_ch + o];
                }
            }
            out[t * out_ch + o] = acc;
        }
    }
    out
}

#[test]
fn conv1d_matches_nested_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let time = rng.random_range(2..12);
        let width = rng.random_range(1..=time);
        let stride = rng.random_range(1..4);
        let in_ch = rng.random_range(1..5);
        let out_ch = rng.random_range(1..5);
        let input = rand_tensor(&mut rng, &[time, in_ch]);
        let kernel = rand_tensor(&mut rng, &[width, in_ch, out_ch]);

        let expect = conv_oracle(&input, &kernel, stride);
        let mut tape = Tape::new();
        let i = tape.input(input);
        let k = tape.input(kernel);
        let out = tape.conv1d(i, k, stride).unwrap();
        for (a, b) in tape.value(out).data().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn conv1d_rejects_short_sequences() {
    let mut tape: Tape<f64> = Tape::new();
    let input = tape.input(Tensor::zeros(&[2, 1]));
    let kernel = tape.input(Tensor::zeros(&[3, 1, 1]));
    assert!(matches!(
        tape.conv1d(input, kernel, 1),
        Err(NdtError::SequenceTooShort { time: 2, width: 3 })
    ));
}

#[test]
fn max_pool_example_and_tie_rule() {
    let mut tape: Tape<f64> = Tape::new();
    let input = tape.input(Tensor::from_vec(&[2, 2], vec![1.0, 3.0, 2.0, 0.0]).unwrap());
    let out = tape.global_max_pool(input, 2).unwrap();
    assert_eq!(tape.value(out).data(), &[2.0, 3.0]);

    // Constant input: gradient concentrates at the first time step.
    let mut tape: Tape<f64> = Tape::new();
    let input = tape.input(Tensor::filled(&[3, 2], 1.5));
    let pooled = tape.global_max_pool(input, 3).unwrap();
    let row = tape.reshape(pooled, &[1, 2]).unwrap();
    let col = tape.input(Tensor::from_vec(&[2, 1], vec![1.0, 1.0]).unwrap());
    let loss = tape.matmul(row, col).unwrap();
    let grads = tape.backward(loss).unwrap();
    let gi = grads.get(input).unwrap();
    assert_eq!(gi.data(), &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn max_pool_respects_valid_range() {
    let mut tape: Tape<f64> = Tape::new();
    let input = tape.input(Tensor::from_vec(&[3, 1], vec![1.0, 5.0, 9.0]).unwrap());
    let out = tape.global_max_pool(input, 2).unwrap();
    assert_eq!(tape.value(out).data(), &[5.0]);
    assert!(matches!(
        {
            let mut t: Tape<f64> = Tape::new();
            let i = t.input(Tensor::zeros(&[3, 1]));
            t.global_max_pool(i, 0)
        },
        Err(NdtError::EmptyTime)
    ));
}

#[test]
fn glorot_bounds_and_determinism() {
    let t: Tensor<f64> = glorot_uniform(&[4, 4], 42).unwrap();
    let bound = (6.0f64 / 8.0).sqrt();
    assert!(t.data().iter().all(|x| x.abs() <= bound));
    let t2: Tensor<f64> = glorot_uniform(&[4, 4], 42).unwrap();
    assert_eq!(t, t2);
    let t3: Tensor<f64> = glorot_uniform(&[4, 4], 43).unwrap();
    assert_ne!(t, t3);
}

#[test]
fn glorot_empirical_variance() {
    let t: Tensor<f64> = glorot_uniform(&[500, 200], 9).unwrap();
    let n = t.len() as f64;
    let mean: f64 = t.data().iter().sum::<f64>() / n;
    let var: f64 = t.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let expect = 2.0 / (500.0 + 200.0);
    assert!((var - expect).abs() / expect < 0.05, "var {var} vs {expect}");
}

#[test]
fn backward_is_linear_in_the_loss() {
    // backward(l1 + l2) == backward(l1) + backward(l2) on the same graph.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a0 = rand_tensor(&mut rng, &[2, 3]);
    let b0 = rand_tensor(&mut rng, &[3, 2]);

    let run = |which: u8| -> Vec<f64> {
        let mut tape = Tape::new();
        let a = tape.input(a0.clone());
        let b = tape.input(b0.clone());
        let m = tape.matmul(a, b).unwrap();
        let s = tape.sigmoid(m);
        let flat = tape.reshape(s, &[4]).unwrap();
        let l1 = tape.logistic_loss_mean(flat, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        let l2 = tape.logistic_loss_mean(flat, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let loss = match which {
            1 => l1,
            2 => l2,
            _ => tape.add(l1, l2).unwrap(),
        };
        let grads = tape.backward(loss).unwrap();
        grads.get(a).unwrap().data().to_vec()
    };

    let (g1, g2, gsum) = (run(1), run(2), run(0));
    for i in 0..g1.len() {
        assert!((g1[i] + g2[i] - gsum[i]).abs() < 1e-12);
    }
}

#[test]
fn forward_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let input = rand_tensor(&mut rng, &[6, 3]);
    let kernel = rand_tensor(&mut rng, &[2, 3, 4]);
    let run = || {
        let mut tape = Tape::new();
        let i = tape.input(input.clone());
        let k = tape.input(kernel.clone());
        let c = tape.conv1d(i, k, 2).unwrap();
        let out_time = tape.value(c).shape()[0];
        let p = tape.global_max_pool(c, out_time).unwrap();
        tape.value(p).data().to_vec()
    };
    assert_eq!(run(), run());
}
