//! Adam and Polyak-shadow behavior against a hand-rolled scalar oracle.

use ndt::{AdamConfig, Optimizer, ParamSet, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn grads_of(name: &str, g: Tensor<f64>) -> BTreeMap<String, Tensor<f64>> {
    let mut m = BTreeMap::new();
    m.insert(name.to_string(), g);
    m
}

/// Independent scalar Adam, the oracle for the vector implementation.
struct ScalarAdam {
    m: f64,
    v: f64,
    t: i32,
    shadow: f64,
}

impl ScalarAdam {
    fn new(p0: f64) -> Self {
        ScalarAdam {
            m: 0.0,
            v: 0.0,
            t: 0,
            shadow: p0,
        }
    }

    fn step(&mut self, p: f64, g: f64, c: &AdamConfig) -> f64 {
        self.t += 1;
        self.m = c.beta1 * self.m + (1.0 - c.beta1) * g;
        self.v = c.beta2 * self.v + (1.0 - c.beta2) * g * g;
        let m_hat = self.m / (1.0 - c.beta1.powi(self.t));
        let v_hat = self.v / (1.0 - c.beta2.powi(self.t));
        let p = p - c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        self.shadow = c.polyak_decay * self.shadow + (1.0 - c.polyak_decay) * p;
        p
    }
}

#[test]
fn first_step_delta_magnitude_is_learning_rate() {
    let cfg = AdamConfig {
        learning_rate: 0.01,
        ..AdamConfig::default()
    };
    let mut params = ParamSet::new();
    params.insert("w", Tensor::from_vec(&[2], vec![1.0f64, -2.0]).unwrap());
    let mut opt = Optimizer::new(cfg, &params);
    opt.step(
        &mut params,
        &grads_of("w", Tensor::from_vec(&[2], vec![0.3, -0.7]).unwrap()),
    )
    .unwrap();
    let w = params.get("w").unwrap();
    // Bias correction makes the first update lr * g/|g| up to epsilon.
    assert!((w.data()[0] - (1.0 - 0.01)).abs() < 1e-6);
    assert!((w.data()[1] - (-2.0 + 0.01)).abs() < 1e-6);
}

#[test]
fn zero_gradient_leaves_params_and_converges_shadows() {
    let cfg = AdamConfig {
        polyak_decay: 0.9,
        ..AdamConfig::default()
    };
    let mut params = ParamSet::new();
    params.insert("w", Tensor::from_vec(&[1], vec![3.0f64]).unwrap());
    let mut opt = Optimizer::new(cfg, &params);
    // Perturb the shadow so convergence is observable.
    opt.set_shadow("w", Tensor::from_vec(&[1], vec![0.0f64]).unwrap())
        .unwrap();
    let zero = grads_of("w", Tensor::zeros(&[1]));
    let mut dist = 3.0f64;
    for _ in 0..50 {
        opt.step(&mut params, &zero).unwrap();
        assert_eq!(params.get("w").unwrap().data(), &[3.0]);
        let d = (opt.shadow("w").unwrap().data()[0] - 3.0).abs();
        assert!(d < dist);
        dist = d;
    }
    assert!(dist < 0.1);
}

#[test]
fn ten_steps_match_scalar_oracle() {
    let cfg = AdamConfig {
        learning_rate: 0.05,
        polyak_decay: 0.99,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 6;
    let init: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let mut params = ParamSet::new();
    params.insert("w", Tensor::from_vec(&[n], init.clone()).unwrap());
    let mut opt = Optimizer::new(cfg, &params);

    let mut oracles: Vec<ScalarAdam> = init.iter().map(|&p| ScalarAdam::new(p)).collect();
    let mut expect = init.clone();

    for _ in 0..10 {
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        opt.step(&mut params, &grads_of("w", Tensor::from_vec(&[n], g.clone()).unwrap()))
            .unwrap();
        for i in 0..n {
            expect[i] = oracles[i].step(expect[i], g[i], &cfg);
        }
    }
    let w = params.get("w").unwrap();
    let shadow = opt.shadow("w").unwrap();
    for i in 0..n {
        assert!((w.data()[i] - expect[i]).abs() < 1e-6, "param {i}");
        assert!((shadow.data()[i] - oracles[i].shadow).abs() < 1e-6, "shadow {i}");
    }
}
