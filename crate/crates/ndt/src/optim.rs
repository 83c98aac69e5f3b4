//! Bias-corrected Adam with Polyak-averaged shadow weights.

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::{NdtError, Result};
use std::collections::BTreeMap;

/// Named parameter tensors. A `BTreeMap` keeps iteration order
/// deterministic, which the reproducibility contract leans on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<S> {
    params: BTreeMap<String, Tensor<S>>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        ParamSet {
            params: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<S>) {
        self.params.insert(name.to_string(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<S>> {
        self.params.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<S>)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub polyak_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            polyak_decay: 0.9999,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot<S> {
    m: Tensor<S>,
    v: Tensor<S>,
    shadow: Tensor<S>,
}

/// Per-parameter first/second moments plus the Polyak shadow copy used for
/// evaluation weights. Step count `t` is shared.
#[derive(Debug, Clone)]
pub struct Optimizer<S> {
    pub config: AdamConfig,
    t: u64,
    slots: BTreeMap<String, Slot<S>>,
}

impl<S: Scalar> Optimizer<S> {
    /// Shadows start at the initial parameter values.
    pub fn new(config: AdamConfig, params: &ParamSet<S>) -> Self {
        let slots = params
            .iter()
            .map(|(name, p)| {
                (
                    name.clone(),
                    Slot {
                        m: Tensor::zeros(p.shape()),
                        v: Tensor::zeros(p.shape()),
                        shadow: p.clone(),
                    },
                )
            })
            .collect();
        Optimizer {
            config,
            t: 0,
            slots,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update. Parameters without a gradient entry
    /// are left untouched (their shadows still decay toward them).
    pub fn step(
        &mut self,
        params: &mut ParamSet<S>,
        grads: &BTreeMap<String, Tensor<S>>,
    ) -> Result<()> {
        self.t += 1;
        let c = self.config;
        let lr = S::from_f64(c.learning_rate);
        let b1 = S::from_f64(c.beta1);
        let b2 = S::from_f64(c.beta2);
        let eps = S::from_f64(c.epsilon);
        let bc1 = S::from_f64(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = S::from_f64(1.0 - c.beta2.powi(self.t as i32));
        let decay = S::from_f64(c.polyak_decay);
        let one = S::one();

        let names: Vec<String> = self.slots.keys().cloned().collect();
        for name in names {
            let slot = self.slots.get_mut(&name).unwrap();
            let param = params.get_mut(&name).ok_or_else(|| NdtError::ShapeMismatch {
                op: "adam_step",
                detail: format!("optimizer slot `{name}` missing from params"),
            })?;
            if let Some(g) = grads.get(&name) {
                if g.shape() != param.shape() {
                    return Err(NdtError::ShapeMismatch {
                        op: "adam_step",
                        detail: format!(
                            "grad {:?} vs param {:?} for `{name}`",
                            g.shape(),
                            param.shape()
                        ),
                    });
                }
                let pd = param.data_mut();
                for i in 0..pd.len() {
                    let gx = g.data()[i];
                    let m = b1 * slot.m.data()[i] + (one - b1) * gx;
                    let v = b2 * slot.v.data()[i] + (one - b2) * gx * gx;
                    slot.m.data_mut()[i] = m;
                    slot.v.data_mut()[i] = v;
                    let m_hat = m / bc1;
                    let v_hat = v / bc2;
                    pd[i] = pd[i] - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
            for (s, &p) in slot.shadow.data_mut().iter_mut().zip(param.data()) {
                *s = decay * *s + (one - decay) * p;
            }
        }
        Ok(())
    }

    /// Polyak-averaged evaluation weights.
    pub fn shadow_params(&self) -> ParamSet<S> {
        let mut out = ParamSet::new();
        for (name, slot) in &self.slots {
            out.insert(name, slot.shadow.clone());
        }
        out
    }

    pub fn shadow(&self, name: &str) -> Option<&Tensor<S>> {
        self.slots.get(name).map(|s| &s.shadow)
    }

    /// Overwrites shadow values, used when resuming from a checkpoint.
    pub fn set_shadow(&mut self, name: &str, tensor: Tensor<S>) -> Result<()> {
        let slot = self.slots.get_mut(name).ok_or_else(|| NdtError::ShapeMismatch {
            op: "set_shadow",
            detail: format!("unknown parameter `{name}`"),
        })?;
        if slot.shadow.shape() != tensor.shape() {
            return Err(NdtError::ShapeMismatch {
                op: "set_shadow",
                detail: format!("{:?} vs {:?}", slot.shadow.shape(), tensor.shape()),
            });
        }
        slot.shadow = tensor;
        Ok(())
    }
}
