//! LSTM and GRU cells composed from tape primitives.
//!
//! Cells carry per-gate weight handles already placed on a tape; gradients
//! come out of the ordinary backward sweep. States are `[1, hidden]` row
//! vectors.

use crate::optim::ParamSet;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::{NdtError, Result};

pub const LSTM_SUFFIXES: [&str; 12] = [
    "wxi", "whi", "bi", "wxf", "whf", "bf", "wxo", "who", "bo", "wxg", "whg", "bg",
];
pub const GRU_SUFFIXES: [&str; 9] = ["wxz", "whz", "bz", "wxr", "whr", "br", "wxn", "whn", "bn"];

fn shape_for(suffix: &str, input_dim: usize, hidden: usize) -> Vec<usize> {
    match suffix.as_bytes()[0] {
        b'w' if suffix.as_bytes()[1] == b'x' => vec![input_dim, hidden],
        b'w' => vec![hidden, hidden],
        _ => vec![hidden],
    }
}

/// (suffix, shape) pairs for every weight of an LSTM cell, used at init time.
pub fn lstm_param_shapes(input_dim: usize, hidden: usize) -> Vec<(&'static str, Vec<usize>)> {
    LSTM_SUFFIXES
        .iter()
        .map(|s| (*s, shape_for(s, input_dim, hidden)))
        .collect()
}

pub fn gru_param_shapes(input_dim: usize, hidden: usize) -> Vec<(&'static str, Vec<usize>)> {
    GRU_SUFFIXES
        .iter()
        .map(|s| (*s, shape_for(s, input_dim, hidden)))
        .collect()
}

fn load<S: Scalar>(
    tape: &mut Tape<S>,
    params: &ParamSet<S>,
    prefix: &str,
    suffix: &str,
) -> Result<Var> {
    let name = format!("{prefix}/{suffix}");
    let t = params.get(&name).ok_or_else(|| NdtError::ShapeMismatch {
        op: "rnn load",
        detail: format!("missing parameter `{name}`"),
    })?;
    Ok(tape.input(t.clone()))
}

pub struct LstmCell {
    vars: [Var; 12],
    hidden: usize,
}

/// `(h, c)` pair.
#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmCell {
    pub fn from_params<S: Scalar>(
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        prefix: &str,
    ) -> Result<Self> {
        let loaded = LSTM_SUFFIXES
            .iter()
            .map(|s| load(tape, params, prefix, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_vars(tape, loaded.try_into().expect("12 lstm suffixes")))
    }

    /// Weights already on the tape, in [`LSTM_SUFFIXES`] order.
    pub fn from_vars<S: Scalar>(tape: &Tape<S>, vars: [Var; 12]) -> Self {
        let hidden = tape.value(vars[2]).len();
        LstmCell { vars, hidden }
    }

    pub fn zero_state<S: Scalar>(&self, tape: &mut Tape<S>) -> LstmState {
        let h = tape.input(Tensor::zeros(&[1, self.hidden]));
        let c = tape.input(Tensor::zeros(&[1, self.hidden]));
        LstmState { h, c }
    }

    /// Standard LSTM equations:
    /// `i,f,o = sigmoid(x Wx* + h Wh* + b*)`, `g = tanh(...)`,
    /// `c' = f*c + i*g`, `h' = o * tanh(c')`.
    pub fn step<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        x: Var,
        state: LstmState,
    ) -> Result<LstmState> {
        let [wxi, whi, bi, wxf, whf, bf, wxo, who, bo, wxg, whg, bg] = self.vars;
        let gate = |tape: &mut Tape<S>, wx: Var, wh: Var, b: Var| -> Result<Var> {
            let xa = tape.matmul(x, wx)?;
            let ha = tape.matmul(state.h, wh)?;
            let s = tape.add(xa, ha)?;
            tape.bias_add(s, b)
        };
        let i_pre = gate(tape, wxi, whi, bi)?;
        let i = tape.sigmoid(i_pre);
        let f_pre = gate(tape, wxf, whf, bf)?;
        let f = tape.sigmoid(f_pre);
        let o_pre = gate(tape, wxo, who, bo)?;
        let o = tape.sigmoid(o_pre);
        let g_pre = gate(tape, wxg, whg, bg)?;
        let g = tape.tanh(g_pre);
        let fc = tape.mul(f, state.c)?;
        let ig = tape.mul(i, g)?;
        let c = tape.add(fc, ig)?;
        let tc = tape.tanh(c);
        let h = tape.mul(o, tc)?;
        Ok(LstmState { h, c })
    }
}

pub struct GruCell {
    vars: [Var; 9],
    hidden: usize,
}

impl GruCell {
    pub fn from_params<S: Scalar>(
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        prefix: &str,
    ) -> Result<Self> {
        let loaded = GRU_SUFFIXES
            .iter()
            .map(|s| load(tape, params, prefix, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_vars(tape, loaded.try_into().expect("9 gru suffixes")))
    }

    /// Weights already on the tape, in [`GRU_SUFFIXES`] order.
    pub fn from_vars<S: Scalar>(tape: &Tape<S>, vars: [Var; 9]) -> Self {
        let hidden = tape.value(vars[2]).len();
        GruCell { vars, hidden }
    }

    pub fn zero_state<S: Scalar>(&self, tape: &mut Tape<S>) -> Var {
        tape.input(Tensor::zeros(&[1, self.hidden]))
    }

    /// Cho-style GRU:
    /// `z,r = sigmoid(x Wx* + h Wh* + b*)`,
    /// `n = tanh(x Wxn + (r*h) Whn + bn)`, `h' = (1-z)*n + z*h`.
    pub fn step<S: Scalar>(&self, tape: &mut Tape<S>, x: Var, h: Var) -> Result<Var> {
        let [wxz, whz, bz, wxr, whr, br, wxn, whn, bn] = self.vars;
        let gate = |tape: &mut Tape<S>, wx: Var, wh: Var, b: Var, hv: Var| -> Result<Var> {
            let xa = tape.matmul(x, wx)?;
            let ha = tape.matmul(hv, wh)?;
            let s = tape.add(xa, ha)?;
            tape.bias_add(s, b)
        };
        let z_pre = gate(tape, wxz, whz, bz, h)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = gate(tape, wxr, whr, br, h)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let n_pre = gate(tape, wxn, whn, bn, rh)?;
        let n = tape.tanh(n_pre);
        let one_minus_z = tape.affine(z, -1.0, 1.0);
        let a = tape.mul(one_minus_z, n)?;
        let b = tape.mul(z, h)?;
        tape.add(a, b)
    }
}
