use crate::ndgrad::Var;
use crate::{Tape, Tensor};

use super::{Arch, ModelError, ModelParams};

/// `act(x W_x + h W_h + b)`.
fn gate(
    tape: &mut Tape,
    x: Var,
    h: Var,
    w_x: Var,
    w_h: Var,
    b: Var,
    act: fn(&mut Tape, Var) -> Var,
) -> Result<Var, ModelError> {
    let xw = tape.matmul(x, w_x)?;
    let hw = tape.matmul(h, w_h)?;
    let pre = tape.add(xw, hw)?;
    let pre = tape.add_row_bias(pre, b)?;
    Ok(act(tape, pre))
}

fn lstm_step(tape: &mut Tape, w: &[Var], x: Var, h: Var, c: Var) -> Result<(Var, Var), ModelError> {
    let sig: fn(&mut Tape, Var) -> Var = Tape::sigmoid;
    let th: fn(&mut Tape, Var) -> Var = Tape::tanh;
    let i = gate(tape, x, h, w[0], w[1], w[2], sig)?;
    let f = gate(tape, x, h, w[3], w[4], w[5], sig)?;
    let g = gate(tape, x, h, w[6], w[7], w[8], th)?;
    let o = gate(tape, x, h, w[9], w[10], w[11], sig)?;
    let keep = tape.mul(f, c)?;
    let write = tape.mul(i, g)?;
    let c_next = tape.add(keep, write)?;
    let c_act = tape.tanh(c_next);
    let h_next = tape.mul(o, c_act)?;
    Ok((h_next, c_next))
}

fn gru_step(tape: &mut Tape, w: &[Var], x: Var, h: Var) -> Result<Var, ModelError> {
    // layout per gate: w_x, w_h, b_x, b_h
    let pre = |tape: &mut Tape, base: usize| -> Result<(Var, Var), ModelError> {
        let xw = tape.matmul(x, w[base])?;
        let xw = tape.add_row_bias(xw, w[base + 2])?;
        let hw = tape.matmul(h, w[base + 1])?;
        let hw = tape.add_row_bias(hw, w[base + 3])?;
        Ok((xw, hw))
    };
    let (xr, hr) = pre(tape, 0)?;
    let (xz, hz) = pre(tape, 4)?;
    let (xn, hn) = pre(tape, 8)?;
    let r = tape.add(xr, hr)?;
    let r = tape.sigmoid(r);
    let z = tape.add(xz, hz)?;
    let z = tape.sigmoid(z);
    let gated = tape.mul(r, hn)?;
    let n = tape.add(xn, gated)?;
    let n = tape.tanh(n);
    // (1 - z) * n + z * h == n + z * (h - n)
    let diff = tape.sub(h, n)?;
    let mix = tape.mul(z, diff)?;
    Ok(tape.add(n, mix)?)
}

pub(super) fn forward_head(
    params: &ModelParams,
    tape: &mut Tape,
    weights: &[Var],
    steps: &[Var],
) -> Result<Var, ModelError> {
    let first = *steps.first().ok_or(ModelError::EmptyBatch)?;
    let (batch, n) = tape.value(first).dims2()?;
    if n != params.input_dim {
        return Err(ModelError::WindowShape {
            len: n,
            input_dim: params.input_dim,
        });
    }
    let expected = params.arch.layout(params.input_dim, params.hidden_dim).len();
    if weights.len() != expected {
        return Err(ModelError::Format(format!(
            "{} weights recorded, {} expected",
            weights.len(),
            expected
        )));
    }
    let zeros = Tensor::zeros(vec![batch, params.hidden_dim]);
    let mut h = tape.constant(zeros.clone());
    let head_at = weights.len() - 2;
    match params.arch {
        Arch::Lstm => {
            let mut c = tape.constant(zeros);
            for &x in steps {
                (h, c) = lstm_step(tape, weights, x, h, c)?;
            }
        }
        Arch::Gru => {
            for &x in steps {
                h = gru_step(tape, weights, x, h)?;
            }
        }
    }
    let out = tape.matmul(h, weights[head_at])?;
    Ok(tape.add_row_bias(out, weights[head_at + 1])?)
}
