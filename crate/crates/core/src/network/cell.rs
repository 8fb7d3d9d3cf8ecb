use crate::error::{Error, Result};
use crate::numerics::{matvec_acc, matvec_t_acc, outer_acc, sigmoid, Vector};

use super::params::ModelParams;

/// Hidden and cell state of the LSTM between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    pub h: Vector,
    pub c: Vector,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Vector::zeros(hidden),
            c: Vector::zeros(hidden),
        }
    }
}

const GATE_NAMES: [&str; 4] = ["input gate", "forget gate", "output gate", "candidate"];

/// Activations of one step, laid out as `[i, f, o, g, c, tanh(c), h]`, each
/// `hidden` long.
#[derive(Clone, Debug)]
pub(crate) struct StepRecord {
    buf: Vec<f64>,
    hidden: usize,
}

impl StepRecord {
    #[inline]
    fn part(&self, k: usize) -> &[f64] {
        &self.buf[k * self.hidden..(k + 1) * self.hidden]
    }
    #[inline]
    pub fn gate(&self, k: usize) -> &[f64] {
        self.part(k)
    }
    #[inline]
    pub fn c(&self) -> &[f64] {
        self.part(4)
    }
    #[inline]
    pub fn tanh_c(&self) -> &[f64] {
        self.part(5)
    }
    #[inline]
    pub fn h(&self) -> &[f64] {
        self.part(6)
    }
}

/// One cell update from `(h_prev, c_prev)` with input `x`.
pub(crate) fn step_record(p: &ModelParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<StepRecord> {
    let hd = p.hidden;
    let mut buf = vec![0.0; 7 * hd];
    for (k, gate) in p.gates().iter().enumerate() {
        let pre = &mut buf[k * hd..(k + 1) * hd];
        pre.copy_from_slice(gate.bias.as_slice());
        matvec_acc(&gate.input, x, pre);
        matvec_acc(&gate.recurrent, h_prev, pre);
        if k == 3 {
            pre.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            pre.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        if pre.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(GATE_NAMES[k].into()));
        }
    }
    let (gates, rest) = buf.split_at_mut(4 * hd);
    let (i, f, o, g) = (&gates[..hd], &gates[hd..2 * hd], &gates[2 * hd..3 * hd], &gates[3 * hd..]);
    let (c, rest) = rest.split_at_mut(hd);
    let (tc, h) = rest.split_at_mut(hd);
    for j in 0..hd {
        c[j] = f[j] * c_prev[j] + i[j] * g[j];
        tc[j] = c[j].tanh();
        h[j] = o[j] * tc[j];
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("cell state".into()));
    }
    Ok(StepRecord { buf, hidden: hd })
}

/// Public single-step form of the cell equations.
pub fn cell_step(p: &ModelParams, input: &Vector, s: &CellState) -> Result<CellState> {
    if input.len() != p.input_dim {
        return Err(Error::shape("cell_step input", p.input_dim, input.len()));
    }
    if s.h.len() != p.hidden || s.c.len() != p.hidden {
        return Err(Error::shape("cell_step state", p.hidden, s.h.len().max(s.c.len())));
    }
    let rec = step_record(p, input.as_slice(), s.h.as_slice(), s.c.as_slice())?;
    Ok(CellState {
        h: Vector::from_vec(rec.h().to_vec()),
        c: Vector::from_vec(rec.c().to_vec()),
    })
}

/// Runs the cell over `inputs` (consecutive chunks of `input_dim`) from a zero
/// state and keeps every step for backprop.
pub(crate) fn run_stream(p: &ModelParams, inputs: &[f64]) -> Result<Vec<StepRecord>> {
    let hd = p.hidden;
    let zeros = vec![0.0; hd];
    let mut records: Vec<StepRecord> = Vec::with_capacity(inputs.len() / p.input_dim);
    for x in inputs.chunks_exact(p.input_dim) {
        let rec = match records.last() {
            Some(prev) => step_record(p, x, prev.h(), prev.c())?,
            None => step_record(p, x, &zeros, &zeros)?,
        };
        records.push(rec);
    }
    Ok(records)
}

/// Reverse pass over one stream. `dh_final` is the loss gradient with respect
/// to the last hidden state; parameter gradients are added into `grads`.
pub(crate) fn backward_stream(
    p: &ModelParams,
    records: &[StepRecord],
    inputs: &[f64],
    dh_final: &[f64],
    grads: &mut ModelParams,
) {
    let hd = p.hidden;
    let zeros = vec![0.0; hd];
    let mut dh = dh_final.to_vec();
    let mut dc = vec![0.0; hd];
    let mut da = vec![vec![0.0; hd]; 4];
    let mut dh_prev = vec![0.0; hd];

    for (s, x) in inputs.chunks_exact(p.input_dim).enumerate().rev() {
        let rec = &records[s];
        let (h_prev, c_prev) = if s > 0 {
            (records[s - 1].h(), records[s - 1].c())
        } else {
            (&zeros[..], &zeros[..])
        };
        let (i, f, o, g) = (rec.gate(0), rec.gate(1), rec.gate(2), rec.gate(3));
        let tc = rec.tanh_c();
        for j in 0..hd {
            let d_o = dh[j] * tc[j];
            dc[j] += dh[j] * o[j] * (1.0 - tc[j] * tc[j]);
            let d_i = dc[j] * g[j];
            let d_g = dc[j] * i[j];
            let d_f = dc[j] * c_prev[j];
            da[0][j] = d_i * i[j] * (1.0 - i[j]);
            da[1][j] = d_f * f[j] * (1.0 - f[j]);
            da[2][j] = d_o * o[j] * (1.0 - o[j]);
            da[3][j] = d_g * (1.0 - g[j] * g[j]);
            dc[j] *= f[j];
        }
        dh_prev.iter_mut().for_each(|v| *v = 0.0);
        for (k, gate_grad) in grads.gates_mut().into_iter().enumerate() {
            outer_acc(&mut gate_grad.input, &da[k], x);
            outer_acc(&mut gate_grad.recurrent, &da[k], h_prev);
            for (b, d) in gate_grad.bias.as_mut_slice().iter_mut().zip(&da[k]) {
                *b += d;
            }
        }
        for (k, gate) in p.gates().iter().enumerate() {
            matvec_t_acc(&gate.recurrent, &da[k], &mut dh_prev);
        }
        std::mem::swap(&mut dh, &mut dh_prev);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    /// Straight-line transcription of the cell equations with explicit loops.
    fn scalar_cell(p: &ModelParams, x: f64, h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = p.hidden;
        let pre = |g: &super::super::params::GateParams, r: usize| {
            let mut acc = g.bias[r] + g.input.get(r, 0) * x;
            for k in 0..n {
                acc += g.recurrent.get(r, k) * h[k];
            }
            acc
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h2 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for r in 0..n {
            let i = sig(pre(&p.input_gate, r));
            let f = sig(pre(&p.forget_gate, r));
            let o = sig(pre(&p.output_gate, r));
            let g = pre(&p.candidate, r).tanh();
            c2[r] = f * c[r] + i * g;
            h2[r] = o * c2[r].tanh();
        }
        (h2, c2)
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = ModelParams::zeros(4, 1, 2);
        let s = cell_step(&p, &Vector::from_vec(vec![3.0]), &CellState::zeros(4)).unwrap();
        assert!(s.h.as_slice().iter().all(|&v| v == 0.0));
        assert!(s.c.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closed_output_gate_kills_hidden_state() {
        let mut rng = Rng::new(4);
        let mut p = ModelParams::init_uniform(5, 1, 2, 0.5, &mut rng).unwrap();
        p.output_gate.bias.as_mut_slice().iter_mut().for_each(|b| *b = -800.0);
        let s = CellState {
            h: Vector::from_vec(vec![0.3; 5]),
            c: Vector::from_vec(vec![2.0; 5]),
        };
        let out = cell_step(&p, &Vector::from_vec(vec![1.0]), &s).unwrap();
        assert!(out.h.as_slice().iter().all(|v| v.abs() < 1e-300));
        assert!(out.c.as_slice().iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn matches_scalar_transcription() {
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let p = ModelParams::init_uniform(6, 1, 3, 0.4, &mut rng).unwrap();
            let h: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let c: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = rng.uniform(-1.0, 1.0);
            let s = CellState {
                h: Vector::from_vec(h.clone()),
                c: Vector::from_vec(c.clone()),
            };
            let got = cell_step(&p, &Vector::from_vec(vec![x]), &s).unwrap();
            let (eh, ec) = scalar_cell(&p, x, &h, &c);
            for j in 0..6 {
                assert!((got.h[j] - eh[j]).abs() < 1e-12);
                assert!((got.c[j] - ec[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_names_the_gate() {
        let mut p = ModelParams::zeros(2, 1, 1);
        p.forget_gate.bias[0] = f64::NAN;
        let err = cell_step(&p, &Vector::from_vec(vec![0.0]), &CellState::zeros(2)).unwrap_err();
        assert!(err.to_string().contains("forget gate"), "{err}");
        assert!(cell_step(&p, &Vector::from_vec(vec![0.0, 1.0]), &CellState::zeros(2)).is_err());
    }
}
