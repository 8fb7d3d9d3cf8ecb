use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{uniform_init, Matrix, Rng, Vector};

/// Weights of one LSTM gate. The same gate weights serve both the value
/// stream and the derivative stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `hidden × input_dim`, applied to the step input.
    pub input: Matrix,
    /// `hidden × hidden`, applied to the previous hidden state.
    pub recurrent: Matrix,
    pub bias: Vector,
}

impl GateParams {
    fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self {
            input: Matrix::zeros(hidden, input_dim),
            recurrent: Matrix::zeros(hidden, hidden),
            bias: Vector::zeros(hidden),
        }
    }

    pub fn param_count(&self) -> usize {
        self.input.as_slice().len() + self.recurrent.as_slice().len() + self.bias.len()
    }
}

/// Linear output layer over the concatenated final hidden states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    /// `horizon × 2·hidden`.
    pub weight: Matrix,
    pub bias: Vector,
}

impl HeadParams {
    fn zeros(horizon: usize, features: usize) -> Self {
        Self {
            weight: Matrix::zeros(horizon, features),
            bias: Vector::zeros(horizon),
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }
}

/// All trainable parameters: one shared LSTM cell and two output heads.
///
/// Gradients use the same type, so `ParamGrads` is an alias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hidden: usize,
    pub input_dim: usize,
    pub horizon: usize,
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
    /// Predicts the next `horizon` values of the series.
    pub head_orig: HeadParams,
    /// Predicts the next `horizon` values of the derivative series.
    pub head_diff: HeadParams,
}

pub type ParamGrads = ModelParams;

/// Parameter counts by component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub cell: usize,
    pub head_orig: usize,
    pub head_diff: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.cell + self.head_orig + self.head_diff
    }
}

/// Counts for an architecture without building it: each of the four gates
/// holds `hidden·(input_dim + hidden) + hidden` weights, each head
/// `horizon·2·hidden + horizon`.
pub fn param_count_for(hidden: usize, input_dim: usize, horizon: usize) -> ParamCount {
    let head = horizon * 2 * hidden + horizon;
    ParamCount {
        cell: 4 * (hidden * (input_dim + hidden) + hidden),
        head_orig: head,
        head_diff: head,
    }
}

pub const TENSOR_NAMES: [&str; 16] = [
    "input_gate.input",
    "input_gate.recurrent",
    "input_gate.bias",
    "forget_gate.input",
    "forget_gate.recurrent",
    "forget_gate.bias",
    "output_gate.input",
    "output_gate.recurrent",
    "output_gate.bias",
    "candidate.input",
    "candidate.recurrent",
    "candidate.bias",
    "head_orig.weight",
    "head_orig.bias",
    "head_diff.weight",
    "head_diff.bias",
];

impl ModelParams {
    pub fn zeros(hidden: usize, input_dim: usize, horizon: usize) -> Self {
        Self {
            hidden,
            input_dim,
            horizon,
            input_gate: GateParams::zeros(hidden, input_dim),
            forget_gate: GateParams::zeros(hidden, input_dim),
            output_gate: GateParams::zeros(hidden, input_dim),
            candidate: GateParams::zeros(hidden, input_dim),
            head_orig: HeadParams::zeros(horizon, 2 * hidden),
            head_diff: HeadParams::zeros(horizon, 2 * hidden),
        }
    }

    /// Every entry drawn uniformly from `[-scale, scale)`.
    pub fn init_uniform(hidden: usize, input_dim: usize, horizon: usize, scale: f64, rng: &mut Rng) -> Result<Self> {
        if hidden == 0 || input_dim == 0 || horizon == 0 {
            return Err(Error::Parameter("model dimensions must be positive".into()));
        }
        let mut p = Self::zeros(hidden, input_dim, horizon);
        for t in p.tensors_mut() {
            let len = t.len();
            let draw = uniform_init(rng, 1, len, -scale, scale)?;
            t.copy_from_slice(draw.as_slice());
        }
        Ok(p)
    }

    /// Same architecture, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden, self.input_dim, self.horizon)
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.input_gate, &self.forget_gate, &self.output_gate, &self.candidate]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ]
    }

    pub fn param_count(&self) -> ParamCount {
        ParamCount {
            cell: self.gates().iter().map(|g| g.param_count()).sum(),
            head_orig: self.head_orig.param_count(),
            head_diff: self.head_diff.param_count(),
        }
    }

    /// Tensors in the fixed order of [`TENSOR_NAMES`].
    pub fn tensors(&self) -> [&[f64]; 16] {
        let g = self.gates();
        [
            g[0].input.as_slice(),
            g[0].recurrent.as_slice(),
            g[0].bias.as_slice(),
            g[1].input.as_slice(),
            g[1].recurrent.as_slice(),
            g[1].bias.as_slice(),
            g[2].input.as_slice(),
            g[2].recurrent.as_slice(),
            g[2].bias.as_slice(),
            g[3].input.as_slice(),
            g[3].recurrent.as_slice(),
            g[3].bias.as_slice(),
            self.head_orig.weight.as_slice(),
            self.head_orig.bias.as_slice(),
            self.head_diff.weight.as_slice(),
            self.head_diff.bias.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 16] {
        let [i, f, o, g] = [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ];
        [
            i.input.as_mut_slice(),
            i.recurrent.as_mut_slice(),
            i.bias.as_mut_slice(),
            f.input.as_mut_slice(),
            f.recurrent.as_mut_slice(),
            f.bias.as_mut_slice(),
            o.input.as_mut_slice(),
            o.recurrent.as_mut_slice(),
            o.bias.as_mut_slice(),
            g.input.as_mut_slice(),
            g.recurrent.as_mut_slice(),
            g.bias.as_mut_slice(),
            self.head_orig.weight.as_mut_slice(),
            self.head_orig.bias.as_mut_slice(),
            self.head_diff.weight.as_mut_slice(),
            self.head_diff.bias.as_mut_slice(),
        ]
    }

    /// Shape `(rows, cols)` of each tensor, biases as `(n, 1)`.
    pub fn tensor_shapes(&self) -> [(usize, usize); 16] {
        let (h, i, k) = (self.hidden, self.input_dim, self.horizon);
        let gate = [(h, i), (h, h), (h, 1)];
        [
            gate[0], gate[1], gate[2], gate[0], gate[1], gate[2], gate[0], gate[1], gate[2], gate[0], gate[1],
            gate[2],
            (k, 2 * h),
            (k, 1),
            (k, 2 * h),
            (k, 1),
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.param_count().total();
        if flat.len() != total {
            return Err(Error::shape("ModelParams::set_flat", total, flat.len()));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_architecture_counts() {
        let c = param_count_for(10, 1, 10);
        assert_eq!(c.cell, 480);
        assert_eq!((c.head_orig, c.head_diff), (210, 210));
        assert_eq!(c.total(), 900);
        assert_eq!(ModelParams::zeros(10, 1, 10).param_count(), c);
    }

    #[test]
    fn flat_roundtrip_and_order() {
        let mut rng = Rng::new(1);
        let p = ModelParams::init_uniform(3, 1, 2, 0.5, &mut rng).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.param_count().total());
        let mut q = p.zeros_like();
        q.set_flat(&flat).unwrap();
        assert_eq!(p, q);
        let shapes = p.tensor_shapes();
        for (t, (r, c)) in p.tensors().iter().zip(shapes) {
            assert_eq!(t.len(), r * c);
        }
        assert!(q.set_flat(&flat[1..]).is_err());
    }

    #[test]
    fn init_stays_in_range() {
        let p = ModelParams::init_uniform(10, 1, 10, 0.3, &mut Rng::new(2)).unwrap();
        assert!(p.to_flat().iter().all(|v| (-0.3..0.3).contains(v)));
    }
}
