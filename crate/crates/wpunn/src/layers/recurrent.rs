//! Recurrent blocks: the gated product block and an LSTM baseline cell.
//!
//! The gated block is a three-stage unit: a fully-connected layer over the
//! concatenated current input and previous output, a sigmoid, and a windowed
//! product with w = s = 2. The product pairs adjacent sigmoid values, so
//! each output is one value gated by another.

use crate::error::{Error, Result};
use crate::layers::window::{windowed_forward, WindowConfig};
use crate::layers::DenseLayer;
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};

fn sigmoid_tensor(x: &Tensor) -> Tensor {
    x.map(|v| 1.0 / (1.0 + (-v).exp()))
}

/// Gated recurrent block: dense (in + out -> 2*out), sigmoid, windowed
/// product with w = s = 2. Output entries always lie in (0, 1).
#[derive(Debug, Clone)]
pub struct GatedBlock {
    pub dense: DenseLayer,
    state: Tensor,
}

impl GatedBlock {
    pub fn init(input_width: usize, output_width: usize, rng: &mut Rng) -> Self {
        GatedBlock {
            dense: DenseLayer::init(input_width + output_width, 2 * output_width, rng),
            state: Tensor::zeros(Shape::Vector(output_width)),
        }
    }

    pub fn from_dense(dense: DenseLayer, output_width: usize) -> Result<Self> {
        if dense.output_width() != 2 * output_width {
            return Err(Error::Config(format!(
                "gated block dense output {} must be twice the block output {output_width}",
                dense.output_width()
            )));
        }
        if dense.input_width() <= output_width {
            return Err(Error::Config(format!(
                "gated block dense input {} must exceed the recurrent width {output_width}",
                dense.input_width()
            )));
        }
        Ok(GatedBlock {
            dense,
            state: Tensor::zeros(Shape::Vector(output_width)),
        })
    }

    pub fn input_width(&self) -> usize {
        self.dense.input_width() - self.output_width()
    }

    pub fn output_width(&self) -> usize {
        self.state.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.dense.parameter_count()
    }

    /// Previous output y_{t-1}; zeros at a sequence start.
    pub fn state(&self) -> &Tensor {
        &self.state
    }

    pub fn set_state(&mut self, state: Tensor) -> Result<()> {
        if state.shape() != Shape::Vector(self.output_width()) {
            return Err(Error::Dimension(format!(
                "gated block state {} must be {}",
                state.shape(),
                Shape::Vector(self.output_width())
            )));
        }
        self.state = state;
        Ok(())
    }

    pub fn reset_state(&mut self) {
        self.state = Tensor::zeros(Shape::Vector(self.output_width()));
    }

    /// One time step: concat(x_t, y_{t-1}) -> dense -> sigmoid -> windowed
    /// product. Updates the stored state to the new output.
    pub fn step(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != Shape::Vector(self.input_width()) {
            return Err(Error::Dimension(format!(
                "gated block step: input {} must be {}",
                x.shape(),
                Shape::Vector(self.input_width())
            )));
        }
        let mut z = x.as_slice().to_vec();
        z.extend_from_slice(self.state.as_slice());
        let pre = self.dense.forward(&Tensor::vector(z))?;
        let gated = windowed_forward(&sigmoid_tensor(&pre), &WindowConfig::product(2, 2))?;
        self.state = gated.clone();
        Ok(gated)
    }
}

/// Standard LSTM cell (input, forget, output gates, tanh candidate; no
/// peepholes). Each gate is a dense layer over the concatenated input and
/// hidden state.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input_gate: DenseLayer,
    pub forget_gate: DenseLayer,
    pub output_gate: DenseLayer,
    pub candidate: DenseLayer,
    hidden: Tensor,
    cell: Tensor,
}

impl LstmCell {
    /// Random init; the forget-gate bias starts at 1 so early training does
    /// not erase the cell state.
    pub fn init(input_width: usize, hidden_width: usize, rng: &mut Rng) -> Self {
        let z = input_width + hidden_width;
        let mut forget_gate = DenseLayer::init(z, hidden_width, rng);
        for b in forget_gate.biases.as_mut_slice() {
            *b = 1.0;
        }
        LstmCell {
            input_gate: DenseLayer::init(z, hidden_width, rng),
            forget_gate,
            output_gate: DenseLayer::init(z, hidden_width, rng),
            candidate: DenseLayer::init(z, hidden_width, rng),
            hidden: Tensor::zeros(Shape::Vector(hidden_width)),
            cell: Tensor::zeros(Shape::Vector(hidden_width)),
        }
    }

    pub fn input_width(&self) -> usize {
        self.input_gate.input_width() - self.hidden_width()
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.input_gate.parameter_count()
            + self.forget_gate.parameter_count()
            + self.output_gate.parameter_count()
            + self.candidate.parameter_count()
    }

    pub fn hidden(&self) -> &Tensor {
        &self.hidden
    }

    pub fn cell(&self) -> &Tensor {
        &self.cell
    }

    pub fn set_state(&mut self, hidden: Tensor, cell: Tensor) -> Result<()> {
        let want = Shape::Vector(self.hidden_width());
        if hidden.shape() != want || cell.shape() != want {
            return Err(Error::Dimension(format!(
                "lstm state shapes {} / {} must both be {want}",
                hidden.shape(),
                cell.shape()
            )));
        }
        self.hidden = hidden;
        self.cell = cell;
        Ok(())
    }

    pub fn reset_state(&mut self) {
        let w = self.hidden_width();
        self.hidden = Tensor::zeros(Shape::Vector(w));
        self.cell = Tensor::zeros(Shape::Vector(w));
    }

    /// One time step of the standard LSTM update. Returns the new hidden
    /// state and stores it (with the cell state) for the next step.
    pub fn step(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != Shape::Vector(self.input_width()) {
            return Err(Error::Dimension(format!(
                "lstm step: input {} must be {}",
                x.shape(),
                Shape::Vector(self.input_width())
            )));
        }
        let mut z = x.as_slice().to_vec();
        z.extend_from_slice(self.hidden.as_slice());
        let z = Tensor::vector(z);

        let i = sigmoid_tensor(&self.input_gate.forward(&z)?);
        let f = sigmoid_tensor(&self.forget_gate.forward(&z)?);
        let o = sigmoid_tensor(&self.output_gate.forward(&z)?);
        let g = self.candidate.forward(&z)?.map(f64::tanh);

        self.cell = f.mul(&self.cell)?.add(&i.mul(&g)?)?;
        self.hidden = o.mul(&self.cell.map(f64::tanh))?;
        Ok(self.hidden.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_dense(input: usize, output: usize) -> DenseLayer {
        DenseLayer::new(
            Tensor::matrix(output, input, vec![0.0; output * input]).unwrap(),
            Tensor::zeros(Shape::Vector(output)),
        )
        .unwrap()
    }

    #[test]
    fn gated_block_zero_params_give_quarter() {
        // sigmoid(0)^2 = 0.25 for every output.
        let mut block = GatedBlock::from_dense(zero_dense(3 + 4, 8), 4).unwrap();
        let y = block.step(&Tensor::vector(vec![1.0, -2.0, 3.0])).unwrap();
        assert_eq!(y.len(), 4);
        for &v in y.iter() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn gated_block_output_in_open_unit_interval() {
        let mut rng = Rng::new(5);
        let mut block = GatedBlock::init(2, 6, &mut rng);
        for t in 0..10 {
            let x = rng.uniform(2, -50.0, 50.0).unwrap();
            let y = block.step(&x).unwrap();
            for &v in y.iter() {
                assert!(v > 0.0 && v < 1.0, "step {t}: {v} outside (0, 1)");
            }
        }
    }

    #[test]
    fn gated_block_state_tracks_output() {
        let mut rng = Rng::new(6);
        let mut block = GatedBlock::init(1, 4, &mut rng);
        let y = block.step(&Tensor::vector(vec![0.7])).unwrap();
        assert_eq!(block.state(), &y);
    }

    #[test]
    fn gated_block_rejects_width_mismatch() {
        let mut rng = Rng::new(7);
        let mut block = GatedBlock::init(2, 4, &mut rng);
        assert!(block.step(&Tensor::vector(vec![1.0])).is_err());
    }

    #[test]
    fn lstm_zero_params_keep_hidden_zero() {
        let z = 2 + 3;
        let mut cell = LstmCell {
            input_gate: zero_dense(z, 3),
            forget_gate: zero_dense(z, 3),
            output_gate: zero_dense(z, 3),
            candidate: zero_dense(z, 3),
            hidden: Tensor::zeros(Shape::Vector(3)),
            cell: Tensor::zeros(Shape::Vector(3)),
        };
        let h = cell.step(&Tensor::vector(vec![1.0, -1.0])).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_saturated_gates_freeze_cell() {
        // Forget gate ~1, input gate ~0: the cell state must not move.
        let z = 1 + 2;
        let mut forget = zero_dense(z, 2);
        for b in forget.biases.as_mut_slice() {
            *b = 100.0;
        }
        let mut input = zero_dense(z, 2);
        for b in input.biases.as_mut_slice() {
            *b = -100.0;
        }
        let mut cell = LstmCell {
            input_gate: input,
            forget_gate: forget,
            output_gate: zero_dense(z, 2),
            candidate: zero_dense(z, 2),
            hidden: Tensor::zeros(Shape::Vector(2)),
            cell: Tensor::vector(vec![0.8, -0.3]),
        };
        let before = cell.cell().clone();
        cell.step(&Tensor::vector(vec![5.0])).unwrap();
        for (a, b) in cell.cell().iter().zip(before.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lstm_parameter_count() {
        let mut rng = Rng::new(8);
        let cell = LstmCell::init(1, 100, &mut rng);
        assert_eq!(cell.parameter_count(), 4 * (100 * 101 + 100));
    }
}
