//! Fully-connected layer: a weighted sum of inputs plus bias.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{dot, Shape, Tensor};

/// Dense layer with weights `[out x in]` and biases `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub biases: Tensor,
}

impl DenseLayer {
    pub fn new(weights: Tensor, biases: Tensor) -> Result<Self> {
        let out = match weights.shape() {
            Shape::Matrix(r, _) => r,
            s => {
                return Err(Error::Dimension(format!(
                    "dense weights must be rank 2, got {s}"
                )))
            }
        };
        if biases.shape() != Shape::Vector(out) {
            return Err(Error::Dimension(format!(
                "dense biases {} do not match weights {}",
                biases.shape(),
                weights.shape()
            )));
        }
        Ok(DenseLayer { weights, biases })
    }

    /// Random init: weights uniform in +-sqrt(1/fan_in), biases zero. Keeps
    /// activations near unit scale so downstream window products stay tame.
    pub fn init(input_width: usize, output_width: usize, rng: &mut Rng) -> Self {
        let bound = (1.0 / input_width as f64).sqrt();
        let weights = rng
            .uniform(output_width * input_width, -bound, bound)
            .expect("valid range");
        DenseLayer {
            weights: Tensor::matrix(output_width, input_width, weights.as_slice().to_vec())
                .expect("sized buffer"),
            biases: Tensor::zeros(Shape::Vector(output_width)),
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// `W x + b` for rank-1 input, applied per row for rank-2.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.input_width() {
            return Err(Error::Dimension(format!(
                "dense forward: input {} does not match weights {}",
                x.shape(),
                self.weights.shape()
            )));
        }
        let out_w = self.output_width();
        let rows = x.rows();
        let mut data = vec![0.0; rows * out_w];
        for r in 0..rows {
            let x_row = x.row(r);
            for (o, slot) in data[r * out_w..(r + 1) * out_w].iter_mut().enumerate() {
                *slot = dot(self.weights.row(o), x_row) + self.biases.as_slice()[o];
            }
        }
        Ok(match x.shape() {
            Shape::Vector(_) => Tensor::vector(data),
            Shape::Matrix(_, _) => Tensor::matrix(rows, out_w, data)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_pass_input_through() {
        let layer = DenseLayer::new(
            Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(Shape::Vector(2)),
        )
        .unwrap();
        let x = Tensor::vector(vec![4.0, -7.0]);
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_weights_yield_bias() {
        let layer = DenseLayer::new(
            Tensor::matrix(2, 3, vec![0.0; 6]).unwrap(),
            Tensor::vector(vec![1.5, -2.5]),
        )
        .unwrap();
        let y = layer.forward(&Tensor::vector(vec![9.0, 9.0, 9.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.5, -2.5]);
    }

    #[test]
    fn random_layer_matches_loop_oracle() {
        let mut rng = Rng::new(17);
        let layer = DenseLayer::init(5, 3, &mut rng);
        let x = rng.uniform(5, -2.0, 2.0).unwrap();
        let y = layer.forward(&x).unwrap();
        for o in 0..3 {
            let mut want = layer.biases.as_slice()[o];
            for i in 0..5 {
                want += layer.weights.as_slice()[o * 5 + i] * x.as_slice()[i];
            }
            assert!((y.as_slice()[o] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn forward_rejects_width_mismatch() {
        let mut rng = Rng::new(1);
        let layer = DenseLayer::init(4, 2, &mut rng);
        assert!(layer.forward(&Tensor::vector(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn parameter_count() {
        let mut rng = Rng::new(1);
        assert_eq!(DenseLayer::init(3, 2, &mut rng).parameter_count(), 8);
    }
}
