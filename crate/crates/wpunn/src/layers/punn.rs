//! Classic product unit layer: each output raises every input to a learned
//! exponent and multiplies. Kept as a diagnostic baseline; the windowed
//! product layer is the trainable replacement.

use crate::error::{Error, Result};
use crate::tensor::{dot, Shape, Tensor};

/// Product unit layer with exponents `[out x in]`.
///
/// Defined only for strictly positive inputs: the forward pass computes
/// exp(sum theta * ln x), and negative bases with real exponents have no
/// real value.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductUnitLayer {
    pub exponents: Tensor,
}

impl ProductUnitLayer {
    pub fn new(exponents: Tensor) -> Result<Self> {
        match exponents.shape() {
            Shape::Matrix(_, _) => Ok(ProductUnitLayer { exponents }),
            s => Err(Error::Dimension(format!(
                "product unit exponents must be rank 2, got {s}"
            ))),
        }
    }

    pub fn input_width(&self) -> usize {
        self.exponents.cols()
    }

    pub fn output_width(&self) -> usize {
        self.exponents.rows()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != Shape::Vector(self.input_width()) {
            return Err(Error::Dimension(format!(
                "product unit forward: input {} does not match exponents {}",
                x.shape(),
                self.exponents.shape()
            )));
        }
        if let Some(bad) = x.iter().find(|v| **v <= 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "product unit requires strictly positive inputs, got {bad}"
            )));
        }
        let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let out: Vec<f64> = (0..self.output_width())
            .map(|o| dot(self.exponents.row(o), &log_x).exp())
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("product unit output overflowed".to_string()));
        }
        Ok(Tensor::vector(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_exponents_reduce_to_plain_product() {
        let layer = ProductUnitLayer::new(Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap()).unwrap();
        let y = layer.forward(&Tensor::vector(vec![2.0, 3.0])).unwrap();
        assert!((y.as_slice()[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_exponents_give_ones() {
        let layer = ProductUnitLayer::new(Tensor::matrix(2, 3, vec![0.0; 6]).unwrap()).unwrap();
        let y = layer.forward(&Tensor::vector(vec![5.0, 0.5, 9.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn fractional_exponents_hand_computed() {
        let layer = ProductUnitLayer::new(Tensor::matrix(1, 2, vec![0.5, 1.0]).unwrap()).unwrap();
        let y = layer.forward(&Tensor::vector(vec![2.0, 4.0])).unwrap();
        assert!((y.as_slice()[0] - 2.0f64.sqrt() * 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_input() {
        let layer = ProductUnitLayer::new(Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(
            layer.forward(&Tensor::vector(vec![2.0, 0.0])),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            layer.forward(&Tensor::vector(vec![-1.0, 2.0])),
            Err(Error::Domain(_))
        ));
    }
}
