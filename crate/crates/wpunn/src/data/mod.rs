//! Dataset types, loaders, and generators.

pub mod co2;
pub mod mnist;
pub mod polynomial;

pub use co2::{load_co2, Normalization, SeriesDataset};
pub use mnist::{encode_idx_images, encode_idx_labels, load_mnist};
pub use polynomial::{build_exact_network, generate_polynomial, sample_polynomial, Polynomial};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Labeled feature rows for classification.
#[derive(Debug, Clone)]
pub struct ClassificationDataset {
    /// `[n x d]` feature matrix.
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl ClassificationDataset {
    pub fn new(features: Tensor, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let n = match features.shape() {
            Shape::Matrix(n, _) => n,
            s => {
                return Err(Error::Dimension(format!(
                    "classification features must be rank 2, got {s}"
                )))
            }
        };
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {n} feature rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Argument(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(ClassificationDataset {
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.features.cols()
    }

    /// First `n` examples (for smoke-test subsets).
    pub fn take(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        if n == 0 {
            return Err(Error::Argument("subset must keep at least one example".to_string()));
        }
        let d = self.feature_width();
        ClassificationDataset::new(
            Tensor::matrix(n, d, self.features.as_slice()[..n * d].to_vec())?,
            self.labels[..n].to_vec(),
            self.class_count,
        )
    }

    /// Rows and labels at `indices`, as a batch.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let d = self.feature_width();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        (
            Tensor::matrix(indices.len(), d, data).expect("sized buffer"),
            labels,
        )
    }
}

/// Feature rows with scalar regression targets.
#[derive(Debug, Clone)]
pub struct RegressionDataset {
    /// `[n x d]` feature matrix.
    pub features: Tensor,
    /// `[n]` targets.
    pub targets: Tensor,
}

impl RegressionDataset {
    pub fn new(features: Tensor, targets: Tensor) -> Result<Self> {
        let n = match features.shape() {
            Shape::Matrix(n, _) => n,
            s => {
                return Err(Error::Dimension(format!(
                    "regression features must be rank 2, got {s}"
                )))
            }
        };
        if targets.shape() != Shape::Vector(n) {
            return Err(Error::Dimension(format!(
                "targets {} for {n} feature rows",
                targets.shape()
            )));
        }
        Ok(RegressionDataset { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.features.cols()
    }

    /// Rows and targets at `indices`; targets come back `[B x 1]` to match
    /// a width-1 network output.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Tensor) {
        let d = self.feature_width();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut t = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.features.row(i));
            t.push(self.targets.as_slice()[i]);
        }
        (
            Tensor::matrix(indices.len(), d, data).expect("sized buffer"),
            Tensor::matrix(indices.len(), 1, t).expect("sized buffer"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_validates_labels() {
        let f = Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(ClassificationDataset::new(f.clone(), vec![0, 3], 3).is_err());
        assert!(ClassificationDataset::new(f.clone(), vec![0], 3).is_err());
        assert!(ClassificationDataset::new(f, vec![0, 2], 3).is_ok());
    }

    #[test]
    fn gather_builds_batches() {
        let d = ClassificationDataset::new(
            Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            vec![0, 1, 0],
            2,
        )
        .unwrap();
        let (x, y) = d.gather(&[2, 0]);
        assert_eq!(x.as_slice(), &[5.0, 6.0, 1.0, 2.0]);
        assert_eq!(y, vec![0, 0]);
    }
}
