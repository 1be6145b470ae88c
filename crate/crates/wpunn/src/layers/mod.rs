//! Layer kinds: fully-connected, windowed aggregation (product and max),
//! classic product units, pointwise activations, recurrent blocks, and the
//! network container tying them together.

pub mod dense;
pub mod network;
pub mod punn;
pub mod recurrent;
pub mod window;

pub use dense::DenseLayer;
pub use network::{Layer, LayerKind, Network, NetworkSpec, RecurrentState, TapeState};
pub use punn::ProductUnitLayer;
pub use recurrent::{GatedBlock, LstmCell};
pub use window::{output_width, windowed_backward, windowed_forward, Aggregator, WindowConfig};

use crate::tensor::Tensor;

pub(crate) fn sigmoid_tensor(x: &Tensor) -> Tensor {
    x.map(|v| 1.0 / (1.0 + (-v).exp()))
}

// Row-wise log softmax with max subtraction, mirroring the tape op.
pub(crate) fn log_softmax_tensor(x: &Tensor) -> Tensor {
    let cols = x.cols();
    let mut data = Vec::with_capacity(x.len());
    for r in 0..x.rows() {
        let row = x.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        data.extend(row.iter().map(|v| v - log_sum));
    }
    match x.shape() {
        crate::tensor::Shape::Vector(_) => Tensor::vector(data),
        crate::tensor::Shape::Matrix(r, _) => {
            Tensor::matrix(r, cols, data).expect("shape preserved")
        }
    }
}
