//! Windowed aggregation over a vector: slide a window of size `w` by stride
//! `s` and reduce each window with product or max. The product variant is the
//! weightless nonlinearity this crate is built around; swapping the
//! aggregator for max gives ordinary max pooling.

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Forward raises a numeric error when a window product exceeds this
/// magnitude; wide windows can otherwise overflow silently.
pub const PRODUCT_OVERFLOW_LIMIT: f64 = 1e150;

/// How a window is reduced to one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Product,
    Max,
}

/// Window size, stride, and aggregator for a windowed layer.
///
/// Windows start at offsets 0, s, 2s, ... and only full windows produce
/// output; a trailing partial window is legal but its elements are unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub window: usize,
    pub stride: usize,
    pub aggregator: Aggregator,
}

impl WindowConfig {
    pub fn product(window: usize, stride: usize) -> Self {
        WindowConfig {
            window,
            stride,
            aggregator: Aggregator::Product,
        }
    }

    pub fn max(window: usize, stride: usize) -> Self {
        WindowConfig {
            window,
            stride,
            aggregator: Aggregator::Max,
        }
    }

    /// Check `1 <= stride <= window <= input_width`.
    pub fn validate(&self, input_width: usize) -> Result<()> {
        if self.window == 0 || self.stride == 0 {
            return Err(Error::Config(format!(
                "window size and stride must be positive, got w={} s={}",
                self.window, self.stride
            )));
        }
        if self.stride > self.window {
            return Err(Error::Config(format!(
                "stride {} exceeds window size {}",
                self.stride, self.window
            )));
        }
        if self.window > input_width {
            return Err(Error::Config(format!(
                "window size {} exceeds input width {}",
                self.window, input_width
            )));
        }
        Ok(())
    }

    /// Number of full windows over an input of width `n`:
    /// `floor((n - w) / s) + 1`.
    pub fn output_width(&self, n: usize) -> Result<usize> {
        self.validate(n)?;
        Ok((n - self.window) / self.stride + 1)
    }
}

/// Free-function form of [`WindowConfig::output_width`].
pub fn output_width(input_width: usize, cfg: &WindowConfig) -> Result<usize> {
    cfg.output_width(input_width)
}

pub(crate) fn product_forward_row(x: &[f64], cfg: &WindowConfig, out: &mut [f64]) -> Result<()> {
    for (i, slot) in out.iter_mut().enumerate() {
        let start = i * cfg.stride;
        let mut prod = 1.0;
        for &v in &x[start..start + cfg.window] {
            prod *= v;
        }
        if !prod.is_finite() || prod.abs() > PRODUCT_OVERFLOW_LIMIT {
            return Err(Error::Numeric(format!(
                "window product at output {i} has magnitude {:.3e} (limit {PRODUCT_OVERFLOW_LIMIT:.0e})",
                prod.abs()
            )));
        }
        *slot = prod;
    }
    Ok(())
}

// Gradient of each window product via complement products (prefix * suffix),
// never by dividing the product by x_j: exact when inputs contain zeros.
pub(crate) fn product_backward_row(
    x: &[f64],
    cfg: &WindowConfig,
    upstream: &[f64],
    grad: &mut [f64],
    prefix: &mut Vec<f64>,
) {
    let w = cfg.window;
    prefix.resize(w, 0.0);
    for (i, &up) in upstream.iter().enumerate() {
        let start = i * cfg.stride;
        let win = &x[start..start + w];
        let mut acc = 1.0;
        for k in 0..w {
            prefix[k] = acc;
            acc *= win[k];
        }
        let mut suffix = 1.0;
        for k in (0..w).rev() {
            grad[start + k] += up * prefix[k] * suffix;
            suffix *= win[k];
        }
    }
}

// Ties break toward the lowest index so routing is deterministic.
pub(crate) fn max_argmax(win: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in win.iter().enumerate().skip(1) {
        if v > win[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn max_forward_row(x: &[f64], cfg: &WindowConfig, out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        let start = i * cfg.stride;
        let win = &x[start..start + cfg.window];
        *slot = win[max_argmax(win)];
    }
}

pub(crate) fn max_backward_row(x: &[f64], cfg: &WindowConfig, upstream: &[f64], grad: &mut [f64]) {
    for (i, &up) in upstream.iter().enumerate() {
        let start = i * cfg.stride;
        let win = &x[start..start + cfg.window];
        grad[start + max_argmax(win)] += up;
    }
}

/// Apply the windowed aggregation to a rank-1 input (or each row of a
/// rank-2 input independently).
pub fn windowed_forward(x: &Tensor, cfg: &WindowConfig) -> Result<Tensor> {
    let n = x.cols();
    let m = cfg.output_width(n)?;
    if !x.all_finite() {
        return Err(Error::Numeric(
            "windowed forward: input contains non-finite values".to_string(),
        ));
    }
    let rows = x.rows();
    let mut data = vec![0.0; rows * m];
    for b in 0..rows {
        let out_row = &mut data[b * m..(b + 1) * m];
        match cfg.aggregator {
            Aggregator::Product => product_forward_row(x.row(b), cfg, out_row)?,
            Aggregator::Max => max_forward_row(x.row(b), cfg, out_row),
        }
    }
    Ok(match x.shape() {
        Shape::Vector(_) => Tensor::vector(data),
        Shape::Matrix(_, _) => Tensor::matrix(rows, m, data)?,
    })
}

/// Gradient of [`windowed_forward`] with respect to the input, given the
/// upstream gradient. Overlapping windows (s < w) accumulate.
pub fn windowed_backward(x: &Tensor, cfg: &WindowConfig, upstream: &Tensor) -> Result<Tensor> {
    let n = x.cols();
    let m = cfg.output_width(n)?;
    if upstream.cols() != m || upstream.rows() != x.rows() {
        return Err(Error::Dimension(format!(
            "windowed backward: upstream shape {} does not match output of {} input",
            upstream.shape(),
            x.shape()
        )));
    }
    let mut grad = Tensor::zeros(x.shape());
    let mut scratch = Vec::new();
    for b in 0..x.rows() {
        let g = grad.row_mut(b);
        match cfg.aggregator {
            Aggregator::Product => {
                product_backward_row(x.row(b), cfg, upstream.row(b), g, &mut scratch)
            }
            Aggregator::Max => max_backward_row(x.row(b), cfg, upstream.row(b), g),
        }
    }
    Ok(grad)
}
