//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records one forward pass as an append-only list of nodes;
//! parents always precede children, so the append order is already
//! topological. [`Tape::backward`] walks the list in reverse once and
//! accumulates adjoints. Tapes are cheap and single-use: build a fresh tape
//! per forward pass, run backward at most once, read the adjoints, drop it.
//!
//! Inputs of rank 2 are treated as batches (rows = samples) by every op.

use crate::error::{Error, Result};
use crate::layers::window::{self, WindowConfig};
use crate::tensor::{axpy, dot, Shape, Tensor};

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// weights [out x in] applied to input [in] or [batch x in], plus biases.
    Dense {
        weights: NodeId,
        biases: NodeId,
        input: NodeId,
    },
    WindowProduct {
        input: NodeId,
        cfg: WindowConfig,
    },
    WindowMax {
        input: NodeId,
        cfg: WindowConfig,
    },
    /// Classic product unit: y_o = prod_i x_i ^ theta[o][i], x > 0.
    ProductUnit {
        exponents: NodeId,
        input: NodeId,
    },
    Sigmoid {
        input: NodeId,
    },
    Tanh {
        input: NodeId,
    },
    LeakyRelu {
        input: NodeId,
        slope: f64,
    },
    LogSoftmax {
        input: NodeId,
    },
    Add {
        lhs: NodeId,
        rhs: NodeId,
    },
    Mul {
        lhs: NodeId,
        rhs: NodeId,
    },
    Scale {
        input: NodeId,
        factor: f64,
    },
    Concat {
        lhs: NodeId,
        rhs: NodeId,
    },
    Sum {
        input: NodeId,
    },
    /// Mean over the batch of -log_probs[row, label[row]].
    NllLoss {
        log_probs: NodeId,
        labels: Vec<usize>,
    },
    /// Mean of squared differences against a constant target.
    MseLoss {
        prediction: NodeId,
        target: Tensor,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    adjoint: Tensor,
    reached: bool,
}

/// Reverse-mode tape. Single-threaded; one backward pass per tape.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let adjoint = Tensor::zeros(value.shape());
        self.nodes.push(Node {
            op,
            value,
            adjoint,
            reached: false,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Record an input or parameter value as a leaf.
    pub fn leaf(&mut self, value: &Tensor) -> NodeId {
        self.push(Op::Leaf, value.clone())
    }

    /// Cached forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Adjoint d(root)/d(node) after [`Tape::backward`]; zero before, and
    /// zero forever for nodes the root does not depend on.
    pub fn adjoint(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].adjoint
    }

    // ---- graph builders -------------------------------------------------

    /// y = W x + b, or rows-wise for a rank-2 batch input.
    pub fn dense(&mut self, weights: NodeId, biases: NodeId, input: NodeId) -> Result<NodeId> {
        let w = self.value(weights);
        let b = self.value(biases);
        let x = self.value(input);
        let (out_w, in_w) = match w.shape() {
            Shape::Matrix(r, c) => (r, c),
            s => {
                return Err(Error::Dimension(format!(
                    "dense: weights must be rank 2, got {s}"
                )))
            }
        };
        if b.shape() != Shape::Vector(out_w) {
            return Err(Error::Dimension(format!(
                "dense: biases {} do not match weights {}",
                b.shape(),
                w.shape()
            )));
        }
        if x.cols() != in_w {
            return Err(Error::Dimension(format!(
                "dense: input {} does not match weights {}",
                x.shape(),
                w.shape()
            )));
        }
        let rows = x.rows();
        let mut data = vec![0.0; rows * out_w];
        for r in 0..rows {
            let x_row = x.row(r);
            let out_row = &mut data[r * out_w..(r + 1) * out_w];
            for (o, slot) in out_row.iter_mut().enumerate() {
                *slot = dot(w.row(o), x_row) + b.as_slice()[o];
            }
        }
        let value = match x.shape() {
            Shape::Vector(_) => Tensor::vector(data),
            Shape::Matrix(_, _) => Tensor::matrix(rows, out_w, data)?,
        };
        Ok(self.push(
            Op::Dense {
                weights,
                biases,
                input,
            },
            value,
        ))
    }

    pub fn window_product(&mut self, input: NodeId, cfg: WindowConfig) -> Result<NodeId> {
        let value = window::windowed_forward(self.value(input), &cfg)?;
        Ok(self.push(Op::WindowProduct { input, cfg }, value))
    }

    pub fn window_max(&mut self, input: NodeId, cfg: WindowConfig) -> Result<NodeId> {
        let value = window::windowed_forward(self.value(input), &cfg)?;
        Ok(self.push(Op::WindowMax { input, cfg }, value))
    }

    /// Product unit over a rank-1 strictly positive input, computed as
    /// exp(sum theta * ln x).
    pub fn product_unit(&mut self, exponents: NodeId, input: NodeId) -> Result<NodeId> {
        let theta = self.value(exponents);
        let x = self.value(input);
        let (out_w, in_w) = match theta.shape() {
            Shape::Matrix(r, c) => (r, c),
            s => {
                return Err(Error::Dimension(format!(
                    "product unit: exponents must be rank 2, got {s}"
                )))
            }
        };
        if x.shape() != Shape::Vector(in_w) {
            return Err(Error::Dimension(format!(
                "product unit: input {} does not match exponents {}",
                x.shape(),
                theta.shape()
            )));
        }
        if let Some(bad) = x.iter().find(|v| **v <= 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "product unit requires strictly positive inputs, got {bad}"
            )));
        }
        let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mut data = vec![0.0; out_w];
        for (o, slot) in data.iter_mut().enumerate() {
            *slot = dot(theta.row(o), &log_x).exp();
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "product unit output overflowed".to_string(),
            ));
        }
        Ok(self.push(Op::ProductUnit { exponents, input }, Tensor::vector(data)))
    }

    pub fn sigmoid(&mut self, input: NodeId) -> NodeId {
        let value = self.value(input).map(sigmoid);
        self.push(Op::Sigmoid { input }, value)
    }

    pub fn tanh(&mut self, input: NodeId) -> NodeId {
        let value = self.value(input).map(f64::tanh);
        self.push(Op::Tanh { input }, value)
    }

    pub fn leaky_relu(&mut self, input: NodeId, slope: f64) -> NodeId {
        let value = self
            .value(input)
            .map(|v| if v > 0.0 { v } else { slope * v });
        self.push(Op::LeakyRelu { input, slope }, value)
    }

    /// Row-wise x - log(sum exp(x)), stabilized by max subtraction.
    pub fn log_softmax(&mut self, input: NodeId) -> NodeId {
        let x = self.value(input);
        let cols = x.cols();
        let mut data = Vec::with_capacity(x.len());
        for r in 0..x.rows() {
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            data.extend(row.iter().map(|v| v - log_sum));
        }
        let value = match x.shape() {
            Shape::Vector(_) => Tensor::vector(data),
            Shape::Matrix(r, _) => Tensor::matrix(r, cols, data).expect("shape preserved"),
        };
        self.push(Op::LogSoftmax { input }, value)
    }

    pub fn add(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId> {
        let value = self.value(lhs).add(self.value(rhs))?;
        Ok(self.push(Op::Add { lhs, rhs }, value))
    }

    pub fn mul(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId> {
        let value = self.value(lhs).mul(self.value(rhs))?;
        Ok(self.push(Op::Mul { lhs, rhs }, value))
    }

    pub fn scale(&mut self, input: NodeId, factor: f64) -> NodeId {
        let value = self.value(input).scale(factor);
        self.push(Op::Scale { input, factor }, value)
    }

    /// Concatenate two rank-1 values.
    pub fn concat(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId> {
        let a = self.value(lhs);
        let b = self.value(rhs);
        if a.rank() != 1 || b.rank() != 1 {
            return Err(Error::Dimension(format!(
                "concat expects rank-1 operands, got {} and {}",
                a.shape(),
                b.shape()
            )));
        }
        let mut data = a.as_slice().to_vec();
        data.extend_from_slice(b.as_slice());
        Ok(self.push(Op::Concat { lhs, rhs }, Tensor::vector(data)))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, input: NodeId) -> NodeId {
        let total: f64 = self.value(input).iter().sum();
        self.push(Op::Sum { input }, Tensor::scalar(total))
    }

    /// Negative log-likelihood: mean over rows of -log_probs[row, label].
    /// `log_probs` must come from a log-softmax; one label per row.
    pub fn nll_loss(&mut self, log_probs: NodeId, labels: &[usize]) -> Result<NodeId> {
        let lp = self.value(log_probs);
        let classes = lp.cols();
        if labels.len() != lp.rows() {
            return Err(Error::Dimension(format!(
                "nll: {} labels for {} rows",
                labels.len(),
                lp.rows()
            )));
        }
        let mut total = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            if label >= classes {
                return Err(Error::Argument(format!(
                    "nll: label {label} out of range for {classes} classes"
                )));
            }
            total -= lp.row(r)[label];
        }
        let value = Tensor::scalar(total / labels.len() as f64);
        Ok(self.push(
            Op::NllLoss {
                log_probs,
                labels: labels.to_vec(),
            },
            value,
        ))
    }

    /// Mean squared error against a constant target of the same shape.
    pub fn mse_loss(&mut self, prediction: NodeId, target: &Tensor) -> Result<NodeId> {
        let pred = self.value(prediction);
        if pred.shape() != target.shape() {
            return Err(Error::Dimension(format!(
                "mse: prediction {} vs target {}",
                pred.shape(),
                target.shape()
            )));
        }
        let n = pred.len() as f64;
        let total: f64 = pred
            .iter()
            .zip(target.iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        let value = Tensor::scalar(total / n);
        Ok(self.push(
            Op::MseLoss {
                prediction,
                target: target.clone(),
            },
            value,
        ))
    }

    // ---- backward pass ---------------------------------------------------

    /// Accumulate d(root)/d(node) into every node reachable from `root`.
    /// The root must be scalar, and a tape runs backward at most once.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if self.backward_done {
            return Err(Error::Contract(
                "backward may only run once per tape; build a fresh tape per forward pass"
                    .to_string(),
            ));
        }
        if self.nodes[root.0].value.shape() != Shape::Vector(1) {
            return Err(Error::Contract(format!(
                "backward root must be scalar, got shape {}",
                self.nodes[root.0].value.shape()
            )));
        }
        self.backward_done = true;
        self.nodes[root.0].adjoint = Tensor::scalar(1.0);
        self.nodes[root.0].reached = true;

        for k in (0..=root.0).rev() {
            let (head, tail) = self.nodes.split_at_mut(k);
            let node = &tail[0];
            if !node.reached {
                continue;
            }
            let up = &node.adjoint;
            match &node.op {
                Op::Leaf => {}
                Op::Dense {
                    weights,
                    biases,
                    input,
                } => {
                    let (w_id, b_id, x_id) = (*weights, *biases, *input);
                    if w_id == x_id || b_id == x_id || w_id == b_id {
                        return Err(Error::Contract(
                            "dense backward: weights, biases and input must be distinct nodes"
                                .to_string(),
                        ));
                    }
                    dense_backward(head, w_id, b_id, x_id, up);
                    mark(head, w_id);
                    mark(head, b_id);
                    mark(head, x_id);
                }
                Op::WindowProduct { input, cfg } => {
                    let x_node = &mut head[input.0];
                    let m = up.cols();
                    let cols = x_node.value.cols();
                    let mut scratch = Vec::new();
                    for b in 0..x_node.value.rows() {
                        let (value, adjoint) = (&x_node.value, &mut x_node.adjoint);
                        window::product_backward_row(
                            value.row(b),
                            cfg,
                            &up.as_slice()[b * m..(b + 1) * m],
                            &mut adjoint.as_mut_slice()[b * cols..(b + 1) * cols],
                            &mut scratch,
                        );
                    }
                    x_node.reached = true;
                }
                Op::WindowMax { input, cfg } => {
                    let x_node = &mut head[input.0];
                    let m = up.cols();
                    let cols = x_node.value.cols();
                    for b in 0..x_node.value.rows() {
                        let (value, adjoint) = (&x_node.value, &mut x_node.adjoint);
                        window::max_backward_row(
                            value.row(b),
                            cfg,
                            &up.as_slice()[b * m..(b + 1) * m],
                            &mut adjoint.as_mut_slice()[b * cols..(b + 1) * cols],
                        );
                    }
                    x_node.reached = true;
                }
                Op::ProductUnit { exponents, input } => {
                    let (t_id, x_id) = (*exponents, *input);
                    let y = &node.value;
                    let in_w = head[x_id.0].value.len();
                    // d theta[o][i] += up_o * y_o * ln(x_i)
                    // d x[i]       += sum_o up_o * y_o * theta[o][i] / x_i
                    let log_x: Vec<f64> = head[x_id.0].value.iter().map(|v| v.ln()).collect();
                    let x_vals: Vec<f64> = head[x_id.0].value.as_slice().to_vec();
                    let theta_vals = head[t_id.0].value.clone();
                    {
                        let t_adj = &mut head[t_id.0].adjoint;
                        for (o, &g) in up.iter().enumerate() {
                            let scale = g * y.as_slice()[o];
                            axpy(scale, &log_x, t_adj.row_mut(o));
                        }
                    }
                    {
                        let x_adj = &mut head[x_id.0].adjoint;
                        for (o, &g) in up.iter().enumerate() {
                            let scale = g * y.as_slice()[o];
                            for i in 0..in_w {
                                x_adj.as_mut_slice()[i] += scale * theta_vals.row(o)[i] / x_vals[i];
                            }
                        }
                    }
                    mark(head, t_id);
                    mark(head, x_id);
                }
                Op::Sigmoid { input } => {
                    let x_id = *input;
                    let y = &node.value;
                    let x_node = &mut head[x_id.0];
                    for (i, (&g, &s)) in up.iter().zip(y.iter()).enumerate() {
                        x_node.adjoint.as_mut_slice()[i] += g * s * (1.0 - s);
                    }
                    x_node.reached = true;
                }
                Op::Tanh { input } => {
                    let x_id = *input;
                    let y = &node.value;
                    let x_node = &mut head[x_id.0];
                    for (i, (&g, &t)) in up.iter().zip(y.iter()).enumerate() {
                        x_node.adjoint.as_mut_slice()[i] += g * (1.0 - t * t);
                    }
                    x_node.reached = true;
                }
                Op::LeakyRelu { input, slope } => {
                    let x_id = *input;
                    let slope = *slope;
                    let x_node = &mut head[x_id.0];
                    for i in 0..x_node.value.len() {
                        let d = if x_node.value.as_slice()[i] > 0.0 {
                            1.0
                        } else {
                            slope
                        };
                        x_node.adjoint.as_mut_slice()[i] += up.as_slice()[i] * d;
                    }
                    x_node.reached = true;
                }
                Op::LogSoftmax { input } => {
                    let x_id = *input;
                    let y = &node.value;
                    let cols = y.cols();
                    let x_node = &mut head[x_id.0];
                    for r in 0..y.rows() {
                        let up_row = &up.as_slice()[r * cols..(r + 1) * cols];
                        let y_row = y.row(r);
                        let g_sum: f64 = up_row.iter().sum();
                        let adj = &mut x_node.adjoint.as_mut_slice()[r * cols..(r + 1) * cols];
                        for j in 0..cols {
                            adj[j] += up_row[j] - y_row[j].exp() * g_sum;
                        }
                    }
                    x_node.reached = true;
                }
                Op::Add { lhs, rhs } => {
                    let up_vals: Vec<f64> = up.as_slice().to_vec();
                    accumulate(head, *lhs, &up_vals);
                    accumulate(head, *rhs, &up_vals);
                }
                Op::Mul { lhs, rhs } => {
                    let (a, b) = (*lhs, *rhs);
                    let a_vals: Vec<f64> = head[a.0].value.as_slice().to_vec();
                    let b_vals: Vec<f64> = head[b.0].value.as_slice().to_vec();
                    let da: Vec<f64> = up.iter().zip(&b_vals).map(|(g, v)| g * v).collect();
                    let db: Vec<f64> = up.iter().zip(&a_vals).map(|(g, v)| g * v).collect();
                    accumulate(head, a, &da);
                    accumulate(head, b, &db);
                }
                Op::Scale { input, factor } => {
                    let d: Vec<f64> = up.iter().map(|g| g * factor).collect();
                    accumulate(head, *input, &d);
                }
                Op::Concat { lhs, rhs } => {
                    let (a, b) = (*lhs, *rhs);
                    let n_a = head[a.0].value.len();
                    let up_slice = up.as_slice();
                    let left = up_slice[..n_a].to_vec();
                    let right = up_slice[n_a..].to_vec();
                    accumulate(head, a, &left);
                    accumulate(head, b, &right);
                }
                Op::Sum { input } => {
                    let g = up.as_slice()[0];
                    let x_node = &mut head[input.0];
                    for v in x_node.adjoint.as_mut_slice() {
                        *v += g;
                    }
                    x_node.reached = true;
                }
                Op::NllLoss { log_probs, labels } => {
                    let g = up.as_slice()[0] / labels.len() as f64;
                    let lp_id = *log_probs;
                    let cols = head[lp_id.0].value.cols();
                    let lp_node = &mut head[lp_id.0];
                    for (r, &label) in labels.iter().enumerate() {
                        lp_node.adjoint.as_mut_slice()[r * cols + label] -= g;
                    }
                    lp_node.reached = true;
                }
                Op::MseLoss { prediction, target } => {
                    let p_id = *prediction;
                    let g = up.as_slice()[0];
                    let n = target.len() as f64;
                    let p_node = &mut head[p_id.0];
                    for i in 0..target.len() {
                        let diff = p_node.value.as_slice()[i] - target.as_slice()[i];
                        p_node.adjoint.as_mut_slice()[i] += g * 2.0 * diff / n;
                    }
                    p_node.reached = true;
                }
            }
        }
        Ok(())
    }
}

fn mark(nodes: &mut [Node], id: NodeId) {
    nodes[id.0].reached = true;
}

fn accumulate(nodes: &mut [Node], id: NodeId, grad: &[f64]) {
    let node = &mut nodes[id.0];
    for (a, g) in node.adjoint.as_mut_slice().iter_mut().zip(grad) {
        *a += g;
    }
    node.reached = true;
}

// Dense backward over potentially batched input. Kept out of the match arm
// so the borrow regions stay readable: weights, biases and input are three
// distinct earlier nodes.
fn dense_backward(nodes: &mut [Node], w_id: NodeId, b_id: NodeId, x_id: NodeId, up: &Tensor) {
    let rows = nodes[x_id.0].value.rows();
    let in_w = nodes[x_id.0].value.cols();
    let out_w = nodes[b_id.0].value.len();

    // db[o] += sum_r up[r][o]
    {
        let b_adj = nodes[b_id.0].adjoint.as_mut_slice();
        for r in 0..rows {
            for (o, slot) in b_adj.iter_mut().enumerate() {
                *slot += up.as_slice()[r * out_w + o];
            }
        }
    }

    let (w_node, x_node) = two_nodes(nodes, w_id.0, x_id.0);

    // dW[o] += sum_r up[r][o] * x[r]
    for r in 0..rows {
        let x_row = x_node.value.row(r);
        let up_row = &up.as_slice()[r * out_w..(r + 1) * out_w];
        for (o, &g) in up_row.iter().enumerate() {
            axpy(
                g,
                x_row,
                &mut w_node.adjoint.as_mut_slice()[o * in_w..(o + 1) * in_w],
            );
        }
    }

    // dx[r] += sum_o up[r][o] * W[o]
    for r in 0..rows {
        let up_row = &up.as_slice()[r * out_w..(r + 1) * out_w];
        let x_adj = &mut x_node.adjoint.as_mut_slice()[r * in_w..(r + 1) * in_w];
        for (o, &g) in up_row.iter().enumerate() {
            axpy(g, w_node.value.row(o), x_adj);
        }
    }
}

// Disjoint mutable borrows of two distinct node indices.
fn two_nodes(nodes: &mut [Node], a: usize, b: usize) -> (&mut Node, &mut Node) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = nodes.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = nodes.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Compare the analytic gradient of a tape-built scalar function against
/// central finite differences at `point`.
///
/// `f` receives a fresh tape and the leaf holding the evaluation point and
/// returns the scalar root. The result is the maximum over coordinates of
/// `|analytic - central| / max(|analytic|, |central|, 1e-8)`.
pub fn grad_check<F>(f: F, point: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> Result<NodeId>,
{
    if step <= 0.0 {
        return Err(Error::Argument(format!("step must be positive, got {step}")));
    }

    let eval = |at: &Tensor| -> Result<f64> {
        let mut tape = Tape::new();
        let x = tape.leaf(at);
        let root = f(&mut tape, x)?;
        let v = tape.value(root).item()?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "function value {v} is not finite at a perturbed point"
            )));
        }
        Ok(v)
    };

    let analytic = {
        let mut tape = Tape::new();
        let x = tape.leaf(point);
        let root = f(&mut tape, x)?;
        tape.backward(root)?;
        tape.adjoint(x).clone()
    };

    let mut worst = 0.0f64;
    let mut perturbed = point.clone();
    for i in 0..point.len() {
        let orig = point.as_slice()[i];
        perturbed.as_mut_slice()[i] = orig + step;
        let plus = eval(&perturbed)?;
        perturbed.as_mut_slice()[i] = orig - step;
        let minus = eval(&perturbed)?;
        perturbed.as_mut_slice()[i] = orig;

        let central = (plus - minus) / (2.0 * step);
        let a = analytic.as_slice()[i];
        let denom = a.abs().max(central.abs()).max(1e-8);
        worst = worst.max((a - central).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn sum_adjoint_is_ones() {
        let mut tape = Tape::new();
        let v = tape.leaf(&Tensor::vector(vec![1.0, -2.0, 3.0]));
        let root = tape.sum(v);
        tape.backward(root).unwrap();
        assert_eq!(tape.adjoint(v).as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn unreachable_leaf_stays_zero() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::vector(vec![1.0, 2.0]));
        let b = tape.leaf(&Tensor::vector(vec![5.0]));
        let root = tape.sum(a);
        tape.backward(root).unwrap();
        assert_eq!(tape.adjoint(b).as_slice(), &[0.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(tape.backward(a), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_twice_is_forbidden() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::vector(vec![1.0, 2.0]));
        let root = tape.sum(a);
        tape.backward(root).unwrap();
        assert!(matches!(tape.backward(root), Err(Error::Contract(_))));
    }

    #[test]
    fn mul_gradient_exchanges_values() {
        let mut tape = Tape::new();
        let a = tape.leaf(&Tensor::vector(vec![2.0, 3.0]));
        let b = tape.leaf(&Tensor::vector(vec![4.0, 5.0]));
        let p = tape.mul(a, b).unwrap();
        let root = tape.sum(p);
        tape.backward(root).unwrap();
        assert_eq!(tape.adjoint(a).as_slice(), &[4.0, 5.0]);
        assert_eq!(tape.adjoint(b).as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn square_via_aliased_mul() {
        // d(x*x)/dx = 2x even when both parents are the same node.
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::vector(vec![3.0]));
        let sq = tape.mul(x, x).unwrap();
        tape.backward(sq).unwrap();
        assert_eq!(tape.adjoint(x).as_slice(), &[6.0]);
    }

    #[test]
    fn dense_gradient_vector_case() {
        // y = Wx + b, root = sum(y): dW[o][i] = x[i], db = 1, dx[i] = sum_o W[o][i].
        let mut tape = Tape::new();
        let w = tape.leaf(&Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let b = tape.leaf(&Tensor::vector(vec![0.5, -0.5]));
        let x = tape.leaf(&Tensor::vector(vec![1.0, 10.0, 100.0]));
        let y = tape.dense(w, b, x).unwrap();
        assert_eq!(tape.value(y).as_slice(), &[321.5, 653.5]);
        let root = tape.sum(y);
        tape.backward(root).unwrap();
        assert_eq!(
            tape.adjoint(w).as_slice(),
            &[1.0, 10.0, 100.0, 1.0, 10.0, 100.0]
        );
        assert_eq!(tape.adjoint(b).as_slice(), &[1.0, 1.0]);
        assert_eq!(tape.adjoint(x).as_slice(), &[5.0, 7.0, 9.0]);
    }

    #[test]
    fn dense_batched_matches_per_sample() {
        let mut rng = Rng::new(11);
        let w_t = {
            let v = rng.uniform(6, -1.0, 1.0).unwrap();
            Tensor::matrix(2, 3, v.as_slice().to_vec()).unwrap()
        };
        let b_t = rng.uniform(2, -1.0, 1.0).unwrap();
        let x_rows: Vec<Tensor> = (0..4).map(|_| rng.uniform(3, -1.0, 1.0).unwrap()).collect();
        let x_batch = {
            let mut data = Vec::new();
            for r in &x_rows {
                data.extend_from_slice(r.as_slice());
            }
            Tensor::matrix(4, 3, data).unwrap()
        };

        // Batched gradient of sum over all outputs.
        let mut tape = Tape::new();
        let w = tape.leaf(&w_t);
        let b = tape.leaf(&b_t);
        let x = tape.leaf(&x_batch);
        let y = tape.dense(w, b, x).unwrap();
        let root = tape.sum(y);
        tape.backward(root).unwrap();
        let batched_w_grad = tape.adjoint(w).clone();

        // Sum of per-sample gradients.
        let mut summed = Tensor::zeros(w_t.shape());
        for row in &x_rows {
            let mut t = Tape::new();
            let w = t.leaf(&w_t);
            let b = t.leaf(&b_t);
            let x = t.leaf(row);
            let y = t.dense(w, b, x).unwrap();
            let root = t.sum(y);
            t.backward(root).unwrap();
            summed = summed.add(t.adjoint(w)).unwrap();
        }
        for (a, s) in batched_w_grad.iter().zip(summed.iter()) {
            assert!((a - s).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_check_quadratic() {
        let err = grad_check(
            |tape, x| {
                let sq = tape.mul(x, x)?;
                Ok(tape.sum(sq))
            },
            &Tensor::vector(vec![3.0]),
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-8, "error {err}");
    }

    #[test]
    fn grad_check_constant_function_zero_gradient() {
        let err = grad_check(
            |tape, x| {
                let zero = tape.scale(x, 0.0);
                Ok(tape.sum(zero))
            },
            &Tensor::vector(vec![1.0, 2.0, 3.0]),
            1e-5,
        )
        .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn grad_check_rejects_bad_step() {
        let r = grad_check(|tape, x| Ok(tape.sum(x)), &Tensor::vector(vec![1.0]), 0.0);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn grad_check_window_product() {
        let mut rng = Rng::new(21);
        for _ in 0..10 {
            let x = {
                let mags = rng.uniform(6, 0.1, 2.0).unwrap();
                Tensor::vector(
                    mags.iter()
                        .map(|&m| if rng.next_f64() < 0.5 { -m } else { m })
                        .collect(),
                )
            };
            let err = grad_check(
                |tape, x| {
                    let y = tape.window_product(x, WindowConfig::product(3, 1))?;
                    Ok(tape.sum(y))
                },
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err <= 1e-6, "error {err}");
        }
    }

    #[test]
    fn adjoint_linearity() {
        // backward of a*f + b*g equals a*backward(f) + b*backward(g).
        let point = Tensor::vector(vec![0.3, -0.7, 1.1]);
        let (a, b) = (2.5, -1.25);

        let grad_of = |which: u8| -> Tensor {
            let mut tape = Tape::new();
            let x = tape.leaf(&point);
            let root = match which {
                0 => {
                    let s = tape.sigmoid(x);
                    tape.sum(s)
                }
                1 => {
                    let m = tape.mul(x, x).unwrap();
                    tape.sum(m)
                }
                _ => {
                    let s = tape.sigmoid(x);
                    let f = tape.sum(s);
                    let m = tape.mul(x, x).unwrap();
                    let g = tape.sum(m);
                    let fa = tape.scale(f, a);
                    let gb = tape.scale(g, b);
                    tape.add(fa, gb).unwrap()
                }
            };
            tape.backward(root).unwrap();
            tape.adjoint(x).clone()
        };

        let gf = grad_of(0);
        let gg = grad_of(1);
        let combined = grad_of(2);
        for i in 0..point.len() {
            let want = a * gf.as_slice()[i] + b * gg.as_slice()[i];
            assert!((combined.as_slice()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn nll_loss_values_and_gradient() {
        let mut tape = Tape::new();
        let uniform = Tensor::vector(vec![(0.1f64).ln(); 10]);
        let lp = tape.leaf(&uniform);
        let loss = tape.nll_loss(lp, &[3]).unwrap();
        assert!((tape.value(loss).item().unwrap() - 10.0f64.ln()).abs() < 1e-12);
        tape.backward(loss).unwrap();
        let g = tape.adjoint(lp);
        for (i, &v) in g.iter().enumerate() {
            assert_eq!(v, if i == 3 { -1.0 } else { 0.0 });
        }
    }

    #[test]
    fn nll_rejects_out_of_range_label() {
        let mut tape = Tape::new();
        let lp = tape.leaf(&Tensor::vector(vec![0.0, 0.0]));
        assert!(matches!(
            tape.nll_loss(lp, &[2]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn mse_loss_value_and_gradient() {
        let mut tape = Tape::new();
        let p = tape.leaf(&Tensor::vector(vec![1.0, 3.0]));
        let t = Tensor::vector(vec![1.0, 1.0]);
        let loss = tape.mse_loss(p, &t).unwrap();
        assert_eq!(tape.value(loss).item().unwrap(), 2.0);
        tape.backward(loss).unwrap();
        // d/dp = 2 (p - t) / n
        assert_eq!(tape.adjoint(p).as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn log_softmax_normalizes() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::vector(vec![0.1, -2.0, 3.5, 0.0]));
        let lp = tape.log_softmax(x);
        let total: f64 = tape.value(lp).iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_unit_requires_positive_input() {
        let mut tape = Tape::new();
        let theta = tape.leaf(&Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap());
        let x = tape.leaf(&Tensor::vector(vec![2.0, -3.0]));
        assert!(matches!(
            tape.product_unit(theta, x),
            Err(Error::Domain(_))
        ));
    }
}
