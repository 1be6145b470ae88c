//! Network description and container: an ordered list of layers, the width
//! algebra connecting them, parameter bookkeeping, and forward passes both
//! as plain values (inference) and on a tape (training).

use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::layers::window::{windowed_forward, Aggregator, WindowConfig};
use crate::layers::{log_softmax_tensor, sigmoid_tensor, DenseLayer, GatedBlock, LstmCell};
use crate::rng::Rng;
use crate::tensor::Tensor;
use std::fmt::Write as _;

/// One layer in a network description.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Dense { width: usize },
    Window(WindowConfig),
    Sigmoid,
    LeakyRelu { slope: f64 },
    LogSoftmax,
    /// Recurrent gated block producing `width` outputs in (0, 1).
    Gated { width: usize },
    /// LSTM cell with `width` hidden units.
    Lstm { width: usize },
}

/// Declarative network description: input width plus ordered layers.
///
/// Serializes to a plain-text format with one layer per line, e.g.
///
/// ```text
/// input 784
/// dense 300
/// window w=4 s=4 agg=product
/// dense 10
/// logsoftmax
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub layers: Vec<LayerKind>,
}

impl NetworkSpec {
    pub fn new(input_width: usize, layers: Vec<LayerKind>) -> Self {
        NetworkSpec {
            input_width,
            layers,
        }
    }

    /// Check widths layer by layer; returns the per-layer output widths.
    pub fn widths(&self) -> Result<Vec<usize>> {
        if self.input_width == 0 {
            return Err(Error::Config("input width must be positive".to_string()));
        }
        let mut cur = self.input_width;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match layer {
                LayerKind::Dense { width } | LayerKind::Gated { width } | LayerKind::Lstm { width } => {
                    if *width == 0 {
                        return Err(Error::Config(format!("layer {i}: width must be positive")));
                    }
                    *width
                }
                LayerKind::Window(cfg) => cfg
                    .output_width(cur)
                    .map_err(|e| Error::Config(format!("layer {i}: {e}")))?,
                LayerKind::Sigmoid | LayerKind::LeakyRelu { .. } | LayerKind::LogSoftmax => cur,
            };
            out.push(cur);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.widths().map(|_| ())
    }

    pub fn output_width(&self) -> Result<usize> {
        Ok(self.widths()?.last().copied().unwrap_or(self.input_width))
    }

    /// Total number of trainable scalars. Window and activation layers
    /// contribute zero.
    pub fn parameter_count(&self) -> Result<usize> {
        let widths = self.widths()?;
        let mut total = 0;
        let mut cur = self.input_width;
        for (layer, &out) in self.layers.iter().zip(&widths) {
            total += match layer {
                LayerKind::Dense { width } => width * (cur + 1),
                LayerKind::Gated { width } => 2 * width * (cur + width + 1),
                LayerKind::Lstm { width } => 4 * (width * (cur + width) + width),
                LayerKind::Window(_)
                | LayerKind::Sigmoid
                | LayerKind::LeakyRelu { .. }
                | LayerKind::LogSoftmax => 0,
            };
            cur = out;
        }
        Ok(total)
    }

    pub fn is_recurrent(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l, LayerKind::Gated { .. } | LayerKind::Lstm { .. }))
    }

    /// One layer per line; see the type-level docs for the format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input {}", self.input_width);
        for layer in &self.layers {
            match layer {
                LayerKind::Dense { width } => {
                    let _ = writeln!(s, "dense {width}");
                }
                LayerKind::Window(cfg) => {
                    let agg = match cfg.aggregator {
                        Aggregator::Product => "product",
                        Aggregator::Max => "max",
                    };
                    let _ = writeln!(s, "window w={} s={} agg={agg}", cfg.window, cfg.stride);
                }
                LayerKind::Sigmoid => {
                    let _ = writeln!(s, "sigmoid");
                }
                LayerKind::LeakyRelu { slope } => {
                    let _ = writeln!(s, "leakyrelu {slope}");
                }
                LayerKind::LogSoftmax => {
                    let _ = writeln!(s, "logsoftmax");
                }
                LayerKind::Gated { width } => {
                    let _ = writeln!(s, "gated {width}");
                }
                LayerKind::Lstm { width } => {
                    let _ = writeln!(s, "lstm {width}");
                }
            }
        }
        s
    }

    /// Parse the plain-text format. Blank lines and `#` comments are
    /// ignored. The first meaningful line must be `input <width>`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut input_width: Option<usize> = None;
        let mut layers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let rest: Vec<&str> = parts.collect();
            let parse_usize = |s: &str, what: &str| -> Result<usize> {
                s.parse().map_err(|_| {
                    Error::Format(format!("line {}: bad {what} '{s}'", lineno + 1))
                })
            };
            match kind {
                "input" => {
                    if input_width.is_some() {
                        return Err(Error::Format(format!(
                            "line {}: duplicate input declaration",
                            lineno + 1
                        )));
                    }
                    let w = rest
                        .first()
                        .ok_or_else(|| {
                            Error::Format(format!("line {}: input needs a width", lineno + 1))
                        })
                        .and_then(|s| parse_usize(s, "input width"))?;
                    input_width = Some(w);
                }
                "dense" | "gated" | "lstm" => {
                    let w = rest
                        .first()
                        .ok_or_else(|| {
                            Error::Format(format!("line {}: {kind} needs a width", lineno + 1))
                        })
                        .and_then(|s| parse_usize(s, "width"))?;
                    layers.push(match kind {
                        "dense" => LayerKind::Dense { width: w },
                        "gated" => LayerKind::Gated { width: w },
                        _ => LayerKind::Lstm { width: w },
                    });
                }
                "window" => {
                    let mut w = None;
                    let mut s_val = None;
                    let mut agg = Aggregator::Product;
                    for field in &rest {
                        let (key, value) = field.split_once('=').ok_or_else(|| {
                            Error::Format(format!(
                                "line {}: window fields are key=value, got '{field}'",
                                lineno + 1
                            ))
                        })?;
                        match key {
                            "w" => w = Some(parse_usize(value, "window size")?),
                            "s" => s_val = Some(parse_usize(value, "stride")?),
                            "agg" => {
                                agg = match value {
                                    "product" => Aggregator::Product,
                                    "max" => Aggregator::Max,
                                    other => {
                                        return Err(Error::Format(format!(
                                            "line {}: unknown aggregator '{other}'",
                                            lineno + 1
                                        )))
                                    }
                                }
                            }
                            other => {
                                return Err(Error::Format(format!(
                                    "line {}: unknown window field '{other}'",
                                    lineno + 1
                                )))
                            }
                        }
                    }
                    let w = w.ok_or_else(|| {
                        Error::Format(format!("line {}: window needs w=", lineno + 1))
                    })?;
                    let s_val = s_val.ok_or_else(|| {
                        Error::Format(format!("line {}: window needs s=", lineno + 1))
                    })?;
                    layers.push(LayerKind::Window(WindowConfig {
                        window: w,
                        stride: s_val,
                        aggregator: agg,
                    }));
                }
                "sigmoid" => layers.push(LayerKind::Sigmoid),
                "logsoftmax" => layers.push(LayerKind::LogSoftmax),
                "leakyrelu" => {
                    let slope = rest
                        .first()
                        .ok_or_else(|| {
                            Error::Format(format!(
                                "line {}: leakyrelu needs a slope",
                                lineno + 1
                            ))
                        })?
                        .parse::<f64>()
                        .map_err(|_| {
                            Error::Format(format!("line {}: bad slope", lineno + 1))
                        })?;
                    layers.push(LayerKind::LeakyRelu { slope });
                }
                other => {
                    return Err(Error::Format(format!(
                        "line {}: unknown layer kind '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        let input_width = input_width
            .ok_or_else(|| Error::Format("missing 'input <width>' line".to_string()))?;
        let spec = NetworkSpec::new(input_width, layers);
        spec.validate()?;
        Ok(spec)
    }
}

/// Instantiated layer with its parameters.
#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    Window(WindowConfig),
    Sigmoid,
    LeakyRelu(f64),
    LogSoftmax,
    Gated(GatedBlock),
    Lstm(LstmCell),
}

/// Detached recurrent state for every layer (zeros at a sequence start).
/// Layers without state carry `None`.
#[derive(Debug, Clone)]
pub struct RecurrentState {
    slots: Vec<StateSlot>,
}

#[derive(Debug, Clone)]
enum StateSlot {
    None,
    Gated(Tensor),
    Lstm { hidden: Tensor, cell: Tensor },
}

/// Per-layer state node ids on a live tape during truncated unrolling.
#[derive(Debug)]
pub struct TapeState {
    slots: Vec<TapeSlot>,
}

#[derive(Debug, Clone, Copy)]
enum TapeSlot {
    None,
    Gated(NodeId),
    Lstm { hidden: NodeId, cell: NodeId },
}

impl RecurrentState {
    /// Put the state values on a tape as leaves (the truncation boundary:
    /// gradients stop here).
    pub fn register(&self, tape: &mut Tape) -> TapeState {
        let slots = self
            .slots
            .iter()
            .map(|slot| match slot {
                StateSlot::None => TapeSlot::None,
                StateSlot::Gated(t) => TapeSlot::Gated(tape.leaf(t)),
                StateSlot::Lstm { hidden, cell } => TapeSlot::Lstm {
                    hidden: tape.leaf(hidden),
                    cell: tape.leaf(cell),
                },
            })
            .collect();
        TapeState { slots }
    }
}

impl TapeState {
    /// Copy current state values off the tape, detaching them from the
    /// graph for the next truncation window.
    pub fn detach(&self, tape: &Tape) -> RecurrentState {
        let slots = self
            .slots
            .iter()
            .map(|slot| match slot {
                TapeSlot::None => StateSlot::None,
                TapeSlot::Gated(id) => StateSlot::Gated(tape.value(*id).clone()),
                TapeSlot::Lstm { hidden, cell } => StateSlot::Lstm {
                    hidden: tape.value(*hidden).clone(),
                    cell: tape.value(*cell).clone(),
                },
            })
            .collect();
        RecurrentState { slots }
    }
}

/// A network instance: spec plus instantiated layers. Used by one thread at
/// a time; independent instances may train concurrently.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

impl Network {
    /// Instantiate a spec with randomly initialized parameters.
    pub fn init(spec: &NetworkSpec, rng: &mut Rng) -> Result<Self> {
        let widths = spec.widths()?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut cur = spec.input_width;
        for (kind, &out) in spec.layers.iter().zip(&widths) {
            layers.push(match kind {
                LayerKind::Dense { width } => Layer::Dense(DenseLayer::init(cur, *width, rng)),
                LayerKind::Window(cfg) => Layer::Window(*cfg),
                LayerKind::Sigmoid => Layer::Sigmoid,
                LayerKind::LeakyRelu { slope } => Layer::LeakyRelu(*slope),
                LayerKind::LogSoftmax => Layer::LogSoftmax,
                LayerKind::Gated { width } => Layer::Gated(GatedBlock::init(cur, *width, rng)),
                LayerKind::Lstm { width } => Layer::Lstm(LstmCell::init(cur, *width, rng)),
            });
            cur = out;
        }
        Ok(Network {
            spec: spec.clone(),
            layers,
        })
    }

    /// Build directly from instantiated layers (used by the exact
    /// polynomial constructor). Validates the width algebra.
    pub fn from_layers(spec: NetworkSpec, layers: Vec<Layer>) -> Result<Self> {
        spec.validate()?;
        if spec.layers.len() != layers.len() {
            return Err(Error::Config(format!(
                "spec lists {} layers but {} were provided",
                spec.layers.len(),
                layers.len()
            )));
        }
        Ok(Network { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width
    }

    pub fn output_width(&self) -> usize {
        self.spec.output_width().expect("validated at construction")
    }

    pub fn is_recurrent(&self) -> bool {
        self.spec.is_recurrent()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// All trainable tensors in a fixed layer order.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(&d.weights);
                    out.push(&d.biases);
                }
                Layer::Gated(g) => {
                    out.push(&g.dense.weights);
                    out.push(&g.dense.biases);
                }
                Layer::Lstm(l) => {
                    for gate in [&l.input_gate, &l.forget_gate, &l.output_gate, &l.candidate] {
                        out.push(&gate.weights);
                        out.push(&gate.biases);
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Mutable view of the same tensors, same order as [`Network::params`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(&mut d.weights);
                    out.push(&mut d.biases);
                }
                Layer::Gated(g) => {
                    out.push(&mut g.dense.weights);
                    out.push(&mut g.dense.biases);
                }
                Layer::Lstm(l) => {
                    for gate in [
                        &mut l.input_gate,
                        &mut l.forget_gate,
                        &mut l.output_gate,
                        &mut l.candidate,
                    ] {
                        out.push(&mut gate.weights);
                        out.push(&mut gate.biases);
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Human-readable parameter names, same order as [`Network::params`].
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Dense(_) => {
                    out.push(format!("layer{i}.weights"));
                    out.push(format!("layer{i}.biases"));
                }
                Layer::Gated(_) => {
                    out.push(format!("layer{i}.gate.weights"));
                    out.push(format!("layer{i}.gate.biases"));
                }
                Layer::Lstm(_) => {
                    for gate in ["input", "forget", "output", "candidate"] {
                        out.push(format!("layer{i}.{gate}.weights"));
                        out.push(format!("layer{i}.{gate}.biases"));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Register every parameter as a tape leaf, same order as
    /// [`Network::params`].
    pub fn register_params(&self, tape: &mut Tape) -> Vec<NodeId> {
        self.params().into_iter().map(|t| tape.leaf(t)).collect()
    }

    /// Inference forward pass for feedforward networks; accepts a rank-1
    /// input or a rank-2 batch.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if self.is_recurrent() {
            return Err(Error::Contract(
                "forward() is for feedforward networks; recurrent networks use step()"
                    .to_string(),
            ));
        }
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = match layer {
                Layer::Dense(d) => d.forward(&cur)?,
                Layer::Window(cfg) => windowed_forward(&cur, cfg)?,
                Layer::Sigmoid => sigmoid_tensor(&cur),
                Layer::LeakyRelu(slope) => {
                    let slope = *slope;
                    cur.map(|v| if v > 0.0 { v } else { slope * v })
                }
                Layer::LogSoftmax => log_softmax_tensor(&cur),
                Layer::Gated(_) | Layer::Lstm(_) => unreachable!("checked above"),
            };
        }
        Ok(cur)
    }

    /// Zero every recurrent layer's stored state (sequence start).
    pub fn reset_states(&mut self) {
        for layer in &mut self.layers {
            match layer {
                Layer::Gated(g) => g.reset_state(),
                Layer::Lstm(l) => l.reset_state(),
                _ => {}
            }
        }
    }

    /// One inference time step through a recurrent network; recurrent
    /// layers read and update their stored states.
    pub fn step(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = match layer {
                Layer::Dense(d) => d.forward(&cur)?,
                Layer::Window(cfg) => windowed_forward(&cur, cfg)?,
                Layer::Sigmoid => sigmoid_tensor(&cur),
                Layer::LeakyRelu(slope) => {
                    let slope = *slope;
                    cur.map(|v| if v > 0.0 { v } else { slope * v })
                }
                Layer::LogSoftmax => log_softmax_tensor(&cur),
                Layer::Gated(g) => g.step(&cur)?,
                Layer::Lstm(l) => l.step(&cur)?,
            };
        }
        Ok(cur)
    }

    /// Fresh all-zeros recurrent state for tape-based unrolling.
    pub fn initial_state(&self) -> RecurrentState {
        let slots = self
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Gated(g) => StateSlot::Gated(Tensor::zeros(g.state().shape())),
                Layer::Lstm(l) => StateSlot::Lstm {
                    hidden: Tensor::zeros(l.hidden().shape()),
                    cell: Tensor::zeros(l.cell().shape()),
                },
                _ => StateSlot::None,
            })
            .collect();
        RecurrentState { slots }
    }

    /// Training forward pass for feedforward networks on a tape.
    /// `params` must come from [`Network::register_params`] on that tape.
    pub fn forward_tape(&self, tape: &mut Tape, params: &[NodeId], x: NodeId) -> Result<NodeId> {
        if self.is_recurrent() {
            return Err(Error::Contract(
                "forward_tape() is for feedforward networks; use step_tape()".to_string(),
            ));
        }
        let mut cursor = 0usize;
        let mut cur = x;
        for layer in &self.layers {
            cur = self.layer_tape(tape, params, &mut cursor, layer, cur, &mut None, 0)?;
        }
        Ok(cur)
    }

    /// One training time step on a tape; recurrent layers read their state
    /// node from `state` and replace it with the new one.
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        params: &[NodeId],
        x: NodeId,
        state: &mut TapeState,
    ) -> Result<NodeId> {
        if state.slots.len() != self.layers.len() {
            return Err(Error::Contract(
                "tape state does not match network layer count".to_string(),
            ));
        }
        let mut cursor = 0usize;
        let mut cur = x;
        let mut slots = std::mem::take(&mut state.slots);
        for (i, layer) in self.layers.iter().enumerate() {
            let mut slot = Some(slots[i]);
            cur = self.layer_tape(tape, params, &mut cursor, layer, cur, &mut slot, i)?;
            slots[i] = slot.expect("slot retained");
        }
        state.slots = slots;
        Ok(cur)
    }

    // One layer on the tape. `slot` carries the recurrent state node for
    // layer `index` when stepping; None-slot layers ignore it.
    fn layer_tape(
        &self,
        tape: &mut Tape,
        params: &[NodeId],
        cursor: &mut usize,
        layer: &Layer,
        x: NodeId,
        slot: &mut Option<TapeSlot>,
        index: usize,
    ) -> Result<NodeId> {
        let mut take = |n: usize| -> Result<Vec<NodeId>> {
            if *cursor + n > params.len() {
                return Err(Error::Contract(
                    "parameter node list is shorter than the network expects".to_string(),
                ));
            }
            let ids = params[*cursor..*cursor + n].to_vec();
            *cursor += n;
            Ok(ids)
        };
        Ok(match layer {
            Layer::Dense(_) => {
                let ids = take(2)?;
                tape.dense(ids[0], ids[1], x)?
            }
            Layer::Window(cfg) => match cfg.aggregator {
                Aggregator::Product => tape.window_product(x, *cfg)?,
                Aggregator::Max => tape.window_max(x, *cfg)?,
            },
            Layer::Sigmoid => tape.sigmoid(x),
            Layer::LeakyRelu(slope) => tape.leaky_relu(x, *slope),
            Layer::LogSoftmax => tape.log_softmax(x),
            Layer::Gated(_) => {
                let ids = take(2)?;
                let prev = match slot {
                    Some(TapeSlot::Gated(id)) => *id,
                    _ => {
                        return Err(Error::Contract(format!(
                            "layer {index}: gated block stepped without a state slot"
                        )))
                    }
                };
                let z = tape.concat(x, prev)?;
                let pre = tape.dense(ids[0], ids[1], z)?;
                let squashed = tape.sigmoid(pre);
                let y = tape.window_product(squashed, WindowConfig::product(2, 2))?;
                *slot = Some(TapeSlot::Gated(y));
                y
            }
            Layer::Lstm(_) => {
                let ids = take(8)?;
                let (h_prev, c_prev) = match slot {
                    Some(TapeSlot::Lstm { hidden, cell }) => (*hidden, *cell),
                    _ => {
                        return Err(Error::Contract(format!(
                            "layer {index}: lstm stepped without a state slot"
                        )))
                    }
                };
                let z = tape.concat(x, h_prev)?;
                let i_pre = tape.dense(ids[0], ids[1], z)?;
                let i_gate = tape.sigmoid(i_pre);
                let f_pre = tape.dense(ids[2], ids[3], z)?;
                let f_gate = tape.sigmoid(f_pre);
                let o_pre = tape.dense(ids[4], ids[5], z)?;
                let o_gate = tape.sigmoid(o_pre);
                let g_pre = tape.dense(ids[6], ids[7], z)?;
                let g = tape.tanh(g_pre);
                let keep = tape.mul(f_gate, c_prev)?;
                let write = tape.mul(i_gate, g)?;
                let c_new = tape.add(keep, write)?;
                let c_tanh = tape.tanh(c_new);
                let h_new = tape.mul(o_gate, c_tanh)?;
                *slot = Some(TapeSlot::Lstm {
                    hidden: h_new,
                    cell: c_new,
                });
                h_new
            }
        })
    }
}
