//! Training: Adam, loss functions, mini-batch training for feedforward
//! networks, truncated backpropagation through time for recurrent ones,
//! and closed-loop forecasting.
//!
//! Every run is single-threaded and fully determined by its seed: the
//! shuffle order for epoch e depends only on (seed, e), and parameter
//! initialization consumes a dedicated stream of the same seed.

use crate::autodiff::Tape;
use crate::data::{ClassificationDataset, RegressionDataset};
use crate::error::{Error, Result};
use crate::layers::{Network, NetworkSpec};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};

/// Adam optimizer state: first/second moment estimates per parameter
/// tensor, plus the step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl AdamState {
    /// Adam with the usual constants beta1 = 0.9, beta2 = 0.999,
    /// epsilon = 1e-8.
    pub fn new(alpha: f64) -> Self {
        AdamState {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. `params`, `grads` and `names` are
    /// parallel slices; moment buffers are sized on first use.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
        names: &[String],
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Dimension(format!(
                "adam: {} parameter tensors but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            self.second_moment = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        for (i, (param, grad)) in params.iter().zip(grads).enumerate() {
            if param.shape() != grad.shape() {
                return Err(Error::Dimension(format!(
                    "adam: gradient {} does not match parameter {} ({})",
                    grad.shape(),
                    param.shape(),
                    name_of(names, i)
                )));
            }
            if !grad.all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient for parameter {}",
                    name_of(names, i)
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let m_correction = 1.0 - self.beta1.powi(t);
        let v_correction = 1.0 - self.beta2.powi(t);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            let p = param.as_mut_slice();
            let m = m.as_mut_slice();
            let v = v.as_mut_slice();
            for (((pi, &gi), mi), vi) in p.iter_mut().zip(grad.iter()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / m_correction;
                let v_hat = *vi / v_correction;
                *pi -= self.alpha * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

fn name_of(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| format!("param{i}"))
}

/// Negative log-likelihood of one label under log-probabilities.
pub fn nll_loss(log_probs: &Tensor, label: usize) -> Result<f64> {
    if log_probs.rank() != 1 {
        return Err(Error::Dimension(format!(
            "nll expects a rank-1 log-probability vector, got {}",
            log_probs.shape()
        )));
    }
    if label >= log_probs.len() {
        return Err(Error::Argument(format!(
            "label {label} out of range for {} classes",
            log_probs.len()
        )));
    }
    Ok(-log_probs.as_slice()[label])
}

/// Mean of squared differences.
pub fn mse_loss(prediction: &Tensor, target: &Tensor) -> Result<f64> {
    if prediction.shape() != target.shape() {
        return Err(Error::Dimension(format!(
            "mse: prediction {} vs target {}",
            prediction.shape(),
            target.shape()
        )));
    }
    let n = prediction.len() as f64;
    Ok(prediction
        .iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Which loss a training run minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    NegativeLogLikelihood,
    MeanSquaredError,
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Truncation window for recurrent training; ignored by feedforward runs.
    pub bptt_length: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Argument("batch size must be >= 1".to_string()));
        }
        if self.epochs < 1 {
            return Err(Error::Argument("epoch count must be >= 1".to_string()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-epoch record produced by the training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    /// Misclassification percent (classification) or MSE (regression) on
    /// the evaluation set, when one was provided.
    pub test_metric: Option<f64>,
}

/// Training data for feedforward runs.
#[derive(Debug, Clone, Copy)]
pub enum TaskData<'a> {
    Classification(&'a ClassificationDataset),
    Regression(&'a RegressionDataset),
}

impl TaskData<'_> {
    fn len(&self) -> usize {
        match self {
            TaskData::Classification(d) => d.len(),
            TaskData::Regression(d) => d.len(),
        }
    }
}

/// Fraction of `eval` examples misclassified by the network, in percent.
pub fn misclassification_percent(net: &Network, eval: &ClassificationDataset) -> Result<f64> {
    let mut wrong = 0usize;
    let n = eval.len();
    let chunk = 512;
    let mut start = 0;
    while start < n {
        let indices: Vec<usize> = (start..(start + chunk).min(n)).collect();
        let (x, labels) = eval.gather(&indices);
        let out = net.forward(&x)?;
        for (r, &label) in labels.iter().enumerate() {
            let row = out.row(r);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            if best != label {
                wrong += 1;
            }
        }
        start += chunk;
    }
    Ok(100.0 * wrong as f64 / n as f64)
}

/// Mean squared error of the network over `eval`.
pub fn regression_mse(net: &Network, eval: &RegressionDataset) -> Result<f64> {
    let mut total = 0.0;
    let n = eval.len();
    let chunk = 512;
    let mut start = 0;
    while start < n {
        let indices: Vec<usize> = (start..(start + chunk).min(n)).collect();
        let (x, targets) = eval.gather(&indices);
        let out = net.forward(&x)?;
        for (p, t) in out.iter().zip(targets.iter()) {
            total += (p - t) * (p - t);
        }
        start += chunk;
    }
    Ok(total / n as f64)
}

fn eval_metric(net: &Network, eval: Option<&TaskData>) -> Result<Option<f64>> {
    match eval {
        None => Ok(None),
        Some(TaskData::Classification(d)) => Ok(Some(misclassification_percent(net, d)?)),
        Some(TaskData::Regression(d)) => Ok(Some(regression_mse(net, d)?)),
    }
}

/// Train a feedforward network with shuffled mini-batches.
///
/// Returns the trained network and one [`EpochMetrics`] per epoch.
/// Deterministic given the seed.
pub fn train_feedforward(
    spec: &NetworkSpec,
    train: TaskData,
    eval: Option<TaskData>,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<EpochMetrics>)> {
    cfg.validate()?;
    spec.validate()?;
    if train.len() == 0 {
        return Err(Error::Argument("training set is empty".to_string()));
    }
    match (&train, cfg.loss) {
        (TaskData::Classification(_), LossKind::NegativeLogLikelihood)
        | (TaskData::Regression(_), LossKind::MeanSquaredError) => {}
        _ => {
            return Err(Error::Argument(
                "loss kind does not match the dataset kind".to_string(),
            ))
        }
    }
    if spec.is_recurrent() {
        return Err(Error::Config(
            "train_feedforward cannot train recurrent networks".to_string(),
        ));
    }

    let mut net = Network::init(spec, &mut Rng::derive(cfg.seed, 0))?;
    let names = net.param_names();
    let mut adam = AdamState::new(cfg.learning_rate);
    let n = train.len();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::derive(cfg.seed, epoch as u64 + 1).shuffle(&mut order);

        let mut loss_sum = 0.0;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut tape = Tape::new();
            let params = net.register_params(&mut tape);
            let loss_id = match &train {
                TaskData::Classification(d) => {
                    let (x, labels) = d.gather(batch);
                    let x_id = tape.leaf(&x);
                    let out = net.forward_tape(&mut tape, &params, x_id)?;
                    tape.nll_loss(out, &labels)?
                }
                TaskData::Regression(d) => {
                    let (x, targets) = d.gather(batch);
                    let x_id = tape.leaf(&x);
                    let out = net.forward_tape(&mut tape, &params, x_id)?;
                    tape.mse_loss(out, &targets)?
                }
            };
            let loss = tape.value(loss_id).item()?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "epoch {epoch} batch {batch_index}: loss is not finite ({loss})"
                )));
            }
            tape.backward(loss_id)?;
            let grads: Vec<Tensor> = params.iter().map(|&id| tape.adjoint(id).clone()).collect();
            drop(tape);
            let mut param_refs = net.params_mut();
            adam
                .step(&mut param_refs, &grads, &names)
                .map_err(|e| Error::Numeric(format!("epoch {epoch} batch {batch_index}: {e}")))?;
            loss_sum += loss * batch.len() as f64;
        }

        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / n as f64,
            test_metric: eval_metric(&net, eval.as_ref())?,
        });
    }
    Ok((net, metrics))
}

/// Train a recurrent network one-step-ahead on a series (input: value at t,
/// target: value at t + 1) with truncated backpropagation through time.
///
/// `series` is the (already normalized) training series. When `eval_series`
/// is given it must extend `series`; the per-epoch test metric is the
/// one-step-ahead MSE over the extension, with true values fed back.
pub fn train_recurrent(
    spec: &NetworkSpec,
    series: &[f64],
    eval_series: Option<&[f64]>,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<EpochMetrics>)> {
    cfg.validate()?;
    spec.validate()?;
    if cfg.loss != LossKind::MeanSquaredError {
        return Err(Error::Argument(
            "recurrent training minimizes mean squared error".to_string(),
        ));
    }
    if spec.input_width != 1 || spec.output_width()? != 1 {
        return Err(Error::Config(
            "recurrent forecasting expects a width-1 input and output".to_string(),
        ));
    }
    if cfg.bptt_length < 1 {
        return Err(Error::Argument("BPTT length must be >= 1".to_string()));
    }
    if series.len() < cfg.bptt_length + 1 {
        return Err(Error::Argument(format!(
            "series of length {} is shorter than BPTT length {} + 1",
            series.len(),
            cfg.bptt_length
        )));
    }
    if let Some(full) = eval_series {
        if full.len() <= series.len() || full[..series.len()] != *series {
            return Err(Error::Argument(
                "eval series must strictly extend the training series".to_string(),
            ));
        }
    }

    let mut net = Network::init(spec, &mut Rng::derive(cfg.seed, 0))?;
    let names = net.param_names();
    let mut adam = AdamState::new(cfg.learning_rate);
    let steps_per_epoch = series.len() - 1;
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        // States reset at every epoch, carried across windows within it.
        let mut state_values = net.initial_state();
        let mut loss_sum = 0.0;
        let mut start = 0usize;
        let mut window_index = 0usize;
        while start < steps_per_epoch {
            let end = (start + cfg.bptt_length).min(steps_per_epoch);
            let mut tape = Tape::new();
            let params = net.register_params(&mut tape);
            let mut state = state_values.register(&mut tape);

            let mut window_loss: Option<crate::autodiff::NodeId> = None;
            for t in start..end {
                let x_id = tape.leaf(&Tensor::vector(vec![series[t]]));
                let out = net.step_tape(&mut tape, &params, x_id, &mut state)?;
                let target = Tensor::vector(vec![series[t + 1]]);
                let step_loss = tape.mse_loss(out, &target)?;
                window_loss = Some(match window_loss {
                    None => step_loss,
                    Some(acc) => tape.add(acc, step_loss)?,
                });
            }
            let total = window_loss.expect("window is nonempty");
            let mean_loss = tape.scale(total, 1.0 / (end - start) as f64);

            let loss = tape.value(mean_loss).item()?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "epoch {epoch} window {window_index}: loss is not finite ({loss})"
                )));
            }
            tape.backward(mean_loss)?;
            let grads: Vec<Tensor> = params.iter().map(|&id| tape.adjoint(id).clone()).collect();
            state_values = state.detach(&tape);
            drop(tape);
            let mut param_refs = net.params_mut();
            adam
                .step(&mut param_refs, &grads, &names)
                .map_err(|e| Error::Numeric(format!("epoch {epoch} window {window_index}: {e}")))?;

            loss_sum += loss * (end - start) as f64;
            start = end;
            window_index += 1;
        }

        let test_metric = match eval_series {
            None => None,
            Some(full) => Some(one_step_ahead_mse(&mut net, full, series.len())?),
        };
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / steps_per_epoch as f64,
            test_metric,
        });
    }
    Ok((net, metrics))
}

// One-step-ahead MSE over full[from..], feeding true values. Uses the
// value path; the network's transient states are reset afterwards.
fn one_step_ahead_mse(net: &mut Network, full: &[f64], from: usize) -> Result<f64> {
    net.reset_states();
    let mut total = 0.0;
    let mut count = 0usize;
    for t in 0..full.len() - 1 {
        let pred = net.step(&Tensor::vector(vec![full[t]]))?.item()?;
        if t + 1 >= from {
            let diff = pred - full[t + 1];
            total += diff * diff;
            count += 1;
        }
    }
    net.reset_states();
    Ok(total / count as f64)
}

/// Closed-loop forecast: feed `warmup` through the network to set its
/// states, then feed each prediction back as the next input for `horizon`
/// steps. The first forecast value is the one-step prediction at the
/// warmup boundary.
pub fn forecast(net: &mut Network, warmup: &[f64], horizon: usize) -> Result<Tensor> {
    if warmup.is_empty() {
        return Err(Error::Argument("forecast warmup is empty".to_string()));
    }
    if horizon < 1 {
        return Err(Error::Argument("forecast horizon must be >= 1".to_string()));
    }
    if net.input_width() != 1 || net.output_width() != 1 {
        return Err(Error::Config(
            "forecasting expects a width-1 input and output".to_string(),
        ));
    }
    net.reset_states();
    let mut last = 0.0;
    for &v in warmup {
        last = net.step(&Tensor::vector(vec![v]))?.item()?;
    }
    let mut out = Vec::with_capacity(horizon);
    out.push(last);
    for _ in 1..horizon {
        last = net.step(&Tensor::vector(vec![last]))?.item()?;
        out.push(last);
    }
    Ok(Tensor::vector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::LayerKind;

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut p = Tensor::vector(vec![1.0, -2.0]);
        let before = p.clone();
        let mut adam = AdamState::new(0.1);
        let grads = vec![Tensor::zeros(Shape::Vector(2))];
        adam.step(&mut [&mut p], &grads, &["p".to_string()]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_first_step_magnitude_is_alpha() {
        // Bias correction makes the first update alpha * sign(g).
        let mut p = Tensor::vector(vec![0.0, 0.0]);
        let mut adam = AdamState::new(0.01);
        let grads = vec![Tensor::vector(vec![3.0, -0.4])];
        adam.step(&mut [&mut p], &grads, &["p".to_string()]).unwrap();
        assert!((p.as_slice()[0] + 0.01).abs() < 1e-9, "{:?}", p);
        assert!((p.as_slice()[1] - 0.01).abs() < 1e-9, "{:?}", p);
    }

    #[test]
    fn adam_optimizes_scalar_quadratic() {
        // f(p) = (p - 3)^2, gradient 2 (p - 3).
        let mut p = Tensor::vector(vec![0.0]);
        let mut adam = AdamState::new(0.1);
        let names = vec!["p".to_string()];
        for _ in 0..200 {
            let g = Tensor::vector(vec![2.0 * (p.as_slice()[0] - 3.0)]);
            adam.step(&mut [&mut p], &[g], &names).unwrap();
        }
        assert!((p.as_slice()[0] - 3.0).abs() < 0.05, "{:?}", p);
    }

    #[test]
    fn adam_zero_alpha_freezes_params() {
        let mut p = Tensor::vector(vec![5.0]);
        let mut adam = AdamState::new(0.0);
        let names = vec!["p".to_string()];
        for g in [1.0, -3.0, 100.0] {
            adam.step(&mut [&mut p], &[Tensor::vector(vec![g])], &names)
                .unwrap();
        }
        assert_eq!(p.as_slice(), &[5.0]);
    }

    #[test]
    fn adam_rejects_non_finite_gradient_naming_param() {
        let mut p = Tensor::vector(vec![0.0]);
        let mut adam = AdamState::new(0.1);
        let err = adam
            .step(
                &mut [&mut p],
                &[Tensor::vector(vec![f64::NAN])],
                &["layer3.weights".to_string()],
            )
            .unwrap_err();
        match err {
            Error::Numeric(msg) => assert!(msg.contains("layer3.weights"), "{msg}"),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn nll_loss_cases() {
        let uniform = Tensor::vector(vec![(0.1f64).ln(); 10]);
        assert!((nll_loss(&uniform, 4).unwrap() - 10.0f64.ln()).abs() < 1e-12);

        let certain = Tensor::vector(vec![0.0, -50.0]);
        assert_eq!(nll_loss(&certain, 0).unwrap(), 0.0);

        assert!(matches!(nll_loss(&certain, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn mse_loss_cases() {
        let a = Tensor::vector(vec![1.0, 3.0]);
        let b = Tensor::vector(vec![1.0, 1.0]);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(mse_loss(&a, &b).unwrap(), 2.0);
        assert!(mse_loss(&a, &Tensor::vector(vec![1.0])).is_err());
    }

    fn toy_classifier_spec() -> NetworkSpec {
        NetworkSpec::new(
            2,
            vec![LayerKind::Dense { width: 2 }, LayerKind::LogSoftmax],
        )
    }

    fn toy_classification_data() -> ClassificationDataset {
        // Linearly separable with margin: class = x0 > x1, |x0 - x1| >= 0.2.
        let mut rng = Rng::new(100);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        while labels.len() < 20 {
            let a = rng.range(-1.0, 1.0);
            let b = rng.range(-1.0, 1.0);
            if (a - b).abs() < 0.2 {
                continue;
            }
            features.push(a);
            features.push(b);
            labels.push(usize::from(a > b));
        }
        ClassificationDataset::new(Tensor::matrix(20, 2, features).unwrap(), labels, 2).unwrap()
    }

    #[test]
    fn feedforward_reaches_perfect_train_accuracy_on_toy_set() {
        let data = toy_classification_data();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 50,
            bptt_length: 0,
            seed: 7,
            loss: LossKind::NegativeLogLikelihood,
        };
        let (net, metrics) = train_feedforward(
            &toy_classifier_spec(),
            TaskData::Classification(&data),
            None,
            &cfg,
        )
        .unwrap();
        assert_eq!(metrics.len(), 50);
        let err = misclassification_percent(&net, &data).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn feedforward_rejects_zero_epochs() {
        let data = toy_classification_data();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 0,
            bptt_length: 0,
            seed: 7,
            loss: LossKind::NegativeLogLikelihood,
        };
        assert!(matches!(
            train_feedforward(
                &toy_classifier_spec(),
                TaskData::Classification(&data),
                None,
                &cfg
            ),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn feedforward_same_seed_bitwise_identical() {
        let data = toy_classification_data();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 4,
            epochs: 5,
            bptt_length: 0,
            seed: 11,
            loss: LossKind::NegativeLogLikelihood,
        };
        let run = || {
            train_feedforward(
                &toy_classifier_spec(),
                TaskData::Classification(&data),
                None,
                &cfg,
            )
            .unwrap()
        };
        let (net1, m1) = run();
        let (net2, m2) = run();
        assert_eq!(m1, m2);
        for (a, b) in net1.params().iter().zip(net2.params().iter()) {
            assert_eq!(a, b, "parameters differ between identical runs");
        }
    }

    #[test]
    fn inference_is_pure() {
        let data = toy_classification_data();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 4,
            epochs: 2,
            bptt_length: 0,
            seed: 3,
            loss: LossKind::NegativeLogLikelihood,
        };
        let (net, _) = train_feedforward(
            &toy_classifier_spec(),
            TaskData::Classification(&data),
            None,
            &cfg,
        )
        .unwrap();
        let x = Tensor::vector(vec![0.2, -0.4]);
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    fn gated_forecaster_spec() -> NetworkSpec {
        NetworkSpec::new(
            1,
            vec![LayerKind::Gated { width: 8 }, LayerKind::Dense { width: 1 }],
        )
    }

    #[test]
    fn recurrent_converges_on_constant_series() {
        let series = vec![0.5; 40];
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 100,
            bptt_length: 8,
            seed: 5,
            loss: LossKind::MeanSquaredError,
        };
        let (_, metrics) = train_recurrent(&gated_forecaster_spec(), &series, None, &cfg).unwrap();
        let final_loss = metrics.last().unwrap().train_loss;
        assert!(final_loss < 1e-4, "final loss {final_loss}");
    }

    #[test]
    fn recurrent_learns_sine_wave() {
        // Period-12 seasonal signal; one-step test MSE well under its variance.
        let n = 120;
        let series: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())
            .collect();
        let train = &series[..90];
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 300,
            bptt_length: 36,
            seed: 2,
            loss: LossKind::MeanSquaredError,
        };
        let (_, metrics) =
            train_recurrent(&gated_forecaster_spec(), train, Some(&series), &cfg).unwrap();
        let test = metrics.last().unwrap().test_metric.unwrap();
        assert!(test < 0.05, "one-step test MSE {test}");
    }

    #[test]
    fn recurrent_same_seed_identical_forecasts() {
        let series: Vec<f64> = (0..60).map(|t| (t as f64 / 6.0).sin()).collect();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 20,
            bptt_length: 12,
            seed: 9,
            loss: LossKind::MeanSquaredError,
        };
        let run = || {
            let (mut net, _) =
                train_recurrent(&gated_forecaster_spec(), &series, None, &cfg).unwrap();
            forecast(&mut net, &series, 10).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn recurrent_rejects_short_series() {
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 1,
            bptt_length: 36,
            seed: 1,
            loss: LossKind::MeanSquaredError,
        };
        let series = vec![0.0; 10];
        assert!(matches!(
            train_recurrent(&gated_forecaster_spec(), &series, None, &cfg),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn forecast_contracts() {
        let mut net = Network::init(&gated_forecaster_spec(), &mut Rng::new(4)).unwrap();
        assert!(matches!(forecast(&mut net, &[], 5), Err(Error::Argument(_))));
        assert!(matches!(
            forecast(&mut net, &[1.0], 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn forecast_horizon_one_equals_one_step_prediction() {
        let series: Vec<f64> = (0..30).map(|t| (t as f64 / 5.0).cos()).collect();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 10,
            bptt_length: 10,
            seed: 6,
            loss: LossKind::MeanSquaredError,
        };
        let (mut net, _) = train_recurrent(&gated_forecaster_spec(), &series, None, &cfg).unwrap();

        let f = forecast(&mut net, &series, 1).unwrap();

        net.reset_states();
        let mut pred = 0.0;
        for &v in &series {
            pred = net.step(&Tensor::vector(vec![v])).unwrap().item().unwrap();
        }
        assert_eq!(f.as_slice(), &[pred]);
    }

    #[test]
    fn constant_trained_network_gives_constant_forecast() {
        let series = vec![0.5; 40];
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 1,
            epochs: 150,
            bptt_length: 8,
            seed: 5,
            loss: LossKind::MeanSquaredError,
        };
        let (mut net, _) = train_recurrent(&gated_forecaster_spec(), &series, None, &cfg).unwrap();
        let f = forecast(&mut net, &series, 8).unwrap();
        for &v in f.iter() {
            assert!((v - 0.5).abs() < 0.05, "forecast value {v}");
        }
    }
}
