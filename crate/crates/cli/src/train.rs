//! Mini-batch training and evaluation loop shared by every experiment.

use std::collections::BTreeMap;
use std::time::Instant;

use cvnn_core::checkpoint::Checkpoint;
use cvnn_core::graph::{gnn_forward, PhaseGraph};
use cvnn_core::layers::{nll_loss, Mode};
use cvnn_core::optim::{OptimConfig, OptimState};
use cvnn_core::params::Bound;
use cvnn_core::{ComplexTensor, ParamSet, Rng, Tape, Var};

use crate::model::ConvNet;
use crate::CliError;

/// Stacked `(N, 1, H, W)` inputs with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: ComplexTensor,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: ComplexTensor, labels: Vec<usize>) -> Result<Self, CliError> {
        if inputs.rank() != 4 || inputs.shape()[0] != labels.len() {
            return Err(CliError::Data(format!(
                "inputs {:?} do not match {} labels",
                inputs.shape(),
                labels.len()
            )));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(H, W)` of one example.
    pub fn example_shape(&self) -> (usize, usize) {
        (self.inputs.shape()[2], self.inputs.shape()[3])
    }

    pub fn gather(&self, idx: &[usize]) -> ComplexTensor {
        let s = self.inputs.shape();
        let per = s[1] * s[2] * s[3];
        let mut re = Vec::with_capacity(idx.len() * per);
        let mut im = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            re.extend_from_slice(&self.inputs.re()[i * per..(i + 1) * per]);
            im.extend_from_slice(&self.inputs.im()[i * per..(i + 1) * per]);
        }
        ComplexTensor::from_planes(&[idx.len(), s[1], s[2], s[3]], re, im).expect("gathered shape is consistent")
    }
}

/// A model bundled with its train and test data.
pub trait Task {
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    fn set_mode(&mut self, mode: Mode);
    fn labels(&self, train: bool) -> &[usize];
    /// Records `(B, K)` log-probabilities for the examples `idx`.
    fn log_probs(&mut self, tape: &mut Tape, bound: &Bound, train: bool, idx: &[usize]) -> Result<Var, CliError>;
    /// Non-parameter state to store alongside the weights.
    fn buffers(&self) -> Vec<(String, ComplexTensor)> {
        Vec::new()
    }
}

pub struct ConvTask {
    pub net: ConvNet,
    pub train: Dataset,
    pub test: Dataset,
}

impl Task for ConvTask {
    fn params(&self) -> &ParamSet {
        &self.net.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.net.params
    }

    fn set_mode(&mut self, mode: Mode) {
        self.net.set_mode(mode);
    }

    fn labels(&self, train: bool) -> &[usize] {
        if train {
            &self.train.labels
        } else {
            &self.test.labels
        }
    }

    fn log_probs(&mut self, tape: &mut Tape, bound: &Bound, train: bool, idx: &[usize]) -> Result<Var, CliError> {
        let data = if train { &self.train } else { &self.test };
        let x = tape.constant(data.gather(idx));
        self.net.forward(tape, bound, x)
    }

    fn buffers(&self) -> Vec<(String, ComplexTensor)> {
        self.net.buffer_records()
    }
}

pub struct GnnTask {
    pub params: ParamSet,
    pub layers: usize,
    pub train: Vec<PhaseGraph>,
    pub test: Vec<PhaseGraph>,
    train_labels: Vec<usize>,
    test_labels: Vec<usize>,
}

impl GnnTask {
    pub fn new(params: ParamSet, layers: usize, train: Vec<PhaseGraph>, test: Vec<PhaseGraph>) -> Self {
        let train_labels = train.iter().map(|g| g.label).collect();
        let test_labels = test.iter().map(|g| g.label).collect();
        Self {
            params,
            layers,
            train,
            test,
            train_labels,
            test_labels,
        }
    }
}

impl Task for GnnTask {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn set_mode(&mut self, _: Mode) {}

    fn labels(&self, train: bool) -> &[usize] {
        if train {
            &self.train_labels
        } else {
            &self.test_labels
        }
    }

    fn log_probs(&mut self, tape: &mut Tape, bound: &Bound, train: bool, idx: &[usize]) -> Result<Var, CliError> {
        let pool = if train { &self.train } else { &self.test };
        let graphs: Vec<&PhaseGraph> = idx.iter().map(|&i| &pool[i]).collect();
        let logits = gnn_forward(tape, &graphs, bound, self.layers)?;
        Ok(cvnn_core::layers::log_softmax(tape, logits)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub epoch_seconds: f64,
}

/// Result of training one model.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    /// Descriptive fields (architecture, activation, setting, ...).
    pub meta: BTreeMap<String, String>,
    pub param_count: usize,
    pub epochs: Vec<EpochMetrics>,
    /// Weights, batch-norm buffers and optimizer state.
    pub checkpoint: Checkpoint,
}

impl RunReport {
    pub fn last(&self) -> &EpochMetrics {
        self.epochs.last().expect("a run has at least one epoch")
    }
}

#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub optim: OptimConfig,
}

fn argmax_hits(logp: &ComplexTensor, labels: &[usize]) -> usize {
    let k = logp.shape()[1];
    logp.re()
        .chunks(k)
        .zip(labels)
        .filter(|(row, &l)| {
            let best = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
            best.0 == l
        })
        .count()
}

/// Summed loss and hit count over one pass of `order` in batches.
fn evaluate<T: Task>(task: &mut T, batch: usize) -> Result<(f64, f64), CliError> {
    task.set_mode(Mode::Eval);
    let n = task.labels(false).len();
    let (mut loss, mut hits) = (0.0, 0);
    let order: Vec<usize> = (0..n).collect();
    for idx in order.chunks(batch) {
        let labels: Vec<usize> = idx.iter().map(|&i| task.labels(false)[i]).collect();
        let mut tape = Tape::new();
        let bound = task.params().bind(&mut tape);
        let logp = task.log_probs(&mut tape, &bound, false, idx)?;
        hits += argmax_hits(tape.value(logp)?, &labels);
        let l = nll_loss(&mut tape, logp, &labels)?;
        loss += tape.value(l)?.re()[0] * idx.len() as f64;
    }
    Ok((loss / n as f64, hits as f64 / n as f64))
}

/// Trains `task` for `setup.epochs` epochs, shuffling with `rng`, and
/// evaluates on the test split after each epoch.
///
/// A non-finite loss or gradient aborts with [`CliError::Numerical`]; `context`
/// is included in that message.
pub fn fit<T: Task>(
    name: &str,
    context: &str,
    task: &mut T,
    setup: &TrainSetup,
    rng: &mut Rng,
) -> Result<(Vec<EpochMetrics>, OptimState), CliError> {
    let n = task.labels(true).len();
    if n == 0 || task.labels(false).is_empty() {
        return Err(CliError::Data(format!("{name}: empty train or test split")));
    }
    let mut opt = OptimState::new(setup.optim)?;
    let mut rows = Vec::with_capacity(setup.epochs);
    for epoch in 1..=setup.epochs {
        let start = Instant::now();
        task.set_mode(Mode::Train);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let (mut loss_sum, mut hits) = (0.0, 0);
        for (step, idx) in order.chunks(setup.batch_size).enumerate() {
            let labels: Vec<usize> = idx.iter().map(|&i| task.labels(true)[i]).collect();
            let mut tape = Tape::new();
            let bound = task.params().bind(&mut tape);
            let logp = task.log_probs(&mut tape, &bound, true, idx)?;
            hits += argmax_hits(tape.value(logp)?, &labels);
            let loss = nll_loss(&mut tape, logp, &labels)?;
            let l = tape.value(loss)?.re()[0];
            let mut grads = bound.grads(tape.backward(loss)?);
            let gnorm = grads.global_norm();
            if !l.is_finite() || !gnorm.is_finite() {
                return Err(CliError::Numerical(format!(
                    "{name}: loss {l}, gradient norm {gnorm} at epoch {epoch}, step {step} ({context})"
                )));
            }
            loss_sum += l * idx.len() as f64;
            opt.step(task.params_mut(), &mut grads)?;
        }
        let (test_loss, test_acc) = evaluate(task, setup.eval_batch_size)?;
        rows.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / n as f64,
            train_acc: hits as f64 / n as f64,
            test_loss,
            test_acc,
            epoch_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((rows, opt))
}

/// Runs [`fit`] and packages the outcome with a checkpoint.
pub fn train_run<T: Task>(
    name: &str,
    meta: BTreeMap<String, String>,
    task: &mut T,
    setup: &TrainSetup,
    rng: &mut Rng,
) -> Result<RunReport, CliError> {
    let context = meta.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    let context = format!("{context} lr={} clip_norm={:?}", setup.optim.lr, setup.optim.clip_norm);
    let (epochs, opt) = fit(name, &context, task, setup, rng)?;
    let mut checkpoint = Checkpoint::from_params(task.params());
    checkpoint.extend(task.buffers())?;
    checkpoint.extend(opt.to_records("optim."))?;
    Ok(RunReport {
        name: name.to_string(),
        meta,
        param_count: task.params().count(),
        epochs,
        checkpoint,
    })
}
