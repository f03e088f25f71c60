//! Network assembly for the experiments.

use std::str::FromStr;

use cvnn_core::activations::{record_crelu, Activation};
use cvnn_core::autodiff::Var;
use cvnn_core::graph::{gnn_init, GnnShape};
use cvnn_core::init::{fans, InitScheme};
use cvnn_core::layers::{
    abs_logsoftmax_head, complex_batchnorm, conv2d, linear, log_softmax, maxpool_mag, maxpool_real, real_batchnorm,
    BatchNormConfig, BatchNormState, Mode, PoolSpec,
};
use cvnn_core::params::Bound;
use cvnn_core::{ComplexTensor, ParamSet, Rng, Tape};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    ImageCvcnn,
    ImageRealcnn,
    AudioCvcnn,
    AudioRealcnn,
    Gnn,
}

impl Arch {
    pub fn name(&self) -> &'static str {
        match self {
            Arch::ImageCvcnn => "image_cvcnn",
            Arch::ImageRealcnn => "image_realcnn",
            Arch::AudioCvcnn => "audio_cvcnn",
            Arch::AudioRealcnn => "audio_realcnn",
            Arch::Gnn => "gnn",
        }
    }

    fn is_complex(&self) -> bool {
        matches!(self, Arch::ImageCvcnn | Arch::AudioCvcnn)
    }
}

impl FromStr for Arch {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "image_cvcnn" => Arch::ImageCvcnn,
            "image_realcnn" => Arch::ImageRealcnn,
            "audio_cvcnn" => Arch::AudioCvcnn,
            "audio_realcnn" => Arch::AudioRealcnn,
            "gnn" => Arch::Gnn,
            other => return Err(CliError::Config(format!("unknown architecture `{other}`"))),
        })
    }
}

/// Everything needed to instantiate one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// `(H, W)` of the single-channel input; for graphs `W` is the series length.
    pub input: (usize, usize),
    pub classes: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub dense: usize,
    pub kernel: usize,
    pub activation: Activation,
    pub init: InitScheme,
    pub bn: BatchNormConfig,
    pub gnn_hidden: usize,
    pub gnn_layers: usize,
}

impl ModelSpec {
    pub fn from_config(
        cfg: &ExperimentConfig,
        input: (usize, usize),
        classes: usize,
        activation: Activation,
    ) -> Result<Self, CliError> {
        Ok(Self {
            input,
            classes,
            conv1: cfg.model.conv1,
            conv2: cfg.model.conv2,
            dense: cfg.model.dense,
            kernel: cfg.model.kernel,
            activation,
            init: cfg.init_scheme()?,
            bn: cfg.bn_config()?,
            gnn_hidden: cfg.graph.hidden,
            gnn_layers: cfg.graph.layers,
        })
    }
}

pub enum Model {
    Conv(ConvNet),
    Gnn { params: ParamSet, shape: GnnShape },
}

impl Model {
    pub fn params(&self) -> &ParamSet {
        match self {
            Model::Conv(n) => &n.params,
            Model::Gnn { params, .. } => params,
        }
    }
}

pub fn build_model(arch: Arch, spec: &ModelSpec, rng: &mut Rng) -> Result<Model, CliError> {
    if spec.classes < 2 {
        return Err(CliError::Config(format!("need at least 2 classes, got {}", spec.classes)));
    }
    match arch {
        Arch::Gnn => {
            let shape = GnnShape {
                input: spec.input.1,
                hidden: spec.gnn_hidden,
                layers: spec.gnn_layers,
                classes: spec.classes,
            };
            Ok(Model::Gnn {
                params: gnn_init(shape, rng)?,
                shape,
            })
        }
        _ => Ok(Model::Conv(ConvNet::new(arch, spec, rng)?)),
    }
}

/// Two conv blocks (conv → act → BN → 2×2 pool), a hidden dense layer and a
/// `K`-way head. The complex net ends in `|·|` + log-softmax; the real net
/// uses ReLU, real batch norm and a plain log-softmax.
pub struct ConvNet {
    pub params: ParamSet,
    pub bn: [BatchNormState; 2],
    complex: bool,
    activation: Activation,
    flat: usize,
}

fn shrink(size: usize, kernel: usize) -> Option<usize> {
    let conv = size.checked_sub(kernel)? + 1;
    (conv >= 2).then_some(conv / 2)
}

impl ConvNet {
    fn new(arch: Arch, spec: &ModelSpec, rng: &mut Rng) -> Result<Self, CliError> {
        let complex = arch.is_complex();
        let k = spec.kernel;
        let (h, w) = spec.input;
        let too_small = || CliError::Config(format!("input {h}×{w} is too small for two {k}×{k} conv + pool blocks"));
        let h2 = shrink(shrink(h, k).ok_or_else(too_small)?, k).ok_or_else(too_small)?;
        let w2 = shrink(shrink(w, k).ok_or_else(too_small)?, k).ok_or_else(too_small)?;
        let flat = spec.conv2 * h2 * w2;

        let mut params = ParamSet::new();
        let mut weight = |name: &str, shape: &[usize], params: &mut ParamSet| -> Result<(), CliError> {
            let (fan_in, fan_out) = fans(shape);
            let t = if complex {
                spec.init.sample(fan_in, fan_out, shape, rng)?
            } else {
                let mut t = ComplexTensor::zeros(shape)?;
                rng.fill_normal(t.re_mut(), (2.0 / fan_in as f64).sqrt());
                t
            };
            params.insert(name, t)?;
            Ok(())
        };
        weight("conv1.weight", &[spec.conv1, 1, k, k], &mut params)?;
        params.insert("conv1.bias", ComplexTensor::zeros(&[spec.conv1])?)?;
        weight("conv2.weight", &[spec.conv2, spec.conv1, k, k], &mut params)?;
        params.insert("conv2.bias", ComplexTensor::zeros(&[spec.conv2])?)?;
        weight("fc1.weight", &[spec.dense, flat], &mut params)?;
        params.insert("fc1.bias", ComplexTensor::zeros(&[spec.dense])?)?;
        weight("fc2.weight", &[spec.classes, spec.dense], &mut params)?;
        params.insert("fc2.bias", ComplexTensor::zeros(&[spec.classes])?)?;

        let bn = [BatchNormState::new(spec.conv1, spec.bn)?, BatchNormState::new(spec.conv2, spec.bn)?];
        for (i, state) in bn.iter().enumerate() {
            let prefix = format!("bn{}", i + 1);
            if complex {
                state.init_params(&prefix, &mut params)?;
            } else {
                let c = state.channels();
                params.insert(format!("{prefix}.gamma"), ComplexTensor::from_planes(&[c], vec![1.0; c], vec![0.0; c])?)?;
                params.insert(format!("{prefix}.beta"), ComplexTensor::zeros(&[c])?)?;
            }
        }
        if complex && spec.activation.has_bias() {
            for (i, width) in [spec.conv1, spec.conv2, spec.dense].into_iter().enumerate() {
                params.insert(format!("act{}.b", i + 1), ComplexTensor::zeros(&[width])?)?;
            }
        }
        Ok(Self {
            params,
            bn,
            complex,
            activation: spec.activation,
            flat,
        })
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.bn.iter_mut().for_each(|s| s.mode = mode);
    }

    fn act(&self, tape: &mut Tape, bound: &Bound, x: Var, slot: usize) -> Result<Var, CliError> {
        if !self.complex {
            return Ok(record_crelu(tape, x)?);
        }
        let bias = if self.activation.has_bias() {
            Some(bound.var(&format!("act{slot}.b"))?)
        } else {
            None
        };
        Ok(self.activation.apply(tape, x, bias)?)
    }

    fn block(&mut self, tape: &mut Tape, bound: &Bound, x: Var, i: usize) -> Result<Var, CliError> {
        let n = i + 1;
        let c = conv2d(
            tape,
            x,
            bound.var(&format!("conv{n}.weight"))?,
            bound.var(&format!("conv{n}.bias"))?,
            (1, 1),
            (0, 0),
        )?;
        let a = self.act(tape, bound, c, n)?;
        let state = &mut self.bn[i];
        if self.complex {
            let y = complex_batchnorm(
                tape,
                a,
                bound.var(&format!("bn{n}.gamma_diag"))?,
                bound.var(&format!("bn{n}.gamma_off"))?,
                bound.var(&format!("bn{n}.beta"))?,
                state,
            )?;
            Ok(maxpool_mag(tape, y, PoolSpec::square(2))?)
        } else {
            let y = real_batchnorm(
                tape,
                a,
                bound.var(&format!("bn{n}.gamma"))?,
                bound.var(&format!("bn{n}.beta"))?,
                state,
            )?;
            Ok(maxpool_real(tape, y, PoolSpec::square(2))?)
        }
    }

    /// Records the forward pass for `x` of shape `(B, 1, H, W)` and returns
    /// `(B, K)` log-probabilities.
    pub fn forward(&mut self, tape: &mut Tape, bound: &Bound, x: Var) -> Result<Var, CliError> {
        let batch = tape.value(x)?.shape()[0];
        let h = self.block(tape, bound, x, 0)?;
        let h = self.block(tape, bound, h, 1)?;
        let h = tape.reshape(h, &[batch, self.flat])?;
        let h = linear(tape, h, bound.var("fc1.weight")?, bound.var("fc1.bias")?)?;
        let h = self.act(tape, bound, h, 3)?;
        let logits = linear(tape, h, bound.var("fc2.weight")?, bound.var("fc2.bias")?)?;
        if self.complex {
            Ok(abs_logsoftmax_head(tape, logits)?)
        } else {
            Ok(log_softmax(tape, logits)?)
        }
    }

    /// Batch-norm running statistics as checkpoint records.
    pub fn buffer_records(&self) -> Vec<(String, ComplexTensor)> {
        let mut out = Vec::new();
        for (i, s) in self.bn.iter().enumerate() {
            let (mean, cov) = s.buffers();
            out.push((format!("bn{}.running_mean", i + 1), mean));
            out.push((format!("bn{}.running_cov", i + 1), cov));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn spec(input: (usize, usize), classes: usize, act: Activation) -> ModelSpec {
        let cfg = ExperimentConfig::defaults_for(ExperimentKind::Exp1Image);
        ModelSpec::from_config(&cfg, input, classes, act).unwrap()
    }

    fn out_shape(arch: Arch, spec: &ModelSpec, batch: usize) -> Vec<usize> {
        let Model::Conv(mut net) = build_model(arch, spec, &mut Rng::seed(1)).unwrap() else {
            panic!("expected a conv net")
        };
        let mut tape = Tape::new();
        let bound = net.params.bind(&mut tape);
        let mut x = ComplexTensor::zeros(&[batch, 1, spec.input.0, spec.input.1]).unwrap();
        Rng::seed(2).fill_normal(x.re_mut(), 1.0);
        let x = tape.constant(x);
        let y = net.forward(&mut tape, &bound, x).unwrap();
        tape.value(y).unwrap().shape().to_vec()
    }

    #[test]
    fn image_and_audio_output_shapes() {
        assert_eq!(out_shape(Arch::ImageCvcnn, &spec((28, 28), 10, Activation::CRelu), 3), vec![3, 10]);
        assert_eq!(out_shape(Arch::ImageRealcnn, &spec((28, 28), 10, Activation::CRelu), 2), vec![2, 10]);
        assert_eq!(out_shape(Arch::AudioCvcnn, &spec((13, 126), 4, Activation::Cardioid), 2), vec![2, 4]);
    }

    #[test]
    fn modrelu_adds_one_bias_per_channel() {
        let count = |act| build_model(Arch::ImageCvcnn, &spec((28, 28), 10, act), &mut Rng::seed(0)).unwrap().params().count();
        let base = count(Activation::CRelu);
        assert_eq!(count(Activation::Cardioid), base);
        assert_eq!(count(Activation::SplitTanh), base);
        assert_eq!(count(Activation::ModRelu), base + 16 + 32 + 128);
    }

    #[test]
    fn tiny_input_is_rejected() {
        assert!(build_model(Arch::ImageCvcnn, &spec((6, 6), 10, Activation::CRelu), &mut Rng::seed(0)).is_err());
        assert!("mlp".parse::<Arch>().is_err());
    }

    #[test]
    fn gnn_model_has_readout() {
        let m = build_model(Arch::Gnn, &spec((13, 126), 2, Activation::CRelu), &mut Rng::seed(0)).unwrap();
        assert!(m.params().get("gnn.out.weight").is_some());
    }
}
