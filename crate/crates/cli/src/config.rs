//! JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use cvnn_core::activations::Activation;
use cvnn_core::audio::{MfccConfig, StftConfig, Workflow};
use cvnn_core::data::{Setting, SynthKind, SynthSpec};
use cvnn_core::graph::{EdgeWeighting, GraphMode};
use cvnn_core::init::InitScheme;
use cvnn_core::layers::BatchNormConfig;
use cvnn_core::optim::{OptimConfig, OptimKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Exp1Image,
    Exp1ActivationSweep,
    Exp2Audio,
    Exp3Gnn,
}

impl ExperimentKind {
    pub fn command(&self) -> &'static str {
        match self {
            ExperimentKind::Exp1Image => "exp1",
            ExperimentKind::Exp1ActivationSweep => "sweep1",
            ExperimentKind::Exp2Audio => "exp2",
            ExperimentKind::Exp3Gnn => "exp3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    /// `adam` or `sgd`.
    pub kind: String,
    pub lr: f64,
    /// Enables global-norm gradient clipping at this threshold.
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            kind: "adam".into(),
            lr: 1e-3,
            clip_norm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub conv1: usize,
    pub conv2: usize,
    pub dense: usize,
    pub kernel: usize,
    /// Complex weight initialiser.
    pub init: String,
    /// `α` of `smooth_zrelu`.
    pub smooth_alpha: f64,
    pub bn_lambda: f64,
    pub bn_momentum: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            conv1: 16,
            conv2: 32,
            dense: 128,
            kernel: 3,
            init: "he_circular".into(),
            smooth_alpha: 1.0,
            bn_lambda: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSection {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub train_limit: usize,
    pub test_limit: usize,
    /// Input settings `1`–`5` (or their names).
    pub settings: Vec<String>,
    /// Activations for the complex runs.
    pub activations: Vec<String>,
}

impl Default for ImageSection {
    fn default() -> Self {
        let dir = Path::new("data/mnist5k");
        Self {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            train_limit: 2000,
            test_limit: 1000,
            settings: vec!["1".into(), "2".into()],
            activations: vec!["crelu".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub activations: Vec<String>,
    /// `none`, `random_noise`, `fixed_phase`, `fixed_imag`.
    pub transforms: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            activations: Activation::ALL.iter().map(|s| s.to_string()).collect(),
            transforms: ["none", "random_noise", "fixed_phase", "fixed_imag"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// `tonal_percussive` or `phase_coded`.
    pub kind: String,
    pub n_per_class: usize,
    pub duration: f64,
    pub sample_rate: u32,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            kind: "tonal_percussive".into(),
            n_per_class: 200,
            duration: 3.0,
            sample_rate: 22050,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    /// `synth` or `wav`.
    pub source: String,
    pub synth: SynthSection,
    /// Root holding one directory of WAV files per class.
    pub wav_dir: Option<PathBuf>,
    /// Class directories to use, in label order; all subdirectories when absent.
    pub classes: Option<Vec<String>>,
    pub segment_seconds: f64,
    pub test_fraction: f64,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    /// Lowest STFT bins kept as network input for `cvcnn_workflow1`.
    pub wf1_max_bins: usize,
    /// `real_cnn_mfcc`, `cvcnn_mfcc`, `cvcnn_workflow1`, `cvcnn_workflow2`.
    pub methods: Vec<String>,
    pub activations: Vec<String>,
}

impl Default for AudioSection {
    fn default() -> Self {
        Self {
            source: "synth".into(),
            synth: SynthSection::default(),
            wav_dir: None,
            classes: None,
            segment_seconds: 3.0,
            test_fraction: 0.2,
            n_fft: 2048,
            hop: 512,
            n_mels: 26,
            n_mfcc: 13,
            wf1_max_bins: 128,
            methods: ["real_cnn_mfcc", "cvcnn_mfcc", "cvcnn_workflow1", "cvcnn_workflow2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            activations: vec!["crelu".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// `unweighted`, `phase_weighted`.
    pub modes: Vec<String>,
    /// `direct` or `inverse`.
    pub edge_weighting: String,
    pub hidden: usize,
    pub layers: usize,
    /// Directory for the per-clip CSV graph dump; skipped when absent.
    pub dump_dir: Option<PathBuf>,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            modes: vec!["unweighted".into(), "phase_weighted".into()],
            edge_weighting: "direct".into(),
            hidden: 64,
            layers: 2,
            dump_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must agree with the subcommand when present.
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub optimizer: OptimizerSection,
    pub model: ModelSection,
    pub image: ImageSection,
    pub sweep: SweepSection,
    pub audio: AudioSection,
    pub graph: GraphSection,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: None,
            epochs: 2,
            batch_size: 20,
            eval_batch_size: 100,
            optimizer: OptimizerSection::default(),
            model: ModelSection::default(),
            image: ImageSection::default(),
            sweep: SweepSection::default(),
            audio: AudioSection::default(),
            graph: GraphSection::default(),
            output_dir: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_list<T: std::str::FromStr<Err = cvnn_core::Error>>(what: &str, items: &[String]) -> Result<Vec<T>, CliError> {
    if items.is_empty() {
        return Err(config_err(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|s| s.parse().map_err(|e| config_err(format!("{what}: {e}"))))
        .collect()
}

/// Image transforms of the activation sweep, mapped onto input settings.
pub fn sweep_transform(name: &str) -> Result<Setting, CliError> {
    Ok(match name {
        "none" => Setting::CvRealInput,
        "random_noise" => Setting::RandomPerturb,
        "fixed_phase" => Setting::FixedPhase,
        "fixed_imag" => Setting::FixedImag,
        other => return Err(config_err(format!("unknown sweep transform `{other}`"))),
    })
}

/// One feature/model pairing of the audio experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AudioMethod {
    RealCnnMfcc,
    CvcnnMfcc,
    CvcnnWorkflow1,
    CvcnnWorkflow2,
}

impl AudioMethod {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "real_cnn_mfcc" => AudioMethod::RealCnnMfcc,
            "cvcnn_mfcc" => AudioMethod::CvcnnMfcc,
            "cvcnn_workflow1" => AudioMethod::CvcnnWorkflow1,
            "cvcnn_workflow2" => AudioMethod::CvcnnWorkflow2,
            other => return Err(config_err(format!("unknown audio method `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AudioMethod::RealCnnMfcc => "real_cnn_mfcc",
            AudioMethod::CvcnnMfcc => "cvcnn_mfcc",
            AudioMethod::CvcnnWorkflow1 => "cvcnn_workflow1",
            AudioMethod::CvcnnWorkflow2 => "cvcnn_workflow2",
        }
    }

    pub fn workflow(&self) -> Workflow {
        match self {
            AudioMethod::RealCnnMfcc | AudioMethod::CvcnnMfcc => Workflow::Mfcc,
            AudioMethod::CvcnnWorkflow1 => Workflow::Stft,
            AudioMethod::CvcnnWorkflow2 => Workflow::PhaseMfcc,
        }
    }

    pub fn is_complex(&self) -> bool {
        *self != AudioMethod::RealCnnMfcc
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`, with the seed filled in so the echo is runnable.
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let mut c = Self {
            experiment: Some(kind),
            seed: Some(7),
            ..Self::default()
        };
        match kind {
            ExperimentKind::Exp1Image | ExperimentKind::Exp1ActivationSweep => {}
            ExperimentKind::Exp2Audio => {
                c.epochs = 10;
                c.batch_size = 16;
            }
            ExperimentKind::Exp3Gnn => {
                c.epochs = 30;
                c.batch_size = 16;
                c.audio.synth.kind = "phase_coded".into();
                c.audio.methods = vec![];
            }
        }
        c
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_err(format!("parsing {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every field that the chosen experiment reads.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), CliError> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(config_err(format!(
                    "config is for `{}` but the `{}` command was given",
                    k.command(),
                    kind.command()
                )));
            }
        }
        if self.seed.is_none() {
            return Err(config_err("`seed` is required (in the config or via --seed)"));
        }
        if self.epochs == 0 {
            return Err(config_err("`epochs` must be >= 1"));
        }
        if self.batch_size == 0 || self.eval_batch_size == 0 {
            return Err(config_err("batch sizes must be >= 1"));
        }
        self.optim_config()?;
        match kind {
            ExperimentKind::Exp1Image => {
                parse_list::<Setting>("image.settings", &self.image.settings)?;
                self.activations(&self.image.activations)?;
                self.conv_common()?;
            }
            ExperimentKind::Exp1ActivationSweep => {
                self.activations(&self.sweep.activations)?;
                if self.sweep.transforms.is_empty() {
                    return Err(config_err("sweep.transforms list is empty"));
                }
                for t in &self.sweep.transforms {
                    sweep_transform(t)?;
                }
                self.conv_common()?;
            }
            ExperimentKind::Exp2Audio => {
                self.audio_common()?;
                if self.audio.methods.is_empty() {
                    return Err(config_err("audio.methods list is empty"));
                }
                for m in &self.audio.methods {
                    AudioMethod::parse(m)?;
                }
                self.activations(&self.audio.activations)?;
                self.conv_common()?;
            }
            ExperimentKind::Exp3Gnn => {
                self.audio_common()?;
                parse_list::<GraphMode>("graph.modes", &self.graph.modes)?;
                self.edge_weighting()?;
                if self.graph.hidden == 0 || self.graph.layers == 0 {
                    return Err(config_err("graph.hidden and graph.layers must be >= 1"));
                }
                if self.audio.n_mfcc != cvnn_core::graph::NODES {
                    return Err(config_err(format!(
                        "graphs have {} nodes, so audio.n_mfcc must be {}",
                        cvnn_core::graph::NODES,
                        cvnn_core::graph::NODES
                    )));
                }
            }
        }
        Ok(())
    }

    fn conv_common(&self) -> Result<(), CliError> {
        let m = &self.model;
        if m.conv1 == 0 || m.conv2 == 0 || m.dense == 0 || m.kernel == 0 {
            return Err(config_err("model widths and kernel must be >= 1"));
        }
        self.init_scheme()?;
        self.bn_config()?;
        Ok(())
    }

    fn audio_common(&self) -> Result<(), CliError> {
        let a = &self.audio;
        match a.source.as_str() {
            "synth" => {
                self.synth_spec()?;
            }
            "wav" => {
                if a.wav_dir.is_none() {
                    return Err(config_err("audio.source is `wav` but audio.wav_dir is missing"));
                }
            }
            other => return Err(config_err(format!("unknown audio.source `{other}`"))),
        }
        if !(a.segment_seconds > 0.0) {
            return Err(config_err("audio.segment_seconds must be > 0"));
        }
        if !(0.0..1.0).contains(&a.test_fraction) || a.test_fraction == 0.0 {
            return Err(config_err("audio.test_fraction must be in (0, 1)"));
        }
        if a.wf1_max_bins == 0 {
            return Err(config_err("audio.wf1_max_bins must be >= 1"));
        }
        let cfg = self.mfcc_config()?;
        if cfg.n_mfcc == 0 || cfg.n_mfcc > cfg.n_mels {
            return Err(config_err("audio.n_mfcc must be in 1..=n_mels"));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn activations(&self, names: &[String]) -> Result<Vec<Activation>, CliError> {
        let mut acts = parse_list::<Activation>("activations", names)?;
        for a in &mut acts {
            if let Activation::SmoothZRelu { alpha } = a {
                *alpha = self.model.smooth_alpha;
            }
        }
        if !(self.model.smooth_alpha > 0.0) {
            return Err(config_err("model.smooth_alpha must be > 0"));
        }
        Ok(acts)
    }

    pub fn settings(&self) -> Result<Vec<Setting>, CliError> {
        parse_list("image.settings", &self.image.settings)
    }

    pub fn graph_modes(&self) -> Result<Vec<GraphMode>, CliError> {
        parse_list("graph.modes", &self.graph.modes)
    }

    pub fn edge_weighting(&self) -> Result<EdgeWeighting, CliError> {
        self.graph
            .edge_weighting
            .parse()
            .map_err(|e| config_err(format!("graph.edge_weighting: {e}")))
    }

    pub fn init_scheme(&self) -> Result<InitScheme, CliError> {
        self.model.init.parse().map_err(|e| config_err(format!("model.init: {e}")))
    }

    pub fn bn_config(&self) -> Result<BatchNormConfig, CliError> {
        let cfg = BatchNormConfig {
            lambda: self.model.bn_lambda,
            momentum: self.model.bn_momentum,
            ..BatchNormConfig::default()
        };
        cvnn_core::layers::BatchNormState::new(1, cfg).map_err(|e| config_err(format!("model: {e}")))?;
        Ok(cfg)
    }

    pub fn optim_config(&self) -> Result<OptimConfig, CliError> {
        let kind: OptimKind = self
            .optimizer
            .kind
            .parse()
            .map_err(|e| config_err(format!("optimizer.kind: {e}")))?;
        let cfg = OptimConfig {
            kind,
            lr: self.optimizer.lr,
            clip_norm: self.optimizer.clip_norm,
            ..OptimConfig::default()
        };
        cvnn_core::optim::OptimState::new(cfg).map_err(|e| config_err(format!("optimizer: {e}")))?;
        Ok(cfg)
    }

    pub fn mfcc_config(&self) -> Result<MfccConfig, CliError> {
        let a = &self.audio;
        let stft = StftConfig::new(a.n_fft, a.hop).map_err(|e| config_err(format!("audio: {e}")))?;
        Ok(MfccConfig {
            n_mels: a.n_mels,
            n_mfcc: a.n_mfcc,
            ..MfccConfig::with_stft(stft)
        })
    }

    pub fn synth_spec(&self) -> Result<SynthSpec, CliError> {
        let s = &self.audio.synth;
        let kind = match s.kind.as_str() {
            "tonal_percussive" => SynthKind::TonalPercussive,
            "phase_coded" => SynthKind::PhaseCoded,
            other => return Err(config_err(format!("unknown audio.synth.kind `{other}`"))),
        };
        if s.n_per_class == 0 || !(s.duration > 0.0) || s.sample_rate == 0 {
            return Err(config_err("audio.synth needs n_per_class, duration and sample_rate > 0"));
        }
        Ok(SynthSpec {
            kind,
            n_per_class: s.n_per_class,
            duration: s.duration,
            sample_rate: s.sample_rate,
            n_fft: self.audio.n_fft,
            hop: self.audio.hop,
        })
    }
}
