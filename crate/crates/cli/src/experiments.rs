//! The four experiment drivers.

use std::collections::BTreeMap;

use cvnn_core::activations::Activation;
use cvnn_core::audio::{complex_mfcc_workflow2, mfcc, MfccConfig};
use cvnn_core::data::{
    apply_perturbation, load_idx, load_wav_dir, segment_clip, split_by_track, synth_audio_dataset, AudioClip,
    LabeledImages, Setting, Split,
};
use cvnn_core::graph::{build_mfcc_graph, write_graph_dump, GraphMode, PhaseGraph};
use cvnn_core::{ComplexTensor, RealTensor, Rng};
use rayon::prelude::*;

use crate::config::{sweep_transform, AudioMethod, ExperimentConfig, ExperimentKind};
use crate::model::{build_model, Arch, Model, ModelSpec};
use crate::train::{train_run, ConvTask, Dataset, GnnTask, RunReport, TrainSetup};
use crate::CliError;

/// One cell of the activation × transform grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GridRow {
    pub activation: String,
    pub transform: String,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub runs: Vec<RunReport>,
    /// Filled for the activation sweep only.
    pub grid: Vec<GridRow>,
}

impl ExperimentReport {
    pub fn run(&self, name: &str) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.name == name)
    }
}

/// Independent random streams for data, perturbations and models.
///
/// Every model of one experiment starts from a clone of the same stream, so
/// runs that differ only in activation or input share their shuffling order.
struct Streams {
    data: Rng,
    perturb: Rng,
    model: Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let mut root = Rng::seed(seed);
        Self {
            data: root.fork(),
            perturb: root.fork(),
            model: root.fork(),
        }
    }
}

fn setup(cfg: &ExperimentConfig) -> Result<TrainSetup, CliError> {
    Ok(TrainSetup {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        eval_batch_size: cfg.eval_batch_size,
        optim: cfg.optim_config()?,
    })
}

fn meta(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport, CliError> {
    cfg.validate(kind)?;
    let mut grid = Vec::new();
    let runs = match kind {
        ExperimentKind::Exp1Image => exp1(cfg)?,
        ExperimentKind::Exp1ActivationSweep => sweep(cfg, &mut grid)?,
        ExperimentKind::Exp2Audio => exp2(cfg)?,
        ExperimentKind::Exp3Gnn => exp3(cfg)?,
    };
    Ok(ExperimentReport {
        kind,
        config: cfg.clone(),
        runs,
        grid,
    })
}

fn load_images(cfg: &ExperimentConfig) -> Result<(LabeledImages, LabeledImages), CliError> {
    let im = &cfg.image;
    let load = |images: &std::path::Path, labels: &std::path::Path, limit: usize| {
        load_idx(images, labels)
            .map(|d| d.take(limit))
            .map_err(|e| CliError::data(images.display(), e))
    };
    let train = load(&im.train_images, &im.train_labels, im.train_limit)?;
    let test = load(&im.test_images, &im.test_labels, im.test_limit)?;
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data("image train or test split is empty".into()));
    }
    if train.image_shape() != test.image_shape() {
        return Err(CliError::Data("train and test images differ in size".into()));
    }
    Ok((train, test))
}

/// Model inputs for `setting`; the test images always stay real.
fn image_inputs(
    train: &LabeledImages,
    test: &LabeledImages,
    setting: Setting,
    rng: &mut Rng,
) -> Result<(Dataset, Dataset), CliError> {
    let (tr, te) = if setting == Setting::RealBaseline {
        (ComplexTensor::from_real(&train.images), ComplexTensor::from_real(&test.images))
    } else {
        (
            apply_perturbation(&train.images, setting, Split::Train, rng)?,
            apply_perturbation(&test.images, setting, Split::Test, rng)?,
        )
    };
    Ok((Dataset::new(tr, train.labels.clone())?, Dataset::new(te, test.labels.clone())?))
}

fn conv_run(
    cfg: &ExperimentConfig,
    arch: Arch,
    activation: Activation,
    name: &str,
    mut meta: BTreeMap<String, String>,
    train: Dataset,
    test: Dataset,
    classes: usize,
    rng: &Rng,
) -> Result<RunReport, CliError> {
    let mut rng = rng.clone();
    let spec = ModelSpec::from_config(cfg, train.example_shape(), classes, activation)?;
    let Model::Conv(net) = build_model(arch, &spec, &mut rng)? else {
        unreachable!("conv architectures build conv nets")
    };
    meta.insert("arch".into(), arch.name().into());
    let mut task = ConvTask { net, train, test };
    let run = train_run(name, meta, &mut task, &setup(cfg)?, &mut rng)?;
    eprintln!("{name}: test_acc {:.4}", run.last().test_acc);
    Ok(run)
}

fn exp1(cfg: &ExperimentConfig) -> Result<Vec<RunReport>, CliError> {
    let (train, test) = load_images(cfg)?;
    let classes = train.num_classes().max(test.num_classes());
    let mut streams = Streams::new(cfg.seed());
    let mut runs = Vec::new();
    for setting in cfg.settings()? {
        let mut perturb = streams.perturb.fork();
        let (tr, te) = image_inputs(&train, &test, setting, &mut perturb)?;
        let number = setting.number().to_string();
        if setting == Setting::RealBaseline {
            let m = meta(&[("setting", &number), ("activation", "relu")]);
            runs.push(conv_run(cfg, Arch::ImageRealcnn, Activation::CRelu, "setting1_real", m, tr, te, classes, &streams.model)?);
            continue;
        }
        for act in cfg.activations(&cfg.image.activations)? {
            let name = format!("setting{number}_{}", act.name());
            let m = meta(&[("setting", &number), ("activation", act.name())]);
            runs.push(conv_run(cfg, Arch::ImageCvcnn, act, &name, m, tr.clone(), te.clone(), classes, &streams.model)?);
        }
    }
    Ok(runs)
}

fn sweep(cfg: &ExperimentConfig, grid: &mut Vec<GridRow>) -> Result<Vec<RunReport>, CliError> {
    let (train, test) = load_images(cfg)?;
    let classes = train.num_classes().max(test.num_classes());
    let mut streams = Streams::new(cfg.seed());
    let mut inputs = Vec::new();
    for t in &cfg.sweep.transforms {
        let mut perturb = streams.perturb.fork();
        inputs.push((t.as_str(), image_inputs(&train, &test, sweep_transform(t)?, &mut perturb)?));
    }
    let mut runs = Vec::new();
    for act in cfg.activations(&cfg.sweep.activations)? {
        for (transform, (tr, te)) in &inputs {
            let name = format!("{}_{transform}", act.name());
            let m = meta(&[("activation", act.name()), ("transform", transform)]);
            let run = conv_run(cfg, Arch::ImageCvcnn, act, &name, m, tr.clone(), te.clone(), classes, &streams.model)?;
            grid.push(GridRow {
                activation: act.name().into(),
                transform: transform.to_string(),
                train_acc: run.last().train_acc,
                test_acc: run.last().test_acc,
            });
            runs.push(run);
        }
    }
    Ok(runs)
}

struct AudioData {
    train: Vec<AudioClip>,
    test: Vec<AudioClip>,
    classes: usize,
}

fn load_audio(cfg: &ExperimentConfig, rng: &mut Rng) -> Result<AudioData, CliError> {
    let a = &cfg.audio;
    let (clips, classes) = if a.source == "synth" {
        let spec = cfg.synth_spec()?;
        (synth_audio_dataset(&spec, rng)?, 2)
    } else {
        let dir = a.wav_dir.as_ref().expect("validated wav config has a directory");
        let corpus = load_wav_dir(dir, a.classes.as_deref()).map_err(|e| CliError::data(dir.display(), e))?;
        for (path, err) in &corpus.failures {
            eprintln!("skipping {}: {err}", path.display());
        }
        let mut clips = Vec::new();
        for clip in &corpus.clips {
            clips.extend(segment_clip(clip, a.segment_seconds)?);
        }
        (clips, corpus.classes.len())
    };
    if let Some(c) = clips.iter().find(|c| c.sample_rate != clips[0].sample_rate) {
        return Err(CliError::Data(format!(
            "mixed sample rates: {} has {} Hz, expected {} Hz",
            c.source_id, c.sample_rate, clips[0].sample_rate
        )));
    }
    let (train, test) = split_by_track(clips, a.test_fraction, rng)?;
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data("audio train or test split is empty".into()));
    }
    Ok(AudioData { train, test, classes })
}

/// Stacks per-clip `(H, W)` features into `(N, 1, H, W)`.
fn stack(feats: Vec<ComplexTensor>) -> Result<ComplexTensor, CliError> {
    let shape = feats[0].shape().to_vec();
    let mut re = Vec::with_capacity(feats.len() * feats[0].len());
    let mut im = Vec::with_capacity(re.capacity());
    for f in &feats {
        if f.shape() != shape.as_slice() {
            return Err(CliError::Data(format!("feature shape {:?} differs from {:?}", f.shape(), shape)));
        }
        re.extend_from_slice(f.re());
        im.extend_from_slice(f.im());
    }
    Ok(ComplexTensor::from_planes(&[feats.len(), 1, shape[0], shape[1]], re, im)?)
}

fn audio_features(clips: &[AudioClip], method: AudioMethod, mcfg: &MfccConfig, max_bins: usize) -> Result<ComplexTensor, CliError> {
    let workflow = method.workflow();
    let feats = clips
        .par_iter()
        .map(|c| {
            let f = workflow.extract(&c.samples, mcfg, c.sample_rate)?;
            if method != AudioMethod::CvcnnWorkflow1 || f.shape()[0] <= max_bins {
                return Ok(f);
            }
            let w = f.shape()[1];
            ComplexTensor::from_planes(&[max_bins, w], f.re()[..max_bins * w].to_vec(), f.im()[..max_bins * w].to_vec())
        })
        .collect::<cvnn_core::Result<Vec<_>>>()?;
    stack(feats)
}

/// Centres and scales each feature row (axis 2) of both splits with the
/// train split's complex mean and RMS deviation.
pub fn standardize_rows(train: &mut ComplexTensor, test: &mut ComplexTensor) {
    let (h, w) = (train.shape()[2], train.shape()[3]);
    let mut stats = vec![(0.0, 0.0, 1.0); h];
    let n = train.shape()[0];
    for (row, st) in stats.iter_mut().enumerate() {
        let idx = || (0..n).flat_map(move |i| (0..w).map(move |t| (i * h + row) * w + t));
        let count = (n * w) as f64;
        let mr = idx().map(|j| train.re()[j]).sum::<f64>() / count;
        let mi = idx().map(|j| train.im()[j]).sum::<f64>() / count;
        let var = idx()
            .map(|j| (train.re()[j] - mr).powi(2) + (train.im()[j] - mi).powi(2))
            .sum::<f64>()
            / count;
        *st = (mr, mi, if var > 1e-24 { var.sqrt() } else { 1.0 });
    }
    for t in [train, test] {
        let n = t.shape()[0];
        let (re, im) = t.planes_mut();
        for i in 0..n {
            for (row, &(mr, mi, s)) in stats.iter().enumerate() {
                let base = (i * h + row) * w;
                for j in base..base + w {
                    re[j] = (re[j] - mr) / s;
                    im[j] = (im[j] - mi) / s;
                }
            }
        }
    }
}

fn exp2(cfg: &ExperimentConfig) -> Result<Vec<RunReport>, CliError> {
    let mut streams = Streams::new(cfg.seed());
    let data = load_audio(cfg, &mut streams.data)?;
    let mcfg = cfg.mfcc_config()?;
    let labels = |clips: &[AudioClip]| clips.iter().map(|c| c.label).collect::<Vec<_>>();
    let mut runs = Vec::new();
    for m in &cfg.audio.methods {
        let method = AudioMethod::parse(m)?;
        let mut tr = audio_features(&data.train, method, &mcfg, cfg.audio.wf1_max_bins)?;
        let mut te = audio_features(&data.test, method, &mcfg, cfg.audio.wf1_max_bins)?;
        standardize_rows(&mut tr, &mut te);
        let train = Dataset::new(tr, labels(&data.train))?;
        let test = Dataset::new(te, labels(&data.test))?;
        if !method.is_complex() {
            let m = meta(&[("method", method.name()), ("activation", "relu")]);
            runs.push(conv_run(cfg, Arch::AudioRealcnn, Activation::CRelu, method.name(), m, train, test, data.classes, &streams.model)?);
            continue;
        }
        for act in cfg.activations(&cfg.audio.activations)? {
            let name = format!("{}_{}", method.name(), act.name());
            let m = meta(&[("method", method.name()), ("activation", act.name())]);
            runs.push(conv_run(cfg, Arch::AudioCvcnn, act, &name, m, train.clone(), test.clone(), data.classes, &streams.model)?);
        }
    }
    Ok(runs)
}

/// MFCCs and workflow-2 phases, `(13, T)` each, per clip.
fn graph_inputs(clips: &[AudioClip], mcfg: &MfccConfig) -> Result<Vec<(RealTensor, RealTensor)>, CliError> {
    Ok(clips
        .par_iter()
        .map(|c| Ok((mfcc(&c.samples, mcfg, c.sample_rate)?, complex_mfcc_workflow2(&c.samples, mcfg, c.sample_rate)?.phase())))
        .collect::<cvnn_core::Result<Vec<_>>>()?)
}

/// Shifts and scales every MFCC value by one mean and standard deviation
/// taken over the whole train split.
///
/// A single scale keeps the level differences between coefficients, which is
/// the only thing that tells nodes apart inside the permutation-invariant
/// network. Standardising each node separately erases it.
fn standardize_nodes(train: &mut [(RealTensor, RealTensor)], test: &mut [(RealTensor, RealTensor)]) {
    let values = || train.iter().flat_map(|(m, _)| m.data().iter().copied());
    let count = values().count() as f64;
    let mean = values().sum::<f64>() / count;
    let var = values().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    let scale = if var > 1e-24 { var.sqrt() } else { 1.0 };
    for (m, _) in train.iter_mut().chain(test.iter_mut()) {
        m.data_mut().iter_mut().for_each(|v| *v = (*v - mean) / scale);
    }
}

fn graphs(
    items: &[(RealTensor, RealTensor)],
    clips: &[AudioClip],
    mode: GraphMode,
    cfg: &ExperimentConfig,
) -> Result<Vec<PhaseGraph>, CliError> {
    let weighting = cfg.edge_weighting()?;
    items
        .iter()
        .zip(clips)
        .map(|((m, p), c)| {
            let phase = (mode == GraphMode::PhaseWeighted).then_some(p);
            Ok(build_mfcc_graph(m, phase, mode, weighting, c.label)?)
        })
        .collect()
}

fn exp3(cfg: &ExperimentConfig) -> Result<Vec<RunReport>, CliError> {
    let mut streams = Streams::new(cfg.seed());
    let data = load_audio(cfg, &mut streams.data)?;
    let mcfg = cfg.mfcc_config()?;
    let mut train = graph_inputs(&data.train, &mcfg)?;
    let mut test = graph_inputs(&data.test, &mcfg)?;
    standardize_nodes(&mut train, &mut test);
    let series = train[0].0.shape()[1];
    let mut runs = Vec::new();
    for mode in cfg.graph_modes()? {
        let mode_name = match mode {
            GraphMode::Unweighted => "unweighted",
            GraphMode::PhaseWeighted => "phase_weighted",
        };
        let g_train = graphs(&train, &data.train, mode, cfg)?;
        let g_test = graphs(&test, &data.test, mode, cfg)?;
        if let Some(dir) = &cfg.graph.dump_dir {
            let dir = dir.join(mode_name);
            std::fs::create_dir_all(&dir)?;
            write_graph_dump(&dir, &g_train)?;
        }
        let mut rng = streams.model.clone();
        let spec = ModelSpec::from_config(cfg, (cvnn_core::graph::NODES, series), data.classes, Activation::CRelu)?;
        let Model::Gnn { params, shape } = build_model(Arch::Gnn, &spec, &mut rng)? else {
            unreachable!("gnn arch builds a graph model")
        };
        let mut task = GnnTask::new(params, shape.layers, g_train, g_test);
        let name = format!("gnn_{mode_name}");
        let m = meta(&[
            ("arch", Arch::Gnn.name()),
            ("mode", mode_name),
            ("edge_weighting", &cfg.graph.edge_weighting),
        ]);
        let run = train_run(&name, m, &mut task, &setup(cfg)?, &mut rng)?;
        eprintln!("{name}: test_acc {:.4}", run.last().test_acc);
        runs.push(run);
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_uses_train_statistics() {
        let mut tr = ComplexTensor::from_planes(&[2, 1, 2, 2], vec![1.0, 3.0, 0.0, 0.0, 1.0, 3.0, 2.0, 2.0], vec![0.0; 8]).unwrap();
        let mut te = ComplexTensor::from_planes(&[1, 1, 2, 2], vec![2.0, 2.0, 5.0, 5.0], vec![0.0; 4]).unwrap();
        standardize_rows(&mut tr, &mut te);
        assert_eq!(tr.re(), &[-1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
        assert_eq!(te.re(), &[0.0, 0.0, 4.0, 4.0]);
        assert!(tr.im().iter().chain(te.im()).all(|&v| v == 0.0));
    }
}
