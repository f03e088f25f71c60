use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::audio::read_wav;
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Format(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub label: usize,
    /// Identifies the parent track; segments of one track share it.
    pub source_id: String,
}

#[derive(Debug)]
pub struct WavCorpus {
    pub clips: Vec<AudioClip>,
    /// Class names indexed by label.
    pub classes: Vec<String>,
    /// Files that could not be read, with the reason.
    pub failures: Vec<(PathBuf, Error)>,
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|x| x.eq_ignore_ascii_case("wav"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Loads `root/<class>/*.wav`, labelling clips by directory.
///
/// With `class_map` the listed directories are used in that order; otherwise
/// every subdirectory in sorted order. Unreadable files are collected in
/// [`WavCorpus::failures`] rather than aborting the load.
pub fn load_wav_dir(root: impl AsRef<Path>, class_map: Option<&[String]>) -> Result<WavCorpus> {
    let root = root.as_ref();
    let classes: Vec<String> = match class_map {
        Some(names) => names.to_vec(),
        None => {
            let mut names: Vec<String> = fs::read_dir(root)?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            names
        }
    };
    if classes.is_empty() {
        return Err(Error::InvalidArgument(format!("no class directories under {}", root.display())));
    }
    let mut jobs = Vec::new();
    for (label, name) in classes.iter().enumerate() {
        let files = wav_files(&root.join(name))?;
        if files.is_empty() {
            return Err(Error::EmptyClass(name.clone()));
        }
        jobs.extend(files.into_iter().map(|f| (label, f)));
    }
    let results: Vec<_> = jobs
        .into_par_iter()
        .map(|(label, path)| {
            let r = read_wav(&path).map(|(samples, sample_rate)| AudioClip {
                samples,
                sample_rate,
                label,
                source_id: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            });
            (path, r)
        })
        .collect();
    let mut clips = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in results {
        match r {
            Ok(c) => clips.push(c),
            Err(e) => failures.push((path, e)),
        }
    }
    Ok(WavCorpus { clips, classes, failures })
}

/// Non-overlapping segments of exactly `seconds`; a clip shorter than one
/// segment is zero-padded to a single segment.
pub fn segment_clip(clip: &AudioClip, seconds: f64) -> Result<Vec<AudioClip>> {
    let len = (seconds * clip.sample_rate as f64).round() as usize;
    if len == 0 {
        return Err(Error::InvalidArgument("segment length must be positive".into()));
    }
    let piece = |samples: Vec<f64>| AudioClip {
        samples,
        sample_rate: clip.sample_rate,
        label: clip.label,
        source_id: clip.source_id.clone(),
    };
    if clip.samples.len() < len {
        let mut s = clip.samples.clone();
        s.resize(len, 0.0);
        return Ok(vec![piece(s)]);
    }
    Ok(clip.samples.chunks_exact(len).map(|c| piece(c.to_vec())).collect())
}

/// Stratified split by track: within each class, `test_fraction` of the
/// distinct source ids (rounded up, at least one when a class has two or
/// more tracks) go to the test split.
pub fn split_by_track(clips: Vec<AudioClip>, test_fraction: f64, rng: &mut Rng) -> Result<(Vec<AudioClip>, Vec<AudioClip>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} must be in [0, 1)")));
    }
    let n_classes = clips.iter().map(|c| c.label + 1).max().unwrap_or(0);
    let mut test_ids = std::collections::HashSet::new();
    for label in 0..n_classes {
        let mut ids: Vec<&str> = clips
            .iter()
            .filter(|c| c.label == label)
            .map(|c| c.source_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        rng.shuffle(&mut ids);
        let mut k = (test_fraction * ids.len() as f64).ceil() as usize;
        if test_fraction > 0.0 && ids.len() >= 2 {
            k = k.clamp(1, ids.len() - 1);
        }
        test_ids.extend(ids[..k.min(ids.len())].iter().map(|&s| (label, s.to_string())));
    }
    Ok(clips
        .into_iter()
        .partition(|c| !test_ids.contains(&(c.label, c.source_id.clone()))))
}

/// One line of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub path: String,
    pub label: usize,
    pub split: Split,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("manifest: {e}"))
}

/// Writes `path,label,split` CSV.
pub fn write_manifest(path: impl AsRef<Path>, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["path", "label", "split"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.path.clone(), r.label.to_string(), r.split.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::Format(format!("manifest row has {} fields, expected 3", rec.len())));
        }
        rows.push(ManifestRow {
            path: rec[0].to_string(),
            label: rec[1]
                .parse()
                .map_err(|_| Error::Format(format!("bad manifest label `{}`", &rec[1])))?,
            split: rec[2].parse()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::write_wav;

    fn clip(label: usize, id: &str, len: usize) -> AudioClip {
        AudioClip {
            samples: vec![0.1; len],
            sample_rate: 100,
            label,
            source_id: id.into(),
        }
    }

    #[test]
    fn loads_two_classes_in_order() {
        let dir = tempfile::tempdir().unwrap();
        for class in ["rock", "classical"] {
            fs::create_dir(dir.path().join(class)).unwrap();
            for i in 0..3 {
                write_wav(dir.path().join(class).join(format!("{class}{i}.wav")), &[0.0; 64], 8000).unwrap();
            }
        }
        let c = load_wav_dir(dir.path(), None).unwrap();
        assert_eq!(c.classes, ["classical", "rock"]);
        assert_eq!(c.clips.iter().map(|c| c.label).collect::<Vec<_>>(), [0, 0, 0, 1, 1, 1]);
        assert!(c.failures.is_empty());

        let map = vec!["rock".to_string(), "classical".to_string()];
        let c = load_wav_dir(dir.path(), Some(&map)).unwrap();
        assert_eq!(c.clips[0].source_id, "rock0");
    }

    #[test]
    fn empty_class_and_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("a")).unwrap();
        fs::create_dir(dir.path().join("b")).unwrap();
        write_wav(dir.path().join("a/ok.wav"), &[0.0; 64], 8000).unwrap();
        let err = load_wav_dir(dir.path(), None).unwrap_err();
        assert!(matches!(&err, Error::EmptyClass(name) if name == "b"), "{err}");

        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(dir.path().join("b/deep.wav"), spec).unwrap();
        w.write_sample(0i32).unwrap();
        w.finalize().unwrap();
        let c = load_wav_dir(dir.path(), None).unwrap();
        assert_eq!(c.clips.len(), 1);
        assert_eq!(c.failures.len(), 1);
        assert!(matches!(c.failures[0].1, Error::UnsupportedAudio { .. }));
    }

    #[test]
    fn segmentation() {
        let segs = segment_clip(&clip(0, "t", 1050), 3.0).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.samples.len() == 300 && s.source_id == "t"));
        let segs = segment_clip(&clip(0, "t", 10), 3.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].samples.len(), 300);
    }

    #[test]
    fn split_keeps_tracks_together() {
        let mut clips = Vec::new();
        for label in 0..2 {
            for t in 0..5 {
                for _ in 0..4 {
                    clips.push(clip(label, &format!("c{label}t{t}"), 10));
                }
            }
        }
        let (train, test) = split_by_track(clips, 0.2, &mut Rng::seed(1)).unwrap();
        assert_eq!(test.len(), 8);
        assert_eq!(train.len(), 32);
        for c in &test {
            assert!(train.iter().all(|t| t.source_id != c.source_id));
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let rows = vec![
            ManifestRow {
                path: "rock/a, b.wav".into(),
                label: 1,
                split: Split::Test,
            },
            ManifestRow {
                path: "x.wav".into(),
                label: 0,
                split: Split::Train,
            },
        ];
        write_manifest(&p, &rows).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), rows);
    }
}
