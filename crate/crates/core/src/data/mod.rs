//! Dataset ingestion: IDX image files, the image perturbation settings,
//! WAV corpora and synthetic audio.

mod corpus;
mod idx;
mod perturb;
mod synth;

pub use corpus::{
    load_wav_dir, read_manifest, segment_clip, split_by_track, write_manifest, AudioClip, ManifestRow, Split,
    WavCorpus,
};
pub use idx::{load_idx, write_idx, LabeledImages, IMAGES_MAGIC, LABELS_MAGIC};
pub use perturb::{apply_perturbation, Setting, IMAG_VALUE, NOISE_SCALE, PHASE_VALUE};
pub use synth::{phase_coded_bins, synth_audio_dataset, SynthKind, SynthSpec};
