use std::fs;
use std::path::Path;

use crate::{Error, RealTensor, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images `(N, 1, H, W)` scaled to `[0, 1]` with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: RealTensor,
    pub labels: Vec<usize>,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.images.shape()[2], self.images.shape()[3])
    }

    /// The first `n` examples (or all of them if fewer).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let (h, w) = self.image_shape();
        Self {
            images: RealTensor::new(&[n, 1, h, w], self.images.data()[..n * h * w].to_vec())
                .expect("subset of a valid tensor"),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    file: &'static str,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < self.pos + n {
            return Err(Error::Truncated(format!(
                "{} file: needed {} bytes, have {}",
                self.file,
                self.pos + n,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

/// Parses an IDX image/label file pair (big-endian headers, `u8` payloads).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledImages> {
    let img_bytes = fs::read(images_path)?;
    let lbl_bytes = fs::read(labels_path)?;

    let mut r = Reader {
        bytes: &img_bytes,
        pos: 0,
        file: "images",
    };
    let magic = r.u32()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            which: "images",
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let (n, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let pixels: Vec<f64> = r.take(n * h * w)?.iter().map(|&b| b as f64 / 255.0).collect();

    let mut r = Reader {
        bytes: &lbl_bytes,
        pos: 0,
        file: "labels",
    };
    let magic = r.u32()?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            which: "labels",
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let count = r.u32()? as usize;
    if count != n {
        return Err(Error::CountMismatch { images: n, labels: count });
    }
    let labels = r.take(count)?.iter().map(|&b| b as usize).collect();
    Ok(LabeledImages {
        images: RealTensor::new(&[n, 1, h, w], pixels)?,
        labels,
    })
}

/// Writes an IDX pair; pixels are rounded from `[0, 1]` to bytes.
pub fn write_idx(data: &LabeledImages, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = data.image_shape();
    let mut img = Vec::with_capacity(16 + data.images.len());
    for v in [IMAGES_MAGIC, data.len() as u32, h as u32, w as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend(data.images.data().iter().map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    let mut lbl = Vec::with_capacity(8 + data.len());
    lbl.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for &l in &data.labels {
        let b = u8::try_from(l).map_err(|_| Error::InvalidArgument(format!("label {l} does not fit a byte")))?;
        lbl.push(b);
    }
    fs::write(images_path, img)?;
    fs::write(labels_path, lbl)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> LabeledImages {
        let mut px = vec![0.0; 4 * 28 * 28];
        px[0] = 1.0;
        px[28 * 28 + 5] = 128.0 / 255.0;
        LabeledImages {
            images: RealTensor::new(&[4, 1, 28, 28], px).unwrap(),
            labels: vec![3, 1, 4, 1],
        }
    }

    fn write(dir: &Path, d: &LabeledImages) -> (std::path::PathBuf, std::path::PathBuf) {
        let (i, l) = (dir.join("img"), dir.join("lbl"));
        write_idx(d, &i, &l).unwrap();
        (i, l)
    }

    #[test]
    fn four_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = write(dir.path(), &fixture());
        let back = load_idx(&i, &l).unwrap();
        assert_eq!(back.images.shape(), &[4, 1, 28, 28]);
        assert_eq!(back.labels, vec![3, 1, 4, 1]);
        assert_eq!(back.images.data()[0], 1.0);
        assert_eq!(back, fixture());
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = write(dir.path(), &fixture());

        let mut bad = fs::read(&l).unwrap();
        bad[3] = 0x03;
        let bad_l = dir.path().join("bad_lbl");
        fs::write(&bad_l, &bad).unwrap();
        let err = load_idx(&i, &bad_l).unwrap_err();
        assert!(err.to_string().contains("bad labels magic"), "{err}");

        let img = fs::read(&i).unwrap();
        let cut = dir.path().join("cut_img");
        fs::write(&cut, &img[..img.len() - 1]).unwrap();
        assert!(matches!(load_idx(&cut, &l), Err(Error::Truncated(_))));

        let mut three = fixture().take(3);
        three.labels = vec![0, 0, 0];
        let sub = dir.path().join("three");
        fs::create_dir(&sub).unwrap();
        let (_, l3) = write(&sub, &three);
        assert!(matches!(load_idx(&i, &l3), Err(Error::CountMismatch { images: 4, labels: 3 })));
    }
}
