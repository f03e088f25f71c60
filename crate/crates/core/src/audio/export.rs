use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{ComplexTensor, Error, RealTensor, Result};

fn rows_frames(shape: &[usize]) -> Result<(usize, usize)> {
    match shape {
        [r, f] => Ok((*r, *f)),
        _ => Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "feature export expects (coefficients, frames)".into(),
        }),
    }
}

/// Frame-major CSV with header `frame,c0_re,c0_im,c1_re,…`.
pub fn write_features_csv(features: &ComplexTensor, path: impl AsRef<Path>) -> Result<()> {
    let (rows, frames) = rows_frames(features.shape())?;
    let mut s = String::from("frame");
    for k in 0..rows {
        write!(s, ",c{k}_re,c{k}_im").unwrap();
    }
    s.push('\n');
    for t in 0..frames {
        write!(s, "{t}").unwrap();
        for k in 0..rows {
            let i = k * frames + t;
            write!(s, ",{},{}", features.re()[i], features.im()[i]).unwrap();
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Frame-major CSV with header `frame,c0,c1,…`.
pub fn write_real_features_csv(features: &RealTensor, path: impl AsRef<Path>) -> Result<()> {
    let (rows, frames) = rows_frames(features.shape())?;
    let mut s = String::from("frame");
    for k in 0..rows {
        write!(s, ",c{k}").unwrap();
    }
    s.push('\n');
    for t in 0..frames {
        write!(s, "{t}").unwrap();
        for k in 0..rows {
            write!(s, ",{}", features.data()[k * frames + t]).unwrap();
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let t = RealTensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        write_real_features_csv(&t, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "frame,c0,c1\n0,1,4\n1,2,5\n2,3,6\n");
        write_features_csv(&ComplexTensor::from_real(&t), &p).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("frame,c0_re,c0_im,c1_re,c1_im\n0,1,0,4,0\n"));
    }
}
