//! Split-plane complex tensors and their real counterpart.
//!
//! A [`ComplexTensor`] keeps the real and imaginary parts in two contiguous
//! `f64` planes of identical length, laid out row-major over `shape`. Shapes
//! have rank 1 to 4 and every dimension is at least 1.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"CVTNSR01";
const MAX_RANK: usize = 4;

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: format!("rank must be 1..={MAX_RANK}"),
        });
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "dimensions must be >= 1".into(),
        });
    }
    Ok(shape.iter().product())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealTensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = check_shape(shape)?;
        if data.len() != n {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: format!("expected {n} elements, got {}", data.len()),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        })
    }

    /// Rank-1 tensor over `data`. Panics on an empty vector.
    pub fn from_vec(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "tensor dimensions must be >= 1");
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        if n != self.data.len() {
            return Err(Error::shape("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Complex tensor stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            re: vec![0.0; n],
            im: vec![0.0; n],
        })
    }

    pub fn from_planes(shape: &[usize], re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let n = check_shape(shape)?;
        if re.len() != n || im.len() != n {
            return Err(Error::InvalidShape {
                shape: shape.to_vec(),
                reason: format!(
                    "expected {n} elements per plane, got {} and {}",
                    re.len(),
                    im.len()
                ),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            re,
            im,
        })
    }

    /// Combines two real tensors of identical shape into `real + i·imag`.
    pub fn from_parts(real: &RealTensor, imag: &RealTensor) -> Result<Self> {
        if real.shape != imag.shape {
            return Err(Error::shape("from_parts", &real.shape, &imag.shape));
        }
        Ok(Self {
            shape: real.shape.clone(),
            re: real.data.clone(),
            im: imag.data.clone(),
        })
    }

    pub fn from_real(real: &RealTensor) -> Self {
        Self {
            shape: real.shape.clone(),
            re: real.data.clone(),
            im: vec![0.0; real.data.len()],
        }
    }

    pub fn from_complex(shape: &[usize], values: &[Complex64]) -> Result<Self> {
        let re = values.iter().map(|z| z.re).collect();
        let im = values.iter().map(|z| z.im).collect();
        Self::from_planes(shape, re, im)
    }

    pub fn scalar(z: Complex64) -> Self {
        Self {
            shape: vec![1],
            re: vec![z.re],
            im: vec![z.im],
        }
    }

    /// Builds `magnitude·e^{i·phase}` elementwise.
    pub fn from_polar(magnitude: &RealTensor, phase: &RealTensor) -> Result<Self> {
        if magnitude.shape != phase.shape {
            return Err(Error::shape("from_polar", &magnitude.shape, &phase.shape));
        }
        let (re, im) = magnitude
            .data
            .iter()
            .zip(&phase.data)
            .map(|(&r, &p)| (r * p.cos(), r * p.sin()))
            .unzip();
        Ok(Self {
            shape: magnitude.shape.clone(),
            re,
            im,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    pub fn planes_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn into_planes(self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        (self.shape, self.re, self.im)
    }

    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, z: Complex64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    pub fn iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        self.iter().collect()
    }

    pub fn real_part(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self.re.clone(),
        }
    }

    pub fn imag_part(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self.im.clone(),
        }
    }

    /// True when the imaginary plane is identically zero.
    pub fn is_real(&self) -> bool {
        self.im.iter().all(|&v| v == 0.0)
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        if n != self.re.len() {
            return Err(Error::shape("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(op, &self.shape, &other.shape));
        }
        let mut out = self.clone();
        for i in 0..self.len() {
            out.set(i, f(self.get(i), other.get(i)));
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise complex product `(ac − bd) + i(ad + bc)`.
    pub fn cmul(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape("cmul", &self.shape, &other.shape));
        }
        let n = self.len();
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (self.re[i], self.im[i]);
            let (c, d) = (other.re[i], other.im[i]);
            re.push(a * c - b * d);
            im.push(a * d + b * c);
        }
        Ok(Self {
            shape: self.shape.clone(),
            re,
            im,
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            re: self.re.iter().map(|v| v * k).collect(),
            im: self.im.iter().map(|v| v * k).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            re: self.re.clone(),
            im: self.im.iter().map(|v| -v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.len() {
            out.set(i, f(self.get(i)));
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape("add_assign", &self.shape, &other.shape));
        }
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += b;
        }
        Ok(())
    }

    /// Elementwise `|z|`.
    pub fn magnitude(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| r.hypot(i))
                .collect(),
        }
    }

    /// Elementwise principal argument in `(−π, π]`, with `phase(0) = 0`.
    pub fn phase(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self
                .re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| principal_arg(r, i))
                .collect(),
        }
    }

    /// Squared L2 norm over both planes.
    pub fn norm_sqr(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// Writes the `CVTNSR01` binary layout: magic, `u32` rank, `u32` dims,
    /// then the real plane and the imaginary plane, all little-endian.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(TENSOR_MAGIC)?;
        w.write_all(&(self.shape.len() as u32).to_le_bytes())?;
        for &d in &self.shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in self.re.iter().chain(&self.im) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(r, &mut magic, "tensor magic")?;
        if &magic != TENSOR_MAGIC {
            return Err(Error::Format(format!(
                "bad tensor magic {:?}",
                String::from_utf8_lossy(&magic)
            )));
        }
        let rank = read_u32(r, "tensor rank")? as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Format(format!("tensor rank {rank} out of range")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(r, "tensor dims")? as usize);
        }
        let n = check_shape(&shape)?;
        let re = read_f64s(r, n, "real plane")?;
        let im = read_f64s(r, n, "imaginary plane")?;
        Self::from_planes(&shape, re, im)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(16 + 4 * self.rank() + 16 * self.len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub(crate) fn principal_arg(re: f64, im: f64) -> f64 {
    if re == 0.0 && im == 0.0 {
        return 0.0;
    }
    let a = im.atan2(re);
    // atan2(-0.0, x<0) yields -π; fold onto the principal branch.
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(what.to_string()),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact(r, &mut bytes, what)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn c(values: &[(f64, f64)]) -> ComplexTensor {
        let v: Vec<Complex64> = values.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        ComplexTensor::from_complex(&[v.len()], &v).unwrap()
    }

    #[test]
    fn from_parts_builds_elementwise() {
        let re = RealTensor::new(&[2], vec![1.0, 0.0]).unwrap();
        let im = RealTensor::new(&[2], vec![0.0, 1.0]).unwrap();
        let t = ComplexTensor::from_parts(&re, &im).unwrap();
        assert_eq!(t.get(0), Complex64::new(1.0, 0.0));
        assert_eq!(t.get(1), Complex64::new(0.0, 1.0));

        let z = RealTensor::new(&[1], vec![0.0]).unwrap();
        let t = ComplexTensor::from_parts(&z, &z).unwrap();
        assert_eq!(t.get(0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn from_parts_rejects_mismatch() {
        let a = RealTensor::zeros(&[2, 2]).unwrap();
        let b = RealTensor::zeros(&[2, 3]).unwrap();
        let err = ComplexTensor::from_parts(&a, &b).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }), "{err}");
    }

    #[test]
    fn shape_rules() {
        assert!(ComplexTensor::zeros(&[]).is_err());
        assert!(ComplexTensor::zeros(&[1, 1, 1, 1, 1]).is_err());
        assert!(ComplexTensor::zeros(&[3, 0]).is_err());
        assert_eq!(ComplexTensor::zeros(&[2, 3, 4, 5]).unwrap().len(), 120);
    }

    #[test]
    fn cmul_examples() {
        let z = c(&[(0.3, -1.7)]);
        assert_eq!(c(&[(1.0, 0.0)]).cmul(&z).unwrap(), z);
        assert_eq!(c(&[(0.0, 1.0)]).cmul(&c(&[(1.0, 1.0)])).unwrap(), c(&[(-1.0, 1.0)]));
        assert_eq!(c(&[(1.0, 2.0)]).cmul(&c(&[(3.0, 4.0)])).unwrap(), c(&[(-5.0, 10.0)]));
        assert!(c(&[(1.0, 0.0)]).cmul(&c(&[(1.0, 0.0), (2.0, 0.0)])).is_err());
    }

    #[test]
    fn magnitude_and_phase_examples() {
        let t = c(&[(3.0, 4.0), (0.0, 0.0), (0.0, -2.0)]);
        assert_eq!(t.magnitude().data(), &[5.0, 0.0, 2.0]);

        let p = c(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, 0.0), (-1.0, -0.0)]).phase();
        assert_eq!(p.data(), &[0.0, FRAC_PI_2, PI, 0.0, PI]);
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let t = c(&[(1.5, -2.0), (0.25, 8.0)]).reshape(&[2, 1]).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..8], b"CVTNSR01");
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &1u32.to_le_bytes());
        assert_eq!(&bytes[20..28], &1.5f64.to_le_bytes());
        assert_eq!(&bytes[36..44], &(-2.0f64).to_le_bytes());
        let back = ComplexTensor::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, t);

        let err = ComplexTensor::read_from(&mut &bytes[..30]).unwrap_err();
        assert!(matches!(err, Error::Truncated(_)));
    }
}
