//! Elementary differentiable operations.

use crate::{ComplexTensor, Error, Result};

use super::{Tape, Var};

impl Tape {
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a)?.add(self.value(b)?)?;
        self.record("add", &[a, b], value, |g, _| {
            vec![Some(g.clone()), Some(g.clone())]
        })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a)?.sub(self.value(b)?)?;
        self.record("sub", &[a, b], value, |g, _| {
            vec![Some(g.clone()), Some(g.scale(-1.0))]
        })
    }

    /// Elementwise complex product. The adjoint of `w = a·b` with respect to
    /// `a` is `g·conj(b)` on the real planes, and symmetrically for `b`.
    pub fn cmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let va = self.shared(a)?;
        let vb = self.shared(b)?;
        let value = va.cmul(&vb)?;
        self.record("cmul", &[a, b], value, move |g, need| {
            vec![
                need[0].then(|| g.cmul(&vb.conj()).expect("shape checked")),
                need[1].then(|| g.cmul(&va.conj()).expect("shape checked")),
            ]
        })
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let value = self.value(a)?.scale(k);
        self.record("scale", &[a], value, move |g, _| vec![Some(g.scale(k))])
    }

    pub fn conj(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a)?.conj();
        self.record("conj", &[a], value, |g, _| vec![Some(g.conj())])
    }

    /// `Re z` as a complex tensor with zero imaginary plane.
    pub fn real_part(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a)?;
        let value = ComplexTensor::from_real(&v.real_part());
        self.record("real_part", &[a], value, |g, _| {
            vec![Some(ComplexTensor::from_real(&g.real_part()))]
        })
    }

    /// `Im z` as a complex tensor with zero imaginary plane.
    pub fn imag_part(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a)?;
        let value = ComplexTensor::from_real(&v.imag_part());
        self.record("imag_part", &[a], value, |g, _| {
            let (shape, re, _) = g.clone().into_planes();
            let zeros = vec![0.0; re.len()];
            vec![Some(ComplexTensor::from_planes(&shape, zeros, re).unwrap())]
        })
    }

    /// `|z|²` elementwise.
    pub fn abs_sq(&mut self, a: Var) -> Result<Var> {
        let v = self.shared(a)?;
        let re = v.re().iter().zip(v.im()).map(|(x, y)| x * x + y * y).collect();
        let value = ComplexTensor::from_planes(v.shape(), re, vec![0.0; v.len()])?;
        self.record("abs_sq", &[a], value, move |g, _| {
            let gx = v.re().iter().zip(g.re()).map(|(x, gu)| 2.0 * x * gu).collect();
            let gy = v.im().iter().zip(g.re()).map(|(y, gu)| 2.0 * y * gu).collect();
            vec![Some(ComplexTensor::from_planes(v.shape(), gx, gy).unwrap())]
        })
    }

    /// Sum of all elements, as a shape-`[1]` tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a)?;
        let shape = v.shape().to_vec();
        let value = ComplexTensor::from_planes(
            &[1],
            vec![v.re().iter().sum()],
            vec![v.im().iter().sum()],
        )?;
        self.record("sum", &[a], value, move |g, _| {
            let n: usize = shape.iter().product();
            vec![Some(
                ComplexTensor::from_planes(&shape, vec![g.re()[0]; n], vec![g.im()[0]; n])
                    .unwrap(),
            )]
        })
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a)?.len() as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(a)?;
        let old = v.shape().to_vec();
        let value = v.clone().reshape(shape)?;
        self.record("reshape", &[a], value, move |g, _| {
            vec![Some(g.clone().reshape(&old).unwrap())]
        })
    }

    /// Elementwise product with a constant tensor that takes no gradient.
    pub fn mul_const(&mut self, a: Var, c: &ComplexTensor) -> Result<Var> {
        let va = self.value(a)?;
        if va.shape() != c.shape() {
            return Err(Error::shape("mul_const", va.shape(), c.shape()));
        }
        let value = va.cmul(c)?;
        let cc = c.conj();
        self.record("mul_const", &[a], value, move |g, _| {
            vec![Some(g.cmul(&cc).unwrap())]
        })
    }
}
