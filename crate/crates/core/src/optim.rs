//! SGD and Adam over complex parameters, treating each complex scalar as a
//! pair of real parameters, plus global-norm gradient clipping.

use std::str::FromStr;

use crate::checkpoint::Checkpoint;
use crate::params::Grads;
use crate::{ComplexTensor, Error, ParamSet, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimKind {
    Sgd,
    Adam,
}

impl FromStr for OptimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimKind::Sgd),
            "adam" => Ok(OptimKind::Adam),
            other => Err(Error::InvalidArgument(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            kind: OptimKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: None,
        }
    }
}

impl OptimConfig {
    pub fn sgd(lr: f64) -> Self {
        Self {
            kind: OptimKind::Sgd,
            lr,
            ..Self::default()
        }
    }

    pub fn adam(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("optimizer {what} out of range")));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas");
        }
        if !(self.eps > 0.0) {
            return bad("eps");
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip_norm");
        }
        Ok(())
    }
}

/// Optimizer hyperparameters, step count and Adam moments.
///
/// `m` and `v` hold one tensor per parameter; the real plane tracks the real
/// gradient component and the imaginary plane the imaginary one.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub config: OptimConfig,
    step: u64,
    m: Vec<(String, ComplexTensor)>,
    v: Vec<(String, ComplexTensor)>,
}

impl OptimState {
    pub fn new(config: OptimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Clips (when configured) then applies one update.
    pub fn step(&mut self, params: &mut ParamSet, grads: &mut Grads) -> Result<()> {
        if let Some(c) = self.config.clip_norm {
            clip_grad_norm(grads, c);
        }
        match self.config.kind {
            OptimKind::Sgd => {
                sgd_step(params, grads, self.config.lr)?;
                self.step += 1;
                Ok(())
            }
            OptimKind::Adam => adam_step(params, grads, self),
        }
    }

    fn moments(&mut self, name: &str, like: &ComplexTensor) -> Result<(usize, usize)> {
        let find = |list: &mut Vec<(String, ComplexTensor)>| -> Result<usize> {
            match list.iter().position(|(n, _)| n == name) {
                Some(i) if list[i].1.shape() == like.shape() => Ok(i),
                Some(i) => Err(Error::shape("adam moments", list[i].1.shape(), like.shape())),
                None => {
                    list.push((name.to_string(), ComplexTensor::zeros(like.shape())?));
                    Ok(list.len() - 1)
                }
            }
        };
        Ok((find(&mut self.m)?, find(&mut self.v)?))
    }

    /// Serialises the state as checkpoint records under `prefix`.
    pub fn to_records(&self, prefix: &str) -> Vec<(String, ComplexTensor)> {
        let c = &self.config;
        let header = vec![
            match c.kind {
                OptimKind::Sgd => 0.0,
                OptimKind::Adam => 1.0,
            },
            c.lr,
            c.beta1,
            c.beta2,
            c.eps,
            c.clip_norm.unwrap_or(0.0),
            self.step as f64,
        ];
        let mut out = vec![(
            format!("{prefix}state"),
            ComplexTensor::from_planes(&[header.len()], header, vec![0.0; 7]).unwrap(),
        )];
        for (n, t) in &self.m {
            out.push((format!("{prefix}m.{n}"), t.clone()));
        }
        for (n, t) in &self.v {
            out.push((format!("{prefix}v.{n}"), t.clone()));
        }
        out
    }

    pub fn from_checkpoint(ck: &Checkpoint, prefix: &str) -> Result<Self> {
        let key = format!("{prefix}state");
        let h = ck
            .get(&key)
            .ok_or_else(|| Error::Format(format!("checkpoint has no `{key}` record")))?
            .re();
        if h.len() != 7 {
            return Err(Error::Format("optimizer header must have 7 entries".into()));
        }
        let config = OptimConfig {
            kind: if h[0] == 0.0 { OptimKind::Sgd } else { OptimKind::Adam },
            lr: h[1],
            beta1: h[2],
            beta2: h[3],
            eps: h[4],
            clip_norm: (h[5] > 0.0).then_some(h[5]),
        };
        let mut st = Self::new(config)?;
        st.step = h[6] as u64;
        let collect = |tag: &str| {
            ck.with_prefix(prefix)
                .filter_map(|(n, t)| n.strip_prefix(tag).map(|n| (n.to_string(), t.clone())))
                .collect()
        };
        st.m = collect("m.");
        st.v = collect("v.");
        Ok(st)
    }
}

fn each_param<'a>(
    params: &'a mut ParamSet,
    grads: &'a Grads,
) -> impl Iterator<Item = Result<(&'a str, &'a mut ComplexTensor, &'a ComplexTensor)>> {
    params.iter_mut().map(move |(name, p)| {
        let g = grads.require(name)?;
        if g.shape() != p.shape() {
            return Err(Error::shape("optimizer gradient", g.shape(), p.shape()));
        }
        Ok((name, p, g))
    })
}

/// `p ← p − lr·g` on both planes.
pub fn sgd_step(params: &mut ParamSet, grads: &Grads, lr: f64) -> Result<()> {
    for entry in each_param(params, grads) {
        let (_, p, g) = entry?;
        let (pr, pi) = p.planes_mut();
        for (x, d) in pr.iter_mut().zip(g.re()) {
            *x -= lr * d;
        }
        for (x, d) in pi.iter_mut().zip(g.im()) {
            *x -= lr * d;
        }
    }
    Ok(())
}

/// Bias-corrected Adam applied to the real and imaginary planes independently.
pub fn adam_step(params: &mut ParamSet, grads: &Grads, st: &mut OptimState) -> Result<()> {
    st.step += 1;
    let c = st.config;
    let t = st.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for entry in each_param(params, grads) {
        let (name, p, g) = entry?;
        let (mi, vi) = st.moments(name, g)?;
        let (m_re, m_im) = st.m[mi].1.planes_mut();
        let (v_re, v_im) = st.v[vi].1.planes_mut();
        let (p_re, p_im) = p.planes_mut();
        for (p, m, v, g) in [(p_re, m_re, v_re, g.re()), (p_im, m_im, v_im, g.im())] {
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                p[i] -= c.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + c.eps);
            }
        }
    }
    Ok(())
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        let k = max_norm / norm;
        for g in grads.iter_mut() {
            *g = g.scale(k);
        }
    }
    norm
}
