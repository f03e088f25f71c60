//! Named parameter collections and their gradients.

use crate::{ComplexTensor, Error, GradStore, Result, Tape, Var};

/// Ordered set of named complex parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, ComplexTensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: ComplexTensor) -> Result<()> {
        let name = name.into();
        if self.index(&name).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        self.entries.push((name, value));
        Ok(())
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&ComplexTensor> {
        self.index(name).map(|i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ComplexTensor> {
        self.index(name).map(move |i| &mut self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ComplexTensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut ComplexTensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    /// Total number of complex scalars.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Records every parameter as a gradient-tracking leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound {
            vars: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), tape.param(t.clone())))
                .collect(),
        }
    }
}

/// Parameter leaves recorded on one tape.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<(String, Var)>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter `{name}`")))
    }

    /// Pulls each parameter's gradient out of `store`, by name.
    pub fn grads(&self, mut store: GradStore) -> Grads {
        Grads {
            entries: self
                .vars
                .iter()
                .map(|(n, v)| (n.clone(), store.take(*v)))
                .collect(),
        }
    }
}

/// Per-parameter gradients in the `dL/dx + i·dL/dy` convention.
#[derive(Debug, Clone, Default)]
pub struct Grads {
    entries: Vec<(String, Option<ComplexTensor>)>,
}

impl Grads {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, grad: ComplexTensor) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some((_, g)) => *g = Some(grad),
            None => self.entries.push((name, Some(grad))),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ComplexTensor> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, g)| g.as_ref())
    }

    pub fn require(&self, name: &str) -> Result<&ComplexTensor> {
        self.get(name)
            .ok_or_else(|| Error::MissingGradient(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ComplexTensor)> {
        self.entries
            .iter()
            .filter_map(|(n, g)| g.as_ref().map(|g| (n.as_str(), g)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ComplexTensor> {
        self.entries.iter_mut().filter_map(|(_, g)| g.as_mut())
    }

    /// L2 norm over every real and imaginary gradient component.
    pub fn global_norm(&self) -> f64 {
        self.iter().map(|(_, g)| g.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Accumulates `other` into `self`, matching by name.
    pub fn accumulate(&mut self, other: &Grads) -> Result<()> {
        for (name, g) in other.iter() {
            match self.entries.iter_mut().find(|(n, _)| n == name) {
                Some((_, Some(acc))) => acc.add_assign(g)?,
                Some((_, slot)) => *slot = Some(g.clone()),
                None => self.entries.push((name.to_string(), Some(g.clone()))),
            }
        }
        Ok(())
    }
}
