use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::{ComplexTensor, Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Local adjoint of a recorded operation.
///
/// Receives the upstream gradient of the node's output and a mask telling
/// which inputs need a gradient; returns one entry per input, `None` for
/// inputs that were skipped or receive nothing.
pub type Backward = Box<dyn Fn(&ComplexTensor, &[bool]) -> Vec<Option<ComplexTensor>>>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    id: usize,
    requires_grad: bool,
}

impl Var {
    pub fn node_id(&self) -> usize {
        self.id
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }
}

struct Node {
    kind: &'static str,
    value: Rc<ComplexTensor>,
    inputs: Vec<usize>,
    backward: Option<Backward>,
    requires_grad: bool,
    leaf: bool,
}

/// Append-only record of one forward pass.
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: ComplexTensor, requires_grad: bool) -> Var {
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind: "leaf",
            value: Rc::new(value),
            inputs: Vec::new(),
            backward: None,
            requires_grad,
            leaf: true,
        });
        Var {
            tape: self.id,
            id,
            requires_grad,
        }
    }

    pub fn param(&mut self, value: ComplexTensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: ComplexTensor) -> Var {
        self.leaf(value, false)
    }

    fn check(&self, v: Var) -> Result<()> {
        if v.tape != self.id || v.id >= self.nodes.len() {
            return Err(Error::TapeMismatch);
        }
        Ok(())
    }

    pub fn value(&self, v: Var) -> Result<&ComplexTensor> {
        self.check(v)?;
        Ok(&self.nodes[v.id].value)
    }

    pub(crate) fn shared(&self, v: Var) -> Result<Rc<ComplexTensor>> {
        self.check(v)?;
        Ok(Rc::clone(&self.nodes[v.id].value))
    }

    pub fn kind(&self, v: Var) -> Result<&'static str> {
        self.check(v)?;
        Ok(self.nodes[v.id].kind)
    }

    /// Appends an operation with its forward result and local adjoint.
    pub fn record<F>(
        &mut self,
        kind: &'static str,
        inputs: &[Var],
        value: ComplexTensor,
        backward: F,
    ) -> Result<Var>
    where
        F: Fn(&ComplexTensor, &[bool]) -> Vec<Option<ComplexTensor>> + 'static,
    {
        for &v in inputs {
            self.check(v)?;
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.id].requires_grad);
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind,
            value: Rc::new(value),
            inputs: inputs.iter().map(|v| v.id).collect(),
            backward: requires_grad.then(|| Box::new(backward) as Backward),
            requires_grad,
            leaf: false,
        });
        Ok(Var {
            tape: self.id,
            id,
            requires_grad,
        })
    }

    /// Runs reverse accumulation from a real scalar loss and consumes the tape.
    pub fn backward(self, loss: Var) -> Result<GradStore> {
        self.check(loss)?;
        let value = &self.nodes[loss.id].value;
        if value.len() != 1 {
            return Err(Error::NonScalarLoss(format!("shape {:?}", value.shape())));
        }
        if value.im()[0].abs() > 1e-12 {
            return Err(Error::NonScalarLoss(format!(
                "imaginary part {}",
                value.im()[0]
            )));
        }
        let mut grads: Vec<Option<ComplexTensor>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(ComplexTensor::from_planes(
            value.shape(),
            vec![1.0],
            vec![0.0],
        )?);
        let mut out = HashMap::new();
        let mut nodes = self.nodes;
        nodes.truncate(loss.id + 1);
        for id in (0..nodes.len()).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            if node.leaf {
                out.insert(id, g);
                continue;
            }
            let Some(backward) = &node.backward else { continue };
            let mask: Vec<bool> = node
                .inputs
                .iter()
                .map(|&i| nodes[i].requires_grad)
                .collect();
            let input_grads = backward(&g, &mask);
            debug_assert_eq!(input_grads.len(), node.inputs.len(), "{}", node.kind);
            for ((&input, gi), needed) in node.inputs.iter().zip(input_grads).zip(&mask) {
                let (Some(gi), true) = (gi, *needed) else { continue };
                match &mut grads[input] {
                    Some(acc) => acc.add_assign(&gi)?,
                    slot @ None => *slot = Some(gi),
                }
            }
            // free intermediate values as soon as their gradient is consumed
            nodes[id].backward = None;
        }
        Ok(GradStore {
            tape: self.id,
            grads: out,
        })
    }
}

/// Gradients `dL/dx + i·dL/dy` for each `requires_grad` leaf.
#[derive(Debug, Clone)]
pub struct GradStore {
    tape: u64,
    grads: HashMap<usize, ComplexTensor>,
}

impl GradStore {
    pub fn get(&self, v: Var) -> Option<&ComplexTensor> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.get(&v.id)
    }

    pub fn take(&mut self, v: Var) -> Option<ComplexTensor> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.remove(&v.id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}
