//! MFCC coefficient graphs and a small message-passing classifier.
//!
//! Each of the 13 nodes carries one coefficient's time series. Edges form a
//! complete graph whose weights are either uniform or the mean absolute
//! wrapped phase difference between two coefficients' phase series.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::activations::record_crelu;
use crate::init::fans;
use crate::layers::{left_matmul_const, linear};
use crate::params::Bound;
use crate::{ComplexTensor, Error, ParamSet, RealTensor, Result, Rng, Tape, Var};

pub const NODES: usize = 13;

/// Maps an angle onto `(−π, π]`.
pub fn wrap_phase(d: f64) -> f64 {
    d - 2.0 * PI * ((d - PI) / (2.0 * PI)).ceil()
}

/// Mean over time of `|wrap(a_t − b_t)|`, in `[0, π]`.
pub fn mean_abs_phase_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "phase series lengths {} and {} must match and be non-empty",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| wrap_phase(x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Unweighted,
    PhaseWeighted,
}

impl FromStr for GraphMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unweighted" => Ok(GraphMode::Unweighted),
            "phase_weighted" => Ok(GraphMode::PhaseWeighted),
            other => Err(Error::InvalidArgument(format!("unknown graph mode `{other}`"))),
        }
    }
}

/// How a phase difference `d` becomes an edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeWeighting {
    /// `w = d`.
    #[default]
    Direct,
    /// `w = 1/(1 + d)`.
    Inverse,
}

impl FromStr for EdgeWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(EdgeWeighting::Direct),
            "inverse" => Ok(EdgeWeighting::Inverse),
            other => Err(Error::InvalidArgument(format!("unknown edge weighting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGraph {
    /// `(13, T)`; row `m` is coefficient `m` over time.
    pub node_features: RealTensor,
    /// `(13, 13)`, symmetric with zero diagonal.
    pub edge_weights: RealTensor,
    pub label: usize,
}

impl PhaseGraph {
    pub fn feature_len(&self) -> usize {
        self.node_features.shape()[1]
    }

    /// Row-normalised adjacency `D⁻¹W`; rows of isolated nodes stay zero.
    pub fn normalized_adjacency(&self) -> Vec<f64> {
        let w = self.edge_weights.data();
        let mut a = w.to_vec();
        for row in a.chunks_mut(NODES) {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        a
    }

    /// Writes `{stem}_nodes.csv` and `{stem}_edges.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::write(dir.join(format!("{stem}_nodes.csv")), matrix_csv(&self.node_features))?;
        fs::write(dir.join(format!("{stem}_edges.csv")), matrix_csv(&self.edge_weights))?;
        Ok(())
    }
}

fn matrix_csv(t: &RealTensor) -> String {
    let cols = t.shape()[1];
    let mut s = String::new();
    for row in t.data().chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", line.join(",")).unwrap();
    }
    s
}

/// Writes every graph's CSV pair plus `labels.csv` (`graph,label`).
pub fn write_graph_dump(dir: &Path, graphs: &[PhaseGraph]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut labels = String::from("graph,label\n");
    for (i, g) in graphs.iter().enumerate() {
        let stem = format!("graph{i:05}");
        g.write_csv(dir, &stem)?;
        writeln!(labels, "{stem},{}", g.label).unwrap();
    }
    fs::write(dir.join("labels.csv"), labels)?;
    Ok(())
}

/// Builds the complete coefficient graph.
///
/// `phase` must be given exactly when `mode` is phase-weighted and must match
/// the shape of `mfcc`.
pub fn build_mfcc_graph(
    mfcc: &RealTensor,
    phase: Option<&RealTensor>,
    mode: GraphMode,
    weighting: EdgeWeighting,
    label: usize,
) -> Result<PhaseGraph> {
    if mfcc.shape().len() != 2 || mfcc.shape()[0] != NODES {
        return Err(Error::InvalidShape {
            shape: mfcc.shape().to_vec(),
            reason: format!("graph node features must be ({NODES}, T)"),
        });
    }
    let mut w = vec![0.0; NODES * NODES];
    match (mode, phase) {
        (GraphMode::Unweighted, None) => {
            for u in 0..NODES {
                for v in 0..NODES {
                    if u != v {
                        w[u * NODES + v] = 1.0;
                    }
                }
            }
        }
        (GraphMode::PhaseWeighted, Some(p)) => {
            if p.shape() != mfcc.shape() {
                return Err(Error::shape("build_mfcc_graph phase", p.shape(), mfcc.shape()));
            }
            let t = p.shape()[1];
            let row = |m: usize| &p.data()[m * t..(m + 1) * t];
            for u in 0..NODES {
                for v in u + 1..NODES {
                    let d = mean_abs_phase_diff(row(u), row(v))?;
                    let weight = match weighting {
                        EdgeWeighting::Direct => d,
                        EdgeWeighting::Inverse => 1.0 / (1.0 + d),
                    };
                    w[u * NODES + v] = weight;
                    w[v * NODES + u] = weight;
                }
            }
        }
        (GraphMode::PhaseWeighted, None) => {
            return Err(Error::InvalidArgument("phase-weighted graph needs a phase matrix".into()))
        }
        (GraphMode::Unweighted, Some(_)) => {
            return Err(Error::InvalidArgument("unweighted graph takes no phase matrix".into()))
        }
    }
    Ok(PhaseGraph {
        node_features: mfcc.clone(),
        edge_weights: RealTensor::new(&[NODES, NODES], w)?,
        label,
    })
}

/// Layer sizes of the message-passing classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnnShape {
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
}

impl GnnShape {
    pub fn new(input: usize, classes: usize) -> Self {
        Self {
            input,
            hidden: 64,
            layers: 2,
            classes,
        }
    }
}

/// Real-valued weights (`W_self`, `W_neigh`, bias per layer, dense readout),
/// He-normal initialised, stored with zero imaginary planes.
pub fn gnn_init(shape: GnnShape, rng: &mut Rng) -> Result<ParamSet> {
    let mut p = ParamSet::new();
    let real_he = |dims: &[usize], rng: &mut Rng| -> Result<ComplexTensor> {
        let (fan_in, _) = fans(dims);
        let mut t = ComplexTensor::zeros(dims)?;
        rng.fill_normal(t.re_mut(), (2.0 / fan_in as f64).sqrt());
        Ok(t)
    };
    let mut width = shape.input;
    for l in 0..shape.layers {
        p.insert(format!("gnn.l{l}.self"), real_he(&[shape.hidden, width], rng)?)?;
        p.insert(format!("gnn.l{l}.neigh"), real_he(&[shape.hidden, width], rng)?)?;
        p.insert(format!("gnn.l{l}.bias"), ComplexTensor::zeros(&[shape.hidden])?)?;
        width = shape.hidden;
    }
    p.insert("gnn.out.weight", real_he(&[shape.classes, width], rng)?)?;
    p.insert("gnn.out.bias", ComplexTensor::zeros(&[shape.classes])?)?;
    Ok(p)
}

fn block_diag(graphs: &[&PhaseGraph]) -> Result<(ComplexTensor, ComplexTensor)> {
    let b = graphs.len();
    let n = b * NODES;
    let mut adj = ComplexTensor::zeros(&[n, n])?;
    let mut pool = ComplexTensor::zeros(&[b, n])?;
    for (g, graph) in graphs.iter().enumerate() {
        let a = graph.normalized_adjacency();
        for u in 0..NODES {
            for v in 0..NODES {
                adj.re_mut()[(g * NODES + u) * n + g * NODES + v] = a[u * NODES + v];
            }
            pool.re_mut()[g * n + g * NODES + u] = 1.0 / NODES as f64;
        }
    }
    Ok((adj, pool))
}

/// Records the classifier on a batch of graphs and returns `(B, K)` logits.
///
/// Each layer computes `h ← ReLU(W_self·h + W_neigh·(Σ_v w_uv h_v / Σ_v w_uv) + b)`;
/// node states are then mean-pooled and passed through a dense readout.
pub fn gnn_forward(tape: &mut Tape, graphs: &[&PhaseGraph], params: &Bound, layers: usize) -> Result<Var> {
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("empty graph batch".into()));
    }
    let t = graphs[0].feature_len();
    let mut feats = Vec::with_capacity(graphs.len() * NODES * t);
    for g in graphs {
        if g.feature_len() != t {
            return Err(Error::shape("gnn_forward features", g.node_features.shape(), &[NODES, t]));
        }
        feats.extend_from_slice(g.node_features.data());
    }
    let (adj, pool) = block_diag(graphs)?;
    let n = graphs.len() * NODES;
    let mut h = tape.constant(ComplexTensor::from_real(&RealTensor::new(&[n, t], feats)?));
    for l in 0..layers {
        let w_self = params.var(&format!("gnn.l{l}.self"))?;
        let w_neigh = params.var(&format!("gnn.l{l}.neigh"))?;
        let bias = params.var(&format!("gnn.l{l}.bias"))?;
        let hidden = tape.value(w_self)?.shape()[0];
        let zero = tape.constant(ComplexTensor::zeros(&[hidden])?);
        let own = linear(tape, h, w_self, bias)?;
        let agg = left_matmul_const(tape, &adj, h)?;
        let msg = linear(tape, agg, w_neigh, zero)?;
        let pre = tape.add(own, msg)?;
        h = record_crelu(tape, pre)?;
    }
    let pooled = left_matmul_const(tape, &pool, h)?;
    linear(tape, pooled, params.var("gnn.out.weight")?, params.var("gnn.out.bias")?)
}

/// Logits for a single graph, without gradients.
pub fn gnn_logits(graph: &PhaseGraph, params: &ParamSet, layers: usize) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = gnn_forward(&mut tape, &[graph], &bound, layers)?;
    Ok(tape.value(out)?.re().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn phase_diff_examples() {
        let a = [0.3, -1.2, 2.0];
        assert_eq!(mean_abs_phase_diff(&a, &a).unwrap(), 0.0);
        assert!((mean_abs_phase_diff(&[0.0, PI], &[0.0, 0.0]).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((mean_abs_phase_diff(&[-PI / 2.0], &[PI / 2.0]).unwrap() - PI).abs() < 1e-15);
        assert!(mean_abs_phase_diff(&[0.0], &[0.0, 1.0]).is_err());
    }

    fn features(seed: u64) -> RealTensor {
        let mut rng = Rng::seed(seed);
        let mut d = vec![0.0; NODES * 8];
        rng.fill_normal(&mut d, 1.0);
        RealTensor::new(&[NODES, 8], d).unwrap()
    }

    fn phases(seed: u64) -> RealTensor {
        let mut rng = Rng::seed(seed);
        let mut d = vec![0.0; NODES * 8];
        rng.fill_uniform(&mut d, -PI, PI);
        RealTensor::new(&[NODES, 8], d).unwrap()
    }

    #[test]
    fn unweighted_graph_is_all_ones() {
        let g = build_mfcc_graph(&features(1), None, GraphMode::Unweighted, EdgeWeighting::Direct, 0).unwrap();
        let w = g.edge_weights.data();
        let off: Vec<f64> = (0..NODES * NODES).filter(|i| i / NODES != i % NODES).map(|i| w[i]).collect();
        assert_eq!(off.len(), 156);
        assert!(off.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weighted_graph_properties() {
        let g = build_mfcc_graph(&features(1), Some(&phases(2)), GraphMode::PhaseWeighted, EdgeWeighting::Direct, 0)
            .unwrap();
        let w = g.edge_weights.data();
        for u in 0..NODES {
            assert_eq!(w[u * NODES + u], 0.0);
            for v in 0..NODES {
                assert_eq!(w[u * NODES + v], w[v * NODES + u]);
                assert!((0.0..=PI).contains(&w[u * NODES + v]));
            }
        }
        let same = RealTensor::new(&[NODES, 8], vec![0.7; NODES * 8]).unwrap();
        let g = build_mfcc_graph(&features(1), Some(&same), GraphMode::PhaseWeighted, EdgeWeighting::Direct, 0)
            .unwrap();
        assert!(g.edge_weights.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phase_presence_must_match_mode() {
        assert!(build_mfcc_graph(&features(1), None, GraphMode::PhaseWeighted, EdgeWeighting::Direct, 0).is_err());
        assert!(build_mfcc_graph(&features(1), Some(&phases(2)), GraphMode::Unweighted, EdgeWeighting::Direct, 0).is_err());
    }

    #[test]
    fn isolated_nodes_use_self_path_only() {
        let params = gnn_init(GnnShape::new(8, 3), &mut Rng::seed(3)).unwrap();
        let zero = RealTensor::new(&[NODES, 8], vec![0.0; NODES * 8]).unwrap();
        let mut g = build_mfcc_graph(&features(4), Some(&zero), GraphMode::PhaseWeighted, EdgeWeighting::Direct, 0)
            .unwrap();
        assert!(g.edge_weights.data().iter().all(|&v| v == 0.0));
        let with_isolated = gnn_logits(&g, &params, 2).unwrap();

        // zeroing W_neigh gives the self-path-only network
        let mut self_only = params.clone();
        for l in 0..2 {
            let w = self_only.get_mut(&format!("gnn.l{l}.neigh")).unwrap();
            w.re_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        g.edge_weights = RealTensor::new(&[NODES, NODES], vec![1.0; NODES * NODES]).unwrap();
        let expect = gnn_logits(&g, &self_only, 2).unwrap();
        for (a, b) in with_isolated.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn output_shape() {
        let params = gnn_init(GnnShape::new(8, 4), &mut Rng::seed(3)).unwrap();
        let g = build_mfcc_graph(&features(1), None, GraphMode::Unweighted, EdgeWeighting::Direct, 0).unwrap();
        let mut tape = Tape::new();
        let b = params.bind(&mut tape);
        let out = gnn_forward(&mut tape, &[&g, &g, &g], &b, 2).unwrap();
        assert_eq!(tape.value(out).unwrap().shape(), &[3, 4]);
    }
}
