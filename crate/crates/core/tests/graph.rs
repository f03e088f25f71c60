use cvnn_core::audio::{complex_mfcc_workflow2, mfcc, MfccConfig};
use cvnn_core::data::{synth_audio_dataset, SynthKind, SynthSpec};
use cvnn_core::graph::{build_mfcc_graph, gnn_forward, gnn_init, gnn_logits, wrap_phase, EdgeWeighting, GnnShape, GraphMode, PhaseGraph, NODES};
use cvnn_core::{RealTensor, Rng, Tape};
use proptest::prelude::*;

fn random_graph(t: usize, seed: u64) -> PhaseGraph {
    let mut rng = Rng::seed(seed);
    let feats: Vec<f64> = (0..NODES * t).map(|_| rng.normal()).collect();
    let phase: Vec<f64> = (0..NODES * t).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
    build_mfcc_graph(
        &RealTensor::new(&[NODES, t], feats).unwrap(),
        Some(&RealTensor::new(&[NODES, t], phase).unwrap()),
        GraphMode::PhaseWeighted,
        EdgeWeighting::Direct,
        0,
    )
    .unwrap()
}

fn permute(g: &PhaseGraph, perm: &[usize]) -> PhaseGraph {
    let t = g.feature_len();
    let f = g.node_features.data();
    let w = g.edge_weights.data();
    let feats: Vec<f64> = perm.iter().flat_map(|&p| f[p * t..(p + 1) * t].to_vec()).collect();
    let mut edges = vec![0.0; NODES * NODES];
    for (i, &pi) in perm.iter().enumerate() {
        for (j, &pj) in perm.iter().enumerate() {
            edges[i * NODES + j] = w[pi * NODES + pj];
        }
    }
    PhaseGraph {
        node_features: RealTensor::new(&[NODES, t], feats).unwrap(),
        edge_weights: RealTensor::new(&[NODES, NODES], edges).unwrap(),
        label: g.label,
    }
}

#[test]
fn gnn_gradients_match_finite_differences() {
    let shape = GnnShape {
        input: 5,
        hidden: 6,
        layers: 2,
        classes: 3,
    };
    let params = gnn_init(shape, &mut Rng::seed(1)).unwrap();
    let graphs = [random_graph(5, 2), random_graph(5, 3)];
    let refs: Vec<&PhaseGraph> = graphs.iter().collect();
    let loss = |p: &cvnn_core::ParamSet| {
        let mut tape = Tape::new();
        let bound = p.bind(&mut tape);
        let out = gnn_forward(&mut tape, &refs, &bound, 2).unwrap();
        let s = tape.sum(out).unwrap();
        let s = tape.real_part(s).unwrap();
        (tape.value(s).unwrap().re()[0], tape, bound, s)
    };
    let (_, tape, bound, s) = loss(&params);
    let grads = bound.grads(tape.backward(s).unwrap());
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let g = grads.require(&name).unwrap().clone();
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.get_mut(&name).unwrap().re_mut()[i] += 1e-6;
            let mut minus = params.clone();
            minus.get_mut(&name).unwrap().re_mut()[i] -= 1e-6;
            let fd = (loss(&plus).0 - loss(&minus).0) / 2e-6;
            let an = g.re()[i];
            assert!((fd - an).abs() <= 1e-5 * (1.0 + fd.abs()), "{name}[{i}]: {an} vs {fd}");
        }
    }
}

#[test]
fn synthetic_classes_give_distinct_phase_graphs() {
    let spec = SynthSpec {
        kind: SynthKind::PhaseCoded,
        n_per_class: 3,
        duration: 1.0,
        ..SynthSpec::default()
    };
    let clips = synth_audio_dataset(&spec, &mut Rng::seed(5)).unwrap();
    let cfg = MfccConfig::default();
    let graph = |i: usize| {
        let c = &clips[i];
        let m = mfcc(&c.samples, &cfg, c.sample_rate).unwrap();
        let p = complex_mfcc_workflow2(&c.samples, &cfg, c.sample_rate).unwrap().phase();
        build_mfcc_graph(&m, Some(&p), GraphMode::PhaseWeighted, EdgeWeighting::Direct, c.label).unwrap()
    };
    for pair in 0..3 {
        let (a, b) = (graph(2 * pair), graph(2 * pair + 1));
        let feat_gap = a.node_features.data().iter().zip(b.node_features.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let edge_gap: f64 = a.edge_weights.data().iter().zip(b.edge_weights.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(feat_gap < 1e-6, "magnitude features should match, gap {feat_gap}");
        assert!(edge_gap > 0.1, "edge weights should differ, gap {edge_gap}");
    }
}

proptest! {
    #[test]
    fn gnn_ignores_node_order(seed in 0u64..200, rot in 1usize..NODES) {
        let params = gnn_init(GnnShape::new(4, 2), &mut Rng::seed(seed)).unwrap();
        let g = random_graph(4, seed + 1);
        let perm: Vec<usize> = (0..NODES).map(|i| (i * 5 + rot) % NODES).collect();
        let a = gnn_logits(&g, &params, 2).unwrap();
        let b = gnn_logits(&permute(&g, &perm), &params, 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn gnn_ignores_edge_scale(seed in 0u64..200, scale in 0.01f64..100.0) {
        let params = gnn_init(GnnShape::new(4, 2), &mut Rng::seed(seed)).unwrap();
        let g = random_graph(4, seed + 1);
        let mut h = g.clone();
        h.edge_weights = h.edge_weights.map(|w| w * scale);
        let a = gnn_logits(&g, &params, 2).unwrap();
        let b = gnn_logits(&h, &params, 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn edge_weights_symmetric_and_bounded(seed in 0u64..500) {
        let g = random_graph(6, seed);
        let w = g.edge_weights.data();
        for u in 0..NODES {
            prop_assert_eq!(w[u * NODES + u], 0.0);
            for v in 0..NODES {
                prop_assert_eq!(w[u * NODES + v], w[v * NODES + u]);
                prop_assert!(w[u * NODES + v] >= 0.0 && w[u * NODES + v] <= std::f64::consts::PI);
            }
        }
    }

    #[test]
    fn wrapped_phase_in_range(d in -100.0f64..100.0) {
        let w = wrap_phase(d);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        prop_assert!(((d - w) / (2.0 * std::f64::consts::PI)).fract().abs() < 1e-9 || ((d - w) / (2.0 * std::f64::consts::PI)).fract().abs() > 1.0 - 1e-9);
    }
}
