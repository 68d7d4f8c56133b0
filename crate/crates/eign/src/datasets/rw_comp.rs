//! Random-walk completion: directed random graphs, a random walk driven by
//! per-edge transition probabilities, and the task of recovering the hidden
//! part of the walk from a revealed fraction.

use rand::Rng;

use super::sample::{graph_split, Dataset, LabeledGraphSample, SplitSpec, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{canonical_orientation, Edge, Graph};
use crate::rng::{derive_seed, rng_from_seed};
use crate::Result;

const NODES: usize = 50;
const EXPECTED_EDGES: f64 = 200.0;
const WALK_CAP: usize = 100;
const REVEAL_FRACTION: f64 = 0.2;

fn gen_one(seed: u64) -> LabeledGraphSample {
    let mut rng = rng_from_seed(seed);
    // directed edge probability chosen so the expected edge count is fixed
    let p = EXPECTED_EDGES / (NODES * (NODES - 1)) as f64;
    let mut edges = Vec::new();
    for u in 0..NODES {
        for v in 0..NODES {
            if u != v && rng.gen::<f64>() < p {
                edges.push(Edge::directed(u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge::directed(0, 1));
    }
    let graph = Graph::new(NODES, edges).expect("generated digraph is valid");
    let m = graph.edge_count();

    // per-edge weights, row-normalized into transition probabilities
    let weights: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); NODES];
    for (e, edge) in graph.edges().iter().enumerate() {
        out_edges[edge.u].push(e);
    }
    let mut probs = vec![0.0; m];
    for node_edges in &out_edges {
        let total: f64 = node_edges.iter().map(|&e| weights[e]).sum();
        if total > 0.0 {
            for &e in node_edges {
                probs[e] = weights[e] / total;
            }
        }
    }

    // random walk up to the cap; stops early at a sink
    let mut traversed = vec![false; m];
    let mut node = rng.gen_range(0..NODES);
    for _ in 0..WALK_CAP {
        let candidates = &out_edges[node];
        if candidates.is_empty() {
            break;
        }
        let mut draw = rng.gen::<f64>();
        let mut chosen = candidates[candidates.len() - 1];
        for &e in candidates {
            draw -= probs[e];
            if draw <= 0.0 {
                chosen = e;
                break;
            }
        }
        traversed[chosen] = true;
        node = graph.edge(chosen).v;
    }

    let revealed: Vec<bool> = traversed
        .iter()
        .map(|&t| t && rng.gen::<f64>() < REVEAL_FRACTION)
        .collect();

    let mut x_inv = Tensor::zeros(m, 2);
    let mut y = Tensor::zeros(m, 1);
    for e in 0..m {
        x_inv.set(e, 0, if revealed[e] { 1.0 } else { 0.0 });
        x_inv.set(e, 1, probs[e]);
        y.set(e, 0, if traversed[e] && !revealed[e] { 1.0 } else { 0.0 });
    }
    let orientation = canonical_orientation(&graph);
    LabeledGraphSample {
        graph,
        orientation,
        x_equ: Tensor::zeros(m, 0),
        x_inv,
        y,
        task: TaskKind::BinaryClass,
        mask: vec![true; m],
        forced_train: None,
    }
}

pub fn gen_rw_comp(num_graphs: usize, seed: u64) -> Result<Dataset> {
    let samples: Vec<LabeledGraphSample> = (0..num_graphs)
        .map(|i| gen_one(derive_seed(seed, i as u64)))
        .collect();
    let (train, val, test) = graph_split(num_graphs, (0.7, 0.1, 0.2), derive_seed(seed, 1 << 40));
    Ok(Dataset {
        name: "rw-comp".into(),
        seed,
        samples,
        split: SplitSpec::Graphs { train, val, test },
        norm_constants: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_counts_and_probabilities() {
        let ds = gen_rw_comp(30, 11).unwrap();
        let mean_m: f64 =
            ds.samples.iter().map(|s| s.edge_count() as f64).sum::<f64>() / ds.samples.len() as f64;
        assert!((150.0..=250.0).contains(&mean_m), "mean edges {}", mean_m);
        // transition probabilities sum to 1 per node with outgoing edges
        let s = &ds.samples[0];
        let mut per_node = vec![0.0; s.graph.node_count()];
        for (e, edge) in s.graph.edges().iter().enumerate() {
            per_node[edge.u] += s.x_inv.get(e, 1);
        }
        for total in per_node {
            assert!(total.abs() < 1e-9 || (total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn revealed_fraction_near_one_fifth() {
        let ds = gen_rw_comp(300, 5).unwrap();
        let mut revealed = 0usize;
        let mut traversed = 0usize;
        for s in &ds.samples {
            for e in 0..s.edge_count() {
                let is_revealed = s.x_inv.get(e, 0) > 0.5;
                let is_hidden_walk = s.y.get(e, 0) > 0.5;
                if is_revealed {
                    revealed += 1;
                    traversed += 1;
                } else if is_hidden_walk {
                    traversed += 1;
                }
            }
        }
        let frac = revealed as f64 / traversed as f64;
        assert!((0.18..=0.22).contains(&frac), "revealed fraction {}", frac);
    }

    #[test]
    fn deterministic_and_all_edges_directed() {
        let a = gen_rw_comp(3, 42).unwrap();
        let b = gen_rw_comp(3, 42).unwrap();
        for (s1, s2) in a.samples.iter().zip(&b.samples) {
            assert_eq!(s1.graph, s2.graph);
            assert_eq!(s1.y.data, s2.y.data);
            assert!(s1.graph.edges().iter().all(|e| e.is_directed()));
        }
    }

    #[test]
    fn revealed_edges_are_never_positive() {
        let ds = gen_rw_comp(20, 8).unwrap();
        for s in &ds.samples {
            for e in 0..s.edge_count() {
                if s.x_inv.get(e, 0) > 0.5 {
                    assert_eq!(s.y.get(e, 0), 0.0);
                }
            }
        }
    }
}
