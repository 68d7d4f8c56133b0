//! Longest-directed-cycle labeling: two components, each a consecutive ring
//! of the same size plus random chords, where only one ring is purely
//! directed. Positive labels mark that ring's edges.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sample::{graph_split, Dataset, LabeledGraphSample, SplitSpec, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{canonical_orientation, Edge, Graph};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const CHORD_DIRECTED_PROB: f64 = 0.25;
const COMPONENT_BUDGET: usize = 200;

/// All simple purely-directed cycles, grouped as (max length, edge sets of
/// the longest ones). Exhaustive DFS; intended for the small graphs here.
pub fn longest_directed_cycles(g: &Graph) -> (usize, Vec<BTreeSet<usize>>) {
    let n = g.node_count();
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (target, edge idx)
    for (i, e) in g.edges().iter().enumerate() {
        if e.is_directed() {
            out[e.u].push((e.v, i));
        }
    }
    let mut best_len = 0usize;
    let mut best: Vec<BTreeSet<usize>> = Vec::new();
    // enumerate cycles whose smallest node is the DFS root; each simple cycle
    // is found exactly once
    for root in 0..n {
        let mut stack: Vec<(usize, Vec<usize>, Vec<bool>)> =
            vec![(root, Vec::new(), vec![false; n])];
        while let Some((node, path, mut visited)) = stack.pop() {
            visited[node] = true;
            for &(next, edge_idx) in &out[node] {
                if next == root && !path.is_empty() {
                    let mut cycle: BTreeSet<usize> = path.iter().copied().collect();
                    cycle.insert(edge_idx);
                    let len = cycle.len();
                    if len > best_len {
                        best_len = len;
                        best.clear();
                    }
                    if len == best_len {
                        best.push(cycle);
                    }
                } else if next > root && !visited[next] {
                    let mut new_path = path.clone();
                    new_path.push(edge_idx);
                    stack.push((next, new_path, visited.clone()));
                }
            }
        }
    }
    // self-closing edge pairs handled above; single edges cannot cycle
    (best_len, best)
}

/// Count purely-directed consecutive cycles of length exactly `c` among the
/// given nodes.
fn directed_c_cycles(g: &Graph, c: usize) -> usize {
    let (len, cycles) = longest_directed_cycles(g);
    if len == c {
        cycles.len()
    } else if len > c {
        // longer cycle exists: also disqualifying for the construction
        usize::MAX
    } else {
        0
    }
}

/// Build one ring component over `nodes`, with `undirected_at` marking the
/// ring position stored as an undirected edge (if any).
fn build_component(
    edges: &mut Vec<Edge>,
    nodes: &[usize],
    undirected_at: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let c = nodes.len();
    let mut ring = Vec::with_capacity(c);
    let base = edges.len();
    for i in 0..c {
        let (a, b) = (nodes[i], nodes[(i + 1) % c]);
        let e = if undirected_at == Some(i) {
            Edge::undirected(a, b)
        } else {
            Edge::directed(a, b)
        };
        ring.push(base + i);
        edges.push(e);
    }
    // c random chords inside the component
    let mut added = 0;
    let mut pairs: BTreeSet<(usize, usize)> = edges
        .iter()
        .map(|e| (e.u.min(e.v), e.u.max(e.v)))
        .collect();
    while added < c {
        let a = nodes[rng.gen_range(0..c)];
        let b = nodes[rng.gen_range(0..c)];
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if pairs.contains(&key) {
            continue;
        }
        pairs.insert(key);
        let e = if rng.gen::<f64>() < CHORD_DIRECTED_PROB {
            if rng.gen::<bool>() {
                Edge::directed(a, b)
            } else {
                Edge::directed(b, a)
            }
        } else {
            Edge::undirected(a, b)
        };
        edges.push(e);
        added += 1;
    }
    ring
}

fn gen_one(seed: u64) -> Result<LabeledGraphSample> {
    let mut rng = rng_from_seed(seed);
    let c = rng.gen_range(6..=8usize);
    for _attempt in 0..COMPONENT_BUDGET {
        let nodes_a: Vec<usize> = (0..c).collect();
        let nodes_b: Vec<usize> = (c..2 * c).collect();
        let mut edges = Vec::new();
        let ring_a = build_component(&mut edges, &nodes_a, None, &mut rng);
        let undirected_pos = rng.gen_range(0..c);
        let _ring_b = build_component(&mut edges, &nodes_b, Some(undirected_pos), &mut rng);
        // bridge between the components
        let a = nodes_a[rng.gen_range(0..c)];
        let b = nodes_b[rng.gen_range(0..c)];
        let bridge = if rng.gen::<f64>() < CHORD_DIRECTED_PROB {
            if rng.gen::<bool>() {
                Edge::directed(a, b)
            } else {
                Edge::directed(b, a)
            }
        } else {
            Edge::undirected(a, b)
        };
        edges.push(bridge);

        let graph = Graph::new(2 * c, edges)?;
        // the planted directed ring must be the unique directed cycle of
        // length c, and nothing longer may exist
        if directed_c_cycles(&graph, c) != 1 {
            continue;
        }
        let m = graph.edge_count();
        let mut y = Tensor::zeros(m, 1);
        for &e in &ring_a {
            y.set(e, 0, 1.0);
        }
        let orientation = canonical_orientation(&graph);
        return Ok(LabeledGraphSample {
            graph,
            orientation,
            x_equ: Tensor::zeros(m, 0),
            x_inv: Tensor::from_vec(m, 1, vec![1.0; m]),
            y,
            task: TaskKind::BinaryClass,
            mask: vec![true; m],
            forced_train: None,
        });
    }
    Err(Error::GenerationBudget(format!(
        "no admissible ring graph within {} attempts (seed {})",
        COMPONENT_BUDGET, seed
    )))
}

pub fn gen_ld_cycles(num_graphs: usize, seed: u64) -> Result<Dataset> {
    let samples: Result<Vec<LabeledGraphSample>> = (0..num_graphs)
        .map(|i| gen_one(derive_seed(seed, i as u64)))
        .collect();
    let (train, val, test) = graph_split(num_graphs, (0.7, 0.1, 0.2), derive_seed(seed, 1 << 40));
    Ok(Dataset {
        name: "ld-cycles".into(),
        seed,
        samples: samples?,
        split: SplitSpec::Graphs { train, val, test },
        norm_constants: Default::default(),
    })
}
