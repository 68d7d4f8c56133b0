//! Triangle flow re-orientation: disjoint colored triangles where closed
//! circulation is admissible only when a triangle is monochromatic and its
//! directed edges agree with one rotation. The input carries flow magnitudes
//! with scrambled signs; the target re-orients them (or zeroes them out).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sample::{graph_split, Dataset, LabeledGraphSample, SplitSpec, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{canonical_orientation, Edge, EdgeKind, Graph};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const TRIANGLES: usize = 100;
const FILLERS: usize = 100;
const COLORS: usize = 3;
const TRI_DIRECTED_PROB: f64 = 0.6;
const FILLER_DIRECTED_PROB: f64 = 0.75;
const FILLER_BUDGET: usize = 20_000;

/// Triangle construction patterns.
#[derive(Clone, Copy, PartialEq)]
enum TriKind {
    /// Monochromatic, rotation-consistent directed edges: carries flow.
    Closed,
    /// Monochromatic but two directed edges oppose each other: blocked.
    Opposed,
    /// Mixed colors, directions like `Closed`: blocked by color.
    MixedColor,
}

struct TriEdge {
    edge: Edge,
    color: usize,
    /// +1 if the stored representative runs along the canonical rotation.
    along_rotation: f64,
}

/// Build one triangle over nodes (a, b, c) with rotation a->b->c->a.
fn build_triangle(nodes: [usize; 3], kind: TriKind, rng: &mut ChaCha8Rng) -> Vec<TriEdge> {
    let pairs = [
        (nodes[0], nodes[1]),
        (nodes[1], nodes[2]),
        (nodes[2], nodes[0]),
    ];
    let colors: [usize; 3] = match kind {
        TriKind::Closed | TriKind::Opposed => {
            let c = rng.gen_range(0..COLORS);
            [c, c, c]
        }
        TriKind::MixedColor => loop {
            let cs = [
                rng.gen_range(0..COLORS),
                rng.gen_range(0..COLORS),
                rng.gen_range(0..COLORS),
            ];
            if !(cs[0] == cs[1] && cs[1] == cs[2]) {
                break cs;
            }
        },
    };
    // directed flags per edge
    let directed: [bool; 3] = match kind {
        TriKind::Closed | TriKind::MixedColor => loop {
            let ds = [
                rng.gen::<f64>() < TRI_DIRECTED_PROB,
                rng.gen::<f64>() < TRI_DIRECTED_PROB,
                rng.gen::<f64>() < TRI_DIRECTED_PROB,
            ];
            if ds.iter().any(|&d| d) {
                break ds;
            }
        },
        TriKind::Opposed => [true, true, rng.gen::<f64>() < TRI_DIRECTED_PROB],
    };
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let (s, t) = pairs[i];
        // Opposed: the second directed edge runs against the rotation, which
        // blocks both traversal directions of the triangle.
        let against = kind == TriKind::Opposed && i == 1;
        let edge = if directed[i] {
            if against {
                Edge::directed(t, s)
            } else {
                Edge::directed(s, t)
            }
        } else {
            Edge::undirected(s, t)
        };
        // stored representative vs rotation direction
        let along = match edge.kind {
            EdgeKind::Directed => {
                if against {
                    -1.0
                } else {
                    1.0
                }
            }
            EdgeKind::Undirected => {
                // canonical storage sorts endpoints
                if s < t {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        out.push(TriEdge {
            edge,
            color: colors[i],
            along_rotation: along,
        });
    }
    out
}

/// Does a triangle with these (kind, color, rotation-alignment) triples admit
/// a closed monochromatic circulation?
fn admits_circulation(edges: &[(EdgeKind, usize, f64)]) -> bool {
    let mono = edges.windows(2).all(|w| w[0].1 == w[1].1);
    if !mono {
        return false;
    }
    // some rotation direction must agree with every directed edge
    for rotation in [1.0, -1.0] {
        let ok = edges.iter().all(|&(kind, _, along)| match kind {
            EdgeKind::Undirected => true,
            EdgeKind::Directed => along == rotation,
        });
        if ok {
            return true;
        }
    }
    false
}

fn gen_one(seed: u64) -> Result<LabeledGraphSample> {
    let mut rng = rng_from_seed(seed);
    let n = 3 * TRIANGLES;
    let mut edges: Vec<Edge> = Vec::with_capacity(3 * TRIANGLES + FILLERS);
    let mut colors: Vec<usize> = Vec::with_capacity(edges.capacity());
    let mut x = Vec::with_capacity(edges.capacity());
    let mut y = Vec::with_capacity(edges.capacity());

    let mut kinds = Vec::with_capacity(TRIANGLES);
    kinds.extend(std::iter::repeat(TriKind::Closed).take(TRIANGLES / 2));
    kinds.extend(std::iter::repeat(TriKind::Opposed).take(TRIANGLES / 4));
    kinds.extend(std::iter::repeat(TriKind::MixedColor).take(TRIANGLES / 4));

    for (t, &kind) in kinds.iter().enumerate() {
        let nodes = [3 * t, 3 * t + 1, 3 * t + 2];
        let tri = build_triangle(nodes, kind, &mut rng);
        let magnitude = rng.gen_range(0.5..1.5);
        for te in tri {
            let flow = match kind {
                TriKind::Closed => magnitude * te.along_rotation,
                _ => 0.0,
            };
            // input carries a magnitude everywhere, with a scrambled sign
            let input_mag = if kind == TriKind::Closed {
                magnitude
            } else {
                rng.gen_range(0.5..1.5)
            };
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            edges.push(te.edge);
            colors.push(te.color);
            x.push(sign * input_mag);
            y.push(flow);
        }
    }

    // filler edges between triangles; must not complete a triangle that
    // could carry a closed monochromatic circulation
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (neighbor, edge idx)
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.u].push((e.v, i));
        adjacency[e.v].push((e.u, i));
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < FILLERS {
        attempts += 1;
        if attempts > FILLER_BUDGET {
            return Err(Error::GenerationBudget(format!(
                "filler placement exhausted after {} attempts (seed {})",
                FILLER_BUDGET, seed
            )));
        }
        let ta = rng.gen_range(0..TRIANGLES);
        let tb = rng.gen_range(0..TRIANGLES);
        if ta == tb {
            continue;
        }
        let u = 3 * ta + rng.gen_range(0..3);
        let v = 3 * tb + rng.gen_range(0..3);
        if adjacency[u].iter().any(|&(w, _)| w == v) {
            continue;
        }
        let color = rng.gen_range(0..COLORS);
        let edge = if rng.gen::<f64>() < FILLER_DIRECTED_PROB {
            if rng.gen::<bool>() {
                Edge::directed(u, v)
            } else {
                Edge::directed(v, u)
            }
        } else {
            let (a, b) = (u.min(v), u.max(v));
            Edge::undirected(a, b)
        };
        // check every triangle the new edge would close
        let mut creates_closed = false;
        'outer: for &(w, e_uw) in &adjacency[u] {
            for &(w2, e_vw) in &adjacency[v] {
                if w != w2 {
                    continue;
                }
                // triangle (u, v, w) with rotation u -> v -> w -> u
                let along_new = match edge.kind {
                    EdgeKind::Directed => {
                        if edge.u == u {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    EdgeKind::Undirected => {
                        if u < v {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                let along_of = |idx: usize, from: usize, to: usize| -> f64 {
                    let e = edges[idx];
                    match e.kind {
                        EdgeKind::Directed => {
                            if e.u == from && e.v == to {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        EdgeKind::Undirected => {
                            if from < to {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                    }
                };
                let triple = [
                    (edge.kind, color, along_new),
                    (edges[e_vw].kind, colors[e_vw], along_of(e_vw, v, w)),
                    (edges[e_uw].kind, colors[e_uw], along_of(e_uw, w, u)),
                ];
                if admits_circulation(&triple) {
                    creates_closed = true;
                    break 'outer;
                }
            }
        }
        if creates_closed {
            continue;
        }
        let idx = edges.len();
        adjacency[u].push((v, idx));
        adjacency[v].push((u, idx));
        edges.push(edge);
        colors.push(color);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        x.push(sign * rng.gen_range(0.5..1.5));
        y.push(0.0);
        added += 1;
    }

    let m = edges.len();
    let graph = Graph::new(n, edges)?;
    let mut x_inv = Tensor::zeros(m, COLORS);
    for (e, &c) in colors.iter().enumerate() {
        x_inv.set(e, c, 1.0);
    }
    let orientation = canonical_orientation(&graph);
    Ok(LabeledGraphSample {
        graph,
        orientation,
        x_equ: Tensor::from_vec(m, 1, x),
        x_inv,
        y: Tensor::from_vec(m, 1, y),
        task: TaskKind::Regression,
        mask: vec![true; m],
        forced_train: None,
    })
}

pub fn gen_tri_flow(num_graphs: usize, seed: u64) -> Result<Dataset> {
    let samples: Result<Vec<LabeledGraphSample>> = (0..num_graphs)
        .map(|i| gen_one(derive_seed(seed, i as u64)))
        .collect();
    let (train, val, test) = graph_split(num_graphs, (0.7, 0.1, 0.2), derive_seed(seed, 1 << 40));
    Ok(Dataset {
        name: "tri-flow".into(),
        seed,
        samples: samples?,
        split: SplitSpec::Graphs { train, val, test },
        norm_constants: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_sign(s: &LabeledGraphSample, e: usize, from: usize, to: usize) -> f64 {
        let edge = s.graph.edge(e);
        if edge.u == from && edge.v == to {
            1.0
        } else {
            assert!(edge.u == to && edge.v == from);
            -1.0
        }
    }

    #[test]
    fn shape_and_type_counts() {
        let ds = gen_tri_flow(3, 21).unwrap();
        for s in &ds.samples {
            assert_eq!(s.graph.node_count(), 300);
            assert_eq!(s.edge_count(), 400);
            // 150 edges carry flow (50 closed triangles)
            let carrying = s.y.data.iter().filter(|&&v| v != 0.0).count();
            assert_eq!(carrying, 150);
        }
    }

    #[test]
    fn circulation_closes_on_flow_triangles() {
        let ds = gen_tri_flow(5, 4).unwrap();
        for s in &ds.samples {
            for t in 0..50 {
                let (a, b, c) = (3 * t, 3 * t + 1, 3 * t + 2);
                // find the three triangle edges by endpoints
                let find = |x: usize, y: usize| -> usize {
                    (0..s.edge_count())
                        .find(|&e| {
                            let ed = s.graph.edge(e);
                            (ed.u == x && ed.v == y) || (ed.u == y && ed.v == x)
                        })
                        .expect("triangle edge")
                };
                let e_ab = find(a, b);
                let e_bc = find(b, c);
                let e_ca = find(c, a);
                // flow expressed along the rotation a->b->c->a
                let f_ab = s.y.get(e_ab, 0) * rotation_sign(s, e_ab, a, b);
                let f_bc = s.y.get(e_bc, 0) * rotation_sign(s, e_bc, b, c);
                let f_ca = s.y.get(e_ca, 0) * rotation_sign(s, e_ca, c, a);
                // common magnitude, common sign: circulation sums to 3x and
                // every node has zero excess
                assert!((f_ab - f_bc).abs() < 1e-12 && (f_bc - f_ca).abs() < 1e-12);
                let total = f_ab + f_bc + f_ca;
                assert!((total.abs() - 3.0 * f_ab.abs()).abs() < 1e-12);
                assert!(f_ab.abs() >= 0.5 && f_ab.abs() <= 1.5);
                // input magnitude matches the target magnitude on these edges
                for &e in &[e_ab, e_bc, e_ca] {
                    assert!((s.x_equ.get(e, 0).abs() - s.y.get(e, 0).abs()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn directed_flow_follows_direction() {
        let ds = gen_tri_flow(5, 99).unwrap();
        for s in &ds.samples {
            for e in 0..s.edge_count() {
                if s.graph.edge(e).is_directed() && s.y.get(e, 0) != 0.0 {
                    assert!(
                        s.y.get(e, 0) > 0.0,
                        "directed edge {} carries flow against its direction",
                        e
                    );
                }
            }
        }
    }

    #[test]
    fn blocked_triangles_and_fillers_have_zero_target() {
        let ds = gen_tri_flow(2, 7).unwrap();
        for s in &ds.samples {
            for t in 50..100 {
                for e in 0..s.edge_count() {
                    let ed = s.graph.edge(e);
                    let in_tri = ed.u / 3 == t && ed.v / 3 == t;
                    if in_tri {
                        assert_eq!(s.y.get(e, 0), 0.0);
                    }
                }
            }
            // every edge still carries a non-zero input magnitude
            for e in 0..s.edge_count() {
                assert!(s.x_equ.get(e, 0).abs() >= 0.5);
            }
        }
    }
}
