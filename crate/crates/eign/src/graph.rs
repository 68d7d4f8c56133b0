//! Graph topology, edge orientations, and the transforms that act on them.
//!
//! An edge is either directed or undirected. Orientation-equivariant signals
//! are stored relative to a per-edge reference orientation; for directed
//! edges that reference always equals the edge direction (a
//! direction-consistent orientation), so only undirected edges may flip.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::sparse::SparseComplexMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Directed,
    Undirected,
}

/// One edge. For undirected edges `(u, v)` is a canonical representative of
/// the unordered pair with `u < v`; for directed edges it is the direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn directed(u: usize, v: usize) -> Self {
        Edge {
            u,
            v,
            kind: EdgeKind::Directed,
        }
    }

    pub fn undirected(u: usize, v: usize) -> Self {
        Edge {
            u,
            v,
            kind: EdgeKind::Undirected,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.kind == EdgeKind::Directed
    }
}

/// Which end of an (oriented) edge a node sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Tail,
    Head,
}

/// A graph with a stable edge order. The edge order defines the row/column
/// index space of every m-by-m operator built on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Validates and canonicalizes edges: no self-loops, undirected pairs
    /// stored with `u < v` and unique, directed ordered pairs unique.
    /// Anti-parallel directed edges `(u,v)` and `(v,u)` are allowed.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut canonical = Vec::with_capacity(edges.len());
        let mut seen_undirected = std::collections::HashSet::new();
        let mut seen_directed = std::collections::HashSet::new();
        for (i, e) in edges.into_iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::Graph(format!(
                    "edge {} endpoints ({}, {}) out of range for n = {}",
                    i, e.u, e.v, n
                )));
            }
            if e.u == e.v {
                return Err(Error::Graph(format!("edge {} is a self-loop at {}", i, e.u)));
            }
            let e = match e.kind {
                EdgeKind::Undirected if e.u > e.v => Edge::undirected(e.v, e.u),
                _ => e,
            };
            let fresh = match e.kind {
                EdgeKind::Undirected => seen_undirected.insert((e.u, e.v)),
                EdgeKind::Directed => seen_directed.insert((e.u, e.v)),
            };
            if !fresh {
                return Err(Error::Graph(format!(
                    "duplicate edge ({}, {}, {:?})",
                    e.u, e.v, e.kind
                )));
            }
            canonical.push(e);
        }
        Ok(Graph { n, edges: canonical })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// Per-node list of (edge index, end) under the given orientation.
    pub fn incidence(&self, o: &Orientation) -> Vec<Vec<(usize, End)>> {
        let mut inc = vec![Vec::new(); self.n];
        for (i, _) in self.edges.iter().enumerate() {
            let (s, t) = o.oriented(self, i);
            inc[s].push((i, End::Tail));
            inc[t].push((i, End::Head));
        }
        inc
    }

    /// Line-oriented text serialization: `n m` header then `u v D|U` per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            let k = if e.is_directed() { 'D' } else { 'U' };
            s.push_str(&format!("{} {} {}\n", e.u, e.v, k));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: "empty graph file".into(),
            })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "expected header `n m`".into(),
            });
        }
        let parse_usize = |s: &str, line: usize| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("not an integer: {:?}", s),
            })
        };
        let n = parse_usize(parts[0], lineno + 1)?;
        let m = parse_usize(parts[1], lineno + 1)?;
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected `u v D|U`".into(),
                });
            }
            let u = parse_usize(parts[0], lineno + 1)?;
            let v = parse_usize(parts[1], lineno + 1)?;
            let kind = match parts[2] {
                "D" => EdgeKind::Directed,
                "U" => EdgeKind::Undirected,
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("edge kind must be D or U, got {:?}", other),
                    })
                }
            };
            edges.push(Edge { u, v, kind });
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                message: format!("header says {} edges, found {}", m, edges.len()),
            });
        }
        Graph::new(n, edges)
    }
}

/// A per-edge reference orientation, stored as a flip bit against the edge's
/// stored representative. Directed edges are never flipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    flip: Vec<bool>,
}

impl Orientation {
    pub fn new(g: &Graph, flip: Vec<bool>) -> Result<Self> {
        if flip.len() != g.edge_count() {
            return Err(Error::Dimension(format!(
                "orientation has {} flips for {} edges",
                flip.len(),
                g.edge_count()
            )));
        }
        for (i, e) in g.edges().iter().enumerate() {
            if e.is_directed() && flip[i] {
                return Err(Error::NotDirectionConsistent(i));
            }
        }
        Ok(Orientation { flip })
    }

    pub fn flips(&self) -> &[bool] {
        &self.flip
    }

    pub fn is_flipped(&self, e: usize) -> bool {
        self.flip[e]
    }

    /// Endpoints of edge `e` in orientation order (tail, head).
    pub fn oriented(&self, g: &Graph, e: usize) -> (usize, usize) {
        let edge = g.edge(e);
        if self.flip[e] {
            (edge.v, edge.u)
        } else {
            (edge.u, edge.v)
        }
    }

    /// The orientation reached by applying `f` to `self`.
    pub fn apply(&self, f: &OrientationFlip) -> Orientation {
        let flip = self
            .flip
            .iter()
            .zip(f.signs())
            .map(|(&b, &s)| if s < 0 { !b } else { b })
            .collect();
        Orientation { flip }
    }
}

/// Orient every edge along its stored representative. The result is
/// direction-consistent: directed edges keep their direction.
pub fn canonical_orientation(g: &Graph) -> Orientation {
    Orientation {
        flip: vec![false; g.edge_count()],
    }
}

/// The diagonal +-1 transform between two direction-consistent orientations.
/// Directed edges always carry +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationFlip {
    sign: Vec<i8>,
}

impl OrientationFlip {
    pub fn new(g: &Graph, sign: Vec<i8>) -> Result<Self> {
        if sign.len() != g.edge_count() {
            return Err(Error::Dimension(format!(
                "flip has {} signs for {} edges",
                sign.len(),
                g.edge_count()
            )));
        }
        for (i, (&s, e)) in sign.iter().zip(g.edges()).enumerate() {
            if s != 1 && s != -1 {
                return Err(Error::InvalidParameter(format!(
                    "flip sign at edge {} must be +-1, got {}",
                    i, s
                )));
            }
            if e.is_directed() && s != 1 {
                return Err(Error::NotDirectionConsistent(i));
            }
        }
        Ok(OrientationFlip { sign })
    }

    pub fn identity(g: &Graph) -> Self {
        OrientationFlip {
            sign: vec![1; g.edge_count()],
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.sign
    }

    pub fn sign_f64(&self, e: usize) -> f64 {
        self.sign[e] as f64
    }

    /// Complex diagonal entries, handy when acting on complex matrices.
    pub fn sign_complex(&self, e: usize) -> Complex64 {
        Complex64::new(self.sign[e] as f64, 0.0)
    }
}

/// Uniform i.i.d. +-1 on undirected edges, +1 on directed edges.
pub fn random_orientation_flip(g: &Graph, seed: u64) -> OrientationFlip {
    let mut rng = rng_from_seed(seed);
    let sign = g
        .edges()
        .iter()
        .map(|e| {
            if e.is_directed() {
                1
            } else if rng.gen::<bool>() {
                1
            } else {
                -1
            }
        })
        .collect();
    OrientationFlip { sign }
}

/// Multiply row `e` of an equivariant signal matrix by `sign[e]`.
/// `x` is row-major with `m` rows of width `d`.
pub fn apply_flip(x: &[f64], m: usize, d: usize, f: &OrientationFlip) -> Result<Vec<f64>> {
    if x.len() != m * d {
        return Err(Error::Dimension(format!(
            "apply_flip: x has {} entries, expected {}x{}",
            x.len(),
            m,
            d
        )));
    }
    if f.sign.len() != m {
        return Err(Error::Dimension(format!(
            "apply_flip: flip over {} edges, signal has {} rows",
            f.sign.len(),
            m
        )));
    }
    let mut out = x.to_vec();
    for e in 0..m {
        if f.sign[e] < 0 {
            for k in 0..d {
                out[e * d + k] = -out[e * d + k];
            }
        }
    }
    Ok(out)
}

/// A bijection on edge indices. `perm[new] = old`: entry `i` of the permuted
/// edge list (or signal matrix) is entry `perm[i]` of the original.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePermutation {
    perm: Vec<usize>,
}

impl EdgePermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let m = perm.len();
        let mut seen = vec![false; m];
        for &p in &perm {
            if p >= m || seen[p] {
                return Err(Error::NotBijective(m));
            }
            seen[p] = true;
        }
        Ok(EdgePermutation { perm })
    }

    pub fn identity(m: usize) -> Self {
        EdgePermutation {
            perm: (0..m).collect(),
        }
    }

    pub fn random(m: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut rng = rng_from_seed(seed);
        // Fisher-Yates
        for i in (1..m).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        EdgePermutation { perm }
    }

    pub fn indices(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            inv[old] = new;
        }
        EdgePermutation { perm: inv }
    }

    /// Gather rows of a row-major `m x d` matrix.
    pub fn apply_rows(&self, x: &[f64], d: usize) -> Vec<f64> {
        let m = self.perm.len();
        debug_assert_eq!(x.len(), m * d);
        let mut out = vec![0.0; m * d];
        for (new, &old) in self.perm.iter().enumerate() {
            out[new * d..(new + 1) * d].copy_from_slice(&x[old * d..(old + 1) * d]);
        }
        out
    }
}

/// Reindex a graph, an orientation, and any number of edge-signal matrices
/// by the same permutation.
pub fn apply_edge_permutation(
    g: &Graph,
    o: &Orientation,
    signals: &[(&[f64], usize)],
    p: &EdgePermutation,
) -> Result<(Graph, Orientation, Vec<Vec<f64>>)> {
    let m = g.edge_count();
    if p.perm.len() != m {
        return Err(Error::NotBijective(m));
    }
    let edges = p.perm.iter().map(|&old| g.edge(old)).collect();
    let graph = Graph::new(g.node_count(), edges)?;
    let flip = p.perm.iter().map(|&old| o.is_flipped(old)).collect();
    let orientation = Orientation { flip };
    let permuted = signals
        .iter()
        .map(|&(x, d)| p.apply_rows(x, d))
        .collect();
    Ok((graph, orientation, permuted))
}

/// Line graph Laplacian `D - A` where `A[e,e'] = 1` iff `e != e'` share a node.
pub fn line_graph_laplacian(g: &Graph) -> SparseComplexMatrix {
    let m = g.edge_count();
    let o = canonical_orientation(g);
    let inc = g.incidence(&o);
    let mut adj = vec![std::collections::BTreeSet::new(); m];
    for node_edges in &inc {
        for (i, &(e, _)) in node_edges.iter().enumerate() {
            for &(e2, _) in &node_edges[i + 1..] {
                if e != e2 {
                    adj[e].insert(e2);
                    adj[e2].insert(e);
                }
            }
        }
    }
    let mut triplets = Vec::new();
    for (e, nbrs) in adj.iter().enumerate() {
        triplets.push((e, e, Complex64::new(nbrs.len() as f64, 0.0)));
        for &e2 in nbrs {
            triplets.push((e, e2, Complex64::new(-1.0, 0.0)));
        }
    }
    SparseComplexMatrix::from_triplets(m, m, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_graph() -> Graph {
        Graph::new(
            3,
            vec![Edge::directed(0, 1), Edge::undirected(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn canonical_orientation_is_all_false() {
        let g = path_graph();
        let o = canonical_orientation(&g);
        assert_eq!(o.flips(), &[false, false]);
        let empty = Graph::new(4, vec![]).unwrap();
        assert!(canonical_orientation(&empty).flips().is_empty());
        let undirected = Graph::new(
            4,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::undirected(2, 3),
            ],
        )
        .unwrap();
        let o = canonical_orientation(&undirected);
        assert!(Orientation::new(&undirected, o.flips().to_vec()).is_ok());
    }

    #[test]
    fn undirected_representative_is_sorted() {
        let g = Graph::new(3, vec![Edge::undirected(2, 0)]).unwrap();
        assert_eq!(g.edge(0), Edge::undirected(0, 2));
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(Graph::new(2, vec![Edge::directed(1, 1)]).is_err());
        assert!(Graph::new(3, vec![Edge::undirected(0, 1), Edge::undirected(1, 0)]).is_err());
        assert!(Graph::new(3, vec![Edge::directed(0, 1), Edge::directed(0, 1)]).is_err());
        // anti-parallel directed edges are fine
        assert!(Graph::new(3, vec![Edge::directed(0, 1), Edge::directed(1, 0)]).is_ok());
    }

    #[test]
    fn directed_edges_never_flip() {
        let g = path_graph();
        for seed in 0..20 {
            let f = random_orientation_flip(&g, seed);
            assert_eq!(f.signs()[0], 1);
        }
        let all_directed = Graph::new(3, vec![Edge::directed(0, 1), Edge::directed(1, 2)]).unwrap();
        let f = random_orientation_flip(&all_directed, 123);
        assert!(f.signs().iter().all(|&s| s == 1));
    }

    #[test]
    fn flip_fraction_near_half() {
        let edges: Vec<Edge> = (0..1000).map(|i| Edge::undirected(2 * i, 2 * i + 1)).collect();
        let g = Graph::new(2000, edges).unwrap();
        let f = random_orientation_flip(&g, 99);
        let frac = f.signs().iter().filter(|&&s| s < 0).count() as f64 / 1000.0;
        assert!((0.40..=0.60).contains(&frac), "flip fraction {}", frac);
    }

    #[test]
    fn flip_is_deterministic() {
        let g = path_graph();
        assert_eq!(
            random_orientation_flip(&g, 7).signs(),
            random_orientation_flip(&g, 7).signs()
        );
    }

    #[test]
    fn apply_flip_signs_rows() {
        let g = Graph::new(4, vec![Edge::undirected(0, 1), Edge::undirected(2, 3)]).unwrap();
        let f = OrientationFlip::new(&g, vec![-1, 1]).unwrap();
        let x = vec![1.3, 0.5];
        let y = apply_flip(&x, 2, 1, &f).unwrap();
        assert_eq!(y, vec![-1.3, 0.5]);
        // identity flip leaves x unchanged
        let id = OrientationFlip::identity(&g);
        assert_eq!(apply_flip(&x, 2, 1, &id).unwrap(), x);
        // involution
        assert_eq!(apply_flip(&y, 2, 1, &f).unwrap(), x);
    }

    #[test]
    fn permutation_swaps_rows_and_composes() {
        let g = Graph::new(3, vec![Edge::directed(0, 1), Edge::undirected(1, 2)]).unwrap();
        let o = canonical_orientation(&g);
        let p = EdgePermutation::new(vec![1, 0]).unwrap();
        let x = vec![1.0, 2.0];
        let (g2, _, sigs) = apply_edge_permutation(&g, &o, &[(&x, 1)], &p).unwrap();
        assert_eq!(sigs[0], vec![2.0, 1.0]);
        assert_eq!(g2.edge(0), Edge::undirected(1, 2));
        // identity keeps everything
        let id = EdgePermutation::identity(2);
        let (g3, _, sigs3) = apply_edge_permutation(&g, &o, &[(&x, 1)], &id).unwrap();
        assert_eq!(g3, g);
        assert_eq!(sigs3[0], x);
        // composing p then p^-1 restores the signal
        let back = p.inverse().apply_rows(&sigs[0], 1);
        assert_eq!(back, x);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(EdgePermutation::new(vec![0, 0]).is_err());
        assert!(EdgePermutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn line_graph_of_path_and_triangle() {
        // path 0-1-2: two edges sharing node 1
        let path = Graph::new(3, vec![Edge::undirected(0, 1), Edge::undirected(1, 2)]).unwrap();
        let l = line_graph_laplacian(&path);
        assert_eq!(l.get(0, 0).re, 1.0);
        assert_eq!(l.get(0, 1).re, -1.0);
        assert_eq!(l.get(1, 0).re, -1.0);
        assert_eq!(l.get(1, 1).re, 1.0);
        // single edge has no neighbors
        let single = Graph::new(2, vec![Edge::directed(0, 1)]).unwrap();
        assert_eq!(line_graph_laplacian(&single).nnz(), 0);
        // triangle: each edge adjacent to both others
        let tri = Graph::new(
            3,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::undirected(0, 2),
            ],
        )
        .unwrap();
        let l = line_graph_laplacian(&tri);
        for e in 0..3 {
            assert_eq!(l.get(e, e).re, 2.0);
            for e2 in 0..3 {
                if e != e2 {
                    assert_eq!(l.get(e, e2).re, -1.0);
                }
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let g = path_graph();
        let g2 = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn text_rejects_malformed() {
        assert!(Graph::from_text("").is_err());
        assert!(Graph::from_text("2 1\n0 1 X\n").is_err());
        assert!(Graph::from_text("2 2\n0 1 D\n").is_err());
    }

    proptest! {
        #[test]
        fn flip_involution_and_linearity(seed in 0u64..1000, m in 1usize..40) {
            let edges: Vec<Edge> = (0..m).map(|i| Edge::undirected(2 * i, 2 * i + 1)).collect();
            let g = Graph::new(2 * m, edges).unwrap();
            let f = random_orientation_flip(&g, seed);
            let x: Vec<f64> = (0..m).map(|i| i as f64 - 3.5).collect();
            let y = apply_flip(&x, m, 1, &f).unwrap();
            let z = apply_flip(&y, m, 1, &f).unwrap();
            prop_assert_eq!(&z, &x);
            // linearity: flip(2x) = 2 flip(x)
            let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let y2 = apply_flip(&x2, m, 1, &f).unwrap();
            for (a, b) in y2.iter().zip(&y) {
                prop_assert_eq!(*a, 2.0 * *b);
            }
        }

        #[test]
        fn permutation_commutes_with_flip(seed in 0u64..500, m in 2usize..30) {
            let edges: Vec<Edge> = (0..m).map(|i| Edge::undirected(2 * i, 2 * i + 1)).collect();
            let g = Graph::new(2 * m, edges).unwrap();
            let o = canonical_orientation(&g);
            let f = random_orientation_flip(&g, seed);
            let p = EdgePermutation::random(m, seed ^ 0xabcdef);
            let x: Vec<f64> = (0..m).map(|i| (i as f64).sin()).collect();

            // flip then permute
            let flipped = apply_flip(&x, m, 1, &f).unwrap();
            let (_, _, a) = apply_edge_permutation(&g, &o, &[(&flipped, 1)], &p).unwrap();
            // permute then apply the permuted flip
            let (g2, o2, b) = apply_edge_permutation(&g, &o, &[(&x, 1)], &p).unwrap();
            let f2 = OrientationFlip::new(
                &g2,
                p.indices().iter().map(|&old| f.signs()[old]).collect(),
            ).unwrap();
            let b = apply_flip(&b[0], m, 1, &f2).unwrap();
            prop_assert_eq!(&a[0], &b);
            let _ = o2;
        }
    }
}
