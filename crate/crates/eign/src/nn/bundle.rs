//! Per-graph operator caches built once and reused across epochs.

use std::rc::Rc;

use num_complex::Complex64;

use super::{Architecture, ModelConfig};
use crate::graph::{End, Graph, Orientation};
use crate::operators::{boundary, gcn_shift, laplacian, normalize, BoundaryKind, LaplacianKind};
use crate::sparse::{SparseComplexMatrix, SparseRealMatrix};
use crate::Result;

/// Real/imaginary split of one complex operator, plus its shape.
#[derive(Clone)]
pub struct ComplexOpHandles {
    pub re: Rc<SparseRealMatrix>,
    pub im: Rc<SparseRealMatrix>,
    pub rows: usize,
    pub cols: usize,
}

impl ComplexOpHandles {
    fn from_sparse(m: &SparseComplexMatrix) -> Self {
        let (re, im) = m.split_real_imag();
        ComplexOpHandles {
            re: Rc::new(re),
            im: Rc::new(im),
            rows: m.rows(),
            cols: m.cols(),
        }
    }
}

/// Everything a forward pass needs for one (graph, orientation, config).
pub struct OperatorBundle {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    /// Column-normalized phase boundaries for the two modalities.
    pub b_equ: Option<ComplexOpHandles>,
    pub b_inv: Option<ComplexOpHandles>,
    /// Classical signed edge Laplacian (direction-agnostic, unnormalized).
    pub l_equ_classical: Option<Rc<SparseRealMatrix>>,
    /// Line-graph Laplacian `D - A`.
    pub l_line: Option<Rc<SparseRealMatrix>>,
    /// Split boundaries (undirected / tail-side / head-side) per modality.
    pub dir_equ: Option<[Rc<SparseRealMatrix>; 3]>,
    pub dir_inv: Option<[Rc<SparseRealMatrix>; 3]>,
    /// GCN-style shifts `I - L/2` for the two same-modality Laplacians and
    /// the plain cross Laplacians (the identity term has no meaning across
    /// modalities): [equ, inv, equ->inv, inv->equ].
    pub gcn: Option<[ComplexOpHandles; 4]>,
    /// Normalized Laplacians for the Chebyshev variant: [equ, inv, equ->inv, inv->equ].
    pub cheb: Option<[ComplexOpHandles; 4]>,
}

fn normalized_boundary(g: &Graph, o: &Orientation, k: BoundaryKind) -> Result<SparseComplexMatrix> {
    normalize(&boundary(g, o, k), g, o, k)
}

fn real_from_complex(m: &SparseComplexMatrix) -> Rc<SparseRealMatrix> {
    let (re, _) = m.split_real_imag();
    Rc::new(re)
}

/// Split boundary: only undirected-edge entries (signed for Equ), or only
/// directed tail / head entries (unsigned magnitude 1; Equ keeps the -1 at
/// the tail).
fn split_boundary(g: &Graph, o: &Orientation, equ: bool, which: usize) -> SparseRealMatrix {
    let mut triplets = Vec::new();
    for e in 0..g.edge_count() {
        let (s, t) = o.oriented(g, e);
        let directed = g.edge(e).is_directed();
        let sign_at = |end: End| -> f64 {
            if equ && end == End::Tail {
                -1.0
            } else {
                1.0
            }
        };
        match which {
            0 if !directed => {
                triplets.push((s, e, sign_at(End::Tail)));
                triplets.push((t, e, sign_at(End::Head)));
            }
            1 if directed => triplets.push((s, e, sign_at(End::Tail))),
            2 if directed => triplets.push((t, e, sign_at(End::Head))),
            _ => {}
        }
    }
    SparseRealMatrix::from_triplets(g.node_count(), g.edge_count(), triplets)
}

/// Build the operator cache for one graph under one orientation.
pub fn build_bundle(cfg: &ModelConfig, g: &Graph, o: &Orientation) -> Result<OperatorBundle> {
    let m = g.edge_count();
    let n = g.node_count();
    let q = cfg.effective_q(m);
    let mut bundle = OperatorBundle {
        m,
        n,
        q,
        b_equ: None,
        b_inv: None,
        l_equ_classical: None,
        l_line: None,
        dir_equ: None,
        dir_inv: None,
        gcn: None,
        cheb: None,
    };
    match cfg.architecture {
        Architecture::Eign => {
            bundle.b_equ = Some(ComplexOpHandles::from_sparse(&normalized_boundary(
                g,
                o,
                BoundaryKind::equ(q),
            )?));
            bundle.b_inv = Some(ComplexOpHandles::from_sparse(&normalized_boundary(
                g,
                o,
                BoundaryKind::inv(q),
            )?));
        }
        Architecture::EignGcn => {
            let shifts = [
                gcn_shift(&laplacian(g, o, LaplacianKind::EQU, q))?,
                gcn_shift(&laplacian(g, o, LaplacianKind::INV, q))?,
                laplacian(g, o, LaplacianKind::EQU_TO_INV, q),
                laplacian(g, o, LaplacianKind::INV_TO_EQU, q),
            ];
            bundle.gcn = Some([
                ComplexOpHandles::from_sparse(&shifts[0]),
                ComplexOpHandles::from_sparse(&shifts[1]),
                ComplexOpHandles::from_sparse(&shifts[2]),
                ComplexOpHandles::from_sparse(&shifts[3]),
            ]);
        }
        Architecture::EignCheb => {
            // normalized Laplacians, assembled from normalized boundaries
            let be = normalized_boundary(g, o, BoundaryKind::equ(q))?;
            let bi = normalized_boundary(g, o, BoundaryKind::inv(q))?;
            let product = |left: &SparseComplexMatrix, right: &SparseComplexMatrix| {
                let lt = left.conj_transpose();
                // m x n times n x m, both sparse; go through dense columns of right
                let mut triplets = Vec::new();
                for e in 0..m {
                    // column e of right as sparse pairs
                    let mut col: Vec<(usize, Complex64)> = Vec::new();
                    for v in 0..n {
                        let val = right.get(v, e);
                        if val.norm() > 0.0 {
                            col.push((v, val));
                        }
                    }
                    for e2 in 0..m {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for &(v, val) in &col {
                            acc += lt.get(e2, v) * val;
                        }
                        if acc.norm() > 0.0 {
                            triplets.push((e2, e, acc));
                        }
                    }
                }
                SparseComplexMatrix::from_triplets(m, m, triplets)
            };
            let l_equ = product(&be, &be);
            let l_inv = product(&bi, &bi);
            let l_e2i = product(&bi, &be);
            let l_i2e = product(&be, &bi);
            bundle.cheb = Some([
                ComplexOpHandles::from_sparse(&l_equ),
                ComplexOpHandles::from_sparse(&l_inv),
                ComplexOpHandles::from_sparse(&l_e2i),
                ComplexOpHandles::from_sparse(&l_i2e),
            ]);
        }
        Architecture::DirGnn => {
            bundle.dir_equ = Some([
                Rc::new(split_boundary(g, o, true, 0)),
                Rc::new(split_boundary(g, o, true, 1)),
                Rc::new(split_boundary(g, o, true, 2)),
            ]);
            bundle.dir_inv = Some([
                Rc::new(split_boundary(g, o, false, 0)),
                Rc::new(split_boundary(g, o, false, 1)),
                Rc::new(split_boundary(g, o, false, 2)),
            ]);
        }
        Architecture::HodgeGnn | Architecture::HodgeInv | Architecture::HodgeDir => {
            bundle.l_equ_classical =
                Some(real_from_complex(&laplacian(g, o, LaplacianKind::EQU, 0.0)));
        }
        Architecture::LineGraph => {
            bundle.l_line = Some(real_from_complex(&crate::graph::line_graph_laplacian(g)));
        }
        Architecture::Mlp => {}
    }
    Ok(bundle)
}
