//! Model architectures over edge signals: the two-modality message-passing
//! network and the baselines it is compared against.
//!
//! All weights act on real matrices. Complex convolution outputs are
//! flattened by concatenating real and imaginary parts; linear maps applied
//! before flattening project into half the nominal hidden width so the
//! concatenation restores it.

mod bundle;
mod checkpoint;
mod forward;
mod params;

pub use bundle::{build_bundle, ComplexOpHandles, OperatorBundle};
pub use checkpoint::{load_params, save_params};
pub use forward::{forward, model_forward, BoundParams, ForwardOutput};
pub use params::{init_params, random_params, ParamInit, Params};

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::sparse::SparseComplexMatrix;
use crate::{Error, Result};

/// Hidden width of the node-feature MLP used in cross-modality convolutions.
pub const NODE_MLP_HIDDEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Eign,
    Mlp,
    LineGraph,
    HodgeGnn,
    HodgeInv,
    HodgeDir,
    DirGnn,
    EignGcn,
    EignCheb,
}

impl Architecture {
    pub fn is_eign_family(&self) -> bool {
        matches!(
            self,
            Architecture::Eign | Architecture::DirGnn | Architecture::EignGcn | Architecture::EignCheb
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "eign" => Architecture::Eign,
            "mlp" => Architecture::Mlp,
            "linegraph" | "line-graph" => Architecture::LineGraph,
            "hodge" | "hodgegnn" | "hodge-gnn" => Architecture::HodgeGnn,
            "hodge+inv" | "hodgeinv" | "hodge-inv" => Architecture::HodgeInv,
            "hodge+dir" | "hodgedir" | "hodge-dir" => Architecture::HodgeDir,
            "dirgnn" | "dir-gnn" => Architecture::DirGnn,
            "eign-gcn" | "eigngcn" => Architecture::EignGcn,
            "eign-cheb" | "eigncheb" => Architecture::EignCheb,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown architecture {:?}",
                    other
                )))
            }
        })
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Architecture::Eign => "EIGN",
            Architecture::Mlp => "MLP",
            Architecture::LineGraph => "LineGraph",
            Architecture::HodgeGnn => "HodgeGNN",
            Architecture::HodgeInv => "Hodge+Inv",
            Architecture::HodgeDir => "Hodge+Dir",
            Architecture::DirGnn => "Dir-GNN",
            Architecture::EignGcn => "EIGN-GCN",
            Architecture::EignCheb => "EIGN-Cheb",
        };
        f.write_str(s)
    }
}

/// Chebyshev filter order used by the Chebyshev variant.
pub const CHEB_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub layers: usize,
    pub hidden: usize,
    /// Phase-shift parameter; `None` means `1/m` for each graph.
    pub q: Option<f64>,
    pub dropout: f64,
    /// Drop the per-edge fusion between the two modalities.
    pub no_fusion: bool,
    /// Drop the cross-modality convolution terms.
    pub no_fusion_conv: bool,
    /// Replace the node-feature MLPs with identities.
    pub no_node_mlp: bool,
    pub d_in_equ: usize,
    pub d_in_inv: usize,
    pub d_out_equ: usize,
    pub d_out_inv: usize,
}

impl ModelConfig {
    pub fn new(architecture: Architecture, layers: usize, hidden: usize) -> Self {
        ModelConfig {
            architecture,
            layers,
            hidden,
            q: None,
            dropout: 0.0,
            no_fusion: false,
            no_fusion_conv: false,
            no_node_mlp: false,
            d_in_equ: 0,
            d_in_inv: 1,
            d_out_equ: 0,
            d_out_inv: 1,
        }
    }

    pub fn with_dims(mut self, d_in_equ: usize, d_in_inv: usize, d_out_equ: usize, d_out_inv: usize) -> Self {
        self.d_in_equ = d_in_equ;
        self.d_in_inv = d_in_inv;
        self.d_out_equ = d_out_equ;
        self.d_out_inv = d_out_inv;
        self
    }

    /// Apply a named ablation switch.
    pub fn with_ablation(mut self, name: &str) -> Result<Self> {
        match name {
            "no_direction" | "no-direction" | "q0" => self.q = Some(0.0),
            "no_fusion" | "no-fusion" => self.no_fusion = true,
            "no_fusion_conv" | "no-fusion-conv" => self.no_fusion_conv = true,
            "no_node_mlp" | "no-h" | "no_h" => self.no_node_mlp = true,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown ablation {:?}",
                    other
                )))
            }
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::InvalidParameter("layers must be >= 1".into()));
        }
        if self.hidden == 0 || self.hidden % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "hidden width must be a positive even number, got {}",
                self.hidden
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if let Some(q) = self.q {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "q must be in [0, 1], got {}",
                    q
                )));
            }
        }
        if self.d_out_equ + self.d_out_inv == 0 {
            return Err(Error::InvalidParameter(
                "model needs at least one output head".into(),
            ));
        }
        Ok(())
    }

    /// Effective phase for a graph with `m` edges.
    pub fn effective_q(&self, m: usize) -> f64 {
        self.q.unwrap_or(1.0 / m.max(1) as f64)
    }

    /// Input widths after substituting a zero column for absent modalities.
    pub(crate) fn input_widths(&self) -> (usize, usize) {
        (self.d_in_equ.max(1), self.d_in_inv.max(1))
    }
}

/// Parameters of the 1-hidden-layer node MLP, for the eval-only convolution
/// helper below.
pub struct NodeMlp<'a> {
    pub w1: &'a Tensor,
    pub b1: &'a Tensor,
    pub w2: &'a Tensor,
    pub b2: &'a Tensor,
}

/// Evaluation-only boundary convolution `flatten(B_left^H h(B_right X))`.
///
/// `x` is real `m x d`; the complex product is carried explicitly and the
/// result is flattened to `m x 2d` as `[real | imag]`. The node transform `h`
/// acts on the flattened node signal (identity when absent). This mirrors
/// the taped path in [`forward`] and is used to cross-check it.
pub fn conv_forward(
    b_left: &SparseComplexMatrix,
    b_right: &SparseComplexMatrix,
    x: &Tensor,
    h: Option<&NodeMlp>,
) -> Result<Tensor> {
    use num_complex::Complex64;
    if b_right.cols() != x.rows {
        return Err(Error::Dimension(format!(
            "conv_forward: boundary has {} columns, signal has {} rows",
            b_right.cols(),
            x.rows
        )));
    }
    let d = x.cols;
    let xc: Vec<Complex64> = x.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let u = b_right.apply_dense(&xc, d)?;
    let n = b_right.rows();
    let v: Vec<Complex64> = match h {
        None => u,
        Some(h) => {
            // flatten node rows, run the MLP, unflatten
            let mut out = vec![Complex64::new(0.0, 0.0); n * d];
            for row in 0..n {
                let mut flat = vec![0.0; 2 * d];
                for k in 0..d {
                    flat[k] = u[row * d + k].re;
                    flat[d + k] = u[row * d + k].im;
                }
                let hidden = h.w1.cols;
                let mut a1 = vec![0.0; hidden];
                for j in 0..hidden {
                    let mut acc = h.b1.data[j];
                    for k in 0..2 * d {
                        acc += flat[k] * h.w1.data[k * hidden + j];
                    }
                    a1[j] = acc.max(0.0);
                }
                let mut a2 = vec![0.0; 2 * d];
                for j in 0..2 * d {
                    let mut acc = h.b2.data[j];
                    for k in 0..hidden {
                        acc += a1[k] * h.w2.data[k * 2 * d + j];
                    }
                    a2[j] = acc;
                }
                for k in 0..d {
                    out[row * d + k] = Complex64::new(a2[k], a2[d + k]);
                }
            }
            out
        }
    };
    let y = b_left.conj_transpose().apply_dense(&v, d)?;
    let m = b_left.cols();
    let mut flat = Tensor::zeros(m, 2 * d);
    for e in 0..m {
        for k in 0..d {
            flat.data[e * 2 * d + k] = y[e * d + k].re;
            flat.data[e * 2 * d + d + k] = y[e * d + k].im;
        }
    }
    Ok(flat)
}

/// Dropout keep-mask: entries are `1/(1-p)` with probability `1-p`, else 0.
pub fn dropout_keep_mask(
    len: usize,
    p: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<f64>> {
    use rand::Rng;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "dropout probability must be in [0, 1), got {}",
            p
        )));
    }
    if p == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - p);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{canonical_orientation, Edge, Graph};
    use crate::operators::{boundary, BoundaryKind};
    use crate::rng::rng_from_seed;

    #[test]
    fn config_validation() {
        let mut cfg = ModelConfig::new(Architecture::Eign, 2, 8);
        assert!(cfg.validate().is_ok());
        cfg.hidden = 7;
        assert!(cfg.validate().is_err());
        cfg.hidden = 8;
        cfg.dropout = 1.0;
        assert!(cfg.validate().is_err());
        cfg.dropout = 0.1;
        cfg.layers = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn effective_q_defaults_to_one_over_m() {
        let cfg = ModelConfig::new(Architecture::Eign, 2, 8);
        assert_eq!(cfg.effective_q(25), 1.0 / 25.0);
        let cfg = ModelConfig {
            q: Some(0.0),
            ..cfg
        };
        assert_eq!(cfg.effective_q(25), 0.0);
    }

    #[test]
    fn conv_forward_q0_equals_real_laplacian_product() {
        let g = Graph::new(
            4,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::directed(2, 3),
            ],
        )
        .unwrap();
        let o = canonical_orientation(&g);
        let b = boundary(&g, &o, BoundaryKind::equ(0.0));
        let x = Tensor::from_vec(3, 2, vec![1.0, -0.5, 0.2, 0.3, 2.0, -1.0]);
        let out = conv_forward(&b, &b, &x, None).unwrap();
        // real operator at q=0: imaginary half is zero
        let l = crate::operators::laplacian(&g, &o, crate::operators::LaplacianKind::EQU, 0.0);
        for e in 0..3 {
            for k in 0..2 {
                let mut want = 0.0;
                for e2 in 0..3 {
                    want += l.get(e, e2).re * x.get(e2, k);
                }
                assert!((out.get(e, k) - want).abs() < 1e-12);
                assert_eq!(out.get(e, 2 + k), 0.0);
            }
        }
    }

    #[test]
    fn conv_forward_single_undirected_edge_diagonal_two() {
        let g = Graph::new(2, vec![Edge::undirected(0, 1)]).unwrap();
        let o = canonical_orientation(&g);
        let b = boundary(&g, &o, BoundaryKind::equ(0.42));
        let x = Tensor::from_vec(1, 1, vec![1.0]);
        let out = conv_forward(&b, &b, &x, None).unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(out.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn dropout_mask_properties() {
        let mut rng = rng_from_seed(5);
        let mask = dropout_keep_mask(10_000, 0.1, &mut rng).unwrap();
        let kept = mask.iter().filter(|&&v| v > 0.0).count() as f64 / 10_000.0;
        assert!((kept - 0.9).abs() < 0.02);
        for &v in &mask {
            assert!(v == 0.0 || (v - 1.0 / 0.9).abs() < 1e-12);
        }
        assert_eq!(
            dropout_keep_mask(4, 0.0, &mut rng).unwrap(),
            vec![1.0, 1.0, 1.0, 1.0]
        );
        assert!(dropout_keep_mask(4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn tanh_is_odd_and_abs_is_even() {
        use crate::autodiff::Tape;
        let mut rng = rng_from_seed(11);
        use rand::Rng;
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-5.0..5.0);
            assert_eq!(x.tanh(), -(-x).tanh());
        }
        let mut tape = Tape::new();
        let t = tape.leaf(Tensor::scalar(-3.5));
        let a = tape.abs(t);
        assert_eq!(tape.value(a).data[0], 3.5);
    }
}
