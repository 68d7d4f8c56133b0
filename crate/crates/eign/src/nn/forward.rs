//! Taped forward passes for every architecture.

use std::collections::HashMap;
use std::rc::Rc;

use rand_chacha::ChaCha8Rng;

use super::bundle::{ComplexOpHandles, OperatorBundle};
use super::params::Params;
use super::{dropout_keep_mask, Architecture, ModelConfig, CHEB_ORDER};
use crate::autodiff::{Tape, Tensor, TensorRef};
use crate::graph::{Graph, Orientation};
use crate::sparse::SparseRealMatrix;
use crate::{Error, Result};

/// Tape handles for every parameter, keyed by schema name.
pub struct BoundParams {
    ids: HashMap<String, TensorRef>,
}

impl BoundParams {
    /// Register every parameter as a tape leaf.
    pub fn bind(params: &Params, tape: &mut Tape) -> BoundParams {
        let ids = params
            .entries()
            .iter()
            .map(|(name, t)| (name.clone(), tape.leaf(t.clone())))
            .collect();
        BoundParams { ids }
    }

    pub fn id(&self, name: &str) -> TensorRef {
        *self
            .ids
            .get(name)
            .unwrap_or_else(|| panic!("missing bound parameter {:?}", name))
    }

    pub fn ids(&self) -> &HashMap<String, TensorRef> {
        &self.ids
    }
}

/// Outputs of one forward pass, plus per-layer equivariant states for the
/// zero-propagation check.
pub struct ForwardOutput {
    pub y_equ: Option<TensorRef>,
    pub y_inv: Option<TensorRef>,
    pub z_equ_layers: Vec<TensorRef>,
    pub h_equ_layers: Vec<TensorRef>,
}

/// A complex taped signal as a (real, imag) pair; `im == None` means zero.
#[derive(Clone, Copy)]
struct Cx {
    re: TensorRef,
    im: Option<TensorRef>,
}

fn complex_spmm(tape: &mut Tape, op: &ComplexOpHandles, x: Cx) -> Cx {
    let re_re = tape.spmm(op.re.clone(), x.re);
    let im_re = tape.spmm(op.im.clone(), x.re);
    match x.im {
        None => Cx {
            re: re_re,
            im: Some(im_re),
        },
        Some(xi) => {
            let re_im = tape.spmm(op.im.clone(), xi);
            let neg = tape.scale(re_im, -1.0);
            let re = tape.add(re_re, neg);
            let im_im = tape.spmm(op.re.clone(), xi);
            let im = tape.add(im_re, im_im);
            Cx { re, im: Some(im) }
        }
    }
}

/// `B_left^H v` for a complex node signal `v`.
fn conj_transpose_apply(tape: &mut Tape, op: &ComplexOpHandles, v: Cx) -> Cx {
    let re_re = tape.spmm_t(op.re.clone(), v.re);
    let im_via_re = tape.spmm_t(op.im.clone(), v.re);
    let neg_im = tape.scale(im_via_re, -1.0);
    match v.im {
        None => Cx {
            re: re_re,
            im: Some(neg_im),
        },
        Some(vi) => {
            let im_im = tape.spmm_t(op.im.clone(), vi);
            let re = tape.add(re_re, im_im);
            let re_im = tape.spmm_t(op.re.clone(), vi);
            let im = tape.add(re_im, neg_im);
            Cx { re, im: Some(im) }
        }
    }
}

/// Project each half with a shared weight and flatten: `[re W | im W]`.
fn project_halves(tape: &mut Tape, y: Cx, w: TensorRef) -> TensorRef {
    let re = tape.matmul(y.re, w);
    let im = match y.im {
        Some(i) => tape.matmul(i, w),
        None => {
            let rows = tape.value(re).rows;
            let cols = tape.value(re).cols;
            tape.leaf(Tensor::zeros(rows, cols))
        }
    };
    tape.hcat(re, im)
}

struct NodeMlpRefs {
    w1: TensorRef,
    b1: TensorRef,
    w2: TensorRef,
    b2: TensorRef,
}

fn node_mlp(tape: &mut Tape, h: &NodeMlpRefs, x: TensorRef) -> TensorRef {
    let z1 = tape.matmul(x, h.w1);
    let z1 = tape.add_row_bias(z1, h.b1);
    let a1 = tape.relu(z1);
    let z2 = tape.matmul(a1, h.w2);
    tape.add_row_bias(z2, h.b2)
}

/// One boundary convolution `B_left^H h(B_right X)` on real input `x`.
fn boundary_conv(
    tape: &mut Tape,
    b_left: &ComplexOpHandles,
    b_right: &ComplexOpHandles,
    x: TensorRef,
    h: Option<&NodeMlpRefs>,
) -> Cx {
    let d = tape.value(x).cols;
    let u = complex_spmm(tape, b_right, Cx { re: x, im: None });
    let v = match h {
        None => u,
        Some(h) => {
            let u_im = u.im.expect("boundary product always carries an imag half");
            let cat = tape.hcat(u.re, u_im);
            let out = node_mlp(tape, h, cat);
            Cx {
                re: tape.narrow(out, 0, d),
                im: Some(tape.narrow(out, d, d)),
            }
        }
    };
    conj_transpose_apply(tape, b_left, v)
}

fn maybe_dropout(
    tape: &mut Tape,
    x: TensorRef,
    p: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<TensorRef> {
    match rng {
        Some(r) if p > 0.0 => {
            let len = tape.value(x).data.len();
            let mask = dropout_keep_mask(len, p, r)?;
            Ok(tape.mul_mask(x, mask))
        }
        _ => Ok(x),
    }
}

/// Substitute an all-zero column when a modality has no features.
fn prepare_input(m: usize, x: &Tensor) -> Tensor {
    if x.cols == 0 {
        Tensor::zeros(m, 1)
    } else {
        x.clone()
    }
}

/// Run one forward pass. `dropout_rng` enables training mode; evaluation
/// passes `None` and is deterministic.
pub fn forward(
    cfg: &ModelConfig,
    bound: &BoundParams,
    bundle: &OperatorBundle,
    tape: &mut Tape,
    x_equ: &Tensor,
    x_inv: &Tensor,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput> {
    cfg.validate()?;
    let m = bundle.m;
    if x_equ.rows != m || x_inv.rows != m {
        return Err(Error::Dimension(format!(
            "inputs have {} / {} rows for a graph with {} edges",
            x_equ.rows, x_inv.rows, m
        )));
    }
    if x_equ.cols != cfg.d_in_equ || x_inv.cols != cfg.d_in_inv {
        return Err(Error::Dimension(format!(
            "inputs are {} / {} wide, config expects {} / {}",
            x_equ.cols, x_inv.cols, cfg.d_in_equ, cfg.d_in_inv
        )));
    }

    match cfg.architecture {
        Architecture::Mlp | Architecture::LineGraph => {
            forward_concat_stream(cfg, bound, bundle, tape, x_equ, x_inv, &mut dropout_rng)
        }
        Architecture::HodgeGnn | Architecture::HodgeInv | Architecture::HodgeDir => {
            forward_hodge(cfg, bound, bundle, tape, x_equ, x_inv, &mut dropout_rng)
        }
        _ => forward_eign_family(cfg, bound, bundle, tape, x_equ, x_inv, &mut dropout_rng),
    }
}

fn concat_features(tape: &mut Tape, m: usize, x_equ: &Tensor, x_inv: &Tensor) -> TensorRef {
    if x_equ.cols == 0 && x_inv.cols == 0 {
        tape.leaf(Tensor::zeros(m, 1))
    } else if x_equ.cols == 0 {
        tape.leaf(x_inv.clone())
    } else if x_inv.cols == 0 {
        tape.leaf(x_equ.clone())
    } else {
        let a = tape.leaf(x_equ.clone());
        let b = tape.leaf(x_inv.clone());
        tape.hcat(a, b)
    }
}

fn split_heads(
    tape: &mut Tape,
    cfg: &ModelConfig,
    out: TensorRef,
) -> (Option<TensorRef>, Option<TensorRef>) {
    let y_equ = if cfg.d_out_equ > 0 {
        Some(tape.narrow(out, 0, cfg.d_out_equ))
    } else {
        None
    };
    let y_inv = if cfg.d_out_inv > 0 {
        Some(tape.narrow(out, cfg.d_out_equ, cfg.d_out_inv))
    } else {
        None
    };
    (y_equ, y_inv)
}

/// MLP and line-graph convolution baselines: both concatenate the two
/// modalities and treat them uniformly.
fn forward_concat_stream(
    cfg: &ModelConfig,
    bound: &BoundParams,
    bundle: &OperatorBundle,
    tape: &mut Tape,
    x_equ: &Tensor,
    x_inv: &Tensor,
    dropout_rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput> {
    let mut h = concat_features(tape, bundle.m, x_equ, x_inv);
    for l in 0..cfg.layers {
        let conv_in = match cfg.architecture {
            Architecture::LineGraph => {
                let lap = bundle
                    .l_line
                    .as_ref()
                    .expect("line-graph bundle missing")
                    .clone();
                tape.spmm(lap, h)
            }
            _ => h,
        };
        let z = tape.matmul(conv_in, bound.id(&format!("l{}.w", l)));
        let z = tape.add_row_bias(z, bound.id(&format!("l{}.w.bias", l)));
        let z = tape.relu(z);
        h = maybe_dropout(tape, z, cfg.dropout, dropout_rng)?;
    }
    let out = tape.matmul(h, bound.id("out.w"));
    let out = tape.add_row_bias(out, bound.id("out.w.bias"));
    let (y_equ, y_inv) = split_heads(tape, cfg, out);
    Ok(ForwardOutput {
        y_equ,
        y_inv,
        z_equ_layers: Vec::new(),
        h_equ_layers: Vec::new(),
    })
}

/// Signed-Laplacian single-stream baselines. Fully bias-free; the activation
/// is odd (tanh) except for the direction-aware variant, which uses relu and
/// deliberately gives up sign symmetry.
fn forward_hodge(
    cfg: &ModelConfig,
    bound: &BoundParams,
    bundle: &OperatorBundle,
    tape: &mut Tape,
    x_equ: &Tensor,
    x_inv: &Tensor,
    dropout_rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput> {
    let m = bundle.m;
    let mut h = if cfg.architecture == Architecture::HodgeInv {
        concat_features(tape, m, x_equ, x_inv)
    } else {
        tape.leaf(prepare_input(m, x_equ))
    };
    let lap = bundle
        .l_equ_classical
        .as_ref()
        .expect("signed-Laplacian bundle missing")
        .clone();
    for l in 0..cfg.layers {
        let conv = tape.spmm(lap.clone(), h);
        let z = tape.matmul(conv, bound.id(&format!("l{}.w", l)));
        let z = if cfg.architecture == Architecture::HodgeDir {
            tape.relu(z)
        } else {
            tape.tanh(z)
        };
        h = maybe_dropout(tape, z, cfg.dropout, dropout_rng)?;
    }
    let out = tape.matmul(h, bound.id("out.w"));
    let (y_equ, y_inv) = split_heads(tape, cfg, out);
    Ok(ForwardOutput {
        y_equ,
        y_inv,
        z_equ_layers: Vec::new(),
        h_equ_layers: Vec::new(),
    })
}

/// Gather the per-layer cross-modality node MLP handles if configured.
fn mlp_refs(cfg: &ModelConfig, bound: &BoundParams, l: usize, which: &str) -> Option<NodeMlpRefs> {
    if cfg.no_node_mlp
        || cfg.no_fusion_conv
        || cfg.architecture == Architecture::EignGcn
        || cfg.architecture == Architecture::EignCheb
    {
        return None;
    }
    Some(NodeMlpRefs {
        w1: bound.id(&format!("l{}.h_{}.w1", l, which)),
        b1: bound.id(&format!("l{}.h_{}.w1.bias", l, which)),
        w2: bound.id(&format!("l{}.h_{}.w2", l, which)),
        b2: bound.id(&format!("l{}.h_{}.w2.bias", l, which)),
    })
}

/// Chebyshev term stack on the tape. `first` is applied for the second term;
/// `rest` for the higher orders. When `skip_base` is set the raw input does
/// not enter the stack (cross-modality filters), and the recursion treats it
/// as zero.
fn cheb_terms(
    tape: &mut Tape,
    first: &ComplexOpHandles,
    rest: &ComplexOpHandles,
    x: Cx,
    skip_base: bool,
) -> Vec<Cx> {
    let mut kept = Vec::new();
    let c2 = complex_spmm(tape, first, x);
    if !skip_base {
        kept.push(x);
    }
    kept.push(c2);
    let mut prev2: Option<Cx> = if skip_base { None } else { Some(x) };
    let mut prev1 = c2;
    let orders = if skip_base { CHEB_ORDER - 1 } else { CHEB_ORDER };
    while kept.len() < orders {
        let lp = complex_spmm(tape, rest, prev1);
        let re2 = tape.scale(lp.re, 2.0);
        let im2 = tape.scale(lp.im.expect("complex product has imag"), 2.0);
        let next = match prev2 {
            Some(p2) => {
                let re = tape.sub(re2, p2.re);
                let im = match p2.im {
                    Some(pim) => tape.sub(im2, pim),
                    None => im2,
                };
                Cx { re, im: Some(im) }
            }
            None => Cx {
                re: re2,
                im: Some(im2),
            },
        };
        kept.push(next);
        prev2 = Some(prev1);
        prev1 = next;
    }
    kept
}

/// Sum of real split-boundary convolutions with per-operator weights.
fn dir_conv_term(
    tape: &mut Tape,
    bound: &BoundParams,
    left: &[Rc<SparseRealMatrix>; 3],
    right: &[Rc<SparseRealMatrix>; 3],
    x: TensorRef,
    h: Option<&NodeMlpRefs>,
    name: &str,
    l: usize,
) -> TensorRef {
    let mut acc: Option<TensorRef> = None;
    for j in 0..3 {
        let u = tape.spmm(right[j].clone(), x);
        let v = match h {
            Some(h) => node_mlp(tape, h, u),
            None => u,
        };
        let y = tape.spmm_t(left[j].clone(), v);
        let term = tape.matmul(y, bound.id(&format!("l{}.{}.{}.0", l, name, j)));
        acc = Some(match acc {
            Some(a) => tape.add(a, term),
            None => term,
        });
    }
    acc.expect("three split operators")
}

fn forward_eign_family(
    cfg: &ModelConfig,
    bound: &BoundParams,
    bundle: &OperatorBundle,
    tape: &mut Tape,
    x_equ: &Tensor,
    x_inv: &Tensor,
    dropout_rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<ForwardOutput> {
    let m = bundle.m;
    let mut h_equ = tape.leaf(prepare_input(m, x_equ));
    let mut h_inv = tape.leaf(prepare_input(m, x_inv));
    let mut z_equ_layers = Vec::new();
    let mut h_equ_layers = Vec::new();

    for l in 0..cfg.layers {
        // --- convolution terms feeding the equivariant branch (no biases) ---
        let mut equ_terms: Vec<TensorRef> = Vec::new();
        let mut inv_terms: Vec<TensorRef> = Vec::new();
        match cfg.architecture {
            Architecture::Eign => {
                let be = bundle.b_equ.as_ref().expect("phase boundary missing");
                let bi = bundle.b_inv.as_ref().expect("phase boundary missing");
                let y = boundary_conv(tape, be, be, h_equ, None);
                equ_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ee.0.0", l))));
                if !cfg.no_fusion_conv {
                    let h = mlp_refs(cfg, bound, l, "ie");
                    let y = boundary_conv(tape, be, bi, h_inv, h.as_ref());
                    equ_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ie.0.0", l))));
                }
                let y = boundary_conv(tape, bi, bi, h_inv, None);
                inv_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ii.0.0", l))));
                if !cfg.no_fusion_conv {
                    let h = mlp_refs(cfg, bound, l, "ei");
                    let y = boundary_conv(tape, bi, be, h_equ, h.as_ref());
                    inv_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ei.0.0", l))));
                }
            }
            Architecture::EignGcn => {
                let ops = bundle.gcn.as_ref().expect("gcn bundle missing");
                let y = complex_spmm(tape, &ops[0], Cx { re: h_equ, im: None });
                equ_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ee.0.0", l))));
                if !cfg.no_fusion_conv {
                    let y = complex_spmm(tape, &ops[3], Cx { re: h_inv, im: None });
                    equ_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ie.0.0", l))));
                }
                let y = complex_spmm(tape, &ops[1], Cx { re: h_inv, im: None });
                inv_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ii.0.0", l))));
                if !cfg.no_fusion_conv {
                    let y = complex_spmm(tape, &ops[2], Cx { re: h_equ, im: None });
                    inv_terms.push(project_halves(tape, y, bound.id(&format!("l{}.w_ei.0.0", l))));
                }
            }
            Architecture::EignCheb => {
                let ops = bundle.cheb.as_ref().expect("cheb bundle missing");
                let xe = Cx { re: h_equ, im: None };
                let xi = Cx { re: h_inv, im: None };
                for (c, term) in cheb_terms(tape, &ops[0], &ops[0], xe, false).into_iter().enumerate() {
                    equ_terms.push(project_halves(
                        tape,
                        term,
                        bound.id(&format!("l{}.w_ee.0.{}", l, c)),
                    ));
                }
                if !cfg.no_fusion_conv {
                    for (c, term) in cheb_terms(tape, &ops[3], &ops[0], xi, true).into_iter().enumerate() {
                        equ_terms.push(project_halves(
                            tape,
                            term,
                            bound.id(&format!("l{}.w_ie.0.{}", l, c)),
                        ));
                    }
                }
                for (c, term) in cheb_terms(tape, &ops[1], &ops[1], xi, false).into_iter().enumerate() {
                    inv_terms.push(project_halves(
                        tape,
                        term,
                        bound.id(&format!("l{}.w_ii.0.{}", l, c)),
                    ));
                }
                if !cfg.no_fusion_conv {
                    for (c, term) in cheb_terms(tape, &ops[2], &ops[1], xe, true).into_iter().enumerate() {
                        inv_terms.push(project_halves(
                            tape,
                            term,
                            bound.id(&format!("l{}.w_ei.0.{}", l, c)),
                        ));
                    }
                }
            }
            Architecture::DirGnn => {
                let de = bundle.dir_equ.as_ref().expect("split boundaries missing");
                let di = bundle.dir_inv.as_ref().expect("split boundaries missing");
                equ_terms.push(dir_conv_term(tape, bound, de, de, h_equ, None, "w_ee", l));
                if !cfg.no_fusion_conv {
                    let h = mlp_refs(cfg, bound, l, "ie");
                    equ_terms.push(dir_conv_term(
                        tape, bound, de, di, h_inv, h.as_ref(), "w_ie", l,
                    ));
                }
                inv_terms.push(dir_conv_term(tape, bound, di, di, h_inv, None, "w_ii", l));
                if !cfg.no_fusion_conv {
                    let h = mlp_refs(cfg, bound, l, "ei");
                    inv_terms.push(dir_conv_term(
                        tape, bound, di, de, h_equ, h.as_ref(), "w_ei", l,
                    ));
                }
            }
            _ => unreachable!("handled by the other forward paths"),
        }

        // self-interaction terms
        let self_e = tape.matmul(h_equ, bound.id(&format!("l{}.w_e_self", l)));
        equ_terms.push(self_e);
        let self_i = tape.matmul(h_inv, bound.id(&format!("l{}.w_i_self", l)));
        inv_terms.push(self_i);

        let mut z_e = equ_terms[0];
        for t in &equ_terms[1..] {
            z_e = tape.add(z_e, *t);
        }
        let z_equ = tape.tanh(z_e);

        let mut z_i = inv_terms[0];
        for t in &inv_terms[1..] {
            z_i = tape.add(z_i, *t);
        }
        let z_i = tape.add_row_bias(z_i, bound.id(&format!("l{}.w_ii.bias", l)));
        let z_i = if !cfg.no_fusion_conv {
            tape.add_row_bias(z_i, bound.id(&format!("l{}.w_ei.bias", l)))
        } else {
            z_i
        };
        let z_i = tape.add_row_bias(z_i, bound.id(&format!("l{}.w_i_self.bias", l)));
        let z_inv = tape.relu(z_i);

        // --- fusion ---
        let (mut new_equ, mut new_inv) = if cfg.no_fusion {
            (z_equ, z_inv)
        } else {
            let ze_w = tape.matmul(z_equ, bound.id(&format!("l{}.wf_ee", l)));
            let zi_w = tape.matmul(z_inv, bound.id(&format!("l{}.wf_ie", l)));
            let zi_w = tape.add_row_bias(zi_w, bound.id(&format!("l{}.wf_ie.bias", l)));
            let had = tape.hadamard(ze_w, zi_w);
            let sum = tape.add(had, z_equ);
            let fused_equ = tape.tanh(sum);

            let zi_w2 = tape.matmul(z_inv, bound.id(&format!("l{}.wf_ii", l)));
            let zi_w2 = tape.add_row_bias(zi_w2, bound.id(&format!("l{}.wf_ii.bias", l)));
            let ze_w2 = tape.matmul(z_equ, bound.id(&format!("l{}.wf_ei", l)));
            let ze_abs = tape.abs(ze_w2);
            let had2 = tape.hadamard(zi_w2, ze_abs);
            let sum2 = tape.add(had2, z_inv);
            let fused_inv = tape.relu(sum2);
            (fused_equ, fused_inv)
        };

        new_equ = maybe_dropout(tape, new_equ, cfg.dropout, dropout_rng)?;
        new_inv = maybe_dropout(tape, new_inv, cfg.dropout, dropout_rng)?;

        z_equ_layers.push(z_equ);
        h_equ_layers.push(new_equ);
        h_equ = new_equ;
        h_inv = new_inv;
    }

    let y_equ = if cfg.d_out_equ > 0 {
        Some(tape.matmul(h_equ, bound.id("out.w_equ")))
    } else {
        None
    };
    let y_inv = if cfg.d_out_inv > 0 {
        let o = tape.matmul(h_inv, bound.id("out.w_inv"));
        Some(tape.add_row_bias(o, bound.id("out.w_inv.bias")))
    } else {
        None
    };
    Ok(ForwardOutput {
        y_equ,
        y_inv,
        z_equ_layers,
        h_equ_layers,
    })
}

/// Evaluation-mode convenience: builds the operator cache and a throwaway
/// tape, returns the output heads as plain tensors.
pub fn model_forward(
    cfg: &ModelConfig,
    params: &Params,
    g: &Graph,
    o: &Orientation,
    x_equ: &Tensor,
    x_inv: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let bundle = super::bundle::build_bundle(cfg, g, o)?;
    let mut tape = Tape::new();
    let bound = BoundParams::bind(params, &mut tape);
    let out = forward(cfg, &bound, &bundle, &mut tape, x_equ, x_inv, None)?;
    let m = g.edge_count();
    let y_equ = out
        .y_equ
        .map(|r| tape.value(r).clone())
        .unwrap_or_else(|| Tensor::zeros(m, 0));
    let y_inv = out
        .y_inv
        .map(|r| tape.value(r).clone())
        .unwrap_or_else(|| Tensor::zeros(m, 0));
    Ok((y_equ, y_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{canonical_orientation, Edge, Graph};
    use crate::nn::{init_params, random_params};
    use crate::operators::{boundary, normalize, BoundaryKind};

    fn mixed_graph() -> Graph {
        Graph::new(
            5,
            vec![
                Edge::directed(0, 1),
                Edge::undirected(1, 2),
                Edge::directed(2, 3),
                Edge::undirected(3, 4),
                Edge::undirected(1, 4),
                Edge::directed(4, 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn all_architectures_run_forward() {
        let g = mixed_graph();
        let o = canonical_orientation(&g);
        let m = g.edge_count();
        let x_equ = Tensor::from_vec(m, 1, (0..m).map(|i| i as f64 * 0.1 - 0.2).collect());
        let x_inv = Tensor::from_vec(m, 2, (0..2 * m).map(|i| (i as f64).cos()).collect());
        for arch in [
            Architecture::Eign,
            Architecture::Mlp,
            Architecture::LineGraph,
            Architecture::HodgeGnn,
            Architecture::HodgeInv,
            Architecture::HodgeDir,
            Architecture::DirGnn,
            Architecture::EignGcn,
            Architecture::EignCheb,
        ] {
            let cfg = ModelConfig::new(arch, 2, 8).with_dims(1, 2, 1, 1);
            let params = init_params(&cfg, 5).unwrap();
            let (ye, yi) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
            assert_eq!(ye.rows, m);
            assert_eq!(yi.rows, m);
            assert!(ye.is_finite() && yi.is_finite());
        }
    }

    #[test]
    fn taped_conv_matches_eval_conv() {
        let g = mixed_graph();
        let o = canonical_orientation(&g);
        let m = g.edge_count();
        let q = 1.0 / m as f64;
        let ke = BoundaryKind::equ(q);
        let ki = BoundaryKind::inv(q);
        let be = normalize(&boundary(&g, &o, ke), &g, &o, ke).unwrap();
        let bi = normalize(&boundary(&g, &o, ki), &g, &o, ki).unwrap();
        let x = Tensor::from_vec(m, 2, (0..2 * m).map(|i| (i as f64 * 0.7).sin()).collect());
        let want = crate::nn::conv_forward(&be, &bi, &x, None).unwrap();

        let mut tape = Tape::new();
        let left = ComplexOpHandles {
            re: {
                let (re, _) = be.split_real_imag();
                Rc::new(re)
            },
            im: {
                let (_, im) = be.split_real_imag();
                Rc::new(im)
            },
            rows: be.rows(),
            cols: be.cols(),
        };
        let right = ComplexOpHandles {
            re: {
                let (re, _) = bi.split_real_imag();
                Rc::new(re)
            },
            im: {
                let (_, im) = bi.split_real_imag();
                Rc::new(im)
            },
            rows: bi.rows(),
            cols: bi.cols(),
        };
        let xr = tape.leaf(x);
        let y = boundary_conv(&mut tape, &left, &right, xr, None);
        let yi = y.im.unwrap();
        let flat = tape.hcat(y.re, yi);
        let got = tape.value(flat);
        assert_eq!((got.rows, got.cols), (want.rows, want.cols));
        for (a, b) in got.data.iter().zip(&want.data) {
            assert!((a - b).abs() < 1e-12, "taped {} vs eval {}", a, b);
        }
    }

    #[test]
    fn zero_weights_give_zero_outputs() {
        let g = mixed_graph();
        let o = canonical_orientation(&g);
        let m = g.edge_count();
        let cfg = ModelConfig::new(Architecture::Eign, 2, 8).with_dims(1, 1, 1, 1);
        let mut params = init_params(&cfg, 1).unwrap();
        for (_, t) in params.entries_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        let x_equ = Tensor::from_vec(m, 1, vec![1.0; m]);
        let x_inv = Tensor::from_vec(m, 1, vec![1.0; m]);
        let (ye, yi) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
        assert!(ye.data.iter().all(|&v| v == 0.0));
        assert!(yi.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tanh_branch_is_odd_without_cross_terms() {
        // negating the equivariant input negates the equivariant output when
        // the cross-modality path is disabled and fusion is off
        let g = mixed_graph();
        let o = canonical_orientation(&g);
        let m = g.edge_count();
        let cfg = ModelConfig {
            no_fusion: true,
            no_fusion_conv: true,
            ..ModelConfig::new(Architecture::Eign, 2, 8).with_dims(1, 1, 1, 1)
        };
        let params = random_params(&cfg, 33).unwrap();
        let x_inv = Tensor::from_vec(m, 1, vec![0.5; m]);
        let x_equ = Tensor::from_vec(m, 1, (0..m).map(|i| 0.3 * i as f64 - 0.7).collect());
        let neg = Tensor::from_vec(m, 1, x_equ.data.iter().map(|v| -v).collect());
        let (y1, _) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
        let (y2, _) = model_forward(&cfg, &params, &g, &o, &neg, &x_inv).unwrap();
        for (a, b) in y1.data.iter().zip(&y2.data) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn hodge_with_zero_equivariant_input_is_constant_zero() {
        let g = mixed_graph();
        let o = canonical_orientation(&g);
        let m = g.edge_count();
        let cfg = ModelConfig::new(Architecture::HodgeGnn, 2, 8).with_dims(0, 2, 0, 1);
        let params = init_params(&cfg, 7).unwrap();
        let x_equ = Tensor::zeros(m, 0);
        let x_inv = Tensor::from_vec(m, 2, (0..2 * m).map(|i| i as f64).collect());
        let (_, yi) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
        assert!(yi.data.iter().all(|&v| v == 0.0));
    }
}
