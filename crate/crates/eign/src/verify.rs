//! Executable checks for the symmetry guarantees: orientation equivariance
//! and invariance of the model outputs, permutation equivariance, the
//! boundary-operator identities, and zero-propagation of the equivariant
//! branch without cross-modality convolutions.
//!
//! Every check runs over randomized instances, is replayable from its seed,
//! and reports the maximum observed deviation even when it passes.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::graph::{
    apply_edge_permutation, apply_flip, canonical_orientation, random_orientation_flip, Edge,
    EdgePermutation, Graph,
};
use crate::nn::{
    build_bundle, forward, model_forward, random_params, Architecture, BoundParams, ModelConfig,
};
use crate::operators::{boundary, laplacian, BoundaryKind, LaplacianKind};
use crate::rng::{derive_seed, rng_from_seed};
use rand::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub seed: u64,
    pub trial: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

impl VerificationReport {
    fn from_trials(
        name: &str,
        tolerance: f64,
        results: Vec<(usize, u64, f64, String)>,
    ) -> VerificationReport {
        let trials = results.len();
        let mut max_deviation: f64 = 0.0;
        let mut counterexample = None;
        for (trial, seed, dev, detail) in results {
            if dev > max_deviation {
                max_deviation = dev;
            }
            if dev > tolerance && counterexample.is_none() {
                counterexample = Some(Counterexample {
                    seed,
                    trial,
                    detail,
                });
            }
        }
        VerificationReport {
            name: name.to_string(),
            trials,
            max_deviation,
            tolerance,
            pass: counterexample.is_none(),
            counterexample,
        }
    }
}

/// Random graph with `n` nodes: each unordered pair is an edge with
/// probability `p`, each edge independently directed with probability 1/2,
/// and an occasional anti-parallel twin on directed edges. Always has at
/// least one edge.
pub fn random_mixed_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() >= p {
                continue;
            }
            if rng.gen::<bool>() {
                let (s, t) = if rng.gen::<bool>() { (u, v) } else { (v, u) };
                edges.push(Edge::directed(s, t));
                if rng.gen::<f64>() < 0.1 {
                    edges.push(Edge::directed(t, s));
                }
            } else {
                edges.push(Edge::undirected(u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge::undirected(0, 1.min(n - 1).max(1)));
    }
    Graph::new(n, edges).expect("random graph construction is valid")
}

/// Check-suite graph: node count uniform in [5, 30].
pub fn random_check_graph(seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(5..=30);
    random_mixed_graph(n, 0.25, derive_seed(seed, 1))
}

fn check_config(template: &ModelConfig) -> ModelConfig {
    ModelConfig {
        d_in_equ: 2,
        d_in_inv: 2,
        d_out_equ: 1,
        d_out_inv: 1,
        dropout: 0.0,
        ..template.clone()
    }
}

fn random_inputs(m: usize, d_equ: usize, d_inv: usize, seed: u64) -> (Tensor, Tensor) {
    let mut rng = rng_from_seed(seed);
    let x_equ = Tensor::from_vec(
        m,
        d_equ,
        (0..m * d_equ).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    let x_inv = Tensor::from_vec(
        m,
        d_inv,
        (0..m * d_inv).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    (x_equ, x_inv)
}

/// `Delta f(X_equ, X_inv, O) == f(Delta X_equ, X_inv, O')` on the
/// equivariant head, for random graphs, parameters, inputs, and flips.
pub fn check_joint_equivariance(
    template: &ModelConfig,
    trials: usize,
    tol: f64,
    seed: u64,
) -> VerificationReport {
    let cfg = check_config(template);
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = derive_seed(seed, trial as u64);
        let g = random_check_graph(s);
        let m = g.edge_count();
        let o = canonical_orientation(&g);
        let params = random_params(&cfg, derive_seed(s, 101)).expect("params");
        let (x_equ, x_inv) = random_inputs(m, cfg.d_in_equ, cfg.d_in_inv, derive_seed(s, 102));
        let flip = random_orientation_flip(&g, derive_seed(s, 103));
        let o2 = o.apply(&flip);
        let x_equ_f = Tensor::from_vec(
            m,
            cfg.d_in_equ,
            apply_flip(&x_equ.data, m, cfg.d_in_equ, &flip).expect("flip"),
        );
        let (y1, _) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).expect("forward");
        let (y2, _) = model_forward(&cfg, &params, &g, &o2, &x_equ_f, &x_inv).expect("forward");
        let y1_flipped = apply_flip(&y1.data, m, cfg.d_out_equ, &flip).expect("flip");
        let dev = y1_flipped
            .iter()
            .zip(&y2.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        results.push((trial, s, dev, format!("graph seed {}, m = {}", s, m)));
    }
    VerificationReport::from_trials(
        &format!("joint_equivariance[{}]", cfg.architecture),
        tol,
        results,
    )
}

/// Invariant head unchanged under orientation flips.
pub fn check_joint_invariance(
    template: &ModelConfig,
    trials: usize,
    tol: f64,
    seed: u64,
) -> VerificationReport {
    let cfg = check_config(template);
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = derive_seed(seed, trial as u64 ^ 0x1111);
        let g = random_check_graph(s);
        let m = g.edge_count();
        let o = canonical_orientation(&g);
        let params = random_params(&cfg, derive_seed(s, 201)).expect("params");
        let (x_equ, x_inv) = random_inputs(m, cfg.d_in_equ, cfg.d_in_inv, derive_seed(s, 202));
        let flip = random_orientation_flip(&g, derive_seed(s, 203));
        let o2 = o.apply(&flip);
        let x_equ_f = Tensor::from_vec(
            m,
            cfg.d_in_equ,
            apply_flip(&x_equ.data, m, cfg.d_in_equ, &flip).expect("flip"),
        );
        let (_, y1) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).expect("forward");
        let (_, y2) = model_forward(&cfg, &params, &g, &o2, &x_equ_f, &x_inv).expect("forward");
        let dev = y1
            .data
            .iter()
            .zip(&y2.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        results.push((trial, s, dev, format!("graph seed {}, m = {}", s, m)));
    }
    VerificationReport::from_trials(
        &format!("joint_invariance[{}]", cfg.architecture),
        tol,
        results,
    )
}

/// `P f(...) == f(P ...)` on both heads under random edge permutations, and
/// under a permutation composed with a flip in either order.
pub fn check_permutation_equivariance(
    template: &ModelConfig,
    trials: usize,
    tol: f64,
    seed: u64,
) -> VerificationReport {
    let cfg = check_config(template);
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = derive_seed(seed, trial as u64 ^ 0x2222);
        let g = random_check_graph(s);
        let m = g.edge_count();
        let o = canonical_orientation(&g);
        let params = random_params(&cfg, derive_seed(s, 301)).expect("params");
        let (x_equ, x_inv) = random_inputs(m, cfg.d_in_equ, cfg.d_in_inv, derive_seed(s, 302));
        let p = EdgePermutation::random(m, derive_seed(s, 303));

        let (y1e, y1i) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).expect("forward");
        let (g2, o2, sigs) = apply_edge_permutation(
            &g,
            &o,
            &[(&x_equ.data, cfg.d_in_equ), (&x_inv.data, cfg.d_in_inv)],
            &p,
        )
        .expect("permute");
        let xp_equ = Tensor::from_vec(m, cfg.d_in_equ, sigs[0].clone());
        let xp_inv = Tensor::from_vec(m, cfg.d_in_inv, sigs[1].clone());
        let (y2e, y2i) = model_forward(&cfg, &params, &g2, &o2, &xp_equ, &xp_inv).expect("forward");

        let p_y1e = p.apply_rows(&y1e.data, cfg.d_out_equ);
        let p_y1i = p.apply_rows(&y1i.data, cfg.d_out_inv);
        let mut dev = 0.0f64;
        for (a, b) in p_y1e.iter().zip(&y2e.data) {
            dev = dev.max((a - b).abs());
        }
        for (a, b) in p_y1i.iter().zip(&y2i.data) {
            dev = dev.max((a - b).abs());
        }

        // permutation and flip composed in either order agree
        let flip = random_orientation_flip(&g, derive_seed(s, 304));
        let flip_p = crate::graph::OrientationFlip::new(
            &g2,
            p.indices().iter().map(|&old| flip.signs()[old]).collect(),
        )
        .expect("permuted flip");
        let o_f = o.apply(&flip);
        let x_f = apply_flip(&x_equ.data, m, cfg.d_in_equ, &flip).expect("flip");
        let (g3, o3, sigs3) = apply_edge_permutation(
            &g,
            &o_f,
            &[(&x_f, cfg.d_in_equ), (&x_inv.data, cfg.d_in_inv)],
            &p,
        )
        .expect("permute");
        let o2_f = o2.apply(&flip_p);
        let xp_f = apply_flip(&xp_equ.data, m, cfg.d_in_equ, &flip_p).expect("flip");
        assert_eq!(g3, g2);
        for (a, b) in o3.flips().iter().zip(o2_f.flips()) {
            assert_eq!(a, b, "flip/permutation composition mismatch");
        }
        for (a, b) in sigs3[0].iter().zip(&xp_f) {
            dev = dev.max((a - b).abs());
        }

        results.push((trial, s, dev, format!("graph seed {}, m = {}", s, m)));
    }
    VerificationReport::from_trials(
        &format!("permutation_equivariance[{}]", cfg.architecture),
        tol,
        results,
    )
}

/// Boundary identities under orientation flips, the absolute-value relation
/// at q = 0, and direction sensitivity of the phase operator:
/// - `B_equ(O') == B_equ(O) Delta` and `B_inv(O') == B_inv(O)` exactly,
/// - `L_inv == |L_equ|` entrywise at q = 0,
/// - reversing a directed edge changes `L_equ` beyond re-orientation for
///   q > 0 and not at q = 0.
pub fn check_boundary_identities(trials: usize, seed: u64) -> VerificationReport {
    let tol = 1e-12;
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = derive_seed(seed, trial as u64 ^ 0x3333);
        let g = random_check_graph(s);
        let o = canonical_orientation(&g);
        let flip = random_orientation_flip(&g, derive_seed(s, 401));
        let o2 = o.apply(&flip);
        let q = 1.0 / g.edge_count() as f64;
        let mut dev = 0.0f64;
        let mut detail = String::new();

        // equivariant boundary composes with the diagonal sign matrix
        let be = boundary(&g, &o, BoundaryKind::equ(q));
        let be2 = boundary(&g, &o2, BoundaryKind::equ(q));
        let signs: Vec<f64> = (0..g.edge_count()).map(|e| flip.sign_f64(e)).collect();
        let be_delta = be.scale_columns(&signs).expect("scale");
        dev = dev.max(be_delta.max_abs_diff(&be2));

        // invariant boundary is orientation-independent
        let bi = boundary(&g, &o, BoundaryKind::inv(q));
        let bi2 = boundary(&g, &o2, BoundaryKind::inv(q));
        dev = dev.max(bi.max_abs_diff(&bi2));

        // |L_equ| == L_inv at q = 0
        let le0 = laplacian(&g, &o, LaplacianKind::EQU, 0.0);
        let li0 = laplacian(&g, &o, LaplacianKind::INV, 0.0);
        for e in 0..g.edge_count() {
            for (c, v) in le0.row(e) {
                dev = dev.max((v.norm() - li0.get(e, c).re).abs());
            }
        }

        // direction sensitivity: reverse one non-isolated directed edge
        if let Some((idx, edge)) = g.edges().iter().enumerate().find(|(i, e)| {
            e.is_directed()
                && !g
                    .edges()
                    .iter()
                    .any(|o| o.is_directed() && o.u == e.v && o.v == e.u)
                && g.edges()
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != *i && (o.u == e.u || o.v == e.u || o.u == e.v || o.v == e.v))
        }) {
            let mut edges = g.edges().to_vec();
            edges[idx] = Edge::directed(edge.v, edge.u);
            let g_rev = Graph::new(g.node_count(), edges).expect("reversed graph");
            let o_rev = canonical_orientation(&g_rev);
            let delta: Vec<f64> = (0..g.edge_count())
                .map(|e| if e == idx { -1.0 } else { 1.0 })
                .collect();
            for (q_test, expect_change) in [(q.max(0.05), true), (0.0, false)] {
                let l = laplacian(&g, &o, LaplacianKind::EQU, q_test);
                let l_rev = laplacian(&g_rev, &o_rev, LaplacianKind::EQU, q_test);
                // conjugate by the sign of the reversed edge
                let conj = l
                    .scale_columns(&delta)
                    .expect("scale")
                    .conj_transpose()
                    .scale_columns(&delta)
                    .expect("scale")
                    .conj_transpose();
                let diff = conj.max_abs_diff(&l_rev);
                if expect_change {
                    if diff < 1e-6 {
                        dev = dev.max(1.0);
                        detail = format!("no direction sensitivity at q = {}", q_test);
                    }
                } else {
                    dev = dev.max(diff);
                }
            }
        }

        results.push((trial, s, dev, detail));
    }
    VerificationReport::from_trials("boundary_identities", tol, results)
}

/// With the cross-modality convolutions disabled and zero equivariant input,
/// the equivariant states stay exactly zero on undirected edges through every
/// layer; enabling them breaks the zero pattern (negative control).
pub fn check_zero_lemma(trials: usize, seed: u64) -> VerificationReport {
    let mut results = Vec::with_capacity(trials);
    for trial in 0..trials {
        let s = derive_seed(seed, trial as u64 ^ 0x4444);
        let g = random_check_graph(s);
        let m = g.edge_count();
        let o = canonical_orientation(&g);
        let mut dev = 0.0f64;
        let mut detail = String::new();

        let base = ModelConfig {
            no_fusion_conv: true,
            ..ModelConfig::new(Architecture::Eign, 3, 8).with_dims(1, 2, 1, 1)
        };
        let params = random_params(&base, derive_seed(s, 501)).expect("params");
        let (_, x_inv) = random_inputs(m, 1, 2, derive_seed(s, 502));
        let x_equ = Tensor::zeros(m, 1);

        let bundle = build_bundle(&base, &g, &o).expect("bundle");
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&params, &mut tape);
        let out = forward(&base, &bound, &bundle, &mut tape, &x_equ, &x_inv, None).expect("forward");
        for layer_states in [&out.z_equ_layers, &out.h_equ_layers] {
            for state in layer_states {
                let t = tape.value(*state);
                for (e, edge) in g.edges().iter().enumerate() {
                    if edge.is_directed() {
                        continue;
                    }
                    for k in 0..t.cols {
                        let v = t.get(e, k).abs();
                        if v > dev {
                            dev = v;
                            detail = format!("undirected edge {} carries {}", e, v);
                        }
                    }
                }
            }
        }

        // negative control: cross-modality convolutions produce non-zero
        // equivariant states from invariant input
        let control = ModelConfig {
            no_fusion_conv: false,
            ..base.clone()
        };
        let params_c = random_params(&control, derive_seed(s, 503)).expect("params");
        let bundle_c = build_bundle(&control, &g, &o).expect("bundle");
        let mut tape_c = Tape::new();
        let bound_c = BoundParams::bind(&params_c, &mut tape_c);
        let out_c =
            forward(&control, &bound_c, &bundle_c, &mut tape_c, &x_equ, &x_inv, None).expect("forward");
        let has_undirected = g.edges().iter().any(|e| !e.is_directed());
        if has_undirected {
            let mut control_max = 0.0f64;
            for state in &out_c.z_equ_layers {
                let t = tape_c.value(*state);
                for (e, edge) in g.edges().iter().enumerate() {
                    if !edge.is_directed() {
                        for k in 0..t.cols {
                            control_max = control_max.max(t.get(e, k).abs());
                        }
                    }
                }
            }
            if control_max == 0.0 {
                dev = dev.max(1.0);
                detail = "negative control stayed zero".to_string();
            }
        }

        results.push((trial, s, dev, detail));
    }
    // the lemma requires exact zeros
    VerificationReport::from_trials("zero_lemma", 0.0, results)
}

/// Run the full suite with the tolerances used by the acceptance criteria.
pub fn run_all_checks(trials: usize, seed: u64) -> Vec<VerificationReport> {
    let eign = ModelConfig::new(Architecture::Eign, 2, 8);
    let mut reports = vec![
        check_boundary_identities(trials.max(20), seed),
        check_joint_equivariance(&eign, trials, 1e-10, seed),
        check_joint_invariance(&eign, trials, 1e-10, seed),
        check_permutation_equivariance(&eign, trials, 1e-12, seed),
        check_zero_lemma(trials.min(20), seed),
    ];
    // negative checks: the direction-aware signed baseline must break
    // equivariance, and feeding invariant features as equivariant must break
    // invariance
    let hodge_dir = ModelConfig::new(Architecture::HodgeDir, 2, 8);
    let mut neg = check_joint_equivariance(&hodge_dir, trials.min(25), 1e-10, seed);
    neg.name = "equivariance_breaks[Hodge+Dir]".into();
    neg.pass = !neg.pass;
    if neg.pass {
        neg.counterexample = None;
    }
    reports.push(neg);
    let hodge_inv = ModelConfig::new(Architecture::HodgeInv, 2, 8);
    let mut neg2 = check_joint_invariance(&hodge_inv, trials.min(25), 1e-10, seed);
    neg2.name = "invariance_breaks[Hodge+Inv]".into();
    neg2.pass = !neg2.pass;
    if neg2.pass {
        neg2.counterexample = None;
    }
    reports.push(neg2);
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_flip_gives_zero_deviation() {
        let g = random_check_graph(5);
        let m = g.edge_count();
        let o = canonical_orientation(&g);
        let cfg = check_config(&ModelConfig::new(Architecture::Eign, 2, 8));
        let params = random_params(&cfg, 9).unwrap();
        let (x_equ, x_inv) = random_inputs(m, 2, 2, 10);
        let (y1, i1) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
        let (y2, i2) = model_forward(&cfg, &params, &g, &o, &x_equ, &x_inv).unwrap();
        assert_eq!(y1.data, y2.data);
        assert_eq!(i1.data, i2.data);
    }

    #[test]
    fn eign_passes_and_hodge_dir_fails_equivariance() {
        let eign = ModelConfig::new(Architecture::Eign, 2, 8);
        let r = check_joint_equivariance(&eign, 10, 1e-10, 42);
        assert!(r.pass, "deviation {}", r.max_deviation);
        let hd = ModelConfig::new(Architecture::HodgeDir, 2, 8);
        let r = check_joint_equivariance(&hd, 10, 1e-10, 42);
        assert!(!r.pass);
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn boundary_identities_hold() {
        let r = check_boundary_identities(20, 7);
        assert!(r.pass, "deviation {}", r.max_deviation);
    }

    #[test]
    fn zero_lemma_holds() {
        let r = check_zero_lemma(5, 3);
        assert!(r.pass, "deviation {} ({:?})", r.max_deviation, r.counterexample);
    }
}
