//! Random DC circuits: one ideal voltage source, resistors, and ideal diodes
//! on small random topologies. Currents come from modified nodal analysis;
//! diode on/off states are found by an active-set iteration and can be
//! cross-checked against exhaustive state enumeration.

use rand::Rng;

use super::sample::{graph_split, Dataset, LabeledGraphSample, SplitSpec, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{canonical_orientation, Edge, Graph};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

pub const RESISTANCE_RANGE: (f64, f64) = (100.0, 10_000.0);
pub const VOLTAGE_RANGE: (f64, f64) = (1.0, 10.0);
const DIODE_PROB: f64 = 0.2;
const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentKind {
    /// Ideal voltage source; raises the potential along the edge orientation.
    Source { voltage: f64 },
    Resistor { ohms: f64 },
    /// Ideal diode conducting only along the edge direction.
    Diode,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub graph: Graph,
    pub components: Vec<ComponentKind>,
    pub source_edge: usize,
}

impl Circuit {
    pub fn source_voltage(&self) -> f64 {
        match self.components[self.source_edge] {
            ComponentKind::Source { voltage } => voltage,
            _ => unreachable!("source_edge points at the source"),
        }
    }

    fn diode_edges(&self) -> Vec<usize> {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, ComponentKind::Diode))
            .map(|(e, _)| e)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DcSolution {
    /// Node potentials (source tail is ground).
    pub potentials: Vec<f64>,
    /// Current along each edge's stored orientation.
    pub currents: Vec<f64>,
    /// Conduction state per diode edge index.
    pub diode_on: Vec<(usize, bool)>,
}

/// Dense Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let scale: f64 = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() < 1e-12 * scale {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Solve the nodal system for a fixed diode assignment. Returns node
/// potentials and branch currents (source first, then on-diodes in order).
fn solve_with_states(circuit: &Circuit, diodes: &[usize], on: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = &circuit.graph;
    let n = g.node_count();
    let ground = g.edge(circuit.source_edge).u;
    // variable layout: potentials of nodes != ground, then branch currents
    let mut node_var = vec![usize::MAX; n];
    let mut nv = 0;
    for v in 0..n {
        if v != ground {
            node_var[v] = nv;
            nv += 1;
        }
    }
    let mut branches: Vec<(usize, f64)> = vec![(circuit.source_edge, circuit.source_voltage())];
    for (k, &e) in diodes.iter().enumerate() {
        if on[k] {
            branches.push((e, 0.0));
        }
    }
    let dim = nv + branches.len();
    let mut a = vec![0.0; dim * dim];
    let mut b = vec![0.0; dim];

    // resistor stamps
    for (e, comp) in circuit.components.iter().enumerate() {
        if let ComponentKind::Resistor { ohms } = comp {
            let cond = 1.0 / ohms;
            let (u, v) = (g.edge(e).u, g.edge(e).v);
            for (x, y) in [(u, v), (v, u)] {
                if node_var[x] != usize::MAX {
                    a[node_var[x] * dim + node_var[x]] += cond;
                    if node_var[y] != usize::MAX {
                        a[node_var[x] * dim + node_var[y]] -= cond;
                    }
                }
            }
        }
    }
    // branch stamps: current variable j flows u -> v inside the branch, and
    // the constraint fixes v_v - v_u to the branch voltage
    for (k, &(e, volts)) in branches.iter().enumerate() {
        let (u, v) = (g.edge(e).u, g.edge(e).v);
        let col = nv + k;
        if node_var[u] != usize::MAX {
            a[node_var[u] * dim + col] += 1.0;
            a[col * dim + node_var[u]] -= 1.0;
        }
        if node_var[v] != usize::MAX {
            a[node_var[v] * dim + col] -= 1.0;
            a[col * dim + node_var[v]] += 1.0;
        }
        b[col] = volts;
    }

    let x = solve_linear(a, b, dim)?;
    let mut potentials = vec![0.0; n];
    for v in 0..n {
        if v != ground {
            potentials[v] = x[node_var[v]];
        }
    }
    let currents = x[nv..].to_vec();
    Ok((potentials, currents))
}

fn currents_from(
    circuit: &Circuit,
    potentials: &[f64],
    branch_currents: &[f64],
    diodes: &[usize],
    on: &[bool],
) -> Vec<f64> {
    let g = &circuit.graph;
    let mut currents = vec![0.0; g.edge_count()];
    for (e, comp) in circuit.components.iter().enumerate() {
        if let ComponentKind::Resistor { ohms } = comp {
            let (u, v) = (g.edge(e).u, g.edge(e).v);
            currents[e] = (potentials[u] - potentials[v]) / ohms;
        }
    }
    currents[circuit.source_edge] = branch_currents[0];
    let mut k = 1;
    for (i, &e) in diodes.iter().enumerate() {
        if on[i] {
            currents[e] = branch_currents[k];
            k += 1;
        }
    }
    currents
}

fn state_violation(
    circuit: &Circuit,
    potentials: &[f64],
    branch_currents: &[f64],
    diodes: &[usize],
    on: &[bool],
) -> Option<(usize, f64)> {
    let g = &circuit.graph;
    let mut worst: Option<(usize, f64)> = None;
    let mut k = 1;
    for (i, &e) in diodes.iter().enumerate() {
        let (u, v) = (g.edge(e).u, g.edge(e).v);
        let violation = if on[i] {
            // forward current must be non-negative
            let j = branch_currents[k];
            k += 1;
            -j
        } else {
            // forward voltage must be non-positive
            potentials[u] - potentials[v]
        };
        if violation > STATE_TOL && worst.map_or(true, |(_, w)| violation > w) {
            worst = Some((i, violation));
        }
    }
    worst
}

/// Active-set solve: start with every diode off, repeatedly solve the linear
/// system and flip the most-violated diode until the assignment is
/// consistent. Gives up after `2^d` iterations.
pub fn solve_dc(circuit: &Circuit) -> Result<DcSolution> {
    let diodes = circuit.diode_edges();
    let d = diodes.len();
    let budget = 1usize << d.min(20);
    let mut on = vec![false; d];
    for _ in 0..budget.max(1) {
        let (potentials, branch) = solve_with_states(circuit, &diodes, &on)?;
        match state_violation(circuit, &potentials, &branch, &diodes, &on) {
            None => {
                let currents = currents_from(circuit, &potentials, &branch, &diodes, &on);
                return Ok(DcSolution {
                    potentials,
                    currents,
                    diode_on: diodes.iter().copied().zip(on).collect(),
                });
            }
            Some((i, _)) => {
                on[i] = !on[i];
            }
        }
    }
    Err(Error::ActiveSetDiverged(budget))
}

/// Exhaustive reference: try all `2^d` diode assignments and return the
/// currents of the consistent one.
pub fn solve_dc_enumerate(circuit: &Circuit) -> Result<DcSolution> {
    let diodes = circuit.diode_edges();
    let d = diodes.len();
    let mut found: Option<DcSolution> = None;
    for bits in 0..(1usize << d) {
        let on: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
        let Ok((potentials, branch)) = solve_with_states(circuit, &diodes, &on) else {
            continue;
        };
        if state_violation(circuit, &potentials, &branch, &diodes, &on).is_some() {
            continue;
        }
        let currents = currents_from(circuit, &potentials, &branch, &diodes, &on);
        match &found {
            None => {
                found = Some(DcSolution {
                    potentials,
                    currents,
                    diode_on: diodes.iter().copied().zip(on).collect(),
                })
            }
            Some(prev) => {
                // multiple consistent assignments must describe the same
                // physical solution (boundary cases with zero diode current)
                let diff = prev
                    .currents
                    .iter()
                    .zip(&currents)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if diff > 1e-6 {
                    return Err(Error::InvalidParameter(
                        "ambiguous diode assignment".into(),
                    ));
                }
            }
        }
    }
    found.ok_or(Error::SingularSystem)
}

/// Largest node current residual, relative to the largest current magnitude.
pub fn kcl_residual(circuit: &Circuit, solution: &DcSolution) -> f64 {
    let g = &circuit.graph;
    let mut residual = vec![0.0; g.node_count()];
    for (e, edge) in g.edges().iter().enumerate() {
        residual[edge.u] -= solution.currents[e];
        residual[edge.v] += solution.currents[e];
    }
    let max_current = solution
        .currents
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-30);
    residual.iter().fold(0.0f64, |m, v| m.max(v.abs())) / max_current
}

/// Random topology: a 3-cycle plus node attachments through edge pairs.
fn gen_topology(rng: &mut rand_chacha::ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let attachments = rng.gen_range(5..=8usize);
    let mut pairs = vec![(0usize, 1usize), (1, 2), (2, 0)];
    let mut n = 3;
    for _ in 0..attachments {
        let v = n;
        n += 1;
        let s = rng.gen_range(0..v);
        let mut t = rng.gen_range(0..v);
        while t == s {
            t = rng.gen_range(0..v);
        }
        pairs.push((s, v));
        pairs.push((v, t));
    }
    (n, pairs)
}

fn gen_one_circuit(seed: u64) -> Result<(Circuit, DcSolution)> {
    let mut rng = rng_from_seed(seed);
    for _attempt in 0..50 {
        let (n, pairs) = gen_topology(&mut rng);
        let m = pairs.len();
        let source_edge = rng.gen_range(0..m);
        let mut edges = Vec::with_capacity(m);
        let mut components = Vec::with_capacity(m);
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if i == source_edge {
                edges.push(Edge::undirected(u.min(v), u.max(v)));
                let voltage = if VOLTAGE_RANGE.0 == VOLTAGE_RANGE.1 {
                    VOLTAGE_RANGE.0
                } else {
                    rng.gen_range(VOLTAGE_RANGE.0..VOLTAGE_RANGE.1)
                };
                components.push(ComponentKind::Source { voltage });
            } else if rng.gen::<f64>() < DIODE_PROB {
                let (s, t) = if rng.gen::<bool>() { (u, v) } else { (v, u) };
                edges.push(Edge::directed(s, t));
                components.push(ComponentKind::Diode);
            } else {
                edges.push(Edge::undirected(u.min(v), u.max(v)));
                components.push(ComponentKind::Resistor {
                    ohms: rng.gen_range(RESISTANCE_RANGE.0..RESISTANCE_RANGE.1),
                });
            }
        }
        // canonical storage may reorder source endpoints; track the edge by
        // position, the orientation convention is the stored representative
        let graph = match Graph::new(n, edges) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let circuit = Circuit {
            graph,
            components,
            source_edge,
        };
        match solve_dc(&circuit) {
            Ok(solution) => return Ok((circuit, solution)),
            Err(_) => continue,
        }
    }
    Err(Error::GenerationBudget(format!(
        "no solvable circuit within 50 attempts (seed {})",
        seed
    )))
}

/// Generate circuits with simulated currents as equivariant targets.
/// Currents are divided by the source voltage per graph; the global std
/// normalization over training-split targets is recorded in the dataset
/// constants and applied to every sample.
pub fn gen_circuits(num_graphs: usize, seed: u64) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(num_graphs);
    let mut circuits = Vec::with_capacity(num_graphs);
    for i in 0..num_graphs {
        let (circuit, solution) = gen_one_circuit(derive_seed(seed, i as u64))?;
        let g = &circuit.graph;
        let m = g.edge_count();
        let volts = circuit.source_voltage();
        let mut x_equ = Tensor::zeros(m, 1);
        // the potential constraint raises v along the stored orientation
        x_equ.set(circuit.source_edge, 0, volts);
        let mut x_inv = Tensor::zeros(m, 4);
        for (e, comp) in circuit.components.iter().enumerate() {
            match comp {
                ComponentKind::Source { .. } => x_inv.set(e, 0, 1.0),
                ComponentKind::Resistor { ohms } => {
                    x_inv.set(e, 1, 1.0);
                    x_inv.set(e, 3, *ohms);
                }
                ComponentKind::Diode => x_inv.set(e, 2, 1.0),
            }
        }
        let y = Tensor::from_vec(m, 1, solution.currents.iter().map(|c| c / volts).collect());
        let orientation = canonical_orientation(g);
        samples.push(LabeledGraphSample {
            graph: g.clone(),
            orientation,
            x_equ,
            x_inv,
            y,
            task: TaskKind::Regression,
            mask: vec![true; m],
            forced_train: None,
        });
        circuits.push(circuit);
    }
    let (train, val, test) = graph_split(num_graphs, (0.5, 0.25, 0.25), derive_seed(seed, 1 << 40));

    // resistance standardization and global current std from the train split
    let mut res_values = Vec::new();
    let mut flow_values = Vec::new();
    for &i in &train {
        let s = &samples[i];
        for e in 0..s.edge_count() {
            if s.x_inv.get(e, 1) > 0.5 {
                res_values.push(s.x_inv.get(e, 3));
            }
            flow_values.push(s.y.get(e, 0));
        }
    }
    let res_mean = mean(&res_values);
    let res_std = std_dev(&res_values, res_mean).max(1e-12);
    let flow_std = {
        let mu = mean(&flow_values);
        std_dev(&flow_values, mu).max(1e-12)
    };
    for s in samples.iter_mut() {
        for e in 0..s.edge_count() {
            if s.x_inv.get(e, 1) > 0.5 {
                let z = (s.x_inv.get(e, 3) - res_mean) / res_std;
                s.x_inv.set(e, 3, z);
            }
            let y = s.y.get(e, 0) / flow_std;
            s.y.set(e, 0, y);
        }
    }

    let mut norm_constants = std::collections::BTreeMap::new();
    norm_constants.insert("resistance_mean".into(), res_mean);
    norm_constants.insert("resistance_std".into(), res_std);
    norm_constants.insert("current_std".into(), flow_std);
    Ok(Dataset {
        name: "circuits".into(),
        seed,
        samples,
        split: SplitSpec::Graphs { train, val, test },
        norm_constants,
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_dev(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ohms_law_on_a_single_loop() {
        // 1 V across 100 ohm: edges 0-1 (source) and 1-2, 2-0 resistors; make
        // the series path 100 ohm total by using 50 + 50
        let graph = Graph::new(
            3,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::undirected(0, 2),
            ],
        )
        .unwrap();
        let circuit = Circuit {
            graph,
            components: vec![
                ComponentKind::Source { voltage: 1.0 },
                ComponentKind::Resistor { ohms: 50.0 },
                ComponentKind::Resistor { ohms: 50.0 },
            ],
            source_edge: 0,
        };
        let sol = solve_dc(&circuit).unwrap();
        // |I| = V / R_total = 1 / 100
        assert!((sol.currents[0].abs() - 0.01).abs() < 1e-12);
        assert!(kcl_residual(&circuit, &sol) < 1e-9);
    }

    #[test]
    fn reverse_biased_diode_blocks_current() {
        // source 0->1 raises potential at 1; diode 1->... wait for blocking,
        // point the diode against the only return path
        let graph = Graph::new(
            3,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::directed(0, 2), // conducts only 0 -> 2
            ],
        )
        .unwrap();
        let circuit = Circuit {
            graph,
            components: vec![
                ComponentKind::Source { voltage: 1.0 },
                ComponentKind::Resistor { ohms: 100.0 },
                ComponentKind::Diode,
            ],
            source_edge: 0,
        };
        // potential at node 1 is +1, flows through resistor to node 2; the
        // loop closes only if the diode lets current flow 2 -> 0, but it
        // points 0 -> 2: everything stays at zero current
        let sol = solve_dc(&circuit).unwrap();
        for c in &sol.currents {
            assert!(c.abs() < 1e-12, "current {}", c);
        }
        // flipping the diode lets the loop conduct
        let graph2 = Graph::new(
            3,
            vec![
                Edge::undirected(0, 1),
                Edge::undirected(1, 2),
                Edge::directed(2, 0),
            ],
        )
        .unwrap();
        let circuit2 = Circuit {
            graph: graph2,
            components: circuit.components.clone(),
            source_edge: 0,
        };
        let sol2 = solve_dc(&circuit2).unwrap();
        assert!((sol2.currents[1].abs() - 0.01).abs() < 1e-12);
        // the diode carries its current in the forward direction
        assert!(sol2.currents[2] > 0.0);
    }

    #[test]
    fn active_set_matches_enumeration() {
        let mut checked = 0;
        for seed in 0..60 {
            let Ok((circuit, sol)) = gen_one_circuit(seed) else {
                continue;
            };
            let reference = solve_dc_enumerate(&circuit).unwrap();
            for (a, b) in sol.currents.iter().zip(&reference.currents) {
                assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            }
            assert!(kcl_residual(&circuit, &sol) < 1e-9);
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn diode_complementarity_holds() {
        for seed in 100..140 {
            let Ok((circuit, sol)) = gen_one_circuit(seed) else {
                continue;
            };
            for &(e, on) in &sol.diode_on {
                let (u, v) = (circuit.graph.edge(e).u, circuit.graph.edge(e).v);
                let fwd_voltage = sol.potentials[u] - sol.potentials[v];
                if on {
                    assert!(sol.currents[e] >= -STATE_TOL);
                    assert!(fwd_voltage.abs() < 1e-9);
                } else {
                    assert_eq!(sol.currents[e], 0.0);
                    assert!(fwd_voltage <= STATE_TOL);
                }
            }
        }
    }

    #[test]
    fn dataset_shapes_and_normalization() {
        let ds = gen_circuits(20, 77).unwrap();
        assert_eq!(ds.samples.len(), 20);
        for s in &ds.samples {
            let n = s.graph.node_count();
            let m = s.edge_count();
            assert!((8..=12).contains(&n));
            assert!((12..=20).contains(&m));
            assert_eq!(s.x_inv.cols, 4);
            assert_eq!(s.x_equ.cols, 1);
            // exactly one source
            let sources: usize = (0..m).filter(|&e| s.x_inv.get(e, 0) > 0.5).count();
            assert_eq!(sources, 1);
        }
        assert!(ds.norm_constants.contains_key("current_std"));
    }
}
