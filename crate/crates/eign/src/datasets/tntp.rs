//! Transportation-network files: angle-bracket metadata, a link table, and a
//! separate flow table. Anti-parallel directed links merge into undirected
//! edges whose flow is the difference along the kept reference orientation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use super::sample::{LabeledGraphSample, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{canonical_orientation, Edge, Graph};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

const LINK_FEATURES: usize = 8;

#[derive(Debug, Clone, Copy)]
struct LinkRow {
    init: usize,
    term: usize,
    features: [f64; LINK_FEATURES], // capacity, length, fft, b, power, speed, toll, type
}

struct NetFile {
    num_nodes: usize,
    first_thru_node: usize,
    links: Vec<LinkRow>,
}

fn parse_metadata_value(line: &str, lineno: usize) -> Result<f64> {
    let close = line.find('>').ok_or(Error::Parse {
        line: lineno,
        message: "unterminated metadata header".into(),
    })?;
    let value = line[close + 1..].trim();
    value.parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("non-numeric metadata value {:?}", value),
    })
}

fn parse_net(text: &str) -> Result<NetFile> {
    let mut num_nodes = None;
    let mut first_thru_node = 1usize;
    let mut links = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if line.starts_with('<') {
            let upper = line.to_ascii_uppercase();
            if upper.starts_with("<NUMBER OF NODES>") {
                num_nodes = Some(parse_metadata_value(line, lineno)? as usize);
            } else if upper.starts_with("<FIRST THRU NODE>") {
                first_thru_node = parse_metadata_value(line, lineno)? as usize;
            }
            // other headers (<NUMBER OF LINKS>, <END OF METADATA>, ...) are
            // informational
            continue;
        }
        let row = line.trim_end_matches(';').trim();
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("link row needs 10 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("non-numeric field {:?}", s),
            })
        };
        let init = parse(fields[0])? as usize;
        let term = parse(fields[1])? as usize;
        let mut features = [0.0; LINK_FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            *f = parse(fields[2 + k])?;
        }
        links.push(LinkRow {
            init,
            term,
            features,
        });
    }
    let num_nodes = num_nodes.ok_or(Error::Parse {
        line: 0,
        message: "missing <NUMBER OF NODES> header".into(),
    })?;
    for (i, l) in links.iter().enumerate() {
        if l.init == 0 || l.init > num_nodes || l.term == 0 || l.term > num_nodes {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("node index out of range: ({}, {})", l.init, l.term),
            });
        }
    }
    Ok(NetFile {
        num_nodes,
        first_thru_node,
        links,
    })
}

fn parse_flows(text: &str) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut flows = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') || line.starts_with('<') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("from") {
            continue; // column header
        }
        let fields: Vec<&str> = line.trim_end_matches(';').split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: lineno,
                message: "flow row needs `from to volume [cost]`".into(),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("non-numeric field {:?}", s),
            })
        };
        let from = parse(fields[0])? as usize;
        let to = parse(fields[1])? as usize;
        let volume = parse(fields[2])?;
        flows.insert((from, to), volume);
    }
    Ok(flows)
}

/// A loaded network plus its preprocessing constants.
#[derive(Debug, Clone)]
pub struct TntpSample {
    pub sample: LabeledGraphSample,
    pub directed_edges: usize,
    /// Merged raw flow per edge, before [0, 1] normalization.
    pub raw_flows: Vec<f64>,
    pub flow_min: f64,
    pub flow_max: f64,
}

/// Parse, merge anti-parallel links, normalize, and mark zone-incident edges.
///
/// Nodes below the first-through-node threshold are zone centroids; edges
/// touching them get an indicator feature and are pinned to the training
/// split so demand boundary conditions stay observable.
pub fn load_tntp(net_text: &str, flow_text: &str) -> Result<TntpSample> {
    let net = parse_net(net_text)?;
    let flows = parse_flows(flow_text)?;
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, l) in net.links.iter().enumerate() {
        if seen.insert((l.init, l.term), i).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate link ({}, {})", l.init, l.term),
            });
        }
    }

    let mut edges = Vec::new();
    let mut features: Vec<[f64; LINK_FEATURES]> = Vec::new();
    let mut raw_flows = Vec::new();
    let mut consumed = vec![false; net.links.len()];
    let mut directed_edges = 0;
    for (i, l) in net.links.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let flow_fwd = flows.get(&(l.init, l.term)).copied().unwrap_or(0.0);
        match seen.get(&(l.term, l.init)) {
            Some(&j) if !consumed[j] => {
                consumed[j] = true;
                let rev = &net.links[j];
                let flow_rev = flows.get(&(l.term, l.init)).copied().unwrap_or(0.0);
                // keep the lower-index endpoint first; flows subtract along
                // that reference
                let (a, b, f) = if l.init < l.term {
                    (l.init, l.term, flow_fwd - flow_rev)
                } else {
                    (l.term, l.init, flow_rev - flow_fwd)
                };
                edges.push(Edge::undirected(a - 1, b - 1));
                let mut avg = [0.0; LINK_FEATURES];
                for k in 0..LINK_FEATURES {
                    avg[k] = 0.5 * (l.features[k] + rev.features[k]);
                }
                features.push(avg);
                raw_flows.push(f);
            }
            _ => {
                edges.push(Edge::directed(l.init - 1, l.term - 1));
                features.push(l.features);
                raw_flows.push(flow_fwd);
                directed_edges += 1;
            }
        }
    }

    let graph = Graph::new(net.num_nodes, edges)?;
    let m = graph.edge_count();

    // standard-normalize link features, append the zone indicator
    let mut x_inv = Tensor::zeros(m, LINK_FEATURES + 1);
    for k in 0..LINK_FEATURES {
        let column: Vec<f64> = features.iter().map(|f| f[k]).collect();
        let mu = column.iter().sum::<f64>() / m as f64;
        let sd = (column.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64)
            .sqrt()
            .max(1e-12);
        for e in 0..m {
            x_inv.set(e, k, (column[e] - mu) / sd);
        }
    }
    let zone_cut = net.first_thru_node.saturating_sub(1); // 0-based exclusive bound
    let mut forced = vec![false; m];
    for (e, edge) in graph.edges().iter().enumerate() {
        if edge.u < zone_cut || edge.v < zone_cut {
            forced[e] = true;
            x_inv.set(e, LINK_FEATURES, 1.0);
        }
    }

    // flows to [0, 1]
    let flow_min = raw_flows.iter().copied().fold(f64::INFINITY, f64::min);
    let flow_max = raw_flows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (flow_max - flow_min).max(1e-12);
    let y = Tensor::from_vec(m, 1, raw_flows.iter().map(|f| (f - flow_min) / span).collect());

    let orientation = canonical_orientation(&graph);
    let sample = LabeledGraphSample {
        graph,
        orientation,
        x_equ: Tensor::zeros(m, 0),
        x_inv,
        y,
        task: TaskKind::Regression,
        mask: vec![true; m],
        forced_train: Some(forced),
    };
    Ok(TntpSample {
        sample,
        directed_edges,
        raw_flows,
        flow_min,
        flow_max,
    })
}

pub fn load_tntp_files(net_path: &Path, flow_path: &Path) -> Result<TntpSample> {
    let net_text = std::fs::read_to_string(net_path)?;
    let flow_text = std::fs::read_to_string(flow_path)?;
    load_tntp(&net_text, &flow_text)
}

/// Write a synthetic network with the Anaheim shape: 416 nodes, 38 zone
/// centroids, 914 links of which 280 bidirectional pairs merge into
/// undirected edges, leaving 354 one-way links (634 edges total).
pub fn write_anaheim_shaped_fixture(dir: &Path, seed: u64) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    use std::fmt::Write as _;
    const NODES: usize = 416;
    const FIRST_THRU: usize = 39;
    const TWO_WAY: usize = 280;
    const ONE_WAY: usize = 354;
    let mut rng = rng_from_seed(seed);
    let mut pairs = std::collections::BTreeSet::new();
    // ring so every node appears, then random chords
    let mut ordered: Vec<(usize, usize)> = Vec::new();
    for i in 0..NODES {
        let (a, b) = (i + 1, (i + 1) % NODES + 1);
        let key = (a.min(b), a.max(b));
        if pairs.insert(key) {
            ordered.push(key);
        }
    }
    while ordered.len() < TWO_WAY + ONE_WAY {
        let a = rng.gen_range(1..=NODES);
        let b = rng.gen_range(1..=NODES);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if pairs.insert(key) {
            ordered.push(key);
        }
    }

    let mut net = String::new();
    let total_links = 2 * TWO_WAY + ONE_WAY;
    writeln!(net, "<NUMBER OF ZONES> {}", FIRST_THRU - 1).unwrap();
    writeln!(net, "<NUMBER OF NODES> {}", NODES).unwrap();
    writeln!(net, "<FIRST THRU NODE> {}", FIRST_THRU).unwrap();
    writeln!(net, "<NUMBER OF LINKS> {}", total_links).unwrap();
    writeln!(net, "<END OF METADATA>").unwrap();
    writeln!(
        net,
        "~ init_node term_node capacity length free_flow_time b power speed toll link_type ;"
    )
    .unwrap();
    let mut flow = String::new();
    writeln!(flow, "<NUMBER OF NODES> {}", NODES).unwrap();
    writeln!(flow, "<END OF METADATA>").unwrap();
    writeln!(flow, "From \tTo \tVolume \tCost ;").unwrap();
    let emit = |net: &mut String, flow: &mut String, a: usize, b: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let capacity = rng.gen_range(400.0..9000.0f64);
        let length = rng.gen_range(0.1..5.0f64);
        let fft = length / rng.gen_range(0.3..1.2f64);
        let volume = rng.gen_range(0.0..6000.0f64);
        writeln!(
            net,
            "{} {} {:.4} {:.4} {:.4} 0.15 4 {:.1} 0 1 ;",
            a,
            b,
            capacity,
            length,
            fft,
            rng.gen_range(25.0..65.0f64),
        )
        .unwrap();
        writeln!(flow, "{} \t{} \t{:.4} \t{:.4}", a, b, volume, fft).unwrap();
    };
    for (i, &(a, b)) in ordered.iter().enumerate() {
        if i < TWO_WAY {
            emit(&mut net, &mut flow, a, b, &mut rng);
            emit(&mut net, &mut flow, b, a, &mut rng);
        } else {
            let (s, t) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
            emit(&mut net, &mut flow, s, t, &mut rng);
        }
    }
    std::fs::create_dir_all(dir)?;
    let net_path = dir.join("fixture_net.tntp");
    let flow_path = dir.join("fixture_flow.tntp");
    std::fs::write(&net_path, net)?;
    std::fs::write(&flow_path, flow)?;
    Ok((net_path, flow_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY_NET: &str = "\
<NUMBER OF NODES> 3
<FIRST THRU NODE> 1
<END OF METADATA>
~ init term capacity length fft b power speed toll type ;
1 2 100 1.0 1.0 0.15 4 50 0 1 ;
2 1 100 1.0 1.0 0.15 4 50 0 1 ;
2 3 200 2.0 1.5 0.15 4 40 0 1 ;
";

    const TINY_FLOW: &str = "\
From To Volume Cost
1 2 5.0 1.0
2 1 3.0 1.0
2 3 7.0 1.5
";

    #[test]
    fn merges_anti_parallel_pairs_by_subtraction() {
        let loaded = load_tntp(TINY_NET, TINY_FLOW).unwrap();
        let g = &loaded.sample.graph;
        assert_eq!(g.edge_count(), 2);
        assert_eq!(loaded.directed_edges, 1);
        // merged edge (0,1) with flow 5 - 3 = 2 along the reference
        let merged = g
            .edges()
            .iter()
            .position(|e| !e.is_directed())
            .expect("one merged edge");
        assert_eq!(g.edge(merged), Edge::undirected(0, 1));
        assert!((loaded.raw_flows[merged] - 2.0).abs() < 1e-12);
        // one-way link stays directed with its own flow
        let one_way = g.edges().iter().position(|e| e.is_directed()).unwrap();
        assert_eq!(g.edge(one_way), Edge::directed(1, 2));
        assert!((loaded.raw_flows[one_way] - 7.0).abs() < 1e-12);
        // normalized flows live in [0, 1]
        for v in &loaded.sample.y.data {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn malformed_files_get_line_diagnostics() {
        let bad = TINY_NET.replace("2 3 200", "2 9 200");
        assert!(matches!(
            load_tntp(&bad, TINY_FLOW),
            Err(Error::Parse { .. })
        ));
        let bad2 = TINY_NET.replace("200", "abc");
        assert!(matches!(
            load_tntp(&bad2, TINY_FLOW),
            Err(Error::Parse { .. })
        ));
        assert!(load_tntp("no header\n", TINY_FLOW).is_err());
    }

    #[test]
    fn fixture_reproduces_reference_counts() {
        let dir = std::env::temp_dir().join(format!("eign-tntp-{}", std::process::id()));
        let (net, flow) = write_anaheim_shaped_fixture(&dir, 1234).unwrap();
        let loaded = load_tntp_files(&net, &flow).unwrap();
        assert_eq!(loaded.sample.graph.node_count(), 416);
        assert_eq!(loaded.sample.graph.edge_count(), 634);
        assert_eq!(loaded.directed_edges, 354);
        // zone-incident edges are pinned to training
        let forced = loaded.sample.forced_train.as_ref().unwrap();
        assert!(forced.iter().any(|&f| f));
        std::fs::remove_dir_all(&dir).ok();
    }
}
