//! Labeled samples and split bookkeeping.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::graph::{Graph, Orientation};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    BinaryClass,
    Regression,
}

/// One graph with edge features, targets, and the per-edge scoring mask.
/// Equivariant columns (features and targets) are stored relative to the
/// sample's orientation.
#[derive(Debug, Clone)]
pub struct LabeledGraphSample {
    pub graph: Graph,
    pub orientation: Orientation,
    pub x_equ: Tensor,
    pub x_inv: Tensor,
    pub y: Tensor,
    pub task: TaskKind,
    pub mask: Vec<bool>,
    /// Edges pinned to the training split (single-graph datasets only).
    pub forced_train: Option<Vec<bool>>,
}

impl LabeledGraphSample {
    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.graph.edge_count();
        for (name, rows) in [
            ("x_equ", self.x_equ.rows),
            ("x_inv", self.x_inv.rows),
            ("y", self.y.rows),
        ] {
            if rows != m {
                return Err(Error::Dimension(format!(
                    "{} has {} rows for {} edges",
                    name, rows, m
                )));
            }
        }
        if self.mask.len() != m {
            return Err(Error::Dimension(format!(
                "mask has {} entries for {} edges",
                self.mask.len(),
                m
            )));
        }
        Ok(())
    }
}

/// Which samples (or which edges, for single-graph data) belong to each split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SplitSpec {
    Graphs {
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    },
    Edges {
        train: Vec<bool>,
        val: Vec<bool>,
        test: Vec<bool>,
    },
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub seed: u64,
    pub samples: Vec<LabeledGraphSample>,
    pub split: SplitSpec,
    /// Normalization constants and other generation facts, for exact reload.
    pub norm_constants: std::collections::BTreeMap<String, f64>,
}

impl Dataset {
    pub fn task(&self) -> TaskKind {
        self.samples[0].task
    }

    pub fn feature_dims(&self) -> (usize, usize) {
        (self.samples[0].x_equ.cols, self.samples[0].x_inv.cols)
    }
}

/// Seeded shuffle split of `count` items into train/val/test by ratio.
pub fn graph_split(
    count: usize,
    ratios: (f64, f64, f64),
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    use rand::Rng;
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = rng_from_seed(seed);
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((count as f64) * ratios.0).round() as usize;
    let n_val = ((count as f64) * ratios.1).round() as usize;
    let n_train = n_train.min(count);
    let n_val = n_val.min(count - n_train);
    let train = order[..n_train].to_vec();
    let val = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..].to_vec();
    (train, val, test)
}

/// Edge-level split for a single-graph dataset. Edges flagged in
/// `forced_train` always land in train; the rest are distributed by ratio.
pub fn edge_split(
    m: usize,
    forced_train: &[bool],
    ratios: (f64, f64, f64),
    seed: u64,
) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    use rand::Rng;
    let mut train = vec![false; m];
    let mut val = vec![false; m];
    let mut test = vec![false; m];
    let free: Vec<usize> = (0..m).filter(|&e| !forced_train[e]).collect();
    let mut order = free.clone();
    let mut rng = rng_from_seed(seed);
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((order.len() as f64) * ratios.0).round() as usize;
    let n_val = ((order.len() as f64) * ratios.1).round() as usize;
    for (k, &e) in order.iter().enumerate() {
        if k < n_train {
            train[e] = true;
        } else if k < n_train + n_val {
            val[e] = true;
        } else {
            test[e] = true;
        }
    }
    for e in 0..m {
        if forced_train[e] {
            train[e] = true;
        }
    }
    (train, val, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_split_partitions() {
        let (train, val, test) = graph_split(100, (0.7, 0.1, 0.2), 3);
        assert_eq!(train.len(), 70);
        assert_eq!(val.len(), 10);
        assert_eq!(test.len(), 20);
        let mut all: Vec<usize> = train.iter().chain(&val).chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        // deterministic
        assert_eq!(graph_split(100, (0.7, 0.1, 0.2), 3).0, train);
    }

    #[test]
    fn edge_split_respects_forced_edges() {
        let forced = vec![true, false, false, false, true, false, false, false, false, false];
        let (train, val, test) = edge_split(10, &forced, (0.5, 0.25, 0.25), 9);
        assert!(train[0] && train[4]);
        for e in 0..10 {
            let count = train[e] as u8 + val[e] as u8 + test[e] as u8;
            assert_eq!(count, 1, "edge {} in {} splits", e, count);
        }
    }
}
