//! Cartesian hyperparameter grid with repeated runs and confidence intervals.

use serde::{Deserialize, Serialize};

use super::harness::{train_model, TrainConfig};
use crate::datasets::Dataset;
use crate::nn::ModelConfig;
use crate::rng::derive_seed;
use crate::Result;

/// Grid axes; the per-run template supplies everything else.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub lrs: Vec<f64>,
    pub hiddens: Vec<usize>,
    pub layers: Vec<usize>,
}

impl GridSpec {
    /// The hyperparameter options used for tuned runs.
    pub fn paper_grid() -> GridSpec {
        GridSpec {
            lrs: vec![0.03, 0.01, 0.003, 0.001],
            hiddens: vec![8, 16, 32],
            layers: vec![2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub lr: f64,
    pub hidden: usize,
    pub layers: usize,
    /// Mean of the selection metric (validation) over repeats.
    pub mean_val: f64,
    /// 95% normal-approximation half-width of the mean.
    pub ci95_val: f64,
    pub mean_test: f64,
    pub ci95_test: f64,
    pub repeats: usize,
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Run every (lr, hidden, layers) cell `repeats` times with derived seeds.
pub fn run_grid(
    template: &ModelConfig,
    train_template: &TrainConfig,
    dataset: &Dataset,
    grid: &GridSpec,
    repeats: usize,
) -> Result<Vec<GridRow>> {
    let mut rows = Vec::new();
    for &lr in &grid.lrs {
        for &hidden in &grid.hiddens {
            for &layers in &grid.layers {
                let cfg = ModelConfig {
                    hidden,
                    layers,
                    ..template.clone()
                };
                let mut vals = Vec::with_capacity(repeats);
                let mut tests = Vec::with_capacity(repeats);
                for r in 0..repeats {
                    let tc = TrainConfig {
                        lr,
                        seed: derive_seed(train_template.seed, r as u64),
                        ..train_template.clone()
                    };
                    let trained = train_model(&cfg, &tc, dataset)?;
                    let best_val = trained
                        .report
                        .history
                        .get(trained.report.best_epoch)
                        .map(|s| s.val_metric)
                        .unwrap_or(f64::NAN);
                    vals.push(best_val);
                    tests.push(trained.report.primary());
                }
                let (mean_val, ci95_val) = mean_ci(&vals);
                let (mean_test, ci95_test) = mean_ci(&tests);
                rows.push(GridRow {
                    lr,
                    hidden,
                    layers,
                    mean_val,
                    ci95_val,
                    mean_test,
                    ci95_test,
                    repeats,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_ld_cycles;
    use crate::nn::Architecture;

    #[test]
    fn grid_shape_and_degenerate_ci() {
        let ds = gen_ld_cycles(10, 4).unwrap();
        let template = ModelConfig::new(Architecture::Mlp, 1, 4);
        let tc = TrainConfig {
            epochs: 1,
            ..Default::default()
        };
        let grid = GridSpec {
            lrs: vec![0.01],
            hiddens: vec![4],
            layers: vec![1],
        };
        let rows = run_grid(&template, &tc, &ds, &grid, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].ci95_val, 0.0);
        // full grid shape: 4 x 3 x 3 = 36 cells
        assert_eq!(
            GridSpec::paper_grid().lrs.len()
                * GridSpec::paper_grid().hiddens.len()
                * GridSpec::paper_grid().layers.len(),
            36
        );
    }

    #[test]
    fn identical_repeats_have_zero_ci() {
        // repeated identical values: the CI collapses
        let (m, ci) = mean_ci(&[0.75, 0.75, 0.75, 0.75]);
        assert_eq!(m, 0.75);
        assert_eq!(ci, 0.0);
    }
}
