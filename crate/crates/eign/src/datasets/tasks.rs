//! Task constructions over regression samples: denoising, interpolation from
//! a revealed subset, and bare simulation.

use rand::Rng;

use super::sample::{Dataset, LabeledGraphSample, TaskKind};
use crate::autodiff::Tensor;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Target plus uniform noise in [-sigma_y, sigma_y] becomes an input.
    Denoise,
    /// 10% of true targets become an input; only the rest are scored.
    Interpolate,
    /// No extra inputs.
    Simulate,
}

impl Task {
    pub fn parse(s: &str) -> Result<Task> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "denoise" | "denoising" => Task::Denoise,
            "interpolate" | "interpolation" => Task::Interpolate,
            "simulate" | "simulation" => Task::Simulate,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown task {:?}",
                    other
                )))
            }
        })
    }
}

const REVEAL_FRACTION: f64 = 0.10;

fn append_column(x: &Tensor, col: &[f64]) -> Tensor {
    let mut out = Tensor::zeros(x.rows, x.cols + 1);
    for r in 0..x.rows {
        for c in 0..x.cols {
            out.set(r, c, x.get(r, c));
        }
        out.set(r, x.cols, col[r]);
    }
    out
}

/// Derive a task variant of a regression sample.
pub fn make_task(sample: &LabeledGraphSample, task: Task, seed: u64) -> Result<LabeledGraphSample> {
    if sample.task != TaskKind::Regression {
        return Err(Error::InvalidParameter(
            "task construction applies to regression samples".into(),
        ));
    }
    let m = sample.edge_count();
    let mut out = sample.clone();
    match task {
        Task::Simulate => {}
        Task::Denoise => {
            let mut rng = rng_from_seed(seed);
            let mean = sample.y.data.iter().sum::<f64>() / m as f64;
            let sigma = (sample
                .y
                .data
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / m as f64)
                .sqrt();
            let noisy: Vec<f64> = sample
                .y
                .data
                .iter()
                .map(|v| v + rng.gen_range(-1.0..1.0) * sigma)
                .collect();
            out.x_equ = append_column(&sample.x_equ, &noisy);
        }
        Task::Interpolate => {
            let mut rng = rng_from_seed(seed);
            let revealed: Vec<bool> = (0..m).map(|_| rng.gen::<f64>() < REVEAL_FRACTION).collect();
            let col: Vec<f64> = (0..m)
                .map(|e| if revealed[e] { sample.y.get(e, 0) } else { 0.0 })
                .collect();
            out.x_equ = append_column(&sample.x_equ, &col);
            for e in 0..m {
                out.mask[e] = sample.mask[e] && !revealed[e];
            }
        }
    }
    Ok(out)
}

/// Apply a task construction to every sample of a dataset.
pub fn apply_task(dataset: &Dataset, task: Task, seed: u64) -> Result<Dataset> {
    let samples: Result<Vec<LabeledGraphSample>> = dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| make_task(s, task, derive_seed(seed, i as u64)))
        .collect();
    Ok(Dataset {
        name: format!("{}-{:?}", dataset.name, task).to_lowercase(),
        seed,
        samples: samples?,
        split: dataset.split.clone(),
        norm_constants: dataset.norm_constants.clone(),
    })
}
