//! The optimization loop: mini-batches over graphs (or one masked graph),
//! per-epoch validation, best-checkpoint selection, and final test metrics.

use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{auc_roc, mae, r2, rmse};
use super::optimizer::{adam_step, clip_grad_norm, AdamState};
use crate::autodiff::{Tape, Tensor};
use crate::datasets::{Dataset, SplitSpec, TaskKind};
use crate::nn::{build_bundle, forward, init_params, BoundParams, ModelConfig, OperatorBundle, Params};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Graphs per optimizer step (ignored for single-graph datasets).
    pub batch_size: usize,
    pub epochs: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.003,
            batch_size: 10,
            epochs: 50,
            grad_clip_norm: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub r2: Option<f64>,
    pub auc: Option<f64>,
    pub history: Vec<EpochStat>,
    pub best_epoch: usize,
    pub wall_time_secs: f64,
}

impl MetricsReport {
    /// The headline number: AUC for classification, RMSE for regression.
    pub fn primary(&self) -> f64 {
        self.auc.or(self.rmse).unwrap_or(f64::NAN)
    }
}

pub struct TrainedModel {
    pub cfg: ModelConfig,
    /// Best-validation checkpoint (used for the reported test metrics).
    pub params: Params,
    /// Parameters after the last epoch, for diagnostics.
    pub final_params: Params,
    pub report: MetricsReport,
}

/// Fill in the input/output dimensions a dataset requires.
pub fn configure_for(dataset: &Dataset, template: &ModelConfig) -> ModelConfig {
    let (d_equ, d_inv) = dataset.feature_dims();
    let (d_out_equ, d_out_inv) = match dataset.task() {
        TaskKind::Regression => (1, 0),
        TaskKind::BinaryClass => (0, 1),
    };
    ModelConfig {
        d_in_equ: d_equ,
        d_in_inv: d_inv,
        d_out_equ,
        d_out_inv,
        ..template.clone()
    }
}

struct Prepared {
    bundles: Vec<OperatorBundle>,
    /// Loss weights per edge for training (1.0 where scored).
    train_mask: Vec<Rc<Vec<f64>>>,
    val_mask: Vec<Vec<bool>>,
    test_mask: Vec<Vec<bool>>,
    train_ids: Vec<usize>,
    val_ids: Vec<usize>,
    test_ids: Vec<usize>,
    targets: Vec<Rc<Tensor>>,
}

fn bool_to_f64(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| x && y).collect()
}

fn prepare(cfg: &ModelConfig, dataset: &Dataset) -> Result<Prepared> {
    let mut bundles = Vec::with_capacity(dataset.samples.len());
    let mut targets = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        s.validate()?;
        bundles.push(build_bundle(cfg, &s.graph, &s.orientation)?);
        targets.push(Rc::new(s.y.clone()));
    }
    match &dataset.split {
        SplitSpec::Graphs { train, val, test } => {
            if train.is_empty() || val.is_empty() || test.is_empty() {
                return Err(Error::EmptySplit("graph split has an empty part".into()));
            }
            let train_mask = dataset
                .samples
                .iter()
                .map(|s| Rc::new(bool_to_f64(&s.mask)))
                .collect();
            Ok(Prepared {
                bundles,
                train_mask,
                val_mask: dataset.samples.iter().map(|s| s.mask.clone()).collect(),
                test_mask: dataset.samples.iter().map(|s| s.mask.clone()).collect(),
                train_ids: train.clone(),
                val_ids: val.clone(),
                test_ids: test.clone(),
                targets,
            })
        }
        SplitSpec::Edges { train, val, test } => {
            if dataset.samples.len() != 1 {
                return Err(Error::InvalidParameter(
                    "edge split requires a single-graph dataset".into(),
                ));
            }
            let s = &dataset.samples[0];
            let tm = and(&s.mask, train);
            let vm = and(&s.mask, val);
            let em = and(&s.mask, test);
            if !tm.iter().any(|&b| b) || !vm.iter().any(|&b| b) || !em.iter().any(|&b| b) {
                return Err(Error::EmptySplit("edge split has an empty part".into()));
            }
            Ok(Prepared {
                bundles,
                train_mask: vec![Rc::new(bool_to_f64(&tm))],
                val_mask: vec![vm],
                test_mask: vec![em],
                train_ids: vec![0],
                val_ids: vec![0],
                test_ids: vec![0],
                targets,
            })
        }
    }
}

/// Predictions of the task head for one sample, in evaluation mode.
fn predict(
    cfg: &ModelConfig,
    params: &Params,
    dataset: &Dataset,
    bundle: &OperatorBundle,
    idx: usize,
) -> Result<Tensor> {
    let s = &dataset.samples[idx];
    let mut tape = Tape::new();
    let bound = BoundParams::bind(params, &mut tape);
    let out = forward(cfg, &bound, bundle, &mut tape, &s.x_equ, &s.x_inv, None)?;
    let head = match dataset.task() {
        TaskKind::Regression => out.y_equ,
        TaskKind::BinaryClass => out.y_inv,
    }
    .ok_or_else(|| Error::InvalidParameter("model lacks the task head".into()))?;
    Ok(tape.value(head).clone())
}

/// Pooled metric over the given samples/masks. Classification pools logits
/// into one ranking; regression pools squared errors.
fn pooled_metric(
    cfg: &ModelConfig,
    params: &Params,
    dataset: &Dataset,
    prep: &Prepared,
    ids: &[usize],
    masks: &[Vec<bool>],
) -> Result<f64> {
    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut mask_all = Vec::new();
    for &i in ids {
        let p = predict(cfg, params, dataset, &prep.bundles[i], i)?;
        preds.extend_from_slice(&p.data);
        targets.extend_from_slice(&dataset.samples[i].y.data);
        mask_all.extend_from_slice(&masks[i]);
    }
    match dataset.task() {
        TaskKind::Regression => rmse(&preds, &targets, &mask_all),
        TaskKind::BinaryClass => {
            let scores: Vec<f64> = preds
                .iter()
                .zip(&mask_all)
                .filter(|(_, &m)| m)
                .map(|(&p, _)| p)
                .collect();
            let labels: Vec<bool> = targets
                .iter()
                .zip(&mask_all)
                .filter(|(_, &m)| m)
                .map(|(&t, _)| t > 0.5)
                .collect();
            // a split without both classes ranks nothing; call it chance
            Ok(auc_roc(&scores, &labels).unwrap_or(0.5))
        }
    }
}

/// Full training run with validation-based checkpoint selection.
pub fn train_model(
    template: &ModelConfig,
    train_cfg: &TrainConfig,
    dataset: &Dataset,
) -> Result<TrainedModel> {
    let started = Instant::now();
    let cfg = configure_for(dataset, template);
    cfg.validate()?;
    let prep = prepare(&cfg, dataset)?;
    let mut params = init_params(&cfg, derive_seed(train_cfg.seed, 0xB00))?;
    let mut adam = AdamState::new(&params);
    let mut dropout_rng = rng_from_seed(derive_seed(train_cfg.seed, 0xD0));

    let higher_is_better = dataset.task() == TaskKind::BinaryClass;
    let mut best_params = params.clone();
    let mut best_metric = if higher_is_better {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(train_cfg.epochs);

    for epoch in 0..train_cfg.epochs {
        // seeded shuffle of the training samples
        let mut order = prep.train_ids.clone();
        {
            use rand::Rng;
            let mut rng = rng_from_seed(derive_seed(train_cfg.seed, 1000 + epoch as u64));
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
        }
        let mut epoch_loss = 0.0;
        let mut batches = order.chunks(train_cfg.batch_size.max(1));
        for batch in &mut batches {
            let mut grad_accum: Vec<Tensor> = params
                .entries()
                .iter()
                .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
                .collect();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &dataset.samples[i];
                let mut tape = Tape::new();
                let bound = BoundParams::bind(&params, &mut tape);
                let out = forward(
                    &cfg,
                    &bound,
                    &prep.bundles[i],
                    &mut tape,
                    &s.x_equ,
                    &s.x_inv,
                    Some(&mut dropout_rng),
                )?;
                let loss = match dataset.task() {
                    TaskKind::Regression => {
                        let head = out.y_equ.expect("regression head");
                        tape.masked_mse(head, prep.targets[i].clone(), prep.train_mask[i].clone())
                    }
                    TaskKind::BinaryClass => {
                        let head = out.y_inv.expect("classification head");
                        tape.masked_bce_logits(
                            head,
                            prep.targets[i].clone(),
                            prep.train_mask[i].clone(),
                        )
                    }
                };
                epoch_loss += tape.value(loss).data[0] * scale;
                let grads = tape.backward(loss)?;
                for (k, (_, _)) in params.entries().iter().enumerate() {
                    if let Some(g) = grads.get(bound.id(&params.entries()[k].0)) {
                        for (acc, v) in grad_accum[k].data.iter_mut().zip(&g.data) {
                            *acc += scale * v;
                        }
                    }
                }
            }
            clip_grad_norm(&mut grad_accum, train_cfg.grad_clip_norm);
            adam_step(&mut params, &grad_accum, &mut adam, train_cfg.lr)?;
        }
        let n_batches = (prep.train_ids.len() + train_cfg.batch_size.max(1) - 1)
            / train_cfg.batch_size.max(1);
        let train_loss = epoch_loss / n_batches.max(1) as f64;

        let val_metric = pooled_metric(&cfg, &params, dataset, &prep, &prep.val_ids, &prep.val_mask)?;
        let improved = if higher_is_better {
            val_metric > best_metric
        } else {
            val_metric < best_metric
        };
        if improved {
            best_metric = val_metric;
            best_params = params.clone();
            best_epoch = epoch;
        }
        history.push(EpochStat {
            epoch,
            train_loss,
            val_metric,
        });
    }

    // final test evaluation from the best checkpoint
    let mut preds = Vec::new();
    let mut targets = Vec::new();
    let mut mask_all = Vec::new();
    for &i in &prep.test_ids {
        let p = predict(&cfg, &best_params, dataset, &prep.bundles[i], i)?;
        preds.extend_from_slice(&p.data);
        targets.extend_from_slice(&dataset.samples[i].y.data);
        mask_all.extend_from_slice(&prep.test_mask[i]);
    }
    let report = match dataset.task() {
        TaskKind::Regression => MetricsReport {
            rmse: Some(rmse(&preds, &targets, &mask_all)?),
            mae: Some(mae(&preds, &targets, &mask_all)?),
            r2: r2(&preds, &targets, &mask_all).ok(),
            auc: None,
            history,
            best_epoch,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        TaskKind::BinaryClass => {
            let scores: Vec<f64> = preds
                .iter()
                .zip(&mask_all)
                .filter(|(_, &m)| m)
                .map(|(&p, _)| p)
                .collect();
            let labels: Vec<bool> = targets
                .iter()
                .zip(&mask_all)
                .filter(|(_, &m)| m)
                .map(|(&t, _)| t > 0.5)
                .collect();
            MetricsReport {
                rmse: None,
                mae: None,
                r2: None,
                auc: Some(auc_roc(&scores, &labels).unwrap_or(0.5)),
                history,
                best_epoch,
                wall_time_secs: started.elapsed().as_secs_f64(),
            }
        }
    };
    Ok(TrainedModel {
        cfg,
        params: best_params,
        final_params: params,
        report,
    })
}

/// Which split to pull predictions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Per-sample task-head predictions with the edges scored in that split.
pub fn evaluate_predictions(
    cfg: &ModelConfig,
    params: &Params,
    dataset: &Dataset,
    split: Split,
) -> Result<Vec<(usize, Tensor, Vec<bool>)>> {
    let prep = prepare(cfg, dataset)?;
    let (ids, masks) = match split {
        Split::Train => (
            &prep.train_ids,
            prep
                .train_mask
                .iter()
                .map(|m| m.iter().map(|&v| v > 0.0).collect::<Vec<bool>>())
                .collect::<Vec<_>>(),
        ),
        Split::Val => (&prep.val_ids, prep.val_mask.clone()),
        Split::Test => (&prep.test_ids, prep.test_mask.clone()),
    };
    let mut out = Vec::new();
    for &i in ids {
        let p = predict(cfg, params, dataset, &prep.bundles[i], i)?;
        let mask = match split {
            Split::Train => prep.train_mask[i].iter().map(|&v| v > 0.0).collect(),
            Split::Val => prep.val_mask[i].clone(),
            Split::Test => prep.test_mask[i].clone(),
        };
        out.push((i, p, mask));
    }
    let _ = masks;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_ld_cycles, gen_tri_flow};
    use crate::graph::{apply_flip, random_orientation_flip};
    use crate::nn::Architecture;

    fn tiny_train_cfg(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: 0.01,
            batch_size: 4,
            epochs,
            grad_clip_norm: 1.0,
            seed,
        }
    }

    #[test]
    fn zero_epochs_returns_initial_metrics() {
        let ds = gen_ld_cycles(10, 3).unwrap();
        let template = ModelConfig::new(Architecture::Mlp, 1, 4);
        let trained = train_model(&template, &tiny_train_cfg(0, 1), &ds).unwrap();
        assert!(trained.report.history.is_empty());
        assert!(trained.report.auc.is_some());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = gen_ld_cycles(12, 5).unwrap();
        let template = ModelConfig {
            dropout: 0.1,
            ..ModelConfig::new(Architecture::Eign, 2, 4)
        };
        let a = train_model(&template, &tiny_train_cfg(3, 7), &ds).unwrap();
        let b = train_model(&template, &tiny_train_cfg(3, 7), &ds).unwrap();
        assert_eq!(a.report.auc, b.report.auc);
        for ((_, t1), (_, t2)) in a.params.entries().iter().zip(b.params.entries()) {
            assert_eq!(t1.data, t2.data);
        }
    }

    #[test]
    fn loss_decreases_within_ten_epochs() {
        let ds = gen_tri_flow(8, 11).unwrap();
        let template = ModelConfig::new(Architecture::Eign, 2, 8);
        let trained = train_model(&template, &tiny_train_cfg(10, 2), &ds).unwrap();
        let first = trained.report.history.first().unwrap().train_loss;
        let last = trained.report.history.last().unwrap().train_loss;
        assert!(
            last < first,
            "loss went from {} to {}",
            first,
            last
        );
    }

    #[test]
    fn evaluation_is_orientation_robust() {
        // flipping undirected edges (and re-representing equivariant inputs
        // and targets) must not move the test RMSE
        let ds = gen_tri_flow(6, 13).unwrap();
        let template = ModelConfig::new(Architecture::Eign, 2, 8);
        let trained = train_model(&template, &tiny_train_cfg(2, 3), &ds).unwrap();

        let mut flipped = ds.clone();
        for (i, s) in flipped.samples.iter_mut().enumerate() {
            let flip = random_orientation_flip(&s.graph, 900 + i as u64);
            let m = s.edge_count();
            s.x_equ = Tensor::from_vec(
                m,
                s.x_equ.cols,
                apply_flip(&s.x_equ.data, m, s.x_equ.cols, &flip).unwrap(),
            );
            s.y = Tensor::from_vec(m, 1, apply_flip(&s.y.data, m, 1, &flip).unwrap());
            s.orientation = s.orientation.apply(&flip);
        }
        let cfg = configure_for(&ds, &template);
        let prep_a = prepare(&cfg, &ds).unwrap();
        let prep_b = prepare(&cfg, &flipped).unwrap();
        let rmse_a = pooled_metric(&cfg, &trained.params, &ds, &prep_a, &prep_a.test_ids, &prep_a.test_mask).unwrap();
        let rmse_b = pooled_metric(
            &cfg,
            &trained.params,
            &flipped,
            &prep_b,
            &prep_b.test_ids,
            &prep_b.test_mask,
        )
        .unwrap();
        assert!(
            (rmse_a - rmse_b).abs() < 1e-8,
            "{} vs {}",
            rmse_a,
            rmse_b
        );
    }
}
