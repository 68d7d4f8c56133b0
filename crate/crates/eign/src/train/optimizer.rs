//! Adam with bias correction and global-norm gradient clipping.

use crate::autodiff::Tensor;
use crate::nn::Params;
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates aligned with the parameter entries.
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: usize,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        let zeros: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }
}

/// One Adam update (no weight decay). Gradients must be finite.
pub fn adam_step(
    params: &mut Params,
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::Dimension(format!(
            "adam: {} gradients for {} parameters",
            grads.len(),
            params.len()
        )));
    }
    for (i, g) in grads.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFinite(format!(
                "gradient of parameter {:?}",
                params.entries()[i].0
            )));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - ADAM_BETA1.powf(t);
    let bc2 = 1.0 - ADAM_BETA2.powf(t);
    for (i, (_, p)) in params.entries_mut().iter_mut().enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for k in 0..p.data.len() {
            let g = grads[i].data[k];
            m.data[k] = ADAM_BETA1 * m.data[k] + (1.0 - ADAM_BETA1) * g;
            v.data[k] = ADAM_BETA2 * v.data[k] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = m.data[k] / bc1;
            let v_hat = v.data[k] / bc2;
            p.data[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// Scale all gradients so their joint L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) {
    let total: f64 = grads
        .iter()
        .map(|g| g.data.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if total > max_norm && total > 0.0 {
        let scale = max_norm / total;
        for g in grads.iter_mut() {
            for v in g.data.iter_mut() {
                *v *= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Architecture, ModelConfig};

    fn scalar_params(value: f64) -> Params {
        // reuse the smallest schema and overwrite a single entry
        let cfg = ModelConfig::new(Architecture::Mlp, 1, 2).with_dims(0, 1, 0, 1);
        let mut p = init_params(&cfg, 0).unwrap();
        for (_, t) in p.entries_mut() {
            for v in t.data.iter_mut() {
                *v = value;
            }
        }
        p
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = scalar_params(0.3);
        let before: Vec<f64> = p
            .entries()
            .iter()
            .flat_map(|(_, t)| t.data.clone())
            .collect();
        let grads: Vec<Tensor> = p
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.rows, t.cols))
            .collect();
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &grads, &mut state, 0.1).unwrap();
        let after: Vec<f64> = p
            .entries()
            .iter()
            .flat_map(|(_, t)| t.data.clone())
            .collect();
        assert_eq!(before, after);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn quadratic_descent_converges() {
        // minimize (w - 3)^2 for every scalar in the parameter set
        let mut p = scalar_params(0.0);
        let mut state = AdamState::new(&p);
        for _ in 0..500 {
            let grads: Vec<Tensor> = p
                .entries()
                .iter()
                .map(|(_, t)| {
                    Tensor::from_vec(
                        t.rows,
                        t.cols,
                        t.data.iter().map(|w| 2.0 * (w - 3.0)).collect(),
                    )
                })
                .collect();
            adam_step(&mut p, &grads, &mut state, 0.1).unwrap();
        }
        for (_, t) in p.entries() {
            for w in &t.data {
                assert!((w - 3.0).abs() < 1e-3, "w = {}", w);
            }
        }
    }

    #[test]
    fn loss_decreases_monotonically_at_small_lr() {
        let mut p = scalar_params(1.0);
        let mut state = AdamState::new(&p);
        let loss = |p: &Params| -> f64 {
            p.entries()
                .iter()
                .flat_map(|(_, t)| t.data.iter())
                .map(|w| (w - 3.0) * (w - 3.0))
                .sum()
        };
        let mut prev = loss(&p);
        for _ in 0..50 {
            let grads: Vec<Tensor> = p
                .entries()
                .iter()
                .map(|(_, t)| {
                    Tensor::from_vec(
                        t.rows,
                        t.cols,
                        t.data.iter().map(|w| 2.0 * (w - 3.0)).collect(),
                    )
                })
                .collect();
            adam_step(&mut p, &grads, &mut state, 0.01).unwrap();
            let cur = loss(&p);
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn nan_gradient_aborts() {
        let mut p = scalar_params(0.0);
        let grads: Vec<Tensor> = p
            .entries()
            .iter()
            .map(|(_, t)| Tensor::from_vec(t.rows, t.cols, vec![f64::NAN; t.data.len()]))
            .collect();
        let mut state = AdamState::new(&p);
        assert!(adam_step(&mut p, &grads, &mut state, 0.1).is_err());
    }

    #[test]
    fn clipping_rescales_only_above_threshold() {
        let mut grads = vec![Tensor::from_vec(1, 2, vec![0.3, 0.4])];
        clip_grad_norm(&mut grads, 1.0);
        assert_eq!(grads[0].data, vec![0.3, 0.4]);
        let mut grads = vec![
            Tensor::from_vec(1, 2, vec![0.0, 2.4]),
            Tensor::from_vec(1, 1, vec![3.2]),
        ];
        clip_grad_norm(&mut grads, 1.0);
        let norm: f64 = grads
            .iter()
            .flat_map(|g| g.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((grads[0].data[1] - 0.6).abs() < 1e-12);
        // empty gradient list is a no-op
        clip_grad_norm(&mut [], 1.0);
    }
}
