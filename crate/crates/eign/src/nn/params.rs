//! Parameter store and initialization.
//!
//! Every architecture describes its tensors through [`param_schema`]; the
//! initializer, the optimizer, the checkpoint format, and the forward pass
//! all walk the same schema, so shapes can never drift apart.

use rand::Rng;

use super::{Architecture, ModelConfig, CHEB_ORDER, NODE_MLP_HIDDEN};
use crate::autodiff::Tensor;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamInit {
    /// Uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)).
    WeightFanIn,
    /// Zeros.
    Bias,
}

/// Named tensors in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    entries: Vec<(String, Tensor)>,
}

impl Params {
    pub fn entries(&self) -> &[(String, Tensor)] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [(String, Tensor)] {
        &mut self.entries
    }

    pub fn get(&self, name: &str) -> &Tensor {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .unwrap_or_else(|| panic!("missing parameter {:?}", name))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.data.len()).sum()
    }
}

/// (name, rows, cols, init) for every tensor of the model.
pub fn param_schema(cfg: &ModelConfig) -> Result<Vec<(String, usize, usize, ParamInit)>> {
    cfg.validate()?;
    type Schema = Vec<(String, usize, usize, ParamInit)>;
    let mut schema: Schema = Vec::new();
    fn w(schema: &mut Schema, name: String, rows: usize, cols: usize) {
        schema.push((name, rows, cols, ParamInit::WeightFanIn));
    }
    fn wb(schema: &mut Schema, name: String, rows: usize, cols: usize) {
        schema.push((name.clone(), rows, cols, ParamInit::WeightFanIn));
        schema.push((format!("{}.bias", name), 1, cols, ParamInit::Bias));
    }

    let d = cfg.hidden;
    let dh = d / 2;
    let (de0, di0) = cfg.input_widths();

    match cfg.architecture {
        Architecture::Mlp | Architecture::LineGraph => {
            let mut input = cfg.d_in_equ + cfg.d_in_inv;
            if input == 0 {
                input = 1;
            }
            for l in 0..cfg.layers {
                let din = if l == 0 { input } else { d };
                wb(&mut schema, format!("l{}.w", l), din, d);
            }
            wb(&mut schema, "out.w".to_string(), d, cfg.d_out_equ + cfg.d_out_inv);
        }
        Architecture::HodgeGnn | Architecture::HodgeInv | Architecture::HodgeDir => {
            let input = if cfg.architecture == Architecture::HodgeInv {
                (cfg.d_in_equ + cfg.d_in_inv).max(1)
            } else {
                de0
            };
            for l in 0..cfg.layers {
                let din = if l == 0 { input } else { d };
                w(&mut schema, format!("l{}.w", l), din, d);
            }
            w(&mut schema, "out.w".to_string(), d, cfg.d_out_equ + cfg.d_out_inv);
        }
        Architecture::Eign | Architecture::EignGcn | Architecture::EignCheb | Architecture::DirGnn => {
            let is_dir = cfg.architecture == Architecture::DirGnn;
            let is_cheb = cfg.architecture == Architecture::EignCheb;
            // DirGnn convolutions stay real, so they project to full width.
            let conv_out = if is_dir { d } else { dh };
            for l in 0..cfg.layers {
                let (de, di) = if l == 0 { (de0, di0) } else { (d, d) };
                let convs: usize = if is_dir { 3 } else { 1 };
                let orders_intra = if is_cheb { CHEB_ORDER } else { 1 };
                let orders_inter = if is_cheb { CHEB_ORDER - 1 } else { 1 };
                // equivariant branch: no biases anywhere
                for j in 0..convs {
                    for c in 0..orders_intra {
                        w(&mut schema, format!("l{}.w_ee.{}.{}", l, j, c), de, conv_out);
                    }
                }
                if !cfg.no_fusion_conv {
                    for j in 0..convs {
                        for c in 0..orders_inter {
                            w(&mut schema, format!("l{}.w_ie.{}.{}", l, j, c), di, conv_out);
                        }
                    }
                }
                w(&mut schema, format!("l{}.w_e_self", l), de, d);
                // invariant branch: biases allowed
                for j in 0..convs {
                    for c in 0..orders_intra {
                        w(&mut schema, format!("l{}.w_ii.{}.{}", l, j, c), di, conv_out);
                    }
                }
                schema.push((format!("l{}.w_ii.bias", l), 1, d, ParamInit::Bias));
                if !cfg.no_fusion_conv {
                    for j in 0..convs {
                        for c in 0..orders_inter {
                            w(&mut schema, format!("l{}.w_ei.{}.{}", l, j, c), de, conv_out);
                        }
                    }
                    schema.push((format!("l{}.w_ei.bias", l), 1, d, ParamInit::Bias));
                }
                wb(&mut schema, format!("l{}.w_i_self", l), di, d);
                // node MLPs on the cross-modality convolutions
                if !cfg.no_fusion_conv
                    && !cfg.no_node_mlp
                    && cfg.architecture != Architecture::EignGcn
                    && cfg.architecture != Architecture::EignCheb
                {
                    let (ie_width, ei_width) = if is_dir { (di, de) } else { (2 * di, 2 * de) };
                    wb(&mut schema, format!("l{}.h_ie.w1", l), ie_width, NODE_MLP_HIDDEN);
                    wb(&mut schema, format!("l{}.h_ie.w2", l), NODE_MLP_HIDDEN, ie_width);
                    wb(&mut schema, format!("l{}.h_ei.w1", l), ei_width, NODE_MLP_HIDDEN);
                    wb(&mut schema, format!("l{}.h_ei.w2", l), NODE_MLP_HIDDEN, ei_width);
                }
                if !cfg.no_fusion {
                    w(&mut schema, format!("l{}.wf_ee", l), d, d);
                    wb(&mut schema, format!("l{}.wf_ie", l), d, d);
                    wb(&mut schema, format!("l{}.wf_ii", l), d, d);
                    w(&mut schema, format!("l{}.wf_ei", l), d, d);
                }
            }
            if cfg.d_out_equ > 0 {
                w(&mut schema, "out.w_equ".to_string(), d, cfg.d_out_equ);
            }
            if cfg.d_out_inv > 0 {
                wb(&mut schema, "out.w_inv".to_string(), d, cfg.d_out_inv);
            }
        }
    }
    Ok(schema)
}

/// Initialize for training: fan-in uniform weights, zero biases.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<Params> {
    let schema = param_schema(cfg)?;
    let mut rng = rng_from_seed(seed);
    let entries = schema
        .into_iter()
        .map(|(name, rows, cols, init)| {
            let data = match init {
                ParamInit::WeightFanIn => {
                    let bound = 1.0 / (rows as f64).sqrt();
                    (0..rows * cols)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect()
                }
                ParamInit::Bias => vec![0.0; rows * cols],
            };
            (name, Tensor::from_vec(rows, cols, data))
        })
        .collect();
    Ok(Params { entries })
}

/// All entries (biases included) uniform in (-0.7, 0.7). Used by the
/// verification checks, which need generic parameters rather than a
/// training-friendly initialization.
pub fn random_params(cfg: &ModelConfig, seed: u64) -> Result<Params> {
    let schema = param_schema(cfg)?;
    let mut rng = rng_from_seed(seed);
    let entries = schema
        .into_iter()
        .map(|(name, rows, cols, _)| {
            let data = (0..rows * cols).map(|_| rng.gen_range(-0.7..0.7)).collect();
            (name, Tensor::from_vec(rows, cols, data))
        })
        .collect();
    Ok(Params { entries })
}

/// Build a `Params` from a schema and a flat scalar array (checkpoint load).
pub fn params_from_flat(cfg: &ModelConfig, flat: &[f64]) -> Result<Params> {
    let schema = param_schema(cfg)?;
    let expected: usize = schema.iter().map(|(_, r, c, _)| r * c).sum();
    if flat.len() != expected {
        return Err(Error::Checkpoint(format!(
            "flat array has {} scalars, config expects {}",
            flat.len(),
            expected
        )));
    }
    let mut offset = 0;
    let entries = schema
        .into_iter()
        .map(|(name, rows, cols, _)| {
            let len = rows * cols;
            let t = Tensor::from_vec(rows, cols, flat[offset..offset + len].to_vec());
            offset += len;
            (name, t)
        })
        .collect();
    Ok(Params { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_and_init_agree() {
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
            let schema = param_schema(&cfg).unwrap();
            let params = init_params(&cfg, 3).unwrap();
            assert_eq!(schema.len(), params.len());
            for ((name, r, c, _), (pname, t)) in schema.iter().zip(params.entries()) {
                assert_eq!(name, pname);
                assert_eq!((t.rows, t.cols), (*r, *c));
            }
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = ModelConfig::new(Architecture::Eign, 2, 8).with_dims(1, 2, 1, 0);
        let a = init_params(&cfg, 9).unwrap();
        let b = init_params(&cfg, 9).unwrap();
        assert_eq!(a, b);
        for (name, t) in a.entries() {
            if name.ends_with(".bias") {
                assert!(t.data.iter().all(|&v| v == 0.0));
            } else {
                let bound = 1.0 / (t.rows as f64).sqrt();
                assert!(t.data.iter().all(|&v| v.abs() <= bound));
            }
        }
    }

    #[test]
    fn ablations_change_the_schema() {
        let base = ModelConfig::new(Architecture::Eign, 2, 8).with_dims(1, 2, 1, 1);
        let full = param_schema(&base).unwrap().len();
        let nf = param_schema(&base.clone().with_ablation("no_fusion").unwrap())
            .unwrap()
            .len();
        let nfc = param_schema(&base.clone().with_ablation("no_fusion_conv").unwrap())
            .unwrap()
            .len();
        let nh = param_schema(&base.with_ablation("no_h").unwrap()).unwrap().len();
        assert!(nf < full);
        assert!(nfc < full);
        assert!(nh < full);
    }

    #[test]
    fn flat_roundtrip() {
        let cfg = ModelConfig::new(Architecture::Eign, 1, 4).with_dims(1, 1, 1, 1);
        let p = init_params(&cfg, 1).unwrap();
        let flat: Vec<f64> = p
            .entries()
            .iter()
            .flat_map(|(_, t)| t.data.iter().copied())
            .collect();
        let p2 = params_from_flat(&cfg, &flat).unwrap();
        assert_eq!(p, p2);
        assert!(params_from_flat(&cfg, &flat[1..]).is_err());
    }
}
