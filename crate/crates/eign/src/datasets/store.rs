//! On-disk dataset directories: a JSON manifest, one text graph file per
//! sample, and one flat little-endian f64 array file per sample holding
//! orientation flips, features, targets, and masks. Reload is exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sample::{Dataset, LabeledGraphSample, SplitSpec, TaskKind};
use crate::autodiff::Tensor;
use crate::graph::{Graph, Orientation};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct SampleMeta {
    graph_file: String,
    data_file: String,
    m: usize,
    d_equ: usize,
    d_inv: usize,
    task: TaskKind,
    has_forced_train: bool,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    name: String,
    seed: u64,
    norm_constants: BTreeMap<String, f64>,
    split: SplitSpec,
    samples: Vec<SampleMeta>,
}

fn write_f64s(buf: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut metas = Vec::with_capacity(dataset.samples.len());
    for (i, s) in dataset.samples.iter().enumerate() {
        s.validate()?;
        let graph_file = format!("g{:05}.graph", i);
        let data_file = format!("g{:05}.bin", i);
        std::fs::write(dir.join(&graph_file), s.graph.to_text())?;
        let m = s.edge_count();
        let mut buf = Vec::with_capacity(8 * m * (3 + s.x_equ.cols + s.x_inv.cols));
        write_f64s(
            &mut buf,
            s.orientation
                .flips()
                .iter()
                .map(|&f| if f { 1.0 } else { 0.0 }),
        );
        write_f64s(&mut buf, s.x_equ.data.iter().copied());
        write_f64s(&mut buf, s.x_inv.data.iter().copied());
        write_f64s(&mut buf, s.y.data.iter().copied());
        write_f64s(&mut buf, s.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        if let Some(forced) = &s.forced_train {
            write_f64s(&mut buf, forced.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        }
        let mut f = std::fs::File::create(dir.join(&data_file))?;
        f.write_all(&buf)?;
        metas.push(SampleMeta {
            graph_file,
            data_file,
            m,
            d_equ: s.x_equ.cols,
            d_inv: s.x_inv.cols,
            task: s.task,
            has_forced_train: s.forced_train.is_some(),
        });
    }
    let manifest = Manifest {
        name: dataset.name.clone(),
        seed: dataset.seed,
        norm_constants: dataset.norm_constants.clone(),
        split: dataset.split.clone(),
        samples: metas,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for meta in &manifest.samples {
        let graph = Graph::from_text(&std::fs::read_to_string(dir.join(&meta.graph_file))?)?;
        if graph.edge_count() != meta.m {
            return Err(Error::Checkpoint(format!(
                "{}: manifest says {} edges, graph has {}",
                meta.graph_file,
                meta.m,
                graph.edge_count()
            )));
        }
        let mut bytes = Vec::new();
        std::fs::File::open(dir.join(&meta.data_file))?.read_to_end(&mut bytes)?;
        let expected = meta.m * (3 + meta.d_equ + meta.d_inv + meta.has_forced_train as usize);
        if bytes.len() != 8 * expected {
            return Err(Error::Checkpoint(format!(
                "{}: expected {} scalars, found {} bytes",
                meta.data_file,
                expected,
                bytes.len()
            )));
        }
        let mut values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |count: usize| -> Vec<f64> { values.by_ref().take(count).collect() };
        let flips: Vec<bool> = take(meta.m).iter().map(|&v| v != 0.0).collect();
        let x_equ = Tensor::from_vec(meta.m, meta.d_equ, take(meta.m * meta.d_equ));
        let x_inv = Tensor::from_vec(meta.m, meta.d_inv, take(meta.m * meta.d_inv));
        let y = Tensor::from_vec(meta.m, 1, take(meta.m));
        let mask: Vec<bool> = take(meta.m).iter().map(|&v| v != 0.0).collect();
        let forced_train = if meta.has_forced_train {
            Some(take(meta.m).iter().map(|&v| v != 0.0).collect())
        } else {
            None
        };
        let orientation = Orientation::new(&graph, flips)?;
        samples.push(LabeledGraphSample {
            graph,
            orientation,
            x_equ,
            x_inv,
            y,
            task: meta.task,
            mask,
            forced_train,
        });
    }
    Ok(Dataset {
        name: manifest.name,
        seed: manifest.seed,
        samples,
        split: manifest.split,
        norm_constants: manifest.norm_constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_circuits, gen_ld_cycles};

    #[test]
    fn roundtrip_is_exact() {
        let dir = std::env::temp_dir().join(format!("eign-store-{}", std::process::id()));
        for ds in [gen_ld_cycles(4, 3).unwrap(), gen_circuits(4, 5).unwrap()] {
            save_dataset(&dir, &ds).unwrap();
            let back = load_dataset(&dir).unwrap();
            assert_eq!(back.name, ds.name);
            assert_eq!(back.samples.len(), ds.samples.len());
            for (a, b) in ds.samples.iter().zip(&back.samples) {
                assert_eq!(a.graph, b.graph);
                assert_eq!(a.orientation, b.orientation);
                assert_eq!(a.x_equ.data, b.x_equ.data);
                assert_eq!(a.x_inv.data, b.x_inv.data);
                assert_eq!(a.y.data, b.y.data);
                assert_eq!(a.mask, b.mask);
                assert_eq!(a.task, b.task);
            }
            assert_eq!(back.norm_constants, ds.norm_constants);
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
