//! Single binary wiring dataset generation, training, evaluation, the
//! hyperparameter grid, invariant verification, operator inspection, and the
//! desk-scale result reproduction.
//!
//! Machine-readable results go to `--out` paths (JSON/CSV/text); human
//! summaries go to stderr. `--seed` determines all outputs.

mod reproduce;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use eign::datasets::{
    apply_task, load_dataset, save_dataset, write_anaheim_shaped_fixture, Task, TaskKind,
};
use eign::experiments::Benchmark;
use eign::graph::{canonical_orientation, Graph};
use eign::nn::{load_params, save_params, Architecture, ModelConfig};
use eign::operators::{boundary, laplacian, normalize, BoundaryKind, LaplacianKind};
use eign::train::{run_grid, train_model, GridSpec, TrainConfig};
use eign::verify::run_all_checks;

#[derive(Parser)]
#[command(name = "eign", about = "Edge-level GNN toolkit for mixed directed/undirected graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset (or the network-file fixture) into a directory.
    GenerateData {
        /// rw-comp | ld-cycles | tri-flow | circuits | anaheim-fixture
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 200)]
        num: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Optional task construction for regression datasets:
        /// denoise | interpolate | simulate
        #[arg(long)]
        task: Option<String>,
    },
    /// Train a model on a stored dataset and write a metrics report.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset_dir: Option<PathBuf>,
        /// Dataset name resolved under EIGN_DATA_DIR when --dataset-dir is absent.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        task: Option<String>,
        #[arg(long, default_value_t = 0.003)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        /// Phase parameter; defaults to 1/m per graph.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.1)]
        dropout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ablation switches: no-direction | no-fusion | no-fusion-conv | no-h
        #[arg(long)]
        ablate: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Optional checkpoint path (a sidecar .json holds the config).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a stored dataset.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset_dir: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cartesian hyperparameter sweep.
    Grid {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset_dir: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite; non-zero exit on any failure.
    CheckInvariants {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a Laplacian in `row col re im` coordinate lines.
    DumpLaplacian {
        /// Graph in the line-oriented text format.
        #[arg(long)]
        graph: PathBuf,
        /// equ | inv | equ-inv | inv-equ
        #[arg(long, default_value = "equ")]
        kind: String,
        #[arg(long)]
        q: Option<f64>,
        /// Dump the column-normalized boundary product instead.
        #[arg(long, default_value_t = false)]
        normalized: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Desk- or full-scale reruns of the result tables with reference values.
    Reproduce {
        /// synthetic | ablation
        #[arg(long)]
        table: String,
        /// desk | full
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolve a dataset directory from an explicit path or EIGN_DATA_DIR/name.
fn resolve_data_dir(dir: Option<PathBuf>, name: Option<String>) -> anyhow::Result<PathBuf> {
    if let Some(d) = dir {
        return Ok(d);
    }
    let name = name.context("need --dataset-dir or --dataset")?;
    let root = std::env::var("EIGN_DATA_DIR")
        .context("--dataset given but EIGN_DATA_DIR is not set")?;
    Ok(Path::new(&root).join(name))
}

fn parse_laplacian_kind(s: &str) -> anyhow::Result<LaplacianKind> {
    Ok(match s.to_ascii_lowercase().as_str() {
        "equ" => LaplacianKind::EQU,
        "inv" => LaplacianKind::INV,
        "equ-inv" | "equ_to_inv" => LaplacianKind::EQU_TO_INV,
        "inv-equ" | "inv_to_equ" => LaplacianKind::INV_TO_EQU,
        other => bail!("unknown Laplacian kind {:?}", other),
    })
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            println!("{}", text);
            Ok(())
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenerateData {
            dataset,
            num,
            seed,
            out,
            task,
        } => {
            if dataset.eq_ignore_ascii_case("anaheim-fixture") {
                let (net, flow) = write_anaheim_shaped_fixture(&out, seed)?;
                eprintln!("wrote {} and {}", net.display(), flow.display());
                return Ok(());
            }
            let bench = Benchmark::parse(&dataset)?;
            let mut ds = bench.build(num, seed)?;
            if let Some(task) = task {
                let task = Task::parse(&task)?;
                if ds.task() != TaskKind::Regression && task != Task::Simulate {
                    bail!("task constructions apply to regression datasets");
                }
                if ds.task() == TaskKind::Regression {
                    ds = apply_task(&ds, task, seed ^ 0x7a5c)?;
                }
            }
            save_dataset(&out, &ds)?;
            eprintln!(
                "wrote {} samples of {} to {}",
                ds.samples.len(),
                ds.name,
                out.display()
            );
        }
        Command::Train {
            model,
            dataset_dir,
            dataset,
            task,
            lr,
            hidden,
            layers,
            q,
            epochs,
            batch_size,
            dropout,
            seed,
            ablate,
            out,
            checkpoint,
        } => {
            let dir = resolve_data_dir(dataset_dir, dataset)?;
            let mut ds = load_dataset(&dir)?;
            if let Some(task) = task {
                let task = Task::parse(&task)?;
                if ds.task() == TaskKind::Regression {
                    ds = apply_task(&ds, task, seed ^ 0x7a5c)?;
                }
            }
            let arch = Architecture::parse(&model)?;
            let mut template = ModelConfig {
                q,
                dropout,
                ..ModelConfig::new(arch, layers, hidden)
            };
            for flag in &ablate {
                template = template.with_ablation(flag)?;
            }
            let train_cfg = TrainConfig {
                lr,
                batch_size,
                epochs,
                grad_clip_norm: 1.0,
                seed,
            };
            let trained = train_model(&template, &train_cfg, &ds)?;
            let json = serde_json::json!({
                "model": arch.to_string(),
                "config": trained.cfg,
                "train_config": train_cfg,
                "dataset": ds.name,
                "metrics": trained.report,
            });
            std::fs::write(&out, serde_json::to_string_pretty(&json)?)?;
            if let Some(ckpt) = checkpoint {
                save_params(&ckpt, &trained.cfg, &trained.params)?;
                let sidecar = ckpt.with_extension("json");
                std::fs::write(&sidecar, serde_json::to_string_pretty(&trained.cfg)?)?;
            }
            eprintln!(
                "{} on {}: auc={:?} rmse={:?} (best epoch {}, {:.1}s)",
                arch,
                ds.name,
                trained.report.auc,
                trained.report.rmse,
                trained.report.best_epoch,
                trained.report.wall_time_secs
            );
        }
        Command::Evaluate {
            checkpoint,
            dataset_dir,
            dataset,
            out,
        } => {
            let dir = resolve_data_dir(dataset_dir, dataset)?;
            let ds = load_dataset(&dir)?;
            let sidecar = checkpoint.with_extension("json");
            let cfg: ModelConfig = serde_json::from_str(
                &std::fs::read_to_string(&sidecar)
                    .with_context(|| format!("missing config sidecar {}", sidecar.display()))?,
            )?;
            let params = load_params(&checkpoint, &cfg)?;
            // run a zero-epoch "training" to reuse the evaluation path
            let report = {
                use eign::train::{evaluate_predictions, rmse, Split};
                let preds = evaluate_predictions(&cfg, &params, &ds, Split::Test)?;
                let mut p = Vec::new();
                let mut t = Vec::new();
                let mut m = Vec::new();
                for (i, pred, mask) in &preds {
                    p.extend_from_slice(&pred.data);
                    t.extend_from_slice(&ds.samples[*i].y.data);
                    m.extend_from_slice(mask);
                }
                match ds.task() {
                    TaskKind::Regression => serde_json::json!({
                        "rmse": rmse(&p, &t, &m)?,
                        "mae": eign::train::mae(&p, &t, &m)?,
                        "r2": eign::train::r2(&p, &t, &m).ok(),
                    }),
                    TaskKind::BinaryClass => {
                        let scores: Vec<f64> = p
                            .iter()
                            .zip(&m)
                            .filter(|(_, &keep)| keep)
                            .map(|(&v, _)| v)
                            .collect();
                        let labels: Vec<bool> = t
                            .iter()
                            .zip(&m)
                            .filter(|(_, &keep)| keep)
                            .map(|(&v, _)| v > 0.5)
                            .collect();
                        serde_json::json!({ "auc": eign::train::auc_roc(&scores, &labels)? })
                    }
                }
            };
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            eprintln!("evaluated {} on {}: {}", checkpoint.display(), ds.name, report);
        }
        Command::Grid {
            model,
            dataset_dir,
            dataset,
            repeats,
            seed,
            epochs,
            batch_size,
            out,
        } => {
            let dir = resolve_data_dir(dataset_dir, dataset)?;
            let ds = load_dataset(&dir)?;
            let arch = Architecture::parse(&model)?;
            let template = ModelConfig {
                dropout: 0.1,
                ..ModelConfig::new(arch, 2, 8)
            };
            let train_template = TrainConfig {
                epochs,
                batch_size,
                seed,
                ..Default::default()
            };
            let rows = run_grid(
                &template,
                &train_template,
                &ds,
                &GridSpec::paper_grid(),
                repeats,
            )?;
            std::fs::write(&out, serde_json::to_string_pretty(&rows)?)?;
            eprintln!("wrote {} grid rows to {}", rows.len(), out.display());
        }
        Command::CheckInvariants { trials, seed, out } => {
            let reports = run_all_checks(trials, seed);
            let json = serde_json::to_string_pretty(&reports)?;
            if let Some(path) = &out {
                std::fs::write(path, &json)?;
            } else {
                println!("{}", json);
            }
            let mut failed = 0;
            for r in &reports {
                eprintln!(
                    "{} {:<40} trials={} max_dev={:.3e} tol={:.1e}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.trials,
                    r.max_deviation,
                    r.tolerance
                );
                if !r.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                bail!("{} invariant checks failed", failed);
            }
        }
        Command::DumpLaplacian {
            graph,
            kind,
            q,
            normalized,
            out,
        } => {
            let g = Graph::from_text(&std::fs::read_to_string(&graph)?)?;
            let o = canonical_orientation(&g);
            let kind = parse_laplacian_kind(&kind)?;
            let q = q.unwrap_or(1.0 / g.edge_count().max(1) as f64);
            let matrix = if normalized {
                // normalized boundary product of the requested kind
                let left = BoundaryKind {
                    modality: kind.output,
                    q,
                };
                let right = BoundaryKind {
                    modality: kind.input,
                    q,
                };
                let bl = normalize(&boundary(&g, &o, left), &g, &o, left)?;
                let br = normalize(&boundary(&g, &o, right), &g, &o, right)?;
                product_sparse(&bl, &br)
            } else {
                laplacian(&g, &o, kind, q)
            };
            let lines = matrix.coordinate_lines().join("\n");
            write_or_print(out.as_deref(), &lines)?;
        }
        Command::Reproduce {
            table,
            scale,
            seed,
            out,
        } => {
            let desk = match scale.as_str() {
                "desk" => true,
                "full" => false,
                other => bail!("unknown scale {:?} (use desk or full)", other),
            };
            match table.as_str() {
                "synthetic" => reproduce::synthetic_table(desk, seed, out.as_deref())?,
                "ablation" => reproduce::ablation_table(desk, seed, out.as_deref())?,
                other => bail!("unknown table {:?} (use synthetic or ablation)", other),
            }
        }
    }
    Ok(())
}

/// `B_left^H B_right` for two explicit boundary matrices.
fn product_sparse(
    left: &eign::sparse::SparseComplexMatrix,
    right: &eign::sparse::SparseComplexMatrix,
) -> eign::sparse::SparseComplexMatrix {
    let lt = left.conj_transpose();
    let m = left.cols();
    let mut triplets = Vec::new();
    for e in 0..m {
        for (v, lv) in lt.row(e) {
            for (e2, rv) in right.row(v) {
                triplets.push((e, e2, lv * rv));
            }
        }
    }
    eign::sparse::SparseComplexMatrix::from_triplets(m, m, triplets)
}
