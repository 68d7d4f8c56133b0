// temporary analysis of diode-edge predictions; not part of the deliverable
use eign::datasets::*;
use eign::experiments::Benchmark;
use eign::nn::{Architecture, ModelConfig};
use eign::train::{evaluate_predictions, train_model, Split, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let lr: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.003);
    let q: Option<f64> = args.get(5).and_then(|s| s.parse().ok());
    let layers: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(4);
    let batch: usize = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(10);
    let hidden: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(32);
    let ds_seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(14641612869554026383);
    let ds = Benchmark::Circuits.build(591, ds_seed).unwrap();
    let template = ModelConfig {
        dropout: 0.1,
        q,
        ..ModelConfig::new(Architecture::Eign, layers, hidden)
    };
    let tc = TrainConfig {
        lr,
        batch_size: batch,
        epochs,
        grad_clip_norm: 1.0,
        seed: 13,
    };
    let trained = train_model(&template, &tc, &ds).unwrap();
    let split: Split = match args.get(6).map(|s| s.as_str()) {
        Some("train") => Split::Train,
        Some("val") => Split::Val,
        _ => Split::Test,
    };
    let preds = evaluate_predictions(&trained.cfg, &trained.params, &ds, split).unwrap();
    let mut on_viol = 0;
    let mut on_total = 0;
    let mut off_viol = 0;
    let mut off_total = 0;
    let mut off_abs: Vec<f64> = Vec::new();
    let mut on_preds: Vec<f64> = Vec::new();
    for (i, pred, _) in &preds {
        let s = &ds.samples[*i];
        for e in 0..s.edge_count() {
            if s.x_inv.get(e, 2) < 0.5 {
                continue;
            }
            let y = s.y.get(e, 0);
            let p = pred.get(e, 0);
            if y == 0.0 {
                off_total += 1;
                off_abs.push(p);
                if p < -1e-3 {
                    off_viol += 1;
                }
            } else {
                on_total += 1;
                on_preds.push(p);
                if p < -1e-3 {
                    on_viol += 1;
                }
            }
        }
    }
    off_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    on_preds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |v: &Vec<f64>, f: f64| -> f64 {
        if v.is_empty() { f64::NAN } else { v[(f * (v.len() - 1) as f64) as usize] }
    };
    println!(
        "on-diodes: {}/{} violate; pred quantiles 5/25/50: {:.4} {:.4} {:.4}",
        on_viol, on_total, q(&on_preds, 0.05), q(&on_preds, 0.25), q(&on_preds, 0.5)
    );
    println!(
        "off-diodes: {}/{} violate; pred quantiles 5/25/50/75/95: {:.4} {:.4} {:.4} {:.4} {:.4}",
        off_viol, off_total,
        q(&off_abs, 0.05), q(&off_abs, 0.25), q(&off_abs, 0.5), q(&off_abs, 0.75), q(&off_abs, 0.95)
    );
    println!(
        "total violation rate: {:.4}",
        (on_viol + off_viol) as f64 / (on_total + off_total) as f64
    );
    println!("test rmse: {:.4}", trained.report.rmse.unwrap());
    // per-graph breakdown
    let mut rows: Vec<(f64, usize, usize, f64)> = Vec::new();
    for (i, pred, _) in &preds {
        let s = &ds.samples[*i];
        let mut viol = 0;
        let mut diodes = 0;
        let mut se = 0.0;
        let mut worst_y: f64 = 0.0;
        for e in 0..s.edge_count() {
            let y = s.y.get(e, 0);
            worst_y = worst_y.max(y.abs());
            let p = pred.get(e, 0);
            se += (p - y) * (p - y);
            if s.x_inv.get(e, 2) > 0.5 {
                diodes += 1;
                if p < -1e-3 {
                    viol += 1;
                }
            }
        }
        rows.push(((se / s.edge_count() as f64).sqrt(), viol, diodes, worst_y));
    }
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("worst graphs by rmse (rmse, violations/diodes, max |y|):");
    for r in rows.iter().take(8) {
        println!("  {:.3} {}/{} {:.2}", r.0, r.1, r.2, r.3);
    }
    let median = rows[rows.len() / 2].0;
    let viol_top: usize = rows.iter().take(rows.len() / 4).map(|r| r.1).sum();
    let viol_all: usize = rows.iter().map(|r| r.1).sum();
    println!("median graph rmse {:.3}; violations in worst quartile: {}/{}", median, viol_top, viol_all);
}
