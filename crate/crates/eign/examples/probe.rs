// temporary tuning probe; not part of the deliverable
use eign::datasets::*;
use eign::nn::{Architecture, ModelConfig};
use eign::train::{train_model, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("ld");
    let arch = match args.get(2).map(|s| s.as_str()).unwrap_or("eign") {
        "eign" => Architecture::Eign,
        "hodge" => Architecture::HodgeGnn,
        "mlp" => Architecture::Mlp,
        other => panic!("unknown arch {}", other),
    };
    let q0 = args.get(3).map(|s| s == "q0").unwrap_or(false);
    let layers: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(3);
    let hidden: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(16);
    let lr: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.003);
    let epochs: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(50);
    let seed: u64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(7);
    let ds_seed: u64 = args.get(9).and_then(|s| s.parse().ok()).unwrap_or(1);

    let t0 = std::time::Instant::now();
    let ds = match which {
        "ld" => gen_ld_cycles(200, ds_seed).unwrap(),
        "rw" => gen_rw_comp(200, ds_seed).unwrap(),
        "tri" => gen_tri_flow(200, ds_seed).unwrap(),
        "circ" => gen_circuits(591, ds_seed).unwrap(),
        _ => panic!(),
    };
    eprintln!("dataset built in {:.1}s", t0.elapsed().as_secs_f64());

    let mut template = ModelConfig::new(arch, layers, hidden);
    template.dropout = 0.1;
    if q0 {
        template.q = Some(0.0);
    }
    let tc = TrainConfig {
        lr,
        batch_size: if which == "tri" { 1 } else { 10 },
        epochs,
        grad_clip_norm: 1.0,
        seed,
    };
    let t1 = std::time::Instant::now();
    let trained = train_model(&template, &tc, &ds).unwrap();
    eprintln!(
        "trained in {:.1}s; best epoch {}",
        t1.elapsed().as_secs_f64(),
        trained.report.best_epoch,
    );
    for h in trained.report.history.iter().step_by(10) {
        eprintln!("  epoch {:>4}: train_loss {:.5} val {:.5}", h.epoch, h.train_loss, h.val_metric);
    }
    if which == "circ" {
        let (rate, _) = eign::experiments::diode_violation_rate(&trained.cfg, &trained.params, &ds).unwrap();
        let (rate_final, _) = eign::experiments::diode_violation_rate(&trained.cfg, &trained.final_params, &ds).unwrap();
        eprintln!("diode violation rate: best-val {:.4} final {:.4}", rate, rate_final);
    }
    println!(
        "{} {:?} q0={} layers={} hidden={} lr={} epochs={} -> auc={:?} rmse={:?}",
        which, arch, q0, layers, hidden, lr, epochs, trained.report.auc, trained.report.rmse
    );
}
