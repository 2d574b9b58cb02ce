//! The generate -> train -> eval -> rate workflow of the `r2c` binary, run
//! through the library on a reduced split. Files land in a scratch directory
//! whose path is printed at the end.
//!
//! ```bash
//! cargo run --release --example experiment_pipeline
//! ```

use std::fs;

use r2c::beam::Strategy;
use r2c::nn::ModelKind;
use r2c::pipeline::{cmd_eval, cmd_generate, cmd_rate, cmd_train, ExperimentConfig, SplitConfig};
use r2c::scenario::MismatchConfig;

fn main() -> r2c::Result<()> {
    let dir = std::env::temp_dir().join("r2c_experiment_pipeline");
    fs::create_dir_all(&dir)?;

    let mut cfg = ExperimentConfig::default();
    cfg.generator.mismatch = MismatchConfig::moderate();
    cfg.split = SplitConfig { train: 240, val: 60, test: 100 };
    let config = dir.join("config.json");
    fs::write(&config, cfg.to_json_pretty())?;

    let data = dir.join("dataset.jsonl");
    let header = cmd_generate(Some(&config), &data, None, None)?;
    println!("generate: {} records, seed {}", header.count, header.seed);

    let aps = dir.join("aps.json");
    let col = dir.join("col.json");
    for (model, out) in [(ModelKind::Aps, &aps), (ModelKind::Col, &col)] {
        let t = cmd_train(None, model, &data, None, out, None)?;
        println!("train {}: {} epochs, best epoch {}", model.name(), t.history.len(), t.best_epoch);
    }

    let rows = cmd_eval(None, Some(&aps), Some(&col), &data, &dir.join("similarity.csv"))?;
    println!("eval: {} test records", rows.len());

    let out = cmd_rate(None, Some(&aps), Some(&col), &data, &dir.join("rate.csv"), &Strategy::ALL, None)?;
    for r in &out.reports {
        println!(
            "rate {:11} {:.4} Gbps (SE {:.3} b/s/Hz)",
            r.strategy.to_string(),
            r.mean_rate / 1e9,
            r.mean_se
        );
    }
    println!("coherence sweep:");
    for p in out.sweep.iter().filter(|p| p.strategy == Strategy::CovPred || p.strategy == Strategy::Exhaustive) {
        println!("    {:11} x{:<4} {:.4} Gbps", p.strategy.to_string(), p.multiplier, p.mean_rate / 1e9);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
