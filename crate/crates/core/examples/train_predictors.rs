//! Generates a small paired dataset, trains the APS and column networks and
//! compares their predicted spectra with the raw radar spectrum.
//!
//! ```bash
//! cargo run --release --example train_predictors
//! ```

use std::time::Instant;

use r2c::beam::Models;
use r2c::nn::ModelKind;
use r2c::pipeline::{
    evaluate_similarity, evaluation_records, generate_records, split_records, summarize_values, train_config, train_model,
    ExperimentConfig, SplitConfig, SplitRole,
};
use r2c::scenario::MismatchConfig;

fn main() -> r2c::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.generator.mismatch = MismatchConfig::moderate();
    cfg.split = SplitConfig { train: 240, val: 60, test: 100 };

    let t = Instant::now();
    let records = generate_records(&cfg, cfg.master_seed, cfg.split.total())?;
    println!("generated {} records in {:.1?}", records.len(), t.elapsed());
    let train = split_records(&cfg, &records, SplitRole::Train);
    let val = split_records(&cfg, &records, SplitRole::Val);

    let mut trained = Vec::new();
    for model in [ModelKind::Aps, ModelKind::Col] {
        let t = Instant::now();
        let out = train_model(&cfg, model, &train, &val, train_config(&cfg, model))?;
        println!(
            "{} net: {} epochs in {:.1?}, best validation loss {:.4e} at epoch {}",
            model.name(),
            out.history.len(),
            t.elapsed(),
            out.best_val_loss,
            out.best_epoch
        );
        trained.push(out.params);
    }

    let models = Models { aps: Some(&trained[0]), col: Some(&trained[1]) };
    let rows = evaluate_similarity(&cfg, &evaluation_records(&cfg, &records), models)?;
    let columns: [(&str, Vec<f64>); 3] = [
        ("radar", rows.iter().map(|r| r.radar).collect()),
        ("aps_pred", rows.iter().filter_map(|r| r.aps_pred).collect()),
        ("cov_pred", rows.iter().filter_map(|r| r.cov_pred).collect()),
    ];
    println!("similarity to the communication APS (L = {}):", cfg.spectrum.similarity_window);
    for (name, v) in columns {
        let s = summarize_values(&v).expect("non-empty test split");
        println!("    {name:9} mean {:.3}  p10 {:.3}  p50 {:.3}  p90 {:.3}", s.mean, s.p10, s.p50, s.p90);
    }
    Ok(())
}
