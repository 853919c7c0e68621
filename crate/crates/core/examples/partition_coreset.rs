//! Coreset for a clustering problem: pairs (y, theta) under the latent-pair
//! metric, then a Gibbs fit on full data, coreset and unit coreset.
//!
//! cargo run --release --example partition_coreset -- [rep] [lambda] [niter]

use predcore::experiment::{build_coreset, evaluate_coreset, rep_dataset, ExperimentConfig, ExperimentKind};

fn main() -> predcore::Result<()> {
    let rep: usize = std::env::args().nth(1).map_or(0, |r| r.parse().expect("rep"));
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Partition);
    if let Some(l) = std::env::args().nth(2) {
        cfg.partition.lambda = l.parse().expect("lambda");
    }
    if let Some(t) = std::env::args().nth(3) {
        cfg.niter = t.parse().expect("niter");
    }
    let (data, truth) = rep_dataset(&cfg, rep)?;
    let seed = predcore::experiment::rep_seed(cfg.master_seed, rep);
    let (weights, report) = build_coreset(&data, &cfg, seed)?;
    let w = &weights.values;
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let zeros = w.iter().filter(|v| **v == 0.0).count();
    println!("N = {}, n = {}, iterations = {}", data.len(), w.len(), report.iterations.len());
    println!("weights: mean {mean:.3}, min {:.3}, max {:.3}, zeros {zeros}",
        w.iter().cloned().fold(f64::INFINITY, f64::min),
        w.iter().cloned().fold(0.0, f64::max));
    println!("mean objective at unit weights {:.4}", report.mean_initial_objective());
    let (record, _) = evaluate_coreset(&data, Some(&truth), &weights, &cfg, seed)?;
    println!("VI(coreset, full) = {:.4}", record.d_coreset_full);
    println!("VI(unit, full)    = {:.4}", record.d_unit_full);
    Ok(())
}
