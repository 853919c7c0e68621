//! Coreset for a one-dimensional mixture: fit the weights, then compare
//! mixture fits on the full data, the transformed coreset and the raw
//! subsample.
//!
//! cargo run --release --example density_coreset -- [seed]

use predcore::coreset::{materialize_coreset, run_predictive_coreset, CoresetRunConfig};
use predcore::eval::{default_grid, fit_mixture_em, kl_discretized};
use predcore::experiment::{density_prior, seeded_dataset, ExperimentConfig, ExperimentKind};
use predcore::measure::GroundMetric;

fn main() -> predcore::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let cfg = ExperimentConfig::desk(ExperimentKind::Density);
    let (data, truth) = seeded_dataset(&cfg, seed)?;
    println!("truth: {}", serde_json::to_string(&truth)?);

    let run = CoresetRunConfig {
        n: 50,
        m: 200,
        niter: 50,
        seed,
        ..Default::default()
    };
    let (weights, report) = run_predictive_coreset(&data, 1.0, &density_prior(&cfg), &GroundMetric::euclidean(), &run)?;
    let mut w = weights.values.clone();
    w.sort_by(f64::total_cmp);
    println!(
        "weights: min {:.3}  median {:.3}  max {:.3}  ({} iterations, {:.2}s)",
        w[0],
        w[w.len() / 2],
        w[w.len() - 1],
        report.iterations.len(),
        report.wall_time_secs
    );

    let coreset = materialize_coreset(&data, &weights, &data.mean())?;
    let unit = data.subset(&weights.support_indices);
    let xs: Vec<f64> = data.points.iter().map(|p| p.coords[0]).collect();
    let grid = default_grid(&xs, 1600)?;
    let fit = |pts: &[predcore::measure::Point], s: u64| -> predcore::Result<_> {
        let m = vec![1.0 / pts.len() as f64; pts.len()];
        fit_mixture_em(pts, &m, 3, 5, &mut predcore::coreset::stream_rng(seed, 100 + s))?.density(&grid)
    };
    let full = fit(&data.points, 0)?;
    let core = fit(&coreset.points, 1)?;
    let sub = fit(&unit.points, 2)?;
    println!("KL(full || coreset)   {:.5}", kl_discretized(&full, &core)?);
    println!("KL(full || subsample) {:.5}", kl_discretized(&full, &sub)?);
    Ok(())
}
