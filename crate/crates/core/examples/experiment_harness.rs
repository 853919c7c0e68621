//! Runs a small seeded study and prints the summary.
//!
//! cargo run --release --example experiment_harness -- density 8 [transform|masses]

use predcore::experiment::{run_experiment, ExperimentConfig, ExperimentKind, WeightMode};

fn main() -> predcore::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ExperimentKind = args.next().as_deref().unwrap_or("density").parse()?;
    let reps = args.next().map_or(4, |r| r.parse().expect("reps"));
    let mut cfg = ExperimentConfig::desk(kind);
    cfg.reps = reps;
    if args.next().as_deref() == Some("masses") {
        cfg.weight_mode = WeightMode::Masses;
    }
    cfg.output_dir = std::env::temp_dir().join(format!("predcore-{}-{:?}", kind.name(), cfg.weight_mode));
    let t = std::time::Instant::now();
    let run = run_experiment(&cfg)?;
    for r in &run.rows {
        println!("rep {:>3}  coreset {:.5}  unit {:.5}  win {}", r.rep, r.d_coreset_full, r.d_unit_full, r.win);
    }
    if let Some(s) = &run.summary {
        println!(
            "{} ({:?}): win fraction {:.3} (95% CI {:.3}..{:.3}), median diff {:.5}",
            kind.name(),
            cfg.weight_mode,
            s.win_fraction,
            s.win_fraction_ci.0,
            s.win_fraction_ci.1,
            s.median_diff
        );
    }
    for f in &run.manifest.failures {
        println!("rep {} failed: {}", f.rep, f.error);
    }
    println!("outputs in {} ({:.1}s)", cfg.output_dir.display(), t.elapsed().as_secs_f64());
    Ok(())
}
