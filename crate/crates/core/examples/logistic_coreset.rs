//! Coreset for logistic regression under the product metric, with MAP fits
//! compared through their logits on the full covariates.

use predcore::coreset::{materialize_coreset, run_predictive_coreset};
use predcore::eval::{fit_logistic_map, logit_l2_distance};
use predcore::experiment::{metric_for, seeded_dataset, ExperimentConfig, ExperimentKind};
use predcore::prior::LogisticCoefficientPrior;

fn main() -> predcore::Result<()> {
    let cfg = ExperimentConfig::desk(ExperimentKind::Logistic);
    let seed = 11;
    let (data, truth) = seeded_dataset(&cfg, seed)?;
    println!("truth: {}", serde_json::to_string(&truth)?);

    let prior = LogisticCoefficientPrior {
        mean: vec![0.5, 0.5],
        sd: 1.0,
        covariates: data.points.iter().map(|p| p.coords.clone()).collect(),
    };
    let metric = metric_for(cfg.experiment, &cfg);
    let (weights, _) = run_predictive_coreset(&data, cfg.alpha, &prior, &metric, &cfg.coreset_config(seed))?;
    println!("weights {:?}", weights.values.iter().map(|w| (w * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    let coreset = materialize_coreset(&data, &weights, &data.mean())?;
    let unit = data.subset(&weights.support_indices);
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    let full = fit_logistic_map(&data.points, &uniform(data.len()), 1.0)?;
    let core = fit_logistic_map(&coreset.points, &uniform(coreset.len()), 1.0)?;
    let sub = fit_logistic_map(&unit.points, &uniform(unit.len()), 1.0)?;
    println!("beta full      {:?}", full.beta);
    println!("beta coreset   {:?}", core.beta);
    println!("beta subsample {:?}", sub.beta);
    println!("logit L2 coreset   {:.4}", logit_l2_distance(&core, &full, &data.points)?);
    println!("logit L2 subsample {:.4}", logit_l2_distance(&sub, &full, &data.points)?);
    Ok(())
}
