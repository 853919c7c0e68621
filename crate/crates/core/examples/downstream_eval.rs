//! The downstream estimators and divergences on their own: weighted EM with
//! discretised KL, and a Gibbs clustering compared by variation of
//! information.

use predcore::coreset::stream_rng;
use predcore::eval::{allocate, default_grid, fit_mixture_em, gibbs_mixture, kl_discretized, GibbsConfig};
use predcore::experiment::{seeded_dataset, ExperimentConfig, ExperimentKind};
use predcore::measure::Point;
use predcore::partition::{variation_of_information, Partition};

fn main() -> predcore::Result<()> {
    let xs: Vec<Point> = (0..400)
        .map(|i| Point::new(vec![if i % 2 == 0 { -2.0 } else { 2.0 } + (i as f64 * 0.37).sin()]))
        .collect();
    let even = vec![1.0 / 400.0; 400];
    let tilted: Vec<f64> = (0..400).map(|i| if i % 2 == 0 { 3.0 } else { 1.0 } / 800.0).collect();
    let raw: Vec<f64> = xs.iter().map(|p| p.coords[0]).collect();
    let grid = default_grid(&raw, 800)?;
    let a = fit_mixture_em(&xs, &even, 2, 3, &mut stream_rng(1, 0))?;
    let b = fit_mixture_em(&xs, &tilted, 2, 3, &mut stream_rng(1, 1))?;
    println!("even masses:   weights {:.3?} means {:.3?}", a.weights, a.means);
    println!("tilted masses: weights {:.3?} means {:.3?}", b.weights, b.means);
    println!("KL(even || tilted) = {:.4}", kl_discretized(&a.density(&grid)?, &b.density(&grid)?)?);

    let cfg = ExperimentConfig::desk(ExperimentKind::Partition);
    let (data, truth) = seeded_dataset(&cfg, 2)?;
    let labels = match truth {
        predcore::experiment::Truth::Partition { labels, .. } => Partition::from_labels(&labels),
        _ => unreachable!(),
    };
    let sub: Vec<usize> = (0..data.len()).step_by(10).collect();
    let pts = data.subset(&sub).points;
    let masses = vec![1.0 / pts.len() as f64; pts.len()];
    let fit = gibbs_mixture(&pts, &masses, &GibbsConfig::default(), &mut stream_rng(2, 0))?;
    let vi_sub = variation_of_information(&fit.estimate, &labels.restrict(&sub))?;
    let all = allocate(&pts, &masses, &fit.estimate, &data.points, 1.0)?;
    println!("Gibbs on {} of {} points: {} clusters", pts.len(), data.len(), fit.estimate.num_clusters());
    println!("VI to truth on the fitted points {vi_sub:.4}, after allocating all points {:.4}",
        variation_of_information(&all, &labels)?);
    Ok(())
}
