use predcore::coreset::{stream_rng, CoresetWeights};
use predcore::eval::{fit_logistic_map, fit_mixture_em, kl_discretized, linspace, DensityEstimate};
use predcore::experiment::{evaluate_coreset, seeded_dataset, ExperimentConfig, ExperimentKind, WeightMode};
use predcore::measure::Point;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_on_equal(
        f in prop::collection::vec(0.0..5.0f64, 40),
        g in prop::collection::vec(0.0..5.0f64, 40),
    ) {
        prop_assume!(f.iter().sum::<f64>() > 0.1 && g.iter().sum::<f64>() > 0.1);
        let grid = linspace(-3.0, 3.0, 40);
        let f = DensityEstimate::normalized(grid.clone(), f).unwrap();
        let g = DensityEstimate::normalized(grid, g).unwrap();
        prop_assert!(kl_discretized(&f, &g).unwrap() >= -1e-6);
        prop_assert_eq!(kl_discretized(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn em_loglik_never_decreases(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let pts: Vec<Point> = (0..60)
            .map(|i| Point::new(vec![(i % 3) as f64 * 3.0 + rng.random::<f64>()]))
            .collect();
        let masses: Vec<f64> = (0..60).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let fit = fit_mixture_em(&pts, &masses, k, 2, &mut rng).unwrap();
        for w in fit.loglik_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn logistic_map_is_stationary(seed in any::<u64>(), prior_sd in 0.3..5.0f64) {
        let mut rng = stream_rng(seed, 1);
        let pts: Vec<Point> = (0..80)
            .map(|_| {
                let x = vec![rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0];
                let p = 1.0 / (1.0 + (-(0.3 + x[0] - 0.5 * x[1])).exp());
                Point::labeled(x, u32::from(rng.random::<f64>() < p))
            })
            .collect();
        let masses: Vec<f64> = (0..80).map(|_| rng.random::<f64>() + 0.1).collect();
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let fit = fit_logistic_map(&pts, &masses, prior_sd).unwrap();
        // gradient of the negative log posterior, recomputed from scratch
        let mut grad: Vec<f64> = fit.beta.iter().map(|b| b / (prior_sd * prior_sd)).collect();
        for (p, m) in pts.iter().zip(&masses) {
            let x = [1.0, p.coords[0], p.coords[1]];
            let eta: f64 = x.iter().zip(&fit.beta).map(|(a, b)| a * b).sum();
            let r = m * 80.0 * (1.0 / (1.0 + (-eta).exp()) - f64::from(p.label.unwrap()));
            for j in 0..3 {
                grad[j] += r * x[j];
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        prop_assert!(fit.grad_norm < 1e-8);
        prop_assert!(norm < 1e-7, "{norm}");
    }
}

#[test]
fn unit_weights_reproduce_the_unit_fit() {
    for kind in [ExperimentKind::Density, ExperimentKind::Logistic, ExperimentKind::Partition] {
        for mode in [WeightMode::Transform, WeightMode::Masses] {
            let mut cfg = ExperimentConfig::desk(kind);
            cfg.data_size = 300;
            cfg.weight_mode = mode;
            cfg.partition.gibbs_sweeps = 40;
            cfg.partition.gibbs_keep = 20;
            let (data, _) = seeded_dataset(&cfg, 6).unwrap();
            let support: Vec<usize> = (0..data.len()).step_by(15).collect();
            let w = CoresetWeights::unit(support).unwrap();
            let (r, _) = evaluate_coreset(&data, None, &w, &cfg, 6).unwrap();
            assert_eq!(r.d_coreset_full.to_bits(), r.d_unit_full.to_bits(), "{kind:?} {mode:?}");
            assert_eq!(r.diff, 0.0);
        }
    }
}
