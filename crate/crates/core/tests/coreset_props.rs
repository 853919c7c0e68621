use predcore::coreset::{run_predictive_coreset, stream_rng, CoresetRunConfig};
use predcore::measure::{Dataset, GroundMetric, Point};
use predcore::partition::{run_partition_coreset, MixtureSpec};
use predcore::prior::GaussianLocationPrior;
use predcore::urn::{materialize, sample_trajectory, DPConfig};
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

fn gaussian_data(n: usize, dim: usize, seed: u64, scale: f64) -> Dataset {
    let mut rng = stream_rng(seed, 99);
    let z = Normal::new(0.0, 1.0).unwrap();
    let pts = (0..n)
        .map(|i| Point::new((0..dim).map(|_| scale * (z.sample(&mut rng) + (i % 3) as f64 * 2.0)).collect()))
        .collect();
    Dataset::new("g", pts).unwrap()
}

fn small_cfg(seed: u64) -> CoresetRunConfig {
    CoresetRunConfig {
        n: 8,
        m: 30,
        niter: 6,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_nonnegative_and_objective_descends(seed in any::<u64>(), dim in 1usize..3, alpha in 0.0..3.0f64) {
        let data = gaussian_data(40, dim, seed, 1.0);
        let prior = GaussianLocationPrior::new(vec![0.0; dim], 2.0, 1.0).unwrap();
        let (w, report) = run_predictive_coreset(&data, alpha, &prior, &GroundMetric::euclidean(), &small_cfg(seed)).unwrap();
        prop_assert!(w.values.iter().all(|x| *x >= 0.0));
        for it in &report.iterations {
            prop_assert!(it.objective <= it.initial_objective);
            prop_assert!(it.weights.iter().all(|x| *x >= 0.0));
        }
    }
}

#[test]
fn identical_seeds_give_identical_weights() {
    let data = gaussian_data(60, 2, 4, 1.0);
    let prior = GaussianLocationPrior::new(vec![0.0, 0.0], 2.0, 1.0).unwrap();
    let run = || run_predictive_coreset(&data, 1.0, &prior, &GroundMetric::euclidean(), &small_cfg(17)).unwrap().0;
    let (a, b) = (run(), run());
    assert_eq!(a.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.support_indices, b.support_indices);
}

#[test]
fn pure_resampling_weights_are_scale_invariant() {
    // alpha = 0 never consults the base measure, so rescaling the data only
    // rescales every cost
    let prior = GaussianLocationPrior::new(vec![0.0], 1.0, 1.0).unwrap();
    let cfg = CoresetRunConfig {
        n: 10,
        m: 60,
        niter: 8,
        seed: 3,
        ..Default::default()
    };
    let base = run_predictive_coreset(&gaussian_data(50, 1, 8, 1.0), 0.0, &prior, &GroundMetric::euclidean(), &cfg).unwrap().0;
    for c in [0.25, 3.0, 40.0] {
        let scaled = run_predictive_coreset(&gaussian_data(50, 1, 8, c), 0.0, &prior, &GroundMetric::euclidean(), &cfg).unwrap().0;
        for (a, b) in base.values.iter().zip(&scaled.values) {
            assert!((a - b).abs() <= 1e-6, "c = {c}: {a} vs {b}");
        }
    }
}

fn mixture_spec() -> MixtureSpec {
    MixtureSpec {
        alpha: 1.0,
        atom_mean: vec![0.0, 0.0],
        atom_sd: 3.0,
        kernel_sd: 1.0,
    }
}

#[test]
fn partition_weights_follow_engine_invariants() {
    let data = gaussian_data(80, 2, 5, 2.0);
    let spec = mixture_spec();
    let dp = DPConfig::new(1.0, spec.joint_base()).unwrap();
    let metric = GroundMetric::latent_pair(1.0);
    let cfg = CoresetRunConfig {
        n: 10,
        m: 40,
        niter: 5,
        seed: 21,
        augment_observed: false,
        ..Default::default()
    };
    let (w, report) = run_partition_coreset(&data, &spec, &dp, &metric, &cfg).unwrap();
    let (w2, _) = run_partition_coreset(&data, &spec, &dp, &metric, &cfg).unwrap();
    assert_eq!(w, w2);
    assert!(w.values.iter().all(|x| *x >= 0.0));
    for it in &report.iterations {
        assert!(it.objective <= it.initial_objective);
    }
}

#[test]
fn joint_urn_never_scales_latents() {
    let spec = mixture_spec();
    let dp = DPConfig::new(2.0, spec.joint_base()).unwrap();
    let cond: Vec<Point> = (0..6)
        .map(|i| Point::with_latent(vec![i as f64, 1.0], vec![-(i as f64), 0.5]))
        .collect();
    let traj = sample_trajectory(6, &dp, 50, &mut stream_rng(1, 0)).unwrap();
    let unit = materialize(&traj, &cond, None).unwrap();
    let scaled = materialize(&traj, &cond, Some(&[0.0, 0.5, 2.0, 3.0, 0.1, 7.0])).unwrap();
    for (a, b) in unit.iter().zip(&scaled) {
        assert_eq!(a.latent, b.latent);
        assert!(a.latent.is_some());
    }
}
