use predcore::abc::{acceptance_ratio, base_measure_simulator, mh_step, run_adaptive_coreset, run_chain, ABCConfig};
use predcore::coreset::{run_predictive_coreset, stream_rng, CoresetRunConfig};
use predcore::measure::{empirical_from, Dataset, GroundMetric, Point};
use predcore::prior::{GaussianLocationPrior, Hyperprior, PointMass};
use predcore::urn::BaseMeasureSpec;
use proptest::prelude::*;
use rand::{Rng, RngCore};

proptest! {
    #[test]
    fn rho_is_a_probability(lc in -50.0..50.0f64, lp in -50.0..50.0f64, hc in 0usize..40, hp in 0usize..40) {
        let r = acceptance_ratio(lc, lp, hc, hp);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((0.0..=1.0).contains(&acceptance_ratio(f64::NEG_INFINITY, lp, hc, hp)));
        prop_assert!((0.0..=1.0).contains(&acceptance_ratio(lc, f64::NEG_INFINITY, hc, hp)));
    }
}

#[test]
fn infinite_tolerance_with_flat_prior_is_a_free_walk() {
    let mut prior = GaussianLocationPrior::new(vec![0.0, 0.0], 1.0, 1.0).unwrap();
    prior.flat = true;
    let observed = empirical_from(vec![Point::new(vec![0.0, 0.0]); 4]).unwrap();
    let sim = base_measure_simulator(&prior, 4);
    let cfg = ABCConfig {
        s: 3,
        ..Default::default()
    };
    for steps in [1, 10, 500] {
        let c = run_chain(&[0.0, 0.0], steps, &observed, f64::INFINITY, &cfg, &prior, &sim, &mut stream_rng(steps as u64, 0)).unwrap();
        assert_eq!(c.accepted, steps);
    }
}

/// Two states `theta in {0, 1}`; pseudo-data is a single point that lands on
/// the observation with probability `Q[theta]`.
struct TwoState;

const PI: [f64; 2] = [0.3, 0.7];
const Q: [f64; 2] = [0.2, 0.6];
const S: usize = 3;

impl Hyperprior for TwoState {
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![f64::from(u8::from(rng.random::<f64>() < PI[1]))]
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        PI[theta[0] as usize].ln()
    }

    fn base_measure(&self, _: &[f64]) -> predcore::Result<BaseMeasureSpec> {
        Ok(BaseMeasureSpec::GaussianMixture {
            means: vec![vec![0.0]],
            weights: vec![1.0],
            sd: 1.0,
        })
    }
}

fn binom(n: usize, k: usize, p: f64) -> f64 {
    let c = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Move probability `a -> b` by enumerating both hit counts.
fn exact_move(a: usize, b: usize) -> f64 {
    let mut total = 0.0;
    for ha in 0..=S {
        for hb in 0..=S {
            let rho = if hb == 0 {
                0.0
            } else if ha == 0 {
                1.0
            } else {
                (PI[b] * hb as f64 / (PI[a] * ha as f64)).min(1.0)
            };
            total += binom(S, ha, Q[a]) * binom(S, hb, Q[b]) * rho;
        }
    }
    total
}

#[test]
fn two_state_kernel_matches_enumeration() {
    let sim = |theta: &[f64], rng: &mut dyn RngCore| -> predcore::Result<Vec<Point>> {
        let hit = rng.random::<f64>() < Q[theta[0] as usize];
        Ok(vec![Point::new(vec![if hit { 0.0 } else { 10.0 }])])
    };
    let observed = empirical_from(vec![Point::new(vec![0.0])]).unwrap();
    let cfg = ABCConfig {
        s: S,
        ..Default::default()
    };
    let mut rng = stream_rng(2024, 0);
    let mut state = 0usize;
    let mut tries = [0.0f64; 2];
    let mut moves = [0.0f64; 2];
    let mut occupancy = [0.0f64; 2];
    let steps = 100_000;
    for _ in 0..steps {
        let prop = 1 - state;
        let (_, _, moved) = mh_step(&[state as f64], &[prop as f64], &observed, 1.0, &cfg, &TwoState, &sim, &mut rng).unwrap();
        tries[state] += 1.0;
        if moved {
            moves[state] += 1.0;
            state = prop;
        }
        occupancy[state] += 1.0;
    }
    for a in 0..2 {
        let p = exact_move(a, 1 - a);
        let se = (p * (1.0 - p) / tries[a]).sqrt();
        let got = moves[a] / tries[a];
        assert!((got - p).abs() < 5.0 * se, "state {a}: {got} vs {p}");
    }
    // stationary mass of state 1 implied by the kernel
    let (p01, p10) = (exact_move(0, 1), exact_move(1, 0));
    let stat1 = p01 / (p01 + p10);
    assert!((occupancy[1] / steps as f64 - stat1).abs() < 0.01);
}

#[test]
fn zero_proposal_scale_reduces_to_point_mass_run() {
    let mut rng = stream_rng(8, 8);
    let pts: Vec<Point> = (0..60).map(|_| Point::new(vec![rng.random::<f64>() * 3.0])).collect();
    let data = Dataset::new("d", pts).unwrap();
    let prior = GaussianLocationPrior::new(vec![1.0], 2.0, 1.0).unwrap();
    let cfg = CoresetRunConfig {
        n: 10,
        m: 40,
        niter: 12,
        seed: 5,
        ..Default::default()
    };
    let abc = ABCConfig {
        epsilon: Some(0.5),
        proposal_scale: vec![0.0],
        theta0: Some(vec![1.7]),
        ..Default::default()
    };
    let metric = GroundMetric::euclidean();
    let (wa, report) = run_adaptive_coreset(&data, 1.0, &prior, &metric, &cfg, &abc).unwrap();
    let fixed = PointMass::at(&prior, &[1.7]).unwrap();
    let (wb, _) = run_predictive_coreset(&data, 1.0, &fixed, &metric, &cfg).unwrap();
    assert!(report.thetas().iter().all(|t| t == &vec![1.7]));
    for (a, b) in wa.values.iter().zip(&wb.values) {
        assert!((a - b).abs() <= 1e-12);
    }
}
