//! Hyperparameters explored by an ABC Metropolis chain instead of fresh prior
//! draws: a one-dimensional Gaussian location problem where the chain should
//! settle near the true mean.

use predcore::abc::{base_measure_simulator, calibrate_epsilon, run_chain, ABCConfig};
use predcore::coreset::stream_rng;
use predcore::measure::{empirical_from, Point};
use predcore::prior::GaussianLocationPrior;
use rand_distr::{Distribution, Normal};

fn main() -> predcore::Result<()> {
    let truth = 3.0;
    let mut rng = stream_rng(5, 0);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let observed: Vec<Point> = (0..50).map(|_| Point::new(vec![truth + noise.sample(&mut rng)])).collect();
    let observed = empirical_from(observed)?;

    let prior = GaussianLocationPrior::new(vec![0.0], 10f64.sqrt(), 1.0)?;
    let sim = base_measure_simulator(&prior, 50);
    let cfg = ABCConfig {
        proposal_scale: vec![0.5],
        ..Default::default()
    };
    let cal = calibrate_epsilon(&observed, &cfg, &prior, &sim, &mut stream_rng(5, 1))?;
    println!("epsilon {:.4} (10% quantile of {} prior-predictive distances)", cal.epsilon, cal.distances.len());

    let chain = run_chain(&cal.best_theta, 2000, &observed, cal.epsilon, &cfg, &prior, &sim, &mut stream_rng(5, 2))?;
    let tail: Vec<f64> = chain.trace[500..].iter().map(|t| t[0]).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    println!("acceptance rate {:.3}, stuck {}", chain.acceptance_rate, chain.stuck);
    println!("posterior mean of mu after burn-in: {mean:.3} (truth {truth})");
    Ok(())
}
