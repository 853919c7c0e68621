//! Posterior-predictive draws from the Polya urn: a trajectory records only
//! which slot each draw copies, so the same trajectory can be replayed under
//! any coreset weights.

use predcore::coreset::stream_rng;
use predcore::measure::Point;
use predcore::urn::{materialize, sample_trajectory, BaseMeasureSpec, DPConfig, Root, UrnChoice};

fn main() -> predcore::Result<()> {
    let cond: Vec<Point> = [-2.0, -0.5, 1.0, 3.0].iter().map(|&x| Point::new(vec![x])).collect();
    let base = BaseMeasureSpec::GaussianMixture {
        means: vec![vec![0.0]],
        weights: vec![1.0],
        sd: 1.0,
    };
    let dp = DPConfig::new(1.0, base)?;
    let traj = sample_trajectory(cond.len(), &dp, 12, &mut stream_rng(3, 0))?;
    for (step, (choice, root)) in traj.choices.iter().zip(traj.roots()).enumerate() {
        let what = match choice {
            UrnChoice::Existing(i) => format!("copy slot {i}"),
            UrnChoice::Fresh(p) => format!("fresh {:.3}", p.coords[0]),
        };
        let from = match root {
            Root::Conditioning(i) => format!("observed {i}"),
            Root::Fresh(j) => format!("fresh at step {j}"),
        };
        println!("step {step:>2}: {what:<14} root: {from}");
    }
    println!("fresh draws: {}", traj.fresh_count());

    let unit = materialize(&traj, &cond, None)?;
    let w = [0.5, 2.0, 0.0, 1.5];
    let weighted = materialize(&traj, &cond, Some(&w))?;
    println!("\nunit     {:?}", unit.iter().map(|p| p.coords[0]).collect::<Vec<_>>());
    println!("weighted {:?}", weighted.iter().map(|p| p.coords[0]).collect::<Vec<_>>());

    // alpha = 0 never leaves the observed atoms
    let boot = DPConfig::new(0.0, dp.base.clone())?;
    let t = sample_trajectory(cond.len(), &boot, 1000, &mut stream_rng(3, 1))?;
    println!("alpha = 0, 1000 steps: {} fresh draws", t.fresh_count());
    Ok(())
}
