//! Exact, simplex and entropic couplings between two point clouds, plus the
//! gradient of the transport cost with respect to the source atoms.

use predcore::coreset::stream_rng;
use predcore::measure::{empirical_from, EmpiricalMeasure, GroundMetric, Point};
use predcore::transport::{
    sinkhorn, solve, transport_cost_gradient, wasserstein_exact, wasserstein_simplex, CostMatrix, Side,
    SolverPolicy,
};
use rand::Rng;

fn cloud(n: usize, shift: f64, rng: &mut impl Rng) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(vec![rng.random::<f64>() + shift, rng.random::<f64>()]))
        .collect()
}

fn main() -> predcore::Result<()> {
    let mut rng = stream_rng(7, 0);
    let metric = GroundMetric::euclidean();
    let mu = empirical_from(cloud(6, 0.0, &mut rng))?;
    let nu = empirical_from(cloud(6, 0.5, &mut rng))?;

    let exact = wasserstein_exact(&mu, &nu, &metric, 2.0)?;
    let lp = wasserstein_simplex(&mu, &nu, &metric, 2.0)?;
    let eps = 1e-3 * CostMatrix::new(mu.atoms(), nu.atoms(), &metric, 2.0)?.median();
    let ent = sinkhorn(&mu, &nu, &metric, 2.0, eps, 20_000, 1e-12)?;
    println!("W2^2 exact ({:?})   {:.6}", exact.solver, exact.cost());
    println!("W2^2 simplex          {:.6}", lp.cost());
    println!("W2^2 sinkhorn         {:.6}  (eps {eps:.2e})", ent.cost());
    for f in &exact.flows {
        println!("  {} -> {}  mass {:.4}", f.source, f.target, f.mass);
    }

    let g = transport_cost_gradient(&exact, mu.atoms(), nu.atoms(), &metric, 2.0, Side::Source)?;
    println!("gradient at source atom 0: {:?}", g[0]);

    // unequal sizes and masses go through the simplex route
    let wide = EmpiricalMeasure::weighted(cloud(9, 0.2, &mut rng), &[1., 2., 3., 1., 2., 3., 1., 2., 3.])?;
    let c = solve(&mu, &wide, &metric, 2.0, &SolverPolicy::default())?;
    println!("6 uniform vs 9 weighted atoms: {:.6} via {:?}", c.cost(), c.solver);
    Ok(())
}
