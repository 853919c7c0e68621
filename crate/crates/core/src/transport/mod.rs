//! Discrete optimal transport between empirical measures.
//!
//! Costs are `dist^p`; the reported Wasserstein cost is the `p`-th root of the
//! plan's total cost. Three exact routes are used depending on the problem:
//!
//! * one-dimensional Euclidean problems: the monotone (quantile) coupling,
//! * uniform measures with equal atom counts: an assignment solver,
//! * everything else: a transportation simplex, capped at
//!   [`DEFAULT_EXACT_CAP`] atoms per side.
//!
//! [`sinkhorn`] gives an entropic approximation for larger problems.

mod assignment;
mod gradient;
mod line;
mod simplex;
mod sinkhorn;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::measure::{EmpiricalMeasure, GroundMetric, Point, MASS_TOLERANCE};

pub use assignment::solve_assignment;
pub use gradient::{transport_cost_gradient, Side};
pub(crate) use gradient::pair_gradient;
pub use sinkhorn::sinkhorn;

pub const DEFAULT_EXACT_CAP: usize = 512;

/// Dense `n x m` matrix of `dist(a_i, b_j)^p`, row-major.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    p: f64,
}

impl CostMatrix {
    pub fn new(source: &[Point], target: &[Point], metric: &GroundMetric, p: f64) -> Result<Self> {
        check_order(p)?;
        metric.validate()?;
        check_shapes(source, target, metric)?;
        let mut entries = Vec::with_capacity(source.len() * target.len());
        for a in source {
            for b in target {
                entries.push(metric.dist_pow_unchecked(a, b, p));
            }
        }
        if let Some(bad) = entries.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("cost entry {bad}")));
        }
        Ok(Self {
            rows: source.len(),
            cols: target.len(),
            entries,
            p,
        })
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<f64>, p: f64) -> Result<Self> {
        check_order(p)?;
        if entries.len() != rows * cols {
            return argument("cost entry count does not match dimensions");
        }
        if entries.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return argument("cost entries must be finite and nonnegative");
        }
        Ok(Self {
            rows,
            cols,
            entries,
            p,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> f64 {
        self.p
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn median(&self) -> f64 {
        let mut v = self.entries.clone();
        let mid = v.len() / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        *m
    }
}

/// One nonzero entry of a transport plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Line,
    Assignment,
    Simplex,
    Sinkhorn,
}

/// A transport plan stored sparsely, with its total cost.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub flows: Vec<Flow>,
    /// `sum plan_ij * dist_ij^p`
    pub total: f64,
    pub p: f64,
    pub solver: SolverKind,
    /// False when an iterative solver hit its iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

impl Coupling {
    /// Wasserstein-p cost: the `p`-th root of the plan's total cost.
    pub fn cost(&self) -> f64 {
        self.total.max(0.0).powf(1.0 / self.p)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut plan = vec![vec![0.0; self.cols]; self.rows];
        for f in &self.flows {
            plan[f.source][f.target] += f.mass;
        }
        plan
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for f in &self.flows {
            s[f.source] += f.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for f in &self.flows {
            s[f.target] += f.mass;
        }
        s
    }

    /// Debug dump of the dense plan as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.dense() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn from_flows(flows: Vec<Flow>, cost: &CostMatrix, solver: SolverKind) -> Self {
        let total = flows.iter().map(|f| f.mass * cost.get(f.source, f.target)).sum();
        Coupling {
            rows: cost.rows(),
            cols: cost.cols(),
            flows,
            total,
            p: cost.order(),
            solver,
            converged: true,
            iterations: 0,
        }
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return argument(format!("transport order must be finite and >= 1, got {p}"));
    }
    Ok(())
}

fn check_shapes(source: &[Point], target: &[Point], metric: &GroundMetric) -> Result<()> {
    let (Some(a0), Some(b0)) = (source.first(), target.first()) else {
        return argument("transport between empty point sets");
    };
    metric.check_pair(a0, b0)?;
    for a in source {
        metric.check_pair(a, b0)?;
    }
    for b in target {
        metric.check_pair(a0, b)?;
    }
    Ok(())
}

fn check_masses(m: &EmpiricalMeasure) -> Result<()> {
    let total: f64 = m.masses().iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE || m.masses().iter().any(|x| !(*x >= 0.0)) {
        return argument(format!("masses must be nonnegative and sum to 1, got total {total}"));
    }
    Ok(())
}

fn is_line_problem(mu: &EmpiricalMeasure, metric: &GroundMetric) -> bool {
    matches!(metric, GroundMetric::Euclidean { .. }) && mu.atoms()[0].dim() == 1
}

/// Exact optimal coupling, with the default atom cap.
pub fn wasserstein_exact(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
) -> Result<Coupling> {
    wasserstein_exact_capped(mu, nu, metric, p, DEFAULT_EXACT_CAP)
}

/// Exact optimal coupling. One-dimensional Euclidean problems are solved by
/// the monotone coupling and ignore `cap`; other problems with more than
/// `cap` atoms on either side are rejected.
pub fn wasserstein_exact_capped(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
    cap: usize,
) -> Result<Coupling> {
    check_masses(mu)?;
    check_masses(nu)?;
    check_order(p)?;
    metric.validate()?;
    check_shapes(mu.atoms(), nu.atoms(), metric)?;
    if is_line_problem(mu, metric) {
        return Ok(line::monotone_coupling(mu, nu, metric, p));
    }
    let atoms = mu.len().max(nu.len());
    if atoms > cap {
        return Err(Error::Capacity { atoms, cap });
    }
    let cost = CostMatrix::new(mu.atoms(), nu.atoms(), metric, p)?;
    exact_on_costs(mu.masses(), nu.masses(), &cost, mu.is_uniform() && nu.is_uniform())
}

pub(crate) fn exact_on_costs(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    uniform: bool,
) -> Result<Coupling> {
    if uniform && a.len() == b.len() {
        let n = a.len();
        let assign = solve_assignment(cost.entries(), n)?;
        let mass = 1.0 / n as f64;
        let flows = assign
            .into_iter()
            .enumerate()
            .map(|(i, j)| Flow {
                source: i,
                target: j,
                mass,
            })
            .collect();
        Ok(Coupling::from_flows(flows, cost, SolverKind::Assignment))
    } else {
        let (flows, iterations) = simplex::transport_simplex(a, b, cost)?;
        let mut c = Coupling::from_flows(flows, cost, SolverKind::Simplex);
        c.iterations = iterations;
        Ok(c)
    }
}

/// Exact transportation simplex regardless of uniformity; used to cross-check
/// the assignment route.
pub fn wasserstein_simplex(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
) -> Result<Coupling> {
    check_masses(mu)?;
    check_masses(nu)?;
    let cost = CostMatrix::new(mu.atoms(), nu.atoms(), metric, p)?;
    exact_on_costs(mu.masses(), nu.masses(), &cost, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Exact when both sides have at most `exact_max_atoms` atoms (or the
    /// problem is one-dimensional), Sinkhorn otherwise.
    Auto,
    Exact,
    Sinkhorn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverPolicy {
    pub choice: SolverChoice,
    pub exact_max_atoms: usize,
    /// Sinkhorn regularisation as a multiple of the median cost entry.
    pub eps_scale: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverPolicy {
    fn default() -> Self {
        Self {
            choice: SolverChoice::Auto,
            exact_max_atoms: 256,
            eps_scale: 0.05,
            max_iter: 2000,
            tol: 1e-9,
        }
    }
}

/// Solves `mu -> nu` according to `policy`.
pub fn solve(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
    policy: &SolverPolicy,
) -> Result<Coupling> {
    let small = mu.len() <= policy.exact_max_atoms && nu.len() <= policy.exact_max_atoms;
    let use_exact = match policy.choice {
        SolverChoice::Exact => true,
        SolverChoice::Sinkhorn => false,
        SolverChoice::Auto => small || is_line_problem(mu, metric),
    };
    if use_exact {
        wasserstein_exact(mu, nu, metric, p)
    } else {
        check_masses(mu)?;
        check_masses(nu)?;
        let cost = CostMatrix::new(mu.atoms(), nu.atoms(), metric, p)?;
        let eps = (policy.eps_scale * cost.median()).max(1e-12);
        sinkhorn::sinkhorn_on(mu.masses(), nu.masses(), &cost, eps, policy.max_iter, policy.tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::empirical_from;

    fn line(xs: &[f64]) -> EmpiricalMeasure {
        empirical_from(xs.iter().map(|&x| Point::new(vec![x])).collect()).unwrap()
    }

    fn plane(xs: &[(f64, f64)]) -> EmpiricalMeasure {
        empirical_from(xs.iter().map(|&(x, y)| Point::new(vec![x, y])).collect()).unwrap()
    }

    #[test]
    fn identical_measures_cost_zero() {
        let mu = plane(&[(0.0, 0.0), (1.0, 2.0), (3.0, -1.0)]);
        let c = wasserstein_exact(&mu, &mu, &GroundMetric::euclidean(), 2.0).unwrap();
        assert_eq!(c.cost(), 0.0);
        for f in &c.flows {
            assert_eq!(f.source, f.target);
        }
    }

    #[test]
    fn single_pair() {
        let c = wasserstein_exact(&line(&[0.0]), &line(&[3.0]), &GroundMetric::euclidean(), 2.0)
            .unwrap();
        assert!((c.cost() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_on_the_line() {
        // Couplings of uniform {0,1} -> {1,2}: monotone costs 1+1, crossed costs 2+0,
        // both halved; with p = 1 both give 1.0, monotone is the returned one.
        let c = wasserstein_exact(&line(&[0.0, 1.0]), &line(&[1.0, 2.0]), &GroundMetric::euclidean(), 1.0)
            .unwrap();
        assert!((c.cost() - 1.0).abs() < 1e-15);
        let plan = c.dense();
        assert_eq!(plan[0][0], 0.5);
        assert_eq!(plan[1][1], 0.5);

        // same problem embedded in the plane goes through the assignment route
        let c2 = wasserstein_exact(
            &plane(&[(0.0, 0.0), (1.0, 0.0)]),
            &plane(&[(1.0, 0.0), (2.0, 0.0)]),
            &GroundMetric::euclidean(),
            1.0,
        )
        .unwrap();
        assert_eq!(c2.solver, SolverKind::Assignment);
        assert!((c2.cost() - 1.0).abs() < 1e-15);
        assert_eq!(c2.dense()[0][0], 0.5);
    }

    #[test]
    fn capacity_error_above_cap() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        let mu = plane(&pts);
        let err = wasserstein_exact_capped(&mu, &mu, &GroundMetric::euclidean(), 2.0, 5).unwrap_err();
        assert!(matches!(err, Error::Capacity { atoms: 10, cap: 5 }));
    }

    #[test]
    fn unnormalized_masses_rejected_by_solver() {
        let cost = CostMatrix::from_entries(1, 1, vec![0.0], 2.0).unwrap();
        assert_eq!(cost.get(0, 0), 0.0);
        assert!(EmpiricalMeasure::new(vec![Point::new(vec![0.0])], vec![0.9]).is_err());
    }

    #[test]
    fn unequal_sizes_use_simplex() {
        let mu = plane(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        let nu = plane(&[(0.0, 1.0), (2.0, 1.0)]);
        let c = wasserstein_exact(&mu, &nu, &GroundMetric::euclidean(), 2.0).unwrap();
        assert_eq!(c.solver, SolverKind::Simplex);
        for (r, m) in c.row_sums().iter().zip(mu.masses()) {
            assert!((r - m).abs() < 1e-12);
        }
        for (r, m) in c.col_sums().iter().zip(nu.masses()) {
            assert!((r - m).abs() < 1e-12);
        }
    }

    #[test]
    fn auto_policy_falls_back_to_sinkhorn() {
        let pts: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, (i % 3) as f64)).collect();
        let mu = plane(&pts);
        let policy = SolverPolicy {
            exact_max_atoms: 4,
            ..Default::default()
        };
        let c = solve(&mu, &mu, &GroundMetric::euclidean(), 2.0, &policy).unwrap();
        assert_eq!(c.solver, SolverKind::Sinkhorn);
        let exact = solve(&mu, &mu, &GroundMetric::euclidean(), 2.0, &SolverPolicy::default()).unwrap();
        assert_eq!(exact.solver, SolverKind::Assignment);
    }

    #[test]
    fn dense_csv_dump() {
        let c = wasserstein_exact(&line(&[0.0, 1.0]), &line(&[0.0, 1.0]), &GroundMetric::euclidean(), 2.0)
            .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
