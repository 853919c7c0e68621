//! Predictive coreset weights.
//!
//! Each outer iteration draws a hyperparameter, an urn sample for the full
//! data and an urn trajectory for the support, then fits weights `w` so that
//! the support trajectory materialised at `w` is close in `W_p` to the full
//! sample. The returned weights are the average over iterations.
//!
//! Everything runs in centred coordinates: the support enters as
//! `w_i * (y_i - mean)`.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abc::ChainDiagnostics;
use crate::error::{argument, shape, Error, Result};
use crate::measure::{center_dataset, empirical_from, format_float, Dataset, GroundMetric, Point};
use crate::prior::Hyperprior;
use crate::transport::{pair_gradient, solve, Coupling, SolverKind, SolverPolicy};
use crate::urn::{materialize, sample_trajectory, DPConfig, Root, UrnTrajectory};
use crate::measure::EmpiricalMeasure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoresetWeights {
    pub values: Vec<f64>,
    pub support_indices: Vec<usize>,
}

impl CoresetWeights {
    pub fn new(values: Vec<f64>, support_indices: Vec<usize>) -> Result<Self> {
        if values.len() != support_indices.len() {
            return shape("one weight per support index");
        }
        if values.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return argument("weights must be finite and nonnegative");
        }
        let mut sorted = support_indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|p| p[0] == p[1]) {
            return argument("support indices must be distinct");
        }
        Ok(Self {
            values,
            support_indices,
        })
    }

    pub fn unit(support_indices: Vec<usize>) -> Result<Self> {
        Self::new(vec![1.0; support_indices.len()], support_indices)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `index,weight` rows, index into the full dataset.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "weight"])?;
        for (i, v) in self.support_indices.iter().zip(&self.values) {
            w.write_record([i.to_string(), format_float(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for row in r.deserialize() {
            let (i, v): (usize, f64) = row?;
            idx.push(i);
            vals.push(v);
        }
        Self::new(vals, idx)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub step_size: f64,
    pub max_inner_iters: usize,
    pub grad_tol: f64,
    /// Divide each coordinate of the gradient by the fixed-plan curvature
    /// `2 m_i |y_i|^2`. With `p = 2` and `step_size = 1` a step is the exact
    /// minimiser for the current plan.
    pub preconditioned: bool,
    /// Stop after this many consecutive evaluations without improvement.
    pub patience: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_inner_iters: 50,
            grad_tol: 1e-10,
            preconditioned: true,
            patience: 3,
        }
    }
}

impl OptimizerConfig {
    /// Plain projected gradient descent with step `0.1 / sqrt(d)`.
    pub fn plain(dim: usize) -> Self {
        Self {
            step_size: 0.1 / (dim.max(1) as f64).sqrt(),
            max_inner_iters: 200,
            preconditioned: false,
            patience: 20,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoresetRunConfig {
    pub n: usize,
    pub m: usize,
    pub niter: usize,
    pub p: f64,
    pub optimizer: OptimizerConfig,
    pub solver: SolverPolicy,
    pub seed: u64,
    /// Compare `(observed, urn draws)` on both sides instead of the urn draws
    /// alone; only the observed support is rescaled on the coreset side.
    pub augment_observed: bool,
    /// Requires `n = N`: replay the full-data trajectory on the support
    /// instead of sampling a separate one.
    pub share_trajectory: bool,
}

impl Default for CoresetRunConfig {
    fn default() -> Self {
        Self {
            n: 50,
            m: 200,
            niter: 50,
            p: 2.0,
            optimizer: OptimizerConfig::default(),
            solver: SolverPolicy::default(),
            seed: 0,
            augment_observed: true,
            share_trajectory: false,
        }
    }
}

impl CoresetRunConfig {
    pub fn validate(&self, data_size: usize) -> Result<()> {
        if self.n == 0 || self.n > data_size {
            return argument(format!("coreset size {} outside 1..={data_size}", self.n));
        }
        if self.m == 0 || self.niter == 0 {
            return argument("M and niter must be at least 1");
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return argument(format!("transport order must be >= 1, got {}", self.p));
        }
        if !(self.optimizer.step_size > 0.0) {
            return argument("step size must be positive");
        }
        if self.share_trajectory && self.n != data_size {
            return argument("shared trajectories need n = N");
        }
        Ok(())
    }
}

/// Stream 0 of the master seed selects the support, stream `t + 1` drives
/// outer iteration `t`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn select_support<R: Rng + ?Sized>(data_size: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n == 0 || n > data_size {
        return argument(format!("cannot select {n} of {data_size} points"));
    }
    Ok(index::sample(rng, data_size, n).into_vec())
}

/// One outer iteration's inputs, all in centred coordinates.
#[derive(Clone, Debug)]
pub struct IterationInput {
    pub theta: Vec<f64>,
    pub full: EmpiricalMeasure,
    pub trajectory: UrnTrajectory,
    pub support: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub weights: Vec<f64>,
    pub initial_objective: f64,
    pub objective: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

/// Coreset-side atoms at a given `w`, with the support index each atom
/// descends from.
struct CoresetSide<'a> {
    trajectory: &'a UrnTrajectory,
    support: &'a [Point],
    roots: Vec<Option<usize>>,
    augment: bool,
}

impl<'a> CoresetSide<'a> {
    fn new(trajectory: &'a UrnTrajectory, support: &'a [Point], augment: bool) -> Self {
        let mut roots: Vec<Option<usize>> = trajectory
            .roots()
            .into_iter()
            .map(|r| match r {
                Root::Conditioning(i) => Some(i),
                Root::Fresh(_) => None,
            })
            .collect();
        if augment {
            roots.extend((0..support.len()).map(Some));
        }
        Self {
            trajectory,
            support,
            roots,
            augment,
        }
    }

    fn measure(&self, w: &[f64]) -> Result<EmpiricalMeasure> {
        let mut atoms = materialize(self.trajectory, self.support, Some(w))?;
        if self.augment {
            atoms.extend(self.support.iter().zip(w).map(|(p, wi)| p.scaled(*wi)));
        }
        empirical_from(atoms)
    }
}

/// Fits weights for one iteration, starting from `init`.
///
/// The objective is `W_p` between `full` and the coreset side. Steps use the
/// gradient of `W_p^p` for a fixed optimal plan, chained through
/// `atom = w_i * y_i`, then clamp at zero. The best evaluated iterate is
/// returned, so `objective <= initial_objective`.
pub fn inner_optimize(
    full: &EmpiricalMeasure,
    trajectory: &UrnTrajectory,
    support: &[Point],
    metric: &GroundMetric,
    cfg: &CoresetRunConfig,
    init: &[f64],
) -> Result<InnerResult> {
    if init.len() != support.len() {
        return shape("one initial weight per support point");
    }
    if trajectory.cond_size != support.len() {
        return shape("trajectory does not condition on the support");
    }
    if init.iter().any(|w| !(*w >= 0.0)) {
        return argument("initial weights must be nonnegative");
    }
    let opt = &cfg.optimizer;
    let side = CoresetSide::new(trajectory, support, cfg.augment_observed);
    let q = metric.order();
    let n = support.len();
    let dim = support[0].dim();
    let sq_norms: Vec<f64> = support
        .iter()
        .map(|y| y.coords.iter().map(|c| c * c).sum())
        .collect();

    let mut w = init.to_vec();
    let mut best_w = w.clone();
    let mut best_total = f64::INFINITY;
    let mut initial_total = f64::NAN;
    let mut solver = SolverKind::Line;
    let mut stall = 0;
    let mut evaluations = 0;
    let mut buf = vec![0.0; dim];
    let mut grad = vec![0.0; n];
    let mut curv = vec![0.0; n];

    loop {
        let nu = side.measure(&w)?;
        let coupling: Coupling = solve(full, &nu, metric, cfg.p, &cfg.solver)?;
        evaluations += 1;
        let total = coupling.total;
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective is {total} after {evaluations} evaluations"
            )));
        }
        if evaluations == 1 {
            initial_total = total;
            solver = coupling.solver;
        }
        if total < best_total {
            best_total = total;
            best_w.clone_from(&w);
            stall = 0;
        } else {
            stall += 1;
            if stall >= opt.patience {
                break;
            }
        }
        if evaluations > opt.max_inner_iters {
            break;
        }

        grad.iter_mut().for_each(|g| *g = 0.0);
        curv.iter_mut().for_each(|h| *h = 0.0);
        let atoms = nu.atoms();
        for (k, mass) in nu.masses().iter().enumerate() {
            if let Some(i) = side.roots[k] {
                curv[i] += mass;
            }
        }
        for f in &coupling.flows {
            let Some(i) = side.roots[f.target] else {
                continue;
            };
            if !pair_gradient(metric, &atoms[f.target], &full.atoms()[f.source], cfg.p, q, &mut buf) {
                continue;
            }
            let dot: f64 = buf.iter().zip(&support[i].coords).map(|(g, y)| g * y).sum();
            grad[i] += f.mass * dot;
        }
        let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax <= opt.grad_tol {
            break;
        }
        let mut moved = 0.0f64;
        for i in 0..n {
            let step = if opt.preconditioned {
                let h = 2.0 * curv[i] * sq_norms[i];
                if h <= 0.0 {
                    continue;
                }
                opt.step_size * grad[i] / h
            } else {
                opt.step_size * grad[i]
            };
            let next = (w[i] - step).max(0.0);
            moved = moved.max((next - w[i]).abs());
            w[i] = next;
        }
        if moved <= 1e-15 * (1.0 + w.iter().fold(0.0f64, |a, x| a.max(*x))) {
            break;
        }
    }

    let order = cfg.p;
    Ok(InnerResult {
        weights: best_w,
        initial_objective: initial_total.powf(1.0 / order),
        objective: best_total.powf(1.0 / order),
        iterations: evaluations,
        solver,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub initial_objective: f64,
    pub objective: f64,
    pub inner_iterations: usize,
    pub solver: SolverKind,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortedIteration {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub niter: usize,
    pub augment_observed: bool,
    pub support_indices: Vec<usize>,
    pub iterations: Vec<IterationRecord>,
    pub aborted: Vec<AbortedIteration>,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainDiagnostics>,
}

impl RunReport {
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.iterations.iter().map(|r| r.theta.clone()).collect()
    }

    /// Per-iteration weight vectors in iteration order.
    pub fn weight_trace(&self) -> Vec<Vec<f64>> {
        self.iterations.iter().map(|r| r.weights.clone()).collect()
    }

    pub fn mean_initial_objective(&self) -> f64 {
        let k = self.iterations.len().max(1) as f64;
        self.iterations.iter().map(|r| r.initial_objective).sum::<f64>() / k
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outer loop shared by all coreset variants. `build` produces iteration
/// `t`'s inputs from its own random stream; iterations run in parallel and
/// are reduced in order, so the result does not depend on scheduling.
pub fn run_iterations<F>(
    cfg: &CoresetRunConfig,
    metric: &GroundMetric,
    support_indices: Vec<usize>,
    build: F,
) -> Result<(CoresetWeights, RunReport)>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<IterationInput> + Sync,
{
    let start = Instant::now();
    let n = support_indices.len();
    let outcomes: Vec<Result<(Vec<f64>, std::result::Result<InnerResult, String>)>> = (0..cfg.niter)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(cfg.seed, t as u64 + 1);
            let input = build(t, &mut rng)?;
            let init = vec![1.0; n];
            match inner_optimize(&input.full, &input.trajectory, &input.support, metric, cfg, &init) {
                Ok(r) => Ok((input.theta, Ok(r))),
                Err(e @ (Error::NonFinite(_) | Error::NonConvergence(_))) => {
                    Ok((input.theta, Err(e.to_string())))
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut iterations = Vec::new();
    let mut aborted = Vec::new();
    let mut sum = vec![0.0; n];
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let (theta, inner) = outcome?;
        match inner {
            Ok(r) => {
                for (s, w) in sum.iter_mut().zip(&r.weights) {
                    *s += w;
                }
                iterations.push(IterationRecord {
                    iteration: t,
                    theta,
                    initial_objective: r.initial_objective,
                    objective: r.objective,
                    inner_iterations: r.iterations,
                    solver: r.solver,
                    weights: r.weights,
                });
            }
            Err(reason) => aborted.push(AbortedIteration {
                iteration: t,
                theta,
                reason,
            }),
        }
    }
    if iterations.is_empty() {
        return Err(Error::NonConvergence(format!(
            "all {} iterations aborted",
            cfg.niter
        )));
    }
    let k = iterations.len() as f64;
    let values = sum.into_iter().map(|s| s / k).collect();
    let weights = CoresetWeights::new(values, support_indices.clone())?;
    let report = RunReport {
        niter: cfg.niter,
        augment_observed: cfg.augment_observed,
        support_indices,
        iterations,
        aborted,
        wall_time_secs: start.elapsed().as_secs_f64(),
        chain: None,
    };
    Ok((weights, report))
}

/// Inverse of a support permutation when `n = N`: data index -> support slot.
pub(crate) fn inverse_permutation(support: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; support.len()];
    for (slot, &i) in support.iter().enumerate() {
        inv[i] = slot;
    }
    inv
}

/// Source of the hyperparameter for iteration `t`.
pub(crate) enum ThetaSource<'a> {
    Prior(&'a dyn Hyperprior),
    /// Precomputed values (an ABC chain) mapped through `prior`'s base.
    Fixed(&'a dyn Hyperprior, &'a [Vec<f64>]),
}

pub(crate) fn run_with_theta(
    data: &Dataset,
    alpha: f64,
    thetas: ThetaSource<'_>,
    metric: &GroundMetric,
    cfg: &CoresetRunConfig,
) -> Result<(CoresetWeights, RunReport)> {
    cfg.validate(data.len())?;
    metric.validate()?;
    let (centered, mean) = center_dataset(data);
    let neg_mean: Vec<f64> = mean.iter().map(|m| -m).collect();
    let support = select_support(data.len(), cfg.n, &mut stream_rng(cfg.seed, 0))?;
    let support_points = centered.subset(&support).points;
    let inverse = cfg.share_trajectory.then(|| inverse_permutation(&support));

    run_iterations(cfg, metric, support.clone(), |t, rng| {
        let (prior, theta) = match &thetas {
            ThetaSource::Prior(p) => (*p, p.sample(rng)),
            ThetaSource::Fixed(p, values) => (*p, values[t].clone()),
        };
        let dp = DPConfig::new(alpha, prior.base_measure(&theta)?)?;
        let full_traj = sample_trajectory(data.len(), &dp, cfg.m, rng)?
            .map_fresh(|p| p.shifted(&neg_mean));
        let mut atoms = materialize(&full_traj, &centered.points, None)?;
        if cfg.augment_observed {
            atoms.extend(centered.points.iter().cloned());
        }
        let trajectory = match &inverse {
            Some(inv) => full_traj.remap_conditioning(inv)?,
            None => sample_trajectory(cfg.n, &dp, cfg.m, rng)?.map_fresh(|p| p.shifted(&neg_mean)),
        };
        Ok(IterationInput {
            theta,
            full: empirical_from(atoms)?,
            trajectory,
            support: support_points.clone(),
        })
    })
}

/// Fits predictive coreset weights for `data` under the urn with
/// concentration `alpha` and base `F_theta`, `theta` drawn from `hyperprior`
/// afresh in every iteration and shared by both sides.
pub fn run_predictive_coreset(
    data: &Dataset,
    alpha: f64,
    hyperprior: &dyn Hyperprior,
    metric: &GroundMetric,
    cfg: &CoresetRunConfig,
) -> Result<(CoresetWeights, RunReport)> {
    run_with_theta(data, alpha, ThetaSource::Prior(hyperprior), metric, cfg)
}

/// `mean + w_i * (y_i - mean)` for every support point; labels and latents
/// are copied unchanged.
pub fn materialize_coreset(data: &Dataset, weights: &CoresetWeights, mean: &[f64]) -> Result<Dataset> {
    if mean.len() != data.dim() {
        return shape("mean has the wrong dimension");
    }
    let mut points = Vec::with_capacity(weights.len());
    for (&i, &w) in weights.support_indices.iter().zip(&weights.values) {
        let Some(y) = data.points.get(i) else {
            return argument(format!("support index {i} out of range"));
        };
        if !(w >= 0.0) || !w.is_finite() {
            return argument("weights must be finite and nonnegative");
        }
        let coords = y
            .coords
            .iter()
            .zip(mean)
            // same map as mean + w (y - mean), but exact at w = 1
            .map(|(c, m)| c + (w - 1.0) * (c - m))
            .collect();
        points.push(Point {
            coords,
            label: y.label,
            latent: y.latent.clone(),
        });
    }
    Dataset::new(format!("{}-coreset", data.id), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::PointMass;
    use crate::urn::{BaseMeasureSpec, UrnChoice};

    fn line_data(xs: &[f64]) -> Dataset {
        Dataset::new("t", xs.iter().map(|&x| Point::new(vec![x])).collect()).unwrap()
    }

    fn gauss_point_mass() -> PointMass {
        PointMass::new(
            vec![0.0],
            BaseMeasureSpec::GaussianMixture {
                means: vec![vec![0.0]],
                weights: vec![1.0],
                sd: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn support_selection() {
        let mut rng = stream_rng(1, 0);
        let mut all = select_support(7, 7, &mut rng).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(select_support(7, 1, &mut rng).unwrap().len(), 1);
        assert!(select_support(3, 4, &mut rng).is_err());
        let a = select_support(100, 10, &mut stream_rng(5, 0)).unwrap();
        let b = select_support(100, 10, &mut stream_rng(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_point_pulled_to_target() {
        let full = empirical_from(vec![Point::new(vec![2.0]); 4]).unwrap();
        let traj = UrnTrajectory {
            cond_size: 1,
            choices: vec![UrnChoice::Existing(0); 4],
        };
        let support = vec![Point::new(vec![1.0])];
        let cfg = CoresetRunConfig {
            augment_observed: false,
            ..Default::default()
        };
        let r = inner_optimize(&full, &traj, &support, &GroundMetric::euclidean(), &cfg, &[1.0]).unwrap();
        assert!((r.weights[0] - 2.0).abs() < 1e-3);
        assert!(r.objective <= r.initial_objective);

        let plain = CoresetRunConfig {
            augment_observed: false,
            optimizer: OptimizerConfig::plain(1),
            ..Default::default()
        };
        let r = inner_optimize(&full, &traj, &support, &GroundMetric::euclidean(), &plain, &[1.0]).unwrap();
        assert!((r.weights[0] - 2.0).abs() < 1e-3, "{:?}", r.weights);
    }

    #[test]
    fn weights_never_negative() {
        let full = empirical_from(vec![Point::new(vec![-3.0]); 2]).unwrap();
        let traj = UrnTrajectory {
            cond_size: 1,
            choices: vec![UrnChoice::Existing(0); 2],
        };
        let r = inner_optimize(
            &full,
            &traj,
            &[Point::new(vec![1.0])],
            &GroundMetric::euclidean(),
            &CoresetRunConfig::default(),
            &[1.0],
        )
        .unwrap();
        assert_eq!(r.weights, vec![0.0]);
    }

    #[test]
    fn self_consistent_run_keeps_unit_weights() {
        let data = line_data(&[-2.0, -0.5, 0.3, 1.1, 2.4, 3.0]);
        let cfg = CoresetRunConfig {
            n: 6,
            m: 20,
            niter: 5,
            share_trajectory: true,
            seed: 11,
            ..Default::default()
        };
        let (w, report) =
            run_predictive_coreset(&data, 0.0, &gauss_point_mass(), &GroundMetric::euclidean(), &cfg).unwrap();
        assert!(w.values.iter().all(|v| (v - 1.0).abs() <= 1e-12), "{:?}", w.values);
        assert!(report.iterations.iter().all(|r| r.initial_objective == 0.0));
    }

    #[test]
    fn single_iteration_average_is_that_iteration() {
        let data = line_data(&[-2.0, -1.0, 0.0, 0.5, 1.5, 4.0, 5.0, 6.5]);
        let cfg = CoresetRunConfig {
            n: 3,
            m: 15,
            niter: 1,
            seed: 3,
            ..Default::default()
        };
        let (w, report) =
            run_predictive_coreset(&data, 1.0, &gauss_point_mass(), &GroundMetric::euclidean(), &cfg).unwrap();
        assert_eq!(w.values, report.iterations[0].weights);
        let again =
            run_predictive_coreset(&data, 1.0, &gauss_point_mass(), &GroundMetric::euclidean(), &cfg).unwrap();
        assert_eq!(w, again.0);
    }

    #[test]
    fn materialize_coreset_examples() {
        let data = Dataset::new(
            "d",
            vec![Point::labeled(vec![1.0, 1.0], 1), Point::labeled(vec![3.0, -1.0], 0)],
        )
        .unwrap();
        let unit = CoresetWeights::unit(vec![1, 0]).unwrap();
        let raw = materialize_coreset(&data, &unit, &[0.5, 0.5]).unwrap();
        assert_eq!(raw.points, vec![data.points[1].clone(), data.points[0].clone()]);
        let zero = CoresetWeights::new(vec![0.0, 0.0], vec![0, 1]).unwrap();
        let z = materialize_coreset(&data, &zero, &[0.5, 0.5]).unwrap();
        assert!(z.points.iter().all(|p| p.coords == vec![0.5, 0.5]));
        let two = CoresetWeights::new(vec![2.0], vec![0]).unwrap();
        let t = materialize_coreset(&data, &two, &[0.0, 0.0]).unwrap();
        assert_eq!(t.points[0].coords, vec![2.0, 2.0]);
        assert_eq!(t.points[0].label, Some(1));
    }

    #[test]
    fn weights_csv_round_trip() {
        let w = CoresetWeights::new(vec![0.1, 2.0 / 3.0], vec![4, 2]).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("index,weight\n4,"));
        assert_eq!(CoresetWeights::read_csv(buf.as_slice()).unwrap(), w);
        assert!(CoresetWeights::new(vec![1.0, 1.0], vec![0, 0]).is_err());
        assert!(CoresetWeights::new(vec![-1.0], vec![0]).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = CoresetRunConfig {
            n: 5,
            ..Default::default()
        };
        assert!(cfg.validate(4).is_err());
        assert!(cfg.validate(5).is_ok());
        let shared = CoresetRunConfig {
            n: 3,
            share_trajectory: true,
            ..Default::default()
        };
        assert!(shared.validate(4).is_err());
    }
}
