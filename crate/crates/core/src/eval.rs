//! Downstream fits and the divergences used to score coresets.
//!
//! Density: weighted Gaussian-mixture EM on the line, compared by discretised
//! KL on a shared grid. Logistic: MAP under a Gaussian prior, compared by the
//! L2 distance between logit functions. Partitions: a finite-mixture Gibbs
//! sampler whose point estimate is compared by variation of information.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{argument, shape, Error, Result};
use crate::measure::Point;
use crate::partition::{cluster_point_estimate, Partition};

const DENSITY_FLOOR: f64 = 1e-12;
const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

impl DensityEstimate {
    /// Rescales `values` to integrate to one by the trapezoid rule.
    pub fn normalized(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return shape("density needs a grid of >= 2 points and one value per point");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return argument("grid must be strictly increasing");
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return argument("density values must be finite and nonnegative");
        }
        let mass = trapezoid(&grid, &values);
        if !(mass > 0.0) {
            return argument("density has zero mass on the grid");
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Self { grid, values })
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

/// `count` equispaced points over `[min - 4 sd, max + 4 sd]` of `xs`.
pub fn default_grid(xs: &[f64], count: usize) -> Result<Vec<f64>> {
    if xs.is_empty() || count < 2 {
        return argument("grid needs data and at least two points");
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-6);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * sd;
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * sd;
    Ok(linspace(lo, hi, count))
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

pub fn gaussian_density(grid: &[f64], mean: f64, sd: f64) -> Result<DensityEstimate> {
    let values = grid.iter().map(|x| normal_pdf(*x, mean, sd * sd)).collect();
    DensityEstimate::normalized(grid.to_vec(), values)
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt()
}

fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (std::f64::consts::TAU * var).ln())
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Mass-weighted log-likelihood after each EM iteration of the kept
    /// restart.
    pub loglik_trace: Vec<f64>,
    /// Some variance hit the floor.
    pub collapsed: bool,
}

impl MixtureFit {
    pub fn loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn density(&self, grid: &[f64]) -> Result<DensityEstimate> {
        let values = grid
            .iter()
            .map(|x| {
                self.weights
                    .iter()
                    .zip(&self.means)
                    .zip(&self.variances)
                    .map(|((w, m), v)| w * normal_pdf(*x, *m, *v))
                    .sum()
            })
            .collect();
        DensityEstimate::normalized(grid.to_vec(), values)
    }
}

fn check_masses(points: &[Point], masses: &[f64]) -> Result<()> {
    if points.is_empty() || points.len() != masses.len() {
        return shape("one mass per point");
    }
    if masses.iter().any(|m| !(*m >= 0.0)) {
        return argument("masses must be nonnegative");
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return argument(format!("masses sum to {total}"));
    }
    Ok(())
}

/// Mass-weighted EM for a `k`-component Gaussian mixture on 1-d points, best
/// of `restarts` seeded initialisations by final log-likelihood.
pub fn fit_mixture_em<R: Rng + ?Sized>(
    points: &[Point],
    masses: &[f64],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<MixtureFit> {
    check_masses(points, masses)?;
    if k == 0 || restarts == 0 {
        return argument("need k >= 1 and at least one restart");
    }
    if points[0].dim() != 1 {
        return Err(Error::Unsupported("mixture EM is implemented for 1-d data".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.coords[0]).collect();
    let mut best: Option<MixtureFit> = None;
    for _ in 0..restarts {
        let init = seed_means(&xs, masses, k, rng);
        let fit = em_from(&xs, masses, init);
        if best.as_ref().is_none_or(|b| fit.loglik() > b.loglik()) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ style seeding with mass-weighted probabilities.
fn seed_means<R: Rng + ?Sized>(xs: &[f64], masses: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let pick = |weights: &[f64], rng: &mut R| {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return rng.random_range(0..weights.len());
        }
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    };
    let mut means = vec![xs[pick(masses, rng)]];
    while means.len() < k {
        let d2: Vec<f64> = xs
            .iter()
            .zip(masses)
            .map(|(x, m)| m * means.iter().map(|c| (x - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        means.push(xs[pick(&d2, rng)]);
    }
    means
}

fn em_from(xs: &[f64], masses: &[f64], means: Vec<f64>) -> MixtureFit {
    let k = means.len();
    let mean: f64 = xs.iter().zip(masses).map(|(x, m)| x * m).sum();
    let var = xs
        .iter()
        .zip(masses)
        .map(|(x, m)| m * (x - mean).powi(2))
        .sum::<f64>()
        .max(VARIANCE_FLOOR);
    let mut fit = MixtureFit {
        weights: vec![1.0 / k as f64; k],
        means,
        variances: vec![var; k],
        loglik_trace: Vec::new(),
        collapsed: false,
    };
    let mut logr = vec![0.0; k];
    let mut resp = vec![0.0; xs.len() * k];
    for _ in 0..1000 {
        // E step, with the log-likelihood of the current parameters
        let mut ll = 0.0;
        for (i, x) in xs.iter().enumerate() {
            for c in 0..k {
                logr[c] = fit.weights[c].ln() + normal_logpdf(*x, fit.means[c], fit.variances[c]);
            }
            let lse = log_sum_exp(&logr);
            ll += masses[i] * lse;
            for c in 0..k {
                resp[i * k + c] = (logr[c] - lse).exp();
            }
        }
        if let Some(prev) = fit.loglik_trace.last() {
            if ll - prev <= 1e-12 * ll.abs().max(1.0) {
                fit.loglik_trace.push(ll);
                break;
            }
        }
        fit.loglik_trace.push(ll);
        // M step
        for c in 0..k {
            let nk: f64 = (0..xs.len()).map(|i| masses[i] * resp[i * k + c]).sum();
            if nk <= 0.0 {
                fit.weights[c] = 0.0;
                continue;
            }
            let mu = (0..xs.len()).map(|i| masses[i] * resp[i * k + c] * xs[i]).sum::<f64>() / nk;
            let v = (0..xs.len())
                .map(|i| masses[i] * resp[i * k + c] * (xs[i] - mu).powi(2))
                .sum::<f64>()
                / nk;
            fit.weights[c] = nk;
            fit.means[c] = mu;
            if v < VARIANCE_FLOOR {
                fit.collapsed = true;
                fit.variances[c] = VARIANCE_FLOOR;
            } else {
                fit.variances[c] = v;
            }
        }
        let total: f64 = fit.weights.iter().sum();
        fit.weights.iter_mut().for_each(|w| *w /= total);
    }
    fit
}

/// Discretised `KL(f || g)` on a shared grid (trapezoid rule), densities
/// floored at `1e-12` inside the log.
pub fn kl_discretized(f: &DensityEstimate, g: &DensityEstimate) -> Result<f64> {
    if f.grid != g.grid {
        return argument("densities live on different grids");
    }
    let terms: Vec<f64> = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| {
            let a = a.max(DENSITY_FLOOR);
            let b = b.max(DENSITY_FLOOR);
            a * (a / b).ln()
        })
        .collect();
    Ok(trapezoid(&f.grid, &terms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    /// Intercept first, then one slope per covariate.
    pub beta: Vec<f64>,
    /// Diagonal of the inverse negative Hessian at the MAP.
    pub posterior_scale: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LogitFit {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// In-place Cholesky solve of `a x = b` for a small SPD matrix.
fn solve_spd(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NonConvergence("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// MAP logistic regression with intercept. Each point counts as
/// `masses[i] * n` observations, so uniform masses give the ordinary
/// likelihood. Prior `beta ~ N(0, prior_sd^2 I)`.
pub fn fit_logistic_map(points: &[Point], masses: &[f64], prior_sd: f64) -> Result<LogitFit> {
    check_masses(points, masses)?;
    if !(prior_sd > 0.0) {
        return argument("prior sd must be positive");
    }
    let d = points[0].dim() + 1;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let y = match p.label {
            Some(0) => 0.0,
            Some(1) => 1.0,
            _ => return argument("logistic fit needs binary labels"),
        };
        let mut x = Vec::with_capacity(d);
        x.push(1.0);
        x.extend_from_slice(&p.coords);
        rows.push((x, y));
    }
    let scale = points.len() as f64;
    let obs: Vec<f64> = masses.iter().map(|m| m * scale).collect();
    let prec = 1.0 / (prior_sd * prior_sd);

    let objective = |beta: &[f64]| -> f64 {
        let mut f = 0.5 * prec * beta.iter().map(|b| b * b).sum::<f64>();
        for ((x, y), w) in rows.iter().zip(&obs) {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            f += w * (softplus(eta) - y * eta);
        }
        f
    };

    let mut beta = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for it in 0..200 {
        // gradient and Hessian of the negative log posterior
        for j in 0..d {
            grad[j] = prec * beta[j];
        }
        hess.iter_mut().for_each(|h| *h = 0.0);
        for j in 0..d {
            hess[j * d + j] = prec;
        }
        for ((x, y), w) in rows.iter().zip(&obs) {
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let s = sigmoid(eta);
            let r = w * (s - y);
            let c = w * s * (1.0 - s);
            for j in 0..d {
                grad[j] += r * x[j];
                for l in 0..=j {
                    hess[j * d + l] += c * x[j] * x[l];
                }
            }
        }
        for j in 0..d {
            for l in 0..j {
                hess[l * d + j] = hess[j * d + l];
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-8 {
            let mut scale_diag = vec![0.0; d];
            for (j, s) in scale_diag.iter_mut().enumerate() {
                let mut h = hess.clone();
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                solve_spd(&mut h, &mut e, d)?;
                *s = e[j];
            }
            return Ok(LogitFit {
                beta,
                posterior_scale: scale_diag,
                iterations: it,
                grad_norm: gnorm,
            });
        }
        let mut step = grad.clone();
        let mut h = hess.clone();
        solve_spd(&mut h, &mut step, d)?;
        let f0 = objective(&beta);
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        // near the optimum the decrease drowns in summation roundoff
        let slack = 1e-12 * f0.abs().max(1.0);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            if objective(&cand) <= f0 - 1e-4 * t * slope + slack || t < 1e-10 {
                beta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::NonConvergence("logistic MAP did not converge in 200 iterations".into()))
}

/// Root-mean-square difference of the two logit functions over `covariates`.
pub fn logit_l2_distance(a: &LogitFit, b: &LogitFit, covariates: &[Point]) -> Result<f64> {
    if a.beta.len() != b.beta.len() {
        return shape("fits have different coefficient counts");
    }
    if covariates.is_empty() {
        return argument("need at least one covariate point");
    }
    if covariates[0].dim() + 1 != a.beta.len() {
        return shape("covariates do not match the coefficients");
    }
    let ms: f64 = covariates
        .iter()
        .map(|x| (a.logit(&x.coords) - b.logit(&x.coords)).powi(2))
        .sum::<f64>()
        / covariates.len() as f64;
    Ok(ms.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub d_coreset_full: f64,
    pub d_unit_full: f64,
    pub diff: f64,
    pub win: bool,
}

impl ComparisonRecord {
    pub fn from_distances(d_coreset_full: f64, d_unit_full: f64) -> Self {
        let diff = d_coreset_full - d_unit_full;
        Self {
            d_coreset_full,
            d_unit_full,
            diff,
            win: diff < 0.0,
        }
    }
}

/// Scores a coreset fit and a unit-coreset fit against the full-data fit;
/// `divergence(x, full)` is the distance of `x` from the full fit.
pub fn compare_runs<T>(
    full: &T,
    coreset: &T,
    unit: &T,
    divergence: impl Fn(&T, &T) -> Result<f64>,
) -> Result<ComparisonRecord> {
    Ok(ComparisonRecord::from_distances(
        divergence(coreset, full)?,
        divergence(unit, full)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub k: usize,
    pub sweeps: usize,
    pub keep: usize,
    /// Known isotropic kernel sd.
    pub kernel_sd: f64,
    /// Prior sd of the component means around the data mean; `None` uses
    /// twice the data's largest coordinate sd.
    pub mean_prior_sd: Option<f64>,
    pub dirichlet: f64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            k: 6,
            sweeps: 200,
            keep: 100,
            kernel_sd: 1.0,
            mean_prior_sd: None,
            dirichlet: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsFit {
    pub draws: Vec<Partition>,
    pub estimate: Partition,
}

/// Finite Gaussian mixture with known kernel sd, conjugate normal prior on
/// the means and a symmetric Dirichlet on the proportions. Point `i` counts
/// `masses[i] * n` times in the conditional updates. Returns the kept
/// draws and their [`cluster_point_estimate`].
pub fn gibbs_mixture(points: &[Point], masses: &[f64], cfg: &GibbsConfig, rng: &mut dyn RngCore) -> Result<GibbsFit> {
    if points.is_empty() {
        return argument("no points to cluster");
    }
    let obs = observation_weights(points.len(), masses)?;
    if cfg.k == 0 || cfg.keep == 0 || cfg.keep > cfg.sweeps || !(cfg.kernel_sd > 0.0) {
        return argument("invalid Gibbs configuration");
    }
    let n = points.len();
    let d = points[0].dim();
    let mut center = vec![0.0; d];
    for p in points {
        for (c, x) in center.iter_mut().zip(&p.coords) {
            *c += x / n as f64;
        }
    }
    let spread = (0..d)
        .map(|j| (points.iter().map(|p| (p.coords[j] - center[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
        .fold(0.0f64, f64::max);
    let s0 = cfg.mean_prior_sd.unwrap_or(2.0 * spread.max(cfg.kernel_sd));
    let var = cfg.kernel_sd * cfg.kernel_sd;
    let k = cfg.k;

    // initial means: k-means++ on uniform masses
    let mut means: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].coords.clone()];
    while means.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| means.iter().map(|m| sq_dist(&p.coords, m)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        means.push(points[idx].coords.clone());
    }
    let mut props = vec![1.0 / k as f64; k];
    let mut z = vec![0usize; n];
    let mut logp = vec![0.0; k];
    let mut draws = Vec::with_capacity(cfg.keep);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    for sweep in 0..cfg.sweeps {
        for (i, p) in points.iter().enumerate() {
            for c in 0..k {
                logp[c] = props[c].ln() - sq_dist(&p.coords, &means[c]) / (2.0 * var);
            }
            let lse = log_sum_exp(&logp);
            let mut u: f64 = rng.random();
            let mut pick = k - 1;
            for (c, lp) in logp.iter().enumerate() {
                let pr = (lp - lse).exp();
                if u < pr {
                    pick = c;
                    break;
                }
                u -= pr;
            }
            z[i] = pick;
        }
        let mut counts = vec![0.0; k];
        let mut sums = vec![vec![0.0; d]; k];
        for ((p, &c), w) in points.iter().zip(&z).zip(&obs) {
            counts[c] += w;
            for (s, x) in sums[c].iter_mut().zip(&p.coords) {
                *s += w * x;
            }
        }
        for c in 0..k {
            let prec = counts[c] / var + 1.0 / (s0 * s0);
            let sd = (1.0 / prec).sqrt();
            for j in 0..d {
                let m = (sums[c][j] / var + center[j] / (s0 * s0)) / prec;
                means[c][j] = m + sd * std_normal.sample(rng);
            }
        }
        let gam: Vec<f64> = counts
            .iter()
            .map(|&c| {
                Gamma::new(cfg.dirichlet + c, 1.0)
                    .expect("positive shape")
                    .sample(rng)
                    .max(f64::MIN_POSITIVE)
            })
            .collect();
        let total: f64 = gam.iter().sum();
        for (p, g) in props.iter_mut().zip(&gam) {
            *p = g / total;
        }
        if sweep >= cfg.sweeps - cfg.keep {
            draws.push(Partition::from_labels(&z));
        }
    }
    let estimate = cluster_point_estimate(&draws)?;
    Ok(GibbsFit { draws, estimate })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn observation_weights(n: usize, masses: &[f64]) -> Result<Vec<f64>> {
    if masses.len() != n {
        return shape("one mass per point");
    }
    let total: f64 = masses.iter().sum();
    if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) || !(total > 0.0) {
        return argument("masses must be finite, nonnegative and not all zero");
    }
    Ok(masses.iter().map(|m| m / total * n as f64).collect())
}

/// Extends a clustering of `fitted` points to `targets`: each target goes to
/// the cluster maximising `log(share) - |y - centroid|^2 / (2 kernel_sd^2)`,
/// with mass-weighted centroids and shares taken from the fitted clustering.
pub fn allocate(
    fitted: &[Point],
    masses: &[f64],
    clustering: &Partition,
    targets: &[Point],
    kernel_sd: f64,
) -> Result<Partition> {
    if fitted.len() != clustering.len() {
        return shape("one label per fitted point");
    }
    if fitted.is_empty() || targets.is_empty() {
        return argument("nothing to allocate");
    }
    let obs = observation_weights(fitted.len(), masses)?;
    let k = clustering.num_clusters();
    let d = fitted[0].dim();
    let mut counts = vec![0.0; k];
    let mut centroids = vec![vec![0.0; d]; k];
    for ((p, &c), w) in fitted.iter().zip(clustering.labels()).zip(&obs) {
        counts[c] += w;
        for (s, x) in centroids[c].iter_mut().zip(&p.coords) {
            *s += w * x;
        }
    }
    for (cen, &cnt) in centroids.iter_mut().zip(&counts) {
        for s in cen.iter_mut() {
            *s /= cnt;
        }
    }
    let var = kernel_sd * kernel_sd;
    let n = fitted.len() as f64;
    let labels: Vec<usize> = targets
        .iter()
        .map(|y| {
            let mut best = (f64::NEG_INFINITY, 0);
            for c in 0..k {
                let s = (counts[c] / n).ln() - sq_dist(&y.coords, &centroids[c]) / (2.0 * var);
                if s > best.0 {
                    best = (s, c);
                }
            }
            best.1
        })
        .collect();
    Ok(Partition::from_labels(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::stream_rng;
    use crate::partition::variation_of_information;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::new(vec![x])).collect()
    }

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn single_component_moment_match() {
        let xs = [0.3, -1.2, 2.5, 0.9, 4.1];
        let masses = [0.1, 0.2, 0.3, 0.25, 0.15];
        let fit = fit_mixture_em(&pts(&xs), &masses, 1, 1, &mut stream_rng(0, 0)).unwrap();
        let mean: f64 = xs.iter().zip(&masses).map(|(x, m)| x * m).sum();
        let var: f64 = xs.iter().zip(&masses).map(|(x, m)| m * (x - mean).powi(2)).sum();
        assert!((fit.means[0] - mean).abs() < 1e-9);
        assert!((fit.variances[0] - var).abs() < 1e-9);
    }

    #[test]
    fn em_loglik_is_monotone() {
        let mut rng = stream_rng(2, 0);
        let n = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..300).map(|i| n.sample(&mut rng) + if i % 3 == 0 { 5.0 } else { 0.0 }).collect();
        let fit = fit_mixture_em(&pts(&xs), &uniform(300), 3, 3, &mut rng).unwrap();
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{w:?}");
        }
    }

    #[test]
    fn kl_examples() {
        let grid = linspace(-8.0, 8.0, 1600);
        let f = gaussian_density(&grid, 0.0, 1.0).unwrap();
        assert_eq!(kl_discretized(&f, &f).unwrap(), 0.0);
        let g = gaussian_density(&grid, 1.0, 1.0).unwrap();
        assert!((kl_discretized(&f, &g).unwrap() - 0.5).abs() < 0.01);
        let h = gaussian_density(&grid, 0.0, 2.0).unwrap();
        let exact = 2f64.ln() + 1.0 / 8.0 - 0.5;
        assert!((kl_discretized(&f, &h).unwrap() - exact).abs() < 0.01);
        let other = gaussian_density(&linspace(-7.0, 8.0, 1600), 0.0, 1.0).unwrap();
        assert!(kl_discretized(&f, &other).is_err());
    }

    #[test]
    fn logistic_all_ones_strong_prior() {
        let points: Vec<Point> = (0..40).map(|i| Point::labeled(vec![i as f64 / 10.0 - 2.0], 1)).collect();
        let fit = fit_logistic_map(&points, &uniform(40), 0.5).unwrap();
        assert!(fit.beta[0] > 0.0);
        assert!(fit.beta[1].abs() < 0.05, "{:?}", fit.beta);
        assert!(fit.grad_norm < 1e-8);
    }

    #[test]
    fn logistic_mirror_symmetry() {
        let mut points = Vec::new();
        for (x, y) in [(1.0, 1), (2.0, 0), (0.5, 1), (3.0, 1)] {
            points.push(Point::labeled(vec![x], y));
            points.push(Point::labeled(vec![-x], 1 - y));
        }
        let fit = fit_logistic_map(&points, &uniform(8), 3.0).unwrap();
        assert!(fit.beta[0].abs() < 1e-6);
    }

    #[test]
    fn logit_distance_examples() {
        let a = LogitFit {
            beta: vec![1.0, 0.5],
            posterior_scale: vec![],
            iterations: 0,
            grad_norm: 0.0,
        };
        let mut b = a.clone();
        let xs = pts(&[0.1, -3.0, 2.0]);
        assert_eq!(logit_l2_distance(&a, &a, &xs).unwrap(), 0.0);
        b.beta[0] = 0.0;
        assert!((logit_l2_distance(&a, &b, &xs).unwrap() - 1.0).abs() < 1e-15);
        assert!(logit_l2_distance(&a, &b, &[]).is_err());
    }

    #[test]
    fn comparison_arithmetic() {
        let r = ComparisonRecord::from_distances(0.2, 0.5);
        assert!((r.diff + 0.3).abs() < 1e-15 && r.win);
        let tie = compare_runs(&1.0, &2.0, &2.0, |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        assert_eq!(tie.diff, 0.0);
        assert!(!tie.win);
    }

    #[test]
    fn gibbs_separates_blobs() {
        let mut rng = stream_rng(3, 0);
        let n = Normal::new(0.0, 0.5).unwrap();
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for i in 0..90 {
            let c = i % 3;
            let (cx, cy) = [(0.0, 0.0), (8.0, 0.0), (0.0, 8.0)][c];
            points.push(Point::new(vec![cx + n.sample(&mut rng), cy + n.sample(&mut rng)]));
            truth.push(c);
        }
        let cfg = GibbsConfig {
            k: 3,
            sweeps: 60,
            keep: 20,
            kernel_sd: 0.5,
            ..Default::default()
        };
        let fit = gibbs_mixture(&points, &uniform(90), &cfg, &mut rng).unwrap();
        let vi = variation_of_information(&fit.estimate, &Partition::from_labels(&truth)).unwrap();
        assert!(vi < 1e-9, "{vi}");
        let alloc = allocate(&points, &uniform(90), &fit.estimate, &points, 0.5).unwrap();
        assert_eq!(alloc, fit.estimate);
    }
}
