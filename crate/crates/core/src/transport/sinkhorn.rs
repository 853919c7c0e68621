use super::{check_masses, Coupling, CostMatrix, Flow, SolverKind};
use crate::error::{argument, Result};
use crate::measure::{EmpiricalMeasure, GroundMetric};

/// Above this ratio of largest cost to `eps` the kernel `exp(-C/eps)` risks
/// underflow and the iterations run on log-potentials instead.
const LOG_DOMAIN_RATIO: f64 = 100.0;
/// Iteration cap for each intermediate annealing stage.
const STAGE_ITER: usize = 500;

/// Entropic-regularised coupling.
///
/// Alternates row and column scalings until the row marginal error (L1)
/// drops below `tol` or `max_iter` is reached. Small `eps` or a stalled
/// plain run switch to log-domain iterations with eps-annealing; if the final
/// stage still misses `tol` the result has `converged = false`. The plan is then rounded onto the
/// exact marginals, so it is always feasible. The reported cost is the plain
/// transport cost of the plan, without the entropy term.
pub fn sinkhorn(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
    eps: f64,
    max_iter: usize,
    tol: f64,
) -> Result<Coupling> {
    check_masses(mu)?;
    check_masses(nu)?;
    let cost = CostMatrix::new(mu.atoms(), nu.atoms(), metric, p)?;
    sinkhorn_on(mu.masses(), nu.masses(), &cost, eps, max_iter, tol)
}

pub(crate) fn sinkhorn_on(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    max_iter: usize,
    tol: f64,
) -> Result<Coupling> {
    if !(eps > 0.0) || !eps.is_finite() {
        return argument(format!("sinkhorn eps must be positive, got {eps}"));
    }
    if max_iter == 0 {
        return argument("sinkhorn needs max_iter >= 1");
    }
    let cmax = cost.entries().iter().fold(0.0f64, |acc, &c| acc.max(c));
    let attempt = if cmax / eps < LOG_DOMAIN_RATIO {
        scaling_iterations(a, b, cost, eps, max_iter, tol)
    } else {
        None
    };
    let (mut plan, iterations, converged) = match attempt {
        Some(done @ (_, _, true)) => done,
        _ => annealed(a, b, cost, cmax, eps, max_iter, tol),
    };
    round_to_marginals(&mut plan, a, b);

    let m = b.len();
    let mut flows = Vec::new();
    let mut total = 0.0;
    for (k, &mass) in plan.iter().enumerate() {
        if mass > 0.0 {
            let (i, j) = (k / m, k % m);
            total += mass * cost.get(i, j);
            flows.push(Flow {
                source: i,
                target: j,
                mass,
            });
        }
    }
    Ok(Coupling {
        rows: a.len(),
        cols: m,
        flows,
        total,
        p: cost.order(),
        solver: SolverKind::Sinkhorn,
        converged,
        iterations,
    })
}

/// Classic `u = a / Kv, v = b / K^T u`. Returns `None` if the scalings stop
/// being finite, so the caller can fall back to log-domain iterations.
fn scaling_iterations(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    max_iter: usize,
    tol: f64,
) -> Option<(Vec<f64>, usize, bool)> {
    let (n, m) = (a.len(), b.len());
    let kernel: Vec<f64> = cost.entries().iter().map(|c| (-c / eps).exp()).collect();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; m];
    let mut converged = false;
    let mut iters = 0;
    for it in 1..=max_iter {
        iters = it;
        for i in 0..n {
            let row = &kernel[i * m..(i + 1) * m];
            kv[i] = row.iter().zip(&v).map(|(k, vj)| k * vj).sum();
            u[i] = a[i] / kv[i];
        }
        ktu.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let row = &kernel[i * m..(i + 1) * m];
            for j in 0..m {
                ktu[j] += row[j] * u[i];
            }
        }
        for j in 0..m {
            v[j] = b[j] / ktu[j];
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return None;
        }
        // columns are exact after the v-update; check rows
        let mut err = 0.0;
        for i in 0..n {
            let row = &kernel[i * m..(i + 1) * m];
            let s: f64 = row.iter().zip(&v).map(|(k, vj)| k * vj).sum();
            err += (u[i] * s - a[i]).abs();
        }
        if err < tol {
            converged = true;
            break;
        }
    }
    let mut plan = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            plan[i * m + j] = u[i] * kernel[i * m + j] * v[j];
        }
    }
    if plan.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((plan, iters, converged))
}

/// Projects an approximate plan onto the transport polytope: shrink rows
/// and columns that carry too much mass, then spread the remaining deficit
/// as a rank-one correction.
fn round_to_marginals(plan: &mut [f64], a: &[f64], b: &[f64]) {
    let (n, m) = (a.len(), b.len());
    for i in 0..n {
        let row = &mut plan[i * m..(i + 1) * m];
        let s: f64 = row.iter().sum();
        if s > a[i] {
            let f = a[i] / s;
            row.iter_mut().for_each(|x| *x *= f);
        }
    }
    for j in 0..m {
        let s: f64 = (0..n).map(|i| plan[i * m + j]).sum();
        if s > b[j] {
            let f = b[j] / s;
            (0..n).for_each(|i| plan[i * m + j] *= f);
        }
    }
    let dr: Vec<f64> = (0..n)
        .map(|i| (a[i] - plan[i * m..(i + 1) * m].iter().sum::<f64>()).max(0.0))
        .collect();
    let dc: Vec<f64> = (0..m)
        .map(|j| (b[j] - (0..n).map(|i| plan[i * m + j]).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = dr.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] += dr[i] * dc[j] / total;
            }
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + values.map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Log-domain iterations along a halving schedule from the cost scale down
/// to `eps`, each stage warm-started from the previous potentials. Small
/// `eps` alone can stall for a very long time when two near-optimal
/// couplings compete.
fn annealed(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    cmax: f64,
    eps: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, usize, bool) {
    let mut f = vec![0.0; a.len()];
    let mut g = vec![0.0; b.len()];
    let mut stage = cmax.max(eps);
    let mut total = 0;
    while stage > eps {
        let (it, _) = log_iterations(a, b, cost, stage, max_iter.min(STAGE_ITER), tol, &mut f, &mut g);
        total += it;
        stage = (stage * 0.5).max(eps);
    }
    let (it, converged) = log_iterations(a, b, cost, eps, max_iter, tol, &mut f, &mut g);
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let m = b.len();
    let mut plan = vec![0.0; a.len() * m];
    for (i, fi) in f.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            let e = (fi + gj - cost.get(i, j)) / eps + log_a[i] + log_b[j];
            plan[i * m + j] = e.exp();
        }
    }
    (plan, total + it, converged)
}

/// Stabilised iterations on dual potentials `f, g`, with
/// `plan_ij = a_i b_j exp((f_i + g_j - C_ij) / eps)`.
#[allow(clippy::too_many_arguments)]
fn log_iterations(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    max_iter: usize,
    tol: f64,
    f: &mut [f64],
    g: &mut [f64],
) -> (usize, bool) {
    let (n, m) = (a.len(), b.len());
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut converged = false;
    let mut iters = 0;
    for it in 1..=max_iter {
        iters = it;
        for i in 0..n {
            let lse = log_sum_exp((0..m).map(|j| (g[j] - cost.get(i, j)) / eps + log_b[j]));
            f[i] = -eps * lse;
        }
        for j in 0..m {
            let lse = log_sum_exp((0..n).map(|i| (f[i] - cost.get(i, j)) / eps + log_a[i]));
            g[j] = -eps * lse;
        }
        let mut err = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            let lse = log_sum_exp((0..m).map(|j| (f[i] + g[j] - cost.get(i, j)) / eps + log_b[j]));
            err += (a[i] * lse.exp() - a[i]).abs();
        }
        if err < tol {
            converged = true;
            break;
        }
    }
    (iters, converged)
}
