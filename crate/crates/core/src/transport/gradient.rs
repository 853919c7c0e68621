use serde::{Deserialize, Serialize};

use super::Coupling;
use crate::error::{argument, shape, Error, Result};
use crate::measure::{GroundMetric, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Source,
    Target,
}

/// Gradient of `sum_ij plan_ij * dist(a_i, b_j)^p` with respect to the
/// continuous coordinates of one side, holding the plan fixed.
///
/// Only `coords` receive gradient: the class indicator of the product metric
/// and the latent part of the latent-pair metric are constants here.
pub fn transport_cost_gradient(
    coupling: &Coupling,
    mu_atoms: &[Point],
    nu_atoms: &[Point],
    metric: &GroundMetric,
    p: f64,
    side: Side,
) -> Result<Vec<Vec<f64>>> {
    if coupling.rows != mu_atoms.len() || coupling.cols != nu_atoms.len() {
        return shape("coupling does not match the atom lists");
    }
    let dim = mu_atoms.first().map_or(0, Point::dim);
    if dim == 0 {
        return Err(Error::Unsupported(
            "metric has no continuous coordinates to differentiate".into(),
        ));
    }
    if !(p >= 1.0) {
        return argument("transport order must be >= 1");
    }
    let n_side = match side {
        Side::Source => mu_atoms.len(),
        Side::Target => nu_atoms.len(),
    };
    let mut grad = vec![vec![0.0; dim]; n_side];
    let q = metric.order();
    let mut buf = vec![0.0; dim];
    for f in &coupling.flows {
        let a = &mu_atoms[f.source];
        let b = &nu_atoms[f.target];
        if !pair_gradient(metric, a, b, p, q, &mut buf) {
            continue;
        }
        match side {
            Side::Source => {
                for (g, d) in grad[f.source].iter_mut().zip(&buf) {
                    *g += f.mass * d;
                }
            }
            Side::Target => {
                for (g, d) in grad[f.target].iter_mut().zip(&buf) {
                    *g -= f.mass * d;
                }
            }
        }
    }
    Ok(grad)
}

/// Writes `d/da dist(a, b)^p` into `out`. Returns false when the gradient is
/// zero (coincident points).
pub(crate) fn pair_gradient(
    metric: &GroundMetric,
    a: &Point,
    b: &Point,
    p: f64,
    q: f64,
    out: &mut [f64],
) -> bool {
    // raw = dist^q
    let raw = metric.dist_pow_unchecked(a, b, q);
    if raw <= 0.0 {
        return false;
    }
    let outer = if p == q { 1.0 } else { (p / q) * raw.powf(p / q - 1.0) };
    for ((o, x), y) in out.iter_mut().zip(&a.coords).zip(&b.coords) {
        let d = x - y;
        let inner = if q == 2.0 {
            2.0 * d
        } else if q == 1.0 {
            if d == 0.0 {
                0.0
            } else {
                d.signum()
            }
        } else {
            q * d.signum() * d.abs().powf(q - 1.0)
        };
        *o = outer * inner;
    }
    true
}
