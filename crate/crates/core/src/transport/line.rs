use super::{Coupling, Flow, SolverKind};
use crate::measure::{EmpiricalMeasure, GroundMetric};

/// On the real line any convex cost of `|x - y|` is minimised by the monotone
/// (quantile) coupling: sort both sides and fill greedily.
pub(super) fn monotone_coupling(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &GroundMetric,
    p: f64,
) -> Coupling {
    let order = |m: &EmpiricalMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&i, &j| {
            m.atoms()[i].coords[0]
                .total_cmp(&m.atoms()[j].coords[0])
                .then(i.cmp(&j))
        });
        idx
    };
    let src = order(mu);
    let dst = order(nu);
    let a = mu.masses();
    let b = nu.masses();

    let mut flows = Vec::with_capacity(src.len() + dst.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a[src[0]];
    let mut rb = b[dst[0]];
    let mut total = 0.0;
    loop {
        let f = ra.min(rb);
        if f > 0.0 {
            let (s, t) = (src[i], dst[j]);
            total += f * metric.dist_pow_unchecked(&mu.atoms()[s], &nu.atoms()[t], p);
            flows.push(Flow {
                source: s,
                target: t,
                mass: f,
            });
        }
        ra -= f;
        rb -= f;
        let last_i = i + 1 == src.len();
        let last_j = j + 1 == dst.len();
        if last_i && last_j {
            break;
        }
        if (ra <= rb && !last_i) || last_j {
            i += 1;
            ra += a[src[i]];
        } else {
            j += 1;
            rb += b[dst[j]];
        }
    }
    Coupling {
        rows: mu.len(),
        cols: nu.len(),
        flows,
        total,
        p,
        solver: SolverKind::Line,
        converged: true,
        iterations: 0,
    }
}
