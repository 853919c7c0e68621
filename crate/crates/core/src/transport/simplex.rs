//! Transportation simplex (network simplex on the bipartite graph).
//!
//! The basis is a spanning tree over the `n + m` row/column nodes with
//! exactly `n + m - 1` basic cells, initialised by the north-west corner rule.
//! Each pivot prices all cells with the tree potentials, brings in the most
//! negative reduced cost, and pushes flow around the unique tree cycle.

use super::{CostMatrix, Flow};
use crate::error::{Error, Result};

struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

pub(super) fn transport_simplex(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<(Vec<Flow>, usize)> {
    let n = a.len();
    let m = b.len();
    debug_assert_eq!(cost.rows(), n);
    debug_assert_eq!(cost.cols(), m);

    let mut basis = north_west_corner(a, b);
    let nodes = n + m;
    // adjacency: node -> basis cell ids (rows are 0..n, columns n..n+m)
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (k, c) in basis.iter().enumerate() {
        adj[c.row].push(k);
        adj[n + c.col].push(k);
    }

    let cmax = cost.entries().iter().fold(0.0f64, |acc, &c| acc.max(c));
    let tol = 1e-12 * cmax.max(1.0);
    let max_pivots = 50 * nodes * nodes + 1000;

    let mut pot = vec![0.0; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut stack = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];

    for pivot in 0..max_pivots {
        // potentials: u_i + v_j = c_ij on basic cells, rooted at row 0
        seen.iter_mut().for_each(|s| *s = false);
        stack.clear();
        stack.push(0);
        seen[0] = true;
        pot[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &k in &adj[node] {
                let c = &basis[k];
                let (r, col) = (c.row, n + c.col);
                let other = if node == r { col } else { r };
                if !seen[other] {
                    seen[other] = true;
                    pot[other] = cost.get(c.row, c.col) - pot[node];
                    stack.push(other);
                }
            }
        }

        // pricing
        let mut best = -tol;
        let mut entering = None;
        for i in 0..n {
            let ui = pot[i];
            for j in 0..m {
                let r = cost.get(i, j) - ui - pot[n + j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let flows = basis
                .into_iter()
                .filter(|c| c.flow > 0.0)
                .map(|c| Flow {
                    source: c.row,
                    target: c.col,
                    mass: c.flow,
                })
                .collect();
            return Ok((flows, pivot));
        };

        // tree path from column ej to row ei
        let start = n + ej;
        let goal = ei;
        seen.iter_mut().for_each(|s| *s = false);
        stack.clear();
        stack.push(start);
        seen[start] = true;
        parent_cell[start] = usize::MAX;
        'search: while let Some(node) = stack.pop() {
            for &k in &adj[node] {
                let c = &basis[k];
                let (r, col) = (c.row, n + c.col);
                let other = if node == r { col } else { r };
                if !seen[other] {
                    seen[other] = true;
                    parent_cell[other] = k;
                    if other == goal {
                        break 'search;
                    }
                    stack.push(other);
                }
            }
        }
        // walk back from the goal: cells alternate (+, -) starting next to the
        // entering cell at the row end; collect in order from column ej.
        let mut path = Vec::new();
        let mut node = goal;
        while node != start {
            let k = parent_cell[node];
            path.push(k);
            let c = &basis[k];
            node = if node == c.row { n + c.col } else { c.row };
        }
        path.reverse();
        // path[0] touches column ej: it loses flow; signs alternate from there
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 && basis[k].flow < theta {
                theta = basis[k].flow;
                leaving = k;
            }
        }
        if leaving == usize::MAX {
            return Err(Error::NonConvergence("simplex cycle without a leaving cell".into()));
        }
        let theta = theta.max(0.0);
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[k].flow = (basis[k].flow - theta).max(0.0);
            } else {
                basis[k].flow += theta;
            }
        }
        // swap the leaving cell for the entering one
        let old = &basis[leaving];
        let (or, oc) = (old.row, n + old.col);
        adj[or].retain(|&k| k != leaving);
        adj[oc].retain(|&k| k != leaving);
        basis[leaving] = Cell {
            row: ei,
            col: ej,
            flow: theta,
        };
        adj[ei].push(leaving);
        adj[n + ej].push(leaving);
    }
    Err(Error::NonConvergence(format!(
        "transportation simplex exceeded {max_pivots} pivots"
    )))
}

fn north_west_corner(a: &[f64], b: &[f64]) -> Vec<Cell> {
    let (n, m) = (a.len(), b.len());
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    let mut ra = a[0];
    let mut rb = b[0];
    loop {
        let f = ra.min(rb).max(0.0);
        cells.push(Cell {
            row: i,
            col: j,
            flow: f,
        });
        ra -= f;
        rb -= f;
        let last_i = i + 1 == n;
        let last_j = j + 1 == m;
        if last_i && last_j {
            break;
        }
        if (ra <= rb && !last_i) || last_j {
            i += 1;
            ra = a[i];
        } else {
            j += 1;
            rb = b[j];
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn north_west_is_a_spanning_tree() {
        let cells = north_west_corner(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(cells.len(), 4);
        let total: f64 = cells.iter().map(|c| c.flow).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn textbook_instance() {
        // supplies 0.3/0.4/0.3, demands 0.2/0.5/0.3
        let a = [0.3, 0.4, 0.3];
        let b = [0.2, 0.5, 0.3];
        let c = [8.0, 6.0, 10.0, 9.0, 12.0, 13.0, 14.0, 9.0, 16.0];
        let cost = CostMatrix::from_entries(3, 3, c.to_vec(), 1.0).unwrap();
        let (flows, _) = transport_simplex(&a, &b, &cost).unwrap();
        let total: f64 = flows.iter().map(|f| f.mass * c[f.source * 3 + f.target]).sum();
        // LP optimum (computed with an external LP solver): 9.3
        assert!((total - 9.3).abs() < 1e-12, "{total}");
    }
}
