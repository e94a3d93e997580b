//! Brute-force enumeration of the vertices of a small transport polytope.
//!
//! Every basic feasible solution is supported on a spanning tree of the
//! complete bipartite graph `K_{m,n}`; trees are enumerated as
//! `(m + n − 1)`-subsets of cells, solved by leaf peeling, and kept when
//! nonnegative.

use super::transport::TransportPlan;
use crate::error::{Error, Result};

/// Largest support (per side) accepted by [`enumerate_polytope_vertices`].
pub const MAX_ENUM_SUPPORT: usize = 4;

const NEG_TOL: f64 = 1e-12;

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the marginal equations on a candidate tree; `None` if the cells
/// contain a cycle (then they cannot span `m + n` nodes).
fn solve_tree(cells: &[(usize, usize)], a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &(i, j) in cells {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    if degree.contains(&0) {
        return None;
    }
    let mut alive = vec![true; cells.len()];
    let mut flow = vec![0.0; cells.len()];
    for _ in 0..cells.len() {
        // A leaf node fixes the flow on its only live edge.
        let (k, leaf) = (0..cells.len()).filter(|&k| alive[k]).find_map(|k| {
            let (i, j) = cells[k];
            if degree[i] == 1 {
                Some((k, i))
            } else if degree[m + j] == 1 {
                Some((k, m + j))
            } else {
                None
            }
        })?;
        let (i, j) = cells[k];
        let other = if leaf == i { m + j } else { i };
        let x = residual[leaf];
        flow[k] = x;
        residual[leaf] = 0.0;
        residual[other] -= x;
        degree[i] -= 1;
        degree[m + j] -= 1;
        alive[k] = false;
    }
    Some(flow)
}

/// All vertices (basic feasible solutions) of the transport polytope with
/// marginals `a` and `b`, deduplicated.
pub fn enumerate_polytope_vertices(a: &[f64], b: &[f64]) -> Result<Vec<TransportPlan>> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::SolverFailure("empty marginal".into()));
    }
    if m > MAX_ENUM_SUPPORT || n > MAX_ENUM_SUPPORT {
        return Err(Error::SizeLimit { rows: m, cols: n, max: MAX_ENUM_SUPPORT });
    }
    let all_cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut plans: Vec<TransportPlan> = Vec::new();
    loop {
        let cells: Vec<(usize, usize)> = idx.iter().map(|&c| all_cells[c]).collect();
        if let Some(flow) = solve_tree(&cells, a, b) {
            if flow.iter().all(|&x| x >= -NEG_TOL) {
                let mut plan = TransportPlan::zeros(m, n);
                for (&(i, j), &x) in cells.iter().zip(&flow) {
                    plan.set(i, j, x.max(0.0));
                }
                let dup = plans.iter().any(|p| p.data.iter().zip(&plan.data).all(|(x, y)| (x - y).abs() <= 1e-12));
                if !dup {
                    plans.push(plan);
                }
            }
        }
        if !next_combination(&mut idx, all_cells.len()) {
            break;
        }
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_has_the_product_plan() {
        let v = enumerate_polytope_vertices(&[1.0], &[1.0]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].data, vec![1.0]);
    }

    #[test]
    fn two_by_two_uniform_is_birkhoff() {
        let v = enumerate_polytope_vertices(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(v.len(), 2);
        let mut shapes: Vec<Vec<f64>> = v.iter().map(|p| p.data.clone()).collect();
        shapes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(shapes, vec![vec![0.0, 0.5, 0.5, 0.0], vec![0.5, 0.0, 0.0, 0.5]]);
    }

    #[test]
    fn vertices_are_feasible() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.6, 0.1, 0.3];
        for p in enumerate_polytope_vertices(&a, &b).unwrap() {
            assert!(p.is_feasible(&a, &b, 1e-12));
        }
    }

    #[test]
    fn size_limit() {
        let a = [0.2; 5];
        assert!(matches!(enumerate_polytope_vertices(&a, &[1.0]), Err(Error::SizeLimit { .. })));
    }
}
