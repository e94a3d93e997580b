//! Transportation simplex (MODI / u–v method) on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! exactly `m + n − 1` cells, degenerate zeros included. Entering cells are
//! chosen by most negative reduced cost; after half the iteration budget the
//! solver switches to Bland's rule, which cannot cycle.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marginal tolerance for plans.
pub const PLAN_TOL: f64 = 1e-9;

/// Nonnegative `rows × cols` coupling, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TransportPlan {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TransportPlan { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in self.data.chunks(self.cols) {
            for (acc, v) in s.iter_mut().zip(r) {
                *acc += v;
            }
        }
        s
    }

    /// `Σ c_ij P_ij` for a row-major cost matrix of the same shape.
    pub fn cost(&self, cost: &[f64]) -> f64 {
        self.data.iter().zip(cost).map(|(p, c)| p * c).sum()
    }

    /// Nonnegative with the given marginals, within `tol`.
    pub fn is_feasible(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        self.data.iter().all(|&p| p >= -tol)
            && self.row_sums().iter().zip(a).all(|(s, w)| (s - w).abs() <= tol)
            && self.col_sums().iter().zip(b).all(|(s, w)| (s - w).abs() <= tol)
    }
}

/// Optimal plan with its dual certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSolution {
    pub plan: TransportPlan,
    /// Row potentials `u` and column potentials `v` with `u_i + v_j ≤ c_ij`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
    /// Most negative reduced cost at termination (≥ −tolerance).
    pub min_reduced_cost: f64,
}

impl TransportSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.primal - self.dual).abs()
    }
}

fn validate(cost: &[f64], a: &[f64], b: &[f64]) -> Result<()> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::SolverFailure("empty marginal".into()));
    }
    if cost.len() != m * n {
        return Err(Error::SolverFailure(format!("cost has {} entries, expected {}", cost.len(), m * n)));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::SolverFailure("non-finite cost".into()));
    }
    if a.iter().chain(b).any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::SolverFailure("marginal weights must be nonnegative".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > PLAN_TOL * sa.abs().max(1.0) {
        return Err(Error::SolverFailure(format!("unbalanced marginals: {sa} vs {sb}")));
    }
    Ok(())
}

struct Basis {
    m: usize,
    n: usize,
    /// Basic cells as (row, col).
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    fn north_west(a: &[f64], b: &[f64]) -> Self {
        let (m, n) = (a.len(), b.len());
        let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]);
            cells.push((i, j));
            flow.push(x);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Basis { m, n, cells, flow }
    }

    /// Adjacency over nodes `0..m` (rows) and `m..m+n` (columns); entries are
    /// (neighbour, basic index).
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, cost: &[f64], adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(nb, k) in &adj[node] {
                if pot[nb].is_nan() {
                    let (i, j) = self.cells[k];
                    // u_i + v_j = c_ij
                    pot[nb] = cost[i * n + j] - pot[node];
                    queue.push_back(nb);
                }
            }
        }
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Basic indices along the tree path from row node `i` to column node `j`.
    fn tree_path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Option<Vec<usize>> {
        let target = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(nb, k) in &adj[node] {
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = Some((node, k));
                    queue.push_back(nb);
                }
            }
        }
        if !seen[target] {
            return None;
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != i {
            let (prev, k) = parent[node]?;
            path.push(k);
            node = prev;
        }
        path.reverse();
        Some(path)
    }
}

/// Solves `min Σ c_ij P_ij` over couplings of `a` and `b`. `cost` is
/// row-major `a.len() × b.len()`.
pub fn solve_transport_lp(cost: &[f64], a: &[f64], b: &[f64]) -> Result<TransportSolution> {
    validate(cost, a, b)?;
    let (m, n) = (a.len(), b.len());
    let scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let mut basis = Basis::north_west(a, b);
    let budget = 200 * (m + n) * (m + n) + 1000;
    let mut iterations = 0;
    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(cost, &adj);
        if u.iter().chain(&v).any(|p| p.is_nan()) {
            return Err(Error::SolverFailure("basis is not a spanning tree".into()));
        }
        let bland = iterations > budget / 2;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        let mut min_rc = 0.0f64;
        'scan: for i in 0..m {
            for j in 0..n {
                let rc = cost[i * n + j] - u[i] - v[j];
                min_rc = min_rc.min(rc);
                if rc < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let mut plan = TransportPlan::zeros(m, n);
            for (&(i, j), &x) in basis.cells.iter().zip(&basis.flow) {
                plan.set(i, j, x.max(0.0));
            }
            let primal = plan.cost(cost);
            let dual =
                a.iter().zip(&u).map(|(w, p)| w * p).sum::<f64>() + b.iter().zip(&v).map(|(w, p)| w * p).sum::<f64>();
            return Ok(TransportSolution { plan, u, v, primal, dual, iterations, min_reduced_cost: min_rc });
        };
        if iterations >= budget {
            return Err(Error::SolverFailure(format!("no convergence after {iterations} pivots")));
        }
        iterations += 1;
        let path = basis
            .tree_path(&adj, ei, ej)
            .ok_or_else(|| Error::SolverFailure("entering cell not connected to basis".into()))?;
        // Path cells alternate −, +, −, ... starting next to the entering cell.
        let mut leave_pos = None;
        let mut theta = f64::INFINITY;
        for (pos, &k) in path.iter().enumerate().step_by(2) {
            let x = basis.flow[k];
            let better =
                x < theta || (x == theta && leave_pos.is_none_or(|lp: usize| basis.cells[k] < basis.cells[path[lp]]));
            if better {
                theta = x;
                leave_pos = Some(pos);
            }
        }
        let leave_pos = leave_pos.ok_or_else(|| Error::SolverFailure("empty pivot cycle".into()))?;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[k] -= theta;
            } else {
                basis.flow[k] += theta;
            }
        }
        let k = path[leave_pos];
        basis.cells[k] = (ei, ej);
        basis.flow[k] = theta;
    }
}
