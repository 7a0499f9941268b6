//! Exact solver for small balanced transportation problems.
//!
//! Primal transportation simplex: the basis is a spanning tree over the
//! `n + m` row/column nodes with `n + m - 1` basic cells. Potentials come
//! from the tree, the entering cell has the most negative reduced cost, and
//! the leaving cell is the smallest flow on the minus side of the cycle.
//! After a run of degenerate pivots the entering rule falls back to the first
//! improving cell in index order.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Marginal sums must equal one within this tolerance.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;
/// Default bound on `n * m`.
pub const DEFAULT_MAX_CELLS: usize = 4096;

const DEGENERATE_RUN_BEFORE_BLAND: usize = 32;

/// A balanced transportation problem with unit total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    costs: Vec<Vec<f64>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

impl TransportProblem {
    pub fn new(costs: Vec<Vec<f64>>, supply: Vec<f64>, demand: Vec<f64>) -> Result<Self> {
        if supply.is_empty() || demand.is_empty() {
            return Err(Error::Infeasible("empty supply or demand".into()));
        }
        if costs.len() != supply.len() || costs.iter().any(|row| row.len() != demand.len()) {
            return Err(Error::Infeasible(format!(
                "cost matrix shape does not match {}x{} marginals",
                supply.len(),
                demand.len()
            )));
        }
        if costs.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Infeasible("costs must be finite and non-negative".into()));
        }
        for (name, weights) in [("supply", &supply), ("demand", &demand)] {
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Infeasible(format!("{name} weights must be finite and non-negative")));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > MARGINAL_TOLERANCE {
                return Err(Error::Infeasible(format!("{name} sums to {total}, expected 1")));
            }
        }
        Ok(TransportProblem { costs, supply, demand })
    }

    pub fn rows(&self) -> usize {
        self.supply.len()
    }

    pub fn cols(&self) -> usize {
        self.demand.len()
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// `plan[i][j]` is the mass moved from supply `i` to demand `j`.
    pub plan: Vec<Vec<f64>>,
    pub cost: f64,
}

/// Solves with the default size bound.
pub fn solve_transport(problem: &TransportProblem) -> Result<TransportSolution> {
    solve_transport_bounded(problem, DEFAULT_MAX_CELLS)
}

pub fn solve_transport_bounded(problem: &TransportProblem, max_cells: usize) -> Result<TransportSolution> {
    let (n, m) = (problem.rows(), problem.cols());
    let cells = n * m;
    if cells > max_cells {
        return Err(Error::Capacity { cells, limit: max_cells });
    }
    let mut simplex = Simplex::northwest_corner(problem);
    simplex.optimize()?;
    let plan = simplex.plan();
    let cost = plan
        .iter()
        .zip(&problem.costs)
        .map(|(flows, costs)| flows.iter().zip(costs).map(|(x, c)| x * c).sum::<f64>())
        .sum();
    Ok(TransportSolution { plan, cost })
}

#[derive(Debug, Clone, Copy)]
struct BasicCell {
    row: usize,
    col: usize,
    flow: f64,
}

struct Simplex<'a> {
    problem: &'a TransportProblem,
    basis: Vec<BasicCell>,
    /// Reduced-cost threshold below which a cell is considered improving.
    eps: f64,
}

// Node ids: rows are 0..n, columns are n..n+m.
impl<'a> Simplex<'a> {
    fn northwest_corner(problem: &'a TransportProblem) -> Self {
        let (n, m) = (problem.rows(), problem.cols());
        let mut supply = problem.supply.clone();
        let mut demand = problem.demand.clone();
        let mut basis = Vec::with_capacity(n + m - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let flow = supply[i].min(demand[j]).max(0.0);
            supply[i] -= flow;
            demand[j] -= flow;
            basis.push(BasicCell { row: i, col: j, flow });
            if i == n - 1 && j == m - 1 {
                break;
            }
            if j == m - 1 || (i < n - 1 && supply[i] <= demand[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        // the last cell absorbs the (tolerance-sized) imbalance between the two marginals
        let last = basis.last_mut().expect("non-empty basis");
        last.flow += supply[n - 1].min(demand[m - 1]).max(0.0);

        let max_cost = problem.costs.iter().flatten().fold(0.0f64, |a, &c| a.max(c));
        Simplex { problem, basis, eps: 1e-12 * (1.0 + max_cost) }
    }

    fn optimize(&mut self) -> Result<()> {
        let (n, m) = (self.problem.rows(), self.problem.cols());
        let max_iterations = 50 * (n + m) * (n + m) + 1000;
        let mut degenerate_run = 0;
        for _ in 0..max_iterations {
            let adjacency = self.adjacency();
            let (u, v) = self.potentials(&adjacency);
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some((row, col)) = self.entering(&u, &v, bland) else {
                return Ok(());
            };
            let path = tree_path(&adjacency, n + col, row, &self.basis, n);
            // path edges from the column end: signs alternate -, +, -, ..., -
            let mut leave: Option<(usize, f64)> = None;
            for (k, &edge) in path.iter().enumerate() {
                if k % 2 == 0 {
                    let flow = self.basis[edge].flow;
                    if leave.is_none_or(|(best, best_flow)| {
                        flow < best_flow || (flow == best_flow && self.cell_index(edge) < self.cell_index(best))
                    }) {
                        leave = Some((edge, flow));
                    }
                }
            }
            let (leaving, theta) = leave.expect("cycle always has a minus edge");
            for (k, &edge) in path.iter().enumerate() {
                let cell = &mut self.basis[edge];
                if k % 2 == 0 {
                    cell.flow = (cell.flow - theta).max(0.0);
                } else {
                    cell.flow += theta;
                }
            }
            self.basis[leaving] = BasicCell { row, col, flow: theta };
            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
        }
        Err(Error::Infeasible(format!("transport simplex did not converge in {max_iterations} pivots")))
    }

    fn cell_index(&self, basic: usize) -> usize {
        let cell = self.basis[basic];
        cell.row * self.problem.cols() + cell.col
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let n = self.problem.rows();
        let mut adjacency = vec![Vec::new(); n + self.problem.cols()];
        for (idx, cell) in self.basis.iter().enumerate() {
            adjacency[cell.row].push((n + cell.col, idx));
            adjacency[n + cell.col].push((cell.row, idx));
        }
        adjacency
    }

    fn potentials(&self, adjacency: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.problem.rows();
        let mut potential = vec![f64::NAN; adjacency.len()];
        potential[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, edge) in &adjacency[node] {
                if potential[next].is_nan() {
                    let cell = self.basis[edge];
                    let c = self.problem.costs[cell.row][cell.col];
                    potential[next] = c - potential[node];
                    queue.push_back(next);
                }
            }
        }
        let v = potential.split_off(n);
        (potential, v)
    }

    fn entering(&self, u: &[f64], v: &[f64], bland: bool) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (i, row) in self.problem.costs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let reduced = c - u[i] - v[j];
                if reduced < -self.eps && best.is_none_or(|(_, r)| reduced < r) {
                    if bland {
                        return Some((i, j));
                    }
                    best = Some(((i, j), reduced));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    fn plan(&self) -> Vec<Vec<f64>> {
        let mut plan = vec![vec![0.0; self.problem.cols()]; self.problem.rows()];
        for cell in &self.basis {
            plan[cell.row][cell.col] += cell.flow;
        }
        plan
    }
}

/// Basic-cell indices along the tree path from node `from` to node `to`.
fn tree_path(
    adjacency: &[Vec<(usize, usize)>],
    from: usize,
    to: usize,
    basis: &[BasicCell],
    rows: usize,
) -> Vec<usize> {
    let mut via = vec![usize::MAX; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(next, edge) in &adjacency[node] {
            if !seen[next] {
                seen[next] = true;
                via[next] = edge;
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let edge = via[node];
        path.push(edge);
        let cell = basis[edge];
        node = if node < rows { rows + cell.col } else { cell.row };
    }
    path.reverse();
    path
}
