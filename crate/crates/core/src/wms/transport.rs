//! Exact solver for small dense transportation problems.
//!
//! Primal transportation simplex: a north-west corner starting basis, dual
//! potentials from the basis tree, Bland's rule for the entering and leaving
//! cells.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
const REDUCED_COST_TOLERANCE: f64 = 1e-12;

/// Balanced transportation problem with probability-vector marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    source: Vec<f64>,
    sink: Vec<f64>,
    cost: Vec<Vec<f64>>,
}

impl TransportProblem {
    /// Checks the marginals and costs. Marginals must be strictly positive
    /// and sum to 1 (within 1e-9); they are rescaled to sum to 1 exactly.
    pub fn new(source: Vec<f64>, sink: Vec<f64>, cost: Vec<Vec<f64>>) -> Result<Self> {
        let source = check_marginal("source", source)?;
        let sink = check_marginal("sink", sink)?;
        if cost.len() != source.len() || cost.iter().any(|row| row.len() != sink.len()) {
            return Err(Error::contract(format!(
                "cost matrix must be {}x{}",
                source.len(),
                sink.len()
            )));
        }
        if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::contract("costs must be finite and non-negative"));
        }
        Ok(TransportProblem { source, sink, cost })
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn sink(&self) -> &[f64] {
        &self.sink
    }

    pub fn cost(&self) -> &[Vec<f64>] {
        &self.cost
    }

    /// Total cost of `plan`.
    pub fn objective(&self, plan: &[Vec<f64>]) -> f64 {
        plan.iter()
            .zip(&self.cost)
            .flat_map(|(p, c)| p.iter().zip(c).map(|(x, c)| x * c))
            .sum()
    }
}

fn check_marginal(name: &str, w: Vec<f64>) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::contract(format!("{name} weights are empty")));
    }
    if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::contract(format!("{name} weights must be strictly positive")));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::contract(format!("{name} weights sum to {total}, not 1")));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub plan: Vec<Vec<f64>>,
    pub objective: f64,
    pub pivots: usize,
}

struct Basis {
    cells: Vec<(usize, usize)>,
    values: Vec<f64>,
}

pub fn solve_transport(p: &TransportProblem) -> Result<TransportSolution> {
    let (m, n) = (p.source.len(), p.sink.len());
    let mut basis = north_west_corner(&p.source, &p.sink);
    let max_pivots = 50 * (m * n).max(10);
    let mut pivots = 0;
    loop {
        let (u, v) = potentials(&basis, &p.cost, m, n);
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| p.cost[i][j] - u[i] - v[j] < -REDUCED_COST_TOLERANCE);
        let Some(entering) = entering else { break };
        if pivots == max_pivots {
            return Err(Error::contract(format!(
                "transport simplex did not converge after {pivots} pivots"
            )));
        }
        pivot(&mut basis, entering, m, n);
        pivots += 1;
    }
    let mut plan = vec![vec![0.0; n]; m];
    for (&(i, j), &x) in basis.cells.iter().zip(&basis.values) {
        plan[i][j] = x.max(0.0);
    }
    let objective = p.objective(&plan);
    Ok(TransportSolution {
        plan,
        objective,
        pivots,
    })
}

/// Starting basis of exactly `m + n - 1` cells forming a staircase.
fn north_west_corner(source: &[f64], sink: &[f64]) -> Basis {
    let (m, n) = (source.len(), sink.len());
    let mut s = source.to_vec();
    let mut d = sink.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut cells = Vec::with_capacity(m + n - 1);
    let mut values = Vec::with_capacity(m + n - 1);
    loop {
        let x = if i == m - 1 && j == n - 1 {
            s[i].max(0.0)
        } else {
            s[i].min(d[j]).max(0.0)
        };
        cells.push((i, j));
        values.push(x);
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    Basis { cells, values }
}

/// Adjacency of the basis tree over `m` row nodes followed by `n` column
/// nodes; each entry is (neighbor, basis index).
fn tree(basis: &Basis, m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for (k, &(i, j)) in basis.cells.iter().enumerate() {
        adj[i].push((m + j, k));
        adj[m + j].push((i, k));
    }
    adj
}

fn potentials(basis: &Basis, cost: &[Vec<f64>], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let adj = tree(basis, m, n);
    let mut pot = vec![f64::NAN; m + n];
    pot[0] = 0.0;
    let mut queue = VecDeque::from([0]);
    while let Some(a) = queue.pop_front() {
        for &(b, k) in &adj[a] {
            if pot[b].is_nan() {
                let (i, j) = basis.cells[k];
                pot[b] = cost[i][j] - pot[a];
                queue.push_back(b);
            }
        }
    }
    let v = pot.split_off(m);
    (pot, v)
}

/// Basis indices on the tree path from row `i` to column `j`.
fn tree_path(basis: &Basis, i: usize, j: usize, m: usize, n: usize) -> Vec<usize> {
    let adj = tree(basis, m, n);
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[i] = true;
    let mut queue = VecDeque::from([i]);
    while let Some(a) = queue.pop_front() {
        if a == m + j {
            break;
        }
        for &(b, k) in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                prev[b] = Some((a, k));
                queue.push_back(b);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = m + j;
    while let Some((a, k)) = prev[node] {
        path.push(k);
        node = a;
    }
    path.reverse();
    path
}

fn pivot(basis: &mut Basis, entering: (usize, usize), m: usize, n: usize) {
    let path = tree_path(basis, entering.0, entering.1, m, n);
    // The path leaves row i first, so its even positions lose flow.
    let leaving = path
        .iter()
        .step_by(2)
        .copied()
        .min_by(|&a, &b| {
            basis.values[a]
                .total_cmp(&basis.values[b])
                .then(basis.cells[a].cmp(&basis.cells[b]))
        })
        .expect("a cycle has at least one decreasing cell");
    let theta = basis.values[leaving].max(0.0);
    for (t, &k) in path.iter().enumerate() {
        if t % 2 == 0 {
            basis.values[k] -= theta;
        } else {
            basis.values[k] += theta;
        }
    }
    basis.cells[leaving] = entering;
    basis.values[leaving] = theta;
}
