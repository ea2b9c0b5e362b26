//! Transportation simplex on the bipartite network of supplies and demands.
//!
//! The basis is a spanning tree over `n` row nodes and `k` column nodes with
//! `n + k - 1` basic cells, initialized by the north-west corner rule.
//! Entering cells are chosen by block pricing on reduced costs; after a long
//! run of degenerate pivots pricing switches to Bland's rule, which cannot
//! cycle.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

const DEGENERATE_SWITCH: usize = 50;

/// Solve `min <C, pi>` over couplings with marginals `a` and `b`.
///
/// Returns the coupling and the number of pivots.
pub fn solve_transport_lp(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, usize)> {
    let (n, k) = cost.dim();
    if a.len() != n || b.len() != k {
        return Err(Error::CostShape(n, k, a.len(), b.len()));
    }
    if n == 0 || k == 0 {
        return Err(Error::EmptySupport);
    }
    let (sa, sb) = (a.sum(), b.sum());
    if (sa - sb).abs() > 1e-9 * sa.max(sb).max(1.0) {
        return Err(Error::MassMismatch(sa, sb));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("costs must be finite".into()));
    }
    let mut s = Simplex::new(a, b, cost);
    let pivots = s.run()?;
    let mut plan = Array2::zeros((n, k));
    for (cell, &f) in s.cells.iter().zip(s.flow.iter()) {
        plan[[cell.0, cell.1]] += f.max(0.0);
    }
    Ok((plan, pivots))
}

struct Simplex<'a> {
    n: usize,
    k: usize,
    cost: ArrayView2<'a, f64>,
    /// basic cells (row, col)
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// incident basic-cell ids per node; rows are `0..n`, columns `n..n+k`
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    scale: f64,
}

impl<'a> Simplex<'a> {
    fn new(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, cost: ArrayView2<'a, f64>) -> Self {
        let (n, k) = cost.dim();
        let mut cells = Vec::with_capacity(n + k - 1);
        let mut flow = Vec::with_capacity(n + k - 1);
        let mut ra: Vec<f64> = a.to_vec();
        let mut rb: Vec<f64> = b.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let x = ra[i].min(rb[j]).max(0.0);
            cells.push((i, j));
            flow.push(x);
            ra[i] -= x;
            rb[j] -= x;
            if i == n - 1 && j == k - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == k - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut adj = vec![Vec::new(); n + k];
        for (id, &(r, c)) in cells.iter().enumerate() {
            adj[r].push(id);
            adj[n + c].push(id);
        }
        let scale = cost.iter().cloned().fold(0.0, f64::max).max(1e-300);
        Self {
            n,
            k,
            cost,
            cells,
            flow,
            adj,
            u: vec![0.0; n],
            v: vec![0.0; k],
            scale,
        }
    }

    fn potentials(&mut self) {
        let n = self.n;
        let mut seen = vec![false; n + self.k];
        let mut queue = VecDeque::new();
        self.u[0] = 0.0;
        seen[0] = true;
        queue.push_back(0usize);
        while let Some(node) = queue.pop_front() {
            for &id in &self.adj[node] {
                let (r, c) = self.cells[id];
                let cij = self.cost[[r, c]];
                if node < n {
                    let other = n + c;
                    if !seen[other] {
                        seen[other] = true;
                        self.v[c] = cij - self.u[r];
                        queue.push_back(other);
                    }
                } else if !seen[r] {
                    seen[r] = true;
                    self.u[r] = cij - self.v[c];
                    queue.push_back(r);
                }
            }
        }
    }

    #[inline]
    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[[i, j]] - self.u[i] - self.v[j]
    }

    /// Most negative reduced cost within blocks of cells, resuming after `start`.
    fn price_block(&self, start: &mut usize, tol: f64) -> Option<(usize, usize)> {
        let total = self.n * self.k;
        let block = ((total as f64).sqrt() as usize).max(64).min(total);
        let mut best: Option<(usize, usize)> = None;
        let mut best_val = -tol;
        let mut scanned = 0usize;
        let mut pos = *start;
        while scanned < total {
            let end = (scanned + block).min(total);
            while scanned < end {
                let (i, j) = (pos / self.k, pos % self.k);
                let r = self.reduced(i, j);
                if r < best_val {
                    best_val = r;
                    best = Some((i, j));
                }
                pos += 1;
                if pos == total {
                    pos = 0;
                }
                scanned += 1;
            }
            if best.is_some() {
                *start = pos;
                return best;
            }
        }
        None
    }

    /// First cell in row-major order with a negative reduced cost.
    fn price_bland(&self, tol: f64) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in 0..self.k {
                if self.reduced(i, j) < -tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Basic cells on the tree path from row node `i` to column node `j`.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.n + self.k;
        let target = self.n + j;
        let mut via = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let mut queue = VecDeque::new();
        seen[i] = true;
        queue.push_back(i);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &id in &self.adj[node] {
                let (r, c) = self.cells[id];
                let other = if node < self.n { self.n + c } else { r };
                if !seen[other] {
                    seen[other] = true;
                    via[other] = id;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != i {
            let id = via[node];
            path.push(id);
            let (r, c) = self.cells[id];
            node = if node < self.n { self.n + c } else { r };
        }
        path.reverse();
        path
    }

    fn run(&mut self) -> Result<usize> {
        let tol = 1e-12 * self.scale;
        let max_pivots = 50 * (self.n + self.k) * (self.n + self.k) + 1000;
        let mut start = 0usize;
        let mut pivots = 0usize;
        let mut degenerate_run = 0usize;
        loop {
            self.potentials();
            let entering = if degenerate_run >= DEGENERATE_SWITCH {
                self.price_bland(tol)
            } else {
                self.price_block(&mut start, tol)
            };
            let Some((ei, ej)) = entering else {
                return Ok(pivots);
            };
            if pivots >= max_pivots {
                return Err(Error::SolverFailure(format!(
                    "transportation simplex exceeded {max_pivots} pivots"
                )));
            }
            pivots += 1;
            // path alternates: cells at even positions lose flow, odd gain
            let path = self.tree_path(ei, ej);
            let mut theta = f64::INFINITY;
            let mut leave_pos = usize::MAX;
            for (pos, &id) in path.iter().enumerate().step_by(2) {
                let f = self.flow[id];
                let better = f < theta
                    || (f == theta
                        && leave_pos != usize::MAX
                        && self.cells[id] < self.cells[path[leave_pos]]);
                if better {
                    theta = f;
                    leave_pos = pos;
                }
            }
            let theta = theta.max(0.0);
            if theta == 0.0 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for (pos, &id) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.flow[id] -= theta;
                } else {
                    self.flow[id] += theta;
                }
            }
            let leave = path[leave_pos];
            let (lr, lc) = self.cells[leave];
            let n = self.n;
            self.adj[lr].retain(|&x| x != leave);
            self.adj[n + lc].retain(|&x| x != leave);
            self.cells[leave] = (ei, ej);
            self.flow[leave] = theta;
            self.adj[ei].push(leave);
            self.adj[n + ej].push(leave);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_marginals(p: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
        let rows = p.sum_axis(ndarray::Axis(1));
        let cols = p.sum_axis(ndarray::Axis(0));
        for (x, y) in rows.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in cols.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn single_cell() {
        let (p, _) = solve_transport_lp(array![1.0].view(), array![1.0].view(), array![[2.0]].view()).unwrap();
        assert_eq!(p, array![[1.0]]);
    }

    #[test]
    fn rectangular_by_hand() {
        // one source split over two targets
        let a = array![1.0];
        let b = array![0.25, 0.75];
        let (p, _) = solve_transport_lp(a.view(), b.view(), array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(p, array![[0.25, 0.75]]);
    }

    #[test]
    fn prefers_cheap_cells() {
        let a = array![0.5, 0.5];
        let b = array![0.5, 0.5];
        let c = array![[5.0, 1.0], [1.0, 5.0]];
        let (p, _) = solve_transport_lp(a.view(), b.view(), c.view()).unwrap();
        assert_eq!(p, array![[0.0, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn mass_mismatch() {
        let r = solve_transport_lp(array![1.0].view(), array![0.5].view(), array![[1.0]].view());
        assert!(matches!(r, Err(Error::MassMismatch(..))));
    }

    /// Every vertex of the transportation polytope for 2 x k problems is
    /// enumerable: fix the first row and the second row is determined.
    /// Compare against a fine brute-force search over the first row on a
    /// lattice containing every vertex.
    #[test]
    fn two_row_problems_against_lattice_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = 3;
            // masses on a lattice of 1/12 so every vertex lies on the lattice
            let mut bw = [0usize; 3];
            let mut left = 12;
            for t in 0..2 {
                bw[t] = rng.gen_range(1..left - (2 - t));
                left -= bw[t];
            }
            bw[2] = left;
            let a0 = rng.gen_range(1..12usize);
            let a = array![a0 as f64 / 12.0, (12 - a0) as f64 / 12.0];
            let b = Array1::from_iter(bw.iter().map(|&x| x as f64 / 12.0));
            let c = Array2::from_shape_fn((2, k), |_| rng.gen::<f64>());
            let mut best = f64::INFINITY;
            for x0 in 0..=bw[0] {
                for x1 in 0..=bw[1] {
                    for x2 in 0..=bw[2] {
                        if x0 + x1 + x2 != a0 {
                            continue;
                        }
                        let r0 = [x0, x1, x2];
                        let mut cost = 0.0;
                        for j in 0..3 {
                            cost += c[[0, j]] * r0[j] as f64 / 12.0;
                            cost += c[[1, j]] * (bw[j] - r0[j]) as f64 / 12.0;
                        }
                        best = best.min(cost);
                    }
                }
            }
            let (p, _) = solve_transport_lp(a.view(), b.view(), c.view()).unwrap();
            check_marginals(&p, &a, &b);
            let got = (&p * &c).sum();
            assert!((got - best).abs() < 1e-12, "{got} vs {best}");
        }
    }

    #[test]
    fn degenerate_uniform_problems_terminate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 5, 9, 20] {
            let a = Array1::from_elem(n, 1.0 / n as f64);
            let c = Array2::from_shape_fn((n, n), |_| rng.gen_range(0..3) as f64);
            let (p, _) = solve_transport_lp(a.view(), a.view(), c.view()).unwrap();
            check_marginals(&p, &a, &a);
        }
    }
}
