//! Dense linear assignment via Jonker-Volgenant shortest augmenting paths.
//!
//! Column reduction with reduction transfer and two rounds of augmenting row
//! reduction are followed by Dijkstra-style augmentation for the rows that
//! remain free. Column scans run in increasing index order and only strict
//! improvements replace a candidate, so among equal reduced costs the lowest
//! column index wins.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Optimal permutation for a square cost matrix: row `i` goes to column `perm[i]`.
pub fn solve_assignment(cost: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let (n, k) = cost.dim();
    if n != k {
        return Err(Error::CostShape(n, k, n, n));
    }
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("assignment costs must be finite".into()));
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    let owned;
    let c: &[f64] = match cost.as_slice() {
        Some(s) => s,
        None => {
            owned = cost.iter().copied().collect::<Vec<_>>();
            &owned
        }
    };
    let mut lap = Lap::new(n, c);
    lap.run();
    let perm: Vec<usize> = lap.x.iter().map(|&j| j as usize).collect();
    debug_assert!(is_permutation(&perm));
    Ok(perm)
}

/// Total cost `sum_i C[i, perm[i]]` of an assignment.
pub fn assignment_cost(cost: ArrayView2<'_, f64>, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum()
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&j| j < perm.len() && !std::mem::replace(&mut seen[j], true))
}

struct Lap<'a> {
    n: usize,
    c: &'a [f64],
    /// column assigned to each row, -1 when free
    x: Vec<isize>,
    /// row assigned to each column, -1 when free
    y: Vec<isize>,
    v: Vec<f64>,
}

impl<'a> Lap<'a> {
    fn new(n: usize, c: &'a [f64]) -> Self {
        Self {
            n,
            c,
            x: vec![-1; n],
            y: vec![-1; n],
            v: vec![f64::INFINITY; n],
        }
    }

    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    fn run(&mut self) {
        let mut free = self.column_reduction();
        let mut rounds = 0;
        while !free.is_empty() && rounds < 2 {
            free = self.augmenting_row_reduction(free);
            rounds += 1;
        }
        for &i in &free {
            self.augment(i);
        }
    }

    fn column_reduction(&mut self) -> Vec<usize> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let c = self.cost(i, j);
                if c < self.v[j] {
                    self.v[j] = c;
                    self.y[j] = i as isize;
                }
            }
        }
        let mut unique = vec![true; n];
        for j in (0..n).rev() {
            let i = self.y[j] as usize;
            if self.x[i] < 0 {
                self.x[i] = j as isize;
            } else {
                unique[i] = false;
                self.y[j] = -1;
            }
        }
        let mut free = Vec::new();
        for i in 0..n {
            if self.x[i] < 0 {
                free.push(i);
            } else if unique[i] {
                let j = self.x[i] as usize;
                let mut min = f64::INFINITY;
                for j2 in 0..n {
                    if j2 != j {
                        let r = self.cost(i, j2) - self.v[j2];
                        if r < min {
                            min = r;
                        }
                    }
                }
                self.v[j] -= min;
            }
        }
        free
    }

    fn augmenting_row_reduction(&mut self, mut free: Vec<usize>) -> Vec<usize> {
        let n = self.n;
        let n_free = free.len();
        let mut current = 0usize;
        let mut new_free = 0usize;
        let mut rr_cnt = 0usize;
        while current < n_free {
            rr_cnt += 1;
            let i = free[current];
            current += 1;
            let mut j1 = 0usize;
            let mut u1 = self.cost(i, 0) - self.v[0];
            let mut j2: isize = -1;
            let mut u2 = f64::INFINITY;
            for j in 1..n {
                let r = self.cost(i, j) - self.v[j];
                if r < u2 {
                    if r >= u1 {
                        u2 = r;
                        j2 = j as isize;
                    } else {
                        u2 = u1;
                        u1 = r;
                        j2 = j1 as isize;
                        j1 = j;
                    }
                }
            }
            let mut i0 = self.y[j1];
            let v1_new = self.v[j1] - (u2 - u1);
            let lowers = v1_new < self.v[j1];
            if rr_cnt < current * n {
                if lowers {
                    self.v[j1] = v1_new;
                } else if i0 >= 0 && j2 >= 0 {
                    j1 = j2 as usize;
                    i0 = self.y[j1];
                }
                if i0 >= 0 {
                    if lowers {
                        current -= 1;
                        free[current] = i0 as usize;
                    } else {
                        free[new_free] = i0 as usize;
                        new_free += 1;
                    }
                }
            } else if i0 >= 0 {
                free[new_free] = i0 as usize;
                new_free += 1;
            }
            self.x[i] = j1 as isize;
            self.y[j1] = i as isize;
        }
        free.truncate(new_free);
        free
    }

    /// Shortest augmenting path from a free row, then flip the path.
    fn augment(&mut self, start: usize) {
        let n = self.n;
        let mut pred = vec![start; n];
        let mut cols: Vec<usize> = (0..n).collect();
        let mut d: Vec<f64> = (0..n).map(|j| self.cost(start, j) - self.v[j]).collect();
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut n_ready = 0usize;
        let mut final_j: Option<usize> = None;
        while final_j.is_none() {
            if lo == hi {
                n_ready = lo;
                hi = find_min_block(lo, &d, &mut cols);
                for &j in &cols[lo..hi] {
                    if self.y[j] < 0 {
                        final_j = Some(j);
                        break;
                    }
                }
            }
            if final_j.is_none() {
                final_j = self.scan(&mut lo, &mut hi, &mut d, &mut cols, &mut pred);
            }
        }
        let mind = d[cols[lo]];
        for &j in &cols[..n_ready] {
            self.v[j] += d[j] - mind;
        }
        let mut j = final_j.expect("path end");
        loop {
            let i = pred[j];
            self.y[j] = i as isize;
            let prev = self.x[i];
            self.x[i] = j as isize;
            if i == start {
                break;
            }
            j = prev as usize;
        }
    }

    /// Scan the ready block. The block bounds are only advanced when no free
    /// column is reached, so `cols[lo]` still carries the current minimum
    /// when the caller updates the column potentials.
    fn scan(
        &self,
        lo: &mut usize,
        hi: &mut usize,
        d: &mut [f64],
        cols: &mut [usize],
        pred: &mut [usize],
    ) -> Option<usize> {
        let n = self.n;
        let (mut l, mut h_end) = (*lo, *hi);
        while l != h_end {
            let j = cols[l];
            l += 1;
            let i = self.y[j] as usize;
            let mind = d[j];
            let h = self.cost(i, j) - self.v[j] - mind;
            let mut k = h_end;
            while k < n {
                let j = cols[k];
                let red = self.cost(i, j) - self.v[j] - h;
                if red < d[j] {
                    d[j] = red;
                    pred[j] = i;
                    if red == mind {
                        if self.y[j] < 0 {
                            return Some(j);
                        }
                        cols[k] = cols[h_end];
                        cols[h_end] = j;
                        h_end += 1;
                    }
                }
                k += 1;
            }
        }
        *lo = l;
        *hi = h_end;
        None
    }
}

/// Move every column attaining the minimum of `d` over `cols[lo..]` to the
/// front of that range; returns the end of the moved block.
fn find_min_block(lo: usize, d: &[f64], cols: &mut [usize]) -> usize {
    let n = cols.len();
    let mut hi = lo + 1;
    let mut mind = d[cols[lo]];
    for k in hi..n {
        let j = cols[k];
        if d[j] <= mind {
            if d[j] < mind {
                hi = lo;
                mind = d[j];
            }
            cols[k] = cols[hi];
            cols[hi] = j;
            hi += 1;
        }
    }
    hi
}
