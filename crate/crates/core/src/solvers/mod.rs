//! Discrete Kantorovich solvers.
//!
//! [`solve_exact`] routes uniform equal-size problems to a linear assignment
//! solver and everything else to a transportation network simplex.
//! [`sinkhorn`] solves the entropy-regularized problem.

mod assignment;
mod barycentric;
mod network_simplex;
mod sinkhorn;

pub use assignment::{assignment_cost, solve_assignment};
pub use barycentric::barycentric_map;
pub use network_simplex::solve_transport_lp;
pub use sinkhorn::{sinkhorn, sinkhorn_grid_barycentric, GridSinkhornResult, SinkhornConfig};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure, SolveStatus, TransportPlan};

/// Which solver computes couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Sinkhorn(SinkhornConfig),
    /// Exact when both supports have at most `threshold` atoms, Sinkhorn otherwise.
    Auto {
        threshold: usize,
        sinkhorn: SinkhornConfig,
    },
}

/// Support size up to which [`Solver::Auto`] stays exact.
pub const AUTO_EXACT_THRESHOLD: usize = 600;

impl Solver {
    pub fn auto() -> Self {
        Solver::Auto {
            threshold: AUTO_EXACT_THRESHOLD,
            sinkhorn: SinkhornConfig::default(),
        }
    }

    /// The concrete solver used for supports of sizes `n` and `k`.
    pub fn resolve(&self, n: usize, k: usize) -> Solver {
        match *self {
            Solver::Auto {
                threshold,
                sinkhorn,
            } => {
                if n.max(k) <= threshold {
                    Solver::Exact
                } else {
                    Solver::Sinkhorn(sinkhorn)
                }
            }
            s => s,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Sinkhorn(_) => "sinkhorn",
            Solver::Auto { .. } => "auto",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Solver::Exact => None,
            Solver::Sinkhorn(c) => Some(c.epsilon),
            Solver::Auto { sinkhorn, .. } => Some(sinkhorn.epsilon),
        }
    }
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Exact
    }
}

/// Pairwise `p`-th power costs `sum_k |x_ik - y_jk|^p` between two point sets.
pub fn cost_matrix(
    source: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    p: f64,
) -> Result<CostMatrix> {
    if source.ncols() != target.ncols() {
        return Err(Error::DimMismatch(source.ncols(), target.ncols()));
    }
    check_exponent(p)?;
    let (n, k) = (source.nrows(), target.nrows());
    let mut c = Array2::zeros((n, k));
    for i in 0..n {
        let x = source.row(i);
        for j in 0..k {
            let y = target.row(j);
            c[[i, j]] = x
                .iter()
                .zip(y.iter())
                .map(|(a, b)| pow_abs(a - b, p))
                .sum();
        }
    }
    CostMatrix::new(c, p)
}

#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("exponent p = {p} must be >= 1")));
    }
    Ok(())
}

fn check_problem(mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostMatrix) -> Result<()> {
    let (r, k) = c.shape();
    if r != mu.len() || k != nu.len() {
        return Err(Error::CostShape(r, k, mu.len(), nu.len()));
    }
    let (ma, mb) = (mu.weights().sum(), nu.weights().sum());
    if (ma - mb).abs() > 1e-9 {
        return Err(Error::MassMismatch(ma, mb));
    }
    Ok(())
}

/// Optimal coupling for the discrete Kantorovich problem.
///
/// Uniform measures of equal size are solved as an assignment problem and
/// the returned plan is a scaled permutation matrix. Other inputs go through
/// the transportation simplex. Intended for `n * k` up to about `10^6`.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostMatrix) -> Result<TransportPlan> {
    check_problem(mu, nu, c)?;
    let a = mu.weights().to_owned();
    let b = nu.weights().to_owned();
    if mu.is_uniform() && nu.is_uniform() && mu.len() == nu.len() {
        let n = mu.len();
        let perm = solve_assignment(c.entries())?;
        let w = 1.0 / n as f64;
        let mut coupling = Array2::zeros((n, n));
        let mut cost = 0.0;
        for (i, &j) in perm.iter().enumerate() {
            coupling[[i, j]] = w;
            cost += c.entries()[[i, j]];
        }
        return Ok(TransportPlan {
            coupling,
            source_weights: a,
            target_weights: b,
            cost: cost * w,
            status: SolveStatus {
                converged: true,
                iterations: 0,
                marginal_error: 0.0,
            },
        });
    }
    let (coupling, iterations) = solve_transport_lp(a.view(), b.view(), c.entries())?;
    let cost = (&coupling * &c.entries()).sum();
    let marginal_error = crate::measures::marginal_violation(&coupling, a.view(), b.view());
    Ok(TransportPlan {
        coupling,
        source_weights: a,
        target_weights: b,
        cost,
        status: SolveStatus {
            converged: true,
            iterations,
            marginal_error,
        },
    })
}

/// Solve with whichever solver is selected.
pub fn solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostMatrix,
    solver: &Solver,
) -> Result<TransportPlan> {
    match solver.resolve(mu.len(), nu.len()) {
        Solver::Sinkhorn(cfg) => sinkhorn(mu, nu, c, &cfg),
        _ => solve_exact(mu, nu, c),
    }
}

pub(crate) fn plan_cost(coupling: &Array2<f64>, c: ArrayView2<'_, f64>) -> f64 {
    coupling
        .iter()
        .zip(c.iter())
        .map(|(p, c)| p * c)
        .sum()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::make_uniform;
    use ndarray::array;

    #[test]
    fn cost_matrix_examples() {
        let c = cost_matrix(array![[0.0]].view(), array![[1.0]].view(), 2.0).unwrap();
        assert_eq!(c.entries(), array![[1.0]]);
        let c = cost_matrix(array![[0.0], [1.0]].view(), array![[0.0], [1.0]].view(), 2.0).unwrap();
        assert_eq!(c.entries(), array![[0.0, 1.0], [1.0, 0.0]]);
        let c = cost_matrix(array![[0.0, 0.0]].view(), array![[1.0, 2.0]].view(), 2.0).unwrap();
        assert_eq!(c.entries(), array![[5.0]]);
    }

    #[test]
    fn cost_matrix_dim_mismatch() {
        let r = cost_matrix(array![[0.0]].view(), array![[1.0, 2.0]].view(), 2.0);
        assert!(matches!(r, Err(Error::DimMismatch(1, 2))));
    }

    #[test]
    fn exact_point_masses() {
        let mu = make_uniform(array![[0.0]]).unwrap();
        let c = cost_matrix(mu.points(), mu.points(), 2.0).unwrap();
        let plan = solve_exact(&mu, &mu, &c).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.coupling, array![[1.0]]);
    }

    #[test]
    fn exact_two_point_shift() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let nu = make_uniform(array![[2.0], [3.0]]).unwrap();
        let c = cost_matrix(mu.points(), nu.points(), 2.0).unwrap();
        // identity: 4 + 4, swap: 9 + 1
        let brute = f64::min((4.0 + 4.0) / 2.0, (9.0 + 1.0) / 2.0);
        let plan = solve_exact(&mu, &nu, &c).unwrap();
        assert_eq!(plan.cost, brute);
        assert_eq!(plan.cost, 4.0);
        assert_eq!(plan.coupling, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn exact_identity_on_same_support() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let c = cost_matrix(mu.points(), mu.points(), 2.0).unwrap();
        let plan = solve_exact(&mu, &mu, &c).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.coupling, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn exact_mass_mismatch() {
        let mu = make_uniform(array![[0.0]]).unwrap();
        let nu = make_uniform(array![[0.0]]).unwrap();
        let c = CostMatrix::new(array![[0.0, 1.0]], 2.0).unwrap();
        assert!(matches!(solve_exact(&mu, &nu, &c), Err(Error::CostShape(..))));
    }
}
