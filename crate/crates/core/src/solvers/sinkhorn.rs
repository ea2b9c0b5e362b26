//! Entropy-regularized transport by Sinkhorn scaling.
//!
//! The regularization is annealed geometrically from `0.1 * max(C)` down to
//! the target `epsilon`, warm-starting the dual potentials between stages.
//! In the default mode each stage absorbs the current potentials into the
//! kernel and scales with plain multiplications; the log-domain mode runs the
//! same updates with log-sum-exp reductions.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{marginal_violation, CostMatrix, DiscreteMeasure, SolveStatus, TransportPlan};

use super::plan_cost;

/// Parameters for [`sinkhorn`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    /// Target regularization strength.
    pub epsilon: f64,
    /// Iteration cap per annealing stage.
    pub max_iterations: usize,
    /// Stop once the largest marginal violation falls below this.
    pub tolerance: f64,
    pub log_domain: bool,
    /// Number of geometric annealing stages (1 disables annealing).
    pub stages: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            max_iterations: 10_000,
            tolerance: 1e-6,
            log_domain: false,
            stages: 5,
        }
    }
}

impl SinkhornConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be > 0".into()));
        }
        if self.stages == 0 {
            return Err(Error::InvalidInput("stages must be >= 1".into()));
        }
        Ok(())
    }

    /// Epsilon for each annealing stage, ending exactly at the target.
    pub fn schedule(&self, max_cost: f64) -> Vec<f64> {
        let start = 0.1 * max_cost;
        if self.stages == 1 || !(start > self.epsilon) {
            return vec![self.epsilon];
        }
        let s = (self.stages - 1) as f64;
        let ratio = self.epsilon / start;
        let mut eps: Vec<f64> = (0..self.stages)
            .map(|t| start * ratio.powf(t as f64 / s))
            .collect();
        *eps.last_mut().expect("nonempty") = self.epsilon;
        eps
    }
}

const CHECK_EVERY: usize = 10;

/// Entropy-regularized coupling `diag(u) K diag(v)`.
///
/// The returned plan's `cost` is the unregularized `sum C_ij pi_ij`. When the
/// iteration cap is hit the last iterate is returned with
/// `status.converged == false`.
pub fn sinkhorn(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostMatrix,
    cfg: &SinkhornConfig,
) -> Result<TransportPlan> {
    cfg.validate()?;
    let (n, k) = c.shape();
    if n != mu.len() || k != nu.len() {
        return Err(Error::CostShape(n, k, mu.len(), nu.len()));
    }
    let a = mu.weights();
    let b = nu.weights();
    let (sa, sb) = (a.sum(), b.sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::MassMismatch(sa, sb));
    }
    let cost = c.entries();
    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(k);
    let mut total_iter = 0usize;
    let mut converged = false;
    let mut plan = Array2::zeros((n, k));
    for eps in cfg.schedule(c.max()) {
        let (p, it, ok) = if cfg.log_domain {
            log_stage(a, b, cost, eps, cfg, &mut f, &mut g)
        } else {
            scaling_stage(a, b, cost, eps, cfg, &mut f, &mut g)?
        };
        plan = p;
        total_iter += it;
        converged = ok;
    }
    let marginal_error = marginal_violation(&plan, a, b);
    Ok(TransportPlan {
        cost: plan_cost(&plan, cost),
        coupling: plan,
        source_weights: a.to_owned(),
        target_weights: b.to_owned(),
        status: SolveStatus {
            converged,
            iterations: total_iter,
            marginal_error,
        },
    })
}

fn scaling_stage(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: ArrayView2<'_, f64>,
    eps: f64,
    cfg: &SinkhornConfig,
    f: &mut Array1<f64>,
    g: &mut Array1<f64>,
) -> Result<(Array2<f64>, usize, bool)> {
    let (n, k) = cost.dim();
    // kernel with the warm-start potentials absorbed
    let kern = Array2::from_shape_fn((n, k), |(i, j)| ((f[i] + g[j] - cost[[i, j]]) / eps).exp());
    let mut u = Array1::<f64>::ones(n);
    let mut v = Array1::<f64>::ones(k);
    let mut kv = Array1::<f64>::zeros(n);
    let mut ktu = Array1::<f64>::zeros(k);
    let mut iter = 0;
    let mut converged = false;
    while iter < cfg.max_iterations {
        iter += 1;
        matvec(&kern, &v, &mut kv);
        for i in 0..n {
            u[i] = if a[i] == 0.0 { 0.0 } else { a[i] / kv[i] };
        }
        matvec_t(&kern, &u, &mut ktu);
        for j in 0..k {
            v[j] = if b[j] == 0.0 { 0.0 } else { b[j] / ktu[j] };
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::SuggestLogDomain);
        }
        if iter % CHECK_EVERY == 0 || iter == cfg.max_iterations {
            matvec(&kern, &v, &mut kv);
            let err = (0..n)
                .map(|i| (u[i] * kv[i] - a[i]).abs())
                .fold(0.0, f64::max);
            if !err.is_finite() {
                return Err(Error::SuggestLogDomain);
            }
            if err < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    let plan = Array2::from_shape_fn((n, k), |(i, j)| u[i] * kern[[i, j]] * v[j]);
    for i in 0..n {
        if u[i] > 0.0 {
            f[i] += eps * u[i].ln();
        }
    }
    for j in 0..k {
        if v[j] > 0.0 {
            g[j] += eps * v[j].ln();
        }
    }
    if plan.iter().any(|x| !x.is_finite()) {
        return Err(Error::SuggestLogDomain);
    }
    Ok((plan, iter, converged))
}

fn log_stage(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    cost: ArrayView2<'_, f64>,
    eps: f64,
    cfg: &SinkhornConfig,
    f: &mut Array1<f64>,
    g: &mut Array1<f64>,
) -> (Array2<f64>, usize, bool) {
    let (n, k) = cost.dim();
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut buf = vec![0.0; n.max(k)];
    let mut iter = 0;
    let mut converged = false;
    while iter < cfg.max_iterations {
        iter += 1;
        for i in 0..n {
            if a[i] == 0.0 {
                f[i] = f64::NEG_INFINITY;
                continue;
            }
            for j in 0..k {
                buf[j] = (g[j] - cost[[i, j]]) / eps;
            }
            f[i] = eps * (la[i] - logsumexp(&buf[..k]));
        }
        for j in 0..k {
            if b[j] == 0.0 {
                g[j] = f64::NEG_INFINITY;
                continue;
            }
            for i in 0..n {
                buf[i] = (f[i] - cost[[i, j]]) / eps;
            }
            g[j] = eps * (lb[j] - logsumexp(&buf[..n]));
        }
        if iter % CHECK_EVERY == 0 || iter == cfg.max_iterations {
            let mut err: f64 = 0.0;
            for i in 0..n {
                let s: f64 = (0..k)
                    .map(|j| ((f[i] + g[j] - cost[[i, j]]) / eps).exp())
                    .sum();
                err = err.max((s - a[i]).abs());
            }
            if err < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    let plan = Array2::from_shape_fn((n, k), |(i, j)| {
        let e = (f[i] + g[j] - cost[[i, j]]) / eps;
        if e.is_nan() {
            0.0
        } else {
            e.exp()
        }
    });
    // keep potentials finite for the next stage
    f.mapv_inplace(|x| if x.is_finite() { x } else { 0.0 });
    g.mapv_inplace(|x| if x.is_finite() { x } else { 0.0 });
    (plan, iter, converged)
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn matvec(m: &Array2<f64>, x: &Array1<f64>, out: &mut Array1<f64>) {
    for (i, row) in m.outer_iter().enumerate() {
        out[i] = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    }
}

fn matvec_t(m: &Array2<f64>, x: &Array1<f64>, out: &mut Array1<f64>) {
    out.fill(0.0);
    for (i, row) in m.outer_iter().enumerate() {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row.iter()) {
            *o += a * xi;
        }
    }
}

/// Result of [`sinkhorn_grid_barycentric`].
#[derive(Debug, Clone)]
pub struct GridSinkhornResult {
    /// Barycentric image of every source grid node, `(nx * ny) x 2`.
    pub images: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub marginal_error: f64,
}

/// Quadratic-cost Sinkhorn between two measures on the same tensor grid,
/// returning barycentric images without forming the coupling.
///
/// Weights are indexed with x varying fastest (`k = iy * nx + ix`). The
/// Gibbs kernel factors as `Ky (x) Kx`, so each scaling step costs
/// `O(nx * ny * (nx + ny))`.
pub fn sinkhorn_grid_barycentric(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    xs: &[f64],
    ys: &[f64],
    cfg: &SinkhornConfig,
) -> Result<GridSinkhornResult> {
    cfg.validate()?;
    let (nx, ny) = (xs.len(), ys.len());
    let len = nx * ny;
    if a.len() != len || b.len() != len {
        return Err(Error::LengthMismatch(len, a.len().min(b.len())));
    }
    let eps = cfg.epsilon;
    let kx = Array2::from_shape_fn((nx, nx), |(i, j)| (-(xs[i] - xs[j]).powi(2) / eps).exp());
    let ky = Array2::from_shape_fn((ny, ny), |(i, j)| (-(ys[i] - ys[j]).powi(2) / eps).exp());
    let mut u = Array1::<f64>::ones(len);
    let mut v = Array1::<f64>::ones(len);
    let mut tmp = Array2::<f64>::zeros((ny, nx));
    let mut kv = Array1::<f64>::zeros(len);
    let mut iter = 0;
    let mut converged = false;
    let mut err = f64::INFINITY;
    while iter < cfg.max_iterations {
        iter += 1;
        apply_sep(&kx, &ky, &v, &mut tmp, &mut kv);
        for i in 0..len {
            u[i] = if a[i] == 0.0 { 0.0 } else { a[i] / kv[i] };
        }
        apply_sep(&kx, &ky, &u, &mut tmp, &mut kv);
        for j in 0..len {
            v[j] = if b[j] == 0.0 { 0.0 } else { b[j] / kv[j] };
        }
        if v.iter().chain(u.iter()).any(|x| !x.is_finite()) {
            return Err(Error::SuggestLogDomain);
        }
        if iter % CHECK_EVERY == 0 || iter == cfg.max_iterations {
            apply_sep(&kx, &ky, &v, &mut tmp, &mut kv);
            err = (0..len).map(|i| (u[i] * kv[i] - a[i]).abs()).fold(0.0, f64::max);
            if err < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    // images_i = sum_j K_ij v_j y_j / sum_j K_ij v_j
    apply_sep(&kx, &ky, &v, &mut tmp, &mut kv);
    let vx = Array1::from_iter((0..len).map(|j| v[j] * xs[j % nx]));
    let vy = Array1::from_iter((0..len).map(|j| v[j] * ys[j / nx]));
    let mut kvx = Array1::zeros(len);
    let mut kvy = Array1::zeros(len);
    apply_sep(&kx, &ky, &vx, &mut tmp, &mut kvx);
    apply_sep(&kx, &ky, &vy, &mut tmp, &mut kvy);
    let mut images = Array2::zeros((len, 2));
    for i in 0..len {
        if !(kv[i] > 0.0) {
            return Err(Error::DegenerateRow(i));
        }
        images[[i, 0]] = kvx[i] / kv[i];
        images[[i, 1]] = kvy[i] / kv[i];
    }
    Ok(GridSinkhornResult {
        images,
        converged,
        iterations: iter,
        marginal_error: err,
    })
}

/// `out = (Ky (x) Kx) x` for x laid out as `ny` rows of `nx`.
fn apply_sep(
    kx: &Array2<f64>,
    ky: &Array2<f64>,
    x: &Array1<f64>,
    tmp: &mut Array2<f64>,
    out: &mut Array1<f64>,
) {
    let (ny, nx) = tmp.dim();
    let xm = x.view().into_shape_with_order((ny, nx)).expect("grid shape");
    // along x: tmp[r, :] = Kx * x[r, :]
    tmp.assign(&xm.dot(&kx.t()));
    let res = ky.dot(&*tmp);
    out.assign(&res.into_shape_with_order(nx * ny).expect("flat"));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::make_uniform;
    use crate::solvers::{cost_matrix, solve_exact};
    use ndarray::array;

    #[test]
    fn point_masses() {
        let mu = make_uniform(array![[0.0]]).unwrap();
        let c = cost_matrix(mu.points(), mu.points(), 2.0).unwrap();
        for log_domain in [false, true] {
            let cfg = SinkhornConfig {
                log_domain,
                ..SinkhornConfig::with_epsilon(0.5)
            };
            let p = sinkhorn(&mu, &mu, &c, &cfg).unwrap();
            assert!((p.coupling[[0, 0]] - 1.0).abs() < 1e-12);
            assert_eq!(p.cost, 0.0);
        }
    }

    #[test]
    fn two_point_shift_close_to_exact() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let nu = make_uniform(array![[2.0], [3.0]]).unwrap();
        let c = cost_matrix(mu.points(), nu.points(), 2.0).unwrap();
        let exact = solve_exact(&mu, &nu, &c).unwrap().cost;
        for log_domain in [false, true] {
            let cfg = SinkhornConfig {
                log_domain,
                ..SinkhornConfig::with_epsilon(0.01)
            };
            let p = sinkhorn(&mu, &nu, &c, &cfg).unwrap();
            assert!(p.status.converged);
            assert!((p.cost - exact).abs() < 0.05, "{}", p.cost);
        }
    }

    #[test]
    fn symmetric_instance_gives_symmetric_plan() {
        let mu = make_uniform(array![[0.0], [0.3], [1.0]]).unwrap();
        let c = cost_matrix(mu.points(), mu.points(), 2.0).unwrap();
        let p = sinkhorn(&mu, &mu, &c, &SinkhornConfig::with_epsilon(0.05)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.coupling[[i, j]] - p.coupling[[j, i]]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn marginals_within_tolerance() {
        let mu = crate::measures::DiscreteMeasure::new(array![[0.0], [0.5], [1.0]], array![0.2, 0.3, 0.5]).unwrap();
        let nu = make_uniform(array![[0.1], [0.9]]).unwrap();
        let c = cost_matrix(mu.points(), nu.points(), 2.0).unwrap();
        for log_domain in [false, true] {
            let cfg = SinkhornConfig {
                log_domain,
                ..SinkhornConfig::with_epsilon(0.01)
            };
            let p = sinkhorn(&mu, &nu, &c, &cfg).unwrap();
            assert!(p.marginal_violation() < cfg.tolerance);
        }
    }

    #[test]
    fn plain_scaling_overflows_where_log_domain_succeeds() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let nu = make_uniform(array![[200.0], [201.0]]).unwrap();
        let c = cost_matrix(mu.points(), nu.points(), 2.0).unwrap();
        let plain = SinkhornConfig {
            stages: 1,
            ..SinkhornConfig::with_epsilon(1.0)
        };
        assert!(matches!(sinkhorn(&mu, &nu, &c, &plain), Err(Error::SuggestLogDomain)));
        let logd = SinkhornConfig {
            log_domain: true,
            ..plain
        };
        let p = sinkhorn(&mu, &nu, &c, &logd).unwrap();
        assert!(p.status.converged);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let mu = make_uniform(array![[0.0], [0.5], [1.0]]).unwrap();
        let nu = make_uniform(array![[0.2], [0.4], [2.0]]).unwrap();
        let c = cost_matrix(mu.points(), nu.points(), 2.0).unwrap();
        let cfg = SinkhornConfig {
            max_iterations: 1,
            stages: 1,
            tolerance: 1e-14,
            ..SinkhornConfig::with_epsilon(0.01)
        };
        let p = sinkhorn(&mu, &nu, &c, &cfg).unwrap();
        assert!(!p.status.converged);
        assert_eq!(p.status.iterations, 1);
    }

    #[test]
    fn schedule_ends_at_target() {
        let cfg = SinkhornConfig::with_epsilon(0.01);
        let s = cfg.schedule(10.0);
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], 1.0);
        assert_eq!(*s.last().unwrap(), 0.01);
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn grid_solver_matches_dense_barycentric() {
        let xs = vec![0.0, 0.5, 1.0];
        let ys = vec![0.0, 1.0];
        let pts = crate::measures::unit_grid_2d(3, 2);
        let a = array![0.1, 0.2, 0.1, 0.2, 0.3, 0.1];
        let b = array![0.3, 0.1, 0.1, 0.1, 0.1, 0.3];
        let cfg = SinkhornConfig {
            stages: 1,
            tolerance: 1e-12,
            ..SinkhornConfig::with_epsilon(0.2)
        };
        let r = sinkhorn_grid_barycentric(a.view(), b.view(), &xs, &ys, &cfg).unwrap();
        let mu = crate::measures::DiscreteMeasure::new(pts.clone(), a).unwrap();
        let nu = crate::measures::DiscreteMeasure::new(pts.clone(), b).unwrap();
        let c = cost_matrix(pts.view(), pts.view(), 2.0).unwrap();
        let plan = sinkhorn(&mu, &nu, &c, &cfg).unwrap();
        let map = crate::solvers::barycentric_map(&plan, pts.view()).unwrap();
        for (x, y) in r.images.iter().zip(map.images.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
