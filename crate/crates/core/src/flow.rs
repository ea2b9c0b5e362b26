//! Flow minimization for TL2 maps between positive densities on a rectangle.
//!
//! Starting from the Knothe-Rosenblatt map, the map is rearranged along
//! divergence-free velocity fields `grad_perp(alpha) / mu`, where `alpha`
//! solves a Dirichlet Poisson problem driven by the curl of
//! `Q = 2T + 2 sum_i g_i(T) grad f_i`.

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::measures::TransportMap;
use crate::poisson::poisson_dirichlet;

/// Tolerance on the trapezoid mass of each density.
pub const DENSITY_MASS_TOL: f64 = 1e-6;

/// Densities are floored at this fraction of their maximum before dividing by them.
pub const DENSITY_FLOOR: f64 = 1e-8;

/// Subdivision per axis used when pushing `mu` forward.
pub const PUSH_SUBDIV: usize = 4;

/// Consecutive rejected steps after which the flow gives up.
pub const MAX_REJECTIONS: usize = 10;

/// Problem data for a flow on the node grid `x_i = i hx`, `y_j = j hy`.
///
/// Scalar grids are indexed `[ix, iy]`; channel grids `[ix, iy, channel]`.
/// Both densities live on the same grid and carry unit mass under the
/// trapezoid rule.
#[derive(Debug, Clone)]
pub struct GridField {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    mu: Array2<f64>,
    nu: Array2<f64>,
    f: Array3<f64>,
    g: Array3<f64>,
}

/// Trapezoid quadrature weights on the node grid.
pub fn trapezoid_weights(nx: usize, ny: usize, hx: f64, hy: f64) -> Array2<f64> {
    let edge = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
    Array2::from_shape_fn((nx, ny), |(i, j)| hx * hy * edge(i, nx) * edge(j, ny))
}

/// Rescale a nonnegative grid to unit trapezoid mass.
pub fn normalize_density(density: &Array2<f64>, hx: f64, hy: f64) -> Result<Array2<f64>> {
    let (nx, ny) = density.dim();
    let w = trapezoid_weights(nx, ny, hx, hy);
    let mass = (density * &w).sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidInput("density has no mass".into()));
    }
    Ok(density / mass)
}

impl GridField {
    pub fn new(
        hx: f64,
        hy: f64,
        mu: Array2<f64>,
        nu: Array2<f64>,
        f: Array3<f64>,
        g: Array3<f64>,
    ) -> Result<Self> {
        let (nx, ny) = mu.dim();
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 nodes per axis".into()));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::InvalidInput("grid spacing must be positive".into()));
        }
        if nu.dim() != (nx, ny) {
            return Err(Error::GridMismatch);
        }
        let m = f.len_of(Axis(2));
        if f.dim() != (nx, ny, m) || g.dim() != (nx, ny, m) {
            return Err(Error::GridMismatch);
        }
        let w = trapezoid_weights(nx, ny, hx, hy);
        for d in [&mu, &nu] {
            if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput("densities must be strictly positive".into()));
            }
            let mass = (d * &w).sum();
            if (mass - 1.0).abs() > DENSITY_MASS_TOL {
                return Err(Error::InvalidInput(format!("density has mass {mass}, expected 1")));
            }
        }
        if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("channel values must be finite".into()));
        }
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            mu,
            nu,
            f,
            g,
        })
    }

    /// Densities only, no channels.
    pub fn densities(hx: f64, hy: f64, mu: Array2<f64>, nu: Array2<f64>) -> Result<Self> {
        let (nx, ny) = mu.dim();
        Self::new(hx, hy, mu, nu, Array3::zeros((nx, ny, 0)), Array3::zeros((nx, ny, 0)))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn channels(&self) -> usize {
        self.f.len_of(Axis(2))
    }

    pub fn mu(&self) -> ArrayView2<'_, f64> {
        self.mu.view()
    }

    pub fn nu(&self) -> ArrayView2<'_, f64> {
        self.nu.view()
    }

    fn extent(&self) -> (f64, f64) {
        ((self.nx - 1) as f64 * self.hx, (self.ny - 1) as f64 * self.hy)
    }

    fn weights(&self) -> Array2<f64> {
        trapezoid_weights(self.nx, self.ny, self.hx, self.hy)
    }

    /// Identity map, `[ix, iy, 0..2]`.
    pub fn identity_map(&self) -> Array3<f64> {
        Array3::from_shape_fn((self.nx, self.ny, 2), |(i, j, k)| {
            if k == 0 {
                i as f64 * self.hx
            } else {
                j as f64 * self.hy
            }
        })
    }

    /// `int (|T(x) - x|^2 + |g(T(x)) - f(x)|^2) mu(x) dx` by the trapezoid rule.
    pub fn energy(&self, map: &Array3<f64>) -> f64 {
        let w = self.weights();
        let m = self.channels();
        let mut total = 0.0;
        for i in 0..self.nx {
            for j in 0..self.ny {
                let (tx, ty) = (map[[i, j, 0]], map[[i, j, 1]]);
                let dx = tx - i as f64 * self.hx;
                let dy = ty - j as f64 * self.hy;
                let mut e = dx * dx + dy * dy;
                for c in 0..m {
                    let d = bilinear(&self.g, c, tx, ty, self.hx, self.hy) - self.f[[i, j, c]];
                    e += d * d;
                }
                total += e * self.mu[[i, j]] * w[[i, j]];
            }
        }
        total
    }

    /// L1 distance between the pushforward of `mu` under `map` and `nu`.
    ///
    /// Every grid cell is split into `PUSH_SUBDIV^2` subcells. Each subcell
    /// centre is mapped through the bilinear interpolant of the map, carries
    /// the bilinearly interpolated mass of `mu`, and is deposited on the four
    /// surrounding nodes with bilinear weights.
    pub fn pushforward_error(&self, map: &Array3<f64>) -> f64 {
        let w = self.weights();
        let mut dep = Array2::<f64>::zeros((self.nx, self.ny));
        let s = PUSH_SUBDIV;
        let area = self.hx * self.hy / (s * s) as f64;
        for i in 0..self.nx - 1 {
            for j in 0..self.ny - 1 {
                for a in 0..s {
                    for b in 0..s {
                        let u = (a as f64 + 0.5) / s as f64;
                        let v = (b as f64 + 0.5) / s as f64;
                        let corners = [
                            ((i, j), (1.0 - u) * (1.0 - v)),
                            ((i + 1, j), u * (1.0 - v)),
                            ((i, j + 1), (1.0 - u) * v),
                            ((i + 1, j + 1), u * v),
                        ];
                        let (mut tx, mut ty, mut m) = (0.0, 0.0, 0.0);
                        for &((p, q), c) in &corners {
                            tx += c * map[[p, q, 0]];
                            ty += c * map[[p, q, 1]];
                            m += c * self.mu[[p, q]];
                        }
                        let mass = m * area;
                        let (p, tp) = cell(tx, self.hx, self.nx);
                        let (q, tq) = cell(ty, self.hy, self.ny);
                        dep[[p, q]] += mass * (1.0 - tp) * (1.0 - tq);
                        dep[[p + 1, q]] += mass * tp * (1.0 - tq);
                        dep[[p, q + 1]] += mass * (1.0 - tp) * tq;
                        dep[[p + 1, q + 1]] += mass * tp * tq;
                    }
                }
            }
        }
        dep.iter()
            .zip(self.nu.iter().zip(w.iter()))
            .map(|(d, (n, w))| (d - n * w).abs())
            .sum()
    }
}

fn cell(p: f64, h: f64, n: usize) -> (usize, f64) {
    let u = (p / h).clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n - 2);
    (i, u - i as f64)
}

fn bilinear(field: &Array3<f64>, c: usize, x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    let (nx, ny, _) = field.dim();
    let (i, s) = cell(x, hx, nx);
    let (j, t) = cell(y, hy, ny);
    field[[i, j, c]] * (1.0 - s) * (1.0 - t)
        + field[[i + 1, j, c]] * s * (1.0 - t)
        + field[[i, j + 1, c]] * (1.0 - s) * t
        + field[[i + 1, j + 1, c]] * s * t
}

/// Central differences in the interior, one-sided at the boundary.
pub fn gradient(u: ArrayView2<'_, f64>, hx: f64, hy: f64) -> (Array2<f64>, Array2<f64>) {
    let (nx, ny) = u.dim();
    let dx = Array2::from_shape_fn((nx, ny), |(i, j)| {
        if i == 0 {
            (u[[1, j]] - u[[0, j]]) / hx
        } else if i + 1 == nx {
            (u[[i, j]] - u[[i - 1, j]]) / hx
        } else {
            (u[[i + 1, j]] - u[[i - 1, j]]) / (2.0 * hx)
        }
    });
    let dy = Array2::from_shape_fn((nx, ny), |(i, j)| {
        if j == 0 {
            (u[[i, 1]] - u[[i, 0]]) / hy
        } else if j + 1 == ny {
            (u[[i, j]] - u[[i, j - 1]]) / hy
        } else {
            (u[[i, j + 1]] - u[[i, j - 1]]) / (2.0 * hy)
        }
    });
    (dx, dy)
}

/// `grad_perp(alpha) = (-d alpha / dy, d alpha / dx)`.
pub fn perp_gradient(alpha: ArrayView2<'_, f64>, hx: f64, hy: f64) -> (Array2<f64>, Array2<f64>) {
    let (dx, dy) = gradient(alpha, hx, hy);
    (dy.mapv(|v| -v), dx)
}

/// Discrete divergence of `(vx, vy)` with the same stencils as [`gradient`].
pub fn divergence(vx: ArrayView2<'_, f64>, vy: ArrayView2<'_, f64>, hx: f64, hy: f64) -> Array2<f64> {
    let (dxx, _) = gradient(vx, hx, hy);
    let (_, dyy) = gradient(vy, hx, hy);
    dxx + dyy
}

/// Monotone rearrangement between two nonnegative node densities on a
/// uniform 1D grid with spacing `h`.
///
/// Node `i` carries mass `density_i` times the length of its dual cell
/// `[x_i - h/2, x_i + h/2]` clipped to the grid, spread uniformly over the
/// cell. Returns `G_nu^{-1}(F_mu(x_i))` for every node.
pub fn monotone_map_1d(mu: &[f64], nu: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = mu.len();
    if n < 2 || nu.len() != n {
        return Err(Error::InvalidInput("1D densities need matching length >= 2".into()));
    }
    let edges: Vec<f64> = (0..=n)
        .map(|k| {
            if k == 0 {
                0.0
            } else if k == n {
                (n - 1) as f64 * h
            } else {
                (k as f64 - 0.5) * h
            }
        })
        .collect();
    let masses = |d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| d[i].max(0.0) * (edges[i + 1] - edges[i]))
            .collect()
    };
    let (ma, mb) = (masses(mu), masses(nu));
    let (ta, tb): (f64, f64) = (ma.iter().sum(), mb.iter().sum());
    if !(ta > 0.0) || !(tb > 0.0) {
        return Err(Error::DegenerateDensity(0));
    }
    let mut cb = vec![0.0; n + 1];
    for k in 0..n {
        cb[k + 1] = cb[k] + mb[k] / tb;
    }
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut k = 0;
    for i in 0..n {
        let x = i as f64 * h;
        let frac = (x - edges[i]) / (edges[i + 1] - edges[i]);
        let u = ((acc + ma[i] * frac) / ta).clamp(0.0, 1.0);
        acc += ma[i];
        while k + 1 < n && (cb[k + 1] < u || mb[k] == 0.0) {
            k += 1;
        }
        while k > 0 && cb[k] > u {
            k -= 1;
        }
        let y = if mb[k] > 0.0 {
            let s = ((u - cb[k]) * tb / mb[k]).clamp(0.0, 1.0);
            edges[k] + s * (edges[k + 1] - edges[k])
        } else {
            edges[k]
        };
        out.push(y);
    }
    Ok(out)
}

/// Knothe-Rosenblatt map from `mu` to `nu`: monotone matching of the x
/// marginals, then of the y conditionals at the matched x.
pub fn knothe_initial_map(grid: &GridField) -> Result<Array3<f64>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx, grid.hy);
    let wy: Vec<f64> = (0..ny).map(|j| if j == 0 || j + 1 == ny { 0.5 * hy } else { hy }).collect();
    let marginal = |d: &Array2<f64>| -> Result<Vec<f64>> {
        (0..nx)
            .map(|i| {
                let s: f64 = (0..ny).map(|j| d[[i, j]] * wy[j]).sum();
                if s > 0.0 {
                    Ok(s)
                } else {
                    Err(Error::DegenerateDensity(i))
                }
            })
            .collect()
    };
    let (mx, nxm) = (marginal(&grid.mu)?, marginal(&grid.nu)?);
    let t1 = monotone_map_1d(&mx, &nxm, hx)?;
    let mut map = Array3::zeros((nx, ny, 2));
    for i in 0..nx {
        let (a, s) = cell(t1[i], hx, nx);
        let col_mu: Vec<f64> = (0..ny).map(|j| grid.mu[[i, j]]).collect();
        let col_nu: Vec<f64> = (0..ny)
            .map(|j| (1.0 - s) * grid.nu[[a, j]] + s * grid.nu[[a + 1, j]])
            .collect();
        let t2 = monotone_map_1d(&col_mu, &col_nu, hy).map_err(|_| Error::DegenerateDensity(i))?;
        for j in 0..ny {
            map[[i, j, 0]] = t1[i];
            map[[i, j, 1]] = t2[j];
        }
    }
    Ok(map)
}

/// `Q = 2T + 2 sum_i g_i(T(x)) grad f_i(x)`, `[ix, iy, 0..2]`.
pub fn compute_q(grid: &GridField, map: &Array3<f64>) -> Array3<f64> {
    let mut q = map * 2.0;
    for c in 0..grid.channels() {
        let fc = grid.f.index_axis(Axis(2), c);
        let (fx, fy) = gradient(fc, grid.hx, grid.hy);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let gt = bilinear(&grid.g, c, map[[i, j, 0]], map[[i, j, 1]], grid.hx, grid.hy);
                q[[i, j, 0]] += 2.0 * gt * fx[[i, j]];
                q[[i, j, 1]] += 2.0 * gt * fy[[i, j]];
            }
        }
    }
    q
}

/// Step size and stopping rule for [`flow_minimize`].
#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub tau: f64,
    pub max_steps: usize,
    pub energy_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            max_steps: 500,
            energy_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    /// Final map, `[ix, iy, 0..2]`.
    pub map: Array3<f64>,
    /// Energy before the first step and after every accepted step.
    pub energies: Vec<f64>,
    /// Pushforward L1 error alongside each entry of `energies`.
    pub pushforward_errors: Vec<f64>,
    pub steps: usize,
    /// Step size in use when the flow stopped.
    pub tau: f64,
    pub converged: bool,
    /// Smallest finite-difference Jacobian determinant seen during the flow.
    pub min_jacobian: f64,
}

impl FlowResult {
    /// Images in node order with x varying fastest.
    pub fn transport_map(&self) -> TransportMap {
        let (nx, ny, _) = self.map.dim();
        let mut images = Array2::zeros((nx * ny, 2));
        for j in 0..ny {
            for i in 0..nx {
                images[[j * nx + i, 0]] = self.map[[i, j, 0]];
                images[[j * nx + i, 1]] = self.map[[i, j, 1]];
            }
        }
        TransportMap {
            images,
            assignment: None,
        }
    }
}

/// Smallest Jacobian determinant of the map on the grid.
pub fn min_jacobian(map: &Array3<f64>, hx: f64, hy: f64) -> f64 {
    let (ax, ay) = gradient(map.index_axis(Axis(2), 0), hx, hy);
    let (bx, by) = gradient(map.index_axis(Axis(2), 1), hx, hy);
    let mut worst = f64::INFINITY;
    for (((a, b), c), d) in ax.iter().zip(ay.iter()).zip(bx.iter()).zip(by.iter()) {
        worst = worst.min(a * d - b * c);
    }
    worst
}

fn upwind(u: ArrayView2<'_, f64>, i: usize, j: usize, v: f64, h: f64, along_x: bool) -> f64 {
    let (nx, ny) = u.dim();
    let (n, k) = if along_x { (nx, i) } else { (ny, j) };
    let at = |k: usize| if along_x { u[[k, j]] } else { u[[i, k]] };
    let back = k > 0 && (v > 0.0 || k + 1 == n);
    if back {
        (at(k) - at(k - 1)) / h
    } else {
        (at(k + 1) - at(k)) / h
    }
}

/// Velocity `grad_perp(alpha) / mu` for the current map, and the decrease
/// rate `int |grad alpha|^2`.
fn velocity(grid: &GridField, map: &Array3<f64>) -> Result<(Array2<f64>, Array2<f64>, f64)> {
    let (hx, hy) = (grid.hx, grid.hy);
    let q = compute_q(grid, map);
    let q1 = q.index_axis(Axis(2), 0);
    let q2 = q.index_axis(Axis(2), 1);
    // -div(Q_perp) with Q_perp = (-Q2, Q1)
    let rhs = -divergence(q2.mapv(|v| -v).view(), q1, hx, hy);
    let alpha = poisson_dirichlet(rhs.view(), hx, hy)?;
    let (cx, cy) = perp_gradient(alpha.view(), hx, hy);
    let rate = ((&cx * &cx + &cy * &cy) * &grid.weights()).sum();
    let floor = DENSITY_FLOOR * grid.mu.iter().fold(0.0f64, |m, &v| m.max(v));
    let inv = grid.mu.mapv(|m| 1.0 / m.max(floor));
    Ok((cx * &inv, cy * &inv, rate))
}

fn advect(grid: &GridField, map: &Array3<f64>, vx: &Array2<f64>, vy: &Array2<f64>, tau: f64) -> Array3<f64> {
    let (lx, ly) = grid.extent();
    let mut out = map.clone();
    for k in 0..2 {
        let comp = map.index_axis(Axis(2), k);
        let hi = if k == 0 { lx } else { ly };
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (a, b) = (vx[[i, j]], vy[[i, j]]);
                let dt = a * upwind(comp, i, j, a, grid.hx, true) + b * upwind(comp, i, j, b, grid.hy, false);
                out[[i, j, k]] = (comp[[i, j]] - tau * dt).clamp(0.0, hi);
            }
        }
    }
    out
}

/// Run the flow from the Knothe-Rosenblatt map.
pub fn flow_minimize(grid: &GridField, cfg: &FlowConfig) -> Result<FlowResult> {
    let t0 = knothe_initial_map(grid)?;
    flow_minimize_from(grid, t0, cfg)
}

/// Run the flow from a given mass preserving initial map.
///
/// Each step is advected with upwind differences at step size
/// `min(tau, h / (2 max|v|))`; a step that raises the energy is retried at
/// half the size. The flow stops when an accepted step lowers the energy by
/// less than `energy_tol`, after `max_steps` steps, or when rejected steps
/// shrink the predicted decrease below `energy_tol`.
pub fn flow_minimize_from(grid: &GridField, initial: Array3<f64>, cfg: &FlowConfig) -> Result<FlowResult> {
    if !(cfg.tau > 0.0) || !cfg.tau.is_finite() {
        return Err(Error::InvalidInput("step size must be positive".into()));
    }
    if initial.dim() != (grid.nx, grid.ny, 2) {
        return Err(Error::GridMismatch);
    }
    let (hx, hy) = (grid.hx, grid.hy);
    let mut map = initial;
    let mut energy = grid.energy(&map);
    let mut result = FlowResult {
        map: Array3::zeros((0, 0, 0)),
        energies: vec![energy],
        pushforward_errors: vec![grid.pushforward_error(&map)],
        steps: 0,
        tau: cfg.tau,
        converged: false,
        min_jacobian: min_jacobian(&map, hx, hy),
    };
    let mut tau = cfg.tau;
    if energy <= cfg.energy_tol {
        result.converged = true;
    }
    while !result.converged && result.steps < cfg.max_steps {
        let (vx, vy, rate) = velocity(grid, &map)?;
        let vmax = vx.iter().chain(vy.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        if vmax == 0.0 || rate == 0.0 {
            result.converged = true;
            break;
        }
        let cfl = 0.5 * hx.min(hy) / vmax;
        let mut rejected = 0;
        loop {
            let step = tau.min(cfl);
            let candidate = advect(grid, &map, &vx, &vy, step);
            let e = grid.energy(&candidate);
            if e <= energy + 1e-10 * energy.max(1.0) && e.is_finite() {
                let decrease = energy - e;
                map = candidate;
                energy = e;
                result.steps += 1;
                result.energies.push(energy);
                result.pushforward_errors.push(grid.pushforward_error(&map));
                let jac = min_jacobian(&map, hx, hy);
                if jac <= 0.0 && result.min_jacobian > 0.0 {
                    log::warn!("map Jacobian became nonpositive at step {}", result.steps);
                }
                result.min_jacobian = result.min_jacobian.min(jac);
                if decrease < cfg.energy_tol {
                    result.converged = true;
                }
                break;
            }
            rejected += 1;
            tau = step * 0.5;
            if rejected >= MAX_REJECTIONS {
                if tau.min(cfl) * rate < cfg.energy_tol {
                    result.converged = true;
                    break;
                }
                return Err(Error::StepTooLarge(rejected));
            }
        }
    }
    result.tau = tau;
    result.map = map;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, cx: f64, cy: f64, sx: f64, sy: f64, rho: f64, pedestal: f64) -> Array2<f64> {
        let h = 1.0 / (n - 1) as f64;
        let d = Array2::from_shape_fn((n, n), |(i, j)| {
            let x = (i as f64 * h - cx) / sx;
            let y = (j as f64 * h - cy) / sy;
            let q = (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho);
            (-0.5 * q).exp() + pedestal
        });
        normalize_density(&d, h, h).unwrap()
    }

    #[test]
    fn identical_data_needs_no_steps() {
        let n = 17;
        let h = 1.0 / 16.0;
        let mu = gaussian(n, 0.5, 0.5, 0.2, 0.2, 0.0, 0.1);
        let f = Array3::from_shape_fn((n, n, 1), |(i, j, _)| (i as f64 * h).sin() + j as f64 * h);
        let grid = GridField::new(h, h, mu.clone(), mu, f.clone(), f).unwrap();
        let t0 = knothe_initial_map(&grid).unwrap();
        let id = grid.identity_map();
        for (a, b) in t0.iter().zip(id.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = flow_minimize(&grid, &FlowConfig::default()).unwrap();
        assert_eq!(r.steps, 0);
        assert!(r.energies[0] < 1e-20);
    }

    #[test]
    fn monotone_map_of_shifted_uniform_is_a_shift() {
        let n = 21;
        let h = 0.05;
        let mut mu = vec![0.0; n];
        let mut nu = vec![0.0; n];
        for i in 1..=8 {
            mu[i] = 1.0;
            nu[i + 4] = 1.0;
        }
        let t = monotone_map_1d(&mu, &nu, h).unwrap();
        for i in 1..=8 {
            assert!((t[i] - (i as f64 * h + 4.0 * h)).abs() < 1e-12);
        }
    }

    #[test]
    fn knothe_pushforward_matches_target() {
        let n = 40;
        let h = 1.0 / 39.0;
        let mu = gaussian(n, 0.4, 0.5, 0.15, 0.2, 0.0, 0.05);
        let nu = gaussian(n, 0.6, 0.4, 0.2, 0.12, 0.5, 0.05);
        let grid = GridField::densities(h, h, mu, nu).unwrap();
        let t0 = knothe_initial_map(&grid).unwrap();
        let err = grid.pushforward_error(&t0);
        assert!(err < 2.0 / n as f64, "{err}");
        assert!(grid.pushforward_error(&grid.identity_map()) > 2.0 / n as f64);
    }

    #[test]
    fn q_without_channels_is_twice_the_map() {
        let n = 9;
        let h = 0.125;
        let mu = gaussian(n, 0.5, 0.5, 0.3, 0.3, 0.0, 0.1);
        let grid = GridField::densities(h, h, mu.clone(), mu.clone()).unwrap();
        let t = grid.identity_map().mapv(|v| 0.5 * v + 0.1);
        assert_eq!(compute_q(&grid, &t), &t * 2.0);
        let zeros = Array3::zeros((n, n, 1));
        let f = Array3::from_shape_fn((n, n, 1), |(i, _, _)| i as f64 * h);
        let grid = GridField::new(h, h, mu.clone(), mu.clone(), f.clone(), zeros).unwrap();
        assert_eq!(compute_q(&grid, &t), &t * 2.0);
        let grid = GridField::new(h, h, mu.clone(), mu, f, Array3::ones((n, n, 1))).unwrap();
        let q = compute_q(&grid, &t);
        for i in 0..n {
            for j in 0..n {
                assert!((q[[i, j, 0]] - 2.0 * t[[i, j, 0]] - 2.0).abs() < 1e-12);
                assert!((q[[i, j, 1]] - 2.0 * t[[i, j, 1]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perp_gradient_is_divergence_free_inside() {
        let n = 20;
        let h = 1.0 / 19.0;
        let alpha = Array2::from_shape_fn((n, n), |(i, j)| ((i * j) as f64 * 0.37).sin() + (i as f64).powi(2) * 0.01);
        let (vx, vy) = perp_gradient(alpha.view(), h, h);
        let div = divergence(vx.view(), vy.view(), h, h);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                assert!(div[[i, j]].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn translation_energy() {
        let n = 41;
        let h = 1.0 / 40.0;
        let c = 0.1;
        let mu = gaussian(n, 0.4, 0.5, 0.1, 0.1, 0.0, 0.0);
        let nu = gaussian(n, 0.4 + c, 0.5, 0.1, 0.1, 0.0, 0.0);
        let grid = GridField::densities(h, h, mu, nu).unwrap();
        let r = flow_minimize(&grid, &FlowConfig { max_steps: 50, ..FlowConfig::default() }).unwrap();
        let e = *r.energies.last().unwrap();
        assert!((e - c * c).abs() < 0.1 * c * c, "energy {e}");
    }

    #[test]
    fn flow_descends_and_keeps_marginals() {
        let n = 33;
        let h = 1.0 / 32.0;
        let mu = gaussian(n, 0.5, 0.5, 0.2, 0.2, 0.0, 0.2);
        let nu = gaussian(n, 0.5, 0.5, 0.2, 0.2, 0.7, 0.2);
        let grid = GridField::densities(h, h, mu, nu).unwrap();
        let r = flow_minimize(&grid, &FlowConfig { max_steps: 60, ..FlowConfig::default() }).unwrap();
        assert!(r.steps > 0);
        for w in r.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!(r.energies.last().unwrap() < &r.energies[0]);
        let bound = 5.0 / n as f64;
        assert!(r.pushforward_errors.iter().all(|&e| e < bound), "{:?}", r.pushforward_errors);
    }

    #[test]
    fn rejects_bad_density() {
        let mut mu = Array2::from_elem((5, 5), 1.0);
        let h = 0.25;
        let nu = mu.clone();
        mu[[2, 2]] = 0.0;
        assert!(GridField::densities(h, h, mu, nu).is_err());
    }
}
