//! Dirichlet Poisson solver for the 5-point Laplacian on a rectangular grid.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2, Zip};

use crate::error::{Error, Result};

/// Interior node count per axis up to which the sine-transform direct solve is used.
pub const DIRECT_LIMIT: usize = 254;

/// Relative residual required of every solve, in the sup norm.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Solve `Delta alpha = rhs` on the interior nodes with `alpha = 0` on the
/// boundary. `rhs` has the full grid shape `(nx, ny)`; its boundary entries
/// are ignored. Grids with at most [`DIRECT_LIMIT`] interior nodes per axis
/// are diagonalized by discrete sine transforms; larger grids use conjugate
/// gradients.
pub fn poisson_dirichlet(rhs: ArrayView2<'_, f64>, hx: f64, hy: f64) -> Result<Array2<f64>> {
    let (nx, ny) = rhs.dim();
    if nx < 3 || ny < 3 {
        return Ok(Array2::zeros((nx, ny)));
    }
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::InvalidInput("grid spacing must be positive".into()));
    }
    let inner = rhs.slice(s![1..nx - 1, 1..ny - 1]).to_owned();
    let scale = inner.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = Array2::zeros((nx, ny));
    if scale == 0.0 {
        return Ok(alpha);
    }
    let sol = if nx - 2 <= DIRECT_LIMIT && ny - 2 <= DIRECT_LIMIT {
        sine_solve(&inner, hx, hy)
    } else {
        cg_solve(&inner, hx, hy)?
    };
    alpha.slice_mut(s![1..nx - 1, 1..ny - 1]).assign(&sol);
    let res = residual(&alpha, rhs, hx, hy);
    if res > RESIDUAL_TOL * scale {
        return Err(Error::SolverFailure(format!(
            "Poisson residual {res:e} above {:e}",
            RESIDUAL_TOL * scale
        )));
    }
    Ok(alpha)
}

/// Sup norm of `Delta alpha - rhs` over interior nodes.
pub fn residual(alpha: &Array2<f64>, rhs: ArrayView2<'_, f64>, hx: f64, hy: f64) -> f64 {
    let (nx, ny) = alpha.dim();
    let mut worst = 0.0f64;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let lap = (alpha[[i + 1, j]] - 2.0 * alpha[[i, j]] + alpha[[i - 1, j]]) / (hx * hx)
                + (alpha[[i, j + 1]] - 2.0 * alpha[[i, j]] + alpha[[i, j - 1]]) / (hy * hy);
            worst = worst.max((lap - rhs[[i, j]]).abs());
        }
    }
    worst
}

fn sine_matrix(n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(k, j)| {
        (PI * (k + 1) as f64 * (j + 1) as f64 / (n + 1) as f64).sin()
    })
}

fn eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * (k + 1) as f64 / (2.0 * (n + 1) as f64)).sin();
            -4.0 * s * s / (h * h)
        })
        .collect()
}

fn sine_solve(rhs: &Array2<f64>, hx: f64, hy: f64) -> Array2<f64> {
    let (mx, my) = rhs.dim();
    let sx = sine_matrix(mx);
    let sy = sine_matrix(my);
    let lx = eigenvalues(mx, hx);
    let ly = eigenvalues(my, hy);
    let mut hat = sx.dot(rhs).dot(&sy);
    for ((k, l), v) in hat.indexed_iter_mut() {
        *v /= lx[k] + ly[l];
    }
    let norm = 4.0 / ((mx + 1) as f64 * (my + 1) as f64);
    sx.dot(&hat).dot(&sy) * norm
}

fn neg_laplacian(u: &Array2<f64>, hx: f64, hy: f64) -> Array2<f64> {
    let (mx, my) = u.dim();
    let (cx, cy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    Array2::from_shape_fn((mx, my), |(i, j)| {
        let c = u[[i, j]];
        let w = if i > 0 { u[[i - 1, j]] } else { 0.0 };
        let e = if i + 1 < mx { u[[i + 1, j]] } else { 0.0 };
        let so = if j > 0 { u[[i, j - 1]] } else { 0.0 };
        let no = if j + 1 < my { u[[i, j + 1]] } else { 0.0 };
        cx * (2.0 * c - w - e) + cy * (2.0 * c - so - no)
    })
}

fn cg_solve(rhs: &Array2<f64>, hx: f64, hy: f64) -> Result<Array2<f64>> {
    // -Delta is symmetric positive definite on the interior
    let b = rhs.mapv(|v| -v);
    let mut x = Array2::zeros(b.dim());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = (&r * &r).sum();
    let bnorm = rr.sqrt();
    let max_iter = 20 * (b.len() as f64).sqrt() as usize + 1000;
    for _ in 0..max_iter {
        if rr.sqrt() <= 1e-13 * bnorm {
            return Ok(x);
        }
        let ap = neg_laplacian(&p, hx, hy);
        let step = rr / (&p * &ap).sum();
        x.scaled_add(step, &p);
        r.scaled_add(-step, &ap);
        let rr_new = (&r * &r).sum();
        let beta = rr_new / rr;
        Zip::from(&mut p).and(&r).for_each(|p, &r| *p = r + beta * *p);
        rr = rr_new;
    }
    if rr.sqrt() <= 1e-10 * bnorm {
        Ok(x)
    } else {
        Err(Error::SolverFailure("conjugate gradients did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manufactured(n: usize) -> f64 {
        let h = 1.0 / (n - 1) as f64;
        let exact = Array2::from_shape_fn((n, n), |(i, j)| (PI * i as f64 * h).sin() * (PI * j as f64 * h).sin());
        let rhs = exact.mapv(|v| -2.0 * PI * PI * v);
        let got = poisson_dirichlet(rhs.view(), h, h).unwrap();
        (&got - &exact).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn zero_rhs() {
        let a = poisson_dirichlet(Array2::zeros((9, 7)).view(), 0.1, 0.2).unwrap();
        assert!(a.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let e1 = manufactured(17);
        let e2 = manufactured(33);
        let e3 = manufactured(65);
        // truncation error of the 5-point stencil is pi^4 h^2 / 12 times the solution
        assert!(e1 < PI.powi(4) / 12.0 / 256.0 * 1.1);
        assert!((e1 / e2 - 4.0).abs() < 0.2);
        assert!((e2 / e3 - 4.0).abs() < 0.2);
    }

    #[test]
    fn linear_in_rhs() {
        let rhs = Array2::from_shape_fn((12, 9), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let a = poisson_dirichlet(rhs.view(), 0.1, 0.125).unwrap();
        let b = poisson_dirichlet((&rhs * 3.5).view(), 0.1, 0.125).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((3.5 * x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn conjugate_gradients_agree_with_direct() {
        let rhs = Array2::from_shape_fn((20, 15), |(i, j)| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let inner = rhs.slice(s![1..19, 1..14]).to_owned();
        let d = sine_solve(&inner, 0.05, 0.07);
        let c = cg_solve(&inner, 0.05, 0.07).unwrap();
        for (x, y) in d.iter().zip(c.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn anisotropic_residual() {
        let rhs = Array2::from_shape_fn((30, 11), |(i, j)| (i as f64 * 0.3).cos() * j as f64);
        let a = poisson_dirichlet(rhs.view(), 0.02, 0.3).unwrap();
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(residual(&a, rhs.view(), 0.02, 0.3) < 1e-8 * scale);
    }
}
