use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Principal components of a data matrix (rows are samples).
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// One unit-norm component per row, in order of decreasing variance.
    pub components: Array2<f64>,
    /// Sample variances along each component.
    pub eigenvalues: Array1<f64>,
    /// Centered data projected on the components.
    pub projections: Array2<f64>,
    /// Number of eigenvalues above the numerical threshold.
    pub rank: usize,
}

impl Pca {
    /// Coordinates of an arbitrary point in component space.
    pub fn project(&self, point: &Array1<f64>) -> Array1<f64> {
        self.components.dot(&(point - &self.mean))
    }
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigendecomposition of the sample covariance (divisor `N - 1`).
///
/// When there are more features than samples the Gram matrix is
/// decomposed instead. Each component is signed so that its
/// largest-magnitude coordinate is positive.
pub fn pca(x: ArrayView2<'_, f64>, n_components: usize) -> Result<Pca> {
    let (n, dim) = x.dim();
    if n == 0 {
        return Err(Error::EmptyTrain);
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty");
    let xc = &x - &mean;
    let denom = (n.max(2) - 1) as f64;
    let mut vals: Vec<f64>;
    let mut vecs: Array2<f64>;
    if dim <= n {
        let cov = xc.t().dot(&xc) / denom;
        let eig = SymmetricEigen::new(to_na(&cov));
        vals = eig.eigenvalues.iter().copied().collect();
        vecs = Array2::from_shape_fn((dim, dim), |(i, j)| eig.eigenvectors[(i, j)]);
    } else {
        let gram = xc.dot(&xc.t()) / denom;
        let eig = SymmetricEigen::new(to_na(&gram));
        vals = eig.eigenvalues.iter().copied().collect();
        let u = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
        // v = Xc^T u / ||Xc^T u||
        vecs = xc.t().dot(&u);
        for (j, mut col) in vecs.axis_iter_mut(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 {
                col /= norm;
            } else {
                vals[j] = 0.0;
            }
        }
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * top.max(f64::MIN_POSITIVE) * (dim.max(n) as f64);
    let rank = if top > 0.0 { vals.iter().filter(|&&v| v > tol).count() } else { 0 };
    if n_components > rank {
        return Err(Error::RankError {
            requested: n_components,
            rank,
        });
    }
    let mut components = Array2::zeros((n_components, dim));
    let mut eigenvalues = Array1::zeros(n_components);
    for (c, &idx) in order.iter().take(n_components).enumerate() {
        let mut v = vecs.column(idx).to_owned();
        let mut big = 0usize;
        for (i, &e) in v.iter().enumerate() {
            if e.abs() > v[big].abs() {
                big = i;
            }
        }
        if v[big] < 0.0 {
            v.mapv_inplace(|e| -e);
        }
        components.row_mut(c).assign(&v);
        eigenvalues[c] = vals[idx].max(0.0);
    }
    let projections = xc.dot(&components.t());
    Ok(Pca {
        mean,
        components,
        eigenvalues,
        projections,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn line_has_one_component() {
        let x = array![[0.0, 0.0], [1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let p = pca(x.view(), 1).unwrap();
        assert_eq!(p.rank, 1);
        assert!(matches!(pca(x.view(), 2), Err(Error::RankError { requested: 2, rank: 1 })));
        let c = p.components.row(0);
        assert!((c[0] - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn isotropic_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((20_000, 2), |_| StandardNormal.sample(&mut rng));
        let p = pca(x.view(), 2).unwrap();
        let ratio = p.eigenvalues[0] / p.eigenvalues[1];
        assert!(ratio < 1.05, "{ratio}");
    }

    #[test]
    fn mean_projects_to_zero() {
        let x = array![[1.0, 0.0, 2.0], [0.0, 1.0, 1.0], [3.0, 1.0, 0.0], [2.0, 2.0, 2.0]];
        let p = pca(x.view(), 2).unwrap();
        assert!(p.project(&p.mean).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gram_route_agrees_with_covariance_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let wide = Array2::from_shape_fn((4, 6), |_| StandardNormal.sample(&mut rng));
        let p = pca(wide.view(), 3).unwrap();
        // covariance route on the same data via explicit eigendecomposition
        let mean = wide.mean_axis(Axis(0)).unwrap();
        let xc = &wide - &mean;
        let cov = xc.t().dot(&xc) / 3.0;
        for c in 0..3 {
            let v = p.components.row(c).to_owned();
            let cv = cov.dot(&v);
            for (a, b) in cv.iter().zip(v.iter()) {
                assert!((a - p.eigenvalues[c] * b).abs() < 1e-10);
            }
        }
        assert!(p.eigenvalues.windows(2).into_iter().all(|w| w[0] >= w[1]));
    }
}
