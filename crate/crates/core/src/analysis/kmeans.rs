use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared distances from rows to their assigned centers.
pub fn inertia(x: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    x.rows()
        .into_iter()
        .zip(labels)
        .map(|(r, &l)| sq_dist(r, centers.row(l)))
        .sum()
}

fn seed_centers<R: Rng + ?Sized>(x: ArrayView2<'_, f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = x.rows().into_iter().map(|r| sq_dist(r, x.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if t < d {
                    idx = i;
                    break;
                }
                t -= d;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, x.row(pick)));
        }
    }
    centers
}

fn assign(x: ArrayView2<'_, f64>, centers: &Array2<f64>, labels: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (i, r) in x.rows().into_iter().enumerate() {
        let mut best = (f64::INFINITY, 0usize);
        for (c, cr) in centers.rows().into_iter().enumerate() {
            let d = sq_dist(r, cr);
            if d < best.0 {
                best = (d, c);
            }
        }
        labels[i] = best.1;
        total += best.0;
    }
    total
}

fn single_run<R: Rng + ?Sized>(x: ArrayView2<'_, f64>, k: usize, rng: &mut R, max_iter: usize) -> KMeansResult {
    let n = x.nrows();
    let mut centers = seed_centers(x, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let cost = assign(x, &centers, &mut next);
        trace.push(cost);
        if next == labels || iterations >= max_iter {
            labels.copy_from_slice(&next);
            break;
        }
        labels.copy_from_slice(&next);
        iterations += 1;
        let mut sums = Array2::<f64>::zeros(centers.dim());
        let mut counts = vec![0usize; k];
        for (r, &l) in x.rows().into_iter().zip(&labels) {
            let mut s = sums.row_mut(l);
            s += &r;
            counts[l] += 1;
        }
        for c in 0..k {
            // an empty cluster keeps its previous center
            if counts[c] > 0 {
                let mean = &sums.row(c) / counts[c] as f64;
                centers.row_mut(c).assign(&mean);
            }
        }
    }
    let inertia = *trace.last().expect("at least one assignment");
    KMeansResult {
        labels,
        centers,
        inertia,
        iterations,
        inertia_trace: trace,
    }
}

/// K-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` updates have run. With `n_init > 1` the run with
/// the lowest inertia is kept.
pub fn kmeans<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut R,
    max_iter: usize,
    n_init: usize,
) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("K = {k} must be in 1..={n}")));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..n_init.max(1) {
        let r = single_run(x, k, rng, max_iter);
        if best.as_ref().map_or(true, |b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one run"))
}
