use std::collections::BTreeMap;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Majority vote among the `k` nearest training rows (Euclidean).
///
/// Equal distances favour the lower training index; tied votes go to the
/// smallest label.
pub fn knn_classify(
    train_x: ArrayView2<'_, f64>,
    train_y: &[usize],
    test_x: ArrayView2<'_, f64>,
    k: usize,
) -> Result<Vec<usize>> {
    let n = train_x.nrows();
    if n == 0 {
        return Err(Error::EmptyTrain);
    }
    if train_y.len() != n {
        return Err(Error::LengthMismatch(n, train_y.len()));
    }
    if train_x.ncols() != test_x.ncols() {
        return Err(Error::DimMismatch(train_x.ncols(), test_x.ncols()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} must be in 1..={n}")));
    }
    let mut out = Vec::with_capacity(test_x.nrows());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for t in test_x.rows() {
        dist.clear();
        for (i, r) in train_x.rows().into_iter().enumerate() {
            let d: f64 = r.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d, i));
        }
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &(_, i) in &dist[..k] {
            *votes.entry(train_y[i]).or_default() += 1;
        }
        let best = votes
            .iter()
            .fold((usize::MAX, 0usize), |acc, (&label, &count)| {
                if count > acc.1 {
                    (label, count)
                } else {
                    acc
                }
            });
        out.push(best.0);
    }
    Ok(out)
}
