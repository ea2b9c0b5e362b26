use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{knn_classify, macro_f1, repeat_rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CvReport {
    /// Macro-F1 of the pooled out-of-fold predictions, one per repeat.
    pub scores: Vec<f64>,
    /// False when some class had fewer members than folds.
    pub stratified: bool,
}

fn fold_ids(labels: &[usize], folds: usize, stratified: bool, rng: &mut impl rand::Rng) -> Vec<usize> {
    let n = labels.len();
    let mut fold = vec![0usize; n];
    if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        // deal each shuffled class round-robin, continuing where the last class stopped
        let mut next = 0usize;
        for members in by_class.values_mut() {
            members.shuffle(rng);
            for &i in members.iter() {
                fold[i] = next % folds;
                next += 1;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for (pos, &i) in idx.iter().enumerate() {
            fold[i] = pos % folds;
        }
    }
    fold
}

/// Repeated k-fold evaluation of a `k_neighbors`-NN classifier.
///
/// Folds are stratified by label unless a class is smaller than `folds`.
/// Repeat `r` uses the RNG stream `(seed, r)`, so scores do not depend on
/// scheduling.
pub fn cross_validate(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    folds: usize,
    repeats: usize,
    seed: u64,
    k_neighbors: usize,
) -> Result<CvReport> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    if folds < 2 || n < folds {
        return Err(Error::InvalidInput(format!("need 2 <= folds ({folds}) <= samples ({n})")));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in y {
        *counts.entry(l).or_default() += 1;
    }
    let stratified = counts.values().all(|&c| c >= folds);
    if !stratified {
        log::warn!("a class has fewer than {folds} members; using unstratified folds");
    }
    let scores = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = repeat_rng(seed, r as u64);
            let fold = fold_ids(y, folds, stratified, &mut rng);
            let mut pred = vec![0usize; n];
            for f in 0..folds {
                let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
                let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
                if test.is_empty() {
                    continue;
                }
                let tx = x.select(Axis(0), &train);
                let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
                let sx = x.select(Axis(0), &test);
                let k = k_neighbors.min(train.len());
                let p = knn_classify(tx.view(), &ty, sx.view(), k)?;
                for (&i, l) in test.iter().zip(p) {
                    pred[i] = l;
                }
            }
            macro_f1(&pred, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport { scores, stratified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn two_clusters() -> (Array2<f64>, Vec<usize>) {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| {
            let base = if i < 10 { 0.0 } else { 100.0 };
            base + (i * 7 + j * 3) as f64 % 5.0 * 0.1
        });
        let y = (0..20).map(|i| usize::from(i >= 10)).collect();
        (x, y)
    }

    #[test]
    fn separable_scores_one() {
        let (x, y) = two_clusters();
        let r = cross_validate(x.view(), &y, 5, 100, 3, 1).unwrap();
        assert_eq!(r.scores.len(), 100);
        assert!(r.stratified);
        assert!(r.scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn deterministic() {
        let (mut x, y) = two_clusters();
        x[[0, 0]] = 100.0;
        x[[15, 0]] = 0.0;
        let a = cross_validate(x.view(), &y, 5, 10, 9, 1).unwrap();
        let b = cross_validate(x.view(), &y, 5, 10, 9, 1).unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn small_class_falls_back() {
        let (x, mut y) = two_clusters();
        y[0] = 2;
        let r = cross_validate(x.view(), &y, 5, 2, 1, 1).unwrap();
        assert!(!r.stratified);
    }
}
