use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Unweighted mean of per-class F1 over classes present in either vector.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let classes: BTreeSet<usize> = pred.iter().chain(truth.iter()).copied().collect();
    if classes.is_empty() {
        return Err(Error::Undefined("macro-F1 of empty label vectors"));
    }
    let mut total = 0.0;
    for &c in &classes {
        let tp = pred.iter().zip(truth).filter(|(p, t)| **p == c && **t == c).count();
        let fp = pred.iter().zip(truth).filter(|(p, t)| **p == c && **t != c).count();
        let fneg = pred.iter().zip(truth).filter(|(p, t)| **p != c && **t == c).count();
        let denom = 2 * tp + fp + fneg;
        total += if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
    }
    Ok(total / classes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
    }

    #[test]
    fn half_right() {
        // class 0: tp 1, fp 1, fn 1 -> 0.5; same for class 1
        assert_eq!(macro_f1(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.5);
    }

    #[test]
    fn one_class_predicted() {
        // class 0: precision 1/2, recall 1 -> 2/3; class 1 -> 0
        let f = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch() {
        assert!(matches!(macro_f1(&[0], &[0, 1]), Err(Error::LengthMismatch(1, 2))));
    }
}
