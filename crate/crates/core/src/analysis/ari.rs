use std::collections::HashMap;

use crate::error::{Error, Result};

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1 when the expected and maximal indices coincide, which only
/// happens for identical trivial partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_relabelled() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1, 2], &[5, 5, 3, 3, 9]).unwrap(), 1.0);
    }

    #[test]
    fn crossed_pairs() {
        // pairs: none shared, row and column sums 2 each -> (0 - 1/3)/(1 - 1/3)
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn against_pair_counting() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = 12;
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            // Hubert-Arabie from raw pair agreements
            let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    let sa = a[i] == a[j];
                    let sb = b[i] == b[j];
                    in_a += sa as u8 as f64;
                    in_b += sb as u8 as f64;
                    both += (sa && sb) as u8 as f64;
                }
            }
            let pairs = (n * (n - 1) / 2) as f64;
            let exp = in_a * in_b / pairs;
            let want = (both - exp) / (0.5 * (in_a + in_b) - exp);
            let got = adjusted_rand_index(&a, &b).unwrap();
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatch() {
        assert!(adjusted_rand_index(&[0], &[0, 1]).is_err());
    }
}
