//! Displacement interpolation, inversion of embeddings and PCA mode sweeps.

use std::collections::HashMap;

use ndarray::{s, Array1, Array2};

use crate::analysis::pca;
use crate::embedding::{embedding_matrix, EmbedConfig, ReferenceKind, ReferenceSignal};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, EmbeddingVector, TLpSignal, TransportMap};

/// Spatial coordinates are rounded to this resolution before atoms are
/// grouped into a common fibre.
pub const FIBRE_TOL: f64 = 1e-9;

/// Point `t` on the path from the reference to the map's target.
///
/// Atom `i` moves to `(1 - t) x_i + t T(x_i)` and carries
/// `(1 - t) h(x_i) + t f(T(x_i))`; weights are unchanged. Atoms may
/// coincide spatially, so the result is in general a lifted measure rather
/// than the graph of a function.
pub fn interpolate(reference: &ReferenceSignal, map: &TransportMap, t: f64) -> Result<TLpSignal> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    let sigma = reference.measure();
    let (n, d) = (sigma.len(), sigma.dim());
    let m = reference.values().ncols();
    if map.images.nrows() != n || map.images.ncols() != d + m {
        return Err(Error::ShapeMismatch);
    }
    let pts = &sigma.points() * (1.0 - t) + &map.images.slice(s![.., ..d]) * t;
    let vals = &reference.values() * (1.0 - t) + &map.images.slice(s![.., d..]) * t;
    let measure = DiscreteMeasure::new(pts, sigma.weights().to_owned())?;
    TLpSignal::new(measure, vals)
}

fn measure_from_masses(points: Array2<f64>, masses: Array1<f64>) -> Result<DiscreteMeasure> {
    match DiscreteMeasure::new(points.clone(), masses.clone()) {
        Ok(m) => Ok(m),
        Err(_) => DiscreteMeasure::from_masses(points, masses),
    }
}

/// Map an embedding back to a signal.
///
/// Lifted images `v_j / rho_j^{1/p} + (x_j, h_j)` are formed first (the
/// channel block also divided by the channel scale). Atoms whose spatial
/// coordinates agree after rounding to [`FIBRE_TOL`] are merged: weights add
/// and channel values are averaged with those weights. Atoms with zero
/// reference weight carry no information and are dropped.
pub fn invert_embedding(
    v: &EmbeddingVector,
    reference: &ReferenceSignal,
    cfg: &EmbedConfig,
) -> Result<TLpSignal> {
    let sigma = reference.measure();
    let (n, d) = (sigma.len(), sigma.dim());
    let m = reference.values().ncols();
    if v.spatial.dim() != (n, d) || v.channel.dim() != (n, m) {
        return Err(Error::ShapeMismatch);
    }
    let p = cfg.p;
    let mut keys: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut pts: Vec<Array1<f64>> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    let mut sums: Vec<Array1<f64>> = Vec::new();
    for j in 0..n {
        let rho = sigma.weights()[j];
        if rho <= 0.0 {
            continue;
        }
        let c = rho.powf(1.0 / p);
        let x = &v.spatial.row(j) / c + &sigma.point(j);
        let f = if m > 0 {
            &v.channel.row(j) / (c * cfg.channel_scale) + &reference.values().row(j)
        } else {
            Array1::zeros(0)
        };
        let key: Vec<i64> = x.iter().map(|&c| (c / FIBRE_TOL).round() as i64).collect();
        match keys.get(&key) {
            Some(&g) => {
                mass[g] += rho;
                sums[g].scaled_add(rho, &f);
            }
            None => {
                keys.insert(key, pts.len());
                pts.push(x);
                mass.push(rho);
                sums.push(f * rho);
            }
        }
    }
    let g = pts.len();
    let mut points = Array2::zeros((g, d));
    let mut values = Array2::zeros((g, m));
    for k in 0..g {
        points.row_mut(k).assign(&pts[k]);
        values.row_mut(k).assign(&(&sums[k] / mass[k]));
    }
    let measure = measure_from_masses(points, Array1::from(mass))?;
    TLpSignal::new(measure, values)
}

/// Signals along principal component `component` of the embeddings, at
/// `mean + s sqrt(lambda) e` for each `s` in `stddevs`.
pub fn mode_sweep(
    embeddings: &[EmbeddingVector],
    component: usize,
    stddevs: &[f64],
    reference: &ReferenceSignal,
    cfg: &EmbedConfig,
) -> Result<Vec<TLpSignal>> {
    let x = embedding_matrix(embeddings)?;
    let decomposition = pca(x.view(), component + 1).map_err(|e| match e {
        Error::RankError { rank, .. } => Error::NoSuchComponent {
            index: component,
            rank,
        },
        other => other,
    })?;
    let e = decomposition.components.row(component);
    let sd = decomposition.eigenvalues[component].sqrt();
    let sigma = reference.measure();
    let (n, d) = (sigma.len(), sigma.dim());
    let m = match reference.kind() {
        ReferenceKind::Wp => 0,
        ReferenceKind::Tlp => reference.values().ncols(),
    };
    stddevs
        .iter()
        .map(|&s| {
            let flat = &decomposition.mean + &(&e * (s * sd));
            let v = EmbeddingVector::from_flat(
                flat.as_slice().expect("contiguous"),
                n,
                d,
                m,
                sigma.weights().to_owned(),
                cfg.p,
            )?;
            invert_embedding(&v, reference, cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{build_reference, embed};
    use crate::measures::make_uniform;
    use crate::metric::tlp_map;
    use crate::solvers::Solver;
    use ndarray::array;

    fn remark() -> (ReferenceSignal, TLpSignal) {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let a = TLpSignal::scalar(mu.clone(), array![0.0, 10.0]).unwrap();
        let b = TLpSignal::scalar(mu, array![10.0, 0.0]).unwrap();
        (ReferenceSignal::new(a, ReferenceKind::Tlp).unwrap(), b)
    }

    #[test]
    fn endpoints() {
        let (r, b) = remark();
        let map = tlp_map(r.signal(), &b, 2.0, &Solver::Exact, 1.0).unwrap();
        assert_eq!(&interpolate(&r, &map, 0.0).unwrap(), r.signal());
        let end = interpolate(&r, &map, 1.0).unwrap();
        // atom 0 of the reference lands on atom 1 of the target and vice versa
        assert_eq!(end.measure().points(), array![[1.0], [0.0]]);
        assert_eq!(end.values(), array![[0.0], [10.0]]);
    }

    #[test]
    fn midpoint_is_not_a_function() {
        let (r, b) = remark();
        let map = tlp_map(r.signal(), &b, 2.0, &Solver::Exact, 1.0).unwrap();
        let mid = interpolate(&r, &map, 0.5).unwrap();
        assert_eq!(mid.measure().points(), array![[0.5], [0.5]]);
        assert_eq!(mid.values(), array![[0.0], [10.0]]);
    }

    #[test]
    fn t_out_of_range() {
        let (r, b) = remark();
        let map = tlp_map(r.signal(), &b, 2.0, &Solver::Exact, 1.0).unwrap();
        assert!(matches!(interpolate(&r, &map, 1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn zero_vector_inverts_to_reference() {
        let (r, _) = remark();
        let v = EmbeddingVector::zeros(2, 1, 1, r.measure().weights().to_owned(), 2.0);
        let s = invert_embedding(&v, &r, &EmbedConfig::default()).unwrap();
        assert_eq!(&s, r.signal());
    }

    #[test]
    fn shared_fibre_is_averaged() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let h = TLpSignal::scalar(mu, array![0.0, 10.0]).unwrap();
        let r = ReferenceSignal::new(h, ReferenceKind::Tlp).unwrap();
        // move atom 1 onto atom 0, keep both values
        let c = 0.5f64.sqrt();
        let v = EmbeddingVector {
            spatial: array![[0.0], [-1.0 * c]],
            channel: array![[0.0], [0.0]],
            weights: array![0.5, 0.5],
            exponent: 2.0,
            converged: true,
        };
        let s = invert_embedding(&v, &r, &EmbedConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.measure().weights()[0], 1.0);
        assert!((s.values()[[0, 0]] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_small_signal() {
        let mu = make_uniform(array![[0.0], [0.5], [1.0]]).unwrap();
        let r = build_reference(
            &[TLpSignal::scalar(mu, array![0.0, 1.0, 0.0]).unwrap()],
            ReferenceKind::Tlp,
        )
        .unwrap();
        let target = TLpSignal::scalar(make_uniform(array![[0.2], [0.6], [0.9]]).unwrap(), array![1.0, 2.0, -1.0]).unwrap();
        let cfg = EmbedConfig::default();
        let e = embed(&target, &r, &cfg).unwrap();
        let back = invert_embedding(&e, &r, &cfg).unwrap();
        let mut got: Vec<(f64, f64)> = (0..3).map(|i| (back.measure().points()[[i, 0]], back.values()[[i, 0]])).collect();
        got.sort_by(|a, b| a.0.total_cmp(&b.0));
        let want = [(0.2, 1.0), (0.6, 2.0), (0.9, -1.0)];
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_sweep_follows_the_line() {
        let mu = make_uniform(array![[0.0], [1.0]]).unwrap();
        let r = ReferenceSignal::new(TLpSignal::scalar(mu, array![0.0, 0.0]).unwrap(), ReferenceKind::Tlp).unwrap();
        let w = r.measure().weights().to_owned();
        let a = EmbeddingVector::from_flat(&[0.0, 0.0, 1.0, 1.0], 2, 1, 1, w.clone(), 2.0).unwrap();
        let b = EmbeddingVector::from_flat(&[0.0, 0.0, 3.0, 3.0], 2, 1, 1, w, 2.0).unwrap();
        let cfg = EmbedConfig::default();
        let out = mode_sweep(&[a, b], 0, &[-1.0, 0.0, 1.0], &r, &cfg).unwrap();
        assert_eq!(out.len(), 3);
        // centred rows are +-(0, 0, 1, 1): sample variance 4 along (0, 0, 1, 1) / sqrt(2)
        let scale = 0.5f64.sqrt();
        let mean_val = 2.0 / scale;
        let sd = 2.0 / 2.0f64.sqrt() / scale;
        assert!((out[1].values()[[0, 0]] - mean_val).abs() < 1e-9);
        let lo = out[0].values()[[0, 0]];
        let hi = out[2].values()[[0, 0]];
        assert!((hi - lo - 2.0 * sd).abs() < 1e-9);
        assert!(matches!(
            mode_sweep(&[EmbeddingVector::zeros(2, 1, 1, array![0.5, 0.5], 2.0)], 0, &[0.0], &r, &cfg),
            Err(Error::NoSuchComponent { index: 0, rank: 0 })
        ));
    }
}
