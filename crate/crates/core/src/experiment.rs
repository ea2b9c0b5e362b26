//! End-to-end pipelines shared by the CLI and the benchmarks.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::analysis::{adjusted_rand_index, kmeans, repeat_rng};
use crate::embedding::{build_measure_reference, build_reference, embed_all, EmbedConfig, ReferenceKind, ReferenceSignal};
use crate::error::{Error, Result};
use crate::measures::{upper_pairs, DiscreteMeasure, DistanceMatrix, DistanceMethod, EmbeddingVector, TLpSignal};
use crate::metric::{root, tlp_distance, wasserstein_distance};
use crate::solvers::pow_abs;
use crate::synth::{default_chi, normalize_for_wp};

/// Restarts of k-means++ per clustering.
pub const KMEANS_RESTARTS: usize = 10;

/// Lloyd iteration cap.
pub const KMEANS_MAX_ITER: usize = 300;

/// Probability measures for the Wasserstein baselines: each signal is
/// shifted by `|min f| + 0.01`, averaged over channels and normalized.
pub fn wp_measures(signals: &[TLpSignal]) -> Result<Vec<DiscreteMeasure>> {
    signals.iter().map(|s| normalize_for_wp(s, default_chi(s))).collect()
}

/// Linear embeddings plus the reference and the number of transport solves.
pub struct Embedded {
    pub embeddings: Vec<EmbeddingVector>,
    pub reference: ReferenceSignal,
    pub solver_calls: usize,
}

/// LTLp embeddings against the mean signal.
pub fn ltlp_embeddings(signals: &[TLpSignal], cfg: &EmbedConfig) -> Result<Embedded> {
    let reference = build_reference(signals, ReferenceKind::Tlp)?;
    let (embeddings, solver_calls) = embed_all(signals, &reference, cfg)?;
    Ok(Embedded {
        embeddings,
        reference,
        solver_calls,
    })
}

/// LWp embeddings of the normalized signals against their mean measure.
pub fn lwp_embeddings(signals: &[TLpSignal], cfg: &EmbedConfig) -> Result<Embedded> {
    let ms = wp_measures(signals)?;
    let reference = build_measure_reference(&ms)?;
    let bare = ms
        .into_iter()
        .map(|m| {
            let n = m.len();
            TLpSignal::new(m, Array2::zeros((n, 0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (embeddings, solver_calls) = embed_all(&bare, &reference, cfg)?;
    Ok(Embedded {
        embeddings,
        reference,
        solver_calls,
    })
}

/// Embeddings for `method`, which must be LWP or LTLP.
pub fn linear_embeddings(signals: &[TLpSignal], method: DistanceMethod, cfg: &EmbedConfig) -> Result<Embedded> {
    match method {
        DistanceMethod::Ltlp => ltlp_embeddings(signals, cfg),
        DistanceMethod::Lwp => lwp_embeddings(signals, cfg),
        other => Err(Error::InvalidInput(format!("{} has no linear embedding", other.as_str()))),
    }
}

/// `(sum_j rho_j |f_j - g_j|^p)^{1/p}` for signals on a common support.
pub fn lp_distance(a: &TLpSignal, b: &TLpSignal, p: f64) -> Result<f64> {
    if a.measure() != b.measure() {
        return Err(Error::GridMismatch);
    }
    if a.channels() != b.channels() {
        return Err(Error::ChannelMismatch(a.channels(), b.channels()));
    }
    let w = a.measure().weights();
    let mut sum = 0.0;
    for (j, (ra, rb)) in a.values().rows().into_iter().zip(b.values().rows()).enumerate() {
        let s: f64 = ra.iter().zip(rb.iter()).map(|(x, y)| pow_abs(x - y, p)).sum();
        sum += w[j] * s;
    }
    Ok(root(sum, p))
}

/// Full pairwise matrix, plus the number of transport problems solved.
///
/// LWP and LTLP solve one problem per signal; WP and TLP one per pair.
/// `progress` is called after each pairwise solve with the running count.
pub fn distance_matrix(
    signals: &[TLpSignal],
    method: DistanceMethod,
    cfg: &EmbedConfig,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<(DistanceMatrix, usize)> {
    let n = signals.len();
    let pairs = upper_pairs(n);
    let total = pairs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let tick = || {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        progress(k, total);
    };
    match method {
        DistanceMethod::Lp => {
            let upper = pairs
                .par_iter()
                .map(|&(i, j)| lp_distance(&signals[i], &signals[j], cfg.p))
                .collect::<Result<Vec<_>>>()?;
            Ok((DistanceMatrix::from_upper(n, method, &upper)?, 0))
        }
        DistanceMethod::Wp => {
            let ms = wp_measures(signals)?;
            let upper = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let d = wasserstein_distance(&ms[i], &ms[j], cfg.p, &cfg.solver);
                    tick();
                    d
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((DistanceMatrix::from_upper(n, method, &upper)?, total))
        }
        DistanceMethod::Tlp => {
            let upper = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let d = tlp_distance(&signals[i], &signals[j], cfg.p, &cfg.solver, cfg.channel_scale);
                    tick();
                    d
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((DistanceMatrix::from_upper(n, method, &upper)?, total))
        }
        DistanceMethod::Lwp | DistanceMethod::Ltlp => {
            let e = linear_embeddings(signals, method, cfg)?;
            let d = crate::embedding::pairwise_linear_distances(&e.embeddings, method)?;
            Ok((d, e.solver_calls))
        }
        DistanceMethod::Cor => Err(Error::InvalidInput(
            "COR compares return windows, use the finance pipeline".into(),
        )),
    }
}

/// K-means on the rows of `x` for `repeats` seeds, scored by ARI against
/// `truth`. Repeat `r` draws from the stream `(seed, r)`.
pub fn cluster_ari(
    x: ArrayView2<'_, f64>,
    truth: &[usize],
    k: usize,
    seed: u64,
    repeats: usize,
) -> Result<Vec<(Vec<usize>, f64)>> {
    (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = repeat_rng(seed, r as u64);
            let km = kmeans(x, k, &mut rng, KMEANS_MAX_ITER, KMEANS_RESTARTS)?;
            let ari = adjusted_rand_index(&km.labels, truth)?;
            Ok((km.labels, ari))
        })
        .collect()
}

/// Median of a nonempty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
