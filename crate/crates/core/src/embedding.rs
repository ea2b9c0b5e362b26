//! Linear Wasserstein (LWp) and linear TLp (LTLp) embeddings.
//!
//! Each signal is represented by its optimal map from a fixed reference
//! `(sigma, h)`. Coordinate `j` of the embedding is
//! `(T(x_j) - x_j) rho_j^{1/p}` for the spatial block and
//! `s (f(T(x_j)) - h(x_j)) rho_j^{1/p}` for the channel block, where `s` is
//! the channel scale. Plain `l^p` distances between embeddings then
//! approximate the transport distance and are exact against the reference.

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    DiscreteMeasure, DistanceMatrix, DistanceMethod, EmbeddingVector, TLpSignal, TransportMap,
};
use crate::solvers::{sinkhorn_grid_barycentric, Solver};

/// Coordinates closer than this are treated as the same grid node.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Wp,
    Tlp,
}

/// The reference `(sigma, h)`; `h` has zero columns for [`ReferenceKind::Wp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    signal: TLpSignal,
    kind: ReferenceKind,
}

impl ReferenceSignal {
    pub fn new(signal: TLpSignal, kind: ReferenceKind) -> Result<Self> {
        if kind == ReferenceKind::Wp && signal.channels() != 0 {
            return Err(Error::InvalidInput("a Wasserstein reference carries no channels".into()));
        }
        Ok(Self { signal, kind })
    }

    /// Wasserstein reference from a bare measure.
    pub fn from_measure(measure: DiscreteMeasure) -> Self {
        let n = measure.len();
        let signal = TLpSignal::new(measure, Array2::zeros((n, 0))).expect("empty channel block");
        Self {
            signal,
            kind: ReferenceKind::Wp,
        }
    }

    pub fn signal(&self) -> &TLpSignal {
        &self.signal
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        self.signal.measure()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.signal.values()
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub fn method(&self) -> DistanceMethod {
        match self.kind {
            ReferenceKind::Wp => DistanceMethod::Lwp,
            ReferenceKind::Tlp => DistanceMethod::Ltlp,
        }
    }
}

fn same_grid(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> bool {
    a.dim() == b.dim() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= GRID_TOL)
}

/// Average reference over signals sharing one support grid.
///
/// `sigma` is the mean of the input weights. For the TLp kind `h` is the
/// pointwise mean of the channel values; the Wasserstein kind drops channels.
pub fn build_reference(signals: &[TLpSignal], kind: ReferenceKind) -> Result<ReferenceSignal> {
    let first = signals.first().ok_or(Error::EmptySupport)?;
    let pts = first.measure().points();
    let m = first.channels();
    let n = first.len();
    let mut w = Array1::<f64>::zeros(n);
    let mut h = Array2::<f64>::zeros((n, if kind == ReferenceKind::Tlp { m } else { 0 }));
    for s in signals {
        if !same_grid(pts, s.measure().points()) {
            return Err(Error::GridMismatch);
        }
        if kind == ReferenceKind::Tlp && s.channels() != m {
            return Err(Error::ChannelMismatch(m, s.channels()));
        }
        w += &s.measure().weights();
        if kind == ReferenceKind::Tlp {
            h += &s.values();
        }
    }
    let count = signals.len() as f64;
    h /= count;
    let measure = if first.measure().is_uniform()
        && signals.iter().all(|s| s.measure().weights() == first.measure().weights())
    {
        first.measure().clone()
    } else {
        DiscreteMeasure::from_masses(pts.to_owned(), w)?
    };
    ReferenceSignal::new(TLpSignal::new(measure, h)?, kind)
}

/// Reference from bare measures on a common grid (the LWp recipe).
pub fn build_measure_reference(measures: &[DiscreteMeasure]) -> Result<ReferenceSignal> {
    let signals = measures
        .iter()
        .map(|m| TLpSignal::new(m.clone(), Array2::zeros((m.len(), 0))))
        .collect::<Result<Vec<_>>>()?;
    build_reference(&signals, ReferenceKind::Wp)
}

/// Settings shared by every embedding call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub p: f64,
    pub solver: Solver,
    pub channel_scale: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            solver: Solver::Exact,
            channel_scale: 1.0,
        }
    }
}

/// Nodes of a tensor grid with x varying fastest, if `points` is one.
pub fn tensor_axes(points: ArrayView2<'_, f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    if points.ncols() != 2 || points.nrows() < 2 {
        return None;
    }
    let y0 = points[[0, 1]];
    let nx = points
        .column(1)
        .iter()
        .take_while(|&&y| (y - y0).abs() <= GRID_TOL)
        .count();
    if nx == 0 || points.nrows() % nx != 0 {
        return None;
    }
    let ny = points.nrows() / nx;
    let xs: Vec<f64> = (0..nx).map(|i| points[[i, 0]]).collect();
    let ys: Vec<f64> = (0..ny).map(|j| points[[j * nx, 1]]).collect();
    for j in 0..ny {
        for i in 0..nx {
            let r = j * nx + i;
            if (points[[r, 0]] - xs[i]).abs() > GRID_TOL || (points[[r, 1]] - ys[j]).abs() > GRID_TOL {
                return None;
            }
        }
    }
    Some((xs, ys))
}

/// Optimal map from the reference to `signal` in the reference's geometry.
pub fn reference_map(signal: &TLpSignal, reference: &ReferenceSignal, cfg: &EmbedConfig) -> Result<(TransportMap, bool)> {
    let sigma = reference.measure();
    match reference.kind() {
        ReferenceKind::Wp => {
            let mu = signal.measure();
            if sigma.dim() != mu.dim() {
                return Err(Error::DimMismatch(sigma.dim(), mu.dim()));
            }
            if let Solver::Sinkhorn(sk) = cfg.solver.resolve(sigma.len(), mu.len()) {
                if cfg.p == 2.0 && same_grid(sigma.points(), mu.points()) {
                    if let Some((xs, ys)) = tensor_axes(sigma.points()) {
                        let r = sinkhorn_grid_barycentric(sigma.weights(), mu.weights(), &xs, &ys, &sk)?;
                        return Ok((
                            TransportMap {
                                images: r.images,
                                assignment: None,
                            },
                            r.converged,
                        ));
                    }
                }
            }
            let plan = crate::metric::wasserstein_plan(sigma, mu, cfg.p, &cfg.solver)?;
            let map = crate::solvers::barycentric_map(&plan, mu.points())?;
            Ok((map, plan.status.converged))
        }
        ReferenceKind::Tlp => {
            if reference.signal().channels() != signal.channels() {
                return Err(Error::ChannelMismatch(reference.signal().channels(), signal.channels()));
            }
            let plan = crate::metric::tlp_plan(reference.signal(), signal, cfg.p, &cfg.solver, cfg.channel_scale)?;
            let lifted = crate::measures::lift(signal, cfg.channel_scale)?;
            let mut map = crate::solvers::barycentric_map(&plan, lifted.measure().points())?;
            let d = sigma.dim();
            map.images
                .slice_mut(s![.., d..])
                .mapv_inplace(|v| v / cfg.channel_scale);
            Ok((map, plan.status.converged))
        }
    }
}

/// Embedding of a map's images relative to the reference.
pub fn embedding_from_map(map: &TransportMap, reference: &ReferenceSignal, cfg: &EmbedConfig) -> Result<EmbeddingVector> {
    let sigma = reference.measure();
    let (n, d) = (sigma.len(), sigma.dim());
    let m = match reference.kind() {
        ReferenceKind::Wp => 0,
        ReferenceKind::Tlp => reference.signal().channels(),
    };
    if map.images.nrows() != n || map.images.ncols() < d + m {
        return Err(Error::ShapeMismatch);
    }
    let w = sigma.weights().to_owned();
    let scale: Array1<f64> = w.mapv(|r| r.powf(1.0 / cfg.p));
    let mut spatial = &map.images.slice(s![.., ..d]) - &sigma.points();
    let mut channel = if m > 0 {
        (&map.images.slice(s![.., d..d + m]) - &reference.values()) * cfg.channel_scale
    } else {
        Array2::zeros((n, 0))
    };
    Zip::from(spatial.rows_mut()).and(&scale).for_each(|mut r, &c| r *= c);
    Zip::from(channel.rows_mut()).and(&scale).for_each(|mut r, &c| r *= c);
    Ok(EmbeddingVector {
        spatial,
        channel,
        weights: w,
        exponent: cfg.p,
        converged: true,
    })
}

/// Embed one signal against the reference.
///
/// A signal identical to the reference embeds to the zero vector directly,
/// since the identity is its optimal map.
pub fn embed(signal: &TLpSignal, reference: &ReferenceSignal, cfg: &EmbedConfig) -> Result<EmbeddingVector> {
    let sigma = reference.measure();
    let m = match reference.kind() {
        ReferenceKind::Wp => 0,
        ReferenceKind::Tlp => signal.channels(),
    };
    let identical = signal.measure() == sigma
        && (reference.kind() == ReferenceKind::Wp || signal.values() == reference.values());
    if identical {
        return Ok(EmbeddingVector::zeros(
            sigma.len(),
            sigma.dim(),
            m,
            sigma.weights().to_owned(),
            cfg.p,
        ));
    }
    let (map, converged) = reference_map(signal, reference, cfg)?;
    let mut e = embedding_from_map(&map, reference, cfg)?;
    e.converged = converged;
    Ok(e)
}

/// Embed every signal in parallel. Returns the embeddings and the number of
/// transport problems solved (one per signal).
pub fn embed_all(
    signals: &[TLpSignal],
    reference: &ReferenceSignal,
    cfg: &EmbedConfig,
) -> Result<(Vec<EmbeddingVector>, usize)> {
    let out = signals
        .par_iter()
        .map(|s| embed(s, reference, cfg))
        .collect::<Result<Vec<_>>>()?;
    let calls = out.len();
    Ok((out, calls))
}

/// `l^p` distance between two embeddings of the same shape.
pub fn linear_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.spatial.dim() != b.spatial.dim() || a.channel.dim() != b.channel.dim() {
        return Err(Error::ShapeMismatch);
    }
    if a.exponent != b.exponent {
        return Err(Error::InvalidInput("embeddings use different exponents".into()));
    }
    let p = a.exponent;
    let sum: f64 = a
        .spatial
        .iter()
        .zip(b.spatial.iter())
        .chain(a.channel.iter().zip(b.channel.iter()))
        .map(|(x, y)| crate::solvers::pow_abs(x - y, p))
        .sum();
    Ok(crate::metric::root(sum, p))
}

/// All pairwise linear distances; no transport problems are solved here.
pub fn pairwise_linear_distances(
    embeddings: &[EmbeddingVector],
    method: DistanceMethod,
) -> Result<DistanceMatrix> {
    if let Some(first) = embeddings.first() {
        for e in embeddings {
            if e.spatial.dim() != first.spatial.dim()
                || e.channel.dim() != first.channel.dim()
                || e.exponent != first.exponent
            {
                return Err(Error::ShapeMismatch);
            }
        }
    }
    let n = embeddings.len();
    let pairs = crate::measures::upper_pairs(n);
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| linear_distance(&embeddings[i], &embeddings[j]))
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::from_upper(n, method, &upper)
}

/// Embeddings stacked as rows of a matrix.
pub fn embedding_matrix(embeddings: &[EmbeddingVector]) -> Result<Array2<f64>> {
    let first = embeddings.first().ok_or(Error::EmptyTrain)?;
    let len = first.flat_len();
    let mut x = Array2::zeros((embeddings.len(), len));
    for (i, e) in embeddings.iter().enumerate() {
        if e.flat_len() != len {
            return Err(Error::ShapeMismatch);
        }
        x.row_mut(i).assign(&Array1::from(e.to_flat()));
    }
    Ok(x)
}
