//! Domain types shared by every module: measures, signals, couplings, maps,
//! embeddings and distance matrices.
//!
//! Everything here is immutable once constructed and validated, so values can
//! be shared freely between rayon workers.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;
/// Absolute tolerance for marginal checks on plans.
pub const MARGINAL_TOL: f64 = 1e-9;

/// A probability measure with finitely many weighted atoms in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Array2<f64>,
    weights: Array1<f64>,
    uniform: bool,
}

impl DiscreteMeasure {
    /// Build a measure from an `n x d` point matrix and `n` weights.
    ///
    /// Weights must be nonnegative and sum to one within [`MASS_TOL`].
    pub fn new(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        if weights.len() != n {
            return Err(Error::LengthMismatch(n, weights.len()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > MASS_TOL * (n as f64).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let w0 = weights[0];
        let uniform = weights.iter().all(|w| *w == w0);
        Ok(Self {
            points,
            weights,
            uniform,
        })
    }

    /// Normalize nonnegative masses to a probability vector first.
    pub fn from_masses(points: Array2<f64>, masses: Array1<f64>) -> Result<Self> {
        let total: f64 = masses.sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidInput(format!("total mass {total} is not positive")));
        }
        Self::new(points, masses / total)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    /// True when every atom carries the same weight.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

/// Uniform probability measure over the given points (one per row).
pub fn make_uniform(points: Array2<f64>) -> Result<DiscreteMeasure> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    let weights = Array1::from_elem(n, 1.0 / n as f64);
    Ok(DiscreteMeasure {
        points,
        weights,
        uniform: true,
    })
}

/// Uniform grid of `n` points on `[0, 1]` (endpoints included), as an `n x 1` matrix.
pub fn unit_grid_1d(n: usize) -> Array2<f64> {
    let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    Array2::from_shape_fn((n, 1), |(i, _)| i as f64 * step)
}

/// Tensor grid on `[0, 1]^2` with `nx * ny` nodes, x varying fastest.
pub fn unit_grid_2d(nx: usize, ny: usize) -> Array2<f64> {
    let hx = if nx > 1 { 1.0 / (nx - 1) as f64 } else { 0.0 };
    let hy = if ny > 1 { 1.0 / (ny - 1) as f64 } else { 0.0 };
    Array2::from_shape_fn((nx * ny, 2), |(k, c)| {
        if c == 0 {
            (k % nx) as f64 * hx
        } else {
            (k / nx) as f64 * hy
        }
    })
}

/// A measure paired with per-atom channel values, i.e. a pair `(mu, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TLpSignal {
    measure: DiscreteMeasure,
    values: Array2<f64>,
}

impl TLpSignal {
    pub fn new(measure: DiscreteMeasure, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != measure.len() {
            return Err(Error::LengthMismatch(measure.len(), values.nrows()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite channel value".into()));
        }
        Ok(Self { measure, values })
    }

    /// Signal with a single channel.
    pub fn scalar(measure: DiscreteMeasure, values: Array1<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(measure, values.into_shape_with_order((n, 1)).expect("column"))
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn into_parts(self) -> (DiscreteMeasure, Array2<f64>) {
        (self.measure, self.values)
    }
}

/// The graph measure `(Id x f)_# mu` on `Omega x R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMeasure {
    base: DiscreteMeasure,
    spatial_dim: usize,
    channel_scale: f64,
}

impl LiftedMeasure {
    pub fn measure(&self) -> &DiscreteMeasure {
        &self.base
    }

    pub fn into_measure(self) -> DiscreteMeasure {
        self.base
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn channel_scale(&self) -> f64 {
        self.channel_scale
    }
}

/// Lift a signal onto the graph of its channel function.
///
/// Atom `i` becomes `(x_i, scale * f(x_i))` with its weight unchanged.
pub fn lift(signal: &TLpSignal, channel_scale: f64) -> Result<LiftedMeasure> {
    if !(channel_scale > 0.0) || !channel_scale.is_finite() {
        return Err(Error::InvalidScale(channel_scale));
    }
    let d = signal.measure.dim();
    let m = signal.channels();
    let n = signal.len();
    let mut pts = Array2::zeros((n, d + m));
    pts.slice_mut(ndarray::s![.., ..d])
        .assign(&signal.measure.points);
    pts.slice_mut(ndarray::s![.., d..])
        .assign(&(&signal.values * channel_scale));
    let base = DiscreteMeasure {
        points: pts,
        weights: signal.measure.weights.clone(),
        uniform: signal.measure.uniform,
    };
    Ok(LiftedMeasure {
        base,
        spatial_dim: d,
        channel_scale,
    })
}

/// Nonnegative ground-cost matrix together with the exponent that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Array2<f64>,
    exponent: f64,
}

impl CostMatrix {
    pub fn new(entries: Array2<f64>, exponent: f64) -> Result<Self> {
        if entries.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInput("costs must be finite and >= 0".into()));
        }
        Ok(Self { entries, exponent })
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }
}

/// How a plan was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute marginal violation of the returned coupling.
    pub marginal_error: f64,
}

/// A coupling between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    pub source_weights: Array1<f64>,
    pub target_weights: Array1<f64>,
    /// Total transport cost `sum C_ij pi_ij` (p-th power, no root).
    pub cost: f64,
    pub status: SolveStatus,
}

impl TransportPlan {
    /// Largest absolute deviation of row and column sums from the marginals.
    pub fn marginal_violation(&self) -> f64 {
        marginal_violation(
            &self.coupling,
            self.source_weights.view(),
            self.target_weights.view(),
        )
    }
}

pub(crate) fn marginal_violation(
    coupling: &Array2<f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> f64 {
    let rows = coupling.sum_axis(Axis(1));
    let cols = coupling.sum_axis(Axis(0));
    let r = rows
        .iter()
        .zip(a.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let c = cols
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    r.max(c)
}

/// Images of source atoms under a (possibly barycentric) transport map.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    /// One row per source atom.
    pub images: Array2<f64>,
    /// Target index per source atom, when the map is a permutation.
    pub assignment: Option<Vec<usize>>,
}

/// Linear-embedding coordinates of one signal against a fixed reference.
///
/// `spatial` holds `(T(x_j) - x_j) rho_j^{1/p}` and `channel` holds
/// `(f(T(x_j)) - h(x_j)) rho_j^{1/p}` (empty for the Wasserstein embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub spatial: Array2<f64>,
    pub channel: Array2<f64>,
    pub weights: Array1<f64>,
    pub exponent: f64,
    /// False if the underlying solver hit its iteration cap.
    pub converged: bool,
}

impl EmbeddingVector {
    /// Zero embedding for a reference with `n` atoms.
    pub fn zeros(n: usize, d: usize, m: usize, weights: Array1<f64>, exponent: f64) -> Self {
        Self {
            spatial: Array2::zeros((n, d)),
            channel: Array2::zeros((n, m)),
            weights,
            exponent,
            converged: true,
        }
    }

    /// Flattened coordinates: all spatial entries row-major, then channel entries.
    pub fn to_flat(&self) -> Vec<f64> {
        self.spatial
            .iter()
            .chain(self.channel.iter())
            .copied()
            .collect()
    }

    pub fn flat_len(&self) -> usize {
        self.spatial.len() + self.channel.len()
    }

    /// Rebuild from a flat row with the given block shapes.
    pub fn from_flat(
        flat: &[f64],
        n: usize,
        d: usize,
        m: usize,
        weights: Array1<f64>,
        exponent: f64,
    ) -> Result<Self> {
        if flat.len() != n * (d + m) || weights.len() != n {
            return Err(Error::ShapeMismatch);
        }
        let spatial = Array2::from_shape_vec((n, d), flat[..n * d].to_vec())
            .map_err(|_| Error::ShapeMismatch)?;
        let channel = Array2::from_shape_vec((n, m), flat[n * d..].to_vec())
            .map_err(|_| Error::ShapeMismatch)?;
        Ok(Self {
            spatial,
            channel,
            weights,
            exponent,
            converged: true,
        })
    }

    /// `l^p` norm of the flattened vector.
    pub fn norm(&self) -> f64 {
        let p = self.exponent;
        self.spatial
            .iter()
            .chain(self.channel.iter())
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Which distance produced a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DistanceMethod {
    Lp,
    Wp,
    Tlp,
    Lwp,
    Ltlp,
    Cor,
}

impl DistanceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceMethod::Lp => "LP",
            DistanceMethod::Wp => "WP",
            DistanceMethod::Tlp => "TLP",
            DistanceMethod::Lwp => "LWP",
            DistanceMethod::Ltlp => "LTLP",
            DistanceMethod::Cor => "COR",
        }
    }
}

/// Symmetric, zero-diagonal, nonnegative matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: Array2<f64>,
    method: DistanceMethod,
}

impl DistanceMatrix {
    /// Validates symmetry within `1e-9`, a zero diagonal and nonnegativity.
    pub fn new(entries: Array2<f64>, method: DistanceMethod) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::ShapeMismatch);
        }
        for i in 0..r {
            if entries[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (entries[[i, j]], entries[[j, i]]);
                if !(a >= 0.0) || !(b >= 0.0) || (a - b).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "entries ({i},{j}) are negative or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { entries, method })
    }

    /// Fill from an upper-triangle evaluator, mirroring into the lower triangle.
    pub fn from_fn(
        n: usize,
        method: DistanceMethod,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[[i, j]] = v;
                entries[[j, i]] = v;
            }
        }
        Self::new(entries, method)
    }

    /// Mirror precomputed upper-triangle values, ordered `(0,1), (0,2), ..., (1,2), ...`.
    pub fn from_upper(n: usize, method: DistanceMethod, upper: &[f64]) -> Result<Self> {
        let mut it = upper.iter();
        Self::from_fn(n, method, |_, _| *it.next().expect("upper triangle length"))
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn method(&self) -> DistanceMethod {
        self.method
    }
}

/// Index pairs `(i, j)` with `i < j`, in row-major order.
pub fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect()
}
