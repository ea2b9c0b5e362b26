//! Sliding-window nearest-neighbour forecasting of multivariate returns.
//!
//! Windows of `m` daily log-returns are compared with a window distance, the
//! `k` closest past windows vote on the next `h`-day return, and the sign of
//! the forecast is traded.

use log::warn;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{build_measure_reference, build_reference, embed, pairwise_linear_distances, EmbedConfig, ReferenceKind};
use crate::error::{Error, Result};
use crate::measures::{make_uniform, upper_pairs, DiscreteMeasure, DistanceMatrix, DistanceMethod, TLpSignal};
use crate::metric::wasserstein_distance;
use crate::synth::{default_chi, normalize_for_wp};

/// Trading days per year used to annualize the Sharpe ratio.
pub const TRADING_DAYS: f64 = 252.0;

/// Prices of `n` instruments over consecutive days, one row per day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<String>,
    tickers: Vec<String>,
    prices: Array2<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<String>, tickers: Vec<String>, prices: Array2<f64>) -> Result<Self> {
        if prices.dim() != (dates.len(), tickers.len()) {
            return Err(Error::ShapeMismatch);
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("dates must be strictly increasing".into()));
        }
        for ((row, col), &p) in prices.indexed_iter() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidPrice {
                    ticker: tickers[col].clone(),
                    row,
                    price: p,
                });
            }
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn prices(&self) -> ArrayView2<'_, f64> {
        self.prices.view()
    }

    pub fn days(&self) -> usize {
        self.dates.len()
    }

    /// Split off one column, e.g. the market index.
    pub fn split_ticker(&self, ticker: &str) -> Option<(PriceSeries, Array1<f64>)> {
        let idx = self.tickers.iter().position(|t| t == ticker)?;
        let keep: Vec<usize> = (0..self.tickers.len()).filter(|&c| c != idx).collect();
        let rest = PriceSeries {
            dates: self.dates.clone(),
            tickers: keep.iter().map(|&c| self.tickers[c].clone()).collect(),
            prices: self.prices.select(Axis(1), &keep),
        };
        Some((rest, self.prices.column(idx).to_owned()))
    }
}

/// `R[t, i] = log(P[t + 1, i] / P[t, i])`; row `t` belongs to day `t + 1`.
pub fn log_returns(prices: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    for ((row, col), &p) in prices.indexed_iter() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidPrice {
                ticker: format!("column {col}"),
                row,
                price: p,
            });
        }
    }
    let t = prices.nrows();
    if t < 2 {
        return Ok(Array2::zeros((0, prices.ncols())));
    }
    Ok(Array2::from_shape_fn((t - 1, prices.ncols()), |(r, c)| {
        (prices[[r + 1, c]] / prices[[r, c]]).ln()
    }))
}

/// Returns in excess of `beta` times the market return.
pub fn market_excess(returns: ArrayView2<'_, f64>, market: ArrayView1<'_, f64>, beta: f64) -> Result<Array2<f64>> {
    if returns.nrows() != market.len() {
        return Err(Error::LengthMismatch(returns.nrows(), market.len()));
    }
    let mut out = returns.to_owned();
    for (mut row, &m) in out.rows_mut().into_iter().zip(market.iter()) {
        row -= beta * m;
    }
    Ok(out)
}

/// Sum of the next `h` returns after each window's last day.
///
/// Row `w` is the future return of window `w`, whose last return row is
/// `w + m - 1`; rows whose horizon runs past the data are NaN.
pub fn future_returns(returns: ArrayView2<'_, f64>, m: usize, h: usize) -> Array2<f64> {
    let (t, n) = returns.dim();
    let windows = (t + 1).saturating_sub(m);
    Array2::from_shape_fn((windows, n), |(w, i)| {
        let end = w + m - 1;
        if end + h < t {
            (end + 1..=end + h).map(|r| returns[[r, i]]).sum()
        } else {
            f64::NAN
        }
    })
}

/// Return windows `S_t`, each `n x m`, built from rows `t - m + 1 ..= t`.
#[derive(Debug, Clone)]
pub struct WindowSet {
    pub m: usize,
    pub windows: Vec<Array2<f64>>,
}

/// All complete windows of length `m`, window `w` ending on return row `w + m - 1`.
pub fn sliding_windows(returns: ArrayView2<'_, f64>, m: usize) -> Result<WindowSet> {
    if m < 2 {
        return Err(Error::InvalidInput("window length must be at least 2".into()));
    }
    let t = returns.nrows();
    let windows = (0..(t + 1).saturating_sub(m))
        .map(|w| returns.slice(s![w..w + m, ..]).t().to_owned())
        .collect();
    Ok(WindowSet { m, windows })
}

/// Standardize each row to mean 0 and population standard deviation 1.
/// Constant rows become zero.
pub fn standardize_rows(window: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = window.to_owned();
    for mut row in out.rows_mut() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let sd = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            row.mapv_inplace(|v| (v - mean) / sd);
        } else {
            row.fill(0.0);
        }
    }
    out
}

/// `1 - corr(psi_i, psi_j)` for flattened, already standardized windows.
pub fn cor_distance(si: ArrayView2<'_, f64>, sj: ArrayView2<'_, f64>) -> Result<f64> {
    if si.dim() != sj.dim() {
        return Err(Error::ShapeMismatch);
    }
    let n = si.len() as f64;
    let (ma, mb) = (si.sum() / n, sj.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in si.iter().zip(sj.iter()) {
        let (x, y) = (a - ma, b - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateWindow);
    }
    Ok((1.0 - sab / (saa * sbb).sqrt()).clamp(0.0, 2.0))
}

/// Settings for window distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub embed: EmbedConfig,
    /// Number of leading windows averaged into the LWP / LTLP reference.
    /// Forecasts are only made after these windows.
    pub reference_windows: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            embed: EmbedConfig::default(),
            reference_windows: 60,
        }
    }
}

fn time_support(m: usize) -> Result<DiscreteMeasure> {
    make_uniform(Array2::from_shape_fn((m, 1), |(i, _)| (i + 1) as f64 / m as f64))
}

/// Window as a signal on `{1, ..., m} / m` with one channel per instrument.
pub fn window_signal(window: ArrayView2<'_, f64>) -> Result<TLpSignal> {
    let z = standardize_rows(window);
    TLpSignal::new(time_support(window.ncols())?, z.t().to_owned())
}

/// Window as a probability vector on `{1, ..., m} / m`: standardized,
/// averaged across instruments, shifted positive and normalized.
pub fn window_measure(window: ArrayView2<'_, f64>) -> Result<DiscreteMeasure> {
    let s = window_signal(window)?;
    let chi = default_chi(&s);
    normalize_for_wp(&s, chi)
}

/// Pairwise window distances and the number of transport problems solved.
pub fn window_distance_matrix(
    windows: &WindowSet,
    method: DistanceMethod,
    cfg: &WindowConfig,
) -> Result<(DistanceMatrix, usize)> {
    let n = windows.windows.len();
    let pairs = upper_pairs(n);
    let e = &cfg.embed;
    match method {
        DistanceMethod::Cor => {
            let z: Vec<Array2<f64>> = windows.windows.iter().map(|w| standardize_rows(w.view())).collect();
            let upper = pairs
                .par_iter()
                .map(|&(i, j)| cor_distance(z[i].view(), z[j].view()))
                .collect::<Result<Vec<_>>>()?;
            Ok((DistanceMatrix::from_upper(n, method, &upper)?, 0))
        }
        DistanceMethod::Wp => {
            let ms = windows
                .windows
                .iter()
                .map(|w| window_measure(w.view()))
                .collect::<Result<Vec<_>>>()?;
            let upper = pairs
                .par_iter()
                .map(|&(i, j)| wasserstein_distance(&ms[i], &ms[j], e.p, &e.solver))
                .collect::<Result<Vec<_>>>()?;
            Ok((DistanceMatrix::from_upper(n, method, &upper)?, pairs.len()))
        }
        DistanceMethod::Lwp => {
            let ms = windows
                .windows
                .iter()
                .map(|w| window_measure(w.view()))
                .collect::<Result<Vec<_>>>()?;
            let r = cfg.reference_windows.clamp(1, n.max(1));
            let reference = build_measure_reference(&ms[..r])?;
            let embs = ms
                .par_iter()
                .map(|m| embed(&TLpSignal::new(m.clone(), Array2::zeros((m.len(), 0)))?, &reference, e))
                .collect::<Result<Vec<_>>>()?;
            Ok((pairwise_linear_distances(&embs, method)?, n))
        }
        DistanceMethod::Ltlp => {
            let sigs = windows
                .windows
                .iter()
                .map(|w| window_signal(w.view()))
                .collect::<Result<Vec<_>>>()?;
            let r = cfg.reference_windows.clamp(1, n.max(1));
            let reference = build_reference(&sigs[..r], ReferenceKind::Tlp)?;
            let embs = sigs
                .par_iter()
                .map(|s| embed(s, &reference, e))
                .collect::<Result<Vec<_>>>()?;
            Ok((pairwise_linear_distances(&embs, method)?, n))
        }
        other => Err(Error::InvalidInput(format!(
            "{} is not a window distance",
            other.as_str()
        ))),
    }
}

/// Inverse-distance weighted average of the future returns of the `k`
/// nearest windows among `0 ..= t - h`.
///
/// Ties in distance go to the earlier window. If any neighbour is at
/// distance zero, the exact matches share the weight equally.
pub fn knn_forecast(
    d: &DistanceMatrix,
    future: ArrayView2<'_, f64>,
    t: usize,
    k: usize,
    h: usize,
) -> Result<Array1<f64>> {
    if t >= d.len() || future.nrows() != d.len() {
        return Err(Error::LengthMismatch(t, d.len()));
    }
    if k == 0 || t < h {
        return Err(Error::EmptyTrain);
    }
    let last = t - h;
    let mut cand: Vec<(f64, usize)> = (0..=last).map(|j| (d.get(t, j), j)).collect();
    if cand.len() < k {
        warn!("window {t}: only {} eligible neighbours for k = {k}", cand.len());
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k);
    let exact: Vec<usize> = cand.iter().filter(|c| c.0 == 0.0).map(|c| c.1).collect();
    let mut out = Array1::zeros(future.ncols());
    if !exact.is_empty() {
        let w = 1.0 / exact.len() as f64;
        for j in exact {
            out.scaled_add(w, &future.row(j));
        }
        return Ok(out);
    }
    let total: f64 = cand.iter().map(|c| 1.0 / c.0).sum();
    for &(dist, j) in &cand {
        out.scaled_add(1.0 / dist / total, &future.row(j));
    }
    Ok(out)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Number of instruments traded in quintile portfolio `q` (1 ..= 5) out of `n`.
pub fn quintile_count(q: usize, n: usize) -> usize {
    ((6 - q) * n).div_ceil(5)
}

/// Instruments traded in quintile portfolio `q`: the largest
/// `ceil((6 - q) n / 5)` forecasts by magnitude, ties to the lower index.
pub fn quintile_mask(forecast: ArrayView1<'_, f64>, q: usize) -> Result<Vec<usize>> {
    if !(1..=5).contains(&q) {
        return Err(Error::InvalidInput(format!("quintile {q} outside 1..=5")));
    }
    let mut idx: Vec<usize> = (0..forecast.len()).collect();
    idx.sort_by(|&a, &b| forecast[b].abs().total_cmp(&forecast[a].abs()).then(a.cmp(&b)));
    idx.truncate(quintile_count(q, forecast.len()));
    idx.sort_unstable();
    Ok(idx)
}

/// `PnL_t = sum_i sign(alpha_it) f_it` over the quintile mask of each day.
pub fn pnl_series(forecasts: ArrayView2<'_, f64>, realized: ArrayView2<'_, f64>, q: usize) -> Result<Vec<f64>> {
    if forecasts.dim() != realized.dim() {
        return Err(Error::ShapeMismatch);
    }
    forecasts
        .rows()
        .into_iter()
        .zip(realized.rows())
        .map(|(a, f)| Ok(quintile_mask(a, q)?.into_iter().map(|i| sign(a[i]) * f[i]).sum()))
        .collect()
}

/// Annualized Sharpe ratio with the sample standard deviation.
pub fn sharpe(pnl: &[f64]) -> Result<f64> {
    if pnl.len() < 2 {
        return Err(Error::Undefined("Sharpe ratio needs at least two days"));
    }
    let n = pnl.len() as f64;
    let mean = pnl.iter().sum::<f64>() / n;
    let var = pnl.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Err(Error::Undefined("PnL has zero standard deviation"));
    }
    Ok(mean / var.sqrt() * TRADING_DAYS.sqrt())
}

/// Average PnL per instrument and day.
pub fn ppt(pnl: &[f64], n: usize) -> f64 {
    if pnl.is_empty() || n == 0 {
        return 0.0;
    }
    pnl.iter().sum::<f64>() / (pnl.len() * n) as f64
}

/// Which return the forecasts target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    Rr,
    Mr,
}

impl ReturnKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReturnKind::Rr => "RR",
            ReturnKind::Mr => "MR",
        }
    }
}

/// Forecasts and realized returns for the windows that can be evaluated.
#[derive(Debug, Clone)]
pub struct ForecastSeries {
    pub horizon: usize,
    pub kind: ReturnKind,
    /// Window index of each row.
    pub windows: Vec<usize>,
    pub forecasts: Array2<f64>,
    pub realized: Array2<f64>,
}

/// Forecast every window from `first` on whose horizon is observed.
pub fn forecast_series(
    d: &DistanceMatrix,
    future: ArrayView2<'_, f64>,
    first: usize,
    k: usize,
    h: usize,
    kind: ReturnKind,
) -> Result<ForecastSeries> {
    let start = first.max(h);
    let rows: Vec<usize> = (start..future.nrows())
        .filter(|&w| future.row(w).iter().all(|v| v.is_finite()))
        .collect();
    let fc = rows
        .par_iter()
        .map(|&w| knn_forecast(d, future, w, k, h))
        .collect::<Result<Vec<_>>>()?;
    let n = future.ncols();
    let mut forecasts = Array2::zeros((rows.len(), n));
    let mut realized = Array2::zeros((rows.len(), n));
    for (r, (&w, f)) in rows.iter().zip(fc.iter()).enumerate() {
        forecasts.row_mut(r).assign(f);
        realized.row_mut(r).assign(&future.row(w));
    }
    Ok(ForecastSeries {
        horizon: h,
        kind,
        windows: rows,
        forecasts,
        realized,
    })
}

/// Geometric random walk prices with a common market factor.
///
/// Column 0 is the market index `SPY`; every other instrument has unit
/// beta to it plus independent noise.
pub fn synthetic_prices(days: usize, instruments: usize, seed: u64) -> Result<PriceSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let market = Normal::new(0.0003, 0.01).expect("valid normal");
    let idio = Normal::new(0.0, 0.015).expect("valid normal");
    let cols = instruments + 1;
    let mut prices = Array2::zeros((days, cols));
    let mut logp = vec![(100.0f64).ln(); cols];
    for t in 0..days {
        if t > 0 {
            let m = market.sample(&mut rng);
            logp[0] += m;
            for lp in logp.iter_mut().skip(1) {
                *lp += m + idio.sample(&mut rng);
            }
        }
        for c in 0..cols {
            prices[[t, c]] = logp[c].exp();
        }
    }
    let dates = (0..days).map(|t| format!("d{t:05}")).collect();
    let tickers = std::iter::once("SPY".to_string())
        .chain((1..cols).map(|i| format!("X{i:03}")))
        .collect();
    PriceSeries::new(dates, tickers, prices)
}

/// Settings for a full backtest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub window: usize,
    pub k: usize,
    pub windows: WindowConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            window: 20,
            k: 100,
            windows: WindowConfig::default(),
        }
    }
}

/// Distance matrix, future returns and forecasts for one method.
#[derive(Debug, Clone)]
pub struct Backtest {
    pub distances: DistanceMatrix,
    pub solver_calls: usize,
    pub series: Vec<ForecastSeries>,
}

/// Build windows from raw returns, compute `method` distances and forecast
/// every requested horizon and return kind. `market` holds the market
/// index prices and is required for [`ReturnKind::Mr`].
pub fn backtest(
    prices: &PriceSeries,
    market: Option<ArrayView1<'_, f64>>,
    method: DistanceMethod,
    horizons: &[usize],
    kinds: &[ReturnKind],
    cfg: &BacktestConfig,
) -> Result<Backtest> {
    let returns = log_returns(prices.prices())?;
    let ws = sliding_windows(returns.view(), cfg.window)?;
    let (distances, solver_calls) = window_distance_matrix(&ws, method, &cfg.windows)?;
    let excess = match market {
        Some(mk) => {
            let mr = log_returns(mk.insert_axis(Axis(1)))?;
            Some(market_excess(returns.view(), mr.column(0), 1.0)?)
        }
        None => None,
    };
    let mut series = Vec::new();
    for &kind in kinds {
        let base = match kind {
            ReturnKind::Rr => &returns,
            ReturnKind::Mr => excess
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("market excess returns need a market series".into()))?,
        };
        for &h in horizons {
            if h == 0 {
                return Err(Error::InvalidInput("horizon must be at least 1".into()));
            }
            let future = future_returns(base.view(), cfg.window, h);
            series.push(forecast_series(
                &distances,
                future.view(),
                cfg.windows.reference_windows,
                cfg.k,
                h,
                kind,
            )?);
        }
    }
    Ok(Backtest {
        distances,
        solver_calls,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn returns_examples() {
        let r = log_returns(array![[1.0, 2.0], [std::f64::consts::E, 1.0]].view()).unwrap();
        assert!((r[[0, 0]] - 1.0).abs() < 1e-15);
        assert_eq!(r[[0, 1]], -(2.0f64).ln());
        let c = log_returns(array![[3.0], [3.0], [3.0]].view()).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(matches!(
            log_returns(array![[1.0], [0.0]].view()),
            Err(Error::InvalidPrice { .. })
        ));
    }

    #[test]
    fn excess_examples() {
        let r = array![[0.02, 0.01]];
        let ex = market_excess(r.view(), array![0.01].view(), 1.0).unwrap();
        assert!((ex[[0, 0]] - 0.01).abs() < 1e-15);
        assert_eq!(ex[[0, 1]], 0.0);
        let raw = market_excess(r.view(), array![0.0].view(), 1.0).unwrap();
        assert_eq!(raw, r);
        assert!(market_excess(r.view(), array![0.0, 1.0].view(), 1.0).is_err());
    }

    #[test]
    fn cor_examples() {
        let a = standardize_rows(array![[1.0, 2.0, 4.0], [0.0, 1.0, -1.0]].view());
        assert!(cor_distance(a.view(), a.view()).unwrap().abs() < 1e-12);
        assert!((cor_distance(a.view(), (-&a).view()).unwrap() - 2.0).abs() < 1e-12);
        let z = Array2::zeros((2, 3));
        assert!(matches!(cor_distance(a.view(), z.view()), Err(Error::DegenerateWindow)));
    }

    #[test]
    fn cor_is_scaled_squared_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = standardize_rows(Array2::from_shape_fn((3, 3), |_| rng.gen::<f64>()).view());
            let b = standardize_rows(Array2::from_shape_fn((3, 3), |_| rng.gen::<f64>()).view());
            let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
            let want = sq / (2.0 * a.len() as f64);
            assert!((cor_distance(a.view(), b.view()).unwrap() - want).abs() < 1e-12);
        }
    }

    fn line_matrix(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), DistanceMethod::Cor, |i, j| (xs[i] - xs[j]).abs()).unwrap()
    }

    #[test]
    fn knn_weights() {
        // window 3 sits at 0; windows 0 and 1 at distances 1 and 3
        let d = line_matrix(&[1.0, 3.0, 10.0, 0.0]);
        let future = array![[4.0], [8.0], [100.0], [7.0]];
        let one = knn_forecast(&d, future.view(), 3, 1, 1).unwrap();
        assert_eq!(one, array![4.0]);
        let two = knn_forecast(&d, future.view(), 3, 2, 1).unwrap();
        assert!((two[0] - (0.75 * 4.0 + 0.25 * 8.0)).abs() < 1e-12);
        // horizon 2 leaves windows 0 and 1 eligible only
        let h2 = knn_forecast(&d, future.view(), 3, 3, 2).unwrap();
        let w = [1.0, 1.0 / 3.0];
        let want = (w[0] * 4.0 + w[1] * 8.0) / (w[0] + w[1]);
        assert!((h2[0] - want).abs() < 1e-12);
    }

    #[test]
    fn knn_exact_match_takes_all_weight() {
        let d = line_matrix(&[0.0, 0.0, 1.0, 0.0]);
        let future = array![[2.0], [6.0], [100.0], [0.0]];
        let f = knn_forecast(&d, future.view(), 3, 3, 1).unwrap();
        assert_eq!(f, array![4.0]);
    }

    #[test]
    fn pnl_examples() {
        let realized = array![[0.1, -0.2, 0.0, 0.3]];
        let right = array![[1.0, -1.0, 5.0, 2.0]];
        assert!((pnl_series(right.view(), realized.view(), 1).unwrap()[0] - 0.6).abs() < 1e-12);
        let zero = Array2::zeros((1, 4));
        assert_eq!(pnl_series(zero.view(), realized.view(), 1).unwrap(), vec![0.0]);
        let f = Array1::from_iter((0..10).map(|i| i as f64));
        assert_eq!(quintile_mask(f.view(), 5).unwrap(), vec![8, 9]);
        assert_eq!(quintile_mask(f.view(), 1).unwrap().len(), 10);
        assert_eq!(quintile_count(5, 20), 4);
        assert_eq!(quintile_count(4, 7), 3);
    }

    #[test]
    fn sharpe_and_ppt() {
        assert!((sharpe(&[1.0, 2.0, 3.0]).unwrap() - 2.0 * TRADING_DAYS.sqrt()).abs() < 1e-12);
        assert_eq!(sharpe(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 0.0);
        let a = sharpe(&[0.3, -0.1, 0.7]).unwrap();
        let b = sharpe(&[3.0, -1.0, 7.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(matches!(sharpe(&[1.0, 1.0]), Err(Error::Undefined(_))));
        assert_eq!(ppt(&[3.0; 5], 3), 1.0);
        assert_eq!(ppt(&[10.0], 1) / 252.0, 10.0 / 252.0);
    }

    #[test]
    fn windows_are_causal_slices() {
        let r = Array2::from_shape_fn((6, 2), |(t, i)| (10 * t + i) as f64);
        let ws = sliding_windows(r.view(), 3).unwrap();
        assert_eq!(ws.windows.len(), 4);
        assert_eq!(ws.windows[1], array![[10.0, 20.0, 30.0], [11.0, 21.0, 31.0]]);
        let fut = future_returns(r.view(), 3, 2);
        // window 0 ends on row 2; next two rows are 3 and 4
        assert_eq!(fut[[0, 0]], 30.0 + 40.0);
        assert!(fut[[3, 0]].is_nan());
    }

    #[test]
    fn synthetic_prices_are_valid() {
        let p = synthetic_prices(50, 4, 1).unwrap();
        assert_eq!(p.prices().dim(), (50, 5));
        let (rest, spy) = p.split_ticker("SPY").unwrap();
        assert_eq!(rest.tickers().len(), 4);
        assert_eq!(spy.len(), 50);
    }
}
