//! CSV and JSON formats used by the command line tool.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces the values bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finance::PriceSeries;
use crate::measures::{DiscreteMeasure, DistanceMatrix, DistanceMethod, EmbeddingVector, TLpSignal};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn parse(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {what} value {s:?}")))
}

/// Long format `signal,weight,x1..xd,f1..fm`, one row per atom.
pub fn write_signals(path: &Path, signals: &[TLpSignal]) -> Result<()> {
    let mut w = writer(path)?;
    let (d, m) = signals
        .first()
        .map(|s| (s.measure().dim(), s.channels()))
        .unwrap_or((1, 1));
    let mut header = vec!["signal".to_string(), "weight".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.extend((1..=m).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for (id, s) in signals.iter().enumerate() {
        if s.measure().dim() != d || s.channels() != m {
            return Err(Error::ShapeMismatch);
        }
        for j in 0..s.len() {
            let mut row = vec![id.to_string(), s.measure().weights()[j].to_string()];
            row.extend(s.measure().point(j).iter().map(|v| v.to_string()));
            row.extend(s.values().row(j).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_signals`].
pub fn read_signals(path: &Path) -> Result<Vec<TLpSignal>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let d = header.iter().filter(|h| h.starts_with('x')).count();
    let m = header.iter().filter(|h| h.starts_with('f')).count();
    if header.len() != 2 + d + m || d == 0 {
        return Err(Error::InvalidInput("signal header must be signal,weight,x..,f..".into()));
    }
    let mut groups: Vec<(String, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let id = rec[0].to_string();
        if groups.last().map(|g| g.0 != id).unwrap_or(true) {
            groups.push((id, Vec::new(), Vec::new(), Vec::new()));
        }
        let g = groups.last_mut().expect("group");
        g.1.push(parse(&rec[1], "weight")?);
        for k in 0..d {
            g.2.push(parse(&rec[2 + k], "coordinate")?);
        }
        for k in 0..m {
            g.3.push(parse(&rec[2 + d + k], "channel")?);
        }
    }
    groups
        .into_iter()
        .map(|(_, w, x, f)| {
            let n = w.len();
            let pts = Array2::from_shape_vec((n, d), x).map_err(|_| Error::ShapeMismatch)?;
            let vals = Array2::from_shape_vec((n, m), f).map_err(|_| Error::ShapeMismatch)?;
            let measure = match DiscreteMeasure::new(pts.clone(), Array1::from(w.clone())) {
                Ok(mu) => mu,
                Err(_) => DiscreteMeasure::from_masses(pts, Array1::from(w))?,
            };
            TLpSignal::new(measure, vals)
        })
        .collect()
}

/// `id,<name>` rows of integer labels.
pub fn write_labels(path: &Path, name: &str, labels: &[usize]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", name])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Second column of an `id,label` file.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let s = rec.get(1).ok_or_else(|| Error::InvalidInput("label file needs two columns".into()))?;
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad label {s:?}")))
        })
        .collect()
}

/// `<index>,<name>` rows of real scores.
pub fn write_scores(path: &Path, index: &str, name: &str, scores: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([index, name])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `id,v0,v1,...` of a real matrix.
pub fn write_rows(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..x.ncols()).map(|k| format!("v{k}")));
    w.write_record(&header)?;
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_rows`].
pub fn read_rows(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len().saturating_sub(1);
    let mut data = Vec::new();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != cols + 1 {
            return Err(Error::ShapeMismatch);
        }
        for k in 0..cols {
            data.push(parse(&rec[k + 1], "matrix")?);
        }
        n += 1;
    }
    Array2::from_shape_vec((n, cols), data).map_err(|_| Error::ShapeMismatch)
}

/// Square matrix with a header row of column indices.
pub fn write_distance_matrix(path: &Path, d: &DistanceMatrix) -> Result<()> {
    let mut w = writer(path)?;
    let n = d.len();
    w.write_record((0..n).map(|k| k.to_string()))?;
    for row in d.entries().rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_distance_matrix`].
pub fn read_distance_matrix(path: &Path, method: DistanceMethod) -> Result<DistanceMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let n = r.headers()?.len();
    let mut data = Vec::with_capacity(n * n);
    for rec in r.records() {
        for s in rec?.iter() {
            data.push(parse(s, "distance")?);
        }
    }
    let entries = Array2::from_shape_vec((n, n), data).map_err(|_| Error::ShapeMismatch)?;
    DistanceMatrix::new(entries, method)
}

/// Shape and settings needed to turn flat embedding rows back into vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub method: DistanceMethod,
    pub atoms: usize,
    pub dim: usize,
    pub channels: usize,
    pub p: f64,
    pub channel_scale: f64,
}

/// Stack embeddings for [`write_rows`].
pub fn embeddings_to_rows(embs: &[EmbeddingVector]) -> Array2<f64> {
    let len = embs.first().map(|e| e.flat_len()).unwrap_or(0);
    let mut x = Array2::zeros((embs.len(), len));
    for (i, e) in embs.iter().enumerate() {
        x.row_mut(i).assign(&Array1::from(e.to_flat()));
    }
    x
}

/// Rebuild embeddings from flat rows against reference weights.
pub fn rows_to_embeddings(x: &Array2<f64>, meta: &EmbeddingMeta, weights: &Array1<f64>) -> Result<Vec<EmbeddingVector>> {
    x.rows()
        .into_iter()
        .map(|row| {
            EmbeddingVector::from_flat(
                &row.to_vec(),
                meta.atoms,
                meta.dim,
                meta.channels,
                weights.clone(),
                meta.p,
            )
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

/// Scalar grid from a headerless CSV whose rows are successive `y` values
/// and whose columns are successive `x` values. Indexed `[ix, iy]`.
pub fn read_grid(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(|s| parse(s, "grid")).collect::<Result<_>>()?);
    }
    let ny = rows.len();
    let nx = rows.first().map(|r| r.len()).unwrap_or(0);
    if ny == 0 || nx == 0 || rows.iter().any(|r| r.len() != nx) {
        return Err(Error::InvalidInput("grid rows must be nonempty and equally long".into()));
    }
    Ok(Array2::from_shape_fn((nx, ny), |(i, j)| rows[j][i]))
}

/// Inverse of [`read_grid`].
pub fn write_grid(path: &Path, grid: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    let (nx, ny) = grid.dim();
    for j in 0..ny {
        w.write_record((0..nx).map(|i| grid[[i, j]].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Wide price table `date,ticker1,...,tickern`. Instruments with any
/// missing or unparsable cell are dropped.
pub fn read_prices(path: &Path) -> Result<PriceSeries> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::InvalidInput("price file needs a date and at least one ticker".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        dates.push(rec[0].to_string());
        cells.push(
            (1..header.len())
                .map(|k| rec.get(k).and_then(|s| s.trim().parse::<f64>().ok()))
                .collect(),
        );
    }
    let keep: Vec<usize> = (0..tickers.len())
        .filter(|&c| cells.iter().all(|row| row[c].is_some()))
        .collect();
    let prices = Array2::from_shape_fn((dates.len(), keep.len()), |(t, k)| cells[t][keep[k]].expect("kept"));
    PriceSeries::new(dates, keep.iter().map(|&c| tickers[c].clone()).collect(), prices)
}

/// Wide price table, inverse of [`read_prices`].
pub fn write_prices(path: &Path, prices: &PriceSeries) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(prices.tickers().iter().cloned());
    w.write_record(&header)?;
    for (t, date) in prices.dates().iter().enumerate() {
        let mut rec = vec![date.clone()];
        rec.extend(prices.prices().row(t).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Record of one run: the exact arguments, parameters, seeds, solver
/// settings and per-phase wall-clock times.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub threads: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub timings: BTreeMap<String, f64>,
    pub solver_calls: usize,
}

impl Manifest {
    pub fn new(command: &str, argv: Vec<String>, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            argv,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            ..Self::default()
        }
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    /// Run `f` and record its wall time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        *self.timings.entry(phase.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::make_uniform;
    use ndarray::array;

    #[test]
    fn signals_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let mu = make_uniform(array![[0.1, 0.2], [0.3, 1.0 / 3.0]]).unwrap();
        let a = TLpSignal::new(mu.clone(), array![[1.0, -2.5], [0.1, 1e-17]]).unwrap();
        let b = TLpSignal::new(mu, array![[0.0, 0.0], [f64::MAX, -0.3]]).unwrap();
        write_signals(&p, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(read_signals(&p).unwrap(), vec![a, b]);
    }

    #[test]
    fn grid_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        std::fs::write(&p, "1,2,3\n4,5,6\n").unwrap();
        let g = read_grid(&p).unwrap();
        assert_eq!(g.dim(), (3, 2));
        assert_eq!(g[[2, 0]], 3.0);
        assert_eq!(g[[0, 1]], 4.0);
        let q = dir.path().join("h.csv");
        write_grid(&q, &g).unwrap();
        assert_eq!(std::fs::read_to_string(q).unwrap(), "1,2,3\n4,5,6\n");
    }

    #[test]
    fn prices_drop_incomplete_tickers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        std::fs::write(&p, "date,A,B\n2020-01-01,1,2\n2020-01-02,1.5,\n").unwrap();
        let s = read_prices(&p).unwrap();
        assert_eq!(s.tickers(), &["A".to_string()]);
    }

    #[test]
    fn distance_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = DistanceMatrix::from_fn(3, DistanceMethod::Tlp, |i, j| (i * 10 + j) as f64 / 7.0).unwrap();
        write_distance_matrix(&p, &d).unwrap();
        assert_eq!(read_distance_matrix(&p, DistanceMethod::Tlp).unwrap(), d);
    }
}
