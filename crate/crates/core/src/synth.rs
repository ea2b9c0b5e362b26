//! Synthetic signal generators: double humps, chirp humps and the two 2D
//! classes, plus the positivity normalization used before Wasserstein
//! embeddings.

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{make_uniform, unit_grid_1d, unit_grid_2d, DiscreteMeasure, TLpSignal};

/// Slack used when testing whether a grid point lies in a closed interval.
const EDGE_TOL: f64 = 1e-12;

/// A nonnegative step function given by closed intervals and heights.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub pieces: Vec<(f64, f64, f64)>,
}

impl PiecewiseConstant {
    /// Exact integral from the interval lengths.
    pub fn integral(&self) -> f64 {
        self.pieces.iter().map(|(a, b, h)| (b - a) * h).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|(a, b, _)| x >= a - EDGE_TOL && x <= b + EDGE_TOL)
            .map(|(_, _, h)| h)
            .sum()
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for p in &mut self.pieces {
            p.2 *= k;
        }
        self
    }

    /// Rescale so the exact integral is one.
    pub fn normalized(self) -> Self {
        let total = self.integral();
        self.scaled(1.0 / total)
    }
}

fn check_layout(l: f64, r: f64, b: f64) -> Result<()> {
    if !(r > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidParams(format!("r = {r} and b = {b} must be positive")));
    }
    if l < 0.0 || l > 1.0 - b - 2.0 * r + EDGE_TOL {
        return Err(Error::InvalidParams(format!(
            "l = {l} must lie in [0, {}]",
            1.0 - b - 2.0 * r
        )));
    }
    Ok(())
}

/// Noise-free double hump with unit integral.
pub fn hump_profile(l: f64, r: f64, b: f64) -> Result<PiecewiseConstant> {
    check_layout(l, r, b)?;
    Ok(PiecewiseConstant {
        pieces: vec![(l, l + r, 1.0), (l + b + r, l + b + 2.0 * r, 1.0)],
    }
    .normalized())
}

/// Number of chirp teeth `r / gamma`, which must be a whole number.
pub fn tooth_count(r: f64, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidGamma { gamma, r });
    }
    let q = r / gamma;
    let k = q.round();
    if k < 1.0 || (q - k).abs() > 1e-9 {
        return Err(Error::InvalidGamma { gamma, r });
    }
    Ok(k as usize)
}

/// Noise-free chirp hump with unit integral: teeth of width `gamma / 2`
/// every `gamma` over `[l, l + r]`, then a quarter-height plateau.
pub fn chirp_profile(l: f64, r: f64, b: f64, gamma: f64) -> Result<PiecewiseConstant> {
    check_layout(l, r, b)?;
    let teeth = tooth_count(r, gamma)?;
    let mut pieces: Vec<(f64, f64, f64)> = (0..teeth)
        .map(|j| {
            let j = j as f64;
            (l + j * gamma, l + (2.0 * j + 1.0) * gamma / 2.0, 1.0)
        })
        .collect();
    pieces.push((l + b + r, l + b + 2.0 * r, 0.25));
    Ok(PiecewiseConstant { pieces }.normalized())
}

fn sample_on_grid<R: Rng + ?Sized>(
    profile: &PiecewiseConstant,
    n: usize,
    noise: f64,
    rng: &mut R,
) -> Result<TLpSignal> {
    let grid = unit_grid_1d(n);
    let mut f = Array1::from_iter(grid.column(0).iter().map(|&x| profile.eval(x)));
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidParams(e.to_string()))?;
        f.iter_mut().for_each(|v| *v += normal.sample(rng));
    }
    TLpSignal::scalar(make_uniform(grid)?, f)
}

/// Double hump sampled on `n` grid points of `[0, 1]` plus Gaussian noise.
pub fn gen_hump<R: Rng + ?Sized>(
    l: f64,
    r: f64,
    b: f64,
    n: usize,
    noise: f64,
    rng: &mut R,
) -> Result<TLpSignal> {
    sample_on_grid(&hump_profile(l, r, b)?, n, noise, rng)
}

/// Chirp hump sampled on `n` grid points of `[0, 1]` plus Gaussian noise.
pub fn gen_chirp<R: Rng + ?Sized>(
    l: f64,
    r: f64,
    b: f64,
    gamma: f64,
    n: usize,
    noise: f64,
    rng: &mut R,
) -> Result<TLpSignal> {
    sample_on_grid(&chirp_profile(l, r, b, gamma)?, n, noise, rng)
}

/// Parameters of the 1D hump/chirp dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synth1dConfig {
    pub l: f64,
    pub r: f64,
    pub b: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Probability that a chirp uses `gamma1`.
    pub r1: f64,
    pub noise: f64,
    pub grid: usize,
    pub humps: usize,
    pub chirps: usize,
}

impl Default for Synth1dConfig {
    fn default() -> Self {
        Self {
            l: 0.2,
            r: 0.1,
            b: 0.3,
            gamma1: 0.02,
            gamma2: 0.05,
            r1: 0.5,
            noise: 1.0,
            grid: 150,
            humps: 30,
            chirps: 30,
        }
    }
}

/// Signals with integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledSignals {
    pub signals: Vec<TLpSignal>,
    pub labels: Vec<usize>,
}

pub const LABEL_HUMP: usize = 0;
pub const LABEL_CHIRP1: usize = 1;
pub const LABEL_CHIRP2: usize = 2;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Humps first (label 0), then chirps labelled 1 or 2 by their `gamma`.
///
/// Signal `i` draws from its own RNG stream, so the output is a pure
/// function of `(config, seed)`.
pub fn gen_dataset_1d(cfg: &Synth1dConfig, seed: u64) -> Result<LabeledSignals> {
    if !(0.0..=1.0).contains(&cfg.r1) {
        return Err(Error::InvalidParams(format!("r1 = {} must be a probability", cfg.r1)));
    }
    tooth_count(cfg.r, cfg.gamma1)?;
    tooth_count(cfg.r, cfg.gamma2)?;
    let total = cfg.humps + cfg.chirps;
    let mut signals = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let mut rng = stream(seed, i as u64);
        if i < cfg.humps {
            signals.push(gen_hump(cfg.l, cfg.r, cfg.b, cfg.grid, cfg.noise, &mut rng)?);
            labels.push(LABEL_HUMP);
        } else {
            let first = rng.gen::<f64>() < cfg.r1;
            let gamma = if first { cfg.gamma1 } else { cfg.gamma2 };
            signals.push(gen_chirp(cfg.l, cfg.r, cfg.b, gamma, cfg.grid, cfg.noise, &mut rng)?);
            labels.push(if first { LABEL_CHIRP1 } else { LABEL_CHIRP2 });
        }
    }
    Ok(LabeledSignals { signals, labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class2d {
    M1,
    M2,
}

/// Parameters of the 2D two-class dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synth2dConfig {
    pub nx: usize,
    pub ny: usize,
    pub per_class: usize,
    pub noise: f64,
    pub m1_alpha_mean: f64,
    pub m1_alpha_std: f64,
    pub m2_alpha_mean: f64,
    pub m2_alpha_std: f64,
    pub impulse_min: usize,
    pub impulse_max: usize,
    pub impulse_value: f64,
}

impl Default for Synth2dConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            per_class: 25,
            noise: 1.0,
            m1_alpha_mean: 0.0,
            m1_alpha_std: 1.0,
            m2_alpha_mean: -4.0,
            m2_alpha_std: 1.5,
            impulse_min: 10,
            impulse_max: 20,
            impulse_value: -2.0,
        }
    }
}

/// One 2D draw with the quantities behind it.
#[derive(Debug, Clone)]
pub struct Sample2d {
    pub signal: TLpSignal,
    pub alpha: f64,
    /// Grid indices overwritten by the impulse value (M1 only).
    pub impulses: Vec<usize>,
}

/// `f(x, y) = alpha x exp(-x^2 - y^2) + noise` on a grid of `[0, 1]^2`,
/// with random impulses for class M1. Grid index is `iy * nx + ix`.
pub fn gen_2d<R: Rng + ?Sized>(class: Class2d, cfg: &Synth2dConfig, rng: &mut R) -> Result<Sample2d> {
    if cfg.nx < 2 || cfg.ny < 2 {
        return Err(Error::InvalidParams("grid needs at least 2 x 2 nodes".into()));
    }
    let (mean, std) = match class {
        Class2d::M1 => (cfg.m1_alpha_mean, cfg.m1_alpha_std),
        Class2d::M2 => (cfg.m2_alpha_mean, cfg.m2_alpha_std),
    };
    let alpha = Normal::new(mean, std)
        .map_err(|e| Error::InvalidParams(e.to_string()))?
        .sample(rng);
    let pts = unit_grid_2d(cfg.nx, cfg.ny);
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut f = Array1::from_iter(pts.rows().into_iter().map(|p| {
        let (x, y) = (p[0], p[1]);
        alpha * x * (-x * x - y * y).exp() + noise.sample(rng)
    }));
    let mut impulses = Vec::new();
    if class == Class2d::M1 {
        if cfg.impulse_min > cfg.impulse_max || cfg.impulse_max > f.len() {
            return Err(Error::InvalidParams("impulse count range".into()));
        }
        let count = rng.gen_range(cfg.impulse_min..=cfg.impulse_max);
        impulses = sample(rng, f.len(), count).into_vec();
        impulses.sort_unstable();
        for &k in &impulses {
            f[k] = cfg.impulse_value;
        }
    }
    Ok(Sample2d {
        signal: TLpSignal::scalar(make_uniform(pts)?, f)?,
        alpha,
        impulses,
    })
}

/// `per_class` draws of M1 (label 0) followed by `per_class` of M2 (label 1).
pub fn gen_dataset_2d(cfg: &Synth2dConfig, seed: u64) -> Result<LabeledSignals> {
    let mut signals = Vec::with_capacity(2 * cfg.per_class);
    let mut labels = Vec::with_capacity(2 * cfg.per_class);
    for i in 0..2 * cfg.per_class {
        let mut rng = stream(seed, i as u64);
        let class = if i < cfg.per_class { Class2d::M1 } else { Class2d::M2 };
        signals.push(gen_2d(class, cfg, &mut rng)?.signal);
        labels.push(usize::from(class == Class2d::M2));
    }
    Ok(LabeledSignals { signals, labels })
}

/// Default positivity shift `|min f| + 0.01`.
pub fn default_chi(signal: &TLpSignal) -> f64 {
    let min = signal.values().iter().cloned().fold(f64::INFINITY, f64::min);
    min.abs() + 0.01
}

/// Probability weights proportional to `f + chi` on the signal's support.
///
/// Multichannel signals are averaged across channels first.
pub fn normalize_for_wp(signal: &TLpSignal, chi: f64) -> Result<DiscreteMeasure> {
    let m = signal.channels();
    if m == 0 {
        return Err(Error::InvalidInput("signal has no channels".into()));
    }
    let g: Array1<f64> = signal.values().rows().into_iter().map(|r| r.sum() / m as f64 + chi).collect();
    let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NegativeMass(min));
    }
    let pts: Array2<f64> = signal.measure().points().to_owned();
    DiscreteMeasure::from_masses(pts, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hump_constant_and_support() {
        let p = hump_profile(0.1, 0.2, 0.3).unwrap();
        assert_relative_eq!(p.pieces[0].2, 2.5, epsilon = 1e-12);
        assert_eq!(p.eval(0.2), 2.5);
        assert_eq!(p.eval(0.45), 0.0);
        assert_eq!(p.eval(0.7), 2.5);
        assert_eq!(p.eval(0.85), 0.0);
        assert_relative_eq!(p.integral(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chirp_teeth_and_constant() {
        let p = chirp_profile(0.1, 0.2, 0.3, 0.05).unwrap();
        assert_eq!(p.pieces.len(), 5);
        for (j, piece) in p.pieces[..4].iter().enumerate() {
            assert_relative_eq!(piece.1 - piece.0, 0.025, epsilon = 1e-12);
            assert_relative_eq!(piece.0, 0.1 + 0.05 * j as f64, epsilon = 1e-12);
        }
        assert_relative_eq!(p.pieces[0].2, 1.0 / 0.15, epsilon = 1e-9);
        assert_relative_eq!(p.integral(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gamma_must_divide_r() {
        assert!(matches!(tooth_count(0.1, 0.04), Err(Error::InvalidGamma { .. })));
        assert_eq!(tooth_count(0.1, 0.02).unwrap(), 5);
        assert_eq!(tooth_count(0.1, 0.05).unwrap(), 2);
    }

    #[test]
    fn layout_overflow() {
        assert!(matches!(hump_profile(0.5, 0.2, 0.3), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn generators_are_seeded() {
        let a = gen_hump(0.2, 0.1, 0.3, 150, 1.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = gen_hump(0.2, 0.1, 0.3, 150, 1.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let c = gen_hump(0.2, 0.1, 0.3, 150, 1.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_1d_shape() {
        let d = gen_dataset_1d(&Synth1dConfig::default(), 1).unwrap();
        assert_eq!(d.signals.len(), 60);
        assert!(d.signals.iter().all(|s| s.len() == 150));
        assert_eq!(d.labels.iter().filter(|&&l| l == LABEL_HUMP).count(), 30);
        let again = gen_dataset_1d(&Synth1dConfig::default(), 1).unwrap();
        assert_eq!(d.signals, again.signals);
        assert_eq!(d.labels, again.labels);
    }

    #[test]
    fn m1_impulses_in_range() {
        let cfg = Synth2dConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let s = gen_2d(Class2d::M1, &cfg, &mut rng).unwrap();
            assert!((10..=20).contains(&s.impulses.len()));
            for &k in &s.impulses {
                assert_eq!(s.signal.values()[[k, 0]], -2.0);
            }
        }
    }

    #[test]
    fn m2_alpha_mean() {
        let cfg = Synth2dConfig {
            nx: 2,
            ny: 2,
            ..Synth2dConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| gen_2d(Class2d::M2, &cfg, &mut rng).unwrap().alpha)
            .sum::<f64>()
            / n as f64;
        assert!((mean + 4.0).abs() < 3.0 * 1.5 / (n as f64).sqrt());
    }

    #[test]
    fn normalization_examples() {
        let mu = make_uniform(unit_grid_1d(4)).unwrap();
        let s = TLpSignal::scalar(mu.clone(), Array1::from(vec![0.1, 0.2, 0.3, 0.4])).unwrap();
        let w = normalize_for_wp(&s, 0.0).unwrap();
        assert_relative_eq!(w.weights()[3], 0.4, epsilon = 1e-12);
        let z = TLpSignal::scalar(mu.clone(), Array1::zeros(4)).unwrap();
        assert!(normalize_for_wp(&z, 1.0).unwrap().is_uniform());
        let neg = TLpSignal::scalar(mu, Array1::from(vec![-2.0, 0.0, 1.0, 3.0])).unwrap();
        assert!(matches!(normalize_for_wp(&neg, 1.5), Err(Error::NegativeMass(_))));
        let w = normalize_for_wp(&neg, default_chi(&neg)).unwrap();
        assert_relative_eq!(w.weights().sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn m1_signal_needs_chi_above_two() {
        let s = gen_2d(Class2d::M1, &Synth2dConfig::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let min = s.signal.values().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min <= -2.0);
        assert!(normalize_for_wp(&s.signal, 2.0).is_err());
        let w = normalize_for_wp(&s.signal, default_chi(&s.signal)).unwrap();
        assert_relative_eq!(w.weights().sum(), 1.0, epsilon = 1e-12);
    }
}
