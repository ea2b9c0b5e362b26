use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltlp::finance::{
    backtest, cor_distance, pnl_series, quintile_mask, standardize_rows, synthetic_prices, Backtest, BacktestConfig,
    PriceSeries, ReturnKind, WindowConfig,
};
use ltlp::measures::DistanceMethod;

const KINDS: [ReturnKind; 2] = [ReturnKind::Rr, ReturnKind::Mr];

fn config() -> BacktestConfig {
    BacktestConfig {
        window: 10,
        k: 15,
        windows: WindowConfig {
            reference_windows: 20,
            ..WindowConfig::default()
        },
    }
}

fn run(all: &PriceSeries, method: DistanceMethod) -> Backtest {
    let (universe, market) = all.split_ticker("SPY").unwrap();
    backtest(&universe, Some(market.view()), method, &[1, 3], &KINDS, &config()).unwrap()
}

/// Multiply every price on `day` by an instrument-specific factor.
fn perturb(all: &PriceSeries, day: usize, rng: &mut ChaCha8Rng) -> PriceSeries {
    let mut p = all.prices().to_owned();
    for v in p.row_mut(day).iter_mut() {
        *v *= 1.0 + rng.gen_range(-0.2..0.2);
    }
    PriceSeries::new(all.dates().to_vec(), all.tickers().to_vec(), p).unwrap()
}

fn assert_causal(method: DistanceMethod, days: &[usize]) {
    let all = synthetic_prices(90, 5, 9).unwrap();
    let base = run(&all, method);
    let m = config().window;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &day in days {
        let tainted = run(&perturb(&all, day, &mut rng), method);
        // price row `day` enters return rows `day - 1` and `day`; window w
        // ends on return row w + m - 1
        for (a, b) in base.series.iter().zip(&tainted.series) {
            for (r, &w) in a.windows.iter().enumerate() {
                if w + m < day {
                    assert_eq!(a.forecasts.row(r), b.forecasts.row(r), "{method:?} window {w} day {day}");
                }
            }
            assert_eq!(a.windows, b.windows);
        }
    }
}

#[test]
fn cor_forecasts_ignore_later_days() {
    assert_causal(DistanceMethod::Cor, &(2..90).collect::<Vec<_>>());
}

#[test]
fn ltlp_forecasts_ignore_later_days() {
    assert_causal(DistanceMethod::Ltlp, &(2..90).step_by(3).collect::<Vec<_>>());
}

#[test]
fn wp_and_lwp_forecasts_ignore_later_days() {
    assert_causal(DistanceMethod::Wp, &[35, 60, 88]);
    assert_causal(DistanceMethod::Lwp, &[35, 60, 88]);
}

#[test]
fn later_days_do_change_later_forecasts() {
    let all = synthetic_prices(90, 5, 9).unwrap();
    let base = run(&all, DistanceMethod::Cor);
    let tainted = run(&perturb(&all, 45, &mut ChaCha8Rng::seed_from_u64(3)), DistanceMethod::Cor);
    assert_ne!(base.series[0].forecasts, tainted.series[0].forecasts);
}

#[test]
fn sign_oracle_bounds_every_method() {
    let all = synthetic_prices(90, 5, 4).unwrap();
    for method in [DistanceMethod::Cor, DistanceMethod::Ltlp, DistanceMethod::Lwp] {
        for s in &run(&all, method).series {
            for q in 1..=5 {
                let pnl = pnl_series(s.forecasts.view(), s.realized.view(), q).unwrap();
                for (r, v) in pnl.iter().enumerate() {
                    let mask = quintile_mask(s.forecasts.row(r), q).unwrap();
                    let oracle: f64 = mask.iter().map(|&i| s.realized[[r, i]].abs()).sum();
                    assert!(*v <= oracle + 1e-15);
                }
            }
        }
    }
}

#[test]
fn cor_is_half_mean_squared_gap_of_standardized_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let a = Array2::from_shape_fn((4, 6), |_| rng.gen_range(-0.05..0.05));
        let b = Array2::from_shape_fn((4, 6), |_| rng.gen_range(-0.05..0.05));
        let (sa, sb) = (standardize_rows(a.view()), standardize_rows(b.view()));
        let sq: f64 = sa.iter().zip(sb.iter()).map(|(x, y)| (x - y).powi(2)).sum();
        let d = cor_distance(sa.view(), sb.view()).unwrap();
        assert!((d - sq / (2.0 * 24.0)).abs() < 1e-12);
    }
}
