//! Wasserstein and TLp distances and maps.
//!
//! A TLp problem between `(mu, f)` and `(nu, g)` is solved as a Wasserstein
//! problem between the lifted measures on `Omega x R^m`.

use ndarray::s;

use crate::error::{Error, Result};
use crate::measures::{lift, DiscreteMeasure, TLpSignal, TransportMap, TransportPlan};
use crate::solvers::{barycentric_map, check_exponent, cost_matrix, solve, Solver};

/// Optimal plan between two measures for the cost `|x - y|_p^p`.
pub fn wasserstein_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    solver: &Solver,
) -> Result<TransportPlan> {
    check_exponent(p)?;
    let c = cost_matrix(mu.points(), nu.points(), p)?;
    solve(mu, nu, &c, solver)
}

/// `W_p(mu, nu)`, the p-th root of the optimal cost.
pub fn wasserstein_distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    solver: &Solver,
) -> Result<f64> {
    let plan = wasserstein_plan(mu, nu, p, solver)?;
    Ok(root(plan.cost, p))
}

/// Map from `mu` toward `nu`; barycentric when the plan splits mass.
pub fn wasserstein_map(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    solver: &Solver,
) -> Result<TransportMap> {
    let plan = wasserstein_plan(mu, nu, p, solver)?;
    barycentric_map(&plan, nu.points())
}

/// Optimal plan between the lifted measures of two signals.
pub fn tlp_plan(
    a: &TLpSignal,
    b: &TLpSignal,
    p: f64,
    solver: &Solver,
    channel_scale: f64,
) -> Result<TransportPlan> {
    if a.channels() != b.channels() {
        return Err(Error::ChannelMismatch(a.channels(), b.channels()));
    }
    if a.measure().dim() != b.measure().dim() {
        return Err(Error::DimMismatch(a.measure().dim(), b.measure().dim()));
    }
    let la = lift(a, channel_scale)?;
    let lb = lift(b, channel_scale)?;
    wasserstein_plan(la.measure(), lb.measure(), p, solver)
}

/// `d_TLp((mu, f), (nu, g))` with channel values multiplied by `channel_scale`.
pub fn tlp_distance(
    a: &TLpSignal,
    b: &TLpSignal,
    p: f64,
    solver: &Solver,
    channel_scale: f64,
) -> Result<f64> {
    let plan = tlp_plan(a, b, p, solver, channel_scale)?;
    Ok(root(plan.cost, p))
}

/// Map on `Omega x R^m` sending atom `i` of `a` to `(T(x_i), g(T(x_i)))`.
///
/// Channel coordinates of the images are reported in the signal's own
/// units, i.e. with the channel scale divided back out.
pub fn tlp_map(
    a: &TLpSignal,
    b: &TLpSignal,
    p: f64,
    solver: &Solver,
    channel_scale: f64,
) -> Result<TransportMap> {
    let plan = tlp_plan(a, b, p, solver, channel_scale)?;
    let lb = lift(b, channel_scale)?;
    let mut map = barycentric_map(&plan, lb.measure().points())?;
    let d = a.measure().dim();
    map.images
        .slice_mut(s![.., d..])
        .mapv_inplace(|v| v / channel_scale);
    Ok(map)
}

pub(crate) fn root(cost: f64, p: f64) -> f64 {
    let c = cost.max(0.0);
    if p == 2.0 {
        c.sqrt()
    } else if p == 1.0 {
        c
    } else {
        c.powf(1.0 / p)
    }
}
