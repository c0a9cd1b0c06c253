//! Weighted average marginal effects via Riesz representers.
//!
//! For a weight function omega with representer alpha (demeaned so that
//! E[alpha(X)] = 0), the weighted average derivative of the regression
//! function equals E[alpha(X) Y], so it can be estimated by a weighted
//! average of outcomes instead of a nonparametric derivative. The named
//! variants are the classics: alpha(x) = x (linear regression slope),
//! alpha = -f'/f (Hardle & Stoker 1989), alpha = -2f' with leave-one-out
//! kernels (Powell, Stock & Stoker 1989), and a discrete delta-shift version.
//! `orthogonal_ad` combines the weighting and regression routes in a
//! Neyman-orthogonal, doubly robust cross-fit moment.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numcore::kde::silverman_bandwidth;
use crate::numcore::ols::{ols, SeMode};
use crate::numcore::stats;
use crate::numcore::{Dataset, KernelDensity, Series};
use crate::weights::StepWeightFunction;

/// Density floor for score-type representers; floored evaluations are
/// counted and reported rather than erroring.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Number of delete-d jackknife blocks (d = n/20).
const JACKKNIFE_BLOCKS: usize = 20;

/// Piecewise-linear representer table for user-supplied alpha functions;
/// evaluation clamps outside the table range.
#[derive(Debug, Clone)]
pub struct AlphaTable {
    xs: Vec<f64>,
    alphas: Vec<f64>,
}

impl AlphaTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSpec("alpha table needs at least 2 points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
        Ok(AlphaTable {
            xs: points.iter().map(|p| p.0).collect(),
            alphas: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        if x <= self.xs[0] {
            return self.alphas[0];
        }
        if x >= self.xs[m - 1] {
            return self.alphas[m - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.alphas[i - 1] * (1.0 - w) + self.alphas[i] * w
    }
}

#[derive(Debug, Clone)]
pub enum RieszVariant {
    /// alpha(x) = (x - mean)/var: reproduces the regression slope.
    Linear,
    /// alpha(x) = -f'(x)/f(x): unweighted average derivative.
    Score { bandwidth: Option<f64> },
    /// alpha(x) = -2 f'(x), leave-one-out kernels: density-weighted average
    /// derivative.
    DensityWeighted { bandwidth: Option<f64> },
    /// alpha(x) = -(f(x) - f(x - delta))/(delta f(x)): average causal effect
    /// of a +delta shift.
    DeltaChange { delta: f64, bandwidth: Option<f64> },
    Custom { table: AlphaTable },
}

impl RieszVariant {
    pub fn name(&self) -> &'static str {
        match self {
            RieszVariant::Linear => "linear",
            RieszVariant::Score { .. } => "score",
            RieszVariant::DensityWeighted { .. } => "density_weighted",
            RieszVariant::DeltaChange { .. } => "delta_change",
            RieszVariant::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmdeResult {
    pub theta: f64,
    pub se: f64,
    pub variant: String,
    pub n: usize,
    pub bandwidth: Option<f64>,
    pub flooring_count: usize,
    /// omega(x) = E_n[1{X >= x} alpha(X)], the weighting this estimator
    /// actually applies.
    pub implied_weights: Option<StepWeightFunction>,
}

/// Realized representer values at the sample points, demeaned in two passes
/// so the sample mean is zero to machine precision.
///
/// The score and delta-change representers target unit-mass weightings, so
/// after demeaning they are divided by the implied total mass E_n[alpha(X) X]
/// (a consistent estimate of 1). This self-normalization cancels the
/// first-order kernel smoothing bias and makes the estimator exact under a
/// linear regression function for any delta and bandwidth.
fn realized_alpha(x: &[f64], variant: &RieszVariant) -> Result<(Vec<f64>, Option<f64>, usize)> {
    let mut flooring = 0usize;
    let (mut alpha, bw): (Vec<f64>, Option<f64>) = match variant {
        RieszVariant::Linear => {
            let var = stats::variance(x);
            if var <= 0.0 {
                return Err(Error::DegenerateVariance("x".into()));
            }
            let m = stats::mean(x);
            (x.iter().map(|v| (v - m) / var).collect(), None)
        }
        RieszVariant::Score { bandwidth } => {
            let kd = KernelDensity::new(x, *bandwidth)?;
            let a = x
                .iter()
                .map(|&v| {
                    let mut f = kd.density(v);
                    if f < DENSITY_FLOOR {
                        f = DENSITY_FLOOR;
                        flooring += 1;
                    }
                    -kd.deriv(v) / f
                })
                .collect();
            (a, Some(kd.bandwidth))
        }
        RieszVariant::DensityWeighted { bandwidth } => {
            // undersmooth relative to the density-optimal n^(-1/5) rate: the
            // averaged functional needs the squared bias to vanish faster
            // than 1/sqrt(n)
            let h = bandwidth.unwrap_or_else(|| {
                1.06 * stats::sd(x) * (x.len() as f64).powf(-2.0 / 7.0)
            });
            let kd = KernelDensity::new(x, Some(h))?;
            let a = (0..x.len()).map(|i| -2.0 * kd.loo_deriv_at(i)).collect();
            (a, Some(kd.bandwidth))
        }
        RieszVariant::DeltaChange { delta, bandwidth } => {
            if *delta <= 0.0 || !delta.is_finite() {
                return Err(Error::InvalidSpec(format!("delta must be > 0, got {delta}")));
            }
            let kd = KernelDensity::new(x, *bandwidth)?;
            let a = x
                .iter()
                .map(|&v| {
                    let mut f = kd.density(v);
                    if f < DENSITY_FLOOR {
                        f = DENSITY_FLOOR;
                        flooring += 1;
                    }
                    -(f - kd.density(v - delta)) / (delta * f)
                })
                .collect();
            (a, Some(kd.bandwidth))
        }
        RieszVariant::Custom { table } => (x.iter().map(|&v| table.eval(v)).collect(), None),
    };
    for _ in 0..2 {
        let m = stats::mean(&alpha);
        for a in alpha.iter_mut() {
            *a -= m;
        }
    }
    if matches!(variant, RieszVariant::Score { .. } | RieszVariant::DeltaChange { .. }) {
        normalize_unit_mass(&mut alpha, x);
    }
    Ok((alpha, bw, flooring))
}

/// Divide a demeaned representer by its implied weight mass E_n[alpha(X) X].
fn normalize_unit_mass(alpha: &mut [f64], x: &[f64]) {
    let mass =
        alpha.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() / alpha.len() as f64;
    if mass.abs() > 1e-8 {
        for a in alpha.iter_mut() {
            *a /= mass;
        }
    }
}

fn theta_for(y: &[f64], x: &[f64], variant: &RieszVariant) -> Result<f64> {
    let (alpha, _, _) = realized_alpha(x, variant)?;
    Ok(alpha.iter().zip(y).map(|(a, v)| a * v).sum::<f64>() / y.len() as f64)
}

/// theta = E_n[alpha(X) Y] with the demeaned realized representer.
pub fn weighted_outcome_estimate(y: &Series, x: &Series, variant: &RieszVariant) -> Result<AmdeResult> {
    if y.n() != x.n() {
        return Err(Error::LengthMismatch(y.n(), x.n()));
    }
    let (alpha, bandwidth, flooring_count) = realized_alpha(x.values(), variant)?;
    let n = y.n();
    let theta = alpha.iter().zip(y.values()).map(|(a, v)| a * v).sum::<f64>() / n as f64;

    let se = match variant {
        RieszVariant::Linear => {
            // influence-function standard error: the HC1 slope se
            let regs = Dataset::from_columns(vec![x.clone().renamed("x")])?;
            ols(y, &regs, true, SeMode::Hc1)?.se("x").expect("x present")
        }
        _ => jackknife_se(y.values(), x.values(), |ys, xs| theta_for(ys, xs, variant))?,
    };

    let implied_weights = Some(implied_step_weights(x.values(), &alpha));
    Ok(AmdeResult {
        theta,
        se,
        variant: variant.name().into(),
        n,
        bandwidth,
        flooring_count,
        implied_weights,
    })
}

/// omega(knot) = E_n[1{X >= knot} alpha(X)] at every unique sample value;
/// alpha is already demeaned, so the engine's extra demeaning is a no-op.
fn implied_step_weights(x: &[f64], alpha: &[f64]) -> StepWeightFunction {
    crate::weights::raw_cov_step(x, alpha, crate::weights::WeightSe::None)
}

/// Delete-d jackknife over contiguous blocks (d = n/20), re-estimating the
/// full pipeline on every reduced sample.
fn jackknife_se<F>(y: &[f64], x: &[f64], estimate: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    let n = y.len();
    let g = JACKKNIFE_BLOCKS.min(n / 8).max(2);
    let bounds: Vec<(usize, usize)> =
        (0..g).map(|b| (b * n / g, (b + 1) * n / g)).collect();
    let thetas: Vec<f64> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let ys: Vec<f64> = y[..lo].iter().chain(&y[hi..]).copied().collect();
            let xs: Vec<f64> = x[..lo].iter().chain(&x[hi..]).copied().collect();
            estimate(&ys, &xs)
        })
        .collect::<Result<_>>()?;
    let mean = stats::mean(&thetas);
    let ss: f64 = thetas.iter().map(|t| (t - mean) * (t - mean)).sum();
    let d = n as f64 / g as f64;
    Ok(((n as f64 - d) / (d * g as f64) * ss).sqrt())
}

/// Average causal effect of shifting the shock by +delta.
pub fn delta_change_estimate(y: &Series, x: &Series, delta: f64) -> Result<AmdeResult> {
    weighted_outcome_estimate(y, x, &RieszVariant::DeltaChange { delta, bandwidth: None })
}

/// Weighted effect of one-unit treatment steps for integer-supported X,
/// optionally within discrete cells. Without cells this reproduces the OLS
/// slope exactly.
#[derive(Debug, Clone)]
pub struct DiscreteEffect {
    /// Step locations s (effect of moving from s-1 to s).
    pub steps: Vec<i64>,
    /// Per-step weights, normalized to sum to one.
    pub weights: Vec<f64>,
    /// Per-step outcome increments (pooled across cells by weight).
    pub increments: Vec<f64>,
    pub effect: f64,
}

pub fn discrete_treatment_effect(
    y: &Series,
    x: &Series,
    cells: Option<&Series>,
) -> Result<DiscreteEffect> {
    if y.n() != x.n() {
        return Err(Error::LengthMismatch(y.n(), x.n()));
    }
    let xi: Vec<i64> = x
        .values()
        .iter()
        .map(|&v| {
            let r = v.round();
            if (v - r).abs() > 1e-9 {
                Err(Error::InvalidSpec(format!("treatment value {v} is not an integer")))
            } else {
                Ok(r as i64)
            }
        })
        .collect::<Result<_>>()?;
    let lo = *xi.iter().min().expect("nonempty");
    let hi = *xi.iter().max().expect("nonempty");
    if lo == hi {
        return Err(Error::DegenerateVariance(x.name().to_string()));
    }

    let cell_labels: Vec<f64> = match cells {
        Some(c) => {
            if c.n() != x.n() {
                return Err(Error::LengthMismatch(c.n(), x.n()));
            }
            c.values().to_vec()
        }
        None => vec![0.0; x.n()],
    };
    let mut groups: Vec<f64> = cell_labels.clone();
    groups.sort_unstable_by(|a, b| a.total_cmp(b));
    groups.dedup();

    let steps: Vec<i64> = (lo + 1..=hi).collect();
    let mut raw = vec![0.0; steps.len()];
    let mut num = vec![0.0; steps.len()];
    let n = x.n() as f64;

    for &gl in &groups {
        let idx: Vec<usize> =
            (0..xi.len()).filter(|&i| cell_labels[i] == gl).collect();
        let gx: Vec<i64> = idx.iter().map(|&i| xi[i]).collect();
        let glo = *gx.iter().min().expect("cell nonempty");
        let ghi = *gx.iter().max().expect("cell nonempty");
        let mean_x = gx.iter().map(|&v| v as f64).sum::<f64>() / gx.len() as f64;
        // per-level outcome means within the cell
        let mut level_sum = vec![0.0; (ghi - glo + 1) as usize];
        let mut level_cnt = vec![0usize; (ghi - glo + 1) as usize];
        for &i in &idx {
            let l = (xi[i] - glo) as usize;
            level_sum[l] += y.values()[i];
            level_cnt[l] += 1;
        }
        for (off, &cnt) in level_cnt.iter().enumerate() {
            if cnt == 0 {
                return Err(Error::MissingStep(glo + off as i64));
            }
        }
        let g_mean: Vec<f64> =
            level_sum.iter().zip(&level_cnt).map(|(s, &c)| s / c as f64).collect();
        for s in glo + 1..=ghi {
            // E_n[1{X >= s}(X - mean_cell) | cell] * cell frequency
            let u: f64 = gx
                .iter()
                .filter(|&&v| v >= s)
                .map(|&v| v as f64 - mean_x)
                .sum::<f64>()
                / n;
            let k = (s - lo - 1) as usize;
            raw[k] += u;
            num[k] += u * (g_mean[(s - glo) as usize] - g_mean[(s - glo - 1) as usize]);
        }
    }

    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateVariance(x.name().to_string()));
    }
    let weights: Vec<f64> = raw.iter().map(|u| u / total).collect();
    let effect = num.iter().sum::<f64>() / total;
    let increments: Vec<f64> = num
        .iter()
        .zip(&raw)
        .map(|(nm, &u)| if u != 0.0 { nm / u } else { 0.0 })
        .collect();
    Ok(DiscreteEffect { steps, weights, increments, effect })
}

/// Local-linear kernel regression on a fixed grid: intercept is the fitted
/// value, slope the fitted derivative. Queries interpolate the grid.
#[derive(Debug, Clone)]
pub struct LocalLinearFit {
    grid: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    pub bandwidth: f64,
}

const LL_GRID: usize = 512;
const LL_CUTOFF: f64 = 9.0;

pub fn local_linear_fit(x: &[f64], y: &[f64], bandwidth: Option<f64>) -> Result<LocalLinearFit> {
    if x.len() < 50 {
        return Err(Error::InsufficientData { needed: 50, have: x.len() });
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::BandwidthDegenerate(h)),
        None => {
            let h = 1.5 * silverman_bandwidth(x);
            if h <= 0.0 {
                return Err(Error::BandwidthDegenerate(h));
            }
            h
        }
    };
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let grid: Vec<f64> = (0..LL_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (LL_GRID - 1) as f64)
        .collect();

    let fits: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&x0| {
            let a = xs.partition_point(|&v| v < x0 - LL_CUTOFF * h);
            let b = xs.partition_point(|&v| v <= x0 + LL_CUTOFF * h);
            let (mut sw, mut swd, mut swd2, mut swy, mut swdy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in a..b {
                let d = xs[j] - x0;
                let w = (-0.5 * (d / h) * (d / h)).exp();
                sw += w;
                swd += w * d;
                swd2 += w * d * d;
                swy += w * ys[j];
                swdy += w * d * ys[j];
            }
            let det = sw * swd2 - swd * swd;
            if det.abs() < 1e-300 || sw == 0.0 {
                (f64::NAN, f64::NAN)
            } else {
                ((swd2 * swy - swd * swdy) / det, (sw * swdy - swd * swy) / det)
            }
        })
        .collect();

    let mut g: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let mut dg: Vec<f64> = fits.iter().map(|f| f.1).collect();
    // patch grid points whose window was effectively empty from neighbors
    for i in 0..g.len() {
        if g[i].is_nan() {
            let left = (0..i).rev().find(|&j| !g[j].is_nan());
            let right = (i + 1..g.len()).find(|&j| !g[j].is_nan());
            let src = left.or(right).ok_or(Error::BandwidthDegenerate(h))?;
            g[i] = g[src];
            dg[i] = dg[src];
        }
    }
    Ok(LocalLinearFit { grid, g, dg, bandwidth: h })
}

impl LocalLinearFit {
    fn interp(&self, table: &[f64], x: f64) -> f64 {
        let m = self.grid.len();
        if x <= self.grid[0] {
            return table[0];
        }
        if x >= self.grid[m - 1] {
            return table[m - 1];
        }
        let step = (self.grid[m - 1] - self.grid[0]) / (m - 1) as f64;
        let t = (x - self.grid[0]) / step;
        let i = (t.floor() as usize).min(m - 2);
        let w = t - i as f64;
        table[i] * (1.0 - w) + table[i + 1] * w
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.interp(&self.g, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.interp(&self.dg, x)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
}

/// Weighting for the regression plug-in estimator.
#[derive(Debug, Clone)]
pub enum WeightTarget {
    /// omega = estimated density of X (unweighted average derivative),
    /// normalized over the evaluation window.
    Density,
    /// A step weight function, integrated exactly against the fitted curve.
    Step(StepWeightFunction),
}

#[derive(Debug, Clone)]
pub struct PluginResult {
    pub theta: f64,
    pub se: f64,
    pub bandwidth: f64,
}

/// Regression plug-in: fit g nonparametrically, then average its derivative
/// under the target weights.
pub fn regression_plugin_ad(y: &Series, x: &Series, target: &WeightTarget) -> Result<PluginResult> {
    if y.n() != x.n() {
        return Err(Error::LengthMismatch(y.n(), x.n()));
    }
    let point = plugin_theta(y.values(), x.values(), target)?;
    let bandwidth = 1.5 * silverman_bandwidth(x.values());
    let se = jackknife_se(y.values(), x.values(), |ys, xs| plugin_theta(ys, xs, target))?;
    Ok(PluginResult { theta: point, se, bandwidth })
}

fn plugin_theta(y: &[f64], x: &[f64], target: &WeightTarget) -> Result<f64> {
    let ll = local_linear_fit(x, y, None)?;
    match target {
        WeightTarget::Density => {
            let kd = KernelDensity::new(x, None)?;
            // Simpson over the grid of both f-hat and g-hat'
            let grid = ll.grid();
            let m = grid.len() - 1 - (grid.len() - 1) % 2;
            let step = (grid[m] - grid[0]) / m as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..=m {
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let xg = grid[0] + step * i as f64;
                let f = kd.density(xg);
                num += w * f * ll.derivative(xg);
                den += w * f;
            }
            Ok(num / den)
        }
        WeightTarget::Step(wf) => {
            let knots = wf.knots();
            let mut acc = 0.0;
            for i in 1..knots.len() {
                acc += wf.values()[i] * (ll.predict(knots[i]) - ll.predict(knots[i - 1]));
            }
            Ok(acc)
        }
    }
}

/// Which nuisance to corrupt in the double-robustness checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuisanceCorruption {
    None,
    /// Replace the fitted regression function (and its derivative) by zero.
    ZeroRegression,
    /// Replace the fitted representer by zero.
    ZeroRepresenter,
}

/// Two-fold cross-fit orthogonal estimator of the average derivative:
/// nuisances (local-linear g, kernel score alpha) are fit on one fold and the
/// doubly robust moment g'(X) + alpha(X)(Y - g(X)) is averaged on the other,
/// then the folds are swapped. Folds split by even/odd index for
/// reproducibility under time ordering.
pub fn orthogonal_ad(y: &Series, x: &Series, corruption: NuisanceCorruption) -> Result<AmdeResult> {
    if y.n() != x.n() {
        return Err(Error::LengthMismatch(y.n(), x.n()));
    }
    if y.n() < 100 {
        return Err(Error::InsufficientData { needed: 100, have: y.n() });
    }
    let theta = crossfit_theta(y.values(), x.values(), corruption)?;
    let se = jackknife_se(y.values(), x.values(), |ys, xs| crossfit_theta(ys, xs, corruption))?;
    Ok(AmdeResult {
        theta,
        se,
        variant: match corruption {
            NuisanceCorruption::None => "orthogonal".into(),
            NuisanceCorruption::ZeroRegression => "orthogonal(zero g)".into(),
            NuisanceCorruption::ZeroRepresenter => "orthogonal(zero alpha)".into(),
        },
        n: y.n(),
        bandwidth: None,
        flooring_count: 0,
        implied_weights: None,
    })
}

fn crossfit_theta(y: &[f64], x: &[f64], corruption: NuisanceCorruption) -> Result<f64> {
    let n = y.len();
    let even: Vec<usize> = (0..n).step_by(2).collect();
    let odd: Vec<usize> = (1..n).step_by(2).collect();
    let mut total = 0.0;
    for (est, eval) in [(&even, &odd), (&odd, &even)] {
        let xe: Vec<f64> = est.iter().map(|&i| x[i]).collect();
        let ye: Vec<f64> = est.iter().map(|&i| y[i]).collect();
        let (ll, kd) = match corruption {
            NuisanceCorruption::ZeroRegression => {
                (None, Some(KernelDensity::new(&xe, None)?))
            }
            NuisanceCorruption::ZeroRepresenter => (Some(local_linear_fit(&xe, &ye, None)?), None),
            NuisanceCorruption::None => (
                Some(local_linear_fit(&xe, &ye, None)?),
                Some(KernelDensity::new(&xe, None)?),
            ),
        };
        // realized representer on the evaluation fold, demeaned there to
        // enforce the E[alpha] = 0 side condition
        let mut alpha: Vec<f64> = match &kd {
            None => vec![0.0; eval.len()],
            Some(kd) => eval
                .iter()
                .map(|&i| {
                    let f = kd.density(x[i]).max(DENSITY_FLOOR);
                    -kd.deriv(x[i]) / f
                })
                .collect(),
        };
        if kd.is_some() {
            for _ in 0..2 {
                let m = stats::mean(&alpha);
                alpha.iter_mut().for_each(|a| *a -= m);
            }
            let xe_eval: Vec<f64> = eval.iter().map(|&i| x[i]).collect();
            normalize_unit_mass(&mut alpha, &xe_eval);
        }
        let mut fold_sum = 0.0;
        for (k, &i) in eval.iter().enumerate() {
            let (gx, dgx) = match &ll {
                Some(ll) => (ll.predict(x[i]), ll.derivative(x[i])),
                None => (0.0, 0.0),
            };
            fold_sum += dgx + alpha[k] * (y[i] - gx);
        }
        total += fold_sum / eval.len() as f64;
    }
    Ok(total / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;
    use crate::projections::local_projection;
    use crate::weights::observed_weights;
    use approx::assert_relative_eq;

    fn series(name: &str, v: Vec<f64>) -> Series {
        Series::new(name, v).unwrap()
    }

    #[test]
    fn linear_variant_equals_projection_slope() {
        let mut rng = RngStream::new(41, 0);
        let n = 2000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 1.3 * v + rng.standard_normal()).collect();
        let data = Dataset::from_columns(vec![
            series("y", y.clone()),
            series("x", x.clone()),
        ])
        .unwrap();
        let lp = &local_projection(&data, "y", "x", &[], &[0], SeMode::Hc1).unwrap()[0];
        let r = weighted_outcome_estimate(
            &series("y", y),
            &series("x", x),
            &RieszVariant::Linear,
        )
        .unwrap();
        assert_relative_eq!(r.theta, lp.beta, epsilon = 1e-10);
    }

    #[test]
    fn linear_implied_weights_match_observed() {
        let mut rng = RngStream::new(42, 0);
        let x = rng.normal_vec(500);
        let y = rng.normal_vec(500);
        let r = weighted_outcome_estimate(
            &series("y", y),
            &series("x", x.clone()),
            &RieszVariant::Linear,
        )
        .unwrap();
        let implied = r.implied_weights.unwrap();
        let obs = observed_weights(&series("x", x), false).unwrap();
        for i in 0..obs.len() {
            assert_relative_eq!(implied.values()[i], obs.values()[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn demeaning_is_enforced() {
        let mut rng = RngStream::new(43, 0);
        let x = rng.normal_vec(1000);
        let (alpha, _, _) =
            realized_alpha(&x, &RieszVariant::Score { bandwidth: None }).unwrap();
        let m = stats::mean(&alpha);
        assert!(m.abs() <= 1e-13 * stats::sd(&alpha).max(1.0));
    }

    #[test]
    fn score_variant_symmetric_target_is_zero() {
        let mut rng = RngStream::new(44, 0);
        let n = 100_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v * v + 0.1 * rng.standard_normal()).collect();
        let r = weighted_outcome_estimate(
            &series("y", y),
            &series("x", x),
            &RieszVariant::Score { bandwidth: None },
        )
        .unwrap();
        assert!(r.theta.abs() <= 3.0 * r.se, "theta {} se {}", r.theta, r.se);
    }

    #[test]
    fn density_weighted_linear_target() {
        // for g(x) = x and standard normal X the density-weighted average
        // derivative is integral of f^2 = 1/(2 sqrt(pi))
        let mut rng = RngStream::new(45, 0);
        let n = 100_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v + 0.1 * rng.standard_normal()).collect();
        let r = weighted_outcome_estimate(
            &series("y", y),
            &series("x", x),
            &RieszVariant::DensityWeighted { bandwidth: None },
        )
        .unwrap();
        let target = 0.28209479177387814; // 1/(2 sqrt(pi)), quadrature of phi^2
        assert!(
            (r.theta - target).abs() <= (3.0 * r.se).max(0.01),
            "theta {} se {}",
            r.theta,
            r.se
        );
    }

    #[test]
    fn delta_change_linear_g_any_delta() {
        let mut rng = RngStream::new(46, 0);
        let n = 20_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.2 * rng.standard_normal()).collect();
        for delta in [0.5, 1.0] {
            let r = delta_change_estimate(&series("y", y.clone()), &series("x", x.clone()), delta)
                .unwrap();
            assert!(
                (r.theta - 2.0).abs() <= (3.0 * r.se).max(0.05),
                "delta {delta}: theta {} se {}",
                r.theta,
                r.se
            );
        }
    }

    #[test]
    fn delta_change_matches_counterfactual_oracle() {
        // quadratic g with known counterfactual mean on the same draws
        let mut rng = RngStream::new(47, 0);
        let n = 100_000;
        let x = rng.normal_vec(n);
        let g = |v: f64| v * v;
        let y: Vec<f64> = x.iter().map(|&v| g(v) + 0.1 * rng.standard_normal()).collect();
        let delta = 1.0;
        let oracle =
            x.iter().map(|&v| (g(v + delta) - g(v)) / delta).sum::<f64>() / n as f64;
        let r =
            delta_change_estimate(&series("y", y), &series("x", x.clone()), delta).unwrap();
        assert!(
            (r.theta - oracle).abs() <= 3.0 * r.se,
            "theta {} oracle {oracle} se {}",
            r.theta,
            r.se
        );
    }

    #[test]
    fn delta_change_limits_to_score() {
        let mut rng = RngStream::new(48, 0);
        let n = 50_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v * v * 0.5 + v).collect();
        let small = delta_change_estimate(&series("y", y.clone()), &series("x", x.clone()), 0.01)
            .unwrap();
        let score = weighted_outcome_estimate(
            &series("y", y),
            &series("x", x),
            &RieszVariant::Score { bandwidth: None },
        )
        .unwrap();
        let tol = 3.0 * (small.se.powi(2) + score.se.powi(2)).sqrt();
        assert!(
            (small.theta - score.theta).abs() <= tol.max(0.02),
            "delta {} vs score {}",
            small.theta,
            score.theta
        );
    }

    #[test]
    fn discrete_uniform_three_levels() {
        // X uniform on {0,1,2}: weights (1/2, 1/2), effect = (g(2)-g(0))/2,
        // equal to the OLS slope exactly
        let x: Vec<f64> = (0..300).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1.5 * v * v - v).collect();
        let r = discrete_treatment_effect(&series("y", y.clone()), &series("x", x.clone()), None)
            .unwrap();
        assert_eq!(r.steps, vec![1, 2]);
        assert_relative_eq!(r.weights[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.weights[1], 0.5, epsilon = 1e-12);
        let slope = stats::covariance(&y, &x) / stats::variance(&x);
        assert_relative_eq!(r.effect, slope, epsilon = 1e-10);
    }

    #[test]
    fn discrete_binary_single_step() {
        let x: Vec<f64> = (0..100).map(|i| f64::from(i % 2 == 0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.0 * v + 1.0).collect();
        let r = discrete_treatment_effect(&series("y", y), &series("x", x), None).unwrap();
        assert_eq!(r.steps, vec![1]);
        assert_relative_eq!(r.weights[0], 1.0);
        assert_relative_eq!(r.effect, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn discrete_missing_step_rejected() {
        let x = vec![0.0, 0.0, 2.0, 2.0, 0.0, 2.0];
        let y = vec![1.0; 6];
        assert!(matches!(
            discrete_treatment_effect(&series("y", y), &series("x", x), None),
            Err(Error::MissingStep(1))
        ));
    }

    #[test]
    fn discrete_two_cells_constant_effect() {
        let mut rng = RngStream::new(49, 0);
        let n = 20_000;
        let cells: Vec<f64> = (0..n).map(|_| f64::from(rng.bernoulli(0.5))).collect();
        let x: Vec<f64> = cells
            .iter()
            .map(|&c| {
                let p = if c == 1.0 { 0.7 } else { 0.2 };
                f64::from(rng.bernoulli(p))
            })
            .collect();
        let y: Vec<f64> =
            (0..n).map(|i| x[i] + 2.0 * cells[i] + 0.5 * rng.standard_normal()).collect();
        let r = discrete_treatment_effect(
            &series("y", y),
            &series("x", x),
            Some(&series("w", cells)),
        )
        .unwrap();
        assert!((r.effect - 1.0).abs() < 0.05, "effect {}", r.effect);
    }

    #[test]
    fn custom_alpha_discrete_identity() {
        // on finite support theta equals the weight-increment sum exactly
        let mut rng = RngStream::new(50, 0);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| (rng.uniform() * 5.0).floor()).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v + rng.standard_normal()).collect();
        let table = AlphaTable::new(vec![
            (0.0, -1.0),
            (1.0, 0.5),
            (2.0, 1.0),
            (3.0, -0.25),
            (4.0, 2.0),
        ])
        .unwrap();
        let r = weighted_outcome_estimate(
            &series("y", y.clone()),
            &series("x", x.clone()),
            &RieszVariant::Custom { table },
        )
        .unwrap();
        let w = r.implied_weights.unwrap();
        // per-level outcome means
        let mut sums = vec![0.0; 5];
        let mut counts = vec![0.0; 5];
        for (xi, yi) in x.iter().zip(&y) {
            sums[*xi as usize] += yi;
            counts[*xi as usize] += 1.0;
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
        let mut acc = 0.0;
        for i in 1..w.len() {
            acc += w.values()[i] * (means[i] - means[i - 1]);
        }
        assert_relative_eq!(r.theta, acc, epsilon = 1e-10);
    }

    #[test]
    fn plugin_linear_g() {
        let mut rng = RngStream::new(51, 0);
        let n = 5000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.3 * rng.standard_normal()).collect();
        let r = regression_plugin_ad(&series("y", y), &series("x", x), &WeightTarget::Density)
            .unwrap();
        assert!((r.theta - 2.0).abs() <= (3.0 * r.se).max(0.05), "theta {}", r.theta);
    }

    #[test]
    fn plugin_cubic_gaussian_moment() {
        let mut rng = RngStream::new(52, 0);
        let n = 50_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 0.2 * rng.standard_normal()).collect();
        let r = regression_plugin_ad(&series("y", y), &series("x", x), &WeightTarget::Density)
            .unwrap();
        // E[3 X^2] = 3; smoothing bias makes this a loose MC check
        assert!((r.theta - 3.0).abs() <= (3.0 * r.se).max(0.15), "theta {} se {}", r.theta, r.se);
    }

    #[test]
    fn plugin_step_target_matches_projection() {
        let mut rng = RngStream::new(53, 0);
        let n = 20_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v + 0.5 * v * v + 0.3 * rng.standard_normal()).collect();
        let w = observed_weights(&series("x", x.clone()), false).unwrap();
        let r = regression_plugin_ad(
            &series("y", y.clone()),
            &series("x", x.clone()),
            &WeightTarget::Step(w),
        )
        .unwrap();
        let slope = stats::covariance(&y, &x) / stats::variance(&x);
        assert!((r.theta - slope).abs() <= (3.0 * r.se).max(0.05), "theta {} slope {slope}", r.theta);
    }

    #[test]
    fn orthogonal_linear_g() {
        let mut rng = RngStream::new(54, 0);
        let n = 20_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + rng.standard_normal()).collect();
        let r = orthogonal_ad(&series("y", y), &series("x", x), NuisanceCorruption::None)
            .unwrap();
        assert!((r.theta - 2.0).abs() <= (3.0 * r.se).max(0.05), "theta {} se {}", r.theta, r.se);
    }

    #[test]
    fn orthogonal_small_sample_rejected() {
        let mut rng = RngStream::new(55, 0);
        let x = rng.normal_vec(50);
        let y = rng.normal_vec(50);
        assert!(matches!(
            orthogonal_ad(&series("y", y), &series("x", x), NuisanceCorruption::None),
            Err(Error::InsufficientData { .. })
        ));
    }
}
