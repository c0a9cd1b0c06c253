//! Causal weight functions implicit in linear impulse-response estimators.
//!
//! The slope of a regression of an outcome on a shock equals a weighted
//! average of marginal effects, with weights proportional to
//! cov(1{X >= x}, X) at each baseline value x (Yitzhaki 1996). This module
//! estimates that weight function and its relatives: proxy weights
//! cov(1{X >= x}, Z)/var(Z), control-adjusted weights with discrete cells,
//! integrals over shock ranges via a clipped regression, and the closed-form
//! curve implied by a threshold ("narrative") proxy.

use crate::error::{Error, Result};
use crate::numcore::ols::{ols, SeMode};
use crate::numcore::stats;
use crate::numcore::{Dataset, Ecdf, Series};

/// Piecewise-constant weight function over the sorted sample support. The
/// value stored at knot `x_(i)` is the slope statistic for the indicator
/// `1{X >= x_(i)}`, which is also the function value on the left-open,
/// right-closed interval `(x_(i-1), x_(i)]`. The function is zero below the
/// smallest knot and above the largest.
#[derive(Debug, Clone)]
pub struct StepWeightFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    pointwise_se: Option<Vec<f64>>,
    /// Variance used in the denominator (1.0 for unnormalized covariances).
    pub normalizer: f64,
}

impl StepWeightFunction {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pointwise_se(&self) -> Option<&[f64]> {
        self.pointwise_se.as_deref()
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Index of the knot whose interval contains `x`, i.e. the smallest knot
    /// >= x; `None` above the largest knot.
    pub fn index_at(&self, x: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k < x);
        (i < self.knots.len()).then_some(i)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.index_at(x).map_or(0.0, |i| self.values[i])
    }

    pub fn se_at(&self, x: f64) -> Option<f64> {
        let se = self.pointwise_se.as_ref()?;
        self.index_at(x).map(|i| se[i])
    }

    /// Exact integral over the whole line: sum of value x interval length.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.knots.len() {
            acc += self.values[i] * (self.knots[i] - self.knots[i - 1]);
        }
        acc
    }

    /// Exact integral over (lo, hi), clipping intervals at the bounds.
    pub fn integral_between(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.knots.len() {
            let a = self.knots[i - 1].max(lo);
            let b = self.knots[i].min(hi);
            if b > a {
                acc += self.values[i] * (b - a);
            }
        }
        acc
    }
}

/// Pointwise uncertainty attached to the step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSe {
    None,
    /// Heteroskedasticity-robust slope standard errors (default).
    Hc1,
    /// Newey-West slope standard errors; substantially slower since each knot
    /// runs a full HAC regression.
    NeweyWest { lags: Option<usize> },
    /// Standard error of the raw covariance (used for unnormalized weights).
    CovDelta,
}

/// Shared engine: weights `cov(1{X >= knot}, t) / normalizer` at every unique
/// value of `x`, with optional pointwise standard errors. Suffix sums over
/// the x-sorted sample give every knot in O(1) after an O(n log n) sort.
///
/// `monotone_t` marks the case where the demeaned covariand is a
/// nondecreasing function of x (observed-shock weights). Then knots below the
/// mean are computed as negated prefix sums of all-negative terms and knots
/// above as suffix sums of all-nonnegative terms, which makes nonnegativity
/// and the hump shape hold exactly in floating point, not just in expectation.
fn step_cov_weights(
    x: &[f64],
    t: &[f64],
    normalizer: f64,
    se: WeightSe,
    monotone_t: bool,
) -> StepWeightFunction {
    let n = x.len();
    let nf = n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));

    let t_mean = stats::mean(t);
    let d_sorted: Vec<f64> = order.iter().map(|&i| t[i] - t_mean).collect();
    let x_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();

    // suffix[i] = sum of demeaned t over ranks i..n; prefix[i] over 0..i
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d_sorted[i];
    }
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + d_sorted[i];
    }

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut first_rank = Vec::new();
    let mut i = 0;
    while i < n {
        knots.push(x_sorted[i]);
        let v = if monotone_t && d_sorted[i] < 0.0 {
            // sum over ranks >= i equals minus the sum over ranks < i, and the
            // latter only involves negative terms here
            0.0 - prefix[i]
        } else {
            suffix[i]
        };
        values.push(v / (nf * normalizer));
        first_rank.push(i);
        let mut j = i + 1;
        while j < n && x_sorted[j] == x_sorted[i] {
            j += 1;
        }
        i = j;
    }

    let pointwise_se = match se {
        WeightSe::None => None,
        WeightSe::Hc1 => Some(hc1_knot_ses(&d_sorted, &suffix, &first_rank, normalizer)),
        WeightSe::CovDelta => Some(cov_delta_ses(&d_sorted, &suffix, &first_rank, normalizer)),
        WeightSe::NeweyWest { lags } => {
            Some(newey_west_knot_ses(x, t, &knots, normalizer, lags))
        }
    };

    StepWeightFunction { knots, values, pointwise_se, normalizer }
}

/// HC1 standard error of the slope of 1{X >= knot} on t, per knot. With
/// d_j = t_j - mean(t) and e_j the slope regression residual, the meat
/// sum(d^2 e^2) expands into suffix sums of d, d^2, d^3 because the indicator
/// is 0/1, so all knots cost O(n) total.
fn hc1_knot_ses(
    d_sorted: &[f64],
    suffix_d: &[f64],
    first_rank: &[usize],
    normalizer: f64,
) -> Vec<f64> {
    let n = d_sorted.len();
    let nf = n as f64;
    let mut suffix_d2 = vec![0.0; n + 1];
    let mut suffix_d3 = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_d2[i] = suffix_d2[i + 1] + d_sorted[i] * d_sorted[i];
        suffix_d3[i] = suffix_d3[i + 1] + d_sorted[i] * d_sorted[i] * d_sorted[i];
    }
    let t2 = suffix_d2[0];
    let t3 = suffix_d3[0];
    let t4: f64 = d_sorted.iter().map(|d| d.powi(4)).sum();
    let dof = if n > 2 { nf / (n as f64 - 2.0) } else { 1.0 };

    first_rank
        .iter()
        .map(|&r| {
            let ones = (n - r) as f64;
            let ibar = ones / nf;
            let b = suffix_d[r] / t2;
            // sum d^2 e^2 = sum_{I=1} d^2 (1 - 2 ibar - 2 b d)
            //             + sum_all d^2 (ibar + b d)^2
            let meat = (1.0 - 2.0 * ibar) * suffix_d2[r] - 2.0 * b * suffix_d3[r]
                + ibar * ibar * t2
                + 2.0 * ibar * b * t3
                + b * b * t4;
            let var_slope = dof * meat.max(0.0) / (t2 * t2);
            // slope se, rescaled from the var(t) normalizer to the requested one
            var_slope.sqrt() * (t2 / nf) / normalizer
        })
        .collect()
}

/// Standard error of the raw covariance cov(1{X >= knot}, t)/normalizer via
/// the delta method: sd of the per-observation product over sqrt(n).
fn cov_delta_ses(
    d_sorted: &[f64],
    suffix_d: &[f64],
    first_rank: &[usize],
    normalizer: f64,
) -> Vec<f64> {
    let n = d_sorted.len();
    let nf = n as f64;
    let mut suffix_d2 = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_d2[i] = suffix_d2[i + 1] + d_sorted[i] * d_sorted[i];
    }
    first_rank
        .iter()
        .map(|&r| {
            let cov = suffix_d[r] / nf;
            let ibar = (n - r) as f64 / nf;
            // p_j = (I_j - ibar) d_j; var(p) = E p^2 - cov^2
            let e_p2 = ((1.0 - 2.0 * ibar) * suffix_d2[r] + ibar * ibar * suffix_d2[0]) / nf;
            let var_p = (e_p2 - cov * cov).max(0.0);
            (var_p / nf).sqrt() / normalizer
        })
        .collect()
}

fn newey_west_knot_ses(
    x: &[f64],
    t: &[f64],
    knots: &[f64],
    normalizer: f64,
    lags: Option<usize>,
) -> Vec<f64> {
    let t_series = Series::new("t", t.to_vec()).expect("validated upstream");
    let regs = Dataset::from_columns(vec![t_series]).expect("single column");
    let var_t = stats::variance(t);
    knots
        .iter()
        .map(|&k| {
            let ind: Vec<f64> = x.iter().map(|&v| f64::from(v >= k)).collect();
            let y = Series::new("ind", ind).expect("indicator finite");
            match ols(&y, &regs, true, SeMode::NeweyWest { lags }) {
                Ok(fit) => fit.se("t").unwrap_or(0.0) * var_t / normalizer,
                Err(_) => 0.0,
            }
        })
        .collect()
}

/// Weight function of an observed shock: slope of 1{X >= x} on X at every
/// sample value. Nonnegative, exactly hump-shaped around the sample mean,
/// and integrating to one in finite samples.
pub fn observed_weights(x: &Series, se: bool) -> Result<StepWeightFunction> {
    observed_weights_opts(x, if se { WeightSe::Hc1 } else { WeightSe::None })
}

pub fn observed_weights_opts(x: &Series, se: WeightSe) -> Result<StepWeightFunction> {
    if x.n() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: x.n() });
    }
    let var = x.variance();
    if var <= 0.0 {
        return Err(Error::DegenerateVariance(x.name().to_string()));
    }
    Ok(step_cov_weights(x.values(), x.values(), var, se, true))
}

/// Integral of the observed-shock weight function over [lo, hi], estimated
/// exactly as the slope of clip(X, lo, hi) on X. Infinite bounds are allowed.
pub fn weight_integral(x: &Series, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Usage(format!("weight integral needs lo < hi, got [{lo}, {hi}]")));
    }
    let var = x.variance();
    if var <= 0.0 {
        return Err(Error::DegenerateVariance(x.name().to_string()));
    }
    let clipped: Vec<f64> = x.values().iter().map(|&v| v.min(hi).max(lo)).collect();
    Ok(stats::covariance(&clipped, x.values()) / var)
}

/// Proxy weight function: cov(1{X >= x}, Z)/var(Z). Unlike observed-shock
/// weights these are not guaranteed nonnegative; negative values are
/// diagnostic information and are never clipped.
pub fn proxy_weights(x: &Series, z: &Series, se: bool) -> Result<StepWeightFunction> {
    proxy_weights_opts(x, z, if se { WeightSe::Hc1 } else { WeightSe::None })
}

pub fn proxy_weights_opts(x: &Series, z: &Series, se: WeightSe) -> Result<StepWeightFunction> {
    if x.n() != z.n() {
        return Err(Error::LengthMismatch(x.n(), z.n()));
    }
    if x.n() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: x.n() });
    }
    let var_z = z.variance();
    if var_z <= 0.0 {
        return Err(Error::DegenerateVariance(z.name().to_string()));
    }
    Ok(step_cov_weights(x.values(), z.values(), var_z, se, false))
}

/// Unnormalized curve cov(1{X >= knot}, t) with normalizer 1; used for
/// implied Riesz weights and lab diagnostics.
pub(crate) fn raw_cov_step(x: &[f64], t: &[f64], se: WeightSe) -> StepWeightFunction {
    step_cov_weights(x, t, 1.0, se, false)
}

/// Integral of the proxy weight function over [lo, hi] via the clipped
/// regression identity (slope of clip(X, lo, hi) on Z's covariance scale).
pub fn proxy_weight_integral(x: &Series, z: &Series, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Usage(format!("weight integral needs lo < hi, got [{lo}, {hi}]")));
    }
    let var_z = z.variance();
    if var_z <= 0.0 {
        return Err(Error::DegenerateVariance(z.name().to_string()));
    }
    let clipped: Vec<f64> = x.values().iter().map(|&v| v.min(hi).max(lo)).collect();
    Ok(stats::covariance(&clipped, z.values()) / var_z)
}

/// Summary attached to projection results: the weight function of the
/// (residualized) shock plus its total and positive mass, both computed by
/// the clipped-regression identity so they match the step integral exactly.
#[derive(Debug, Clone)]
pub struct WeightReport {
    pub weight_fn: StepWeightFunction,
    pub total_mass: f64,
    pub positive_mass: f64,
    pub mean_of_x: f64,
}

impl WeightReport {
    pub fn from_observed(x: &Series, se: bool) -> Result<Self> {
        Ok(WeightReport {
            weight_fn: observed_weights(x, se)?,
            total_mass: weight_integral(x, f64::NEG_INFINITY, f64::INFINITY)?,
            positive_mass: weight_integral(x, 0.0, f64::INFINITY)?,
            mean_of_x: x.mean(),
        })
    }
}

/// CDF used by the closed-form narrative weight curve.
#[derive(Debug, Clone)]
pub enum CdfSpec {
    Empirical(Ecdf),
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl CdfSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CdfSpec::Empirical(e) => e.eval(x),
            CdfSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            CdfSpec::Normal { mean, sd } => {
                use statrs::distribution::ContinuousCDF;
                statrs::distribution::Normal::new(*mean, *sd)
                    .expect("validated on construction")
                    .cdf(x)
            }
        }
    }
}

/// Closed-form weight curve of the threshold proxy
/// Z = 1{X >= c2} - 1{X <= -c1}: the covariance cov(1{X >= x}, Z) expressed
/// through the CDF of X. Nonnegative and hump- or plateau-shaped; divide by
/// var(Z) to compare against [`proxy_weights`].
#[derive(Debug, Clone)]
pub struct NarrativeWeightCurve {
    cdf: CdfSpec,
    pub c1: f64,
    pub c2: f64,
}

pub fn narrative_weights(cdf: CdfSpec, c1: f64, c2: f64) -> Result<NarrativeWeightCurve> {
    if c1 < 0.0 || c2 < 0.0 || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidSpec(format!("narrative thresholds must be >= 0, got ({c1}, {c2})")));
    }
    if let CdfSpec::Uniform { lo, hi } = cdf {
        if !(lo < hi) {
            return Err(Error::InvalidSpec(format!("uniform CDF needs lo < hi, got [{lo}, {hi}]")));
        }
    }
    if let CdfSpec::Normal { sd, .. } = cdf {
        if sd <= 0.0 {
            return Err(Error::InvalidSpec(format!("normal CDF needs sd > 0, got {sd}")));
        }
    }
    Ok(NarrativeWeightCurve { cdf, c1, c2 })
}

impl NarrativeWeightCurve {
    pub fn eval(&self, x: f64) -> f64 {
        let f = |v: f64| self.cdf.eval(v);
        let f_hi = f(self.c2);
        let f_lo = f(-self.c1);
        if x <= -self.c1 {
            f(x) * (2.0 - f_hi - f_lo)
        } else if x < self.c2 {
            f(x) * (1.0 - f_hi - f_lo) + f_lo
        } else {
            (1.0 - f(x)) * (f_hi + f_lo)
        }
    }
}

/// Weight functions under discrete controls: within each cell the shock is
/// centered at the cell mean, per-cell curves are normalized by the
/// within-cell variance, and the pooled curve averages cells by frequency
/// and normalizes by the pooled within variance so it integrates to one
/// exactly.
#[derive(Debug, Clone)]
pub struct CovariateWeights {
    pub cells: Vec<CellWeights>,
    pub pooled: StepWeightFunction,
    /// Pooled within-cell variance (the pooled normalizer).
    pub within_variance: f64,
}

#[derive(Debug, Clone)]
pub struct CellWeights {
    pub label: f64,
    pub count: usize,
    pub mean: f64,
    pub weight_fn: StepWeightFunction,
}

pub fn covariate_weights(x: &Series, cells: &Series, se: bool) -> Result<CovariateWeights> {
    if x.n() != cells.n() {
        return Err(Error::LengthMismatch(x.n(), cells.n()));
    }
    let mut labels: Vec<f64> = cells.values().to_vec();
    labels.sort_unstable_by(|a, b| a.total_cmp(b));
    labels.dedup();

    let se_mode = if se { WeightSe::Hc1 } else { WeightSe::None };
    let mut per_cell = Vec::with_capacity(labels.len());
    let mut centered = vec![0.0; x.n()];
    for &label in &labels {
        let idx: Vec<usize> = cells
            .values()
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == label).then_some(i))
            .collect();
        if idx.len() < 3 {
            return Err(Error::CellTooSmall { cell: format!("{label}"), size: idx.len(), needed: 3 });
        }
        let xs: Vec<f64> = idx.iter().map(|&i| x.values()[i]).collect();
        let mean = stats::mean(&xs);
        let var = stats::variance(&xs);
        if var <= 0.0 {
            return Err(Error::DegenerateVariance(format!("{} in cell {label}", x.name())));
        }
        for &i in &idx {
            centered[i] = x.values()[i] - mean;
        }
        let weight_fn = step_cov_weights(&xs, &xs, var, se_mode, true);
        per_cell.push(CellWeights { label, count: idx.len(), mean, weight_fn });
    }

    // Pooled: cov(1{X >= x}, X - mean_cell) over the full sample, divided by
    // the pooled within variance. cov(X, X - mean_cell) equals that variance
    // because the cell means are orthogonal to the centered values, and using
    // the covariance form keeps the sum-to-one identity tight.
    let within_variance = stats::covariance(x.values(), &centered);
    let pooled = step_cov_weights(x.values(), &centered, within_variance, se_mode, false);

    Ok(CovariateWeights { cells: per_cell, pooled, within_variance })
}
