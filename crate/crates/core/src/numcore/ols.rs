//! Least squares with classical, heteroskedasticity-robust (HC1), and
//! Newey-West (1987) covariance estimates. The design is factored through an
//! SVD so that rank deficiency is detected by a relative singular-value
//! tolerance rather than by an unstable normal-equations solve.

use nalgebra::{DMatrix, DVector};

use super::series::{Dataset, Series};
use super::stats;
use crate::error::{Error, Result};

/// Relative singular-value cutoff below which the design is declared
/// rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Name given to the intercept column in fitted results.
pub const INTERCEPT: &str = "const";

/// Covariance estimator for regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeMode {
    Classical,
    Hc1,
    /// Bartlett-kernel HAC covariance. `lags: None` selects
    /// floor(0.75 * n^(1/3)).
    NeweyWest { lags: Option<usize> },
}

impl SeMode {
    pub fn label(&self) -> String {
        match self {
            SeMode::Classical => "classical".into(),
            SeMode::Hc1 => "hc1".into(),
            SeMode::NeweyWest { lags: Some(l) } => format!("newey_west({l})"),
            SeMode::NeweyWest { lags: None } => "newey_west(auto)".into(),
        }
    }

    pub fn resolve_lags(&self, n: usize) -> usize {
        match self {
            SeMode::NeweyWest { lags: Some(l) } => *l,
            SeMode::NeweyWest { lags: None } => (0.75 * (n as f64).powf(1.0 / 3.0)).floor() as usize,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: bool,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub se_mode: SeMode,
    pub r_squared: f64,
    pub n: usize,
    vcov: DMatrix<f64>,
}

impl RegressionFit {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.vcov[(i, i)].max(0.0).sqrt())
    }

    pub fn se_at(&self, i: usize) -> f64 {
        self.vcov[(i, i)].max(0.0).sqrt()
    }

    pub fn vcov(&self) -> &DMatrix<f64> {
        &self.vcov
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Ordinary least squares of `y` on the columns of `regressors`, optionally
/// with an intercept (stored first under the name `const`).
pub fn ols(y: &Series, regressors: &Dataset, intercept: bool, se_mode: SeMode) -> Result<RegressionFit> {
    let n = y.n();
    if !regressors.is_empty() && regressors.n() != n {
        return Err(Error::LengthMismatch(n, regressors.n()));
    }
    let p = regressors.width() + usize::from(intercept);
    if p == 0 {
        return Err(Error::Usage("regression needs an intercept or at least one regressor".into()));
    }
    if n <= p {
        return Err(Error::InsufficientData { needed: p + 1, have: n });
    }

    let mut names = Vec::with_capacity(p);
    if intercept {
        names.push(INTERCEPT.to_string());
    }
    names.extend(regressors.names().iter().map(|s| s.to_string()));

    let x = DMatrix::from_fn(n, p, |r, c| {
        if intercept && c == 0 {
            1.0
        } else {
            regressors.columns()[c - usize::from(intercept)].values()[r]
        }
    });
    let yv = DVector::from_column_slice(y.values());

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= RANK_TOL * smax {
        return Err(Error::RankDeficient { smallest: smin, largest: smax, tol: RANK_TOL });
    }
    let beta = svd.solve(&yv, 0.0).expect("svd solve with computed u/v");
    let fitted = &x * &beta;
    let residuals = &yv - &fitted;

    // (X'X)^-1 = V S^-2 V'
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_inv2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let xtx_inv = v_t.transpose() * s_inv2 * v_t;

    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = (n - p) as f64;
    let vcov = match se_mode {
        SeMode::Classical => &xtx_inv * (rss / dof),
        SeMode::Hc1 => {
            let meat = scored_outer(&x, &residuals, 0);
            let bread = &xtx_inv * meat * &xtx_inv;
            bread * (n as f64 / dof)
        }
        SeMode::NeweyWest { .. } => {
            let lags = se_mode.resolve_lags(n);
            let mut meat = scored_outer(&x, &residuals, 0);
            for l in 1..=lags {
                let w = 1.0 - l as f64 / (lags as f64 + 1.0);
                let sl = scored_outer(&x, &residuals, l);
                meat += (&sl + sl.transpose()) * w;
            }
            let bread = &xtx_inv * meat * &xtx_inv;
            bread * (n as f64 / dof)
        }
    };

    let tss = if intercept {
        let my = y.mean();
        y.values().iter().map(|v| (v - my) * (v - my)).sum::<f64>()
    } else {
        y.values().iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };

    Ok(RegressionFit {
        names,
        coefficients: beta.iter().copied().collect(),
        intercept,
        residuals: residuals.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        se_mode,
        r_squared,
        n,
        vcov,
    })
}

/// Sum over t of (x_t e_t)(x_{t-l} e_{t-l})'.
fn scored_outer(x: &DMatrix<f64>, e: &DVector<f64>, lag: usize) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut out = DMatrix::zeros(p, p);
    for t in lag..n {
        let st = x.row(t).transpose() * e[t];
        let sl = x.row(t - lag).transpose() * e[t - lag];
        out += st * sl.transpose();
    }
    out
}

/// Residual of `target` after projecting it on an intercept and `controls`.
/// With no controls this is plain demeaning. The returned series has sample
/// mean zero and zero sample covariance with every control.
pub fn residualize(data: &Dataset, target: &str, controls: &[String]) -> Result<Series> {
    let y = data.require(target)?;
    if controls.is_empty() {
        let m = y.mean();
        let vals = y.values().iter().map(|v| v - m).collect();
        return Series::new(format!("{target}~resid"), vals);
    }
    let x = data.select(controls)?;
    let fit = ols(y, &x, true, SeMode::Classical)?;
    Series::new(format!("{target}~resid"), fit.residuals)
}

/// R-squared of `target` regressed on `controls` plus an intercept.
pub fn r_squared_on(data: &Dataset, target: &str, controls: &[String]) -> Result<f64> {
    let y = data.require(target)?;
    let x = data.select(controls)?;
    Ok(ols(y, &x, true, SeMode::Classical)?.r_squared)
}

pub(crate) fn simple_slope(y: &[f64], x: &[f64]) -> f64 {
    stats::covariance(y, x) / stats::variance(x)
}
