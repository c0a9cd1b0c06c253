//! Local-projection estimators and their diagnostic variants.
//!
//! A local projection regresses the outcome h periods ahead on the current
//! shock and controls; the h-step regression drops the last h rows. Each
//! result carries the weight function of the residualized shock, so the
//! implicit averaging over baseline shock values is always reported next to
//! the coefficient it explains.

use crate::error::{Error, Result};
use crate::numcore::ols::{ols, residualize, RegressionFit, SeMode};
use crate::numcore::stats;
use crate::numcore::{Dataset, Series};
use crate::weights::{covariate_weights, CovariateWeights, WeightReport};

#[derive(Debug, Clone)]
pub struct LpResult {
    pub horizon: usize,
    pub beta: f64,
    pub se: f64,
    pub n_used: usize,
    pub weight_report: WeightReport,
    pub controls: Vec<String>,
}

/// Align outcome at t+h with regressors at t: returns (shifted outcome,
/// truncated regressor dataset).
fn align_horizon(data: &Dataset, outcome: &str, h: usize, used: &[String]) -> Result<(Series, Dataset)> {
    let y = data.require(outcome)?;
    let n = data.n();
    if h + 2 >= n {
        return Err(Error::HorizonTooLong { horizon: h, n, k: used.len() });
    }
    let rows = n - h;
    let y_h = Series::new(outcome, y.values()[h..].to_vec())?;
    let mut regs = Dataset::new();
    for name in used {
        let col = data.require(name)?;
        regs.push(Series::new(name.clone(), col.values()[..rows].to_vec())?)?;
    }
    Ok((y_h, regs))
}

fn lp_single(
    data: &Dataset,
    outcome: &str,
    shock: &str,
    controls: &[String],
    h: usize,
    se_mode: SeMode,
) -> Result<(LpResult, RegressionFit)> {
    let mut used = vec![shock.to_string()];
    used.extend_from_slice(controls);
    let (y_h, regs) = align_horizon(data, outcome, h, &used)?;
    let k = regs.width() + 1;
    if y_h.n() < k + 2 {
        return Err(Error::HorizonTooLong { horizon: h, n: data.n(), k });
    }
    let fit = ols(&y_h, &regs, true, se_mode)?;
    let resid_shock = residualize(&regs, shock, controls)?;
    if resid_shock.variance() <= 0.0 {
        return Err(Error::DegenerateVariance(format!("{shock} after residualization")));
    }
    let weight_report = WeightReport::from_observed(&resid_shock, true)?;
    let result = LpResult {
        horizon: h,
        beta: fit.coef(shock).expect("shock regressor present"),
        se: fit.se(shock).expect("shock regressor present"),
        n_used: y_h.n(),
        weight_report,
        controls: controls.to_vec(),
    };
    Ok((result, fit))
}

/// Per-horizon OLS of the outcome on the shock with controls partialled out.
pub fn local_projection(
    data: &Dataset,
    outcome: &str,
    shock: &str,
    controls: &[String],
    horizons: &[usize],
    se_mode: SeMode,
) -> Result<Vec<LpResult>> {
    horizons
        .iter()
        .map(|&h| lp_single(data, outcome, shock, controls, h, se_mode).map(|(r, _)| r))
        .collect()
}

/// Quadratic projection of the outcome on (1, X, X^2) with the implied
/// derivative of the regression function and the half-line, if any, where
/// that derivative disagrees in sign with the linear coefficient.
#[derive(Debug, Clone)]
pub struct QuadLpResult {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub se1: f64,
    pub se2: f64,
    pub n_used: usize,
    pub sign_reversal: Option<SignReversal>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignReversal {
    Below(f64),
    Above(f64),
}

impl QuadLpResult {
    /// Implied derivative of the fitted regression function at x.
    pub fn derivative(&self, x: f64) -> f64 {
        self.beta1 + 2.0 * self.beta2 * x
    }
}

pub fn quadratic_projection(
    data: &Dataset,
    outcome: &str,
    shock: &str,
    se_mode: SeMode,
) -> Result<QuadLpResult> {
    let y = data.require(outcome)?;
    let x = data.require(shock)?;
    if x.variance() <= 0.0 {
        return Err(Error::DegenerateVariance(shock.to_string()));
    }
    let x2: Vec<f64> = x.values().iter().map(|v| v * v).collect();
    let sq_name = format!("{shock}^2");
    let regs = Dataset::from_columns(vec![
        x.clone(),
        Series::new(sq_name.clone(), x2)?,
    ])?;
    let fit = ols(y, &regs, true, se_mode)?;
    let beta1 = fit.coef(shock).expect("linear term");
    let beta2 = fit.coef(&sq_name).expect("quadratic term");
    let sign_reversal = if beta2 == 0.0 || beta1 == 0.0 {
        None
    } else {
        let root = -beta1 / (2.0 * beta2);
        // derivative crosses zero at the root; it opposes beta1's sign on the
        // side where 2*beta2*x dominates
        if beta2 * beta1 < 0.0 {
            Some(SignReversal::Above(root))
        } else {
            Some(SignReversal::Below(root))
        }
    };
    Ok(QuadLpResult {
        beta0: fit.coef(crate::numcore::INTERCEPT).expect("intercept"),
        beta1,
        beta2,
        se1: fit.se(shock).expect("linear term"),
        se2: fit.se(&sq_name).expect("quadratic term"),
        n_used: y.n(),
        sign_reversal,
    })
}

/// State-dependent local projection: with a fully interacted control set the
/// estimator is identical to running the projection separately on the two
/// regime subsamples, which is how it is computed here.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub horizon: usize,
    pub state0: LpResult,
    pub state1: LpResult,
}

pub fn state_dependent_projection(
    data: &Dataset,
    outcome: &str,
    shock: &str,
    state: &str,
    controls: &[String],
    horizons: &[usize],
    se_mode: SeMode,
) -> Result<Vec<StatePair>> {
    let s = data.require(state)?;
    if s.values().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::StateDegenerate(state.into(), "values must be 0 or 1".into()));
    }
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let mut used = vec![outcome.to_string(), shock.to_string()];
        used.extend_from_slice(controls);
        used.push(state.to_string());
        used.dedup();
        // align before splitting: the regime at time t classifies the row
        let n = data.n();
        if h + 2 >= n {
            return Err(Error::HorizonTooLong { horizon: h, n, k: used.len() });
        }
        let rows = n - h;
        let mut aligned = Dataset::new();
        let y = data.require(outcome)?;
        aligned.push(Series::new(outcome, y.values()[h..].to_vec())?)?;
        for name in used.iter().skip(1) {
            let col = data.require(name)?;
            aligned.push(Series::new(name.clone(), col.values()[..rows].to_vec())?)?;
        }
        let s_aligned = aligned.require(state)?.clone();
        let split = |want: f64| -> Result<LpResult> {
            let keep: Vec<usize> = s_aligned
                .values()
                .iter()
                .enumerate()
                .filter_map(|(i, &v)| (v == want).then_some(i))
                .collect();
            if keep.len() < controls.len() + 4 {
                return Err(Error::StateDegenerate(
                    state.into(),
                    format!("state {want} has only {} aligned observations", keep.len()),
                ));
            }
            let sub = aligned.filter_rows(&keep)?;
            let (mut r, _) = lp_single(&sub, outcome, shock, controls, 0, se_mode)?;
            r.horizon = h;
            Ok(r)
        };
        out.push(StatePair { horizon: h, state0: split(0.0)?, state1: split(1.0)? });
    }
    Ok(out)
}

/// Control space for the partially linear projection.
#[derive(Debug, Clone)]
pub enum PiSpec {
    /// Linear span of the controls plus a constant.
    Linear,
    /// Within-cell means of a discrete label column (fixed effects).
    CellMeans { column: String },
    /// User-supplied basis columns plus a constant.
    UserBasis { columns: Vec<String> },
}

/// Gap between the flexible and linear R-squared for predicting the shock
/// above which a negative-weight warning is attached.
pub const PROPENSITY_R2_GAP: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct PropensityWarning {
    pub linear_r2: f64,
    pub flexible_r2: f64,
}

#[derive(Debug, Clone)]
pub struct PartialLinResult {
    pub beta: f64,
    pub se: f64,
    pub n_used: usize,
    /// Attached when the control space is discrete cells; those weights are
    /// nonnegative by construction.
    pub cell_weights: Option<CovariateWeights>,
    /// Attached when a richer basis predicts the shock visibly better than
    /// the linear one, signalling negative-weight risk.
    pub warning: Option<PropensityWarning>,
}

pub fn partially_linear_projection(
    data: &Dataset,
    outcome: &str,
    shock: &str,
    controls: &[String],
    pi_spec: &PiSpec,
) -> Result<PartialLinResult> {
    let se_mode = SeMode::Hc1;
    match pi_spec {
        PiSpec::Linear => {
            let mut regs = Dataset::new();
            regs.push(data.require(shock)?.clone())?;
            for c in controls {
                regs.push(data.require(c)?.clone())?;
            }
            let fit = ols(data.require(outcome)?, &regs, true, se_mode)?;
            let warning = propensity_gap(data, shock, controls)?;
            Ok(PartialLinResult {
                beta: fit.coef(shock).expect("shock present"),
                se: fit.se(shock).expect("shock present"),
                n_used: data.n(),
                cell_weights: None,
                warning,
            })
        }
        PiSpec::CellMeans { column } => {
            let cells = data.require(column)?;
            let x = data.require(shock)?;
            let y = data.require(outcome)?;
            let mut labels: Vec<f64> = cells.values().to_vec();
            labels.sort_unstable_by(|a, b| a.total_cmp(b));
            labels.dedup();
            // cell dummies (first cell absorbed by the intercept) keep the
            // degrees of freedom exact
            let mut regs = Dataset::new();
            regs.push(x.clone())?;
            for &label in labels.iter().skip(1) {
                let dummy: Vec<f64> =
                    cells.values().iter().map(|&c| f64::from(c == label)).collect();
                regs.push(Series::new(format!("{column}=={label}"), dummy)?)?;
            }
            let fit = ols(y, &regs, true, se_mode)?;
            let cw = covariate_weights(x, cells, false)?;
            Ok(PartialLinResult {
                beta: fit.coef(shock).expect("shock present"),
                se: fit.se(shock).expect("shock present"),
                n_used: data.n(),
                cell_weights: Some(cw),
                warning: None,
            })
        }
        PiSpec::UserBasis { columns } => {
            let mut regs = Dataset::new();
            regs.push(data.require(shock)?.clone())?;
            for c in columns {
                regs.push(data.require(c)?.clone())?;
            }
            let fit = ols(data.require(outcome)?, &regs, true, se_mode)?;
            Ok(PartialLinResult {
                beta: fit.coef(shock).expect("shock present"),
                se: fit.se(shock).expect("shock present"),
                n_used: data.n(),
                cell_weights: None,
                warning: None,
            })
        }
    }
}

/// R-squared gap between predicting the shock from the linear controls and
/// from the controls augmented with squares and pairwise interactions.
fn propensity_gap(data: &Dataset, shock: &str, controls: &[String]) -> Result<Option<PropensityWarning>> {
    if controls.is_empty() {
        return Ok(None);
    }
    let linear_r2 = crate::numcore::ols::r_squared_on(data, shock, controls)?;
    let mut flex = Dataset::new();
    for c in controls {
        flex.push(data.require(c)?.clone())?;
    }
    for (i, a) in controls.iter().enumerate() {
        for b in &controls[i..] {
            let va = data.require(a)?.values();
            let vb = data.require(b)?.values();
            let prod: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x * y).collect();
            let name = if a == b { format!("{a}^2") } else { format!("{a}*{b}") };
            let s = Series::new(name, prod)?;
            // skip near-degenerate products that would break the design
            if s.variance() > 1e-12 {
                flex.push(s)?;
            }
        }
    }
    let y = data.require(shock)?;
    let flexible_r2 = match ols(y, &flex, true, SeMode::Classical) {
        Ok(fit) => fit.r_squared,
        Err(Error::RankDeficient { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if flexible_r2 - linear_r2 > PROPENSITY_R2_GAP {
        Ok(Some(PropensityWarning { linear_r2, flexible_r2 }))
    } else {
        Ok(None)
    }
}

/// Reduced-form projection on a proxy, with an optional unit-effect
/// normalization by the horizon-0 response of a designated outcome.
#[derive(Debug, Clone)]
pub struct ProxyLpResult {
    pub reduced_form: Vec<LpResult>,
    /// Ratio estimates beta_h(outcome)/beta_0(normalizer), when requested.
    pub normalized: Option<Vec<RatioEstimate>>,
    pub normalizer_beta: Option<f64>,
    pub normalizer_se: Option<f64>,
    /// Set when the normalizing response is within 2 standard errors of 0;
    /// reported, never fatal.
    pub weak_normalizer: bool,
}

#[derive(Debug, Clone)]
pub struct RatioEstimate {
    pub horizon: usize,
    pub ratio: f64,
    pub se: f64,
}

pub fn proxy_projection(
    data: &Dataset,
    outcome: &str,
    proxy: &str,
    normalization_outcome: Option<&str>,
    controls: &[String],
    horizons: &[usize],
    se_mode: SeMode,
) -> Result<ProxyLpResult> {
    let proxy_col = data.require(proxy)?;
    if proxy_col.variance() <= 0.0 {
        return Err(Error::DegenerateVariance(proxy.to_string()));
    }
    let reduced_form = local_projection(data, outcome, proxy, controls, horizons, se_mode)?;
    let (normalized, normalizer_beta, normalizer_se, weak) = match normalization_outcome {
        None => (None, None, None, false),
        Some(norm) => {
            let base = local_projection(data, norm, proxy, controls, &[0], se_mode)?;
            let b0 = base[0].beta;
            let s0 = base[0].se;
            let weak = b0.abs() < 2.0 * s0;
            let ratios = reduced_form
                .iter()
                .map(|r| {
                    // delta method treating numerator and denominator as
                    // approximately independent across regressions
                    let var = r.se * r.se / (b0 * b0)
                        + r.beta * r.beta * s0 * s0 / (b0 * b0 * b0 * b0);
                    RatioEstimate { horizon: r.horizon, ratio: r.beta / b0, se: var.sqrt() }
                })
                .collect();
            (Some(ratios), Some(b0), Some(s0), weak)
        }
    };
    Ok(ProxyLpResult {
        reduced_form,
        normalized,
        normalizer_beta,
        normalizer_se,
        weak_normalizer: weak,
    })
}

/// Finite-sample representation check: on any sample, the projection slope
/// equals the weight function summed against the increments of the per-knot
/// outcome means. Used by tests and the verification harness.
pub fn riesz_representation_gap(y: &[f64], x: &[f64]) -> f64 {
    let slope = stats::covariance(y, x) / stats::variance(x);
    let w = crate::weights::observed_weights(
        &Series::new("x", x.to_vec()).expect("finite"),
        false,
    )
    .expect("nondegenerate");
    let knots = w.knots();
    // per-knot outcome means
    let mut sums = vec![0.0; knots.len()];
    let mut counts = vec![0usize; knots.len()];
    for (xi, yi) in x.iter().zip(y) {
        let idx = knots.partition_point(|k| k < xi);
        sums[idx] += yi;
        counts[idx] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let mut acc = 0.0;
    for i in 1..knots.len() {
        acc += w.values()[i] * (means[i] - means[i - 1]);
    }
    acc - slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;
    use approx::assert_relative_eq;

    fn dataset(cols: Vec<(&str, Vec<f64>)>) -> Dataset {
        Dataset::from_columns(
            cols.into_iter().map(|(n, v)| Series::new(n, v).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn linear_dgp_recovers_slope() {
        let mut rng = RngStream::new(21, 0);
        let n = 10_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x)]);
        let r = &local_projection(&data, "y", "x", &[], &[0], SeMode::Hc1).unwrap()[0];
        assert!((r.beta - 2.0).abs() <= 3.0 * r.se, "beta {} se {}", r.beta, r.se);
        assert!((r.weight_report.total_mass - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn independent_outcome_is_null() {
        let mut rng = RngStream::new(22, 0);
        let n = 5000;
        let x = rng.normal_vec(n);
        let y = rng.normal_vec(n);
        let data = dataset(vec![("y", y), ("x", x)]);
        for r in local_projection(&data, "y", "x", &[], &[0, 3], SeMode::Hc1).unwrap() {
            assert!(r.beta.abs() <= 3.0 * r.se);
        }
    }

    #[test]
    fn cubic_dgp_matches_stein_weighting() {
        // cov(X^3, X)/var(X) = E[X^4] = 3 for standard normal X
        let mut rng = RngStream::new(23, 0);
        let n = 200_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let data = dataset(vec![("y", y), ("x", x)]);
        let r = &local_projection(&data, "y", "x", &[], &[0], SeMode::Hc1).unwrap()[0];
        assert!((r.beta - 3.0).abs() <= 3.0 * r.se, "beta {} se {}", r.beta, r.se);
    }

    #[test]
    fn frisch_waugh_equivalence() {
        let mut rng = RngStream::new(24, 0);
        let n = 800;
        let w: Vec<f64> = rng.normal_vec(n);
        let x: Vec<f64> = w.iter().map(|v| 0.6 * v + rng.standard_normal()).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.5 * x[i] - w[i] + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y.clone()), ("x", x), ("w", w)]);
        let r = &local_projection(&data, "y", "x", &["w".into()], &[0], SeMode::Hc1).unwrap()[0];
        let resid = residualize(&data, "x", &["w".into()]).unwrap();
        let direct = stats::covariance(&y, resid.values()) / stats::variance(resid.values());
        assert_relative_eq!(r.beta, direct, epsilon = 1e-10);
    }

    #[test]
    fn horizon_drops_trailing_rows() {
        let mut rng = RngStream::new(25, 0);
        let n = 400;
        let x = rng.normal_vec(n);
        let mut y = vec![0.0; n];
        for t in 0..n {
            y[t] = if t >= 2 { 0.8 * x[t - 2] } else { 0.0 } + 0.05 * rng.standard_normal();
        }
        let data = dataset(vec![("y", y), ("x", x)]);
        let r = &local_projection(&data, "y", "x", &[], &[2], SeMode::Hc1).unwrap()[0];
        assert_eq!(r.n_used, n - 2);
        assert!((r.beta - 0.8).abs() <= 3.0 * r.se);
    }

    #[test]
    fn horizon_too_long_rejected() {
        let data = dataset(vec![("y", vec![1.0, 2.0, 3.0]), ("x", vec![0.0, 1.0, 0.5])]);
        assert!(matches!(
            local_projection(&data, "y", "x", &[], &[3], SeMode::Hc1),
            Err(Error::HorizonTooLong { .. })
        ));
    }

    #[test]
    fn quadratic_correct_specification() {
        let mut rng = RngStream::new(26, 0);
        let n = 100_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let data = dataset(vec![("y", y), ("x", x)]);
        let q = quadratic_projection(&data, "y", "x", SeMode::Hc1).unwrap();
        assert!((q.beta2 - 1.0).abs() <= 3.0 * q.se2 + 0.01);
        assert!(q.beta1.abs() <= 3.0 * q.se1);
        // derivative ~ 2x
        assert!((q.derivative(1.0) - 2.0).abs() < 0.1);
    }

    #[test]
    fn quadratic_cubic_dgp_kills_curvature() {
        // for g(x) = x^3: E[g'] = 3, E[g''] = E[6X] = 0, so the implied
        // derivative is approximately the constant 3
        let mut rng = RngStream::new(27, 0);
        let n = 200_000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let data = dataset(vec![("y", y), ("x", x)]);
        let q = quadratic_projection(&data, "y", "x", SeMode::Hc1).unwrap();
        assert!((q.beta1 - 3.0).abs() <= 3.0 * q.se1);
        assert!((2.0 * q.beta2).abs() <= 6.0 * q.se2);
    }

    #[test]
    fn state_dependent_matches_interacted_regression() {
        let mut rng = RngStream::new(28, 0);
        let n = 4000;
        let x = rng.normal_vec(n);
        let w = rng.normal_vec(n);
        let s: Vec<f64> = (0..n).map(|_| f64::from(rng.bernoulli(0.4))).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let slope = if s[i] == 1.0 { -1.0 } else { 2.0 };
                slope * x[i] + 0.5 * w[i] + rng.standard_normal()
            })
            .collect();
        let data = dataset(vec![
            ("y", y.clone()),
            ("x", x.clone()),
            ("w", w.clone()),
            ("s", s.clone()),
        ]);
        let pair = &state_dependent_projection(
            &data,
            "y",
            "x",
            "s",
            &["w".into()],
            &[0],
            SeMode::Hc1,
        )
        .unwrap()[0];
        assert!((pair.state0.beta - 2.0).abs() <= 3.0 * pair.state0.se);
        assert!((pair.state1.beta - -1.0).abs() <= 3.0 * pair.state1.se);

        // fully interacted regression reproduces the subsample coefficients
        let x0: Vec<f64> = (0..n).map(|i| (1.0 - s[i]) * x[i]).collect();
        let x1: Vec<f64> = (0..n).map(|i| s[i] * x[i]).collect();
        let w0: Vec<f64> = (0..n).map(|i| (1.0 - s[i]) * w[i]).collect();
        let w1: Vec<f64> = (0..n).map(|i| s[i] * w[i]).collect();
        let interacted = dataset(vec![
            ("x0", x0),
            ("x1", x1),
            ("w0", w0),
            ("w1", w1),
            ("s", s),
        ]);
        let fit = ols(
            &Series::new("y", y).unwrap(),
            &interacted,
            true,
            SeMode::Classical,
        )
        .unwrap();
        assert_relative_eq!(fit.coef("x0").unwrap(), pair.state0.beta, epsilon = 1e-8);
        assert_relative_eq!(fit.coef("x1").unwrap(), pair.state1.beta, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_state_rejected() {
        let data = dataset(vec![
            ("y", vec![1.0; 20]),
            ("x", (0..20).map(|i| i as f64).collect()),
            ("s", vec![1.0; 20]),
        ]);
        assert!(matches!(
            state_dependent_projection(&data, "y", "x", "s", &[], &[0], SeMode::Hc1),
            Err(Error::StateDegenerate(..))
        ));
    }

    #[test]
    fn partial_linear_cell_means_recovers_common_slope() {
        let mut rng = RngStream::new(29, 0);
        let n = 6000;
        let cells: Vec<f64> = (0..n).map(|_| f64::from(rng.bernoulli(0.5))).collect();
        let x: Vec<f64> = cells.iter().map(|&c| 2.0 * c + rng.standard_normal()).collect();
        let y: Vec<f64> =
            (0..n).map(|i| x[i] + 3.0 * cells[i] + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x), ("w", cells)]);
        let r = partially_linear_projection(
            &data,
            "y",
            "x",
            &[],
            &PiSpec::CellMeans { column: "w".into() },
        )
        .unwrap();
        assert!((r.beta - 1.0).abs() <= 3.0 * r.se);
        let cw = r.cell_weights.unwrap();
        assert!((cw.pooled.integral() - 1.0).abs() <= 1e-10);
        assert!(cw.pooled.values().iter().all(|&v| v >= -1e-15));
    }

    #[test]
    fn partial_linear_warns_on_nonlinear_propensity() {
        let mut rng = RngStream::new(30, 0);
        let n = 4000;
        let w = rng.normal_vec(n);
        // true propensity is quadratic in w
        let x: Vec<f64> = w.iter().map(|v| v * v + 0.3 * rng.standard_normal()).collect();
        let y: Vec<f64> = (0..n).map(|i| x[i] * (1.0 + w[i]) + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x), ("w", w)]);
        let r =
            partially_linear_projection(&data, "y", "x", &["w".into()], &PiSpec::Linear).unwrap();
        let warn = r.warning.expect("should warn: squares predict the shock");
        assert!(warn.flexible_r2 - warn.linear_r2 > PROPENSITY_R2_GAP);
    }

    #[test]
    fn partial_linear_independent_controls_match_plain_projection() {
        let mut rng = RngStream::new(31, 0);
        let n = 3000;
        let x = rng.normal_vec(n);
        let w = rng.normal_vec(n);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * x[i] + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x), ("w", w)]);
        let with = partially_linear_projection(&data, "y", "x", &["w".into()], &PiSpec::Linear)
            .unwrap();
        let without = &local_projection(&data, "y", "x", &[], &[0], SeMode::Hc1).unwrap()[0];
        // orthogonality in population; in-sample they differ by the tiny
        // sample correlation between x and w
        assert!((with.beta - without.beta).abs() < 0.05);
    }

    #[test]
    fn proxy_equals_projection_when_proxy_is_shock() {
        let mut rng = RngStream::new(32, 0);
        let n = 2000;
        let x = rng.normal_vec(n);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x)]);
        let p = proxy_projection(&data, "y", "x", None, &[], &[0], SeMode::Hc1).unwrap();
        let lp = &local_projection(&data, "y", "x", &[], &[0], SeMode::Hc1).unwrap()[0];
        assert_relative_eq!(p.reduced_form[0].beta, lp.beta, epsilon = 1e-12);
    }

    #[test]
    fn proxy_ratio_undoes_attenuation() {
        let mut rng = RngStream::new(33, 0);
        let n = 50_000;
        let x = rng.normal_vec(n);
        let z: Vec<f64> = x.iter().map(|v| v + rng.standard_normal()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.3 * rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x), ("z", z)]);
        let p = proxy_projection(&data, "y", "z", Some("x"), &[], &[0], SeMode::Hc1).unwrap();
        assert!(!p.weak_normalizer);
        let r = &p.normalized.unwrap()[0];
        assert!((r.ratio - 2.0).abs() <= 3.0 * r.se, "ratio {} se {}", r.ratio, r.se);
    }

    #[test]
    fn narrative_proxy_reduced_form_sign() {
        let mut rng = RngStream::new(34, 0);
        let n = 20_000;
        let x = rng.normal_vec(n);
        let z: Vec<f64> = x
            .iter()
            .map(|&v| f64::from(v >= 0.8) - f64::from(v <= -0.8))
            .collect();
        // monotone increasing g
        let y: Vec<f64> = x.iter().map(|&v| v + 0.2 * v.powi(3) + rng.standard_normal()).collect();
        let data = dataset(vec![("y", y), ("x", x), ("z", z)]);
        let p = proxy_projection(&data, "y", "z", None, &[], &[0], SeMode::Hc1).unwrap();
        assert!(p.reduced_form[0].beta > 3.0 * p.reduced_form[0].se);
    }

    #[test]
    fn representation_identity_on_discrete_support() {
        let mut rng = RngStream::new(35, 0);
        let n = 500;
        let x: Vec<f64> = (0..n).map(|_| (rng.uniform() * 5.0).floor()).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v - v + rng.standard_normal()).collect();
        assert!(riesz_representation_gap(&y, &x).abs() <= 1e-10);
    }

    #[test]
    fn representation_identity_on_continuous_sample() {
        let mut rng = RngStream::new(36, 0);
        let x = rng.normal_vec(300);
        let y: Vec<f64> = x.iter().map(|&v| v.exp() + rng.standard_normal()).collect();
        assert!(riesz_representation_gap(&y, &x).abs() <= 1e-10);
    }
}
