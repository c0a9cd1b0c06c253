//! Scalar sample statistics. Variances and covariances use the 1/n divisor
//! throughout; every downstream estimand is a ratio of covariances, so the
//! divisor cancels as long as it is applied consistently (see the
//! `divisor_invariance` property test).

/// Divisor convention for second moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divisor {
    N,
    NMinus1,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    variance_with(xs, Divisor::N)
}

pub fn variance_with(xs: &[f64], divisor: Divisor) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    match divisor {
        Divisor::N => ss / xs.len() as f64,
        Divisor::NMinus1 => ss / (xs.len() - 1) as f64,
    }
}

pub fn sd(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    covariance_with(xs, ys, Divisor::N)
}

pub fn covariance_with(xs: &[f64], ys: &[f64], divisor: Divisor) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let sp: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    match divisor {
        Divisor::N => sp / xs.len() as f64,
        Divisor::NMinus1 => sp / (xs.len() - 1) as f64,
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let sx = sd(xs);
    let sy = sd(ys);
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    covariance(xs, ys) / (sx * sy)
}

/// Excess kurtosis: E[(X-mu)^4]/sigma^4 - 3, with 1/n moments.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2: f64 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4: f64 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Standard error of a sample mean of `xs` (delta-method building block).
pub fn mean_se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(|x, y| x.total_cmp(y));
    sb.sort_unstable_by(|x, y| x.total_cmp(y));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// 95% critical value for the two-sample KS distance.
pub fn ks_crit_95(n1: usize, n2: usize) -> f64 {
    1.3581015157406195 * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn variance_divisors() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(variance_with(&xs, Divisor::N), 1.25);
        assert_relative_eq!(variance_with(&xs, Divisor::NMinus1), 5.0 / 3.0);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        assert_eq!(ks_distance(&[0.0, 1.0], &[5.0, 6.0]), 1.0);
    }
}
