//! Small Monte-Carlo statistics helpers.

use statrs::distribution::{ContinuousCDF, Normal};

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Welford: a constant sample gives its value and a zero error exactly
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    if n == 1 {
        return (mean, f64::NAN);
    }
    (mean, (m2 / (n - 1) as f64 / n as f64).sqrt())
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1) as f64
}

/// `z = estimate / se`, with `0/0 = 0` so that identically vanishing
/// statistics count as a perfect pass.
pub fn z_score(estimate: f64, se: f64) -> f64 {
    if estimate == 0.0 && se == 0.0 {
        0.0
    } else {
        estimate / se
    }
}

/// Two-sample z statistic for independent samples.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (ma, sa) = mean_se(a);
    let (mb, sb) = mean_se(b);
    let se = (sa * sa + sb * sb).sqrt();
    (ma - mb, se, z_score(ma - mb, se))
}

/// Ratio `E[x] / E[y]` of paired samples with its delta-method standard error.
pub fn ratio_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, sx) = mean_se(xs);
    let (my, sy) = mean_se(ys);
    let r = mx / my;
    let cov = covariance(xs, ys) / n;
    let var = (sx * sx - 2.0 * r * cov + r * r * sy * sy) / (my * my);
    (r, var.max(0.0).sqrt())
}

/// Two-sided standard-normal critical value for level `alpha`.
pub fn normal_quantile_two_sided(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - alpha / 2.0)
}

/// Two-sided p-value of a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-z.abs())
}
