//! Small sample statistics with a fixed summation order.

/// Sample mean and standard error of the mean.
///
/// Summation runs in index order so identical inputs give identical bits.
/// The mean is clamped to the sample range, which makes a constant sample
/// return its value exactly.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        sum += x;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let mean = (sum / n as f64).clamp(lo, hi);
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance of `xs` and the standard error of that estimate
/// (from the empirical fourth central moment).
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mean, _) = mean_se(xs);
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let m2b = m2 / n;
    let m4b = m4 / n;
    (var, ((m4b - m2b * m2b).max(0.0) / n).sqrt())
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn convergence_order(hs: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .map(|(h, e)| (h.ln(), e.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_is_exact() {
        let xs = vec![0.1; 100_000];
        let (m, se) = mean_se(&xs);
        assert_eq!(m, 0.1);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn order_of_exact_power_law() {
        let hs = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((convergence_order(&hs, &errs) - 2.0).abs() < 1e-12);
    }
}
