//! Small statistical helpers: empirical quantiles, moments, the
//! Kolmogorov–Smirnov test and the split potential-scale-reduction factor.

/// Empirical quantile of an ascending-sorted slice by linear interpolation
/// between order statistics at the 1-based position `q·(B−1)+1`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile level outside [0, 1]");
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Sample skewness `m₃ / m₂^{3/2}` (moment estimator).
pub fn skewness(values: &[f64]) -> f64 {
    let (m2, m3, _) = central_moments(values);
    m3 / m2.powf(1.5)
}

/// Sample excess kurtosis `m₄ / m₂² − 3` (moment estimator).
pub fn excess_kurtosis(values: &[f64]) -> f64 {
    let (m2, _, m4) = central_moments(values);
    m4 / (m2 * m2) - 3.0
}

fn central_moments(values: &[f64]) -> (f64, f64, f64) {
    let m = mean(values);
    let n = values.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F̂ − F|`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0_f64, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic p-value of the KS statistic `d` at sample size `n`, using
/// Stephens' finite-sample correction and the Kolmogorov series.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        sum += if (k as u64) % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Split-chain potential scale reduction factor (Gelman–Rubin R̂) of a scalar
/// across chains of equal length; each chain is halved before pooling.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    assert!(half >= 2, "chains too short for split R-hat");
    let splits: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect();
    let m = splits.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = splits.iter().map(|s| mean(s)).collect();
    let grand = mean(&means);
    let between = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let within = splits.iter().map(|s| variance(s)).sum::<f64>() / m;
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert!((quantile_sorted(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5), 2.5);
    }

    #[test]
    fn moments_of_symmetric_sample() {
        let v = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert_eq!(mean(&v), 0.0);
        assert_eq!(variance(&v), 2.5);
        assert_eq!(skewness(&v), 0.0);
        // m4 = 34/5, m2 = 2
        assert!((excess_kurtosis(&v) - (6.8 / 4.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn ks_on_uniform_grid() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&v, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(ks_p_value(d, 1000) > 0.99);
        assert!(ks_p_value(0.1, 1000) < 1e-6);
        // classic 1% critical value 1.628 / sqrt(n)
        let p = ks_p_value(1.628 / (1000f64).sqrt() , 1000);
        assert!((p - 0.01).abs() < 0.002, "{p}");
    }

    #[test]
    fn rhat_near_one_for_identical_chains() {
        let c: Vec<f64> = (0..200).map(|i| ((i * 7919) % 101) as f64).collect();
        let r = split_rhat(&[c.clone(), c.clone(), c.clone(), c]);
        assert!(r < 1.1);
        let shifted = vec![vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], vec![10.0, 11.0, 10.0, 11.0, 10.0, 11.0, 10.0, 11.0]];
        assert!(split_rhat(&shifted) > 2.0);
    }
}
