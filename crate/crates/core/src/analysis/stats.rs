use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Kolmogorov survival function `P(K > x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic p-value at `(sqrt(n) + 0.12 + 0.11/sqrt(n)) D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: xs.len(),
    })
}

/// Pearson chi-square goodness of fit. `expected` are probabilities over
/// the same cells as `observed` and must sum to one.
pub fn chi_square_test(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult, AnalysisError> {
    if observed.is_empty() || observed.len() != expected.len() {
        return Err(AnalysisError::EmptyInput);
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = n * p;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else if o > 0 {
            stat = f64::INFINITY;
        }
    }
    let dof = cells.saturating_sub(1).max(1);
    let p_value = if stat.is_finite() {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
    } else {
        0.0
    };
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value,
    })
}

/// Chi-square test of sampled outcomes against a discrete law. Cells with
/// expected count below `min_expected` are pooled into one; any outcome
/// outside the law's support rejects outright.
pub fn chi_square_law<K: Ord>(
    law: &BTreeMap<K, f64>,
    samples: impl IntoIterator<Item = K>,
    min_expected: f64,
) -> Result<ChiSquareResult, AnalysisError> {
    let mut counts: BTreeMap<K, u64> = BTreeMap::new();
    let mut n = 0u64;
    let mut stray = 0u64;
    for s in samples {
        n += 1;
        if law.contains_key(&s) {
            *counts.entry(s).or_default() += 1;
        } else {
            stray += 1;
        }
    }
    if stray > 0 {
        return Ok(ChiSquareResult {
            statistic: f64::INFINITY,
            dof: law.len().saturating_sub(1).max(1),
            p_value: 0.0,
        });
    }
    let (mut observed, mut expected) = (Vec::new(), Vec::new());
    let (mut pooled_o, mut pooled_p) = (0u64, 0.0);
    for (k, &p) in law {
        let o = counts.get(k).copied().unwrap_or(0);
        if p * n as f64 >= min_expected {
            observed.push(o);
            expected.push(p);
        } else {
            pooled_o += o;
            pooled_p += p;
        }
    }
    if pooled_p > 0.0 {
        observed.push(pooled_o);
        expected.push(pooled_p);
    }
    chi_square_test(&observed, &expected)
}

/// `1/2 sum |p - q|` over the union of supports.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, &a) in p {
        sum += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &b) in q {
        if !p.contains_key(k) {
            sum += b.abs();
        }
    }
    0.5 * sum
}

/// Normalised frequencies of the given outcomes.
pub fn empirical_law<K: Ord>(samples: impl IntoIterator<Item = K>) -> BTreeMap<K, f64> {
    let mut counts: BTreeMap<K, u64> = BTreeMap::new();
    let mut n = 0u64;
    for s in samples {
        *counts.entry(s).or_default() += 1;
        n += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Mann-Kendall trend statistic `tau` of a sequence against its index.
pub fn kendall_tau(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match ys[j].partial_cmp(&ys[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, f64::NAN));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_extremes() {
        let p: BTreeMap<u8, f64> = [(0, 0.5), (1, 0.5)].into();
        assert_eq!(tv_distance(&p, &p), 0.0);
        let q: BTreeMap<u8, f64> = [(2, 1.0)].into();
        let r: BTreeMap<u8, f64> = [(3, 1.0)].into();
        assert_eq!(tv_distance(&q, &r), 1.0);
    }

    #[test]
    fn kolmogorov_known_values() {
        // tabulated critical values of the limiting distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_perfect_grid_and_empty() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic <= 0.0005 + 1e-12);
        assert!(r.p_value > 0.999);
        assert_eq!(ks_test(&[], |x| x), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn chi_square_exact_fit() {
        let r = chi_square_test(&[25, 25, 50], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
    }

    #[test]
    fn kendall_monotone() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(kendall_tau(&[3.0, 2.0, 1.0]), -1.0);
    }
}
