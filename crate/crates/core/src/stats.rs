//! Small statistical toolkit used by the estimators and the checks.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    MeanSe { mean, se, n }
}

/// Ratio of means Σx/Σy with its delete-one jackknife standard error.
pub fn jackknife_ratio(x: &[f64], y: &[f64]) -> MeanSe {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let ratio = sx / sy;
    if n < 2 {
        return MeanSe {
            mean: ratio,
            se: f64::NAN,
            n,
        };
    }
    let leave: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (sx - xi) / (sy - yi))
        .collect();
    let m = leave.iter().sum::<f64>() / n as f64;
    let var = (n - 1) as f64 / n as f64 * leave.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    MeanSe {
        mean: ratio,
        se: var.sqrt(),
        n,
    }
}

/// Bootstrap standard error of `stat` over index resamples.
pub fn bootstrap_se<R, F>(n: usize, reps: usize, rng: &mut R, mut stat: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> f64,
{
    let mut idx = vec![0usize; n];
    let mut vals = Vec::with_capacity(reps);
    for _ in 0..reps {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        let v = stat(&idx);
        if v.is_finite() {
            vals.push(v);
        }
    }
    let ms = mean_se(&vals);
    ms.se * (vals.len() as f64).sqrt()
}

/// Asymptotic Kolmogorov survival function P[K > λ].
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the Stephens small-sample
/// correction to the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    /// Fitted tail index γ in P[X ≥ x] ~ x^{−γ}.
    pub index: f64,
    pub se: f64,
    pub k: usize,
}

/// Hill estimator of the tail index from the sample points above `threshold`.
pub fn hill(xs: &[f64], threshold: f64) -> TailFit {
    let logs: Vec<f64> = xs
        .iter()
        .filter(|&&x| x > threshold)
        .map(|x| (x / threshold).ln())
        .collect();
    let k = logs.len();
    let index = k as f64 / logs.iter().sum::<f64>();
    TailFit {
        index,
        se: index / (k as f64).sqrt(),
        k,
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Least squares y = a + b·x with the classical slope standard error.
pub fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    LinearFit {
        slope,
        slope_se: (rss / (n - 2.0) / sxx).sqrt(),
        intercept,
    }
}

pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let ms = mean_se(xs);
    ms.se * (ms.n as f64).sqrt() / ms.mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_ratio_of_constant_ratio_has_zero_se() {
        let x = [2.0, 4.0, 6.0, 8.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        let r = jackknife_ratio(&x, &y);
        assert!((r.mean - 2.0).abs() < 1e-15);
        assert!(r.se < 1e-14);
    }

    #[test]
    fn kolmogorov_known_values() {
        // P[K > 1.36] ≈ 0.049, P[K > 1.63] ≈ 0.0098
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = ols(&x, &y);
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
    }
}
