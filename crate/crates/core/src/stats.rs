//! Small descriptive and goodness-of-fit helpers.

/// One-sample Kolmogorov-Smirnov result against Uniform(0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform_statistic(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let above = (i as f64 + 1.0) / n - x;
        let below = x - i as f64 / n;
        d.max(above).max(below)
    })
}

/// KS test against Uniform(0, 1) with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction on the scaling).
pub fn ks_uniform(sample: &[f64]) -> KsResult {
    let d = ks_uniform_statistic(sample);
    let sn = (sample.len() as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor n - 1).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_statistic_small_sample() {
        let d = ks_uniform_statistic(&[0.9, 0.1, 0.4]);
        let expected: f64 = [1.0 / 3.0 - 0.1, 0.1, 2.0 / 3.0 - 0.4, 0.4 - 1.0 / 3.0, 1.0 - 0.9, 0.9 - 2.0 / 3.0]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_quantiles() {
        // Classical critical values of the limiting distribution.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn uniform_grid_has_high_p_value() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&xs).p_value > 0.99);
        let skewed: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skewed).p_value < 1e-6);
    }
}
