//! Small estimator helpers for the trajectory ensembles.

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample_std(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sample_std() / (self.n as f64).sqrt()
    }
}

/// √(p(1−p)/n) for a frequency estimate.
pub fn frequency_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic D_n against `cdf`;
/// `samples` must be sorted ascending.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic critical value of the KS statistic at significance `alpha`
/// for sample size n: c(α)·n^{-1/2} with c(α) = √(−ln(α/2)/2).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((-(alpha / 2.0).ln()) / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn running_stats_basics() {
        let mut s = RunningStats::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        assert_abs_diff_eq!(s.mean(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sample_std(), (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ks_uniform_on_its_own_cdf() {
        // evenly spread samples against the uniform cdf stay at 1/(2n)
        let n = 100;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert_abs_diff_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn ks_critical_value_at_one_percent() {
        // c(0.01) ≈ 1.6276
        assert_abs_diff_eq!(ks_critical(1, 0.01), 1.6276, epsilon = 1e-3);
    }
}
