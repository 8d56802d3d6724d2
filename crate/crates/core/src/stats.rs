//! Estimate containers and running statistics.

use crate::error::{Error, Result};

/// Welford running mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct OnlineStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl OnlineStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n > 0 {
            (self.variance() / self.n as f64).sqrt()
        } else {
            0.0
        }
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(it: I) -> Self {
        let mut s = Self::new();
        for x in it {
            s.push(x);
        }
        s
    }
}

/// Sample covariance of paired observations, used by delta-method error bars
/// for coupled estimators.
pub fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    s / (n - 1) as f64
}

/// A travel-cost value with its sampling and truncation diagnostics.
///
/// `std_error` is 0 for a deterministic single solve. `truncation_diag`, when
/// present, holds the cost evaluated at margins `L` and `2L`; their gap bounds
/// the finite-volume error since the absorbing boundary is monotone in the
/// margin. `infinite` flags an underflowed two-point function.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub truncation_diag: Option<(f64, f64)>,
    pub capped_fraction: f64,
    pub infinite: bool,
}

impl CostEstimate {
    pub fn deterministic(value: f64) -> Self {
        CostEstimate {
            value,
            std_error: 0.0,
            n_samples: 1,
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        }
    }

    pub fn from_stats(stats: &OnlineStats) -> Self {
        CostEstimate {
            value: stats.mean(),
            std_error: stats.std_error(),
            n_samples: stats.count(),
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        }
    }

    pub fn infinite_flag(n_samples: u64) -> Self {
        CostEstimate {
            value: f64::INFINITY,
            std_error: 0.0,
            n_samples,
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: true,
        }
    }

    /// `-log` of a sample mean with the delta-method standard error.
    pub fn neg_log_of_mean(stats: &OnlineStats) -> Result<Self> {
        let m = stats.mean();
        if m <= 0.0 || m < 1e-300 {
            return Ok(CostEstimate::infinite_flag(stats.count()));
        }
        Ok(CostEstimate {
            value: -m.ln(),
            std_error: stats.std_error() / m,
            n_samples: stats.count(),
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        })
    }

    pub fn check(&self) -> Result<()> {
        if !self.infinite && !(self.value >= 0.0 || self.value.is_finite()) {
            return Err(Error::Numeric(format!(
                "cost estimate value {} invalid",
                self.value
            )));
        }
        if self.std_error < 0.0 {
            return Err(Error::Numeric("negative standard error".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_direct_formulas() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let s = OnlineStats::from_samples(xs.iter().copied());
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - mean).abs() < 1e-12);
        assert!((s.variance() - var).abs() < 1e-12);
        assert!((s.std_error() - (var / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn neg_log_delta_method() {
        let mut s = OnlineStats::new();
        for i in 0..100 {
            s.push(0.4 + 0.01 * (i % 7) as f64);
        }
        let est = CostEstimate::neg_log_of_mean(&s).unwrap();
        assert!((est.value - (-s.mean().ln())).abs() < 1e-15);
        assert!((est.std_error - s.std_error() / s.mean()).abs() < 1e-15);
    }

    #[test]
    fn underflowed_mean_is_flagged_infinite() {
        let mut s = OnlineStats::new();
        s.push(0.0);
        s.push(0.0);
        let est = CostEstimate::neg_log_of_mean(&s).unwrap();
        assert!(est.infinite);
    }
}
