//! Small statistical helpers for the Monte Carlo checks.
//!
//! Everything is plain `f64`; exact quantities enter only as expected values.

/// `(count - trials p) / sqrt(trials p (1 - p))`, the normal score of a
/// binomial count. Degenerate `p` gives `0` for the forced count and
/// `+-inf` otherwise.
pub fn binomial_z(count: u64, trials: u64, p: f64) -> f64 {
    let expected = trials as f64 * p;
    let var = expected * (1.0 - p);
    let diff = count as f64 - expected;
    if var <= 0.0 {
        return if diff.abs() < 0.5 { 0.0 } else { diff.signum() * f64::INFINITY };
    }
    diff / libm::sqrt(var)
}

/// Wilson-Hilferty normal score of a chi-square statistic with `dof`
/// degrees of freedom. Large positive values mean a poor fit.
pub fn chi_square_z(stat: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 0.0;
    }
    let c = 2.0 / (9.0 * dof);
    (libm::cbrt(stat / dof) - (1.0 - c)) / libm::sqrt(c)
}

/// Mean, unbiased variance and the standard errors of both, from a histogram
/// of small nonnegative integer outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramMoments {
    pub trials: u64,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
}

impl HistogramMoments {
    pub fn from_counts(counts: &[u64]) -> Self {
        let trials: u64 = counts.iter().sum();
        let t = trials as f64;
        let mean = counts.iter().enumerate().map(|(x, &c)| x as f64 * c as f64).sum::<f64>() / t;
        let central = |p: i32| {
            counts.iter().enumerate().map(|(x, &c)| libm::pow(x as f64 - mean, p as f64) * c as f64).sum::<f64>() / t
        };
        let m2 = central(2);
        let m4 = central(4);
        let variance = m2 * t / (t - 1.0);
        HistogramMoments {
            trials,
            mean,
            variance,
            mean_se: libm::sqrt(variance / t),
            variance_se: libm::sqrt(((m4 - m2 * m2) / t).max(0.0)),
        }
    }

    pub fn mean_z(&self, expected: f64) -> f64 {
        (self.mean - expected) / self.mean_se
    }

    pub fn variance_z(&self, expected: f64) -> f64 {
        (self.variance - expected) / self.variance_se
    }
}
