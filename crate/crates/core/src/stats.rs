//! Small numerical helpers shared by the estimators.

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(v) / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    let d: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&d) / (n - 1) as f64
}

/// Standard error of the mean.
pub fn stderr(v: &[f64]) -> f64 {
    (variance(v) / v.len() as f64).sqrt()
}

/// Mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    (mean(v), stderr(v))
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mx, my) = (mean(x), mean(y));
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    pairwise_sum(&d) / (n - 1) as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (variance(x) * variance(y)).sqrt()
}

/// Running mean and variance of a fixed-length vector of observables
/// (Welford). Results depend only on the order of `push` calls.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len());
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Standard errors of the means.
    pub fn stderrs(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Least squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Empirical survival `P(X >= n)` for `n = 0..=n_max`.
pub fn survival(samples: &[u64], n_max: u64) -> Vec<f64> {
    let mut counts = vec![0u64; n_max as usize + 2];
    for &s in samples {
        counts[(s.min(n_max + 1)) as usize] += 1;
    }
    let total = samples.len() as f64;
    let mut out = vec![0.0; n_max as usize + 1];
    let mut acc = 0u64;
    for n in (0..=n_max as usize).rev() {
        acc += counts[n] + if n == n_max as usize { counts[n + 1] } else { 0 };
        out[n] = acc as f64 / total;
    }
    out
}

/// Fits `ln P(X >= n)` against `n` over the points with at least
/// `min_count` exceedances.
pub fn log_survival_fit(samples: &[u64], min_count: u64) -> Option<LinearFit> {
    let max = *samples.iter().max()?;
    let surv = survival(samples, max);
    let total = samples.len() as f64;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (n, &p) in surv.iter().enumerate() {
        if p * total >= min_count as f64 && p < 1.0 {
            x.push(n as f64);
            y.push(p.ln());
        }
    }
    (x.len() >= 3).then(|| linear_fit(&x, &y))
}
