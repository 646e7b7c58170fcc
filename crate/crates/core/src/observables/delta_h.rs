use crate::error::{invalid, Error, Result};
use crate::lattice::Window;
use crate::parallel::{map_replicas, try_map_replicas};
use crate::rng::derive_seed;
use crate::sampler::{
    general_queue, sample_bernoulli, sample_markov_arrivals, sample_queue, ArrivalServicePair, MarkovArrivalSpec,
    QueueState, SamplerOptions,
};
use crate::stats::variance;

/// Difference between the first-class height profile and the profile built
/// from the arrival line alone, computed two independent ways.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaHDiagnostic {
    pub t: f64,
    pub x_grid: Vec<i64>,
    /// `2 (Q_1 - Q_{x+1})`.
    pub from_queue: Vec<i64>,
    /// `h^{ρ1}(x, 0) - ĥ^{ρ1}(x, 0)` from departure and arrival counts.
    pub from_heights: Vec<i64>,
    /// `t^{-1/3}` times the integer difference.
    pub values: Vec<f64>,
    pub sup_abs: f64,
}

impl DeltaHDiagnostic {
    pub fn forms_agree(&self) -> bool {
        self.from_queue == self.from_heights
    }

    /// Largest integer `|h - ĥ|` on the grid.
    pub fn sup_integer(&self) -> i64 {
        self.from_heights.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

/// Evaluates the diagnostic on a queue sample. Grid points need `x` and
/// `x + 1` inside `[lo, hi + 1]` and site 1 inside the window.
pub fn delta_h_from_queue(pair: &ArrivalServicePair, qs: &QueueState, x_grid: &[i64], t: f64) -> Result<DeltaHDiagnostic> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    let w = qs.window;
    if !w.contains(0) || !w.contains(1) {
        return Err(Error::SiteOutOfRange {
            site: 1,
            lo: w.lo,
            hi: w.hi,
        });
    }
    for &x in x_grid {
        if x < w.lo || x > w.hi {
            return Err(Error::SiteOutOfRange { site: x, lo: w.lo, hi: w.hi });
        }
    }
    // prefix counts: pre[k] = Σ_{lo <= i < lo + k}
    let n = w.len();
    let mut pa = vec![0i64; n + 1];
    let mut pd = vec![0i64; n + 1];
    for k in 0..n {
        pa[k + 1] = pa[k] + pair.a[k] as i64;
        pd[k + 1] = pd[k] + qs.d[k] as i64;
    }
    let count = |p: &[i64], i: i64, j: i64| p[(j - w.lo + 1) as usize] - p[(i - w.lo) as usize];
    let q1 = qs.queue_at(1) as i64;
    let mut from_queue = Vec::with_capacity(x_grid.len());
    let mut from_heights = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        from_queue.push(2 * (q1 - qs.queue_at(x + 1) as i64));
        let diff = if x >= 0 {
            2 * (count(&pa, 1, x) - count(&pd, 1, x))
        } else {
            2 * (count(&pd, x + 1, 0) - count(&pa, x + 1, 0))
        };
        from_heights.push(diff);
    }
    let scale = t.cbrt();
    let values: Vec<f64> = from_heights.iter().map(|&v| v as f64 / scale).collect();
    let sup_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(DeltaHDiagnostic {
        t,
        x_grid: x_grid.to_vec(),
        from_queue,
        from_heights,
        values,
        sup_abs,
    })
}

/// Diagnostic on one stationary (`q = 0`) queue sample.
pub fn delta_h_diagnostic(rho1: f64, rho2: f64, window: &Window, seed: u64, x_grid: &[i64], t: f64) -> Result<DeltaHDiagnostic> {
    let (pair, qs) = sample_queue(rho1, rho2, 0.0, window, seed, SamplerOptions::default())?;
    delta_h_from_queue(&pair, &qs, x_grid, t)
}

/// Empirical check of the general initial-data conditions for the Markov
/// arrival construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption15Config {
    pub rho: f64,
    pub alpha: f64,
    /// Service rate `ρ1 + ρ2`.
    pub service_rate: f64,
    /// `|I_x|` for the variance check.
    pub interval: u64,
    pub variance_samples: u64,
    /// Scaling time of the correlation bound.
    pub t: f64,
    /// Exponent of the threshold `t^σ`.
    pub sigma: f64,
    /// Half-width of the `y` range.
    pub y_range: u64,
    pub delta_samples: u64,
    pub seed: u64,
}

impl Default for Assumption15Config {
    fn default() -> Self {
        Self {
            rho: 0.5,
            alpha: 0.5,
            service_rate: 0.75,
            interval: 10_000,
            variance_samples: 4000,
            t: 1e6,
            sigma: 0.3,
            y_range: 10_000,
            delta_samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption15Report {
    /// `Var(𝒜_I) / |I|`.
    pub variance_ratio: f64,
    pub variance_ratio_stderr: f64,
    /// `σ_A² = ρ(1-ρ) α / (1-α)`.
    pub sigma_a_squared: f64,
    pub threshold: f64,
    /// `sup_{|y| <= y_range} |δ_h(y)|` per sample.
    pub sups: Vec<i64>,
    pub fraction_below: f64,
    /// Both δ_h forms agreed on every sample.
    pub forms_agree: bool,
}

impl Assumption15Config {
    pub fn run(&self) -> Result<Assumption15Report> {
        let spec = MarkovArrivalSpec::new(self.rho, self.alpha)?;
        if !(self.service_rate > self.rho && self.service_rate < 1.0) {
            return Err(invalid(
                "service_rate",
                format!("{} must lie in (rho, 1) for a stable queue", self.service_rate),
            ));
        }
        if self.variance_samples < 2 || self.delta_samples == 0 || self.interval == 0 {
            return Err(invalid("samples", "need at least two variance samples and one δ sample"));
        }
        let len = self.interval as i64;
        let counts: Vec<f64> = map_replicas(derive_seed(self.seed, 0, 1), self.variance_samples, |_, seed| {
            spec.sample_range(1, len, seed).iter().map(|&v| v as f64).sum()
        });
        let var = variance(&counts);
        let n = counts.len() as f64;
        let ratio = var / len as f64;
        // normal-theory standard error of a sample variance
        let ratio_se = ratio * (2.0 / (n - 1.0)).sqrt();

        let y = self.y_range as i64;
        let window = Window::new(-y - 1, y, -y - 1, y, 0)?;
        let burn = 64 * (1.0 / (self.service_rate - self.rho)).ceil() as u64 + 1000;
        let full = Window::new(window.lo, window.hi + burn as i64, window.lo, window.lo, 0)?;
        let grid: Vec<i64> = (-y..=y).filter(|&v| v + 1 <= window.hi + 1).collect();
        let rate = self.service_rate;
        let t = self.t;
        let results = try_map_replicas(derive_seed(self.seed, 0, 2), self.delta_samples, |_, seed| {
            let a = sample_markov_arrivals(&spec, &full, seed)?;
            let s = sample_bernoulli(rate, &full, derive_seed(seed, 2, 0))?;
            let (pair, qs) = general_queue(&a, &s, &window, burn)?;
            let diag = delta_h_from_queue(&pair, &qs, &grid, t)?;
            Ok((diag.sup_integer(), diag.forms_agree()))
        })?;
        let threshold = self.t.powf(self.sigma);
        let sups: Vec<i64> = results.iter().map(|r| r.0).collect();
        let below = sups.iter().filter(|&&s| (s as f64) <= threshold).count();
        Ok(Assumption15Report {
            variance_ratio: ratio,
            variance_ratio_stderr: ratio_se,
            sigma_a_squared: spec.sigma_a().powi(2),
            threshold,
            fraction_below: below as f64 / sups.len() as f64,
            sups,
            forms_agree: results.iter().all(|r| r.1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_window;
    use crate::sampler::tail_slope_theta;
    use crate::stats::log_survival_fit;

    #[test]
    fn both_forms_agree() {
        let w = make_window(300, 0.0).unwrap();
        let grid: Vec<i64> = (-300..=300).collect();
        for seed in 0..20 {
            let d = delta_h_diagnostic(0.25, 0.25, &w, seed, &grid, 1.0).unwrap();
            assert!(d.forms_agree());
            assert_eq!(d.from_queue[grid.iter().position(|&x| x == 0).unwrap()], 0);
            assert_eq!(d.sup_abs, d.sup_integer() as f64);
        }
    }

    #[test]
    fn grid_outside_window_is_rejected() {
        let w = make_window(10, 0.0).unwrap();
        assert!(delta_h_diagnostic(0.25, 0.25, &w, 1, &[-100], 1.0).is_err());
        assert!(delta_h_diagnostic(0.25, 0.25, &w, 1, &[0], 0.0).is_err());
    }

    #[test]
    fn far_differences_have_the_queue_tail() {
        // Q_1 and Q_{x+1} decorrelate for large x, so |Q_1 - Q_{x+1}| inherits
        // the geometric tail with slope θ in queue units.
        let w = make_window(5000, 0.0).unwrap();
        let mut samples = Vec::new();
        for seed in 0..40 {
            let grid: Vec<i64> = (1..50).map(|k| k * 100).collect();
            let d = delta_h_diagnostic(0.25, 0.25, &w, seed, &grid, 1.0).unwrap();
            samples.extend(d.from_queue.iter().map(|v| (v.abs() / 2) as u64));
        }
        let fit = log_survival_fit(&samples, 20).unwrap();
        let theta = tail_slope_theta(0.25, 0.25).unwrap();
        assert!((-fit.slope - theta).abs() < 0.2 * theta, "slope {} vs {theta}", fit.slope);
    }

    #[test]
    fn markov_feed_small_run() {
        let cfg = Assumption15Config {
            interval: 2000,
            variance_samples: 2000,
            y_range: 500,
            delta_samples: 20,
            seed: 3,
            ..Default::default()
        };
        let r = cfg.run().unwrap();
        assert!((r.variance_ratio - 0.25).abs() < 4.0 * r.variance_ratio_stderr, "{r:?}");
        assert!(r.forms_agree);
        assert_eq!(r.fraction_below, 1.0);
    }
}
