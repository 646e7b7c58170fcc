use std::sync::OnceLock;

use crate::error::{invalid, Result};
use crate::lattice::Marginal;
use crate::observables::ensemble::{check_replicas, check_time, occupation, EnsembleOptions, StationaryRun};
use crate::observables::height::round_half_down;
use crate::observables::normal_modes::Mat2;
use crate::parallel::fold_replicas;
use crate::sampler::{first_class_given_services, sample_mirrored};
use crate::stats::Moments;

/// Compactly supported weight used to integrate scaled correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `exp(-1 / (1 - (w/L)^2))` on `(-L, L)`, normalised to unit integral.
    Bump { half_width: f64 },
}

impl Default for TestFunction {
    fn default() -> Self {
        TestFunction::Bump { half_width: 2.0 }
    }
}

/// `∫_{-1}^{1} exp(-1 / (1 - u^2)) du`, by the midpoint rule (the integrand
/// is flat to all orders at ±1, so the rule converges very fast).
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 200_000;
        let h = 2.0 / n as f64;
        let terms: Vec<f64> = (0..n)
            .map(|k| {
                let u = -1.0 + (k as f64 + 0.5) * h;
                (-1.0 / (1.0 - u * u)).exp() * h
            })
            .collect();
        crate::stats::pairwise_sum(&terms)
    })
}

impl TestFunction {
    pub fn support(&self) -> f64 {
        match *self {
            TestFunction::Bump { half_width } => half_width,
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            TestFunction::Bump { half_width } => {
                let u = w / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - u * u)).exp() / (half_width * bump_mass())
                }
            }
        }
    }

    fn check(&self) -> Result<()> {
        let l = self.support();
        if !(l.is_finite() && l > 0.0) {
            return Err(invalid("phi", format!("support half-width {l} must be positive")));
        }
        Ok(())
    }
}

/// Value and standard error of one integrated entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedValue {
    pub value: f64,
    pub stderr: f64,
}

/// `t^{-2/3} Σ_w φ(w) t^{2/3} Ŝ^#(⌊vt + w t^{2/3}⌉, t)` for all four entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedEstimate {
    /// Scaling time; the dynamics ran for `t / (1 - q)`.
    pub t: f64,
    pub v: f64,
    /// Indexed `[α - 1][β - 1]`.
    pub entries: [[IntegratedValue; 2]; 2],
    pub replicas: u64,
    pub sites: (i64, i64),
    pub origins_averaged: u64,
}

impl IntegratedEstimate {
    pub fn entry(&self, alpha: usize, beta: usize) -> IntegratedValue {
        self.entries[alpha - 1][beta - 1]
    }

    pub fn values(&self) -> Mat2 {
        let e = &self.entries;
        [[e[0][0].value, e[0][1].value], [e[1][0].value, e[1][1].value]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub q: f64,
    pub v: f64,
    /// Scaling time (physical time times `1 - q`).
    pub t: f64,
    pub phi: TestFunction,
    pub replicas: u64,
    pub seed: u64,
    pub options: EnsembleOptions,
    pub redraw: Redraw,
}

/// Conditional averaging of one time-zero factor. Each marginal evolves on
/// its own, so averaging the other marginal's time-zero occupation over
/// redraws that keep this marginal fixed leaves the mean unchanged and
/// lowers the variance of one off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Redraw {
    #[default]
    None,
    /// `k` first-class draws sharing the services: sharpens (all, first).
    FirstClass(u64),
    /// Mirrored construction with `k` all-particle draws sharing the first
    /// class: sharpens (first, all).
    AllParticles(u64),
}

impl IntegratedConfig {
    pub fn new(rho1: f64, rho2: f64, q: f64, v: f64, t: f64, replicas: u64, seed: u64) -> Self {
        Self {
            rho1,
            rho2,
            q,
            v,
            t,
            phi: TestFunction::default(),
            replicas,
            seed,
            options: EnsembleOptions::default(),
            redraw: Redraw::None,
        }
    }

    /// Lattice offsets and weights of the sum.
    pub fn weights(&self) -> (i64, Vec<f64>) {
        weights_at(self.phi, self.v, self.t)
    }

    pub fn run(&self) -> Result<IntegratedEstimate> {
        Ok(self.run_many(&[self.t], &[self.v])?.pop().unwrap())
    }

    /// Estimates for every `(t, v)` pair from one set of replicas: each run
    /// is observed at all requested times. Results are ordered by time,
    /// then by speed, as given.
    pub fn run_many(&self, times: &[f64], speeds: &[f64]) -> Result<Vec<IntegratedEstimate>> {
        check_replicas(self.replicas, 2)?;
        self.phi.check()?;
        if matches!(self.redraw, Redraw::FirstClass(0) | Redraw::AllParticles(0)) {
            return Err(invalid("redraw", "need at least one draw"));
        }
        if times.is_empty() || speeds.is_empty() {
            return Err(invalid("times", "need at least one time and one speed"));
        }
        for &t in times {
            check_time(t)?;
            if t <= 0.0 {
                return Err(invalid("t", "scaled correlations need t > 0"));
            }
        }
        if times.windows(2).any(|p| p[1] < p[0]) {
            return Err(invalid("times", "must be nondecreasing"));
        }
        // (time index, j0, weights) per probe
        let probes: Vec<(usize, i64, Vec<f64>)> = times
            .iter()
            .enumerate()
            .flat_map(|(k, &t)| speeds.iter().map(move |&v| (k, t, v)))
            .map(|(k, t, v)| {
                let (j0, w) = weights_at(self.phi, v, t);
                (k, j0, w)
            })
            .collect();
        let reach = probes
            .iter()
            .map(|(_, j0, w)| j0.unsigned_abs().max((j0 + w.len() as i64 - 1).unsigned_abs()))
            .max()
            .unwrap();
        let obs = self.options.obs_halfwidth.unwrap_or(2 * reach + 16);
        if obs < 2 * reach {
            return Err(invalid(
                "obs_halfwidth",
                format!("{obs} is too small for a support reaching site {reach}"),
            ));
        }
        let phys: Vec<f64> = times.iter().map(|t| t / (1.0 - self.q)).collect();
        let run = StationaryRun::new(self.rho1, self.rho2, self.q, obs, *phys.last().unwrap(), self.options)?;
        let half = (obs / 2) as i64;
        let norigins = (2 * half + 1) as f64;
        let rho = [self.rho1, self.rho1 + self.rho2];
        let marginals = [Marginal::First, Marginal::All];

        let replica = |_: u64, seed: u64| -> Result<Vec<f64>> {
            let opts = run.opts.sampler;
            let c0 = match self.redraw {
                Redraw::AllParticles(_) => sample_mirrored(self.rho1, self.rho2, self.q, &run.window, seed, 0, opts)?,
                _ => run.initial(seed)?,
            };
            let zero: Vec<Vec<u8>> = marginals.iter().map(|&m| occupation(&c0, m, -half, half)).collect();
            // (entry, averaged time-zero factor)
            let mut sharpened: Option<((usize, usize), Vec<f64>)> = None;
            let draws = match self.redraw {
                Redraw::None => 0,
                Redraw::FirstClass(k) | Redraw::AllParticles(k) => k,
            };
            if draws > 0 {
                let (entry, b) = match self.redraw {
                    Redraw::FirstClass(_) => ((1, 0), 0),
                    _ => ((0, 1), 1),
                };
                let mut avg: Vec<f64> = zero[b].iter().map(|&z| z as f64).collect();
                for d in 1..draws {
                    let occ = match self.redraw {
                        Redraw::FirstClass(_) => {
                            let full = first_class_given_services(self.rho1, self.rho2, self.q, &run.window, seed, d, opts)?;
                            let skip = (-half - run.window.lo) as usize;
                            full[skip..skip + avg.len()].to_vec()
                        }
                        _ => {
                            let c = sample_mirrored(self.rho1, self.rho2, self.q, &run.window, seed, d, opts)?;
                            occupation(&c, Marginal::All, -half, half)
                        }
                    };
                    for (acc, &o) in avg.iter_mut().zip(&occ) {
                        *acc += o as f64;
                    }
                }
                avg.iter_mut().for_each(|v| *v /= draws as f64);
                sharpened = Some((entry, avg));
            }
            let mut ev = run.evolver(c0, seed)?;
            let mut out = vec![0.0; 4 * probes.len()];
            let mut at = usize::MAX;
            let mut now: Vec<Vec<u8>> = Vec::new();
            let mut lo = 0;
            for (p, (k, j0, weights)) in probes.iter().enumerate() {
                if *k != at {
                    at = *k;
                    ev.advance_to(phys[at])?;
                    // one snapshot covering every probe at this time
                    lo = -half - reach as i64;
                    let hi = half + reach as i64;
                    now = marginals.iter().map(|&m| occupation(ev.process(0).config(), m, lo, hi)).collect();
                }
                let nk = weights.len();
                // Σ_k φ_k (η^α_t(o + j0 + k) - ρ_α) for every origin; centring
                // both factors at the known densities keeps the mean and drops
                // the particle-count fluctuations from the variance
                let smoothed: Vec<Vec<f64>> = now
                    .iter()
                    .zip(rho)
                    .map(|(row, r)| {
                        (0..zero[0].len())
                            .map(|o| {
                                let first = (o as i64 - half + j0 - lo) as usize;
                                row[first..first + nk].iter().zip(weights).map(|(&e, &w)| (e as f64 - r) * w).sum()
                            })
                            .collect()
                    })
                    .collect();
                for a in 0..2 {
                    for b in 0..2 {
                        let s: f64 = if let Some(avg) = sharpened.as_ref().filter(|s| s.0 == (a, b)).map(|s| &s.1) {
                            avg.iter().zip(&smoothed[a]).map(|(&z, &v)| (z - rho[b]) * v).sum()
                        } else {
                            zero[b].iter().zip(&smoothed[a]).map(|(&z, &v)| (z as f64 - rho[b]) * v).sum()
                        };
                        out[4 * p + 2 * a + b] = s / norigins;
                    }
                }
            }
            Ok(out)
        };
        let m = fold_replicas(self.seed, self.replicas, replica, Moments::new(4 * probes.len()), |acc, _, v| {
            acc.push(&v)
        })?;
        let (mean, se) = (m.means(), m.stderrs());
        Ok(probes
            .iter()
            .enumerate()
            .map(|(p, (k, j0, w))| {
                let val = |e: usize| IntegratedValue {
                    value: mean[4 * p + e],
                    stderr: se[4 * p + e],
                };
                IntegratedEstimate {
                    t: times[*k],
                    v: speeds[p % speeds.len()],
                    entries: [[val(0), val(1)], [val(2), val(3)]],
                    replicas: self.replicas,
                    sites: (*j0, j0 + w.len() as i64 - 1),
                    origins_averaged: norigins as u64,
                }
            })
            .collect())
    }
}

fn weights_at(phi: TestFunction, v: f64, t: f64) -> (i64, Vec<f64>) {
    let scale = t.powf(2.0 / 3.0);
    let k_max = (phi.support() * scale).ceil() as i64;
    let centre = round_half_down(v * t);
    let w: Vec<f64> = (-k_max..=k_max).map(|k| phi.eval(k as f64 / scale)).collect();
    (centre - k_max, w)
}

/// Integrated scaled correlation of one entry `(α, β)` at speed `v`.
#[allow(clippy::too_many_arguments)]
pub fn integrated_scaled_correlation(
    entry: (usize, usize),
    rho1: f64,
    rho2: f64,
    q: f64,
    v: f64,
    t: f64,
    phi: TestFunction,
    replicas: u64,
    seed: u64,
) -> Result<IntegratedValue> {
    let (a, b) = entry;
    if !(1..=2).contains(&a) || !(1..=2).contains(&b) {
        return Err(invalid("entry", format!("({a}, {b}) is not a matrix entry")));
    }
    let mut cfg = IntegratedConfig::new(rho1, rho2, q, v, t, replicas, seed);
    cfg.phi = phi;
    Ok(cfg.run()?.entry(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass() {
        for l in [0.5, 2.0, 3.0] {
            let phi = TestFunction::Bump { half_width: l };
            let n = 100_000;
            let h = 2.0 * l / n as f64;
            let total: f64 = (0..n).map(|k| phi.eval(-l + (k as f64 + 0.5) * h) * h).sum();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
            assert_eq!(phi.eval(l), 0.0);
            assert_eq!(phi.eval(-1.5 * l), 0.0);
        }
        // reference value of ∫ exp(-1/(1-u²)) over (-1, 1)
        assert!((bump_mass() - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn weights_are_centred_on_the_ray() {
        let cfg = IntegratedConfig::new(0.25, 0.25, 0.0, 0.5, 27.0, 2, 0);
        let (j0, w) = cfg.weights();
        // t^{2/3} = 9, support 2 → k in [-18, 18], centre round(13.5) = 13
        assert_eq!(w.len(), 37);
        assert_eq!(j0, 13 - 18);
        let sum: f64 = w.iter().sum::<f64>() / 9.0;
        assert!((sum - 1.0).abs() < 1e-3, "{sum}");
    }

    #[test]
    fn outside_the_light_cone_vanishes() {
        // jumps of 16 sites within time 8 are rare, so nothing reaches the support
        let cfg = IntegratedConfig::new(0.25, 0.25, 0.0, 3.0, 8.0, 400, 3);
        let est = cfg.run().unwrap();
        for a in 1..=2 {
            for b in 1..=2 {
                let e = est.entry(a, b);
                assert!(e.value.abs() <= 4.0 * e.stderr, "({a},{b}) {e:?}");
            }
        }
    }

    #[test]
    fn batched_runs_match_single_runs() {
        let cfg = IntegratedConfig::new(0.25, 0.25, 0.0, 0.5, 8.0, 6, 9);
        let many = cfg.run_many(&[4.0, 8.0], &[0.0, 0.5]).unwrap();
        assert_eq!(many.len(), 4);
        assert_eq!((many[3].t, many[3].v), (8.0, 0.5));
        let mut single = cfg;
        single.options.obs_halfwidth = Some(many[3].origins_averaged - 1);
        let one = single.run().unwrap();
        assert_eq!(one.entries, many[3].entries);
        assert!(cfg.run_many(&[8.0, 4.0], &[0.0]).is_err());
    }

    #[test]
    fn diagonal_on_its_ray_is_positive() {
        let cfg = IntegratedConfig::new(0.25, 0.25, 0.0, 0.0, 20.0, 2000, 4);
        let e = cfg.run().unwrap().entry(2, 2);
        assert!(e.value > 4.0 * e.stderr, "{e:?}");
    }
}
