use crate::backwards::path::{trace_path, TieRule};
use crate::error::{check_density, invalid, Error, Result};
use crate::harris::{evolve, generate_uniformized_log};
use crate::lattice::{make_window, Configuration, Marginal, SpeciesLabel, Window};
use crate::observables::round_half_down;
use crate::parallel::try_map_replicas;
use crate::rng::derive_seed;
use crate::sampler::sample_bernoulli;
use crate::stats::{linear_fit, LinearFit};

/// Single-species initial data for the localisation ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointKind {
    /// Bernoulli product measure with density `rho`.
    Stationary { rho: f64 },
    /// Deterministic periodic profile with density `rho` on `j < 0` and
    /// `lambda <= rho` on `j >= 0`.
    HalfPeriodic { rho: f64, lambda: f64 },
}

impl EndpointKind {
    fn check(&self, alpha: f64) -> Result<()> {
        if !(alpha > -1.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("{alpha} must lie in (-1, 1)")));
        }
        match *self {
            EndpointKind::Stationary { rho } => check_density("rho", rho),
            EndpointKind::HalfPeriodic { rho, lambda } => {
                check_density("rho", rho)?;
                if !(0.0..=rho).contains(&lambda) {
                    return Err(invalid("lambda", format!("{lambda} must lie in [0, rho]")));
                }
                let (a, b) = (1.0 - 2.0 * rho, 1.0 - 2.0 * lambda);
                if alpha < a - 1e-12 || alpha > b + 1e-12 {
                    return Err(invalid("alpha", format!("{alpha} must lie in [{a}, {b}]")));
                }
                Ok(())
            }
        }
    }

    fn sample(&self, window: &Window, seed: u64) -> Result<Configuration> {
        let label = |occ: bool| if occ { SpeciesLabel::First } else { SpeciesLabel::Hole };
        match *self {
            EndpointKind::Stationary { rho } => {
                let occ = sample_bernoulli(rho, window, seed)?;
                Ok(Configuration::from_fn(*window, |i| label(occ[(i - window.lo) as usize] == 1)))
            }
            EndpointKind::HalfPeriodic { rho, lambda } => {
                let hit = |k: i64, r: f64| ((k + 1) as f64 * r).floor() - (k as f64 * r).floor() >= 1.0;
                Ok(Configuration::from_fn(*window, |i| {
                    label(if i < 0 { hit(i, rho) } else { hit(i, lambda) })
                }))
            }
        }
    }
}

/// Empirical exceedance curve of the path's scaled deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub t: f64,
    pub m_grid: Vec<f64>,
    /// `P(sup_τ |x(τ) - ατ| > M t^{2/3})`.
    pub exceed_prob: Vec<f64>,
    /// Binomial standard errors.
    pub stderr: Vec<f64>,
    pub replicas: u64,
    /// Replicas whose path left the safe region; counted as exceeding every `M`.
    pub buffer_hits: u64,
    /// `sup_τ |x(τ) - ατ| / t^{2/3}` per replica (infinite for buffer hits).
    pub deviations: Vec<f64>,
    /// Fit of `ln P` against `M²` over grid points with enough exceedances.
    pub exponent_fit: Option<LinearFit>,
}

impl TailCurve {
    /// `c` in `P ≈ C e^{-c M²}`.
    pub fn exponent(&self) -> Option<f64> {
        self.exponent_fit.map(|f| -f.slope)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.exceed_prob.windows(2).all(|p| p[1] <= p[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub kind: EndpointKind,
    /// Characteristic speed; the path starts at `round(α t)`.
    pub alpha: f64,
    pub t: f64,
    pub replicas: u64,
    pub m_grid: Vec<f64>,
    pub tie_rule: TieRule,
    /// Grid points with fewer exceedances are left out of the fit.
    pub min_fit_count: u64,
    pub seed: u64,
}

impl EndpointConfig {
    /// Stationary density `rho`, starting on the characteristic `α = 1 - 2ρ`.
    pub fn stationary(rho: f64, t: f64, replicas: u64, seed: u64) -> Self {
        Self {
            kind: EndpointKind::Stationary { rho },
            alpha: 1.0 - 2.0 * rho,
            t,
            replicas,
            m_grid: (1..=16).map(|k| k as f64 * 0.25).collect(),
            tie_rule: TieRule::Rightmost,
            min_fit_count: 5,
            seed,
        }
    }

    pub fn run(&self) -> Result<TailCurve> {
        self.kind.check(self.alpha)?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(invalid("t", "need a positive finite time"));
        }
        if self.replicas == 0 || self.m_grid.is_empty() {
            return Err(invalid("replicas", "need replicas and a nonempty M grid"));
        }
        let (t, alpha) = (self.t, self.alpha);
        let x0 = round_half_down(alpha * t);
        let window = make_window(2 * x0.unsigned_abs() + 32, t)?;
        let scale = t.powf(2.0 / 3.0);
        let deviations = try_map_replicas(self.seed, self.replicas, |_, seed| -> Result<f64> {
            let c = self.kind.sample(&window, seed)?;
            let log = generate_uniformized_log(&window, t, 0.0, derive_seed(seed, 1, 0))?;
            let traj = evolve(&c, &log, t)?;
            match trace_path(&traj, &log, Marginal::All, x0, t, self.tie_rule) {
                Ok(p) => Ok(p.sup_deviation(|tau| alpha * tau) / scale),
                Err(Error::BufferViolation { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })?;
        let n = deviations.len() as f64;
        let counts: Vec<u64> = self
            .m_grid
            .iter()
            .map(|&m| deviations.iter().filter(|&&d| d > m).count() as u64)
            .collect();
        let exceed_prob: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let stderr = exceed_prob.iter().map(|&p| (p * (1.0 - p) / n).sqrt()).collect();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for ((&m, &c), &p) in self.m_grid.iter().zip(&counts).zip(&exceed_prob) {
            if c >= self.min_fit_count && p < 1.0 {
                x.push(m * m);
                y.push(p.ln());
            }
        }
        Ok(TailCurve {
            t,
            m_grid: self.m_grid.clone(),
            exceed_prob,
            stderr,
            replicas: self.replicas,
            buffer_hits: deviations.iter().filter(|d| d.is_infinite()).count() as u64,
            deviations,
            exponent_fit: (x.len() >= 3).then(|| linear_fit(&x, &y)),
        })
    }
}

/// Exceedance curve of backwards paths from `round(α t)` at time `t`.
#[allow(clippy::too_many_arguments)]
pub fn endpoint_ensemble(
    kind: EndpointKind,
    alpha: f64,
    t: f64,
    replicas: u64,
    m_grid: &[f64],
    seed: u64,
) -> Result<TailCurve> {
    let mut cfg = EndpointConfig::stationary(0.5, t, replicas, seed);
    cfg.kind = kind;
    cfg.alpha = alpha;
    cfg.m_grid = m_grid.to_vec();
    cfg.run()
}
