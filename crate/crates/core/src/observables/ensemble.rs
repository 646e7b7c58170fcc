use crate::error::{invalid, Result};
use crate::harris::{ClockSource, EngineKind, Evolver};
use crate::lattice::{make_window, Configuration, Window};
use crate::rng::derive_seed;
use crate::sampler::{sample_two_species_with, SamplerOptions};

/// Whether requested times are physical or already scaled by `(1 - q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnits {
    #[default]
    Physical,
    /// Paper units: physical time is `t / (1 - q)`.
    Scaled,
}

impl TimeUnits {
    pub fn physical(self, t: f64, q: f64) -> f64 {
        match self {
            TimeUnits::Physical => t,
            TimeUnits::Scaled => t / (1.0 - q),
        }
    }
}

/// Knobs shared by the stationary ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnsembleOptions {
    /// Observation half-width; each estimator picks a default when unset.
    pub obs_halfwidth: Option<u64>,
    pub clocks: ClockSource,
    pub sampler: SamplerOptions,
    pub doubled_buffer: bool,
    pub time_units: TimeUnits,
}

/// A stationary two-species run: window, initial sample and dynamics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StationaryRun {
    pub rho1: f64,
    pub rho2: f64,
    pub q: f64,
    pub window: Window,
    pub t_max: f64,
    pub opts: EnsembleOptions,
}

impl StationaryRun {
    pub fn new(rho1: f64, rho2: f64, q: f64, obs_halfwidth: u64, t_max: f64, opts: EnsembleOptions) -> Result<Self> {
        crate::error::check_two_species(rho1, rho2)?;
        crate::error::check_asymmetry(q)?;
        let mut window = make_window(obs_halfwidth, t_max)?;
        if opts.doubled_buffer {
            window = window.doubled_buffer()?;
        }
        Ok(Self {
            rho1,
            rho2,
            q,
            window,
            t_max,
            opts,
        })
    }

    pub fn initial(&self, seed: u64) -> Result<Configuration> {
        sample_two_species_with(self.rho1, self.rho2, self.q, &self.window, seed, self.opts.sampler)
    }

    pub fn evolver(&self, config: Configuration, seed: u64) -> Result<Evolver<'static>> {
        let dyn_seed = derive_seed(seed, 1, 0);
        match self.opts.clocks {
            ClockSource::PerBond => Evolver::streaming(&self.window, self.t_max, self.q, dyn_seed, vec![config]),
            ClockSource::Uniformized => {
                let kind = if self.q == 0.0 { EngineKind::Tasep } else { EngineKind::Asep };
                Evolver::uniformized(&self.window, self.t_max, self.q, dyn_seed, vec![config], kind)
            }
        }
    }
}

pub(crate) fn check_replicas(replicas: u64, min: u64) -> Result<()> {
    if replicas < min {
        return Err(invalid("replicas", format!("need at least {min}, got {replicas}")));
    }
    Ok(())
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(invalid("t", format!("{t} is not a finite nonnegative time")));
    }
    Ok(())
}

/// `η^m` values of a configuration on `[lo, hi]`.
pub(crate) fn occupation(c: &Configuration, m: crate::lattice::Marginal, lo: i64, hi: i64) -> Vec<u8> {
    (lo..=hi).map(|i| c.occupied(m, i)).collect()
}
