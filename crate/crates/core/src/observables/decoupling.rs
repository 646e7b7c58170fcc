use crate::error::{invalid, Result};
use crate::harris::{EngineKind, Evolver, Process};
use crate::lattice::{make_window, Configuration, Marginal, Window};
use crate::observables::height::{characteristic_site, rescale_value};
use crate::parallel::try_map_replicas;
use crate::rng::derive_seed;
use crate::sampler::{
    flat_two_species, sample_general_two_species, sample_markov_arrivals, sample_two_species, MarkovArrivalSpec,
    default_burn_in,
};
use crate::sampler::sample_bernoulli;
use crate::stats::{mean, pearson, variance};

/// Initial data of a decoupling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    /// Translation-invariant stationary measure.
    Stationary,
    /// Deterministic flat profile with the requested densities.
    Flat,
    /// Queueing construction fed by a stationary Markov arrival chain with
    /// parameter `alpha` and Bernoulli services.
    MarkovQueue { alpha: f64 },
}

impl InitialKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitialKind::Stationary => "stationary",
            InitialKind::Flat => "flat",
            InitialKind::MarkovQueue { .. } => "general",
        }
    }

    fn sample(&self, rho1: f64, rho2: f64, q: f64, window: &Window, seed: u64) -> Result<Configuration> {
        match *self {
            InitialKind::Stationary => sample_two_species(rho1, rho2, q, window, seed),
            InitialKind::Flat => flat_two_species(rho1, rho2, window),
            InitialKind::MarkovQueue { alpha } => {
                let spec = MarkovArrivalSpec::new(rho1, alpha)?;
                let burn = 4 * default_burn_in(rho2);
                let full = Window::new(window.lo, window.hi + burn as i64, window.lo, window.lo, 0)?;
                let a = sample_markov_arrivals(&spec, &full, seed)?;
                let s = sample_bernoulli(rho1 + rho2, &full, derive_seed(seed, 2, 0))?;
                sample_general_two_species(&a, &s, window, burn)
            }
        }
    }
}

/// Joint statistics of `(𝔥^{ρ1}(w, t), 𝔥^{ρ1+ρ2}(z, t))` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingRecord {
    pub t: f64,
    pub samples: u64,
    pub runs: u64,
    pub pearson: f64,
    /// Grouped jackknife over runs.
    pub pearson_stderr: f64,
    /// `sup |F(s, r) - F1(s) F2(r)|` over `grid × grid`.
    pub sup_cdf_gap: f64,
    pub grid: Vec<f64>,
    pub cdf_first: Vec<f64>,
    pub cdf_all: Vec<f64>,
    pub mean: [f64; 2],
    pub variance: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingConfig {
    pub kind: InitialKind,
    pub rho1: f64,
    pub rho2: f64,
    pub q: f64,
    /// Scaling times; the dynamics runs for `t / (1 - q)`.
    pub times: Vec<f64>,
    pub w: f64,
    pub z: f64,
    /// Total number of samples (origins times runs).
    pub samples: u64,
    pub seed: u64,
    /// Origins sharing one run, spaced `origin_spacing` apart.
    pub origins_per_run: u64,
    pub origin_spacing: u64,
}

pub const MIN_SAMPLES: u64 = 500;

/// `s ∈ {-3, -2.75, …, 3}`.
pub fn default_cdf_grid() -> Vec<f64> {
    (0..=24).map(|k| -3.0 + 0.25 * k as f64).collect()
}

impl DecouplingConfig {
    pub fn new(kind: InitialKind, rho1: f64, rho2: f64, times: Vec<f64>, samples: u64, seed: u64) -> Self {
        Self {
            kind,
            rho1,
            rho2,
            q: 0.0,
            times,
            w: 0.0,
            z: 0.0,
            samples,
            seed,
            origins_per_run: 1,
            origin_spacing: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        crate::error::check_two_species(self.rho1, self.rho2)?;
        crate::error::check_asymmetry(self.q)?;
        if self.samples < MIN_SAMPLES {
            return Err(invalid(
                "replicas",
                format!("need at least {MIN_SAMPLES} samples for CDF resolution, got {}", self.samples),
            ));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("t", "times must be positive and finite"));
        }
        if self.origins_per_run == 0 {
            return Err(invalid("origins_per_run", "must be at least 1"));
        }
        if self.origins_per_run > 1 && self.origin_spacing == 0 {
            return Err(invalid("origin_spacing", "must be positive when several origins share a run"));
        }
        if let InitialKind::MarkovQueue { alpha } = self.kind {
            MarkovArrivalSpec::new(self.rho1, alpha)?;
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Vec<DecouplingRecord>> {
        self.validate()?;
        let mut times = self.times.clone();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let n = self.origins_per_run;
        let runs = self.samples.div_ceil(n);
        let (r1, r2) = (self.rho1, self.rho1 + self.rho2);
        let probes: Vec<(i64, i64)> = times
            .iter()
            .map(|&t| (characteristic_site(r1, self.w, t), characteristic_site(r2, self.z, t)))
            .collect();
        let reach = probes.iter().map(|&(a, b)| a.unsigned_abs().max(b.unsigned_abs())).max().unwrap();
        let span = (n - 1) * self.origin_spacing / 2;
        let origins: Vec<i64> = (0..n).map(|k| (k * self.origin_spacing) as i64 - span as i64).collect();
        let q = self.q;
        let t_last = times[times.len() - 1] / (1.0 - q);
        let window = make_window(span + reach + 1, t_last)?;
        let kind = self.kind;
        let (rho1, rho2) = (self.rho1, self.rho2);
        let (w, z) = (self.w, self.z);

        let per_run = try_map_replicas(self.seed, runs, |_, seed| -> Result<Vec<Vec<(f64, f64)>>> {
            let c0 = kind.sample(rho1, rho2, q, &window, seed)?;
            let start = Process::new(c0.clone(), false);
            let base: Vec<(i64, i64)> = origins
                .iter()
                .map(|&o| (start.height(Marginal::First, 0, o), start.height(Marginal::All, 0, o)))
                .collect();
            let engine = if q == 0.0 { EngineKind::Tasep } else { EngineKind::Asep };
            let mut ev = Evolver::uniformized(&window, t_last, q, derive_seed(seed, 1, 0), vec![c0], engine)?;
            let mut out = Vec::with_capacity(times.len());
            for (&t, &(s1, s2)) in times.iter().zip(&probes) {
                ev.advance_to(t / (1.0 - q))?;
                let p = ev.process(0);
                let row = origins
                    .iter()
                    .zip(&base)
                    .map(|(&o, &(b1, b2))| {
                        // heights relative to h(o, 0); re-anchoring at the origin
                        let h1 = p.height(Marginal::First, 0, o + s1) - b1;
                        let h2 = p.height(Marginal::All, 0, o + s2) - b2;
                        (rescale_value(h1 as f64, r1, w, t), rescale_value(h2 as f64, r2, z, t))
                    })
                    .collect();
                out.push(row);
            }
            Ok(out)
        })?;

        let grid = default_cdf_grid();
        Ok(times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let blocks: Vec<&Vec<(f64, f64)>> = per_run.iter().map(|r| &r[k]).collect();
                summarize(t, &blocks, &grid)
            })
            .collect())
    }
}

fn summarize(t: f64, blocks: &[&Vec<(f64, f64)>], grid: &[f64]) -> DecouplingRecord {
    let xs: Vec<f64> = blocks.iter().flat_map(|b| b.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = blocks.iter().flat_map(|b| b.iter().map(|p| p.1)).collect();
    let n = xs.len() as f64;
    let r = pearson(&xs, &ys);

    // grouped jackknife, at most 100 groups of whole runs
    let groups = blocks.len().min(100);
    let mut jack = Vec::with_capacity(groups);
    if groups >= 2 {
        let per = blocks.len().div_ceil(groups);
        for g in 0..groups {
            let (lo, hi) = (g * per, ((g + 1) * per).min(blocks.len()));
            if lo >= hi {
                continue;
            }
            let keep = |i: usize| i < lo || i >= hi;
            let jx: Vec<f64> = blocks.iter().enumerate().filter(|(i, _)| keep(*i)).flat_map(|(_, b)| b.iter().map(|p| p.0)).collect();
            let jy: Vec<f64> = blocks.iter().enumerate().filter(|(i, _)| keep(*i)).flat_map(|(_, b)| b.iter().map(|p| p.1)).collect();
            jack.push(pearson(&jx, &jy));
        }
    }
    let g = jack.len() as f64;
    let pearson_stderr = if jack.len() >= 2 {
        let m = mean(&jack);
        ((g - 1.0) / g * jack.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
    } else {
        f64::NAN
    };

    let cdf = |v: &[f64]| -> Vec<f64> { grid.iter().map(|&s| v.iter().filter(|&&x| x <= s).count() as f64 / n).collect() };
    let (fx, fy) = (cdf(&xs), cdf(&ys));
    // joint counts via per-sample grid indices
    let idx = |v: f64| grid.partition_point(|&s| s < v);
    let m = grid.len();
    let mut cell = vec![0u64; (m + 1) * (m + 1)];
    for (&x, &y) in xs.iter().zip(&ys) {
        cell[idx(x) * (m + 1) + idx(y)] += 1;
    }
    // cumulative counts: joint(a, b) = #{x <= grid[a], y <= grid[b]}
    let mut cum = vec![0u64; (m + 1) * (m + 1)];
    for a in 0..=m {
        for b in 0..=m {
            let mut v = cell[a * (m + 1) + b];
            if a > 0 {
                v += cum[(a - 1) * (m + 1) + b];
            }
            if b > 0 {
                v += cum[a * (m + 1) + b - 1];
            }
            if a > 0 && b > 0 {
                v -= cum[(a - 1) * (m + 1) + b - 1];
            }
            cum[a * (m + 1) + b] = v;
        }
    }
    let mut gap = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let joint = cum[a * (m + 1) + b] as f64 / n;
            gap = gap.max((joint - fx[a] * fy[b]).abs());
        }
    }
    DecouplingRecord {
        t,
        samples: xs.len() as u64,
        runs: blocks.len() as u64,
        pearson: r,
        pearson_stderr,
        sup_cdf_gap: gap,
        grid: grid.to_vec(),
        cdf_first: fx,
        cdf_all: fy,
        mean: [mean(&xs), mean(&ys)],
        variance: [variance(&xs), variance(&ys)],
    }
}

/// Runs [`DecouplingConfig`] with one origin per run.
#[allow(clippy::too_many_arguments)]
pub fn decoupling_statistics(
    kind: InitialKind,
    rho1: f64,
    rho2: f64,
    t: f64,
    w: f64,
    z: f64,
    replicas: u64,
    seed: u64,
) -> Result<DecouplingRecord> {
    let mut cfg = DecouplingConfig::new(kind, rho1, rho2, vec![t], replicas, seed);
    cfg.w = w;
    cfg.z = z;
    Ok(cfg.run()?.pop().unwrap())
}
