//! The experiments `exlab` knows, their parameters and how each one runs.

use exlab_core::backwards::{
    check_admissible, default_tau_grid, geodesic_check, trace_path, EndpointConfig, EndpointKind, GeodesicOutcome,
    TieRule,
};
use exlab_core::harris::{evolve, generate_event_log, ClockSource};
use exlab_core::lattice::{make_window, Configuration, Marginal, SpeciesLabel, Window};
use exlab_core::observables::{
    identity_residuals, normal_mode_data, susceptibility, Assumption15Config, DecouplingConfig, EnsembleOptions,
    InitialKind, IntegratedConfig, LaplacianConfig, Redraw, TestFunction, TimeUnits, TwoPointConfig,
    DECOUPLING_MIN_SAMPLES, LAPLACIAN_MIN_REPLICAS,
};
use exlab_core::parallel::{replica_seed, try_map_replicas};
use exlab_core::rng::derive_seed;
use exlab_core::sampler::{
    drift_check, flat_two_species, return_times, sample_bernoulli, sample_mirrored, sample_queue,
    sample_two_species_with, tail_slope_theta, SamplerOptions,
};
use exlab_core::stats::{log_survival_fit, survival};
use exlab_core::error::{check_asymmetry, check_density, check_two_species};

use crate::config::{ConfigError, Params};
use crate::output::{opt, row, Output, Table};
use crate::schema;

/// A documented parameter with its default.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn p(key: &'static str, default: &'static str, doc: &'static str) -> Param {
    Param { key, default, doc }
}

/// Deferred computation: receives the master seed.
pub type Job = Box<dyn FnOnce(u64) -> exlab_core::Result<Vec<Output>> + Send>;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub groups: &'static [&'static [Param]],
    /// Parses and checks every parameter; nothing is computed here.
    pub plan: fn(&Params) -> Result<Job, ConfigError>,
}

impl Experiment {
    pub fn params(&self) -> impl Iterator<Item = &'static Param> {
        self.groups.iter().flat_map(|g| g.iter())
    }
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish()
    }
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

const TWO_SPECIES: &[Param] = &[
    p("rho1", "0.25", "first-class density, in (0, 1)"),
    p("rho2", "0.25", "second-class density, rho1 + rho2 < 1"),
    p("q", "0", "left jump rate, in [0, 1)"),
];

const ENSEMBLE: &[Param] = &[
    p("clocks", "per_bond", "per_bond or uniformized clock generation"),
    p("time_units", "physical", "physical, or scaled (times divided by 1 - q)"),
    p("burn_in", "auto", "sampler burn-in in sites, or auto"),
    p("double_burn_in", "false", "double the sampler burn-in"),
    p("doubled_buffer", "false", "double the window buffer"),
];

const OBS_AUTO: &[Param] = &[p("obs_halfwidth", "auto", "observation half-width in sites, or auto")];

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "normal_modes",
        about: "closed-form susceptibility, flux Jacobian, eigen-decomposition and mode couplings",
        groups: &[&[p("rho1", "0.25", "first-class density"), p("rho2", "0.25", "second-class density")]],
        plan: plan_normal_modes,
    },
    Experiment {
        name: "currents",
        about: "species currents of the stationary ensemble against their closed forms",
        groups: &[
            TWO_SPECIES,
            &[
                p("t", "50", "observation time"),
                p("obs_halfwidth", "512", "observed bonds on each side of the origin"),
                p("replicas", "200", "independent replicas, at least 2"),
            ],
            ENSEMBLE,
        ],
        plan: plan_currents,
    },
    Experiment {
        name: "two_point",
        about: "two-point function S(j, t) for every marginal pair",
        groups: &[
            TWO_SPECIES,
            &[
                p("t", "20", "comma list of times, each >= 0"),
                p("j_lo", "-50", "smallest offset"),
                p("j_hi", "50", "largest offset"),
                p("replicas", "200", "independent replicas, at least 2"),
            ],
            OBS_AUTO,
            ENSEMBLE,
        ],
        plan: plan_two_point,
    },
    Experiment {
        name: "susceptibility",
        about: "sums of the two-point function against the susceptibility matrix",
        groups: &[
            TWO_SPECIES,
            &[
                p("t", "20", "time"),
                p("j_lo", "-200", "smallest offset"),
                p("j_hi", "200", "largest offset"),
                p("replicas", "500", "independent replicas, at least 2"),
            ],
            OBS_AUTO,
            ENSEMBLE,
        ],
        plan: plan_susceptibility,
    },
    Experiment {
        name: "laplacian_identity",
        about: "covariance of heights against the discrete Laplacian of the two-point function",
        groups: &[
            TWO_SPECIES,
            &[
                p("t", "8", "first time, > 0"),
                p("t_tilde", "8", "second time, > 0"),
                p("x", "0", "first site"),
                p("x_tilde", "0", "second site"),
                p("i_lo", "-8", "smallest offset"),
                p("i_hi", "8", "largest offset"),
                p("replicas", "10000", "independent replicas, at least 100"),
            ],
            OBS_AUTO,
            ENSEMBLE,
        ],
        plan: plan_laplacian,
    },
    Experiment {
        name: "integrated_correlation",
        about: "scaled two-point function integrated against a bump in a frame moving at speed v",
        groups: &[
            TWO_SPECIES,
            &[
                p("t", "250,500,1000", "comma list of times, > 0"),
                p("v", "0", "comma list of frame speeds"),
                p("bump_half_width", "2", "support half-width L of the bump"),
                p("replicas", "100", "independent replicas, at least 2"),
                p("redraw", "none", "none, first:K or all:K conditional redraws per replica"),
            ],
            OBS_AUTO,
            ENSEMBLE,
        ],
        plan: plan_integrated,
    },
    Experiment {
        name: "decoupling_stationary",
        about: "joint law of the rescaled first-class and all-particle heights, stationary start",
        groups: &[TWO_SPECIES, DECOUPLING],
        plan: plan_decoupling_stationary,
    },
    Experiment {
        name: "decoupling_flat",
        about: "joint law of the rescaled heights from flat deterministic initial data",
        groups: &[TWO_SPECIES, DECOUPLING],
        plan: plan_decoupling_flat,
    },
    Experiment {
        name: "decoupling_general",
        about: "joint law of the rescaled heights from queue-built data with Markov arrivals",
        groups: &[TWO_SPECIES, DECOUPLING, &[p("alpha", "0.5", "Markov arrival parameter, in [0, 1); 0.5 gives independent arrivals")]],
        plan: plan_decoupling_general,
    },
    Experiment {
        name: "endpoint_tail",
        about: "exceedance curve of backwards-path deviations from the characteristic",
        groups: &[&[
            p("initial", "stationary", "stationary or half_periodic"),
            p("rho", "0.5", "density, in (0, 1)"),
            p("lambda", "0.25", "right-half density for half_periodic, in [0, rho]"),
            p("alpha", "auto", "characteristic speed, or auto for 1 - 2 rho"),
            p("t", "500", "time, > 0"),
            p("replicas", "2000", "independent paths"),
            p("m_grid", "0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3,3.25,3.5,3.75,4", "thresholds M"),
            p("tie_rule", "rightmost", "leftmost, rightmost or random"),
            p("min_fit_count", "5", "exceedances needed for a grid point to enter the fit"),
        ]],
        plan: plan_endpoint,
    },
    Experiment {
        name: "geodesic_check",
        about: "height decomposition along traced backwards paths",
        groups: &[&[
            p("rho", "0.5", "Bernoulli density, in (0, 1)"),
            p("obs_halfwidth", "32", "observation half-width"),
            p("t", "50", "time, > 0"),
            p("paths", "100", "number of traced paths"),
            p("tie_rule", "cycle", "leftmost, rightmost, random, or cycle through all three"),
            p("x_spread", "5", "starting sites cycle through -x_spread..=x_spread"),
            p("dump_paths", "0", "write the first N paths as tau,x files"),
        ]],
        plan: plan_geodesic,
    },
    Experiment {
        name: "queue_tails",
        about: "queue-length and return-time tails of the stationary sampler, plus the drift check",
        groups: &[
            TWO_SPECIES,
            &[
                p("sites", "1000000", "queue length in sites"),
                p("burn_in", "auto", "sampler burn-in in sites, or auto"),
                p("min_count", "100", "observations needed for a level to enter a fit"),
                p("drift_x_max", "200", "levels covered by the drift check"),
            ],
        ],
        plan: plan_queue_tails,
    },
    Experiment {
        name: "sampler_dump",
        about: "configurations as one character per site (1, 2, .) plus a JSON sidecar",
        groups: &[
            TWO_SPECIES,
            &[
                p("sites", "200", "sites per sample"),
                p("samples", "1", "number of samples"),
                p("sampler", "stationary", "stationary, mirrored or flat"),
                p("burn_in", "auto", "sampler burn-in in sites, or auto"),
            ],
        ],
        plan: plan_sampler_dump,
    },
    Experiment {
        name: "assumption15_validate",
        about: "variance and correlation-bound checks for Markov-arrival initial data",
        groups: &[&[
            p("rho", "0.5", "arrival density, in (0, 1)"),
            p("alpha", "0.5", "Markov arrival parameter, in [0, 1); 0.5 gives independent arrivals"),
            p("service_rate", "0.75", "Bernoulli service rate, in (rho, 1)"),
            p("interval", "10000", "interval length for the variance check"),
            p("variance_samples", "4000", "samples for the variance check"),
            p("t", "1000000", "scaling time of the correlation bound"),
            p("sigma", "0.3", "threshold exponent"),
            p("y_range", "10000", "half-width of the y range"),
            p("delta_samples", "1000", "samples for the correlation bound"),
        ]],
        plan: plan_assumption15,
    },
];

const DECOUPLING: &[Param] = &[
    p("t", "500,1000,2000", "comma list of times, > 0"),
    p("w", "0", "scaled position of the first-class height"),
    p("z", "0", "scaled position of the all-particle height"),
    p("samples", "10000", "joint samples, at least 500"),
    p("origins_per_run", "100", "origins sharing one run"),
    p("origin_spacing", "1500", "sites between origins sharing a run"),
];

// ------------------------------------------------------------ validation

fn pre(r: exlab_core::Result<()>) -> Result<(), ConfigError> {
    r.map_err(|e| match e {
        exlab_core::Error::InvalidParameter { name, reason } => ConfigError::at(name, reason),
        e => ConfigError::new(e.to_string()),
    })
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::at(key, format!("{v} must be positive and finite")))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::at(key, format!("{v} must be nonnegative and finite")))
    }
}

fn at_least(key: &str, v: u64, min: u64) -> Result<u64, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(ConfigError::at(key, format!("need at least {min}, got {v}")))
    }
}

fn times(p: &Params, key: &str, strict: bool) -> Result<Vec<f64>, ConfigError> {
    let ts: Vec<f64> = p.list(key)?;
    if ts.is_empty() {
        return Err(ConfigError::at(key, "need at least one time"));
    }
    for &t in &ts {
        if strict { positive(key, t)? } else { nonnegative(key, t)? };
    }
    Ok(ts)
}

fn range(p: &Params, lo: &str, hi: &str) -> Result<(i64, i64), ConfigError> {
    let (a, b) = (p.get(lo)?, p.get(hi)?);
    if a > b {
        return Err(ConfigError::at(hi, format!("{hi} = {b} is below {lo} = {a}")));
    }
    Ok((a, b))
}

/// `(rho1, rho2, q)`, checked.
fn two_species(p: &Params) -> Result<(f64, f64, f64), ConfigError> {
    let (r1, r2, q) = (p.get("rho1")?, p.get("rho2")?, p.get("q")?);
    pre(check_two_species(r1, r2))?;
    pre(check_asymmetry(q))?;
    Ok((r1, r2, q))
}

fn sampler_options(p: &Params) -> Result<SamplerOptions, ConfigError> {
    Ok(SamplerOptions {
        burn_in: p.auto_u64("burn_in")?,
        double_burn_in: match p.raw("double_burn_in") {
            Ok(_) => p.flag("double_burn_in")?,
            Err(_) => false,
        },
    })
}

fn ensemble(p: &Params) -> Result<EnsembleOptions, ConfigError> {
    Ok(EnsembleOptions {
        obs_halfwidth: match p.raw("obs_halfwidth") {
            Ok(_) => p.auto_u64("obs_halfwidth")?,
            Err(_) => None,
        },
        clocks: [ClockSource::PerBond, ClockSource::Uniformized][p.choice("clocks", &["per_bond", "uniformized"])?],
        sampler: sampler_options(p)?,
        doubled_buffer: p.flag("doubled_buffer")?,
        time_units: [TimeUnits::Physical, TimeUnits::Scaled][p.choice("time_units", &["physical", "scaled"])?],
    })
}

fn entry(a: usize, b: usize) -> String {
    format!("{}{}", a + 1, b + 1)
}

const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

// ------------------------------------------------------------ experiments

fn plan_normal_modes(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2): (f64, f64) = (p.get("rho1")?, p.get("rho2")?);
    pre(check_two_species(r1, r2))?;
    Ok(Box::new(move |_| {
        let d = normal_mode_data(r1, r2)?;
        let mut t = Table::new(&schema::NORMAL_MODES);
        for (name, m) in [("C", d.c), ("A", d.a), ("R", d.r), ("G1", d.g1), ("G2", d.g2)] {
            for (a, b) in PAIRS {
                t.push(row![r1, r2, name, a + 1, b + 1, m[a][b]]);
            }
        }
        for (name, v) in [("v", d.v), ("lambda", d.lambda), ("j", d.j), ("chi", d.chi)] {
            for (k, x) in v.iter().enumerate() {
                t.push(row![r1, r2, name, k + 1, 0, x]);
            }
        }
        for (k, x) in identity_residuals(&d).iter().enumerate() {
            t.push(row![r1, r2, "residual", k + 1, 0, x]);
        }
        Ok(vec![Output::Table(t)])
    }))
}

fn plan_currents(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let t = positive("t", p.get("t")?)?;
    let obs = at_least("obs_halfwidth", p.get("obs_halfwidth")?, 1)?;
    let replicas = at_least("replicas", p.get("replicas")?, 2)?;
    let opts = ensemble(p)?;
    Ok(Box::new(move |seed| {
        let e = exlab_core::observables::estimate_currents(r1, r2, q, t, obs, replicas, seed, opts)?;
        let mut tab = Table::new(&schema::CURRENTS);
        let z = e.z();
        for k in 0..2 {
            tab.push(row![k + 1, e.t, e.j[k], e.stderr[k], e.expected[k], z[k], e.replicas, e.bonds]);
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn two_point_config(p: &Params) -> Result<TwoPointConfig, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let j_range = range(p, "j_lo", "j_hi")?;
    let replicas = at_least("replicas", p.get("replicas")?, 2)?;
    let mut cfg = TwoPointConfig::new(r1, r2, q, 0.0, j_range, replicas, 0);
    cfg.options = ensemble(p)?;
    let reach = j_range.0.unsigned_abs().max(j_range.1.unsigned_abs());
    if let Some(obs) = cfg.options.obs_halfwidth.filter(|&o| o < 2 * reach) {
        return Err(ConfigError::at("obs_halfwidth", format!("{obs} is below twice the largest |j| = {reach}")));
    }
    Ok(cfg)
}

fn plan_two_point(p: &Params) -> Result<Job, ConfigError> {
    let cfg = two_point_config(p)?;
    let ts = times(p, "t", false)?;
    Ok(Box::new(move |seed| {
        let mut tab = Table::new(&schema::TWO_POINT);
        for (k, &t) in ts.iter().enumerate() {
            let est = TwoPointConfig {
                t,
                seed: derive_seed(seed, k as u64, 0),
                ..cfg
            }
            .estimate()?;
            for (a, b) in PAIRS {
                for j in est.j_lo..=est.j_hi() {
                    let (m, se) = est.at(a + 1, b + 1, j).expect("offset in range");
                    tab.push(row![j, est.t, entry(a, b), m, se, est.replicas]);
                }
            }
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn plan_susceptibility(p: &Params) -> Result<Job, ConfigError> {
    let mut cfg = two_point_config(p)?;
    cfg.t = nonnegative("t", p.get("t")?)?;
    Ok(Box::new(move |seed| {
        let est = TwoPointConfig { seed, ..cfg }.estimate()?;
        let s = susceptibility(&est, cfg.rho2)?;
        let mut tab = Table::new(&schema::SUSCEPTIBILITY);
        let blocks = [
            ("species", s.species, s.species_stderr, s.expected_species),
            ("marginal", s.marginal, s.marginal_stderr, s.expected_marginal),
        ];
        for (name, v, se, ex) in blocks {
            for (a, b) in PAIRS {
                let z = (v[a][b] - ex[a][b]) / se[a][b];
                tab.push(row![name, entry(a, b), v[a][b], se[a][b], ex[a][b], z, est.t, est.replicas]);
            }
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn plan_laplacian(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let mut cfg = LaplacianConfig::new(
        positive("t", p.get("t")?)?,
        positive("t_tilde", p.get("t_tilde")?)?,
        p.get("x")?,
        p.get("x_tilde")?,
        range(p, "i_lo", "i_hi")?,
        at_least("replicas", p.get("replicas")?, LAPLACIAN_MIN_REPLICAS)?,
        0,
    );
    (cfg.rho1, cfg.rho2, cfg.q) = (r1, r2, q);
    cfg.options = ensemble(p)?;
    Ok(Box::new(move |seed| {
        let rows = LaplacianConfig { seed, ..cfg }.run()?;
        let mut tab = Table::new(&schema::LAPLACIAN);
        for r in rows {
            tab.push(row![
                r.i, cfg.t, cfg.t_tilde, cfg.x, cfg.x_tilde, r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr, r.residual,
                r.stderr, r.z(), cfg.replicas
            ]);
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn redraw(p: &Params) -> Result<Redraw, ConfigError> {
    let s = p.raw("redraw")?;
    if s == "none" {
        return Ok(Redraw::None);
    }
    let bad = || ConfigError::at("redraw", format!("`{s}` is not none, first:K or all:K"));
    let (kind, k) = s.split_once(':').ok_or_else(bad)?;
    let k: u64 = k.trim().parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(ConfigError::at("redraw", "need at least one redraw"));
    }
    match kind.trim() {
        "first" => Ok(Redraw::FirstClass(k)),
        "all" => Ok(Redraw::AllParticles(k)),
        _ => Err(bad()),
    }
}

fn plan_integrated(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let mut ts = times(p, "t", true)?;
    ts.sort_by(f64::total_cmp);
    let vs: Vec<f64> = p.list("v")?;
    if vs.is_empty() || vs.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::at("v", "need finite speeds"));
    }
    let replicas = at_least("replicas", p.get("replicas")?, 2)?;
    let mut cfg = IntegratedConfig::new(r1, r2, q, vs[0], ts[0], replicas, 0);
    cfg.phi = TestFunction::Bump {
        half_width: positive("bump_half_width", p.get("bump_half_width")?)?,
    };
    cfg.options = ensemble(p)?;
    cfg.redraw = redraw(p)?;
    Ok(Box::new(move |seed| {
        let est = IntegratedConfig { seed, ..cfg }.run_many(&ts, &vs)?;
        let mut tab = Table::new(&schema::INTEGRATED);
        for e in est {
            for (a, b) in PAIRS {
                let v = e.entry(a + 1, b + 1);
                tab.push(row![e.t, e.v, entry(a, b), v.value, v.stderr, e.replicas, e.origins_averaged]);
            }
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn decoupling(p: &Params, kind: InitialKind) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let samples = at_least("samples", p.get("samples")?, DECOUPLING_MIN_SAMPLES)?;
    let mut cfg = DecouplingConfig::new(kind, r1, r2, times(p, "t", true)?, samples, 0);
    cfg.q = q;
    cfg.w = p.get("w")?;
    cfg.z = p.get("z")?;
    cfg.origins_per_run = at_least("origins_per_run", p.get("origins_per_run")?, 1)?;
    cfg.origin_spacing = p.get("origin_spacing")?;
    if cfg.origins_per_run > 1 && cfg.origin_spacing == 0 {
        return Err(ConfigError::at("origin_spacing", "must be positive when several origins share a run"));
    }
    Ok(Box::new(move |seed| {
        let name = cfg.kind.name();
        let recs = DecouplingConfig { seed, ..cfg }.run()?;
        let mut tab = Table::new(&schema::DECOUPLING);
        for r in recs {
            tab.push(row![
                name, r.t, r.samples, r.runs, r.pearson, r.pearson_stderr, r.sup_cdf_gap, r.mean[0], r.mean[1],
                r.variance[0], r.variance[1]
            ]);
        }
        Ok(vec![Output::Table(tab)])
    }))
}

fn plan_decoupling_stationary(p: &Params) -> Result<Job, ConfigError> {
    decoupling(p, InitialKind::Stationary)
}

fn plan_decoupling_flat(p: &Params) -> Result<Job, ConfigError> {
    decoupling(p, InitialKind::Flat)
}

fn plan_decoupling_general(p: &Params) -> Result<Job, ConfigError> {
    let alpha: f64 = p.get("alpha")?;
    pre(exlab_core::sampler::MarkovArrivalSpec::new(p.get("rho1")?, alpha).map(|_| ()))?;
    decoupling(p, InitialKind::MarkovQueue { alpha })
}

fn tie_rule(p: &Params, allow_cycle: bool) -> Result<Option<usize>, ConfigError> {
    let choices: &[&str] = if allow_cycle {
        &["leftmost", "rightmost", "random", "cycle"]
    } else {
        &["leftmost", "rightmost", "random"]
    };
    let k = p.choice("tie_rule", choices)?;
    Ok((k < 3).then_some(k))
}

fn rule_of(k: usize, seed: u64) -> TieRule {
    match k {
        0 => TieRule::Leftmost,
        1 => TieRule::Rightmost,
        _ => TieRule::Random { seed },
    }
}

const RULE_NAMES: [&str; 3] = ["leftmost", "rightmost", "random"];

fn plan_endpoint(p: &Params) -> Result<Job, ConfigError> {
    let rho: f64 = p.get("rho")?;
    pre(check_density("rho", rho))?;
    let t = positive("t", p.get("t")?)?;
    let replicas = at_least("replicas", p.get("replicas")?, 1)?;
    let mut cfg = EndpointConfig::stationary(rho, t, replicas, 0);
    if p.choice("initial", &["stationary", "half_periodic"])? == 1 {
        let lambda: f64 = p.get("lambda")?;
        if !(0.0..=rho).contains(&lambda) {
            return Err(ConfigError::at("lambda", format!("{lambda} must lie in [0, rho]")));
        }
        cfg.kind = EndpointKind::HalfPeriodic { rho, lambda };
    }
    if let Some(a) = match p.raw("alpha")? {
        "auto" => None,
        _ => Some(p.get::<f64>("alpha")?),
    } {
        cfg.alpha = a;
    }
    let (lo, hi) = match cfg.kind {
        EndpointKind::Stationary { .. } => (-1.0, 1.0),
        EndpointKind::HalfPeriodic { rho, lambda } => (1.0 - 2.0 * rho, 1.0 - 2.0 * lambda),
    };
    if !(cfg.alpha >= lo - 1e-12 && cfg.alpha <= hi + 1e-12) || cfg.alpha.abs() >= 1.0 {
        return Err(ConfigError::at("alpha", format!("{} must lie in [{lo}, {hi}] and in (-1, 1)", cfg.alpha)));
    }
    cfg.m_grid = p.list("m_grid")?;
    if cfg.m_grid.is_empty() {
        return Err(ConfigError::at("m_grid", "need at least one threshold"));
    }
    for &m in &cfg.m_grid {
        nonnegative("m_grid", m)?;
    }
    let rule = tie_rule(p, false)?.expect("no cycle option");
    cfg.min_fit_count = p.get("min_fit_count")?;
    Ok(Box::new(move |seed| {
        let c = EndpointConfig {
            seed,
            tie_rule: rule_of(rule, derive_seed(seed, 0, 1)),
            ..cfg.clone()
        }
        .run()?;
        let mut tail = Table::new(&schema::ENDPOINT_TAIL);
        for k in 0..c.m_grid.len() {
            tail.push(row![c.m_grid[k], c.exceed_prob[k], c.stderr[k], c.replicas, c.t]);
        }
        let mut fit = Table::new(&schema::ENDPOINT_FIT);
        let f = c.exponent_fit;
        fit.push(vec![
            c.t.to_string(),
            opt(f.map(|f| -f.slope)),
            opt(f.map(|f| f.intercept)),
            opt(f.map(|f| f.r2)),
            c.buffer_hits.to_string(),
            c.replicas.to_string(),
        ]);
        Ok(vec![Output::Table(tail), Output::Table(fit)])
    }))
}

fn bernoulli_first_class(rho: f64, w: &Window, seed: u64) -> exlab_core::Result<Configuration> {
    let occ = sample_bernoulli(rho, w, seed)?;
    Ok(Configuration::from_fn(*w, |i| {
        if occ[(i - w.lo) as usize] == 1 {
            SpeciesLabel::First
        } else {
            SpeciesLabel::Hole
        }
    }))
}

fn plan_geodesic(p: &Params) -> Result<Job, ConfigError> {
    let rho: f64 = p.get("rho")?;
    pre(check_density("rho", rho))?;
    let obs: u64 = at_least("obs_halfwidth", p.get("obs_halfwidth")?, 1)?;
    let t = positive("t", p.get("t")?)?;
    let paths = at_least("paths", p.get("paths")?, 1)?;
    let rule = tie_rule(p, true)?;
    let spread: u64 = p.get("x_spread")?;
    if spread >= obs {
        return Err(ConfigError::at("x_spread", format!("{spread} must be below obs_halfwidth = {obs}")));
    }
    let dump: u64 = p.get("dump_paths")?;
    if dump > paths {
        return Err(ConfigError::at("dump_paths", format!("{dump} exceeds paths = {paths}")));
    }
    Ok(Box::new(move |seed| {
        let w = make_window(obs, t)?;
        let traced = try_map_replicas(seed, paths, |i, s| {
            let c = bernoulli_first_class(rho, &w, s)?;
            let log = generate_event_log(&w, t, 0.0, derive_seed(s, 1, 0))?;
            let traj = evolve(&c, &log, t)?;
            let k = rule.unwrap_or((i % 3) as usize);
            let x = (i % (2 * spread + 1)) as i64 - spread as i64;
            let path = trace_path(&traj, &log, Marginal::All, x, t, rule_of(k, derive_seed(s, 2, 0)))?;
            let checks = geodesic_check(&path, &traj, &log, &default_tau_grid(0.0, t))?;
            let admissible = check_admissible(&path, &traj, &log)?.is_none();
            Ok((k, x, admissible, checks, (i < dump).then(|| path.dump())))
        })?;
        let mut tab = Table::new(&schema::GEODESIC);
        let mut outs = Vec::new();
        for (i, (k, x, admissible, checks, dumped)) in traced.into_iter().enumerate() {
            for c in checks {
                let (name, lhs, rhs) = match c.outcome {
                    GeodesicOutcome::Holds => ("holds", None, None),
                    GeodesicOutcome::Fails { lhs, rhs } => ("fails", Some(lhs), Some(rhs)),
                    GeodesicOutcome::Inconclusive => ("inconclusive", None, None),
                };
                tab.push(vec![
                    i.to_string(),
                    x.to_string(),
                    RULE_NAMES[k].to_string(),
                    admissible.to_string(),
                    c.tau.to_string(),
                    c.y.to_string(),
                    name.to_string(),
                    opt(lhs),
                    opt(rhs),
                ]);
            }
            if let Some(body) = dumped {
                let rows = body.lines().count() as u64 - 1;
                outs.push(Output::Text { file: format!("paths/path_{i}.csv"), body, rows });
            }
        }
        outs.insert(0, Output::Table(tab));
        Ok(outs)
    }))
}

fn plan_queue_tails(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let sites = at_least("sites", p.get("sites")?, 2)?;
    let opts = sampler_options(p)?;
    let min_count = p.get("min_count")?;
    let x_max = at_least("drift_x_max", p.get("drift_x_max")?, 1)?;
    Ok(Box::new(move |seed| {
        let w = Window::new(0, sites as i64 - 1, 0, sites as i64 - 1, 0)?;
        let (_, qs) = sample_queue(r1, r2, q, &w, seed, opts)?;
        let ret = return_times(&qs.queue);
        let theta = if q == 0.0 { Some(tail_slope_theta(r1, r2)?) } else { None };
        let mut tails = Table::new(&schema::QUEUE_TAILS);
        let mut fits = Table::new(&schema::QUEUE_FIT);
        for (name, xs) in [("queue", &qs.queue), ("return_time", &ret)] {
            let max = xs.iter().copied().max().unwrap_or(0);
            for (n, pr) in survival(xs, max).into_iter().enumerate() {
                tails.push(row![name, n, pr, xs.len()]);
            }
            let f = log_survival_fit(xs, min_count);
            fits.push(vec![
                name.to_string(),
                opt(f.map(|f| f.slope)),
                opt(f.map(|f| f.intercept)),
                opt(f.map(|f| f.r2)),
                opt(theta.filter(|_| name == "queue")),
            ]);
        }
        let d = drift_check(r1, r2, q, x_max)?;
        let mut drift = Table::new(&schema::QUEUE_DRIFT);
        drift.push(row![d.c, d.x0, d.beta, d.b, d.worst, d.holds]);
        Ok(vec![Output::Table(tails), Output::Table(fits), Output::Table(drift)])
    }))
}

fn plan_sampler_dump(p: &Params) -> Result<Job, ConfigError> {
    let (r1, r2, q) = two_species(p)?;
    let sites = at_least("sites", p.get("sites")?, 1)?;
    let samples = at_least("samples", p.get("samples")?, 1)?;
    let which = p.choice("sampler", &["stationary", "mirrored", "flat"])?;
    let opts = sampler_options(p)?;
    Ok(Box::new(move |seed| {
        let w = Window::new(0, sites as i64 - 1, 0, sites as i64 - 1, 0)?;
        let configs = try_map_replicas(seed, samples, |_, s| match which {
            0 => sample_two_species_with(r1, r2, q, &w, s, opts),
            1 => sample_mirrored(r1, r2, q, &w, s, 0, opts),
            _ => flat_two_species(r1, r2, &w),
        })?;
        let mut body = String::new();
        let mut counts = Vec::new();
        for c in &configs {
            let line: String = c.labels().iter().map(|l| l.to_char()).collect();
            counts.push([
                line.matches('1').count(),
                line.matches('2').count(),
                line.matches('.').count(),
            ]);
            body.push_str(&line);
            body.push('\n');
        }
        let sampler_name = ["stationary", "mirrored", "flat"][which];
        let sidecar = serde_json::json!({
            "rho1": r1,
            "rho2": r2,
            "q": q,
            "sampler": sampler_name,
            "sites": {"lo": w.lo, "hi": w.hi},
            "burn_in": opts.burn_in,
            "alphabet": {"1": "first class", "2": "second class", ".": "hole"},
            "samples": (0..samples).map(|i| serde_json::json!({
                "seed": replica_seed(seed, i),
                "first": counts[i as usize][0],
                "second": counts[i as usize][1],
                "holes": counts[i as usize][2],
            })).collect::<Vec<_>>(),
        });
        Ok(vec![
            Output::Text { file: "sampler_dump.txt".into(), body, rows: samples },
            Output::Text {
                file: "sampler_dump.json".into(),
                body: serde_json::to_string_pretty(&sidecar).expect("plain JSON") + "\n",
                rows: 1,
            },
        ])
    }))
}

fn plan_assumption15(p: &Params) -> Result<Job, ConfigError> {
    let cfg = Assumption15Config {
        rho: p.get("rho")?,
        alpha: p.get("alpha")?,
        service_rate: p.get("service_rate")?,
        interval: at_least("interval", p.get("interval")?, 1)?,
        variance_samples: at_least("variance_samples", p.get("variance_samples")?, 2)?,
        t: positive("t", p.get("t")?)?,
        sigma: positive("sigma", p.get("sigma")?)?,
        y_range: p.get("y_range")?,
        delta_samples: at_least("delta_samples", p.get("delta_samples")?, 1)?,
        seed: 0,
    };
    pre(check_density("rho", cfg.rho))?;
    pre(exlab_core::sampler::MarkovArrivalSpec::new(cfg.rho, cfg.alpha).map(|_| ()))?;
    if !(cfg.service_rate > cfg.rho && cfg.service_rate < 1.0) {
        return Err(ConfigError::at("service_rate", format!("{} must lie in (rho, 1)", cfg.service_rate)));
    }
    Ok(Box::new(move |seed| {
        let r = Assumption15Config { seed, ..cfg }.run()?;
        let mut m = Table::new(&schema::ASSUMPTION15);
        let max_sup = r.sups.iter().copied().max().unwrap_or(0);
        for (k, v) in [
            ("variance_ratio", r.variance_ratio),
            ("variance_ratio_stderr", r.variance_ratio_stderr),
            ("sigma_a_squared", r.sigma_a_squared),
            ("threshold", r.threshold),
            ("fraction_below", r.fraction_below),
            ("forms_agree", f64::from(u8::from(r.forms_agree))),
            ("max_sup", max_sup as f64),
        ] {
            m.push(row![k, v]);
        }
        let mut sups = Table::new(&schema::ASSUMPTION15_SUPS);
        for (i, s) in r.sups.iter().enumerate() {
            sups.push(row![i, s]);
        }
        Ok(vec![Output::Table(m), Output::Table(sups)])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_the_published_set() {
        let names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            [
                "normal_modes",
                "currents",
                "two_point",
                "susceptibility",
                "laplacian_identity",
                "integrated_correlation",
                "decoupling_stationary",
                "decoupling_flat",
                "decoupling_general",
                "endpoint_tail",
                "geodesic_check",
                "queue_tails",
                "sampler_dump",
                "assumption15_validate",
            ]
        );
    }

    #[test]
    fn defaults_plan_cleanly() {
        for e in REGISTRY {
            let pairs: Vec<(&str, &str)> = e.params().map(|p| (p.key, p.default)).collect();
            let mut keys: Vec<_> = pairs.iter().map(|p| p.0).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), pairs.len(), "duplicate key in {}", e.name);
            assert!((e.plan)(&Params::from_pairs(&pairs)).is_ok(), "{}", e.name);
        }
    }

    #[test]
    fn preconditions_name_the_key() {
        let bad = |name: &str, key: &str, value: &str| {
            let e = find(name).unwrap();
            let pairs: Vec<(&str, &str)> =
                e.params().map(|p| (p.key, if p.key == key { value } else { p.default })).collect();
            (e.plan)(&Params::from_pairs(&pairs)).err().and_then(|e| e.key)
        };
        assert_eq!(bad("two_point", "rho2", "0.9").as_deref(), Some("rho2"));
        assert_eq!(bad("currents", "q", "1").as_deref(), Some("q"));
        assert_eq!(bad("laplacian_identity", "replicas", "10").as_deref(), Some("replicas"));
        assert_eq!(bad("decoupling_flat", "samples", "100").as_deref(), Some("samples"));
        assert_eq!(bad("decoupling_general", "alpha", "1").as_deref(), Some("alpha"));
        assert_eq!(bad("endpoint_tail", "alpha", "1.5").as_deref(), Some("alpha"));
        assert_eq!(bad("integrated_correlation", "redraw", "some:3").as_deref(), Some("redraw"));
        assert_eq!(bad("two_point", "j_hi", "-60").as_deref(), Some("j_hi"));
        assert_eq!(bad("two_point", "clocks", "fast").as_deref(), Some("clocks"));
        assert_eq!(bad("geodesic_check", "x_spread", "40").as_deref(), Some("x_spread"));
        assert_eq!(bad("susceptibility", "obs_halfwidth", "100").as_deref(), Some("obs_halfwidth"));
    }

    #[test]
    fn normal_modes_is_deterministic_and_seed_free() {
        let e = find("normal_modes").unwrap();
        let pr = Params::from_pairs(&[("rho1", "0.25"), ("rho2", "0.25")]);
        let a = (e.plan)(&pr).unwrap()(1).unwrap();
        let b = (e.plan)(&pr).unwrap()(2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].rows(), 5 * 4 + 4 * 2 + 3);
    }
}
