//! Python bindings: configurations, dynamics, the main estimators and the
//! experiment runner.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use exlab_core::backwards::{trace_path, EndpointConfig, TieRule};
use exlab_core::harris::{evolve as core_evolve, generate_event_log, ClockSource};
use exlab_core::lattice::{make_window, Configuration as CoreConfig, Marginal, SpeciesLabel, Window};
use exlab_core::observables::{
    estimate_currents as core_currents, normal_mode_data, DecouplingConfig, EnsembleOptions, InitialKind,
    LaplacianConfig, TwoPointConfig,
};
use exlab_core::sampler::{flat_two_species, sample_bernoulli, sample_two_species};

fn err(e: exlab_core::Error) -> PyErr {
    match e {
        exlab_core::Error::InvalidParameter { name, reason } => PyValueError::new_err(format!("{name}: {reason}")),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn marginal(name: &str) -> PyResult<Marginal> {
    match name {
        "first" => Ok(Marginal::First),
        "all" => Ok(Marginal::All),
        _ => Err(PyValueError::new_err(format!("marginal must be 'first' or 'all', got {name:?}"))),
    }
}

fn options(clocks: &str) -> PyResult<EnsembleOptions> {
    let clocks = match clocks {
        "per_bond" => ClockSource::PerBond,
        "uniformized" => ClockSource::Uniformized,
        _ => return Err(PyValueError::new_err(format!("clocks must be 'per_bond' or 'uniformized', got {clocks:?}"))),
    };
    Ok(EnsembleOptions {
        clocks,
        ..Default::default()
    })
}

fn plain_window(lo: i64, hi: i64) -> PyResult<Window> {
    Window::new(lo, hi, lo, hi, 0).map_err(err)
}

/// Two-species configuration on a finite window; `'1'`, `'2'`, `'.'` per site.
#[pyclass(name = "Configuration", module = "exlab", skip_from_py_object)]
#[derive(Clone)]
struct Configuration {
    inner: CoreConfig,
}

#[pymethods]
impl Configuration {
    /// Parses one character per site, the first at site `lo`.
    #[new]
    #[pyo3(signature = (text, lo = 0))]
    fn new(text: &str, lo: i64) -> PyResult<Self> {
        let n = text.chars().count() as i64;
        if n == 0 {
            return Err(PyValueError::new_err("empty configuration"));
        }
        let w = plain_window(lo, lo + n - 1)?;
        Ok(Self {
            inner: CoreConfig::parse(w, text).map_err(err)?,
        })
    }

    /// Stationary two-species sample on `[lo, hi]`.
    #[staticmethod]
    #[pyo3(signature = (rho1, rho2, lo, hi, seed, q = 0.0))]
    fn stationary(rho1: f64, rho2: f64, lo: i64, hi: i64, seed: u64, q: f64) -> PyResult<Self> {
        let w = plain_window(lo, hi)?;
        Ok(Self {
            inner: sample_two_species(rho1, rho2, q, &w, seed).map_err(err)?,
        })
    }

    /// Deterministic flat profile with the given densities.
    #[staticmethod]
    fn flat(rho1: f64, rho2: f64, lo: i64, hi: i64) -> PyResult<Self> {
        let w = plain_window(lo, hi)?;
        Ok(Self {
            inner: flat_two_species(rho1, rho2, &w).map_err(err)?,
        })
    }

    /// First-class particles on `[lo, y]`, holes elsewhere.
    #[staticmethod]
    fn step(lo: i64, hi: i64, y: i64) -> PyResult<Self> {
        Ok(Self {
            inner: CoreConfig::step(plain_window(lo, hi)?, y),
        })
    }

    #[getter]
    fn lo(&self) -> i64 {
        self.inner.window().lo
    }

    #[getter]
    fn hi(&self) -> i64 {
        self.inner.window().hi
    }

    fn __len__(&self) -> usize {
        self.inner.window().len()
    }

    fn __str__(&self) -> String {
        self.inner.labels().iter().map(|l| l.to_char()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Configuration({:?}, lo={})", self.__str__(), self.lo())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    /// Label at `site` as `'1'`, `'2'` or `'.'`.
    fn label(&self, site: i64) -> PyResult<char> {
        self.inner.window().check_site(site).map_err(err)?;
        Ok(self.inner.get(site).to_char())
    }

    /// Number of sites carrying `label`.
    fn count(&self, label: char) -> PyResult<usize> {
        let l = SpeciesLabel::from_char(label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown label {label:?}")))?;
        Ok(self.inner.count(l))
    }

    /// 0/1 occupation of a marginal (`'first'` or `'all'`) on the window.
    #[pyo3(signature = (marginal_name = "all"))]
    fn occupation(&self, marginal_name: &str) -> PyResult<Vec<u32>> {
        Ok(self.inner.project(marginal(marginal_name)?).values().iter().map(|&v| u32::from(v)).collect())
    }
}

/// Evolves `config` for time `t` with fresh clocks keyed by `seed`. Returns
/// the final configuration and height profiles (origin 0) of both marginals
/// over the whole window.
#[pyfunction]
#[pyo3(signature = (config, t, seed, q = 0.0))]
fn evolve<'py>(py: Python<'py>, config: &Configuration, t: f64, seed: u64, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let w = *config.inner.window();
    if !(w.lo <= 0 && 0 <= w.hi) {
        return Err(PyValueError::new_err("the window must contain site 0, the height origin"));
    }
    let log = generate_event_log(&w, t, q, seed).map_err(err)?;
    let traj = core_evolve(&config.inner, &log, t).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("final", Configuration { inner: traj.final_config().clone() })?;
    for (name, m) in [("height_first", Marginal::First), ("height_all", Marginal::All)] {
        d.set_item(name, traj.state().height_profile(m, 0, w.lo, w.hi))?;
    }
    d.set_item("events", log.len())?;
    Ok(d)
}

#[pyfunction]
fn derive_seed(master: u64, index: u64, tag: u64) -> u64 {
    exlab_core::rng::derive_seed(master, index, tag)
}

/// Closed-form susceptibility, flux Jacobian, speeds and couplings.
#[pyfunction]
fn normal_modes<'py>(py: Python<'py>, rho1: f64, rho2: f64) -> PyResult<Bound<'py, PyDict>> {
    let n = normal_mode_data(rho1, rho2).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("C", n.c)?;
    d.set_item("A", n.a)?;
    d.set_item("R", n.r)?;
    d.set_item("v", n.v)?;
    d.set_item("lambda", n.lambda)?;
    d.set_item("G1", n.g1)?;
    d.set_item("G2", n.g2)?;
    d.set_item("j", n.j)?;
    d.set_item("chi", n.chi)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (rho1, rho2, t, obs_halfwidth, replicas, seed, q = 0.0, clocks = "per_bond"))]
#[allow(clippy::too_many_arguments)]
fn estimate_currents<'py>(
    py: Python<'py>,
    rho1: f64,
    rho2: f64,
    t: f64,
    obs_halfwidth: u64,
    replicas: u64,
    seed: u64,
    q: f64,
    clocks: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = options(clocks)?;
    let e = py
        .detach(|| core_currents(rho1, rho2, q, t, obs_halfwidth, replicas, seed, opts))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("j", e.j)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("expected", e.expected)?;
    d.set_item("z", e.z())?;
    Ok(d)
}

/// `S(j, t)` for `j` in `[j_lo, j_hi]`: `mean[a][b]` and `stderr[a][b]` are
/// lists over `j`, indexed by marginal (0 = first class, 1 = all particles).
#[pyfunction]
#[pyo3(signature = (rho1, rho2, t, j_lo, j_hi, replicas, seed, q = 0.0, clocks = "per_bond"))]
#[allow(clippy::too_many_arguments)]
fn two_point<'py>(
    py: Python<'py>,
    rho1: f64,
    rho2: f64,
    t: f64,
    j_lo: i64,
    j_hi: i64,
    replicas: u64,
    seed: u64,
    q: f64,
    clocks: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = TwoPointConfig::new(rho1, rho2, q, t, (j_lo, j_hi), replicas, seed);
    cfg.options = options(clocks)?;
    let e = py.detach(|| cfg.estimate()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("j", (e.j_lo..=e.j_hi()).collect::<Vec<_>>())?;
    d.set_item("mean", e.mean.clone())?;
    d.set_item("stderr", e.stderr.clone())?;
    d.set_item("species_sum", e.species_sum)?;
    d.set_item("species_sum_stderr", e.species_sum_stderr)?;
    d.set_item("replicas", e.replicas)?;
    Ok(d)
}

/// Rows of the Laplacian identity as dicts with `i`, `lhs`, `rhs`,
/// `residual`, `stderr`.
#[pyfunction]
#[pyo3(signature = (t, t_tilde, x, x_tilde, i_lo, i_hi, replicas, seed, rho1 = 0.25, rho2 = 0.25, q = 0.0))]
#[allow(clippy::too_many_arguments)]
fn laplacian_identity<'py>(
    py: Python<'py>,
    t: f64,
    t_tilde: f64,
    x: i64,
    x_tilde: i64,
    i_lo: i64,
    i_hi: i64,
    replicas: u64,
    seed: u64,
    rho1: f64,
    rho2: f64,
    q: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = LaplacianConfig::new(t, t_tilde, x, x_tilde, (i_lo, i_hi), replicas, seed);
    (cfg.rho1, cfg.rho2, cfg.q) = (rho1, rho2, q);
    let rows = py.detach(|| cfg.run()).map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("i", r.i)?;
            d.set_item("lhs", r.lhs)?;
            d.set_item("rhs", r.rhs)?;
            d.set_item("residual", r.residual)?;
            d.set_item("stderr", r.stderr)?;
            Ok(d)
        })
        .collect()
}

/// Joint statistics of the rescaled heights; `kind` is `stationary`,
/// `flat` or `general` (Markov arrivals with parameter `alpha`).
#[pyfunction]
#[pyo3(signature = (kind, rho1, rho2, times, samples, seed, alpha = 0.5, origins_per_run = 1, origin_spacing = 0))]
#[allow(clippy::too_many_arguments)]
fn decoupling<'py>(
    py: Python<'py>,
    kind: &str,
    rho1: f64,
    rho2: f64,
    times: Vec<f64>,
    samples: u64,
    seed: u64,
    alpha: f64,
    origins_per_run: u64,
    origin_spacing: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let kind = match kind {
        "stationary" => InitialKind::Stationary,
        "flat" => InitialKind::Flat,
        "general" => InitialKind::MarkovQueue { alpha },
        _ => return Err(PyValueError::new_err(format!("unknown initial kind {kind:?}"))),
    };
    let mut cfg = DecouplingConfig::new(kind, rho1, rho2, times, samples, seed);
    cfg.origins_per_run = origins_per_run;
    cfg.origin_spacing = origin_spacing;
    let recs = py.detach(|| cfg.run()).map_err(err)?;
    recs.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("t", r.t)?;
            d.set_item("samples", r.samples)?;
            d.set_item("pearson", r.pearson)?;
            d.set_item("pearson_stderr", r.pearson_stderr)?;
            d.set_item("sup_cdf_gap", r.sup_cdf_gap)?;
            Ok(d)
        })
        .collect()
}

/// Exceedance curve of backwards-path deviations for Bernoulli(`rho`) data.
#[pyfunction]
#[pyo3(signature = (rho, t, replicas, seed, m_grid = None))]
fn endpoint_tail<'py>(
    py: Python<'py>,
    rho: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    m_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = EndpointConfig::stationary(rho, t, replicas, seed);
    if let Some(m) = m_grid {
        cfg.m_grid = m;
    }
    let c = py.detach(|| cfg.run()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("M", c.m_grid.clone())?;
    d.set_item("exceed_prob", c.exceed_prob.clone())?;
    d.set_item("stderr", c.stderr.clone())?;
    d.set_item("exponent", c.exponent())?;
    d.set_item("buffer_hits", c.buffer_hits)?;
    Ok(d)
}

/// Backwards path from `(x, t)` through TASEP started from Bernoulli(`rho`)
/// data, as `(tau, x)` breakpoints ending at time 0.
#[pyfunction]
#[pyo3(signature = (rho, obs_halfwidth, t, x, seed, tie_rule = "rightmost"))]
fn backwards_path(rho: f64, obs_halfwidth: u64, t: f64, x: i64, seed: u64, tie_rule: &str) -> PyResult<Vec<(f64, i64)>> {
    let rule = match tie_rule {
        "leftmost" => TieRule::Leftmost,
        "rightmost" => TieRule::Rightmost,
        "random" => TieRule::Random { seed },
        _ => return Err(PyValueError::new_err(format!("unknown tie rule {tie_rule:?}"))),
    };
    let w = make_window(obs_halfwidth, t).map_err(err)?;
    let occ = sample_bernoulli(rho, &w, seed).map_err(err)?;
    let c = CoreConfig::from_fn(w, |i| {
        if occ[(i - w.lo) as usize] == 1 {
            SpeciesLabel::First
        } else {
            SpeciesLabel::Hole
        }
    });
    let log = generate_event_log(&w, t, 0.0, exlab_core::rng::derive_seed(seed, 1, 0)).map_err(err)?;
    let traj = core_evolve(&c, &log, t).map_err(err)?;
    let p = trace_path(&traj, &log, Marginal::All, x, t, rule).map_err(err)?;
    let mut out = p.segments();
    out.push((p.t_end, p.endpoint()));
    Ok(out)
}

/// Names of the registered experiments.
#[pyfunction]
fn experiments() -> Vec<&'static str> {
    exlab_cli::REGISTRY.iter().map(|e| e.name).collect()
}

/// Runs an experiment from `key = value` text into `out_dir` and returns the
/// manifest as a JSON string. Config problems raise `ValueError`.
#[pyfunction]
#[pyo3(signature = (config, out_dir, seed = None, threads = None))]
fn run_experiment(py: Python<'_>, config: &str, out_dir: &str, seed: Option<u64>, threads: Option<usize>) -> PyResult<String> {
    let raw = exlab_cli::RawConfig::parse(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let over = exlab_cli::Overrides {
        seed,
        threads,
        out_dir: Some(out_dir.into()),
    };
    let m = py.detach(|| exlab_cli::run(&raw, &over)).map_err(|e| match e {
        exlab_cli::RunError::Config(c) => PyValueError::new_err(c.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    })?;
    serde_json::to_string(&m).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn exlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Configuration>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(normal_modes, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_currents, m)?)?;
    m.add_function(wrap_pyfunction!(two_point, m)?)?;
    m.add_function(wrap_pyfunction!(laplacian_identity, m)?)?;
    m.add_function(wrap_pyfunction!(decoupling, m)?)?;
    m.add_function(wrap_pyfunction!(endpoint_tail, m)?)?;
    m.add_function(wrap_pyfunction!(backwards_path, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_names() {
        assert_eq!(options("uniformized").unwrap().clocks, ClockSource::Uniformized);
        assert!(options("fast").is_err());
        assert_eq!(marginal("first").unwrap(), Marginal::First);
        assert!(marginal("second").is_err());
    }

    #[test]
    fn configuration_round_trip() {
        let c = Configuration::new("1.2.", -1).unwrap();
        assert_eq!((c.lo(), c.hi(), c.__len__()), (-1, 2, 4));
        assert_eq!(c.__str__(), "1.2.");
        assert_eq!(c.occupation("all").unwrap(), vec![1, 0, 1, 0]);
        assert!(Configuration::new("", 0).is_err());
    }
}
