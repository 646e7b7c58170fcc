//! Full-scale acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. `EXLAB_ACCEPTANCE_ONLY=3,7` restricts the run.

use std::process::ExitCode;
use std::time::Instant;

use exlab_core::backwards::{
    check_admissible, default_tau_grid, geodesic_check, ordering_check, trace_path, BackwardsPath, EndpointConfig,
    GeodesicOutcome, OrderingMode, OrderingOutcome, StepKind, TieRule,
};
use exlab_core::harris::{
    evolve, generate_event_log, ClockSource, EngineKind, EventLog, Evolver, Trajectory,
};
use exlab_core::lattice::{make_window, Configuration, Marginal, SpeciesLabel, Window};
use exlab_core::observables::{
    estimate_currents, identity_residuals, normal_mode_data, relative_gap, stationarity_check, susceptibility,
    DecouplingConfig, EnsembleOptions, InitialKind, IntegratedConfig, LaplacianConfig, Redraw, TwoPointConfig,
    Assumption15Config,
};
use exlab_core::parallel::try_map_replicas;
use exlab_core::rng::{derive_seed, Stream};
use exlab_core::sampler::{
    build_queue, drift_check, match_brute_force, return_times, sample_bernoulli, sample_queue, sample_two_species,
    second_class_voids, tail_slope_theta, ArrivalServicePair, SamplerOptions,
};
use exlab_core::stats::log_survival_fit;
use exlab_core::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

const SEED: u64 = 20_240_601;

// ---------------------------------------------------------------- 1

fn normal_modes() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = Stream::new(SEED, 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let rho1 = 0.02 + 0.94 * rng.next_f64();
        let rho2 = 0.01 + (0.98 - rho1 - 0.01) * rng.next_f64();
        let d = normal_mode_data(rho1, rho2)?;
        worst = identity_residuals(&d).iter().fold(worst, |m, &r| m.max(r));
    }
    let c = normal_mode_data(0.25, 0.25)?.c;
    let gap = relative_gap(&c, &[[0.1875, -0.1875], [-0.1875, 0.4375]]);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && gap <= 1e-12 && secs < 1.0,
        format!("max identity residual {worst:.1e}, C gap {gap:.1e}, {secs:.3}s"),
    )
}

// ------------------------------------------------------------ 2 to 5

struct Stat {
    value: f64,
    stderr: f64,
}

fn currents_stats(opts: EnsembleOptions) -> Result<(Vec<Stat>, bool, String)> {
    let e = estimate_currents(0.25, 0.25, 0.0, 50.0, 512, 200, derive_seed(SEED, 2, 0), opts)?;
    let z = e.z();
    let ok = z.iter().all(|v| v.abs() <= 3.0);
    let detail = format!(
        "J1 = {:.5} ± {:.5} (exact {}), J2 = {:.5} ± {:.5} (exact {})",
        e.j[0], e.stderr[0], e.expected[0], e.j[1], e.stderr[1], e.expected[1]
    );
    let stats = (0..2).map(|k| Stat { value: e.j[k], stderr: e.stderr[k] }).collect();
    Ok((stats, ok, detail))
}

fn stationarity_stats(opts: EnsembleOptions) -> Result<(Vec<Stat>, bool, String)> {
    let r = stationarity_check(0.25, 0.25, 0.0, 20.0, 64, 4, 10_000, derive_seed(SEED, 3, 0), opts)?;
    let worst = r.max_abs_z();
    let detail = format!("{} frequencies, max |z| = {worst:.2}", r.checks.len());
    let stats = r.checks.iter().map(|c| Stat { value: c.at_t, stderr: c.stderr }).collect();
    Ok((stats, worst <= 4.0, detail))
}

fn laplacian_stats(opts: EnsembleOptions) -> Result<(Vec<Stat>, bool, String)> {
    let mut stats = Vec::new();
    let mut worst = 0.0f64;
    for (k, (t, tt)) in [(0.0, 0.0), (8.0, 8.0), (8.0, 4.0)].into_iter().enumerate() {
        let mut cfg = LaplacianConfig::new(t, tt, 0, 0, (-8, 8), 100_000, derive_seed(SEED, 4, k as u64));
        cfg.options = opts;
        for row in cfg.run()? {
            let z = if row.stderr > 0.0 { row.residual.abs() / row.stderr } else if row.residual == 0.0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            stats.push(Stat { value: row.residual, stderr: row.stderr });
        }
    }
    Ok((stats, worst <= 4.0, format!("51 residuals, max |residual|/stderr = {worst:.2}")))
}

fn susceptibility_stats(opts: EnsembleOptions) -> Result<(Vec<Stat>, bool, String)> {
    let mut cfg = TwoPointConfig::new(0.25, 0.25, 0.0, 20.0, (-200, 200), 2000, derive_seed(SEED, 5, 0));
    cfg.options = opts;
    let s = susceptibility(&cfg.estimate()?, 0.25)?;
    let mut stats = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let z = (s.species[i][j] - s.expected_species[i][j]).abs() / s.species_stderr[i][j];
            worst = worst.max(z);
            stats.push(Stat { value: s.species[i][j], stderr: s.species_stderr[i][j] });
            stats.push(Stat { value: s.marginal[i][j], stderr: s.marginal_stderr[i][j] });
        }
    }
    let detail = format!(
        "species sums [[{:.4}, {:.4}], [{:.4}, {:.4}]] vs C = [[{}, {}], [{}, {}]], max z {worst:.2}; \
         marginal sums z {:.2}",
        s.species[0][0],
        s.species[0][1],
        s.species[1][0],
        s.species[1][1],
        s.expected_species[0][0],
        s.expected_species[0][1],
        s.expected_species[1][0],
        s.expected_species[1][1],
        s.max_z(),
    );
    Ok((stats, worst <= 4.0 && s.max_z() <= 4.0, detail))
}

type StatsFn = fn(EnsembleOptions) -> Result<(Vec<Stat>, bool, String)>;

fn run_stats(f: StatsFn) -> Result<Outcome> {
    let (_, pass, detail) = f(EnsembleOptions::default())?;
    outcome(pass, detail)
}

// ---------------------------------------------------------------- 6, 7

fn bernoulli_setup(rho: f64, obs: u64, t: f64, seed: u64) -> Result<(Trajectory, EventLog)> {
    let w = make_window(obs, t)?;
    let occ = sample_bernoulli(rho, &w, seed)?;
    let c = Configuration::from_fn(w, |i| {
        if occ[(i - w.lo) as usize] == 1 {
            SpeciesLabel::First
        } else {
            SpeciesLabel::Hole
        }
    });
    let log = generate_event_log(&w, t, 0.0, derive_seed(seed, 1, 0))?;
    Ok((evolve(&c, &log, t)?, log))
}

/// Moves the segment that starts at the first move by `delta` sites and
/// returns the mutant together with a time inside that segment.
fn shift_segment(p: &BackwardsPath, delta: i64) -> Option<(BackwardsPath, f64)> {
    let k = p.steps.iter().position(|s| s.kind != StepKind::Jump)?;
    let end = p.steps[k + 1..]
        .iter()
        .position(|s| s.kind != StepKind::Jump)
        .map_or(p.steps.len(), |j| k + 1 + j);
    let mut bad = p.clone();
    for s in &mut bad.steps[k..end] {
        s.to += delta;
    }
    let lo = bad.steps.get(end).map_or(bad.t_end, |s| s.time);
    let tau = 0.5 * (lo + bad.steps[k].time);
    Some((bad, tau))
}

fn geodesics() -> Result<Outcome> {
    let t = 50.0;
    let rows = try_map_replicas(derive_seed(SEED, 6, 0), 100, |i, seed| -> Result<(bool, bool, bool, bool)> {
        let (traj, log) = bernoulli_setup(0.5, 32, t, seed)?;
        let rule = match i % 3 {
            0 => TieRule::Leftmost,
            1 => TieRule::Rightmost,
            _ => TieRule::Random { seed },
        };
        let x = (i % 11) as i64 - 5;
        let p = trace_path(&traj, &log, Marginal::All, x, t, rule)?;
        let checks = geodesic_check(&p, &traj, &log, &default_tau_grid(0.0, t))?;
        let exact = checks.len() == 9 && checks.iter().all(|c| c.outcome == GeodesicOutcome::Holds);
        // small shifts may land on another optimiser of the variational
        // problem; far shifts leave the geodesic tube and must fail
        let (near, far, rejected) = match (shift_segment(&p, 2), shift_segment(&p, if i % 2 == 0 { 16 } else { -16 })) {
            (Some((near, tau_near)), Some((far, tau_far))) => {
                let fails = |bad: &BackwardsPath, tau: f64| -> Result<bool> {
                    Ok(matches!(geodesic_check(bad, &traj, &log, &[tau])?[0].outcome, GeodesicOutcome::Fails { .. }))
                };
                (fails(&near, tau_near)?, fails(&far, tau_far)?, check_admissible(&near, &traj, &log)?.is_some())
            }
            _ => return Err(exlab_core::Error::Misuse("traced path never moved".into())),
        };
        Ok((exact, near, far, rejected))
    })?;
    let count = |f: fn(&(bool, bool, bool, bool)) -> bool| rows.iter().filter(|r| f(r)).count();
    let exact = count(|r| r.0);
    let near = count(|r| r.1);
    let far = count(|r| r.2);
    let rejected = count(|r| r.3);
    outcome(
        exact == 100 && far == 100 && rejected == 100,
        format!(
            "{exact}/100 paths exact on 9-point grids; mutants shifted 16 sites fail {far}/100, \
             2 sites fail {near}/100 (the rest land on tied optimisers); admissibility rejects {rejected}/100"
        ),
    )
}

fn comparisons() -> Result<Outcome> {
    let big_t = 30.0;
    let res = try_map_replicas(derive_seed(SEED, 7, 0), 10_000, |i, seed| -> Result<OrderingOutcome> {
        let mut rng = Stream::new(seed, 0);
        let rho = 0.2 + 0.6 * rng.next_f64();
        let (traj, log) = bernoulli_setup(rho, 16, big_t, seed)?;
        let rule = match i % 3 {
            0 => TieRule::Leftmost,
            1 => TieRule::Rightmost,
            _ => TieRule::Random { seed },
        };
        let x = (rng.next_u64() % 9) as i64 - 4;
        let p = trace_path(&traj, &log, Marginal::All, x, big_t, rule)?;
        let t1 = 10.0 * rng.next_f64();
        let t2 = t1 + 20.0;
        let (d1, d2) = ((rng.next_u64() % 4) as i64, (rng.next_u64() % 4) as i64);
        let (a, b) = (p.pos_at(t1)?, p.pos_at(t2)?);
        if rng.next_u64() % 2 == 0 {
            ordering_check(&p, &traj, &log, a + d1, t1, b + d2, t2, OrderingMode::RightDominates)
        } else {
            ordering_check(&p, &traj, &log, a - d1, t1, b - d2, t2, OrderingMode::LeftDominates)
        }
    })?;
    let violated = res.iter().filter(|r| matches!(r, OrderingOutcome::Violated { .. })).count();
    let vacuous = res.iter().filter(|r| matches!(r, OrderingOutcome::Vacuous)).count();
    outcome(
        violated == 0 && vacuous == 0,
        format!("{} scenarios, {violated} order violations, {vacuous} vacuous", res.len()),
    )
}

// ---------------------------------------------------------------- 8

fn endpoint() -> Result<Outcome> {
    let c = EndpointConfig::stationary(0.5, 500.0, 2000, derive_seed(SEED, 8, 0)).run()?;
    let k = c.m_grid.iter().position(|&m| m == 3.0).expect("grid holds M = 3");
    let p3 = c.exceed_prob[k];
    let fit = c.exponent_fit;
    let good_fit = fit.is_some_and(|f| f.slope < 0.0 && f.r2 >= 0.9);
    outcome(
        p3 < 0.05 && good_fit,
        format!(
            "P(dev > 3) = {p3:.4} ± {:.4}; ln P ~ -c M²: c = {:.3}, R² = {:.3}; buffer hits {}",
            c.stderr[k],
            c.exponent().unwrap_or(f64::NAN),
            fit.map_or(f64::NAN, |f| f.r2),
            c.buffer_hits
        ),
    )
}

// ---------------------------------------------------------------- 9, 10

fn queue_laws() -> Result<Outcome> {
    let w = Window::new(0, 999_999, 0, 999_999, 0)?;
    let (_, qs) = sample_queue(0.25, 0.25, 0.0, &w, derive_seed(SEED, 9, 0), SamplerOptions::default())?;
    let theta = tail_slope_theta(0.25, 0.25)?;
    let fit = log_survival_fit(&qs.queue, 100).expect("queue tail has points");
    let slope_ok = (-fit.slope - theta).abs() <= 0.15 * theta;

    let (_, qa) = sample_queue(0.25, 0.25, 0.5, &w, derive_seed(SEED, 9, 1), SamplerOptions::default())?;
    let tail = log_survival_fit(&qa.queue, 100).expect("ASEP queue tail has points");
    let ret = log_survival_fit(&return_times(&qa.queue), 100).expect("return times have points");
    let drift = drift_check(0.25, 0.25, 0.5, 200)?;
    outcome(
        slope_ok && tail.r2 >= 0.95 && ret.r2 >= 0.95 && drift.holds,
        format!(
            "q=0 slope {:.4} vs θ = {theta:.4}; q=0.5 queue R² {:.4}, return-time R² {:.4}; drift worst {:.2e}",
            -fit.slope, tail.r2, ret.r2, drift.worst
        ),
    )
}

fn departures() -> Result<Outcome> {
    let w = make_window(2000, 0.0)?;
    let checks = try_map_replicas(derive_seed(SEED, 10, 0), 10_000, |_, seed| -> Result<(bool, bool)> {
        let mut rng = Stream::new(seed, 0);
        // identity on a random subinterval of a stationary queue
        let q = if rng.next_u64() % 2 == 0 { 0.0 } else { 0.5 };
        let (pair, qs) = sample_queue(0.25, 0.25, q, &w, seed, SamplerOptions::default())?;
        let i = w.lo + (rng.next_u64() % w.len() as u64) as i64;
        let j = (i + (rng.next_u64() % 500) as i64).min(w.hi);
        let arrivals: i64 = (i..=j).map(|k| pair.a_at(k) as i64).sum();
        let identity = qs.departures(i, j) as i64 == qs.queue_at(j + 1) as i64 - qs.queue_at(i) as i64 + arrivals;

        // brute-force matching on 30 sites with an empty queue at the right edge
        let small = Window::new(0, 29, 0, 29, 0)?;
        let (ra, rs) = (0.1 + 0.5 * rng.next_f64(), 0.1 + 0.8 * rng.next_f64());
        let mut a: Vec<u8> = (0..30).map(|_| (rng.next_f64() < ra) as u8).collect();
        let mut s: Vec<u8> = (0..30).map(|_| (rng.next_f64() < rs) as u8).collect();
        let brute = match_brute_force(&a, &s);
        a.push(0);
        s.push(0);
        let pair = ArrivalServicePair::from_sequences(&small, 1, a, s)?;
        let matched = build_queue(&pair, 0.0, seed, 1)?.d == brute;
        Ok((identity, matched))
    })?;
    let ids = checks.iter().filter(|c| c.0).count();
    let matches = checks.iter().filter(|c| c.1).count();
    outcome(
        ids == 10_000 && matches == 10_000,
        format!("departure identity exact on {ids}/10000 intervals; matching agrees on {matches}/10000 windows"),
    )
}

// ---------------------------------------------------------------- 11, 12

fn decoupling() -> Result<Outcome> {
    let mut cfg = DecouplingConfig::new(InitialKind::Stationary, 0.25, 0.25, vec![500.0, 1000.0, 2000.0], 10_000, 11);
    cfg.origins_per_run = 100;
    cfg.origin_spacing = 1500;
    let recs = cfg.run()?;
    let p: Vec<f64> = recs.iter().map(|r| r.pearson.abs()).collect();
    let last = recs.last().unwrap();
    let pass = p.windows(2).all(|w| w[1] < w[0]) && p[2] < 0.15 && last.sup_cdf_gap < 0.05;
    let list: Vec<String> = recs
        .iter()
        .map(|r| format!("t={}: {:.4} ± {:.4}", r.t, r.pearson, r.pearson_stderr))
        .collect();
    outcome(pass, format!("Pearson {}; CDF gap at t=2000 {:.4}", list.join(", "), last.sup_cdf_gap))
}

fn off_diagonal() -> Result<Outcome> {
    let (rho1, rho2) = (0.25, 0.25);
    let times = [250.0, 500.0, 1000.0];
    let mut pass = true;
    let mut parts = Vec::new();
    // (q, redraw, speed, off-diagonal entry, diagonal entry, replicas, observation half-width)
    let runs = [
        (0.0, Redraw::FirstClass(16), 1.0 - 2.0 * (rho1 + rho2), (2, 1), (2, 2), 1000, 5000),
        (0.0, Redraw::AllParticles(16), 1.0 - 2.0 * rho1, (1, 2), (1, 1), 1000, 5000),
        (0.5, Redraw::FirstClass(16), 1.0 - 2.0 * (rho1 + rho2), (2, 1), (2, 2), 200, 10_000),
        (0.5, Redraw::AllParticles(16), 1.0 - 2.0 * rho1, (1, 2), (1, 1), 200, 10_000),
    ];
    for (k, (q, redraw, v, off, diag, replicas, obs)) in runs.into_iter().enumerate() {
        let mut cfg = IntegratedConfig::new(rho1, rho2, q, v, 1000.0, replicas, derive_seed(SEED, 12, k as u64));
        cfg.redraw = redraw;
        cfg.options.obs_halfwidth = Some(obs);
        cfg.options.clocks = ClockSource::Uniformized;
        let est = cfg.run_many(&times, &[v])?;
        let mags: Vec<f64> = est.iter().map(|e| e.entry(off.0, off.1).value.abs()).collect();
        let d = est[2].entry(diag.0, diag.1).value;
        let ok = mags.windows(2).all(|w| w[1] < w[0]) && mags[2] < d / 3.0;
        pass &= ok;
        let series: Vec<String> = est
            .iter()
            .map(|e| {
                let x = e.entry(off.0, off.1);
                format!("{:.5}±{:.5}", x.value, x.stderr)
            })
            .collect();
        parts.push(format!(
            "q={q} ({},{}) at v={v}: {} vs diag {d:.4}{}",
            off.0,
            off.1,
            series.join(" > "),
            if ok { "" } else { " [fails]" }
        ));
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------- 13, 14

fn voids() -> Result<Outcome> {
    let w = make_window(20_000, 0.0)?;
    let c = second_class_voids(0.25, 0.25, 0.0, &w, 40, 20, 100, derive_seed(SEED, 13, 0))?;
    let fit = c.fit.expect("void curve has fit points");
    outcome(
        fit.r2 >= 0.95,
        format!("{} windows, ln P slope {:.4}, R² = {:.4}", c.windows, fit.slope, fit.r2),
    )
}

fn assumption15() -> Result<Outcome> {
    let cfg = Assumption15Config {
        seed: derive_seed(SEED, 14, 0),
        ..Default::default()
    };
    let r = cfg.run()?;
    let var_ok = (r.variance_ratio - 0.25).abs() <= 0.1 * 0.25;
    outcome(
        var_ok && r.fraction_below >= 0.99 && r.forms_agree,
        format!(
            "Var/|I| = {:.4} ± {:.4} (σ_A² = {}); sup|δ_h| below t^0.3 = {:.1} in {:.1}% of {} samples, max {}",
            r.variance_ratio,
            r.variance_ratio_stderr,
            r.sigma_a_squared,
            r.threshold,
            100.0 * r.fraction_below,
            r.sups.len(),
            r.sups.iter().max().unwrap_or(&0)
        ),
    )
}

// ---------------------------------------------------------------- 15

fn engines_agree() -> Result<bool> {
    for seed in 0..50u64 {
        let t = 50.0;
        let w = make_window(200, t)?;
        let c = sample_two_species(0.25, 0.25, 0.0, &w, seed)?;
        let mut tasep = Evolver::uniformized(&w, t, 0.0, seed, vec![c.clone()], EngineKind::Tasep)?;
        let mut asep = Evolver::uniformized(&w, t, 0.0, seed, vec![c.clone()], EngineKind::Asep)?;
        let log = generate_event_log(&w, t, 0.0, seed)?;
        let mut stored = Evolver::from_log(&log, vec![c.clone()], false)?;
        let mut streamed = Evolver::streaming(&w, t, 0.0, seed, vec![c])?;
        for k in 1..=25 {
            let s = 2.0 * k as f64;
            for e in [&mut tasep, &mut asep, &mut stored, &mut streamed] {
                e.advance_to(s)?;
            }
            let same = |a: &Evolver, b: &Evolver| {
                a.process(0).config() == b.process(0).config() && a.process(0).currents() == b.process(0).currents()
            };
            if !same(&tasep, &asep) || !same(&stored, &streamed) || tasep.processed() != asep.processed() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn equivalence() -> Result<Outcome> {
    let bitwise = engines_agree()?;
    let mut pass = bitwise;
    let mut parts = vec![format!("q=0 loops identical: {bitwise}")];
    let fns: [(&str, StatsFn); 4] = [
        ("currents", currents_stats),
        ("stationarity", stationarity_stats),
        ("laplacian", laplacian_stats),
        ("susceptibility", susceptibility_stats),
    ];
    for (name, f) in fns {
        let (base, _, _) = f(EnsembleOptions::default())?;
        let variants = [
            EnsembleOptions {
                doubled_buffer: true,
                ..Default::default()
            },
            EnsembleOptions {
                sampler: SamplerOptions {
                    double_burn_in: true,
                    ..Default::default()
                },
                ..Default::default()
            },
        ];
        let mut worst = 0.0f64;
        for opts in variants {
            let (other, _, _) = f(opts)?;
            for (a, b) in base.iter().zip(&other) {
                let se = a.stderr.hypot(b.stderr);
                let z = if se > 0.0 { (a.value - b.value).abs() / se } else if a.value == b.value { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
            }
        }
        pass &= worst <= 2.0;
        parts.push(format!("{name} max |Δ|/stderr {worst:.3}"));
    }
    outcome(pass, parts.join("; "))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    // respect name filters handed to every test binary by `cargo test <filter>`
    if let Some(f) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(f.as_str()) {
            return ExitCode::SUCCESS;
        }
    }
    let only: Option<Vec<u32>> = std::env::var("EXLAB_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let criteria: [(u32, &str, fn() -> Result<Outcome>); 15] = [
        (1, "normal-mode identities", normal_modes),
        (2, "currents", || run_stats(currents_stats)),
        (3, "stationarity", || run_stats(stationarity_stats)),
        (4, "laplacian identity", || run_stats(laplacian_stats)),
        (5, "susceptibility", || run_stats(susceptibility_stats)),
        (6, "geodesic identity", geodesics),
        (7, "path comparison", comparisons),
        (8, "endpoint localisation", endpoint),
        (9, "queue laws", queue_laws),
        (10, "departure identity and matching", departures),
        (11, "decoupling trend", decoupling),
        (12, "off-diagonal decay", off_diagonal),
        (13, "second-class voids", voids),
        (14, "markov initial data validator", assumption15),
        (15, "engine equivalence", equivalence),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {n:>2} {name}: {} ({detail}) [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(n);
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
