use crate::backwards::path::{trace_path, BackwardsPath, TieRule};
use crate::error::{invalid, Error, Result};
use crate::harris::{evolve_from, EventLog, Evolver, Trajectory};
use crate::lattice::{Configuration, Marginal};

/// Result of one geodesic identity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicOutcome {
    Holds,
    Fails { lhs: i64, rhs: i64 },
    /// The step process reached the window edge, so the finite replay no
    /// longer equals the infinite step process.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicCheck {
    pub tau: f64,
    pub y: i64,
    pub outcome: GeodesicOutcome,
}

/// Eight equispaced times on `[t_end, t]` plus `t_end`.
pub fn default_tau_grid(t_end: f64, t: f64) -> Vec<f64> {
    (0..=8).map(|k| t_end + (t - t_end) * k as f64 / 8.0).collect()
}

/// Step configuration centred at `y`: particles on `(-∞, y]`.
fn step_config(traj: &Trajectory, y: i64) -> Configuration {
    Configuration::step(*traj.initial.window(), y)
}

/// Checks `h(x, t) = h(x(τ), τ) + h^step_{x(τ),τ}(x, t)` for every `τ` in
/// the grid. `h` comes from a forward replay of the trajectory, not from
/// the path, and each step process runs on the same log from `τ`.
pub fn geodesic_check(path: &BackwardsPath, traj: &Trajectory, log: &EventLog, tau_grid: &[f64]) -> Result<Vec<GeodesicCheck>> {
    let m = path.marginal;
    let mut order: Vec<usize> = (0..tau_grid.len()).collect();
    order.sort_by(|&a, &b| tau_grid[a].total_cmp(&tau_grid[b]));
    for &tau in tau_grid {
        if !(tau >= path.t_end && tau <= path.t) {
            return Err(invalid("tau_grid", format!("{tau} lies outside [{}, {}]", path.t_end, path.t)));
        }
    }
    let mut ev = Evolver::from_log_after(log, traj.t_start, vec![traj.initial.clone()], false)?;
    let mut h_tau = vec![0i64; tau_grid.len()];
    for &k in &order {
        ev.advance_to(tau_grid[k])?;
        h_tau[k] = ev.process(0).height(m, 0, path.pos_at(tau_grid[k])?);
    }
    ev.advance_to(path.t)?;
    let lhs = ev.process(0).height(m, 0, path.x);
    let w = *traj.initial.window();
    let mut out = Vec::with_capacity(tau_grid.len());
    for (k, &tau) in tau_grid.iter().enumerate() {
        let y = path.pos_at(tau)?;
        let step = evolve_from(&step_config(traj, y), log, tau, path.t)?;
        let fc = step.final_config();
        let outcome = if fc.occupied(Marginal::All, w.lo) == 0 || fc.occupied(Marginal::All, w.hi) == 1 {
            GeodesicOutcome::Inconclusive
        } else {
            let rhs = h_tau[k] + (path.x - y).abs() + 2 * step.state().net_crossings(Marginal::All, path.x);
            if rhs == lhs {
                GeodesicOutcome::Holds
            } else {
                GeodesicOutcome::Fails { lhs, rhs }
            }
        };
        out.push(GeodesicCheck { tau, y, outcome });
    }
    Ok(out)
}

/// Which comparison to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingMode {
    /// `x(τ) <= x^{step,r}(τ)` under `x(t1) <= x1`, `x(t2) <= x2`.
    RightDominates,
    /// `x(τ) >= x^{step,l}(τ)` under `x(t1) >= x1`, `x(t2) >= x2`.
    LeftDominates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderingOutcome {
    Holds,
    Violated { tau: f64, x: i64, step: i64 },
    /// The hypotheses do not hold; nothing was tested.
    Vacuous,
}

/// Compares `path` on `[t1, t2]` with the extremal backwards path of a step
/// process launched at `(x1, t1)` and traced from `(x2, t2)`.
///
/// Calling one mode when only the other mode's hypotheses hold is rejected
/// as misuse.
#[allow(clippy::too_many_arguments)]
pub fn ordering_check(
    path: &BackwardsPath,
    traj: &Trajectory,
    log: &EventLog,
    x1: i64,
    t1: f64,
    x2: i64,
    t2: f64,
    mode: OrderingMode,
) -> Result<OrderingOutcome> {
    if !(t1 < t2 && t1 >= path.t_end && t2 <= path.t) {
        return Err(invalid(
            "t1/t2",
            format!("need {} <= t1 < t2 <= {}, got t1 = {t1}, t2 = {t2}", path.t_end, path.t),
        ));
    }
    let (a, b) = (path.pos_at(t1)?, path.pos_at(t2)?);
    let right_hyp = a <= x1 && b <= x2;
    let left_hyp = a >= x1 && b >= x2;
    let (holds, other) = match mode {
        OrderingMode::RightDominates => (right_hyp, left_hyp),
        OrderingMode::LeftDominates => (left_hyp, right_hyp),
    };
    if !holds {
        if other {
            return Err(Error::Misuse(format!(
                "{mode:?} requested but x(t1) = {a}, x(t2) = {b} satisfy the opposite hypotheses \
                 for x1 = {x1}, x2 = {x2}"
            )));
        }
        return Ok(OrderingOutcome::Vacuous);
    }
    let step_traj = evolve_from(&step_config(traj, x1), log, t1, t2)?;
    let rule = match mode {
        OrderingMode::RightDominates => TieRule::Rightmost,
        OrderingMode::LeftDominates => TieRule::Leftmost,
    };
    let step_path = trace_path(&step_traj, log, Marginal::All, x2, t2, rule)?;
    // both paths are piecewise constant: compare at every breakpoint and
    // its left limit
    let mut times = vec![t1, t2];
    for p in [path, &step_path] {
        times.extend(p.steps.iter().map(|s| s.time).filter(|&s| s > t1 && s <= t2));
    }
    for &tau in &times {
        let mut pairs = vec![(path.pos_at(tau)?, step_path.pos_at(tau)?)];
        if tau > t1 {
            pairs.push((path.pos_before(tau)?, step_path.pos_before(tau)?));
        }
        for (x, s) in pairs {
            let bad = match mode {
                OrderingMode::RightDominates => x > s,
                OrderingMode::LeftDominates => x < s,
            };
            if bad {
                return Ok(OrderingOutcome::Violated { tau, x, step: s });
            }
        }
    }
    Ok(OrderingOutcome::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backwards::path::StepKind;
    use crate::harris::{evolve, generate_event_log};
    use crate::lattice::{make_window, SpeciesLabel};
    use crate::rng::derive_seed;
    use crate::sampler::sample_bernoulli;

    fn setup(seed: u64, t: f64) -> (Trajectory, EventLog) {
        let w = make_window(40, t).unwrap();
        let occ = sample_bernoulli(0.5, &w, seed).unwrap();
        let c = Configuration::from_fn(w, |i| {
            if occ[(i - w.lo) as usize] == 1 {
                SpeciesLabel::First
            } else {
                SpeciesLabel::Hole
            }
        });
        let log = generate_event_log(&w, t, 0.0, derive_seed(seed, 1, 0)).unwrap();
        (evolve(&c, &log, t).unwrap(), log)
    }

    #[test]
    fn traced_paths_are_geodesics() {
        for seed in 0..10 {
            let (traj, log) = setup(seed, 12.0);
            for rule in [TieRule::Leftmost, TieRule::Rightmost, TieRule::Random { seed }] {
                let p = trace_path(&traj, &log, Marginal::All, 2, 12.0, rule).unwrap();
                let res = geodesic_check(&p, &traj, &log, &default_tau_grid(0.0, 12.0)).unwrap();
                assert!(res.iter().all(|r| r.outcome == GeodesicOutcome::Holds), "{res:?}");
            }
        }
    }

    #[test]
    fn shifted_segment_breaks_the_identity() {
        let (traj, log) = setup(4, 12.0);
        let p = trace_path(&traj, &log, Marginal::All, 0, 12.0, TieRule::Leftmost).unwrap();
        let k = p.steps.iter().position(|s| s.kind != StepKind::Jump).unwrap();
        let mut bad = p.clone();
        // move one whole segment two sites to the right
        let end = bad.steps[k + 1..]
            .iter()
            .position(|s| s.kind != StepKind::Jump)
            .map_or(bad.steps.len(), |j| k + 1 + j);
        for s in &mut bad.steps[k..end] {
            s.to += 2;
        }
        let lo = bad.steps.get(end).map_or(0.0, |s| s.time);
        let tau = 0.5 * (lo + bad.steps[k].time);
        let res = geodesic_check(&bad, &traj, &log, &[tau]).unwrap();
        assert!(matches!(res[0].outcome, GeodesicOutcome::Fails { .. }), "{res:?}");
    }

    #[test]
    fn endpoint_times_hold_trivially() {
        let (traj, log) = setup(1, 6.0);
        let p = trace_path(&traj, &log, Marginal::All, -3, 6.0, TieRule::Rightmost).unwrap();
        let res = geodesic_check(&p, &traj, &log, &[6.0]).unwrap();
        assert_eq!(res[0].outcome, GeodesicOutcome::Holds);
        assert!(geodesic_check(&p, &traj, &log, &[7.0]).is_err());
    }

    #[test]
    fn path_against_its_own_step_comparison() {
        let (traj, log) = setup(2, 10.0);
        let p = trace_path(&traj, &log, Marginal::All, 0, 10.0, TieRule::Leftmost).unwrap();
        let (t1, t2) = (3.0, 9.0);
        let (a, b) = (p.pos_at(t1).unwrap(), p.pos_at(t2).unwrap());
        let r = ordering_check(&p, &traj, &log, a, t1, b, t2, OrderingMode::RightDominates).unwrap();
        assert_eq!(r, OrderingOutcome::Holds);
        let l = ordering_check(&p, &traj, &log, a, t1, b, t2, OrderingMode::LeftDominates).unwrap();
        assert_eq!(l, OrderingOutcome::Holds);
    }

    #[test]
    fn mode_mismatch_is_misuse() {
        let (traj, log) = setup(3, 10.0);
        let p = trace_path(&traj, &log, Marginal::All, 0, 10.0, TieRule::Leftmost).unwrap();
        let (a, b) = (p.pos_at(2.0).unwrap(), p.pos_at(8.0).unwrap());
        assert!(matches!(
            ordering_check(&p, &traj, &log, a - 3, 2.0, b - 3, 8.0, OrderingMode::RightDominates),
            Err(Error::Misuse(_))
        ));
        let v = ordering_check(&p, &traj, &log, a - 3, 2.0, b + 3, 8.0, OrderingMode::RightDominates).unwrap();
        assert_eq!(v, OrderingOutcome::Vacuous);
    }

    #[test]
    fn random_scenarios_never_violate() {
        for seed in 0..40u64 {
            let (traj, log) = setup(seed, 10.0);
            let rule = [TieRule::Leftmost, TieRule::Rightmost][seed as usize % 2];
            let p = trace_path(&traj, &log, Marginal::All, (seed % 7) as i64 - 3, 10.0, rule).unwrap();
            let (a, b) = (p.pos_at(2.0).unwrap(), p.pos_at(9.0).unwrap());
            let d = (seed % 3) as i64;
            let r = ordering_check(&p, &traj, &log, a + d, 2.0, b + 1, 9.0, OrderingMode::RightDominates).unwrap();
            assert_eq!(r, OrderingOutcome::Holds);
            let l = ordering_check(&p, &traj, &log, a - d, 2.0, b - 1, 9.0, OrderingMode::LeftDominates).unwrap();
            assert_eq!(l, OrderingOutcome::Holds);
        }
    }
}
