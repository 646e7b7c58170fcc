use crate::error::{invalid, Error, Result};
use crate::harris::clock::EventLog;
use crate::harris::engine::{Evolver, Trajectory};
use crate::lattice::{Configuration, Marginal};

/// Result of checking the variational formula for the height function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConcatOutcome {
    Equal,
    Mismatch { j: i64, direct: i64, variational: i64 },
    /// The minimizer sat on the boundary of the supplied `y` range.
    Inconclusive { j: i64 },
}

/// Checks `h(j,t) = min_y { h(y,τ) + h^step_{y,τ}(j,t) }` for every `j` in
/// `j_range`, launching one step process per `y` on the same log.
///
/// Heights are measured against `h(0, 0)` of the trajectory's initial
/// configuration.
pub fn concatenate_check(
    traj: &Trajectory,
    log: &EventLog,
    m: Marginal,
    tau: f64,
    t: f64,
    y_range: (i64, i64),
    j_range: (i64, i64),
) -> Result<ConcatOutcome> {
    if !(0.0 <= tau && tau <= t) {
        return Err(invalid("tau", format!("need 0 <= tau <= t, got tau = {tau}, t = {t}")));
    }
    let w = log.window;
    for s in [y_range.0, y_range.1, j_range.0, j_range.1] {
        if !w.contains(s) || s == w.hi {
            return Err(Error::SiteOutOfRange {
                site: s,
                lo: w.lo,
                hi: w.hi - 1,
            });
        }
    }
    if y_range.0 > y_range.1 || j_range.0 > j_range.1 {
        return Err(invalid("range", "empty interval"));
    }

    let mut at_tau = Evolver::from_log(log, vec![traj.initial.clone()], false)?;
    at_tau.advance_to(tau)?;
    let h_tau = at_tau.process(0).height_profile(m, 0, y_range.0, y_range.1);

    let mut at_t = Evolver::from_log(log, vec![traj.initial.clone()], false)?;
    at_t.advance_to(t)?;
    let h_t = at_t.process(0).height_profile(m, 0, j_range.0, j_range.1);

    let steps: Vec<Configuration> = (y_range.0..=y_range.1).map(|y| Configuration::step(w, y)).collect();
    let mut ev = Evolver::from_log_after(log, tau, steps, false)?;
    ev.advance_to(t)?;

    for (jk, j) in (j_range.0..=j_range.1).enumerate() {
        let mut best = i64::MAX;
        let mut arg = y_range.0;
        for (yk, y) in (y_range.0..=y_range.1).enumerate() {
            let step = ev.process(yk);
            let hs = (j - y).abs() + 2 * step.net_crossings(Marginal::First, j);
            let v = h_tau[yk] + hs;
            if v < best {
                best = v;
                arg = y;
            }
        }
        let direct = h_t[jk];
        if (arg == y_range.0 && y_range.0 > w.lo) || (arg == y_range.1 && y_range.1 < w.hi - 1) {
            if best != direct {
                return Ok(ConcatOutcome::Inconclusive { j });
            }
        }
        if best != direct {
            return Ok(ConcatOutcome::Mismatch {
                j,
                direct,
                variational: best,
            });
        }
    }
    Ok(ConcatOutcome::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harris::{evolve, generate_event_log};
    use crate::lattice::{make_window, SpeciesLabel};
    use crate::rng::KeyedStream;

    #[test]
    fn tau_equal_t_is_lipschitz_identity() {
        let w = make_window(20, 3.0).unwrap();
        let log = generate_event_log(&w, 3.0, 0.0, 2).unwrap();
        let ks = KeyedStream::new(2, 99);
        let c = Configuration::from_fn(w, |i| {
            if ks.bernoulli(i, 0.5) {
                SpeciesLabel::First
            } else {
                SpeciesLabel::Hole
            }
        });
        let tr = evolve(&c, &log, 3.0).unwrap();
        let out = concatenate_check(&tr, &log, Marginal::First, 3.0, 3.0, (-20, 20), (-10, 10)).unwrap();
        assert_eq!(out, ConcatOutcome::Equal);
    }

    #[test]
    fn step_initial_condition_at_time_zero() {
        let w = make_window(10, 2.0).unwrap();
        let log = generate_event_log(&w, 2.0, 0.0, 8).unwrap();
        let c = Configuration::step(w, 0);
        let tr = evolve(&c, &log, 2.0).unwrap();
        let out = concatenate_check(&tr, &log, Marginal::First, 0.0, 2.0, (-10, 10), (-5, 5)).unwrap();
        assert_eq!(out, ConcatOutcome::Equal);
    }
}
