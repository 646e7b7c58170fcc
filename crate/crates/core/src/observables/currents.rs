use crate::error::Result;
use crate::observables::ensemble::{check_replicas, check_time, EnsembleOptions, StationaryRun};
use crate::observables::normal_modes::normal_mode_data;
use crate::parallel::fold_replicas;
use crate::stats::Moments;

/// Average species currents per bond and unit physical time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentEstimate {
    /// Physical time.
    pub t: f64,
    /// First-class current and second-class current `all - first`.
    pub j: [f64; 2],
    pub stderr: [f64; 2],
    /// `(1 - q) (ρ1(1-ρ1), ρ2(1-ρ2) - 2ρ1ρ2)`.
    pub expected: [f64; 2],
    pub replicas: u64,
    pub bonds: u64,
}

impl CurrentEstimate {
    pub fn z(&self) -> [f64; 2] {
        [0, 1].map(|k| (self.j[k] - self.expected[k]) / self.stderr[k])
    }
}

/// Counts net crossings over every bond of a `±obs_halfwidth` observation
/// window up to time `t`, and divides by `bonds · t`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_currents(
    rho1: f64,
    rho2: f64,
    q: f64,
    t: f64,
    obs_halfwidth: u64,
    replicas: u64,
    seed: u64,
    options: EnsembleOptions,
) -> Result<CurrentEstimate> {
    check_replicas(replicas, 2)?;
    check_time(t)?;
    if t <= 0.0 {
        return Err(crate::error::invalid("t", "currents need t > 0"));
    }
    let t = options.time_units.physical(t, q);
    let nm = normal_mode_data(rho1, rho2)?;
    let run = StationaryRun::new(rho1, rho2, q, obs_halfwidth, t, options)?;
    let bonds = (run.window.obs_hi - run.window.obs_lo) as u64;
    let norm = bonds as f64 * t;
    let replica = |_: u64, seed: u64| -> Result<[f64; 2]> {
        let mut ev = run.evolver(run.initial(seed)?, seed)?;
        ev.advance_to(t)?;
        let c = ev.process(0).currents();
        Ok([c.obs_first as f64 / norm, (c.obs_all - c.obs_first) as f64 / norm])
    };
    let m = fold_replicas(seed, replicas, replica, Moments::new(2), |acc, _, v| acc.push(&v))?;
    let se = m.stderrs();
    Ok(CurrentEstimate {
        t,
        j: [m.means()[0], m.means()[1]],
        stderr: [se[0], se[1]],
        expected: [(1.0 - q) * nm.j[0], (1.0 - q) * nm.j[1]],
        replicas,
        bonds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harris::ClockSource;

    #[test]
    fn currents_match_closed_forms() {
        let e = estimate_currents(0.25, 0.25, 0.0, 10.0, 128, 60, 11, EnsembleOptions::default()).unwrap();
        assert_eq!(e.expected, [0.1875, 0.0625]);
        assert_eq!(e.bonds, 256);
        for z in e.z() {
            assert!(z.abs() < 4.0, "{e:?}");
        }
    }

    #[test]
    fn asep_currents_scale_with_drift() {
        let opts = EnsembleOptions {
            clocks: ClockSource::Uniformized,
            ..Default::default()
        };
        let e = estimate_currents(0.3, 0.2, 0.5, 10.0, 128, 60, 12, opts).unwrap();
        for z in e.z() {
            assert!(z.abs() < 4.0, "{e:?}");
        }
    }

    #[test]
    fn rejects_zero_time() {
        assert!(estimate_currents(0.25, 0.25, 0.0, 0.0, 16, 4, 0, EnsembleOptions::default()).is_err());
    }
}
