use crate::error::Result;
use crate::lattice::{Configuration, SpeciesLabel};
use crate::observables::ensemble::{check_replicas, check_time, EnsembleOptions, StationaryRun};
use crate::parallel::fold_replicas;
use crate::stats::Moments;

const LABELS: [SpeciesLabel; 3] = [SpeciesLabel::First, SpeciesLabel::Second, SpeciesLabel::Hole];

/// One frequency compared between time 0 and time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCheck {
    /// `"1"`, `"2"`, `"."` for single sites; `"1.@3"` for the pair
    /// (label at `i`, label at `i + 3`).
    pub name: String,
    pub at_zero: f64,
    pub at_t: f64,
    /// Mean of the per-replica difference.
    pub difference: f64,
    /// Paired standard error of the difference.
    pub stderr: f64,
}

impl FrequencyCheck {
    pub fn z(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.difference == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.difference / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub t: f64,
    pub checks: Vec<FrequencyCheck>,
    pub replicas: u64,
}

impl StationarityReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z().abs()).fold(0.0, f64::max)
    }
}

fn frequencies(c: &Configuration, lo: i64, hi: i64, max_distance: i64) -> Vec<f64> {
    let idx = |l: SpeciesLabel| l as usize - 1;
    let mut single = [0.0; 3];
    for i in lo..=hi {
        single[idx(c.get(i))] += 1.0;
    }
    let mut out: Vec<f64> = single.iter().map(|v| v / (hi - lo + 1) as f64).collect();
    for d in 1..=max_distance {
        let mut pairs = [0.0; 9];
        for i in lo..=hi - d {
            pairs[3 * idx(c.get(i)) + idx(c.get(i + d))] += 1.0;
        }
        out.extend(pairs.iter().map(|v| v / (hi - lo - d + 1) as f64));
    }
    out
}

fn names(max_distance: i64) -> Vec<String> {
    let mut v: Vec<String> = LABELS.iter().map(|l| l.to_char().to_string()).collect();
    for d in 1..=max_distance {
        for a in LABELS {
            for b in LABELS {
                v.push(format!("{}{}@{d}", a.to_char(), b.to_char()));
            }
        }
    }
    v
}

/// Single-site and pair label frequencies over the observation window, at
/// time 0 and after evolving to physical time `t`.
#[allow(clippy::too_many_arguments)]
pub fn stationarity_check(
    rho1: f64,
    rho2: f64,
    q: f64,
    t: f64,
    obs_halfwidth: u64,
    max_distance: u64,
    replicas: u64,
    seed: u64,
    options: EnsembleOptions,
) -> Result<StationarityReport> {
    check_replicas(replicas, 2)?;
    check_time(t)?;
    if max_distance as i64 > 2 * obs_halfwidth as i64 {
        return Err(crate::error::invalid("max_distance", "longer than the observation window"));
    }
    let t = options.time_units.physical(t, q);
    let run = StationaryRun::new(rho1, rho2, q, obs_halfwidth, t, options)?;
    let (lo, hi) = (run.window.obs_lo, run.window.obs_hi);
    let d = max_distance as i64;
    let n = 3 + 9 * max_distance as usize;
    let replica = |_: u64, seed: u64| -> Result<Vec<f64>> {
        let c0 = run.initial(seed)?;
        let f0 = frequencies(&c0, lo, hi, d);
        let mut ev = run.evolver(c0, seed)?;
        ev.advance_to(t)?;
        let ft = frequencies(ev.process(0).config(), lo, hi, d);
        let diff: Vec<f64> = ft.iter().zip(&f0).map(|(a, b)| a - b).collect();
        Ok([f0, ft, diff].concat())
    };
    let m = fold_replicas(seed, replicas, replica, Moments::new(3 * n), |acc, _, v| acc.push(&v))?;
    let (mean, se) = (m.means(), m.stderrs());
    let checks = names(d)
        .into_iter()
        .enumerate()
        .map(|(k, name)| FrequencyCheck {
            name,
            at_zero: mean[k],
            at_t: mean[n + k],
            difference: mean[2 * n + k],
            stderr: se[2 * n + k],
        })
        .collect();
    Ok(StationarityReport { t, checks, replicas })
}
