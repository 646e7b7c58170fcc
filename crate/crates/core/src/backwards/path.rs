use crate::error::{invalid, Error, Result};
use crate::harris::{Direction, EventLog, Evolver, Process, Trajectory};
use crate::lattice::{Configuration, Marginal, Window};
use crate::rng::{tags, KeyedStream};

/// Choice between the two admissible neighbours when both qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    Leftmost,
    Rightmost,
    /// Fair coin keyed by event index.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// A jump across the path's bond: the path stays, the height drops by 2.
    Jump,
    Left,
    Right,
}

/// One update of the path at a clock ring of its current site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub time: f64,
    /// Index into `log.events`.
    pub event: usize,
    pub kind: StepKind,
    /// `x(s)`.
    pub from: i64,
    /// `x(s^-)`.
    pub to: i64,
    /// `h(x(s^-), s^-)`.
    pub height: i64,
}

/// Backwards path `τ ↦ x(τ)` from `(x, t)` down to the trajectory's start.
///
/// Heights are `h(·, τ) - h(0, t_end)` for the traced marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardsPath {
    pub x: i64,
    pub t: f64,
    /// Lower end of the path's time range.
    pub t_end: f64,
    pub marginal: Marginal,
    pub tie_rule: TieRule,
    /// `h(x, t)`.
    pub height: i64,
    /// Updates in decreasing time.
    pub steps: Vec<PathStep>,
}

impl BackwardsPath {
    fn check_time(&self, tau: f64) -> Result<()> {
        if !(tau >= self.t_end && tau <= self.t) {
            return Err(Error::TimeOutOfRange {
                requested: tau,
                horizon: self.t,
            });
        }
        Ok(())
    }

    /// Updates with time strictly above `tau`.
    fn applied(&self, tau: f64) -> usize {
        self.steps.partition_point(|s| s.time > tau)
    }

    /// `x(τ)`.
    pub fn pos_at(&self, tau: f64) -> Result<i64> {
        self.check_time(tau)?;
        Ok(match self.applied(tau) {
            0 => self.x,
            k => self.steps[k - 1].to,
        })
    }

    /// `x(τ^-)`.
    pub fn pos_before(&self, tau: f64) -> Result<i64> {
        self.check_time(tau)?;
        Ok(match self.steps.partition_point(|s| s.time >= tau) {
            0 => self.x,
            k => self.steps[k - 1].to,
        })
    }

    /// `h(x(τ), τ)`.
    pub fn height_at(&self, tau: f64) -> Result<i64> {
        self.check_time(tau)?;
        Ok(match self.applied(tau) {
            0 => self.height,
            k => self.steps[k - 1].height,
        })
    }

    /// `x(t_end)`.
    pub fn endpoint(&self) -> i64 {
        self.steps.last().map_or(self.x, |s| s.to)
    }

    /// `(time, site)` breakpoints: the start followed by every move.
    pub fn segments(&self) -> Vec<(f64, i64)> {
        let mut out = vec![(self.t, self.x)];
        out.extend(self.steps.iter().filter(|s| s.kind != StepKind::Jump).map(|s| (s.time, s.to)));
        out
    }

    /// `sup_τ |x(τ) - f(τ)|` over the path's range, for affine `f`.
    pub fn sup_deviation(&self, f: impl Fn(f64) -> f64) -> f64 {
        // an affine reference peaks at segment ends
        let mut best = (self.x as f64 - f(self.t)).abs();
        let mut cur = self.x;
        for s in &self.steps {
            best = best.max((cur as f64 - f(s.time)).abs());
            cur = s.to;
            best = best.max((cur as f64 - f(s.time)).abs());
        }
        best.max((cur as f64 - f(self.t_end)).abs())
    }

    /// `tau,x` lines at every breakpoint and at the end time.
    pub fn dump(&self) -> String {
        let mut out = String::from("tau,x\n");
        for (t, x) in self.segments() {
            out.push_str(&format!("{t:.9},{x}\n"));
        }
        out.push_str(&format!("{:.9},{}\n", self.t_end, self.endpoint()));
        out
    }
}

/// Sites a path may visit: the observation window widened by half the buffer.
pub fn safe_region(w: &Window) -> (i64, i64) {
    let half = (w.buffer / 2) as i64;
    (w.obs_lo - half, w.obs_hi + half)
}

fn check_safe(w: &Window, site: i64) -> Result<()> {
    let (lo, hi) = safe_region(w);
    if site < lo || site > hi {
        return Err(Error::BufferViolation { site, lo, hi });
    }
    Ok(())
}

#[inline]
fn swap(c: &mut Configuration, bond: i64) {
    let k = (bond - c.window().lo) as usize;
    c.labels_mut().swap(k, k + 1);
}

/// Traces the backwards path of the `m`-marginal height from `(x, t)`.
///
/// The clock of site `y` is the rightward attempt across bond `(y, y + 1)`.
/// The sweep undoes the trajectory's swaps from its final time, so heights
/// along the path are exact integers.
pub fn trace_path(
    traj: &Trajectory,
    log: &EventLog,
    m: Marginal,
    x: i64,
    t: f64,
    tie_rule: TieRule,
) -> Result<BackwardsPath> {
    if log.q != 0.0 {
        return Err(invalid("q", "backwards paths are defined for TASEP only"));
    }
    if !(t >= traj.t_start && t <= traj.t) {
        return Err(Error::TimeOutOfRange {
            requested: t,
            horizon: traj.t,
        });
    }
    let w = *traj.initial.window();
    check_safe(&w, x)?;
    let ties = match tie_rule {
        TieRule::Random { seed } => Some(KeyedStream::new(seed, tags::TIE_BREAK)),
        _ => None,
    };
    let mut config = traj.final_config().clone();
    let mut y = x;
    let mut h = traj.state().height(m, 0, y);
    let mut height_at_t = None;
    let mut steps = Vec::new();
    let range = traj.event_range();
    let events = &log.events[range.clone()];
    for (k, (e, &swapped)) in events.iter().zip(traj.swapped()).enumerate().rev() {
        let idx = range.start + k;
        let jumped = swapped && config.occupied(m, e.bond) != config.occupied(m, e.bond + 1);
        if e.time > t {
            if jumped && e.bond == y {
                h -= 2;
            }
        } else {
            if height_at_t.is_none() {
                height_at_t = Some(h);
            }
            if e.direction == Direction::Right && e.bond == y {
                if jumped {
                    h -= 2;
                    steps.push(PathStep {
                        time: e.time,
                        event: idx,
                        kind: StepKind::Jump,
                        from: y,
                        to: y,
                        height: h,
                    });
                } else {
                    let here = config.occupied(m, y);
                    let right = config.occupied(m, y + 1);
                    let go_right = match (here, right) {
                        (1, 1) => true,
                        (0, 0) => false,
                        (0, 1) => match tie_rule {
                            TieRule::Leftmost => false,
                            TieRule::Rightmost => true,
                            TieRule::Random { .. } => ties.as_ref().unwrap().bernoulli(idx as i64, 0.5),
                        },
                        _ => {
                            return Err(Error::Misuse(format!(
                                "event {idx} at site {y} left a particle-hole pair without a jump; \
                                 the trajectory does not follow TASEP rules"
                            )))
                        }
                    };
                    let (kind, to) = if go_right { (StepKind::Right, y + 1) } else { (StepKind::Left, y - 1) };
                    check_safe(&w, to)?;
                    h -= 1;
                    steps.push(PathStep {
                        time: e.time,
                        event: idx,
                        kind,
                        from: y,
                        to,
                        height: h,
                    });
                    y = to;
                }
            }
        }
        if swapped {
            swap(&mut config, e.bond);
        }
    }
    let height = height_at_t.unwrap_or(h);
    debug_assert_eq!(h, Process::new(traj.initial.clone(), false).height(m, 0, y));
    Ok(BackwardsPath {
        x,
        t,
        t_end: traj.t_start,
        marginal: m,
        tie_rule,
        height,
        steps,
    })
}

/// Walks the trajectory forward and checks every update of `path` against
/// the local rules, including the tie rule and the recorded heights.
/// Returns a description of the first violation.
pub fn check_admissible(path: &BackwardsPath, traj: &Trajectory, log: &EventLog) -> Result<Option<String>> {
    let m = path.marginal;
    let mut config = traj.initial.clone();
    let mut moves = 0usize;
    let range = traj.event_range();
    for (k, (e, &swapped)) in log.events[range.clone()].iter().zip(traj.swapped()).enumerate() {
        if e.time > path.t {
            break;
        }
        if swapped {
            swap(&mut config, e.bond);
        }
        if e.time < path.t_end {
            continue;
        }
        let y = path.pos_at(e.time)?;
        let ym = path.pos_before(e.time)?;
        let at_path = e.direction == Direction::Right && e.bond == y;
        if !at_path {
            if ym != y {
                return Ok(Some(format!("move at event {} away from the path site {y}", range.start + k)));
            }
            continue;
        }
        let jumped = swapped && config.occupied(m, y) != config.occupied(m, y + 1);
        let left_ok = config.occupied(m, y) == 0;
        let right_ok = config.occupied(m, y + 1) == 1;
        let ok = if jumped {
            ym == y
        } else if ym == y + 1 {
            right_ok
                && !(left_ok && path.tie_rule == TieRule::Leftmost)
        } else if ym == y - 1 {
            left_ok && !(right_ok && path.tie_rule == TieRule::Rightmost)
        } else {
            false
        };
        if !ok {
            return Ok(Some(format!(
                "event {} at time {}: x(s) = {y}, x(s-) = {ym}, jumped = {jumped}",
                range.start + k,
                e.time
            )));
        }
        if ym != y {
            moves += 1;
        }
    }
    let recorded = path.steps.iter().filter(|s| s.kind != StepKind::Jump).count();
    if moves != recorded {
        return Ok(Some(format!("{recorded} recorded moves but {moves} admissible updates found")));
    }
    // heights against an independent forward replay
    let mut ev = Evolver::from_log_after(log, traj.t_start, vec![traj.initial.clone()], false)?;
    for s in path.steps.iter().rev() {
        // just below s: every event strictly before s
        let before = log.events[..s.event].last().map_or(traj.t_start, |e| e.time).max(traj.t_start);
        ev.advance_to(before)?;
        let h = ev.process(0).height(m, 0, s.to);
        if h != s.height {
            return Ok(Some(format!("height {} recorded at time {}, replay gives {h}", s.height, s.time)));
        }
    }
    ev.advance_to(path.t)?;
    if ev.process(0).height(m, 0, path.x) != path.height {
        return Ok(Some("height at the start point disagrees with the replay".into()));
    }
    Ok(None)
}
