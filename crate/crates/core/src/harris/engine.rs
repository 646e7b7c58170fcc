use crate::error::{invalid, Error, Result};
use rand_distr::{Distribution, Poisson};

use crate::error::check_asymmetry;
use crate::harris::clock::{left_cut, uniform_attempt, ClockEvent, ClockGenerator, Direction, EventLog};
use crate::rng::{tags, Stream};
use crate::lattice::{Configuration, Marginal, SpeciesLabel, Window};

/// Net particle currents. `n_*` count crossings of bond `(0, 1)`; `obs_*`
/// sum the net crossings over every bond inside the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CurrentCounters {
    pub n_first: i64,
    pub n_all: i64,
    pub obs_first: i64,
    pub obs_all: i64,
}

/// One evolving configuration together with its per-bond crossing counters.
#[derive(Debug, Clone)]
pub struct Process {
    config: Configuration,
    cross_first: Vec<i32>,
    cross_all: Vec<i32>,
    swaps: Option<Vec<bool>>,
}

impl Process {
    pub fn new(config: Configuration, record: bool) -> Self {
        let n = config.window().num_bonds();
        Self {
            config,
            cross_first: vec![0; n],
            cross_all: vec![0; n],
            swaps: record.then(Vec::new),
        }
    }

    #[inline(always)]
    fn apply(&mut self, idx: usize, dir: Direction) -> bool {
        let labels = self.config.labels_mut();
        let a = labels[idx];
        let b = labels[idx + 1];
        let swap = match dir {
            Direction::Right => a.outranks(b),
            Direction::Left => b.outranks(a),
        };
        if swap {
            labels[idx] = b;
            labels[idx + 1] = a;
            self.cross_first[idx] +=
                (a == SpeciesLabel::First) as i32 - (b == SpeciesLabel::First) as i32;
            self.cross_all[idx] +=
                (a != SpeciesLabel::Hole) as i32 - (b != SpeciesLabel::Hole) as i32;
        }
        if let Some(s) = self.swaps.as_mut() {
            s.push(swap);
        }
        swap
    }

    #[inline]
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn window(&self) -> &Window {
        self.config.window()
    }

    pub fn swaps(&self) -> Option<&[bool]> {
        self.swaps.as_deref()
    }

    fn cross(&self, m: Marginal) -> &[i32] {
        match m {
            Marginal::First => &self.cross_first,
            Marginal::All => &self.cross_all,
        }
    }

    /// Net rightward crossings of bond `(bond, bond + 1)` by `m`-particles
    /// since this process started.
    #[inline]
    pub fn net_crossings(&self, m: Marginal, bond: i64) -> i64 {
        let w = self.window();
        debug_assert!(bond >= w.lo && bond < w.hi);
        self.cross(m)[(bond - w.lo) as usize] as i64
    }

    /// Height relative to an origin: `h(origin + j, now) - h(origin, start)`.
    ///
    /// By conservation this is `2 J_origin + Σ_{origin < i <= origin + j} (1 - 2η(i))`
    /// (with the sign-reversed sum for negative `j`), where `J_origin` is the
    /// net current through bond `(origin, origin + 1)`.
    pub fn height(&self, m: Marginal, origin: i64, j: i64) -> i64 {
        let w = *self.window();
        let base = 2 * self.net_crossings(m, origin);
        let c = &self.config;
        let mut h = base;
        if j > 0 {
            for i in origin + 1..=origin + j {
                h += 1 - 2 * c.occupied(m, i) as i64;
            }
        } else {
            for i in (origin + j + 1..=origin).rev() {
                h -= 1 - 2 * c.occupied(m, i) as i64;
            }
        }
        debug_assert!(w.contains(origin + j));
        h
    }

    /// Heights `h(origin + j) - h(origin, start)` for consecutive `j` in `[j_lo, j_hi]`.
    pub fn height_profile(&self, m: Marginal, origin: i64, j_lo: i64, j_hi: i64) -> Vec<i64> {
        let mut out = Vec::with_capacity((j_hi - j_lo + 1).max(0) as usize);
        if j_hi < j_lo {
            return out;
        }
        let mut h = self.height(m, origin, j_lo);
        out.push(h);
        for j in j_lo + 1..=j_hi {
            h += 1 - 2 * self.config.occupied(m, origin + j) as i64;
            out.push(h);
        }
        out
    }

    pub fn currents(&self) -> CurrentCounters {
        let w = self.window();
        let at0 = |v: &[i32]| {
            if w.lo <= 0 && 0 < w.hi {
                v[(0 - w.lo) as usize] as i64
            } else {
                0
            }
        };
        let obs = |v: &[i32]| -> i64 {
            let a = (w.obs_lo - w.lo) as usize;
            let b = (w.obs_hi - w.lo) as usize;
            v[a..b].iter().map(|&x| x as i64).sum()
        };
        CurrentCounters {
            n_first: at0(&self.cross_first),
            n_all: at0(&self.cross_all),
            obs_first: obs(&self.cross_first),
            obs_all: obs(&self.cross_all),
        }
    }
}

/// Inner loop used by a uniformized evolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// Right attempts only; requires `q = 0`.
    Tasep,
    /// General loop that also decodes the direction of each attempt.
    Asep,
}

enum Feed<'a> {
    Log {
        events: &'a [ClockEvent],
        pos: usize,
    },
    Stream {
        gen: Box<ClockGenerator>,
        buf: Vec<ClockEvent>,
        pos: usize,
    },
    Uniform {
        counts: Stream,
        picks: Stream,
        bonds: u64,
        cut: u64,
        rate: f64,
        kind: EngineKind,
    },
}

/// Drives one or more processes with a shared sequence of clock events
/// (basic coupling).
pub struct Evolver<'a> {
    window: Window,
    t_max: f64,
    time: f64,
    start_index: usize,
    processed: usize,
    feed: Feed<'a>,
    procs: Vec<Process>,
}

impl<'a> Evolver<'a> {
    /// Replays a stored log from time 0.
    pub fn from_log(log: &'a EventLog, configs: Vec<Configuration>, record: bool) -> Result<Self> {
        Self::from_log_after(log, 0.0, configs, record)
    }

    /// Replays the events of `log` with times strictly after `start`.
    pub fn from_log_after(log: &'a EventLog, start: f64, configs: Vec<Configuration>, record: bool) -> Result<Self> {
        check_configs(&log.window, &configs)?;
        if !(0.0..=log.t_max).contains(&start) {
            return Err(Error::TimeOutOfRange {
                requested: start,
                horizon: log.t_max,
            });
        }
        let pos = log.first_after(start);
        Ok(Self {
            window: log.window,
            t_max: log.t_max,
            time: start,
            start_index: pos,
            processed: 0,
            feed: Feed::Log {
                events: &log.events,
                pos,
            },
            procs: configs.into_iter().map(|c| Process::new(c, record)).collect(),
        })
    }

    /// Generates clock events on the fly without storing them.
    pub fn streaming(window: &Window, t_max: f64, q: f64, seed: u64, configs: Vec<Configuration>) -> Result<Evolver<'static>> {
        check_configs(window, &configs)?;
        let gen = ClockGenerator::new(window, t_max, q, seed)?;
        Ok(Evolver {
            window: *window,
            t_max,
            time: 0.0,
            start_index: 0,
            processed: 0,
            feed: Feed::Stream {
                gen: Box::new(gen),
                buf: Vec::new(),
                pos: 0,
            },
            procs: configs.into_iter().map(|c| Process::new(c, false)).collect(),
        })
    }

    /// Uniformized dynamics: the number of attempts in `(s, t]` is Poisson
    /// with mean `bonds * (1 + q) * (t - s)` and each attempt picks a bond and
    /// a direction uniformly. Event times are never materialised, which makes
    /// this the fastest way to sample the state at fixed times.
    pub fn uniformized(
        window: &Window,
        t_max: f64,
        q: f64,
        seed: u64,
        configs: Vec<Configuration>,
        kind: EngineKind,
    ) -> Result<Evolver<'static>> {
        check_asymmetry(q)?;
        if kind == EngineKind::Tasep && q != 0.0 {
            return Err(invalid("q", format!("the TASEP loop needs q = 0, got {q}")));
        }
        if !t_max.is_finite() || t_max < 0.0 {
            return Err(invalid("t_max", format!("{t_max} is not a finite nonnegative time")));
        }
        check_configs(window, &configs)?;
        let bonds = window.num_bonds() as u64;
        Ok(Evolver {
            window: *window,
            t_max,
            time: 0.0,
            start_index: 0,
            processed: 0,
            feed: Feed::Uniform {
                counts: Stream::new(seed, tags::UNIFORM_COUNTS),
                picks: Stream::new(seed, tags::UNIFORM_ATTEMPTS),
                bonds,
                cut: left_cut(q),
                rate: bonds as f64 * (1.0 + q),
                kind,
            },
            procs: configs.into_iter().map(|c| Process::new(c, false)).collect(),
        })
    }

    fn advance_uniform(&mut self, t: f64) {
        let Feed::Uniform {
            counts,
            picks,
            bonds,
            cut,
            rate,
            kind,
        } = &mut self.feed
        else {
            unreachable!()
        };
        let mean = *rate * (t - self.time);
        if mean <= 0.0 || *bonds == 0 {
            return;
        }
        let n = Poisson::new(mean).map(|d| d.sample(counts) as u64).unwrap_or(0);
        let (bonds, cut) = (*bonds, *cut);
        let procs = &mut self.procs;
        match (*kind, procs.len()) {
            (EngineKind::Tasep, 1) => {
                let p = &mut procs[0];
                for _ in 0..n {
                    let idx = ((picks.next_u64() as u128 * bonds as u128) >> 64) as usize;
                    p.apply(idx, Direction::Right);
                }
            }
            (EngineKind::Asep, 1) => {
                let p = &mut procs[0];
                for _ in 0..n {
                    let (idx, dir) = uniform_attempt(picks.next_u64(), bonds, cut);
                    p.apply(idx, dir);
                }
            }
            _ => {
                for _ in 0..n {
                    let (idx, dir) = uniform_attempt(picks.next_u64(), bonds, cut);
                    for p in procs.iter_mut() {
                        p.apply(idx, dir);
                    }
                }
            }
        }
        self.processed += n as usize;
    }

    /// Applies every event with time in `(now, t]`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t > self.t_max || t.is_nan() {
            return Err(Error::TimeOutOfRange {
                requested: t,
                horizon: self.t_max,
            });
        }
        if t < self.time {
            return Err(invalid("t", format!("cannot go back from {} to {t}", self.time)));
        }
        if matches!(self.feed, Feed::Uniform { .. }) {
            self.advance_uniform(t);
            self.time = t;
            return Ok(());
        }
        let lo = self.window.lo;
        let procs = &mut self.procs;
        loop {
            let (events, pos): (&[ClockEvent], &mut usize) = match &mut self.feed {
                Feed::Log { events, pos } => (events, pos),
                Feed::Stream { buf, pos, .. } => (buf.as_slice(), pos),
                Feed::Uniform { .. } => unreachable!(),
            };
            let start = *pos;
            let mut k = start;
            if procs.len() == 1 {
                let p = &mut procs[0];
                while k < events.len() {
                    let e = events[k];
                    if e.time > t {
                        break;
                    }
                    p.apply((e.bond - lo) as usize, e.direction);
                    k += 1;
                }
            } else {
                while k < events.len() {
                    let e = events[k];
                    if e.time > t {
                        break;
                    }
                    let idx = (e.bond - lo) as usize;
                    for p in procs.iter_mut() {
                        p.apply(idx, e.direction);
                    }
                    k += 1;
                }
            }
            *pos = k;
            self.processed += k - start;
            if k < events.len() {
                break;
            }
            match &mut self.feed {
                Feed::Log { .. } | Feed::Uniform { .. } => break,
                Feed::Stream { gen, buf, pos } => {
                    buf.clear();
                    *pos = 0;
                    if !gen.next_slab(buf) {
                        break;
                    }
                }
            }
        }
        self.time = t;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Number of events applied so far.
    pub fn processed(&self) -> usize {
        self.processed
    }

    /// Index in the log of the first event this evolver applied.
    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn processes(&self) -> &[Process] {
        &self.procs
    }

    pub fn process(&self, i: usize) -> &Process {
        &self.procs[i]
    }

    pub fn into_processes(self) -> Vec<Process> {
        self.procs
    }
}

fn check_configs(window: &Window, configs: &[Configuration]) -> Result<()> {
    for c in configs {
        let cw = c.window();
        if cw != window {
            return Err(Error::WindowMismatch {
                config_lo: cw.lo,
                config_hi: cw.hi,
                log_lo: window.lo,
                log_hi: window.hi,
            });
        }
    }
    Ok(())
}

/// Recorded evolution of one configuration along a stored log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Configuration,
    /// Time of `initial`.
    pub t_start: f64,
    pub t: f64,
    pub currents: CurrentCounters,
    start_index: usize,
    state: Process,
}

impl Trajectory {
    pub fn final_config(&self) -> &Configuration {
        self.state.config()
    }

    /// Final state including crossing counters.
    pub fn state(&self) -> &Process {
        &self.state
    }

    /// Swap flags, one per applied event, aligned with `log.events[start_index()..]`.
    pub fn swapped(&self) -> &[bool] {
        self.state.swaps().unwrap_or(&[])
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// Range of log indices covered by this trajectory.
    pub fn event_range(&self) -> std::ops::Range<usize> {
        self.start_index..self.start_index + self.swapped().len()
    }

    /// `(time, bond, direction, swapped)` for every applied event.
    pub fn effects<'l>(&'l self, log: &'l EventLog) -> impl Iterator<Item = (f64, i64, Direction, bool)> + 'l {
        log.events[self.event_range()]
            .iter()
            .zip(self.swapped())
            .map(|(e, &s)| (e.time, e.bond, e.direction, s))
    }

    /// Replays the effects forward from the initial configuration.
    pub fn replay(&self, log: &EventLog) -> Configuration {
        let mut c = self.initial.clone();
        let lo = c.window().lo;
        for (_, bond, _, s) in self.effects(log) {
            if s {
                c.labels_mut().swap((bond - lo) as usize, (bond - lo) as usize + 1);
            }
        }
        c
    }

    /// Line-oriented dump `time,bond,direction,swapped`.
    pub fn dump(&self, log: &EventLog) -> String {
        let mut out = String::from("time,bond,direction,swapped\n");
        for (t, b, d, s) in self.effects(log) {
            out.push_str(&format!("{t:.9},{b},{d},{}\n", s as u8));
        }
        out
    }
}

/// Evolves `config` along `log` up to time `t`, recording every effect.
pub fn evolve(config: &Configuration, log: &EventLog, t: f64) -> Result<Trajectory> {
    evolve_coupled(std::slice::from_ref(config), log, t).map(|mut v| v.pop().unwrap())
}

/// Evolves `config` along the events of `log` in `(start, t]`.
pub fn evolve_from(config: &Configuration, log: &EventLog, start: f64, t: f64) -> Result<Trajectory> {
    let mut ev = Evolver::from_log_after(log, start, vec![config.clone()], true)?;
    ev.advance_to(t)?;
    let start_index = ev.start_index();
    let state = ev.into_processes().pop().unwrap();
    Ok(Trajectory {
        initial: config.clone(),
        t_start: start,
        t,
        currents: state.currents(),
        start_index,
        state,
    })
}

/// Evolves several configurations with the same clocks.
pub fn evolve_coupled(configs: &[Configuration], log: &EventLog, t: f64) -> Result<Vec<Trajectory>> {
    let mut ev = Evolver::from_log(log, configs.to_vec(), true)?;
    ev.advance_to(t)?;
    let start_index = ev.start_index();
    Ok(configs
        .iter()
        .zip(ev.into_processes())
        .map(|(c, state)| Trajectory {
            initial: c.clone(),
            t_start: 0.0,
            t,
            currents: state.currents(),
            start_index,
            state,
        })
        .collect())
}
