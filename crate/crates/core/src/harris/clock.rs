//! Bond clocks and time-sorted event generation.
//!
//! Each bond `(i, i+1)` carries a RIGHT clock of rate 1 and a LEFT clock of
//! rate `q`. The k-th waiting time of a clock is a pure function of
//! `(seed, i, direction, k)`, so the events on a bond do not depend on the
//! window that contains it, nor on how generation is chunked.

use std::fmt;

use crate::error::{check_asymmetry, invalid, Result};
use crate::lattice::Window;
use crate::rng::{derive_seed, mix64, tags, to_unit, Stream};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Target number of events per generation slab.
const SLAB_EVENTS: f64 = 16384.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Direction {
    Right = 0,
    Left = 1,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Right => "R",
            Direction::Left => "L",
        })
    }
}

/// One jump attempt across bond `(bond, bond + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEvent {
    pub time: f64,
    pub bond: i64,
    pub direction: Direction,
}

impl ClockEvent {
    #[inline(always)]
    fn before(&self, other: &ClockEvent) -> bool {
        (self.time, self.bond, self.direction as u8) < (other.time, other.bond, other.direction as u8)
    }
}

struct BondClocks {
    rate: f64,
    keys: Vec<u64>,
    counters: Vec<u64>,
    next: Vec<f64>,
}

impl BondClocks {
    fn new(seed: u64, first_bond: i64, n: usize, rate: f64, tag: u64) -> Self {
        let keys: Vec<u64> = (0..n)
            .map(|k| derive_seed(seed, (first_bond + k as i64) as u64, tag))
            .collect();
        let mut clocks = Self {
            rate,
            keys,
            counters: vec![0; n],
            next: vec![0.0; n],
        };
        for b in 0..n {
            clocks.next[b] = clocks.gap(b);
        }
        clocks
    }

    #[inline(always)]
    fn gap(&mut self, b: usize) -> f64 {
        self.counters[b] += 1;
        let u = to_unit(mix64(self.keys[b].wrapping_add(self.counters[b].wrapping_mul(GAMMA))));
        -(1.0 - u).ln() / self.rate
    }

    fn fill(&mut self, first_bond: i64, dir: Direction, until: f64, out: &mut Vec<ClockEvent>) {
        for b in 0..self.keys.len() {
            let mut t = self.next[b];
            while t <= until {
                out.push(ClockEvent {
                    time: t,
                    bond: first_bond + b as i64,
                    direction: dir,
                });
                t += self.gap(b);
            }
            self.next[b] = t;
        }
    }
}

/// Streaming generator of the time-sorted event sequence on a window.
pub struct ClockGenerator {
    first_bond: i64,
    t_max: f64,
    slab: f64,
    cursor: f64,
    right: BondClocks,
    left: Option<BondClocks>,
    raw: Vec<ClockEvent>,
    counts: Vec<u32>,
}

impl ClockGenerator {
    pub fn new(window: &Window, t_max: f64, q: f64, seed: u64) -> Result<Self> {
        check_asymmetry(q)?;
        if !t_max.is_finite() || t_max < 0.0 {
            return Err(invalid("t_max", format!("{t_max} is not a finite nonnegative time")));
        }
        let n = window.num_bonds();
        let rate_total = (n as f64 * (1.0 + q)).max(1.0);
        let right = BondClocks::new(seed, window.lo, n, 1.0, tags::CLOCK_RIGHT);
        let left = (q > 0.0).then(|| BondClocks::new(seed, window.lo, n, q, tags::CLOCK_LEFT));
        Ok(Self {
            first_bond: window.lo,
            t_max,
            slab: SLAB_EVENTS / rate_total,
            cursor: 0.0,
            right,
            left,
            raw: Vec::new(),
            counts: Vec::new(),
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Appends the next slab of events, sorted by `(time, bond, direction)`.
    /// Returns false once the horizon has been exhausted.
    pub fn next_slab(&mut self, out: &mut Vec<ClockEvent>) -> bool {
        if self.cursor >= self.t_max {
            return false;
        }
        let end = (self.cursor + self.slab).min(self.t_max);
        let end = if self.t_max - end < 1e-9 * self.slab { self.t_max } else { end };
        self.raw.clear();
        self.right.fill(self.first_bond, Direction::Right, end, &mut self.raw);
        if let Some(left) = self.left.as_mut() {
            left.fill(self.first_bond, Direction::Left, end, &mut self.raw);
        }
        bucket_sort(&self.raw, self.cursor, end, &mut self.counts, out);
        self.cursor = end;
        true
    }
}

/// Sorts events with times in `(start, end]` into `out` by counting sort on
/// time buckets followed by insertion sort inside each bucket.
fn bucket_sort(raw: &[ClockEvent], start: f64, end: f64, counts: &mut Vec<u32>, out: &mut Vec<ClockEvent>) {
    let n = raw.len();
    if n == 0 {
        return;
    }
    let nb = n.next_power_of_two();
    let scale = nb as f64 / (end - start).max(f64::MIN_POSITIVE);
    let bucket = |t: f64| (((t - start) * scale) as usize).min(nb - 1);
    counts.clear();
    counts.resize(nb + 1, 0);
    for e in raw {
        counts[bucket(e.time) + 1] += 1;
    }
    for i in 0..nb {
        counts[i + 1] += counts[i];
    }
    let base = out.len();
    out.resize(
        base + n,
        ClockEvent {
            time: 0.0,
            bond: 0,
            direction: Direction::Right,
        },
    );
    let dst = &mut out[base..];
    let mut fill = counts[..nb].to_vec();
    for e in raw {
        let b = bucket(e.time);
        dst[fill[b] as usize] = *e;
        fill[b] += 1;
    }
    for b in 0..nb {
        let (lo, hi) = (counts[b] as usize, counts[b + 1] as usize);
        for i in lo + 1..hi {
            let mut j = i;
            while j > lo && dst[j].before(&dst[j - 1]) {
                dst.swap(j, j - 1);
                j -= 1;
            }
        }
    }
}

/// How the attempts of a log were generated.
///
/// `PerBond` logs come from independent keyed clocks, so the events on a bond
/// are the same in every window that contains it. `Uniformized` logs draw one
/// superposed Poisson stream and pick bond and direction uniformly per attempt;
/// same law, much cheaper, but tied to the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockSource {
    #[default]
    PerBond,
    Uniformized,
}

/// Fully materialised, time-sorted event log for a window and horizon.
#[derive(Debug, Clone)]
pub struct EventLog {
    pub window: Window,
    pub t_max: f64,
    pub q: f64,
    pub seed: u64,
    pub source: ClockSource,
    pub events: Vec<ClockEvent>,
}

impl EventLog {
    /// Index of the first event with time strictly greater than `t`.
    pub fn first_after(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time <= t)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Generates every jump attempt on `window` during `(0, t_max]`.
pub fn generate_event_log(window: &Window, t_max: f64, q: f64, seed: u64) -> Result<EventLog> {
    let mut gen = ClockGenerator::new(window, t_max, q, seed)?;
    let expected = window.num_bonds() as f64 * t_max * (1.0 + q);
    let mut events = Vec::with_capacity((expected * 1.01 + 64.0) as usize);
    while gen.next_slab(&mut events) {}
    Ok(EventLog {
        window: *window,
        t_max,
        q,
        seed,
        source: ClockSource::PerBond,
        events,
    })
}

/// Probability threshold for a LEFT attempt, on the 64-bit scale.
pub(crate) fn left_cut(q: f64) -> u64 {
    (q / (1.0 + q) * 18_446_744_073_709_551_616.0) as u64
}

/// Maps 64 random bits to a uniform bond index and a direction.
///
/// The integer part of `u * n / 2^64` is the bond; the fractional part, which
/// is uniform and independent of it up to `n / 2^64`, picks the direction.
#[inline(always)]
pub(crate) fn uniform_attempt(u: u64, n: u64, cut: u64) -> (usize, Direction) {
    let p = u as u128 * n as u128;
    let dir = if (p as u64) < cut {
        Direction::Left
    } else {
        Direction::Right
    };
    ((p >> 64) as usize, dir)
}

/// Generates a uniformized log: gaps are exponential with the total rate
/// `bonds * (1 + q)`, and each attempt picks its bond and direction uniformly.
pub fn generate_uniformized_log(window: &Window, t_max: f64, q: f64, seed: u64) -> Result<EventLog> {
    check_asymmetry(q)?;
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(invalid("t_max", format!("{t_max} is not a finite nonnegative time")));
    }
    let n = window.num_bonds() as u64;
    let mut events = Vec::new();
    if n > 0 {
        let rate = n as f64 * (1.0 + q);
        events.reserve((rate * t_max * 1.01 + 64.0) as usize);
        let mut gaps = Stream::new(seed, tags::UNIFORM_COUNTS);
        let mut picks = Stream::new(seed, tags::UNIFORM_ATTEMPTS);
        let cut = left_cut(q);
        let mut t = gaps.next_exp(rate);
        while t <= t_max {
            let (b, direction) = uniform_attempt(picks.next_u64(), n, cut);
            events.push(ClockEvent {
                time: t,
                bond: window.lo + b as i64,
                direction,
            });
            t += gaps.next_exp(rate);
        }
    }
    Ok(EventLog {
        window: *window,
        t_max,
        q,
        seed,
        source: ClockSource::Uniformized,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_window;

    #[test]
    fn empty_horizon_gives_empty_log() {
        let w = make_window(5, 0.0).unwrap();
        assert!(generate_event_log(&w, 0.0, 0.3, 1).unwrap().is_empty());
    }

    #[test]
    fn totally_asymmetric_has_no_left_events() {
        let w = make_window(5, 3.0).unwrap();
        let log = generate_event_log(&w, 3.0, 0.0, 9).unwrap();
        assert!(log.events.iter().all(|e| e.direction == Direction::Right));
    }

    #[test]
    fn rejects_bad_asymmetry() {
        let w = make_window(5, 1.0).unwrap();
        assert!(generate_event_log(&w, 1.0, 1.0, 1).is_err());
        assert!(generate_event_log(&w, 1.0, -0.1, 1).is_err());
        assert!(generate_event_log(&w, -1.0, 0.1, 1).is_err());
    }

    #[test]
    fn sorted_and_within_horizon() {
        let w = make_window(20, 4.0).unwrap();
        let log = generate_event_log(&w, 4.0, 0.4, 77).unwrap();
        for pair in log.events.windows(2) {
            assert!(pair[0].before(&pair[1]));
        }
        assert!(log.events.iter().all(|e| e.time > 0.0 && e.time <= 4.0));
        assert!(log.events.iter().all(|e| e.bond >= w.lo && e.bond < w.hi));
    }

    #[test]
    fn mean_event_count_matches_superposition() {
        // B bonds, horizon T: the count is Poisson with mean B T (1 + q).
        let w = make_window(8, 1.0).unwrap();
        let (t, q) = (2.0, 0.5);
        let mean = w.num_bonds() as f64 * t * (1.0 + q);
        let n = 1000;
        let total: usize = (0..n).map(|s| generate_event_log(&w, t, q, s).unwrap().len()).sum();
        let emp = total as f64 / n as f64;
        let se = (mean / n as f64).sqrt();
        assert!((emp - mean).abs() < 3.0 * se, "{emp} vs {mean} (se {se})");
    }

    #[test]
    fn bond_events_do_not_depend_on_window() {
        let small = make_window(5, 2.0).unwrap();
        let big = small.doubled_buffer().unwrap();
        let a = generate_event_log(&small, 2.0, 0.2, 3).unwrap();
        let b = generate_event_log(&big, 2.0, 0.2, 3).unwrap();
        let inside: Vec<_> = b
            .events
            .iter()
            .filter(|e| e.bond >= small.lo && e.bond < small.hi)
            .copied()
            .collect();
        assert_eq!(a.events, inside);
    }

    #[test]
    fn slab_size_does_not_change_the_log() {
        let w = make_window(30, 3.0).unwrap();
        let reference = generate_event_log(&w, 3.0, 0.1, 5).unwrap();
        let mut gen = ClockGenerator::new(&w, 3.0, 0.1, 5).unwrap();
        gen.slab = 0.01;
        let mut events = Vec::new();
        while gen.next_slab(&mut events) {}
        assert_eq!(reference.events, events);
    }

    #[test]
    fn uniformized_log_has_the_same_law_of_counts() {
        let w = make_window(8, 1.0).unwrap();
        let (t, q) = (2.0, 0.5);
        let mean = w.num_bonds() as f64 * t * (1.0 + q);
        let n = 1000;
        let logs: Vec<_> = (0..n).map(|s| generate_uniformized_log(&w, t, q, s).unwrap()).collect();
        let total: usize = logs.iter().map(|l| l.len()).sum();
        let left: usize = logs
            .iter()
            .map(|l| l.events.iter().filter(|e| e.direction == Direction::Left).count())
            .sum();
        let emp = total as f64 / n as f64;
        assert!((emp - mean).abs() < 3.0 * (mean / n as f64).sqrt(), "{emp} vs {mean}");
        let frac = left as f64 / total as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.01, "{frac}");
        for l in &logs {
            assert!(l.events.windows(2).all(|p| p[0].time < p[1].time));
            assert!(l.events.iter().all(|e| e.bond >= w.lo && e.bond < w.hi));
        }
    }

    #[test]
    fn uniform_attempt_covers_every_bond() {
        let n = 7u64;
        let mut hits = [0usize; 7];
        let mut s = Stream::new(1, 2);
        for _ in 0..70_000 {
            let (b, d) = uniform_attempt(s.next_u64(), n, 0);
            assert_eq!(d, Direction::Right);
            hits[b] += 1;
        }
        assert!(hits.iter().all(|&h| (h as f64 - 10_000.0).abs() < 500.0), "{hits:?}");
        assert_eq!(uniform_attempt(u64::MAX, n, 0).0, 6);
    }

    #[test]
    fn right_clock_gaps_are_unit_exponential() {
        // first three waiting times per bond; truncation at T = 40 is negligible
        let w = make_window(2000, 1.0).unwrap();
        let log = generate_event_log(&w, 40.0, 0.0, 11).unwrap();
        let mut by_bond: std::collections::HashMap<i64, Vec<f64>> = Default::default();
        for e in &log.events {
            by_bond.entry(e.bond).or_default().push(e.time);
        }
        let mut gaps = Vec::new();
        for times in by_bond.values() {
            let mut prev = 0.0;
            for &t in times.iter().take(3) {
                gaps.push(t - prev);
                prev = t;
            }
        }
        let n = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
