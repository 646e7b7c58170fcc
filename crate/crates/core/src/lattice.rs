//! Site windows, species-labelled configurations and marginal projections.
//!
//! Processes on ℤ are approximated on a finite window `[lo, hi]` with closed
//! boundaries. Observables are only read inside `[obs_lo, obs_hi]`, which sits
//! at least `buffer` sites away from either edge.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Species label of a site. The numeric value orders priority: a smaller
/// value outranks a larger one, and `Hole` stands in for `+∞`.
#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeciesLabel {
    First = 1,
    Second = 2,
    Hole = 3,
}

impl SpeciesLabel {
    /// True when `self` has strictly higher priority than `other`.
    #[inline(always)]
    pub fn outranks(self, other: SpeciesLabel) -> bool {
        (self as u8) < (other as u8)
    }

    pub fn to_char(self) -> char {
        match self {
            SpeciesLabel::First => '1',
            SpeciesLabel::Second => '2',
            SpeciesLabel::Hole => '.',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '1' => Some(SpeciesLabel::First),
            '2' => Some(SpeciesLabel::Second),
            '.' | '0' => Some(SpeciesLabel::Hole),
            _ => None,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(SpeciesLabel::First),
            2 => Some(SpeciesLabel::Second),
            3 => Some(SpeciesLabel::Hole),
            _ => None,
        }
    }
}

/// The two marginal projections used throughout: first-class particles, and
/// all particles (first or second class).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marginal {
    First,
    All,
}

impl Marginal {
    #[inline(always)]
    pub fn contains(self, label: SpeciesLabel) -> bool {
        match self {
            Marginal::First => label == SpeciesLabel::First,
            Marginal::All => label != SpeciesLabel::Hole,
        }
    }

    pub fn classes(self) -> &'static [SpeciesLabel] {
        match self {
            Marginal::First => &[SpeciesLabel::First],
            Marginal::All => &[SpeciesLabel::First, SpeciesLabel::Second],
        }
    }
}

/// Finite window `[lo, hi]` with an observation sub-window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    pub obs_lo: i64,
    pub obs_hi: i64,
    pub buffer: u64,
}

/// Largest window length accepted; keeps all site arithmetic far from overflow.
const MAX_LEN: i64 = 1 << 40;

impl Window {
    pub fn new(lo: i64, hi: i64, obs_lo: i64, obs_hi: i64, buffer: u64) -> Result<Self> {
        if !(lo <= obs_lo && obs_lo <= obs_hi && obs_hi <= hi) {
            return Err(Error::Sizing(format!(
                "expected lo <= obs_lo <= obs_hi <= hi, got {lo}, {obs_lo}, {obs_hi}, {hi}"
            )));
        }
        let b = i64::try_from(buffer).map_err(|_| Error::Sizing("buffer too large".into()))?;
        let left = obs_lo.checked_sub(lo);
        let right = hi.checked_sub(obs_hi);
        let len = hi.checked_sub(lo).and_then(|d| d.checked_add(1));
        match (left, right, len) {
            (Some(l), Some(r), Some(n)) if n <= MAX_LEN => {
                if l < b || r < b {
                    return Err(Error::Sizing(format!(
                        "margins {l} and {r} must both be at least the buffer {b}"
                    )));
                }
            }
            _ => return Err(Error::Sizing("window length overflows".into())),
        }
        Ok(Self {
            lo,
            hi,
            obs_lo,
            obs_hi,
            buffer,
        })
    }

    /// Number of sites.
    #[inline]
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of bonds `(i, i+1)` with both ends in the window.
    #[inline]
    pub fn num_bonds(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    #[inline(always)]
    pub fn contains(&self, site: i64) -> bool {
        self.lo <= site && site <= self.hi
    }

    #[inline(always)]
    pub fn in_observation(&self, site: i64) -> bool {
        self.obs_lo <= site && site <= self.obs_hi
    }

    /// Vector index of `site`. Caller must ensure `contains(site)`.
    #[inline(always)]
    pub fn index(&self, site: i64) -> usize {
        debug_assert!(self.contains(site));
        (site - self.lo) as usize
    }

    #[inline(always)]
    pub fn site(&self, index: usize) -> i64 {
        self.lo + index as i64
    }

    pub fn check_site(&self, site: i64) -> Result<usize> {
        if self.contains(site) {
            Ok(self.index(site))
        } else {
            Err(Error::SiteOutOfRange {
                site,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn check_observed(&self, site: i64) -> Result<()> {
        if self.in_observation(site) {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                site,
                lo: self.obs_lo,
                hi: self.obs_hi,
            })
        }
    }

    /// Same observation region with twice the margin on each side.
    pub fn doubled_buffer(&self) -> Result<Window> {
        let extra_l = self.obs_lo - self.lo;
        let extra_r = self.hi - self.obs_hi;
        let lo = self
            .obs_lo
            .checked_sub(2 * extra_l)
            .ok_or_else(|| Error::Sizing("doubled window overflows".into()))?;
        let hi = self
            .obs_hi
            .checked_add(2 * extra_r)
            .ok_or_else(|| Error::Sizing("doubled window overflows".into()))?;
        Window::new(lo, hi, self.obs_lo, self.obs_hi, self.buffer.saturating_mul(2))
    }
}

/// Margin required for a run up to time `t_max`: `ceil(5 t + 10 sqrt(t) + 10)`.
pub fn buffer_for(t_max: f64) -> Result<u64> {
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(invalid("t_max", format!("{t_max} is not a finite nonnegative time")));
    }
    let b = (5.0 * t_max + 10.0 * t_max.sqrt() + 10.0).ceil();
    if b >= MAX_LEN as f64 {
        return Err(Error::Sizing(format!("buffer {b} exceeds the supported range")));
    }
    Ok(b as u64)
}

/// Window centred at 0 with observation region `[-obs_halfwidth, obs_halfwidth]`
/// and the standard buffer for `t_max`.
pub fn make_window(obs_halfwidth: u64, t_max: f64) -> Result<Window> {
    if obs_halfwidth == 0 {
        return Err(invalid("obs_halfwidth", "must be at least 1"));
    }
    let buffer = buffer_for(t_max)?;
    let half = obs_halfwidth
        .checked_add(buffer)
        .filter(|&h| h < (MAX_LEN / 2) as u64)
        .ok_or_else(|| Error::Sizing("window half-width overflows".into()))? as i64;
    let obs = obs_halfwidth as i64;
    Window::new(-half, half, -obs, obs, buffer)
}

/// Species-labelled configuration on a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    window: Window,
    labels: Vec<SpeciesLabel>,
}

impl Configuration {
    pub fn new(window: Window, labels: Vec<SpeciesLabel>) -> Result<Self> {
        if labels.len() != window.len() {
            return Err(invalid(
                "labels",
                format!("length {} does not match window length {}", labels.len(), window.len()),
            ));
        }
        Ok(Self { window, labels })
    }

    pub fn filled(window: Window, label: SpeciesLabel) -> Self {
        Self {
            window,
            labels: vec![label; window.len()],
        }
    }

    pub fn from_fn(window: Window, mut f: impl FnMut(i64) -> SpeciesLabel) -> Self {
        let labels = (window.lo..=window.hi).map(&mut f).collect();
        Self { window, labels }
    }

    /// Step initial condition centred at `y`: first-class particles on sites `<= y`.
    pub fn step(window: Window, y: i64) -> Self {
        Self::from_fn(window, |i| {
            if i <= y {
                SpeciesLabel::First
            } else {
                SpeciesLabel::Hole
            }
        })
    }

    /// Parses one character per site (`1`, `2`, `.`).
    pub fn parse(window: Window, text: &str) -> Result<Self> {
        let labels = text
            .chars()
            .map(|c| SpeciesLabel::from_char(c).ok_or_else(|| invalid("labels", format!("bad character {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(window, labels)
    }

    #[inline]
    pub fn window(&self) -> &Window {
        &self.window
    }

    #[inline]
    pub fn labels(&self) -> &[SpeciesLabel] {
        &self.labels
    }

    #[inline]
    pub(crate) fn labels_mut(&mut self) -> &mut [SpeciesLabel] {
        &mut self.labels
    }

    #[inline(always)]
    pub fn get(&self, site: i64) -> SpeciesLabel {
        self.labels[self.window.index(site)]
    }

    pub fn set(&mut self, site: i64, label: SpeciesLabel) -> Result<()> {
        let idx = self.window.check_site(site)?;
        self.labels[idx] = label;
        Ok(())
    }

    pub fn count(&self, label: SpeciesLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Marginal occupation `1{label in m}` at `site`.
    #[inline(always)]
    pub fn occupied(&self, m: Marginal, site: i64) -> u8 {
        m.contains(self.get(site)) as u8
    }

    pub fn project(&self, m: Marginal) -> BinaryConfiguration {
        BinaryConfiguration {
            window: self.window,
            occupied: self.labels.iter().map(|&l| m.contains(l) as u8).collect(),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// 0/1 occupation sequence on a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryConfiguration {
    window: Window,
    occupied: Vec<u8>,
}

impl BinaryConfiguration {
    pub fn new(window: Window, occupied: Vec<u8>) -> Result<Self> {
        if occupied.len() != window.len() {
            return Err(invalid(
                "occupied",
                format!("length {} does not match window length {}", occupied.len(), window.len()),
            ));
        }
        if occupied.iter().any(|&v| v > 1) {
            return Err(invalid("occupied", "values must be 0 or 1"));
        }
        Ok(Self { window, occupied })
    }

    #[inline]
    pub fn window(&self) -> &Window {
        &self.window
    }

    #[inline]
    pub fn values(&self) -> &[u8] {
        &self.occupied
    }

    #[inline(always)]
    pub fn get(&self, site: i64) -> u8 {
        self.occupied[self.window.index(site)]
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().map(|&v| v as usize).sum()
    }

    /// Embeds as a single-species configuration (occupied sites become first class).
    pub fn to_configuration(&self) -> Configuration {
        Configuration {
            window: self.window,
            labels: self
                .occupied
                .iter()
                .map(|&v| if v == 1 { SpeciesLabel::First } else { SpeciesLabel::Hole })
                .collect(),
        }
    }
}

/// Projects onto the indicator of `classes`, which must be a subset of
/// `{First, Second}`.
pub fn marginal(config: &Configuration, classes: &[SpeciesLabel]) -> Result<BinaryConfiguration> {
    if classes.contains(&SpeciesLabel::Hole) {
        return Err(invalid("classes", "holes cannot be selected as a particle class"));
    }
    let mut mask = [false; 4];
    for &c in classes {
        mask[c as usize] = true;
    }
    Ok(BinaryConfiguration {
        window: config.window,
        occupied: config.labels.iter().map(|&l| mask[l as usize] as u8).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SpeciesLabel::*;

    fn tiny(n: i64) -> Window {
        Window::new(0, n - 1, 0, n - 1, 0).unwrap()
    }

    #[test]
    fn make_window_examples() {
        let w = make_window(10, 0.0).unwrap();
        assert_eq!((w.lo, w.hi, w.buffer), (-20, 20, 10));
        let w = make_window(50, 20.0).unwrap();
        assert_eq!((w.lo, w.hi, w.buffer), (-205, 205, 155));
        let w = make_window(1, 1.0).unwrap();
        assert_eq!((w.lo, w.hi, w.buffer), (-26, 26, 25));
        assert_eq!((w.obs_lo, w.obs_hi), (-1, 1));
    }

    #[test]
    fn make_window_rejects_bad_input() {
        assert!(make_window(0, 1.0).is_err());
        assert!(make_window(5, f64::NAN).is_err());
        assert!(make_window(5, -1.0).is_err());
        assert!(matches!(make_window(u64::MAX, 1.0), Err(Error::Sizing(_))));
        assert!(matches!(make_window(1, 1e300), Err(Error::Sizing(_))));
    }

    #[test]
    fn doubled_buffer_keeps_observation() {
        let w = make_window(10, 4.0).unwrap();
        let d = w.doubled_buffer().unwrap();
        assert_eq!((d.obs_lo, d.obs_hi), (w.obs_lo, w.obs_hi));
        assert_eq!(d.obs_lo - d.lo, 2 * (w.obs_lo - w.lo));
    }

    #[test]
    fn marginal_examples() {
        let w = tiny(3);
        let holes = Configuration::filled(w, Hole);
        assert_eq!(marginal(&holes, &[First]).unwrap().values(), &[0, 0, 0]);
        let c = Configuration::new(w, vec![First, Second, Hole]).unwrap();
        assert_eq!(marginal(&c, &[First, Second]).unwrap().values(), &[1, 1, 0]);
        let c = Configuration::new(w, vec![Second, First, Second]).unwrap();
        assert_eq!(marginal(&c, &[First]).unwrap().values(), &[0, 1, 0]);
        assert!(marginal(&c, &[Hole]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let w = tiny(5);
        let c = Configuration::parse(w, "12..1").unwrap();
        assert_eq!(c.to_string(), "12..1");
        assert!(Configuration::parse(w, "12.x1").is_err());
        assert!(Configuration::parse(w, "12").is_err());
    }

    #[test]
    fn priority_order() {
        assert!(First.outranks(Second));
        assert!(Second.outranks(Hole));
        assert!(First.outranks(Hole));
        assert!(!Hole.outranks(Hole));
        assert!(!Second.outranks(First));
    }

    fn label() -> impl Strategy<Value = SpeciesLabel> {
        prop_oneof![Just(First), Just(Second), Just(Hole)]
    }

    proptest! {
        #[test]
        fn first_marginal_below_all(labels in prop::collection::vec(label(), 1..64)) {
            let w = tiny(labels.len() as i64);
            let c = Configuration::new(w, labels).unwrap();
            let f = c.project(Marginal::First);
            let a = c.project(Marginal::All);
            for (x, y) in f.values().iter().zip(a.values()) {
                prop_assert!(x <= y);
            }
        }

        #[test]
        fn counts_match_marginal_sums(labels in prop::collection::vec(label(), 1..64)) {
            let w = tiny(labels.len() as i64);
            let c = Configuration::new(w, labels).unwrap();
            prop_assert_eq!(c.count(First), marginal(&c, &[First]).unwrap().count());
            prop_assert_eq!(c.count(Second), marginal(&c, &[Second]).unwrap().count());
            prop_assert_eq!(
                c.count(First) + c.count(Second),
                c.project(Marginal::All).count()
            );
        }

        #[test]
        fn buffer_rule_bounds(t in 0.0f64..1e6) {
            let b = buffer_for(t).unwrap() as f64;
            prop_assert!(b >= 5.0 * t + 10.0 * t.sqrt() + 10.0);
            prop_assert!(b < 5.0 * t + 10.0 * t.sqrt() + 11.0);
        }
    }
}
