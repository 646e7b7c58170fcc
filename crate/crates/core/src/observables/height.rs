use crate::error::{invalid, Error, Result};
use crate::harris::{Process, Trajectory};
use crate::lattice::Marginal;

/// Height function `h(j, t)` of one marginal over a contiguous site range,
/// anchored so that `h(0, t) = 2 N_t` with `N_t` the net current through
/// bond `(0, 1)` since the process started.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightProfile {
    pub t: f64,
    pub marginal: Marginal,
    pub j_lo: i64,
    pub values: Vec<i64>,
    pub n_first: i64,
    pub n_all: i64,
}

impl HeightProfile {
    /// Reads the profile of `p` at time `t` on `j_range`, which must lie in
    /// the observation window.
    pub fn from_process(p: &Process, m: Marginal, t: f64, j_range: (i64, i64)) -> Result<Self> {
        let w = p.window();
        if j_range.0 > j_range.1 {
            return Err(invalid("j_range", "empty interval"));
        }
        w.check_observed(j_range.0)?;
        w.check_observed(j_range.1)?;
        let c = p.currents();
        Ok(Self {
            t,
            marginal: m,
            j_lo: j_range.0,
            values: p.height_profile(m, 0, j_range.0, j_range.1),
            n_first: c.n_first,
            n_all: c.n_all,
        })
    }

    pub fn j_hi(&self) -> i64 {
        self.j_lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, j: i64) -> Option<i64> {
        if j < self.j_lo {
            return None;
        }
        self.values.get((j - self.j_lo) as usize).copied()
    }

    /// Net current of the profile's own marginal.
    pub fn current(&self) -> i64 {
        match self.marginal {
            Marginal::First => self.n_first,
            Marginal::All => self.n_all,
        }
    }
}

/// Height profile of a recorded trajectory at its final time.
pub fn height_profile(traj: &Trajectory, m: Marginal, j_range: (i64, i64)) -> Result<HeightProfile> {
    HeightProfile::from_process(traj.state(), m, traj.t, j_range)
}

/// KPZ-rescaled height at a characteristic point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledHeight {
    pub w: f64,
    /// Time in the units of the scaling, i.e. `(1 - q)` times the physical time.
    pub t: f64,
    pub value: f64,
    pub rho: f64,
    pub chi: f64,
    /// Lattice site at which the height was read.
    pub site: i64,
}

/// Rounds to the nearest integer with ties going toward negative infinity.
pub fn round_half_down(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

/// Site `(1 - 2ρ) t + 2 w χ^{1/3} t^{2/3}` on the lattice.
pub fn characteristic_site(rho: f64, w: f64, t: f64) -> i64 {
    let chi = rho * (1.0 - rho);
    round_half_down((1.0 - 2.0 * rho) * t + 2.0 * w * chi.cbrt() * t.powf(2.0 / 3.0))
}

/// Rescaled value for a known height `h` read at the characteristic site.
pub fn rescale_value(h: f64, rho: f64, w: f64, t: f64) -> f64 {
    let chi = rho * (1.0 - rho);
    let centre = (1.0 - 2.0 * chi) * t + 2.0 * w * (1.0 - 2.0 * rho) * chi.cbrt() * t.powf(2.0 / 3.0);
    (h - centre) / (-2.0 * chi.powf(2.0 / 3.0) * t.cbrt())
}

/// Rescales `h` at `w`. The profile is taken at physical time `h.t`; for
/// `q > 0` the scaling time is `(1 - q) h.t`.
pub fn rescaled_height(h: &HeightProfile, rho: f64, w: f64, q: f64) -> Result<RescaledHeight> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho", format!("{rho} is not in (0, 1)")));
    }
    crate::error::check_asymmetry(q)?;
    let t = (1.0 - q) * h.t;
    if !(t > 0.0) {
        return Err(invalid("t", format!("rescaling needs t > 0, got {t}")));
    }
    let site = characteristic_site(rho, w, t);
    let v = h.get(site).ok_or(Error::SiteOutOfRange {
        site,
        lo: h.j_lo,
        hi: h.j_hi(),
    })?;
    Ok(RescaledHeight {
        w,
        t,
        value: rescale_value(v as f64, rho, w, t),
        rho,
        chi: rho * (1.0 - rho),
        site,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harris::{evolve, generate_event_log, ClockEvent, Direction, EventLog};
    use crate::lattice::{make_window, Configuration, SpeciesLabel, Window};
    use crate::rng::KeyedStream;
    use proptest::prelude::*;

    fn profile(values: Vec<i64>, j_lo: i64, t: f64) -> HeightProfile {
        HeightProfile {
            t,
            marginal: Marginal::First,
            j_lo,
            values,
            n_first: 0,
            n_all: 0,
        }
    }

    #[test]
    fn empty_configuration_is_the_identity_line() {
        let w = make_window(10, 1.0).unwrap();
        let c = Configuration::filled(w, SpeciesLabel::Hole);
        let p = HeightProfile::from_process(&Process::new(c, false), Marginal::All, 0.0, (-10, 10)).unwrap();
        assert_eq!(p.values, (-10..=10).collect::<Vec<_>>());
    }

    #[test]
    fn step_is_a_wedge() {
        let w = make_window(6, 1.0).unwrap();
        let c = Configuration::step(w, 0);
        let p = HeightProfile::from_process(&Process::new(c, false), Marginal::First, 0.0, (-6, 6)).unwrap();
        assert_eq!(p.values, (-6i64..=6).map(|j| j.abs()).collect::<Vec<_>>());
    }

    #[test]
    fn one_jump_at_the_origin() {
        let w = Window::new(-4, 4, -4, 4, 0).unwrap();
        let log = EventLog {
            window: w,
            t_max: 1.0,
            q: 0.0,
            seed: 0,
            source: Default::default(),
            events: vec![ClockEvent {
                time: 0.5,
                bond: 0,
                direction: Direction::Right,
            }],
        };
        let c = Configuration::parse(w, "..1.1..1.").unwrap();
        let before = HeightProfile::from_process(&Process::new(c.clone(), false), Marginal::First, 0.0, (-4, 4)).unwrap();
        let after = height_profile(&evolve(&c, &log, 1.0).unwrap(), Marginal::First, (-4, 4)).unwrap();
        for j in -4..=4 {
            let d = after.get(j).unwrap() - before.get(j).unwrap();
            assert_eq!(d, if j == 0 { 2 } else { 0 });
        }
        assert_eq!(after.get(0), Some(2 * after.n_first));
    }

    #[test]
    fn range_must_be_observed() {
        let w = make_window(5, 1.0).unwrap();
        let p = Process::new(Configuration::filled(w, SpeciesLabel::Hole), false);
        assert!(HeightProfile::from_process(&p, Marginal::All, 0.0, (-6, 0)).is_err());
        assert!(HeightProfile::from_process(&p, Marginal::All, 0.0, (2, 1)).is_err());
    }

    #[test]
    fn rounding_ties_go_down() {
        assert_eq!(round_half_down(2.5), 2);
        assert_eq!(round_half_down(-2.5), -3);
        assert_eq!(round_half_down(2.51), 3);
        assert_eq!(round_half_down(-0.2), 0);
    }

    #[test]
    fn rescaled_examples() {
        // flat deterministic profile sits at the centring line
        let (rho, t) = (0.3, 64.0);
        let chi: f64 = rho * (1.0 - rho);
        let line = |j: i64| (1.0 - 2.0 * chi) * t + (1.0 - 2.0 * rho) * (j as f64 - (1.0 - 2.0 * rho) * t);
        let site = characteristic_site(rho, 0.0, t);
        assert!(rescale_value(line(site), rho, 0.0, t).abs() < 0.2);
        let exact = (1.0 - 2.0 * rho) * t;
        assert!(rescale_value(line(0) + (1.0 - 2.0 * rho) * exact, rho, 0.0, t).abs() < 1e-12);
        let shift = 2.0 * chi.powf(2.0 / 3.0) * t.cbrt();
        let base = rescale_value(10.0, rho, 0.7, t);
        assert!((rescale_value(10.0 + shift, rho, 0.7, t) - (base - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn half_density_example() {
        // (44 - 50) / (-2 (1/4)^{2/3} 100^{1/3}), evaluated with exp/ln
        let denom = -2.0 * (2.0f64.ln() * -4.0 / 3.0).exp() * (100.0f64.ln() / 3.0).exp();
        let oracle = -6.0 / denom;
        assert!((oracle - 1.6287).abs() < 5e-5);
        let p = profile((-5i64..=5).map(|j| 44 + j.abs()).collect(), -5, 100.0);
        let r = rescaled_height(&p, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(r.site, 0);
        assert!((r.value - oracle).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn asep_uses_scaled_time() {
        let p = profile(vec![44], 0, 200.0);
        let r = rescaled_height(&p, 0.5, 0.0, 0.5).unwrap();
        assert_eq!(r.t, 100.0);
        assert!((r.value - 1.6287).abs() < 5e-5);
        assert!(rescaled_height(&p, 0.3, 0.0, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn increments_and_conservation(seed in 0u64..10_000, rho in 0.05f64..0.95) {
            let w = make_window(12, 3.0).unwrap();
            let ks = KeyedStream::new(seed, 1);
            let c = Configuration::from_fn(w, |i| {
                let u = ks.uniform(i);
                if u < rho / 2.0 { SpeciesLabel::First } else if u < rho { SpeciesLabel::Second } else { SpeciesLabel::Hole }
            });
            let log = generate_event_log(&w, 3.0, 0.0, seed).unwrap();
            let tr = evolve(&c, &log, 3.0).unwrap();
            for m in [Marginal::First, Marginal::All] {
                let h0 = HeightProfile::from_process(&Process::new(c.clone(), false), m, 0.0, (-12, 12)).unwrap();
                let ht = height_profile(&tr, m, (-12, 12)).unwrap();
                prop_assert!(ht.values.windows(2).all(|p| (p[1] - p[0]).abs() == 1));
                prop_assert_eq!(ht.get(0).unwrap(), 2 * ht.current());
                for j in -12..12 {
                    let diff = ht.get(j).unwrap() - h0.get(j).unwrap();
                    prop_assert_eq!(diff, 2 * tr.state().net_crossings(m, j));
                }
            }
        }
    }
}
