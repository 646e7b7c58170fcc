use crate::error::{check_two_species, invalid, Error, Result};
use crate::lattice::{Configuration, SpeciesLabel, Window};
use crate::rng::{derive_seed, tags, KeyedStream};
use crate::sampler::bernoulli::ArrivalServicePair;
use crate::sampler::queue::{build_queue, scan_queue, QueueState};

/// Start value of the upper copy used to detect coalescence.
const HIGH_START: u64 = 64;
/// Maximum number of burn-in doublings before giving up.
const MAX_DOUBLINGS: u32 = 8;

/// `max(200, ceil(50 / rho2))`.
pub fn default_burn_in(rho2: f64) -> u64 {
    200u64.max((50.0 / rho2).ceil() as u64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SamplerOptions {
    /// Overrides [`default_burn_in`].
    pub burn_in: Option<u64>,
    /// Doubles the burn-in, for self-checks.
    pub double_burn_in: bool,
}

impl SamplerOptions {
    fn burn_in(&self, rho2: f64) -> u64 {
        let b = self.burn_in.unwrap_or_else(|| default_burn_in(rho2));
        if self.double_burn_in {
            2 * b
        } else {
            b
        }
    }
}

fn labels_from_queue(pair: &ArrivalServicePair, qs: &QueueState) -> Configuration {
    let w = pair.window;
    Configuration::from_fn(w, |i| {
        let k = (i - w.lo) as usize;
        if qs.d[k] == 1 {
            SpeciesLabel::First
        } else if pair.s[k] == 1 {
            SpeciesLabel::Second
        } else {
            SpeciesLabel::Hole
        }
    })
}

/// Samples the arrival/service pair and the queue, doubling the burn-in
/// until copies started from 0 and from a large value coalesce before the
/// window is reached.
pub fn sample_queue(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    seed: u64,
    opts: SamplerOptions,
) -> Result<(ArrivalServicePair, QueueState)> {
    sample_queue_split(rho1, rho2, q, window, seed, seed, opts)
}

/// First-class occupation of a stationary sample that shares its service
/// line (hence its all-particle marginal) with the sample of `seed`, with
/// arrivals and marks from draw number `draw`. Draw 0 is the sample of
/// `seed` itself; other draws are conditionally independent given the
/// services.
pub fn first_class_given_services(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    seed: u64,
    draw: u64,
    opts: SamplerOptions,
) -> Result<Vec<u8>> {
    let arrival_seed = if draw == 0 { seed } else { derive_seed(seed, draw, tags::ARRIVAL_REDRAW) };
    Ok(sample_queue_split(rho1, rho2, q, window, arrival_seed, seed, opts)?.1.d)
}

fn sample_queue_split(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    seed: u64,
    service_seed: u64,
    opts: SamplerOptions,
) -> Result<(ArrivalServicePair, QueueState)> {
    check_two_species(rho1, rho2)?;
    crate::error::check_asymmetry(q)?;
    let mut burn = opts.burn_in(rho2);
    if burn == 0 {
        return Err(invalid("burn_in", "must be at least 1"));
    }
    let marks = KeyedStream::new(seed, tags::MARKS);
    for _ in 0..=MAX_DOUBLINGS {
        let pair = ArrivalServicePair::bernoulli_split(rho1, rho2, window, burn, seed, service_seed)?;
        let end = window.hi + burn as i64;
        let low = scan_queue(&pair, q, &marks, end, window.hi + 1, 0);
        let high = scan_queue(&pair, q, &marks, end, window.hi + 1, HIGH_START);
        if low == high {
            let qs = build_queue(&pair, q, seed, burn)?;
            return Ok((pair, qs));
        }
        burn *= 2;
    }
    Err(Error::UnstableQueue(format!(
        "queue copies did not coalesce within a burn-in of {burn} sites"
    )))
}

/// Sample of the translation-invariant stationary two-species measure.
pub fn sample_two_species(rho1: f64, rho2: f64, q: f64, window: &Window, seed: u64) -> Result<Configuration> {
    sample_two_species_with(rho1, rho2, q, window, seed, SamplerOptions::default())
}

pub fn sample_two_species_with(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    seed: u64,
    opts: SamplerOptions,
) -> Result<Configuration> {
    let (pair, qs) = sample_queue(rho1, rho2, q, window, seed, opts)?;
    Ok(labels_from_queue(&pair, &qs))
}

/// The same stationary law built on the mirror image: a sample of the
/// model with class order reversed (first class and holes swap roles, so
/// densities `(1 - rho1 - rho2, rho2)`) on the reflected window, reflected
/// back. Its first-class line is the reflected service line, so draws
/// `draw > 0` redraw the all-particle marginal given the first class.
pub fn sample_mirrored(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    seed: u64,
    draw: u64,
    opts: SamplerOptions,
) -> Result<Configuration> {
    check_two_species(rho1, rho2)?;
    let mirror = Window::new(-window.hi, -window.lo, -window.obs_hi, -window.obs_lo, window.buffer)?;
    let arrival_seed = if draw == 0 { seed } else { derive_seed(seed, draw, tags::ARRIVAL_REDRAW) };
    let (pair, qs) = sample_queue_split(1.0 - rho1 - rho2, rho2, q, &mirror, arrival_seed, seed, opts)?;
    let flipped = labels_from_queue(&pair, &qs);
    Ok(Configuration::from_fn(*window, |i| match flipped.get(-i) {
        SpeciesLabel::First => SpeciesLabel::Hole,
        SpeciesLabel::Hole => SpeciesLabel::First,
        SpeciesLabel::Second => SpeciesLabel::Second,
    }))
}

/// Hole-based construction: first class particles on the complement of a
/// Bernoulli(`1 - rho1`) line, and each point of an independent
/// Bernoulli(`1 - rho1 - rho2`) line claims the nearest unused point of the
/// first line at or to its right; claimed points are holes, the rest second
/// class. Scans left to right with the burn-in on the left.
pub fn sample_reflected(rho1: f64, rho2: f64, window: &Window, seed: u64) -> Result<Configuration> {
    check_two_species(rho1, rho2)?;
    let ka = KeyedStream::new(seed, tags::REFLECTED_ARRIVALS);
    let ks = KeyedStream::new(seed, tags::REFLECTED_SERVICES);
    let pa = 1.0 - rho1 - rho2;
    let ps = 1.0 - rho1;
    let step = |r: u64, i: i64| -> (u64, bool) {
        let r = r + ka.bernoulli(i, pa) as u64;
        if ks.bernoulli(i, ps) && r >= 1 {
            (r - 1, true)
        } else {
            (r, false)
        }
    };
    let mut burn = default_burn_in(rho2);
    for _ in 0..=MAX_DOUBLINGS {
        let start = window.lo - burn as i64;
        let (mut low, mut high) = (0u64, HIGH_START);
        for i in start..window.lo {
            low = step(low, i).0;
            high = step(high, i).0;
        }
        if low == high {
            let mut r = low;
            return Ok(Configuration::from_fn(*window, |i| {
                let (next, matched) = step(r, i);
                r = next;
                if !ks.bernoulli(i, ps) {
                    SpeciesLabel::First
                } else if matched {
                    SpeciesLabel::Hole
                } else {
                    SpeciesLabel::Second
                }
            }));
        }
        burn *= 2;
    }
    Err(Error::UnstableQueue("reflected queue did not coalesce".into()))
}

/// Queueing construction with caller-supplied arrival and service lines
/// covering `[window.lo, window.hi + burn_in]`.
pub fn sample_general_two_species(
    arrivals: &[u8],
    services: &[u8],
    window: &Window,
    burn_in: u64,
) -> Result<Configuration> {
    general_queue(arrivals, services, window, burn_in).map(|(p, qs)| labels_from_queue(&p, &qs))
}

/// As [`sample_general_two_species`] but also returns the pair and the queue.
pub fn general_queue(
    arrivals: &[u8],
    services: &[u8],
    window: &Window,
    burn_in: u64,
) -> Result<(ArrivalServicePair, QueueState)> {
    let pair = ArrivalServicePair::from_sequences(window, burn_in, arrivals.to_vec(), services.to_vec())?;
    let n = window.len();
    let a_margin: u64 = pair.a[n..].iter().map(|&x| x as u64).sum();
    let s_margin: u64 = pair.s[n..].iter().map(|&x| x as u64).sum();
    if s_margin <= a_margin {
        return Err(Error::UnstableQueue(format!(
            "{a_margin} arrivals against {s_margin} services on the burn-in margin"
        )));
    }
    let qs = build_queue(&pair, 0.0, 0, burn_in)?;
    Ok((pair, qs))
}

/// Deterministic flat two-species profile: `rho1 + rho2` occupation placed
/// by rounding, and every particle's class chosen by rounding with ratio
/// `rho1 / (rho1 + rho2)`. Both height profiles stay within 1 of straight lines.
pub fn flat_two_species(rho1: f64, rho2: f64, window: &Window) -> Result<Configuration> {
    check_two_species(rho1, rho2)?;
    let rho = rho1 + rho2;
    let ratio = rho1 / rho;
    let hit = |k: i64, r: f64| ((k + 1) as f64 * r).floor() - (k as f64 * r).floor() >= 1.0;
    Ok(Configuration::from_fn(*window, |i| {
        if !hit(i, rho) {
            SpeciesLabel::Hole
        } else {
            let k = (i as f64 * rho).floor() as i64;
            if hit(k, ratio) {
                SpeciesLabel::First
            } else {
                SpeciesLabel::Second
            }
        }
    }))
}
