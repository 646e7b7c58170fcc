use crate::error::{check_density, check_two_species, invalid, Result};
use crate::lattice::Window;
use crate::rng::{tags, KeyedStream};

/// I.i.d. Bernoulli(`rate`) occupation on every site of `window`.
///
/// Site `i` uses position `i` of a keyed stream, so overlapping windows
/// with the same seed agree where they overlap.
pub fn sample_bernoulli(rate: f64, window: &Window, seed: u64) -> Result<Vec<u8>> {
    check_density("rate", rate)?;
    let ks = KeyedStream::new(seed, tags::INITIAL);
    Ok((window.lo..=window.hi).map(|i| ks.bernoulli(i, rate) as u8).collect())
}

/// Arrival and service indicators on `[window.lo, window.hi + margin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalServicePair {
    pub window: Window,
    pub margin: u64,
    pub a: Vec<u8>,
    pub s: Vec<u8>,
    /// `(rho1, rho2)` when the sequences are Bernoulli with known rates.
    pub rates: Option<(f64, f64)>,
}

impl ArrivalServicePair {
    /// Independent Bernoulli arrivals (rate `rho1`) and services (rate `rho1 + rho2`).
    pub fn bernoulli(rho1: f64, rho2: f64, window: &Window, margin: u64, seed: u64) -> Result<Self> {
        Self::bernoulli_split(rho1, rho2, window, margin, seed, seed)
    }

    /// As [`ArrivalServicePair::bernoulli`] with separate seeds for the two lines.
    pub fn bernoulli_split(
        rho1: f64,
        rho2: f64,
        window: &Window,
        margin: u64,
        arrival_seed: u64,
        service_seed: u64,
    ) -> Result<Self> {
        check_two_species(rho1, rho2)?;
        let ka = KeyedStream::new(arrival_seed, tags::ARRIVALS);
        let ks = KeyedStream::new(service_seed, tags::SERVICES);
        let hi = window.hi + margin as i64;
        let a = (window.lo..=hi).map(|i| ka.bernoulli(i, rho1) as u8).collect();
        let s = (window.lo..=hi).map(|i| ks.bernoulli(i, rho1 + rho2) as u8).collect();
        Ok(Self {
            window: *window,
            margin,
            a,
            s,
            rates: Some((rho1, rho2)),
        })
    }

    /// Wraps caller-supplied sequences covering `[window.lo, window.hi + margin]`.
    pub fn from_sequences(window: &Window, margin: u64, a: Vec<u8>, s: Vec<u8>) -> Result<Self> {
        let n = window.len() + margin as usize;
        if a.len() != n || s.len() != n {
            return Err(invalid(
                "sequences",
                format!("expected length {n}, got a: {}, s: {}", a.len(), s.len()),
            ));
        }
        if a.iter().chain(&s).any(|&v| v > 1) {
            return Err(invalid("sequences", "entries must be 0 or 1"));
        }
        Ok(Self {
            window: *window,
            margin,
            a,
            s,
            rates: None,
        })
    }

    /// Last site covered.
    pub fn end(&self) -> i64 {
        self.window.hi + self.margin as i64
    }

    #[inline]
    pub fn a_at(&self, site: i64) -> u8 {
        self.a[(site - self.window.lo) as usize]
    }

    #[inline]
    pub fn s_at(&self, site: i64) -> u8 {
        self.s[(site - self.window.lo) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_window;

    #[test]
    fn law_of_large_numbers() {
        let w = make_window(500_000, 0.0).unwrap();
        for rate in [0.1, 0.5, 0.83] {
            let v = sample_bernoulli(rate, &w, 3).unwrap();
            let n = v.len() as f64;
            let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
            assert!((mean - rate).abs() < 3.0 * (rate * (1.0 - rate) / n).sqrt());
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let w = make_window(100_000, 0.0).unwrap();
        let a = sample_bernoulli(0.5, &w, 1).unwrap();
        assert_eq!(a, sample_bernoulli(0.5, &w, 1).unwrap());
        let b = sample_bernoulli(0.5, &w, 2).unwrap();
        assert_ne!(a, b);
        let n = a.len() as f64;
        let cov = a.iter().zip(&b).map(|(&x, &y)| (x as f64 - 0.5) * (y as f64 - 0.5)).sum::<f64>() / n;
        let corr = cov / 0.25;
        assert!(corr.abs() < 4.0 / n.sqrt(), "{corr}");
    }

    #[test]
    fn rejects_bad_rate() {
        let w = make_window(10, 0.0).unwrap();
        assert!(sample_bernoulli(0.0, &w, 1).is_err());
        assert!(sample_bernoulli(1.0, &w, 1).is_err());
        assert!(sample_bernoulli(f64::NAN, &w, 1).is_err());
    }
}
