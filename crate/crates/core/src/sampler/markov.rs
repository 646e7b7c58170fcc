use crate::error::{invalid, Result};
use crate::lattice::Window;
use crate::rng::{tags, Stream};

/// Stationary two-state Markov chain with density `rho` and correlation
/// parameter `alpha`; the lag-one autocorrelation is `2 alpha - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovArrivalSpec {
    pub rho: f64,
    pub alpha: f64,
}

impl MarkovArrivalSpec {
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", format!("{rho} is not in (0,1)")));
        }
        if !(alpha >= 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("{alpha} is not in [0,1)")));
        }
        let up = 2.0 * rho * (1.0 - alpha);
        let down = 2.0 * (1.0 - rho) * (1.0 - alpha);
        if up > 1.0 {
            return Err(invalid("alpha", format!("P(0 -> 1) = 2 rho (1 - alpha) = {up} exceeds 1")));
        }
        if down > 1.0 {
            return Err(invalid(
                "alpha",
                format!("P(1 -> 0) = 2 (1 - rho) (1 - alpha) = {down} exceeds 1"),
            ));
        }
        Ok(Self { rho, alpha })
    }

    /// Rows `[P(0->0), P(0->1)]`, `[P(1->0), P(1->1)]`.
    pub fn transition(&self) -> [[f64; 2]; 2] {
        let up = 2.0 * self.rho * (1.0 - self.alpha);
        let down = 2.0 * (1.0 - self.rho) * (1.0 - self.alpha);
        [[1.0 - up, up], [down, 1.0 - down]]
    }

    /// Second eigenvalue of the transition matrix.
    pub fn lag_one_correlation(&self) -> f64 {
        2.0 * self.alpha - 1.0
    }

    /// Diffusion coefficient of the arrival counts.
    pub fn sigma_a(&self) -> f64 {
        (self.rho * (1.0 - self.rho)).sqrt() * (self.alpha / (1.0 - self.alpha)).sqrt()
    }

    /// Chain values on `[lo, hi]`, started from the stationary law at `lo`.
    pub fn sample_range(&self, lo: i64, hi: i64, seed: u64) -> Vec<u8> {
        let p = self.transition();
        let mut rng = Stream::new(seed, tags::MARKOV);
        let n = (hi - lo + 1).max(0) as usize;
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut state = (rng.next_f64() < self.rho) as usize;
        out.push(state as u8);
        for _ in 1..n {
            state = (rng.next_f64() < p[state][1]) as usize;
            out.push(state as u8);
        }
        out
    }
}

/// Markov arrivals on every site of `window`.
pub fn sample_markov_arrivals(spec: &MarkovArrivalSpec, window: &Window, seed: u64) -> Result<Vec<u8>> {
    let spec = MarkovArrivalSpec::new(spec.rho, spec.alpha)?;
    Ok(spec.sample_range(window.lo, window.hi, seed))
}
