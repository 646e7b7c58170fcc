use crate::error::{invalid, Result};
use crate::lattice::{Configuration, SpeciesLabel, Window};
use crate::parallel::fold_replicas;
use crate::sampler::two_species::sample_two_species;
use crate::stats::{linear_fit, LinearFit};

/// Empirical `P(no SECOND label in [o, o + ℓ))` for `ℓ = 1..=ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoidCurve {
    pub ell: Vec<u64>,
    pub probability: Vec<f64>,
    /// Number of (origin, replica) windows behind each point.
    pub windows: u64,
    /// Fit of `ln P` against `ℓ` over points with at least `min_count` voids.
    pub fit: Option<LinearFit>,
}

/// Counts, for every origin `o` with `[o, o + ell_max)` inside `[lo, hi]`,
/// the length of the SECOND-free run starting at `o` (capped at `ell_max`).
fn void_runs(c: &Configuration, lo: i64, hi: i64, ell_max: u64) -> Vec<u64> {
    let mut hist = vec![0u64; ell_max as usize + 1];
    let n = ell_max as i64;
    // next[k]: distance from site lo + k to the next SECOND at or after it
    let len = (hi - lo + 1) as usize;
    let mut next = vec![u64::MAX; len + 1];
    for k in (0..len).rev() {
        next[k] = if c.get(lo + k as i64) == SpeciesLabel::Second {
            0
        } else {
            next[k + 1].saturating_add(1)
        };
    }
    for o in lo..=hi - n + 1 {
        let run = next[(o - lo) as usize].min(ell_max);
        hist[run as usize] += 1;
    }
    hist
}

/// Void probabilities of second-class particles under the stationary
/// measure, pooled over origins in `window`'s observation range.
#[allow(clippy::too_many_arguments)]
pub fn second_class_voids(
    rho1: f64,
    rho2: f64,
    q: f64,
    window: &Window,
    ell_max: u64,
    replicas: u64,
    min_count: u64,
    seed: u64,
) -> Result<VoidCurve> {
    let (lo, hi) = (window.obs_lo, window.obs_hi);
    if ell_max == 0 || (hi - lo + 1) < ell_max as i64 {
        return Err(invalid("ell_max", format!("{ell_max} must lie in 1..=observation length")));
    }
    if replicas == 0 {
        return Err(invalid("replicas", "need at least one"));
    }
    let hist = fold_replicas(
        seed,
        replicas,
        |_, s| -> Result<Vec<u64>> { Ok(void_runs(&sample_two_species(rho1, rho2, q, window, s)?, lo, hi, ell_max)) },
        vec![0u64; ell_max as usize + 1],
        |acc, _, h| acc.iter_mut().zip(h).for_each(|(a, b)| *a += b),
    )?;
    let windows: u64 = hist.iter().sum();
    // P(run >= ℓ)
    let mut tail = vec![0u64; ell_max as usize + 2];
    for l in (0..=ell_max as usize).rev() {
        tail[l] = tail[l + 1] + hist[l];
    }
    let ell: Vec<u64> = (1..=ell_max).collect();
    let probability: Vec<f64> = ell.iter().map(|&l| tail[l as usize] as f64 / windows as f64).collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&l, &p) in ell.iter().zip(&probability) {
        if tail[l as usize] >= min_count {
            x.push(l as f64);
            y.push(p.ln());
        }
    }
    let fit = (x.len() >= 3).then(|| linear_fit(&x, &y));
    Ok(VoidCurve {
        ell,
        probability,
        windows,
        fit,
    })
}
