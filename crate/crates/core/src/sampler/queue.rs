use crate::error::{check_asymmetry, check_two_species, invalid, Error, Result};
use crate::lattice::Window;
use crate::rng::{tags, KeyedStream};
use crate::sampler::bernoulli::ArrivalServicePair;

/// Queue lengths, departures and rejection marks on a window.
///
/// `queue[k]` is `Q` at site `window.lo + k` for `k = 0..=window.len()`,
/// so the entry past the right edge holds `Q_{hi+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub window: Window,
    pub q: f64,
    pub queue: Vec<u64>,
    pub d: Vec<u8>,
    /// Rejection marks; 0 where no mark was needed.
    pub b: Vec<u32>,
    pub burn_in: u64,
}

impl QueueState {
    #[inline]
    pub fn queue_at(&self, site: i64) -> u64 {
        self.queue[(site - self.window.lo) as usize]
    }

    #[inline]
    pub fn d_at(&self, site: i64) -> u8 {
        self.d[(site - self.window.lo) as usize]
    }

    /// Departures on `[i, j]`.
    pub fn departures(&self, i: i64, j: i64) -> u64 {
        (i..=j).map(|k| self.d_at(k) as u64).sum()
    }
}

/// Mark with `P(b <= k) = 1 - q^k` on `{1, 2, ...}`; identically 1 at `q = 0`.
#[inline]
pub fn geometric_mark(u: f64, q: f64) -> u32 {
    if q == 0.0 {
        return 1;
    }
    let v = ((1.0 - u).ln() / q.ln()).floor();
    if v >= u32::MAX as f64 - 1.0 {
        u32::MAX
    } else {
        v as u32 + 1
    }
}

/// One step of the recursion. Returns `(Q_i, d(i), mark)`.
#[inline(always)]
pub(crate) fn queue_step(next: u64, a: u8, s: u8, q: f64, marks: &KeyedStream, site: i64) -> (u64, u8, u32) {
    match (a, s) {
        (1, 0) => (next + 1, 0, 0),
        (1, 1) => (next, 1, 0),
        (0, 1) => {
            if q == 0.0 {
                if next >= 1 {
                    (next - 1, 1, 1)
                } else {
                    (0, 0, 1)
                }
            } else {
                let b = geometric_mark(marks.uniform(site), q);
                if (b as u64) <= next {
                    (next - 1, 1, b)
                } else {
                    (next, 0, b)
                }
            }
        }
        _ => (next, 0, 0),
    }
}

/// Scans the pair right to left starting from `start` at `end + 1`, and
/// returns `Q` at `stop` (after processing `stop`).
pub(crate) fn scan_queue(pair: &ArrivalServicePair, q: f64, marks: &KeyedStream, end: i64, stop: i64, start: u64) -> u64 {
    let mut cur = start;
    for i in (stop..=end).rev() {
        cur = queue_step(cur, pair.a_at(i), pair.s_at(i), q, marks, i).0;
    }
    cur
}

/// Runs the queue recursion from `Q = 0` at site `window.hi + burn_in + 1`
/// down to `window.lo`, keeping the values inside the window.
pub fn build_queue(pair: &ArrivalServicePair, q: f64, seed: u64, burn_in: u64) -> Result<QueueState> {
    check_asymmetry(q)?;
    if burn_in == 0 {
        return Err(invalid("burn_in", "must be at least 1"));
    }
    if burn_in > pair.margin {
        return Err(invalid(
            "burn_in",
            format!("{burn_in} exceeds the sampled margin {}", pair.margin),
        ));
    }
    if q > 0.0 {
        if let Some((_, rho2)) = pair.rates {
            if rho2 <= 0.0 {
                return Err(Error::UnstableQueue("rho2 = 0 with q > 0 is null recurrent".into()));
            }
        }
    }
    let w = pair.window;
    let marks = KeyedStream::new(seed, tags::MARKS);
    let end = w.hi + burn_in as i64;
    let at_edge = scan_queue(pair, q, &marks, end, w.hi + 1, 0);
    let n = w.len();
    let mut queue = vec![0u64; n + 1];
    let mut d = vec![0u8; n];
    let mut b = vec![0u32; n];
    queue[n] = at_edge;
    let mut cur = at_edge;
    for k in (0..n).rev() {
        let site = w.lo + k as i64;
        let (qi, di, bi) = queue_step(cur, pair.a[k], pair.s[k], q, &marks, site);
        queue[k] = qi;
        d[k] = di;
        b[k] = bi;
        cur = qi;
    }
    Ok(QueueState {
        window: w,
        q,
        queue,
        d,
        b,
        burn_in,
    })
}

/// Departures from matching every arrival, in left-to-right order, to the
/// nearest unused service at or to its left. Arrivals without a partner
/// stay unmatched.
pub fn match_brute_force(a: &[u8], s: &[u8]) -> Vec<u8> {
    let mut used = vec![false; s.len()];
    for i in 0..a.len() {
        if a[i] == 1 {
            if let Some(j) = (0..=i).rev().find(|&j| s[j] == 1 && !used[j]) {
                used[j] = true;
            }
        }
    }
    used.into_iter().map(|u| u as u8).collect()
}

/// Lundberg exponent of the Lindley queue: `ln(r / p)` with
/// `p = P(a=1, s=0)` and `r = P(a=0, s=1)`.
pub fn tail_slope_theta(rho1: f64, rho2: f64) -> Result<f64> {
    check_two_species(rho1, rho2)?;
    let p = rho1 * (1.0 - rho1 - rho2);
    Ok(((p + rho2) / p).ln())
}

/// Return times to zero: for every site `i` with `Q_i = 0`, the number of
/// steps `n >= 1` to the left until `Q_{i-n} = 0`. `queue` is indexed by
/// increasing site; incomplete excursions at the left end are dropped.
pub fn return_times(queue: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut last_zero: Option<usize> = None;
    for k in (0..queue.len()).rev() {
        if queue[k] == 0 {
            if let Some(z) = last_zero {
                out.push((z - k) as u64);
            }
            last_zero = Some(k);
        }
    }
    out
}

/// Outcome of the exponential drift check for `V(x) = e^{c x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub c: f64,
    pub x0: u64,
    pub beta: f64,
    pub b: f64,
    /// Largest value of `E[V(Q_i) | Q_{i+1} = x] - V(x) + beta V(x) - b 1_I(x)`
    /// over the checked range; nonpositive when the inequality holds.
    pub worst: f64,
    pub holds: bool,
}

/// Checks `E[V(Q_i) | Q_{i+1} = x] - V(x) <= -beta V(x) + b 1_I(x)` for
/// `x = 0..=x_max`, with `c` half the root of
/// `e^c = (1 - rho1)(rho1 + rho2) / (rho1 (1 - rho1 - rho2))`.
pub fn drift_check(rho1: f64, rho2: f64, q: f64, x_max: u64) -> Result<DriftReport> {
    check_two_species(rho1, rho2)?;
    check_asymmetry(q)?;
    let up = rho1 * (1.0 - rho1 - rho2);
    let down = (1.0 - rho1) * (rho1 + rho2);
    let c = 0.5 * (down / up).ln();
    let f = |x: u64| up * (c.exp() - 1.0) + down * (1.0 - q.powi(x as i32)) * ((-c).exp() - 1.0);
    // f decreases in x towards a negative limit
    let mut x0 = 0u64;
    while f(x0 + 1) >= 0.0 {
        x0 += 1;
        if x0 > 1_000_000 {
            return Err(invalid("q", "drift never becomes negative"));
        }
    }
    let beta = -f(x0 + 1);
    let v = |x: u64| (c * x as f64).exp();
    let b = (0..=x0).map(|x| v(x) * (f(x) + beta)).fold(0.0f64, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for x in 0..=x_max {
        // direct evaluation from the transition probabilities
        let p_up = up;
        let p_down = if x == 0 { 0.0 } else { down * (1.0 - q.powi(x as i32)) };
        let ev = p_up * v(x + 1) + p_down * v(x.saturating_sub(1)) + (1.0 - p_up - p_down) * v(x);
        let lhs = ev - v(x);
        let rhs = -beta * v(x) + if x <= x0 { b } else { 0.0 };
        let slack = (lhs - rhs) / v(x);
        worst = worst.max(slack);
    }
    Ok(DriftReport {
        c,
        x0,
        beta,
        b,
        worst,
        holds: worst <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_window, Window};
    use proptest::prelude::*;

    fn pair_from(a: &[u8], s: &[u8], margin: u64) -> ArrivalServicePair {
        let n = a.len() as i64 - margin as i64;
        let w = Window::new(1, n, 1, n, 0).unwrap();
        ArrivalServicePair::from_sequences(&w, margin, a.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn worked_example() {
        // sites 1..=5 plus one empty margin site
        let pair = pair_from(&[0, 1, 1, 0, 0, 0], &[1, 1, 0, 1, 0, 0], 1);
        let qs = build_queue(&pair, 0.0, 0, 1).unwrap();
        assert_eq!(&qs.queue[..5], &[0, 1, 1, 0, 0]);
        assert_eq!(qs.d, vec![1, 1, 0, 0, 0]);
        assert_eq!(match_brute_force(&pair.a[..5], &pair.s[..5]), qs.d);
    }

    #[test]
    fn equal_sequences_never_queue() {
        let w = make_window(200, 0.0).unwrap();
        let p = ArrivalServicePair::bernoulli(0.3, 0.2, &w, 300, 5).unwrap();
        let pair = ArrivalServicePair::from_sequences(&w, 300, p.a.clone(), p.a.clone()).unwrap();
        let qs = build_queue(&pair, 0.0, 1, 300).unwrap();
        assert!(qs.queue.iter().all(|&x| x == 0));
        assert_eq!(qs.d, pair.s[..w.len()].to_vec());
    }

    #[test]
    fn marks_have_geometric_law() {
        let q: f64 = 0.4;
        let ks = KeyedStream::new(3, 77);
        let n = 200_000;
        let mut le2 = 0;
        for i in 0..n {
            if geometric_mark(ks.uniform(i), q) <= 2 {
                le2 += 1;
            }
        }
        let p = le2 as f64 / n as f64;
        let expect = 1.0 - q * q;
        assert!((p - expect).abs() < 4.0 * (expect * (1.0 - expect) / n as f64).sqrt());
        assert_eq!(geometric_mark(0.999, 0.0), 1);
    }

    #[test]
    fn small_asymmetry_agrees_with_lindley_where_queue_is_long() {
        let w = make_window(50_000, 0.0).unwrap();
        let pair = ArrivalServicePair::bernoulli(0.25, 0.25, &w, 500, 9).unwrap();
        let q0 = build_queue(&pair, 0.0, 9, 500).unwrap();
        let qe = build_queue(&pair, 1e-9, 9, 500).unwrap();
        assert_eq!(q0.d, qe.d);
        assert_eq!(q0.queue, qe.queue);
    }

    #[test]
    fn rejects_bad_arguments() {
        let w = make_window(10, 0.0).unwrap();
        let pair = ArrivalServicePair::bernoulli(0.25, 0.25, &w, 20, 1).unwrap();
        assert!(build_queue(&pair, 0.0, 1, 0).is_err());
        assert!(build_queue(&pair, 0.0, 1, 21).is_err());
        assert!(build_queue(&pair, 1.0, 1, 20).is_err());
    }

    #[test]
    fn theta_at_quarter_densities() {
        assert!((tail_slope_theta(0.25, 0.25).unwrap() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn return_times_simple() {
        // sites ascending: Q = 0 1 0 0 2 1 0
        assert_eq!(return_times(&[0, 1, 0, 0, 2, 1, 0]), vec![3, 1, 2]);
    }

    #[test]
    fn drift_inequality() {
        for q in [0.0, 0.3, 0.5, 0.9] {
            let r = drift_check(0.25, 0.25, q, 200).unwrap();
            assert!(r.holds, "{q}: {r:?}");
            assert!(r.beta > 0.0);
        }
        // totally asymmetric: I = {0}
        assert_eq!(drift_check(0.25, 0.25, 0.0, 10).unwrap().x0, 0);
    }

    proptest! {
        #[test]
        fn recursion_matches_brute_force(bits in proptest::collection::vec((0u8..2, 0u8..2), 1..30)) {
            let a: Vec<u8> = bits.iter().map(|x| x.0).collect();
            let s: Vec<u8> = bits.iter().map(|x| x.1).collect();
            let mut a1 = a.clone();
            let mut s1 = s.clone();
            a1.push(0);
            s1.push(0);
            let qs = build_queue(&pair_from(&a1, &s1, 1), 0.0, 0, 1).unwrap();
            prop_assert_eq!(match_brute_force(&a, &s), qs.d);
        }

        #[test]
        fn departure_identity(seed in 0u64..1000, i in -40i64..40, len in 0i64..40) {
            let w = make_window(40, 1.0).unwrap();
            let pair = ArrivalServicePair::bernoulli(0.3, 0.3, &w, 200, seed).unwrap();
            for q in [0.0, 0.5] {
                let qs = build_queue(&pair, q, seed, 200).unwrap();
                let j = (i + len).min(w.obs_hi);
                let arrivals: u64 = (i..=j).map(|k| pair.a_at(k) as u64).sum();
                prop_assert_eq!(
                    qs.departures(i, j) as i64,
                    qs.queue_at(j + 1) as i64 - qs.queue_at(i) as i64 + arrivals as i64
                );
            }
        }
    }
}
