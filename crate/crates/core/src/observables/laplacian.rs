use crate::error::{invalid, Result};
use crate::lattice::Marginal;
use crate::observables::ensemble::{check_replicas, check_time, occupation, EnsembleOptions, StationaryRun};
use crate::parallel::fold_replicas;
use crate::stats::Moments;

/// One row of the mixed-correlation identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianRow {
    pub i: i64,
    /// `S^#_{12}(x + i, t) + S^#_{21}(x̃ + i, t̃)`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `¼ Δ_i Cov(h^{ρ1}(x + i, t), h^{ρ1+ρ2}(x̃ + i, t̃))`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub residual: f64,
    /// Standard error of the per-replica difference.
    pub stderr: f64,
}

impl LaplacianRow {
    pub fn z(&self) -> f64 {
        self.residual / self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub q: f64,
    pub t: f64,
    pub t_tilde: f64,
    pub x: i64,
    pub x_tilde: i64,
    pub i_range: (i64, i64),
    pub replicas: u64,
    pub seed: u64,
    pub options: EnsembleOptions,
}

pub const MIN_REPLICAS: u64 = 100;

impl LaplacianConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(t: f64, t_tilde: f64, x: i64, x_tilde: i64, i_range: (i64, i64), replicas: u64, seed: u64) -> Self {
        Self {
            rho1: 0.25,
            rho2: 0.25,
            q: 0.0,
            t,
            t_tilde,
            x,
            x_tilde,
            i_range,
            replicas,
            seed,
            options: EnsembleOptions::default(),
        }
    }

    /// Both sides come from the same ensemble. The covariance uses the exact
    /// means `E h^ρ(j, s) = 2 (1 - q) χ s + (1 - 2ρ) j`, so each replica gives
    /// an unbiased sample of the residual.
    pub fn run(&self) -> Result<Vec<LaplacianRow>> {
        check_replicas(self.replicas, MIN_REPLICAS)?;
        check_time(self.t)?;
        check_time(self.t_tilde)?;
        let (i_lo, i_hi) = self.i_range;
        if i_lo > i_hi {
            return Err(invalid("i_range", "empty interval"));
        }
        let (x, xt) = (self.x, self.x_tilde);
        let reach = [x + i_lo - 1, x + i_hi + 1, xt + i_lo - 1, xt + i_hi + 1]
            .iter()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap();
        let obs = self.options.obs_halfwidth.unwrap_or(2 * reach + 16);
        if obs < 2 * reach {
            return Err(invalid("obs_halfwidth", format!("{obs} cannot hold probes reaching {reach}")));
        }
        let q = self.q;
        let t = self.options.time_units.physical(self.t, q);
        let tt = self.options.time_units.physical(self.t_tilde, q);
        let run = StationaryRun::new(self.rho1, self.rho2, q, obs, t.max(tt), self.options)?;
        let half = (obs / 2) as i64;
        let norigins = (2 * half + 1) as f64;
        let ni = (i_hi - i_lo + 1) as usize;
        let (r1, r2) = (self.rho1, self.rho1 + self.rho2);
        let mean_h = |rho: f64, j: i64, s: f64| 2.0 * (1.0 - q) * rho * (1.0 - rho) * s + (1.0 - 2.0 * rho) * j as f64;
        // profile ranges, as offsets from each origin
        let (p_lo, p_hi) = (x.min(xt) + i_lo - 1, x.max(xt) + i_hi + 1);

        let replica = |_: u64, seed: u64| -> Result<Vec<f64>> {
            let c0 = run.initial(seed)?;
            let first0 = occupation(&c0, Marginal::First, -half, half);
            let all0 = occupation(&c0, Marginal::All, -half, half);
            let base = crate::harris::Process::new(c0.clone(), false);
            // h(o, 0) for the two marginals, relative to h(0, 0)
            let h0_first = base.height_profile(Marginal::First, 0, -half, half);
            let h0_all = base.height_profile(Marginal::All, 0, -half, half);
            let mut ev = run.evolver(c0, seed)?;
            let lo = -half + p_lo;
            let hi = half + p_hi;
            let snap = |m: Marginal, s: f64, ev: &mut crate::harris::Evolver<'static>| -> Result<(Vec<i64>, Vec<u8>)> {
                ev.advance_to(s)?;
                let p = ev.process(0);
                Ok((p.height_profile(m, 0, lo, hi), occupation(p.config(), m, lo, hi)))
            };
            let ((hf, ef), (ha, ea)) = if t <= tt {
                let a = snap(Marginal::First, t, &mut ev)?;
                let b = snap(Marginal::All, tt, &mut ev)?;
                (a, b)
            } else {
                let b = snap(Marginal::All, tt, &mut ev)?;
                let a = snap(Marginal::First, t, &mut ev)?;
                (a, b)
            };
            let at = |v: &[i64], site: i64| v[(site - lo) as usize];
            let occ = |v: &[u8], site: i64| v[(site - lo) as usize] as f64;
            let mut lhs = vec![0.0; ni];
            let mut prod = vec![0.0; ni + 2];
            for (k, o) in (-half..=half).enumerate() {
                let (f0, a0) = (first0[k] as f64, all0[k] as f64);
                for (n, i) in (i_lo..=i_hi).enumerate() {
                    lhs[n] += (occ(&ef, o + x + i) - r1) * (a0 - r2) + (occ(&ea, o + xt + i) - r2) * (f0 - r1);
                }
                for (n, i) in (i_lo - 1..=i_hi + 1).enumerate() {
                    let a = (at(&hf, o + x + i) - h0_first[k]) as f64 - mean_h(r1, x + i, t);
                    let b = (at(&ha, o + xt + i) - h0_all[k]) as f64 - mean_h(r2, xt + i, tt);
                    prod[n] += a * b;
                }
            }
            let mut out = vec![0.0; 3 * ni];
            for n in 0..ni {
                let l = lhs[n] / norigins;
                let r = 0.25 * (prod[n + 2] - 2.0 * prod[n + 1] + prod[n]) / norigins;
                out[n] = l;
                out[ni + n] = r;
                out[2 * ni + n] = l - r;
            }
            Ok(out)
        };
        let m = fold_replicas(self.seed, self.replicas, replica, Moments::new(3 * ni), |acc, _, v| acc.push(&v))?;
        let (mean, se) = (m.means(), m.stderrs());
        Ok((0..ni)
            .map(|n| LaplacianRow {
                i: i_lo + n as i64,
                lhs: mean[n],
                lhs_stderr: se[n],
                rhs: mean[ni + n],
                rhs_stderr: se[ni + n],
                residual: mean[2 * ni + n],
                stderr: se[2 * ni + n],
            })
            .collect())
    }
}

/// Residuals of the mixed-correlation identity at `ρ1 = ρ2 = 1/4`, `q = 0`.
pub fn laplacian_identity_residual(
    t: f64,
    t_tilde: f64,
    x: i64,
    x_tilde: i64,
    i_range: (i64, i64),
    replicas: u64,
    seed: u64,
) -> Result<Vec<LaplacianRow>> {
    LaplacianConfig::new(t, t_tilde, x, x_tilde, i_range, replicas, seed).run()
}
