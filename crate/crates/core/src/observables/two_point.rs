use crate::error::{invalid, Result};
use crate::lattice::Marginal;
use crate::observables::ensemble::{check_replicas, check_time, occupation, EnsembleOptions, StationaryRun};
use crate::observables::normal_modes::Mat2;
use crate::parallel::fold_replicas;
use crate::stats::Moments;

const MARGINALS: [Marginal; 2] = [Marginal::First, Marginal::All];

/// Monte Carlo estimate of `S^#_{αβ}(j, t) = ⟨η^α_t(j) η^β_0(0)⟩ - ρ_α ρ_β`,
/// with `α, β ∈ {1: first class, 2: all particles}`.
///
/// Entries are indexed `[α][β][j - j_lo]`. Every replica contributes one
/// origin-averaged value, so the standard errors are across replicas only.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointEstimate {
    /// Physical time.
    pub t: f64,
    pub j_lo: i64,
    pub mean: [[Vec<f64>; 2]; 2],
    pub stderr: [[Vec<f64>; 2]; 2],
    pub replicas: u64,
    pub origins_averaged: u64,
    /// Marginal densities `(ρ1, ρ1 + ρ2)`.
    pub rho: [f64; 2],
    /// `Σ_j S^#(j, t)` over the estimated range, in marginal coordinates.
    pub sum: Mat2,
    pub sum_stderr: Mat2,
    /// The same sum in species coordinates `(η1, η2)`.
    pub species_sum: Mat2,
    pub species_sum_stderr: Mat2,
}

impl TwoPointEstimate {
    pub fn j_hi(&self) -> i64 {
        self.j_lo + self.mean[0][0].len() as i64 - 1
    }

    /// `(mean, stderr)` of entry `(α, β)` (1-based) at `j`.
    pub fn at(&self, alpha: usize, beta: usize, j: i64) -> Option<(f64, f64)> {
        if !(1..=2).contains(&alpha) || !(1..=2).contains(&beta) || j < self.j_lo || j > self.j_hi() {
            return None;
        }
        let k = (j - self.j_lo) as usize;
        Some((self.mean[alpha - 1][beta - 1][k], self.stderr[alpha - 1][beta - 1][k]))
    }
}

/// Parameters of a two-point estimation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub q: f64,
    pub t: f64,
    pub j_range: (i64, i64),
    pub replicas: u64,
    pub seed: u64,
    pub options: EnsembleOptions,
}

impl TwoPointConfig {
    pub fn new(rho1: f64, rho2: f64, q: f64, t: f64, j_range: (i64, i64), replicas: u64, seed: u64) -> Self {
        Self {
            rho1,
            rho2,
            q,
            t,
            j_range,
            replicas,
            seed,
            options: EnsembleOptions::default(),
        }
    }

    pub fn estimate(&self) -> Result<TwoPointEstimate> {
        check_replicas(self.replicas, 2)?;
        check_time(self.t)?;
        let (j_lo, j_hi) = self.j_range;
        if j_lo > j_hi {
            return Err(invalid("j_range", "empty interval"));
        }
        let reach = j_lo.abs().max(j_hi.abs()) as u64;
        let obs = self.options.obs_halfwidth.unwrap_or(2 * reach + 16);
        if obs < 2 * reach {
            return Err(invalid(
                "obs_halfwidth",
                format!("{obs} is too small: origins cover half the window and |j| reaches {reach}"),
            ));
        }
        let t = self.options.time_units.physical(self.t, self.q);
        let run = StationaryRun::new(self.rho1, self.rho2, self.q, obs, t, self.options)?;
        let half = (obs / 2) as i64;
        let origins = 2 * half as u64 + 1;
        let nj = (j_hi - j_lo + 1) as usize;
        let rho = [self.rho1, self.rho1 + self.rho2];

        let replica = |_: u64, seed: u64| -> Result<Vec<f64>> {
            let c0 = run.initial(seed)?;
            let zero: Vec<Vec<u8>> = MARGINALS.iter().map(|&m| occupation(&c0, m, -half, half)).collect();
            let mut ev = run.evolver(c0, seed)?;
            ev.advance_to(t)?;
            let ct = ev.process(0).config();
            let now: Vec<Vec<u8>> = MARGINALS
                .iter()
                .map(|&m| occupation(ct, m, -half + j_lo, half + j_hi))
                .collect();
            // layout [α][β][j] followed by the j-sums
            let mut out = vec![0.0; 4 * nj + 4];
            for b in 0..2 {
                for (k, &z) in zero[b].iter().enumerate() {
                    if z == 0 {
                        continue;
                    }
                    for a in 0..2 {
                        let row = &now[a][k..k + nj];
                        let dst = &mut out[(2 * a + b) * nj..(2 * a + b + 1) * nj];
                        for (d, &v) in dst.iter_mut().zip(row) {
                            *d += v as f64;
                        }
                    }
                }
            }
            // centre both factors at the known densities: Σ_o (z - ρ_β)(v - ρ_α)
            // has the same mean as Σ_o z v - N ρ_α ρ_β and far less noise
            let zsum: Vec<f64> = zero.iter().map(|z| z.iter().map(|&v| v as f64).sum()).collect();
            let n = origins as usize;
            for a in 0..2 {
                // sliding sums Σ_o η^α_t(o + j)
                let mut slide = vec![0.0; nj];
                let mut acc: f64 = now[a][..n].iter().map(|&v| v as f64).sum();
                for (k, s) in slide.iter_mut().enumerate() {
                    if k > 0 {
                        acc += now[a][k + n - 1] as f64 - now[a][k - 1] as f64;
                    }
                    *s = acc;
                }
                for b in 0..2 {
                    let e = 2 * a + b;
                    let mut s = 0.0;
                    for (v, w) in out[e * nj..(e + 1) * nj].iter_mut().zip(&slide) {
                        *v = (*v - rho[a] * zsum[b] - rho[b] * w) / origins as f64 + rho[a] * rho[b];
                        s += *v;
                    }
                    out[4 * nj + e] = s;
                }
            }
            // species coordinates of the sums: T⁻¹ M T⁻ᵀ with T = [[1,0],[1,1]]
            let m = [out[4 * nj], out[4 * nj + 1], out[4 * nj + 2], out[4 * nj + 3]];
            out.extend_from_slice(&[m[0], m[1] - m[0], m[2] - m[0], m[3] - m[1] - m[2] + m[0]]);
            Ok(out)
        };
        let moments = fold_replicas(self.seed, self.replicas, replica, Moments::new(4 * nj + 8), |acc, _, x| {
            acc.push(&x)
        })?;
        let mean = moments.means();
        let se = moments.stderrs();
        let block = |v: &[f64], e: usize| v[e * nj..(e + 1) * nj].to_vec();
        let mat = |v: &[f64], off: usize| [[v[off], v[off + 1]], [v[off + 2], v[off + 3]]];
        Ok(TwoPointEstimate {
            t,
            j_lo,
            mean: [[block(mean, 0), block(mean, 1)], [block(mean, 2), block(mean, 3)]],
            stderr: [[block(&se, 0), block(&se, 1)], [block(&se, 2), block(&se, 3)]],
            replicas: self.replicas,
            origins_averaged: origins,
            rho,
            sum: mat(mean, 4 * nj),
            sum_stderr: mat(&se, 4 * nj),
            species_sum: mat(mean, 4 * nj + 4),
            species_sum_stderr: mat(&se, 4 * nj + 4),
        })
    }
}

/// Estimates `S^#(j, t)` for `j` in `j_range` at physical time `t`.
pub fn estimate_two_point(
    rho1: f64,
    rho2: f64,
    q: f64,
    t: f64,
    j_range: (i64, i64),
    replicas: u64,
    seed: u64,
) -> Result<TwoPointEstimate> {
    TwoPointConfig::new(rho1, rho2, q, t, j_range, replicas, seed).estimate()
}

/// Summed two-point function next to its exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub species: Mat2,
    pub species_stderr: Mat2,
    /// Exact susceptibility matrix in species coordinates.
    pub expected_species: Mat2,
    pub marginal: Mat2,
    pub marginal_stderr: Mat2,
    /// `diag(χ1, χ2)`: the marginal-coordinate image of the exact matrix.
    pub expected_marginal: Mat2,
}

impl Susceptibility {
    /// Largest `|estimate - exact| / stderr` over both coordinate systems.
    pub fn max_z(&self) -> f64 {
        let mut z = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                z = z.max((self.species[i][j] - self.expected_species[i][j]).abs() / self.species_stderr[i][j]);
                z = z.max((self.marginal[i][j] - self.expected_marginal[i][j]).abs() / self.marginal_stderr[i][j]);
            }
        }
        z
    }
}

/// Sums the two-point estimate over its range and compares with the exact
/// susceptibility.
pub fn susceptibility(est: &TwoPointEstimate, rho2: f64) -> Result<Susceptibility> {
    let rho1 = est.rho[0];
    let d = crate::observables::normal_mode_data(rho1, rho2)?;
    Ok(Susceptibility {
        species: est.species_sum,
        species_stderr: est.species_sum_stderr,
        expected_species: d.c,
        marginal: est.sum,
        marginal_stderr: est.sum_stderr,
        expected_marginal: [[d.chi[0], 0.0], [0.0, d.chi[1]]],
    })
}
