use crate::error::{check_two_species, Result};

pub type Mat2 = [[f64; 2]; 2];

/// Closed-form hydrodynamic data of the two-species TASEP in species
/// coordinates `(η1, η2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModeData {
    pub rho1: f64,
    pub rho2: f64,
    /// Susceptibility matrix.
    pub c: Mat2,
    /// Current Jacobian.
    pub a: Mat2,
    /// Normal-mode transform, `ξ = R η`.
    pub r: Mat2,
    pub v: [f64; 2],
    pub lambda: [f64; 2],
    pub g1: Mat2,
    pub g2: Mat2,
    /// Average species currents.
    pub j: [f64; 2],
    /// `χ1 = ρ1(1-ρ1)`, `χ2 = (ρ1+ρ2)(1-ρ1-ρ2)`.
    pub chi: [f64; 2],
}

pub fn normal_mode_data(rho1: f64, rho2: f64) -> Result<NormalModeData> {
    check_two_species(rho1, rho2)?;
    let s = rho1 + rho2;
    let chi1 = rho1 * (1.0 - rho1);
    let chi2 = s * (1.0 - s);
    let c = [
        [chi1, -chi1],
        [-chi1, rho2 * (1.0 - rho2) + 2.0 * chi1 - 2.0 * rho1 * rho2],
    ];
    let a = [[1.0 - 2.0 * rho1, 0.0], [-2.0 * rho2, 1.0 - 2.0 * s]];
    let (r1, r2) = (1.0 / chi1.sqrt(), 1.0 / chi2.sqrt());
    let r = [[r1, 0.0], [r2, r2]];
    let g1 = [[-chi1.sqrt(), 0.0], [0.0, 0.0]];
    let g2 = [[0.0, 0.0], [0.0, -chi2.sqrt()]];
    let k = 2.0 * std::f64::consts::SQRT_2;
    Ok(NormalModeData {
        rho1,
        rho2,
        c,
        a,
        r,
        v: [1.0 - 2.0 * rho1, 1.0 - 2.0 * s],
        lambda: [k * g1[0][0].abs(), k * g2[1][1].abs()],
        g1,
        g2,
        j: [chi1, rho2 * (1.0 - rho2) - 2.0 * rho1 * rho2],
        chi: [chi1, chi2],
    })
}

pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn transpose(x: &Mat2) -> Mat2 {
    [[x[0][0], x[1][0]], [x[0][1], x[1][1]]]
}

pub fn inverse(x: &Mat2) -> Option<Mat2> {
    let det = x[0][0] * x[1][1] - x[0][1] * x[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[x[1][1] / det, -x[0][1] / det], [-x[1][0] / det, x[0][0] / det]])
}

/// Largest entrywise difference relative to the largest entry of `reference` (at least 1).
pub fn relative_gap(x: &Mat2, reference: &Mat2) -> f64 {
    let scale = reference.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((x[i][j] - reference[i][j]).abs());
        }
    }
    worst / scale
}

/// Residuals of `R A R⁻¹ = diag(v)`, `R C Rᵀ = 1` and `A C = C Aᵀ`.
pub fn identity_residuals(d: &NormalModeData) -> [f64; 3] {
    let rinv = inverse(&d.r).expect("R is invertible for admissible densities");
    let diag = [[d.v[0], 0.0], [0.0, d.v[1]]];
    let one = [[1.0, 0.0], [0.0, 1.0]];
    let rar = mat_mul(&mat_mul(&d.r, &d.a), &rinv);
    let rcr = mat_mul(&mat_mul(&d.r, &d.c), &transpose(&d.r));
    let ac = mat_mul(&d.a, &d.c);
    let ca = mat_mul(&d.c, &transpose(&d.a));
    [relative_gap(&rar, &diag), relative_gap(&rcr, &one), relative_gap(&ac, &ca)]
}
