//! Oracles shared by the integration tests. Nothing here calls into the
//! library, so agreement is an independent check.

use std::f64::consts::PI;

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} f(x) dx`, found by Newton
/// iteration on the orthonormal Hermite recurrence. Exact for polynomials of
/// degree `< 2n`.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let half = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, pm1) = orthonormal_pair(n, z);
            deriv = (2.0 * n as f64).sqrt() * pm1;
            let dz = p / deriv;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / (deriv * deriv);
        out[i] = (z, w);
        out[n - 1 - i] = (-z, w);
    }
    out
}

/// `(p_n(x), p_{n−1}(x))` for Hermite polynomials orthonormal under `e^{−x²}`.
fn orthonormal_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = PI.powf(-0.25);
    for j in 1..=n {
        let next = x * (2.0 / j as f64).sqrt() * p - ((j - 1) as f64 / j as f64).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `⟨m|ξ^j|n⟩` for the eigenfunctions of `−d²/dξ² + ξ²` by quadrature.
pub fn quadrature_element(rule: &[(f64, f64)], m: usize, n: usize, j: usize) -> f64 {
    rule.iter()
        .map(|&(x, w)| w * orthonormal_pair(m, x).0 * orthonormal_pair(n, x).0 * x.powi(j as i32))
        .sum()
}

/// CODATA 2018 values.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
pub const ELECTRON_REST_EV: f64 = 510_998.950_00;

/// Level spacing `(2ħ/d)·√(2V0/m*)` of a harmonic well of depth `V0` at the
/// film edges, in meV, with `V0/m*` in eV per electron mass.
pub fn harmonic_film_spacing_mev(v0_over_m: f64, d_nm: f64) -> f64 {
    1e3 * 2.0 * HBAR_C_EV_NM / d_nm * (2.0 * v0_over_m / ELECTRON_REST_EV).sqrt()
}

/// Inverse of the spacing law: `V0/m* = C²·m_e c² / (8 (ħc)²)` for `ΔE = C/d`.
pub fn v0_over_m_from_c(c_ev_nm: f64) -> f64 {
    c_ev_nm * c_ev_nm * ELECTRON_REST_EV / (8.0 * HBAR_C_EV_NM * HBAR_C_EV_NM)
}

pub fn mean_and_cv(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (mean, var.sqrt() / mean.abs())
}
