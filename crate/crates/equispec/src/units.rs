//! Physical constants and the conversions between dimensionless oscillator
//! units and (nm, meV).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// ħc in eV·nm (CODATA 2018).
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
/// Electron rest energy m_e c² in eV (CODATA 2018).
pub const ELECTRON_REST_EV: f64 = 510_998.95;

/// ħ²/m_e in eV·nm².
pub fn hbar2_over_me_ev_nm2() -> f64 {
    HBAR_C_EV_NM * HBAR_C_EV_NM / ELECTRON_REST_EV
}

/// ħ²/(2m*) in meV·nm² for an effective mass `mass_ratio·m_e`.
pub fn hbar2_over_2m_mev_nm2(mass_ratio: f64) -> f64 {
    0.5 * hbar2_over_me_ev_nm2() * 1e3 / mass_ratio
}

/// Level spacing ΔE = (2ħ/d)·√(2V0/m*) of a harmonic well that reaches V0 at
/// `|x| = d/2`, in meV, for V0/m* in eV/m_e and d in nm.
pub fn truncated_well_spacing_mev(v0_over_mstar_ev: f64, d_nm: f64) -> f64 {
    2.0 / d_nm * (2.0 * v0_over_mstar_ev * hbar2_over_me_ev_nm2()).sqrt() * 1e3
}

/// Inverse of [`truncated_well_spacing_mev`] for a product C = ΔE·d given in
/// eV·nm: V0/m* = C²/(8ħ²) in eV/m_e.
pub fn v0_over_mstar_from_c(c_ev_nm: f64) -> f64 {
    c_ev_nm * c_ev_nm / (8.0 * hbar2_over_me_ev_nm2())
}

/// Mapping between dimensionless (ξ, ε) and physical (x, E).
///
/// x = √(ħ/(m*ω))·ξ and E = ħω·ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    pub mass_ratio: f64,
    pub hbar_omega_mev: f64,
}

impl PhysicalScale {
    pub fn new(mass_ratio: f64, hbar_omega_mev: f64) -> Result<Self> {
        if !(mass_ratio > 0.0 && hbar_omega_mev > 0.0) {
            return Err(invalid("physical scale needs positive m*/m_e and ħω"));
        }
        Ok(Self { mass_ratio, hbar_omega_mev })
    }

    /// Oscillator length √(ħ/(m*ω)) in nm.
    pub fn length_nm(&self) -> f64 {
        (hbar2_over_me_ev_nm2() * 1e3 / (self.mass_ratio * self.hbar_omega_mev)).sqrt()
    }

    pub fn to_x_nm(&self, xi: f64) -> f64 {
        xi * self.length_nm()
    }

    pub fn to_energy_mev(&self, eps: f64) -> f64 {
        eps * self.hbar_omega_mev
    }
}
