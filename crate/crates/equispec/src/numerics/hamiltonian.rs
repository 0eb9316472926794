use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::grid::Grid1D;
use crate::numerics::tridiag::TridiagonalSym;

/// Prefactor of the kinetic term `−c·d²/dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KineticScale {
    /// `c = 1/2`: lengths in ξ, energies in ε.
    Dimensionless,
    /// `c = ħ²/(2m*)` in energy·length² (the crate uses meV·nm²).
    Physical { hbar2_over_2m: f64 },
}

impl KineticScale {
    pub fn coefficient(&self) -> f64 {
        match self {
            KineticScale::Dimensionless => 0.5,
            KineticScale::Physical { hbar2_over_2m } => *hbar2_over_2m,
        }
    }
}

/// Three-point finite-difference Hamiltonian on the interior nodes of `grid`
/// with hard walls (ψ = 0) at both end nodes.
///
/// `potential` holds one sample per grid node; the end samples are unused.
pub fn build_hamiltonian(potential: &[f64], grid: &Grid1D, scale: KineticScale) -> Result<TridiagonalSym> {
    let n = grid.n_points();
    if potential.len() != n {
        return Err(invalid(format!("{} potential samples for {n} grid nodes", potential.len())));
    }
    let c = scale.coefficient();
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("kinetic scale must be positive, got {c}")));
    }
    let h = grid.spacing();
    let t = c / (h * h);
    let interior = &potential[1..n - 1];
    if let Some(i) = interior.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePotential { index: i + 1 });
    }
    let diagonal = interior.iter().map(|v| 2.0 * t + v).collect();
    let off = vec![-t; n - 3];
    TridiagonalSym::new(diagonal, off)?.with_spacing(h)
}
