//! Analytic potential families with (near-)equidistant spectra and their
//! closed-form references.
//!
//! Dimensionless families use `H = −½ d²/dξ² + U(ξ)`; the truncated well is
//! physical, in nm and meV.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::exact::{rat_to_f64, RationalPolynomial};
use crate::numerics::grid::Grid1D;
use crate::numerics::hamiltonian::KineticScale;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSide {
    FullLine,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialModel {
    /// `U = ξ²/2`.
    Harmonic,
    /// `V = V0·(2x/d)²` for `|x| < d/2`, `V0` outside; x in nm, V in meV.
    TruncatedHarmonic { v0_mev: f64, d_nm: f64, mass_ratio: f64 },
    /// `U = ξ²/8 + A/ξ²` on one half line.
    Isotonic { a: f64, side: DomainSide },
    /// `U_m = −ξ²/2 − (2/3)(2m+1) + (P_m'/P_m + ξ)²`.
    Darboux { m: usize, side: DomainSide },
    /// Samples on a grid, linearly interpolated.
    Tabulated { grid: Grid1D, samples: Vec<f64> },
}

impl PotentialModel {
    /// Truncated well from `V0/m*` in eV/m_e, thickness in nm and `m*/m_e`.
    pub fn truncated(v0_over_mstar_ev: f64, d_nm: f64, mass_ratio: f64) -> Result<Self> {
        let m = Self::TruncatedHarmonic { v0_mev: v0_over_mstar_ev * mass_ratio * 1e3, d_nm, mass_ratio };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Harmonic => "harmonic".into(),
            Self::TruncatedHarmonic { .. } => "truncated".into(),
            Self::Isotonic { a, .. } => format!("isotonic(A={a})"),
            Self::Darboux { m, .. } => format!("darboux({m})"),
            Self::Tabulated { .. } => "tabulated".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Harmonic => Ok(()),
            Self::TruncatedHarmonic { v0_mev, d_nm, mass_ratio } => {
                if *v0_mev > 0.0 && *d_nm > 0.0 && *mass_ratio > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("truncated well needs V0 > 0, d > 0 and m* > 0"))
                }
            }
            Self::Isotonic { a, side } => {
                if !(*a > 0.0) {
                    Err(invalid(format!("isotonic potential needs A > 0, got {a}")))
                } else if *side == DomainSide::FullLine {
                    Err(invalid("isotonic potential is singular at 0; choose the positive or negative side"))
                } else {
                    Ok(())
                }
            }
            Self::Darboux { m, side } => {
                if m % 2 == 1 && *side == DomainSide::FullLine {
                    Err(invalid(format!("darboux({m}) is singular at 0; choose the positive or negative side")))
                } else {
                    Ok(())
                }
            }
            Self::Tabulated { grid, samples } => {
                if samples.len() == grid.n_points() {
                    Ok(())
                } else {
                    Err(invalid("tabulated samples do not match their grid"))
                }
            }
        }
    }

    /// Kinetic prefactor matching the model's units.
    pub fn kinetic_scale(&self) -> KineticScale {
        match self {
            Self::TruncatedHarmonic { mass_ratio, .. } => {
                KineticScale::Physical { hbar2_over_2m: units::hbar2_over_2m_mev_nm2(*mass_ratio) }
            }
            _ => KineticScale::Dimensionless,
        }
    }

    fn singular_side(&self) -> Option<DomainSide> {
        match self {
            Self::Isotonic { side, .. } => Some(*side),
            Self::Darboux { m, side } if m % 2 == 1 => Some(*side),
            _ => None,
        }
    }

    /// Potential values on every grid node.
    pub fn evaluate(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        self.validate()?;
        let xs = grid.nodes();
        if let Some(side) = self.singular_side() {
            let h = grid.spacing();
            let margin = h * (1.0 - 1e-9);
            let bad = match side {
                DomainSide::Positive => xs.iter().position(|x| *x < margin),
                DomainSide::Negative => xs.iter().position(|x| *x > -margin),
                DomainSide::FullLine => unreachable!("rejected by validate"),
            };
            if let Some(i) = bad {
                return Err(Error::Singularity { index: i, x: xs[i] });
            }
        }
        match self {
            Self::Darboux { m, .. } => {
                let eval = DarbouxEvaluator::new(*m);
                Ok(xs.iter().map(|x| eval.value(*x)).collect())
            }
            Self::Tabulated { grid: tg, samples } => xs.iter().map(|x| interpolate(tg, samples, *x)).collect(),
            _ => Ok(xs.iter().map(|x| self.value(*x)).collect()),
        }
    }

    /// Pointwise value for the closed-form families.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Harmonic => 0.5 * x * x,
            Self::TruncatedHarmonic { v0_mev, d_nm, .. } => {
                if x.abs() >= 0.5 * d_nm {
                    *v0_mev
                } else {
                    v0_mev * (2.0 * x / d_nm).powi(2)
                }
            }
            Self::Isotonic { a, .. } => x * x / 8.0 + a / (x * x),
            Self::Darboux { m, .. } => DarbouxEvaluator::new(*m).value(x),
            Self::Tabulated { grid, samples } => interpolate(grid, samples, x).unwrap_or(f64::NAN),
        }
    }
}

fn interpolate(grid: &Grid1D, samples: &[f64], x: f64) -> Result<f64> {
    let h = grid.spacing();
    let t = (x - grid.x_min()) / h;
    let last = (grid.n_points() - 1) as f64;
    if !(-1e-9..=last + 1e-9).contains(&t) {
        return Err(invalid(format!("x = {x} lies outside the tabulated range")));
    }
    let t = t.clamp(0.0, last);
    let i = (t.floor() as usize).min(grid.n_points() - 2);
    let f = t - i as f64;
    Ok(samples[i] * (1.0 - f) + samples[i + 1] * f)
}

/// `P_m` with exact rational coefficients, in the variable ξ.
pub fn darboux_polynomial(m: usize) -> RationalPolynomial {
    let q = m / 2;
    let odd = m % 2;
    let fact = |n: usize| (1..=n).fold(BigInt::from(1), |a, i| a * BigInt::from(i));
    let mut coeffs = vec![BigRational::from_integer(BigInt::from(0)); m + 1];
    for k in 0..=q {
        let num = BigInt::from(4).pow(k as u32);
        let den = fact(q - k) * fact(2 * k + odd);
        coeffs[2 * k + odd] = BigRational::new(num, den);
    }
    RationalPolynomial::new(coeffs)
}

struct DarbouxEvaluator {
    m: usize,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl DarbouxEvaluator {
    fn new(m: usize) -> Self {
        let poly = darboux_polynomial(m);
        let p = poly.coeffs().iter().map(rat_to_f64).collect();
        let dp = poly.derivative().coeffs().iter().map(rat_to_f64).collect();
        Self { m, p, dp }
    }

    fn value(&self, x: f64) -> f64 {
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, v| acc * x + v);
        let ratio = horner(&self.dp) / horner(&self.p);
        -0.5 * x * x - (2.0 / 3.0) * (2 * self.m + 1) as f64 + (ratio + x).powi(2)
    }
}

/// Closed-form eigenstates available for some families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateEvaluator {
    Harmonic,
    Isotonic { a: f64, side: DomainSide },
}

impl StateEvaluator {
    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        match self {
            Self::Harmonic => Ok(harmonic_state(n, x)),
            Self::Isotonic { a, side } => {
                let xi = if *side == DomainSide::Negative { -x } else { x };
                isotonic_state(*a, n, xi)
            }
        }
    }
}

/// Reference spectrum of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSpectrum {
    pub spacing: f64,
    /// Ground-state energy when the absolute position of the ladder is known.
    pub offset: Option<f64>,
    /// `ε_1 − ε_0` when it differs from `spacing`.
    pub ground_gap: Option<f64>,
    /// Levels are only trusted below this energy.
    pub valid_below: Option<f64>,
    /// `levels[n]` for the levels the closed form determines.
    pub levels: Vec<f64>,
    pub description: String,
    pub state: Option<StateEvaluator>,
}

pub fn reference_spectrum(model: &PotentialModel, n_max: usize) -> Result<ClosedFormSpectrum> {
    model.validate()?;
    let ladder = |offset: f64, spacing: f64| (0..=n_max).map(|n| offset + spacing * n as f64).collect::<Vec<_>>();
    Ok(match model {
        PotentialModel::Harmonic => ClosedFormSpectrum {
            spacing: 1.0,
            offset: Some(0.5),
            ground_gap: None,
            valid_below: None,
            levels: ladder(0.5, 1.0),
            description: "eps_n = n + 1/2".into(),
            state: Some(StateEvaluator::Harmonic),
        },
        PotentialModel::Isotonic { a, side } => {
            let offset = 0.5 + 0.25 * (1.0 + 8.0 * a).sqrt();
            ClosedFormSpectrum {
                spacing: 1.0,
                offset: Some(offset),
                ground_gap: None,
                valid_below: None,
                levels: ladder(offset, 1.0),
                description: "eps_n = 1/2 + n + sqrt(1 + 8A)/4".into(),
                state: Some(StateEvaluator::Isotonic { a: *a, side: *side }),
            }
        }
        PotentialModel::TruncatedHarmonic { v0_mev, d_nm, mass_ratio } => {
            let de = units::truncated_well_spacing_mev(v0_mev / mass_ratio / 1e3, *d_nm);
            let cap = 0.9 * v0_mev;
            let levels: Vec<f64> = ladder(0.5 * de, de).into_iter().take_while(|e| *e < cap).collect();
            ClosedFormSpectrum {
                spacing: de,
                offset: Some(0.5 * de),
                ground_gap: None,
                valid_below: Some(cap),
                levels,
                description: "E_n = dE (n + 1/2), dE = (2 hbar/d) sqrt(2 V0/m*), below 0.9 V0 (meV)".into(),
                state: None,
            }
        }
        PotentialModel::Darboux { m, .. } => {
            if m % 2 == 0 {
                ClosedFormSpectrum {
                    spacing: 1.0,
                    offset: None,
                    ground_gap: Some(1.0 + *m as f64),
                    valid_below: None,
                    levels: Vec::new(),
                    description: format!(
                        "spacing 1 above the ground state; ground state lowered by {m} below the ladder (gap {})",
                        1 + m
                    ),
                    state: None,
                }
            } else {
                ClosedFormSpectrum {
                    spacing: 2.0,
                    offset: None,
                    ground_gap: None,
                    valid_below: None,
                    levels: Vec::new(),
                    description: "spacing 2 on the half line (spacing 1 after rescaling xi -> xi/2)".into(),
                    state: None,
                }
            }
        }
        PotentialModel::Tabulated { .. } => {
            return Err(Error::Unsupported("tabulated potentials have no closed-form spectrum".into()))
        }
    })
}

/// Normalised eigenfunction of `−½ψ'' + ξ²/2 ψ`.
pub fn harmonic_state(n: usize, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalised eigenfunction of `−½ψ'' + (ξ²/8 + A/ξ²)ψ` on `ξ > 0`.
pub fn isotonic_state(a: f64, n: usize, xi: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(invalid(format!("isotonic state needs A > 0, got {a}")));
    }
    if !(xi > 0.0) {
        return Err(invalid(format!("isotonic state is defined for xi > 0, got {xi}")));
    }
    let s = (1.0 + 8.0 * a).sqrt();
    let alpha = 0.5 * s;
    let t = 0.5 * xi * xi;
    // J_n(t) = Σ_k (−1)^k C(n,k) Γ(α+1)/Γ(α+1+k) t^k
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= -((n - k) as f64) / (kf + 1.0) * t / (alpha + kf + 1.0);
        sum += term;
    }
    let ln_c2 = 0.5 * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0 + n as f64)
        - ln_gamma(n as f64 + 1.0)
        - 2.0 * ln_gamma(alpha + 1.0);
    let ln_shape = 0.25 * (1.0 + s) * t.ln() - 0.5 * t;
    Ok(sum * (0.5 * ln_c2 + ln_shape).exp())
}
