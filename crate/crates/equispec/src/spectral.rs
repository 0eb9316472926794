//! Schrödinger solves and spectrum analytics: level spacings, two-class
//! state classification and shift operators applied to numerical states.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::fd::fd_derivative;
use crate::numerics::grid::Grid1D;
use crate::numerics::hamiltonian::{build_hamiltonian, KineticScale};
use crate::numerics::tridiag::{eigensolve, EigenOptions};
use crate::potentials::{DomainSide, PotentialModel};
use crate::shift_ode::GeneratedPotential;
use crate::stats::{self, LinearFit, QuadraticFit};
use crate::units::{self, PhysicalScale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub potential: String,
    pub kinetic: KineticScale,
    pub spacing: f64,
    pub x_range: (f64, f64),
    /// Always hard walls (ψ = 0) at both end nodes.
    pub boundary: String,
    /// Positions where a generated potential diverged; they coincide with walls.
    pub walls: Vec<f64>,
    /// Reference point for classification (anchor or potential minimum).
    pub x_ref: f64,
    pub max_residual: f64,
    /// Set once energies and lengths were mapped to meV and nm.
    pub physical: Option<PhysicalScale>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    /// One vector per state on every grid node (zero at the walls),
    /// normalised so that `h·Σψ² = 1`.
    pub states: Vec<Vec<f64>>,
    pub grid: Grid1D,
    pub potential: Vec<f64>,
    pub metadata: SolveMetadata,
}

impl EigenSolution {
    /// Maps a dimensionless solution to nm and meV.
    pub fn to_physical(&self, scale: &PhysicalScale) -> Result<Self> {
        if self.metadata.kinetic != KineticScale::Dimensionless || self.metadata.physical.is_some() {
            return Err(invalid("only dimensionless solutions can be rescaled"));
        }
        let len = scale.length_nm();
        let grid = Grid1D::new(self.grid.x_min() * len, self.grid.x_max() * len, self.grid.n_points())?;
        let e = |v: f64| scale.to_energy_mev(v);
        let norm = 1.0 / len.sqrt();
        let mut metadata = self.metadata.clone();
        metadata.kinetic = KineticScale::Physical { hbar2_over_2m: units::hbar2_over_2m_mev_nm2(scale.mass_ratio) };
        metadata.spacing = grid.spacing();
        metadata.x_range = (grid.x_min(), grid.x_max());
        metadata.walls = metadata.walls.iter().map(|x| x * len).collect();
        metadata.x_ref *= len;
        metadata.physical = Some(*scale);
        Ok(Self {
            energies: self.energies.iter().map(|v| e(*v)).collect(),
            states: self.states.iter().map(|s| s.iter().map(|v| v * norm).collect()).collect(),
            grid,
            potential: self.potential.iter().map(|v| e(*v)).collect(),
            metadata,
        })
    }
}

/// Solves `−c ψ'' + Vψ = Eψ` with walls at the first and last node.
pub fn solve_samples(
    potential: &[f64],
    grid: &Grid1D,
    scale: KineticScale,
    k: usize,
    opts: &EigenOptions,
    label: &str,
) -> Result<EigenSolution> {
    let t = build_hamiltonian(potential, grid, scale)?;
    let pairs = eigensolve(&t, k, opts)?;
    let n = grid.n_points();
    let states = pairs
        .vectors
        .into_iter()
        .map(|v| {
            let mut full = Vec::with_capacity(n);
            full.push(0.0);
            full.extend(v);
            full.push(0.0);
            full
        })
        .collect();
    let mut warnings = Vec::new();
    let top = pairs.values.last().copied().unwrap_or(f64::NEG_INFINITY);
    let edge = potential[0].min(potential[n - 1]);
    if edge <= top {
        warnings.push(format!(
            "potential at the boundary ({edge:.6}) does not exceed the highest computed level ({top:.6})"
        ));
    }
    if pairs.values.windows(2).any(|w| w[1] <= w[0]) {
        warnings.push("energies are not strictly ascending".into());
    }
    let imin = argmin(&potential[1..n - 1]) + 1;
    Ok(EigenSolution {
        energies: pairs.values,
        states,
        grid: *grid,
        potential: potential.to_vec(),
        metadata: SolveMetadata {
            potential: label.to_string(),
            kinetic: scale,
            spacing: grid.spacing(),
            x_range: (grid.x_min(), grid.x_max()),
            boundary: "dirichlet".into(),
            walls: Vec::new(),
            x_ref: grid.x(imin),
            max_residual: pairs.residuals.iter().fold(0.0, |m, r| f64::max(m, *r)),
            physical: None,
            warnings,
        },
    })
}

pub fn solve_model(model: &PotentialModel, grid: &Grid1D, k: usize, opts: &EigenOptions) -> Result<EigenSolution> {
    let v = model.evaluate(grid)?;
    solve_samples(&v, grid, model.kinetic_scale(), k, opts, &model.name())
}

/// Solves on the reached range of a generated potential; the outermost
/// reached nodes act as the walls.
pub fn solve_generated(gen: &GeneratedPotential, k: usize, opts: &EigenOptions) -> Result<EigenSolution> {
    let grid = gen.valid_grid()?;
    let mut sol = solve_samples(gen.valid_potential(), &grid, KineticScale::Dimensionless, k, opts, "generated")?;
    sol.metadata.walls = gen.singularities.iter().map(|s| s.x).collect();
    let start = grid.nearest(gen.jet.xi0);
    sol.metadata.x_ref = grid.x(descend(gen.valid_potential(), start));
    if !gen.certified {
        sol.metadata.warnings.push(format!("generated potential is not certified (worst residual {:.3e})", gen.worst_residual));
    }
    Ok(sol)
}

/// A grid wide enough for the lowest `k` levels of `model` with spacing `h`.
/// Singular families get `[2h, L]` (or its mirror image).
pub fn suggested_grid(model: &PotentialModel, h: f64, k: usize) -> Result<Grid1D> {
    model.validate()?;
    if !(h > 0.0) {
        return Err(invalid("grid spacing must be positive"));
    }
    let kf = k as f64;
    let half = |l: f64, side: DomainSide| match side {
        DomainSide::Negative => Grid1D::with_spacing(-l, -2.0 * h, h),
        _ => Grid1D::with_spacing(2.0 * h, l, h),
    };
    match model {
        PotentialModel::Harmonic => {
            let l = (12.0f64).max((2.0 * kf + 1.0).sqrt() + 8.0);
            Grid1D::with_spacing(-l, l, h)
        }
        PotentialModel::Isotonic { a, side } => {
            let e = kf + 1.0 + 0.25 * (1.0 + 8.0 * a).sqrt();
            half((8.0 * e).sqrt() + 12.0, *side)
        }
        PotentialModel::Darboux { m, side } => {
            let e = 2.0 * kf + *m as f64 + 2.0;
            let l = (2.0 * e).sqrt() + 8.0;
            if m % 2 == 1 {
                half(l, *side)
            } else {
                Grid1D::with_spacing(-l, l, h)
            }
        }
        PotentialModel::TruncatedHarmonic { v0_mev, d_nm, mass_ratio } => {
            // Levels up to 0.9·V0 decay at least as exp(−κx), κ² = 0.1·V0/c.
            let c = units::hbar2_over_2m_mev_nm2(*mass_ratio);
            let kappa = (0.1 * v0_mev / c).sqrt();
            let l = 0.5 * d_nm + 10.0 / kappa;
            Grid1D::with_spacing(-l, l, h)
        }
        PotentialModel::Tabulated { grid, .. } => Ok(*grid),
    }
}

/// Index of the local minimum reached by walking downhill from `start`.
fn descend(v: &[f64], start: usize) -> usize {
    let mut i = start;
    loop {
        let left = (i > 0 && v[i - 1] < v[i]).then(|| i - 1);
        let right = (i + 1 < v.len() && v[i + 1] < v[i]).then(|| i + 1);
        i = match (left, right) {
            (Some(l), Some(r)) => if v[l] <= v[r] { l } else { r },
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => return i,
        };
    }
}

fn argmin(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::INFINITY), |b, (i, x)| if *x < b.1 { (i, *x) } else { b }).0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    pub spacings: Vec<f64>,
    pub mean: f64,
    pub cv: f64,
}

impl SpacingStats {
    fn from(spacings: Vec<f64>) -> Option<Self> {
        (!spacings.is_empty()).then(|| Self {
            mean: stats::mean(&spacings),
            cv: stats::coefficient_of_variation(&spacings),
            spacings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub window: (usize, usize),
    pub energies: Vec<f64>,
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
    pub cv: f64,
    /// `E_n` against `n` over the window.
    pub linear: LinearFit,
    pub classes: Option<StateClassification>,
}

/// Spacing statistics of `energies[n]` for `n` in the (inclusive) window.
pub fn spacing_report(energies: &[f64], window: RangeInclusive<usize>) -> Result<SpectrumReport> {
    let (lo, hi) = (*window.start(), *window.end());
    if hi >= energies.len() || hi < lo + 2 {
        return Err(invalid(format!("window {lo}..={hi} needs ≥ 3 of the {} solved levels", energies.len())));
    }
    let e = &energies[lo..=hi];
    let spacings: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    let ns: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    Ok(SpectrumReport {
        window: (lo, hi),
        energies: e.to_vec(),
        mean_spacing: stats::mean(&spacings),
        cv: stats::coefficient_of_variation(&spacings),
        spacings,
        linear: stats::linear_fit(&ns, e, None)?,
        classes: None,
    })
}

/// `E_n ≈ a n² + b n + c` over the window.
pub fn quadratic_trend(energies: &[f64], window: RangeInclusive<usize>) -> Result<QuadraticFit> {
    let (lo, hi) = (*window.start(), *window.end());
    if hi >= energies.len() || hi < lo + 2 {
        return Err(invalid(format!("window {lo}..={hi} needs ≥ 3 of the {} solved levels", energies.len())));
    }
    let ns: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    stats::quadratic_fit(&ns, &energies[lo..=hi])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// Localised outside the central allowed region, in the oscillation minima.
    Class1,
    /// Spread over the central allowed region.
    Class2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Left,
    Central,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Overrides the reference point stored in the solution.
    pub x_ref: Option<f64>,
    /// Class 1 when the central probability is below this.
    pub central_threshold: f64,
    /// Adjacent states on the same side with the same label and a gap below
    /// this fraction of the median level spacing are treated as a
    /// hybridised doublet: the more central one is moved to class 2.
    pub doublet_fraction: f64,
    /// Inclusive state range used for the per-class spacing statistics.
    pub window: Option<(usize, usize)>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { x_ref: None, central_threshold: 0.5, doublet_fraction: 0.25, window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub n: usize,
    pub energy: f64,
    pub mean_x: f64,
    pub spread: f64,
    pub ipr: f64,
    /// Probability inside the classically allowed interval around `x_ref`.
    pub p_central: f64,
    pub class: StateClass,
    pub region: Region,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateClassification {
    pub x_ref: f64,
    pub options: ClassifyOptions,
    pub states: Vec<StateMetrics>,
    /// Whether both classes occur inside the statistics window.
    pub split: bool,
    /// Pooled spacings within the left and right class-1 subgroups.
    pub class1: Option<SpacingStats>,
    pub class1_left: Option<SpacingStats>,
    pub class1_right: Option<SpacingStats>,
    pub class2: Option<SpacingStats>,
    pub note: String,
}

/// Per-state position metrics and the two-class assignment.
///
/// A state belongs to class 2 when most of its probability lies inside the
/// classically allowed interval `{V < E}` that contains `x_ref`, and to
/// class 1 otherwise; class-1 states are further split by the side of
/// `x_ref` on which their mean position lies.
pub fn classify_states(sol: &EigenSolution, opts: &ClassifyOptions) -> Result<StateClassification> {
    if sol.energies.len() < 2 {
        return Err(invalid("classification needs at least two states"));
    }
    let xs = sol.grid.nodes();
    let h = sol.grid.spacing();
    let v = &sol.potential;
    let x_ref = opts.x_ref.unwrap_or(sol.metadata.x_ref);
    if !(sol.grid.x_min()..=sol.grid.x_max()).contains(&x_ref) {
        return Err(invalid(format!("reference point {x_ref} lies outside the grid")));
    }
    let ir = sol.grid.nearest(x_ref);
    let n = xs.len();
    let mut states: Vec<StateMetrics> = sol
        .energies
        .iter()
        .zip(&sol.states)
        .enumerate()
        .map(|(idx, (&e, psi))| {
            let p: Vec<f64> = psi.iter().map(|y| y * y).collect();
            let mass: f64 = h * p.iter().sum::<f64>();
            let mean_x = h * xs.iter().zip(&p).map(|(x, q)| x * q).sum::<f64>() / mass;
            let var = h * xs.iter().zip(&p).map(|(x, q)| (x - mean_x).powi(2) * q).sum::<f64>() / mass;
            let ipr = h * p.iter().map(|q| q * q).sum::<f64>() / (mass * mass);
            let p_central = if v[ir] < e {
                let (mut lo, mut hi) = (ir, ir);
                while lo > 0 && v[lo - 1] < e {
                    lo -= 1;
                }
                while hi + 1 < n && v[hi + 1] < e {
                    hi += 1;
                }
                h * p[lo..=hi].iter().sum::<f64>() / mass
            } else {
                0.0
            };
            let class = if p_central < opts.central_threshold { StateClass::Class1 } else { StateClass::Class2 };
            let region = match class {
                StateClass::Class2 => Region::Central,
                StateClass::Class1 if mean_x < x_ref => Region::Left,
                StateClass::Class1 => Region::Right,
            };
            let t = opts.central_threshold;
            let confidence = if p_central < t { (t - p_central) / t } else { (p_central - t) / (1.0 - t) };
            StateMetrics { n: idx, energy: e, mean_x, spread: var.sqrt(), ipr, p_central, class, region, confidence }
        })
        .collect();

    let mut gaps: Vec<f64> = sol.energies.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let tol = opts.doublet_fraction * gaps[gaps.len() / 2];
    let mut doublets = 0;
    let mut i = 0;
    while i + 1 < states.len() {
        let (a, b) = (states[i], states[i + 1]);
        let same_side = a.region == b.region || a.class == StateClass::Class2 && b.class == StateClass::Class2;
        if same_side && b.energy - a.energy < tol {
            let (inner, outer) = if a.p_central >= b.p_central { (i, i + 1) } else { (i + 1, i) };
            states[inner].class = StateClass::Class2;
            states[inner].region = Region::Central;
            states[outer].class = StateClass::Class1;
            states[outer].region = if states[outer].mean_x < x_ref { Region::Left } else { Region::Right };
            doublets += 1;
            i += 2;
        } else {
            i += 1;
        }
    }

    let (lo, hi) = opts.window.unwrap_or((0, states.len() - 1));
    if hi >= states.len() || hi < lo + 1 {
        return Err(invalid(format!("classification window {lo}..={hi} is outside the {} states", states.len())));
    }
    let in_window = &states[lo..=hi];
    let ladder = |region: Region| -> Vec<f64> {
        let e: Vec<f64> = in_window.iter().filter(|s| s.region == region).map(|s| s.energy).collect();
        e.windows(2).map(|w| w[1] - w[0]).collect()
    };
    let left = ladder(Region::Left);
    let right = ladder(Region::Right);
    let central = ladder(Region::Central);
    let present = |c: StateClass| in_window.iter().any(|s| s.class == c);
    let split = present(StateClass::Class1) && present(StateClass::Class2);
    let pooled: Vec<f64> = left.iter().chain(&right).copied().collect();
    let note = if split {
        format!("two classes; {doublets} hybridised doublet(s) split")
    } else {
        "no split: all states fall into one class".to_string()
    };
    Ok(StateClassification {
        x_ref,
        options: *opts,
        split,
        class1: SpacingStats::from(pooled),
        class1_left: SpacingStats::from(left),
        class1_right: SpacingStats::from(right),
        class2: SpacingStats::from(central),
        states,
        note,
    })
}

/// Closed-form shift operators `L` with `[H, L] = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftOperator {
    /// `L = −ξ + d/dξ` (raises the harmonic level).
    HarmonicRaise,
    /// `L = ξ + d/dξ` (lowers; annihilates the ground state).
    HarmonicLower,
    /// Second-order operator of `ξ²/8 + A/ξ²`.
    Isotonic { a: f64 },
    /// Third-order operator of `U = W + ξ²/2`; `u_jets[i] = [U, U', U'', U''']`
    /// at every grid node of the solution.
    ThirdOrder { u_jets: Vec<[f64; 4]> },
}

impl ShiftOperator {
    pub fn order(&self) -> usize {
        match self {
            Self::HarmonicRaise | Self::HarmonicLower => 1,
            Self::Isotonic { .. } => 2,
            Self::ThirdOrder { .. } => 3,
        }
    }

    /// Coefficients `c_j(x)` of `L = Σ c_j d^j`.
    fn coefficients(&self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        let map = |f: &dyn Fn(f64) -> f64| xs.iter().map(|x| f(*x)).collect::<Vec<_>>();
        Ok(match self {
            Self::HarmonicRaise => vec![map(&|x| -x), map(&|_| 1.0)],
            Self::HarmonicLower => vec![map(&|x| x), map(&|_| 1.0)],
            Self::Isotonic { a } => vec![
                map(&|x| 0.25 * x * x - 2.0 * a / (x * x) - 0.5),
                map(&|x| -x),
                map(&|_| 1.0),
            ],
            Self::ThirdOrder { u_jets } => {
                if u_jets.len() != xs.len() {
                    return Err(invalid(format!(
                        "third-order operator needs U, U', U'', U''' at all {} nodes, got {}",
                        xs.len(),
                        u_jets.len()
                    )));
                }
                let c0 = xs
                    .iter()
                    .zip(u_jets)
                    .map(|(x, [u, u1, _, u3])| 3.0 * u * u1 - 0.25 * u3 - 0.5 * (x * x + 3.0) * u1 + 0.5 * x)
                    .collect();
                let c1 = xs.iter().zip(u_jets).map(|(x, j)| 0.5 * x * x - 3.0 * j[0] - 1.0).collect();
                vec![c0, c1, map(&|x| -x), map(&|_| 1.0)]
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapScore {
    pub n: usize,
    /// `|⟨ψ_{n+1}, Lψ_n⟩| / ‖Lψ_n‖`.
    pub overlap: f64,
    /// `‖Lψ_n‖ / ‖ψ_n‖`.
    pub norm_ratio: f64,
}

/// Applies `L` to every state but the last by finite differences and scores
/// how closely the result is aligned with the next state.
pub fn apply_shift_operator(sol: &EigenSolution, op: &ShiftOperator) -> Result<Vec<OverlapScore>> {
    if sol.metadata.physical.is_some() || sol.metadata.kinetic != KineticScale::Dimensionless {
        return Err(Error::Unsupported("shift operators act on dimensionless solutions".into()));
    }
    let xs = sol.grid.nodes();
    let coeffs = op.coefficients(&xs)?;
    let h = sol.grid.spacing();
    let dot = |a: &[f64], b: &[f64]| h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let last = sol.states.len().saturating_sub(1);
    sol.states
        .iter()
        .take(last.max(1))
        .enumerate()
        .map(|(n, psi)| {
            let mut out: Vec<f64> = psi.iter().zip(&coeffs[0]).map(|(p, c)| p * c).collect();
            for (order, c) in coeffs.iter().enumerate().skip(1) {
                let d = fd_derivative(psi, &sol.grid, order)?;
                for ((o, di), ci) in out.iter_mut().zip(&d).zip(c) {
                    *o += ci * di;
                }
            }
            let norm = dot(&out, &out).sqrt();
            let overlap = match sol.states.get(n + 1) {
                Some(next) if norm > 0.0 => dot(next, &out).abs() / (norm * dot(next, next).sqrt()),
                _ => 0.0,
            };
            Ok(OverlapScore { n, overlap, norm_ratio: norm / dot(psi, psi).sqrt() })
        })
        .collect()
}

/// One row of the level table written by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    /// `E_{n+1} − E_n`; absent for the highest level.
    #[serde(rename = "dE")]
    pub de: Option<f64>,
    pub class: Option<StateClass>,
    pub ipr: f64,
    pub mean_x: f64,
}

pub fn level_rows(sol: &EigenSolution, classes: Option<&StateClassification>) -> Vec<LevelRow> {
    let h = sol.grid.spacing();
    let xs = sol.grid.nodes();
    sol.energies
        .iter()
        .enumerate()
        .map(|(n, e)| {
            let (ipr, mean_x) = match classes {
                Some(c) => (c.states[n].ipr, c.states[n].mean_x),
                None => {
                    let psi = &sol.states[n];
                    let ipr = h * psi.iter().map(|p| p.powi(4)).sum::<f64>();
                    let mx = h * xs.iter().zip(psi).map(|(x, p)| x * p * p).sum::<f64>();
                    (ipr, mx)
                }
            };
            LevelRow {
                n,
                e: *e,
                de: sol.energies.get(n + 1).map(|next| next - e),
                class: classes.map(|c| c.states[n].class),
                ipr,
                mean_x,
            }
        })
        .collect()
}
