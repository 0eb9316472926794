//! Potentials `U = W + ξ²/2` whose spectra admit a third-order shift
//! operator, generated by integrating
//!
//! ```text
//! W'''' = 4[(3/2)(W²)'' + ξ²W'' + 3ξW']
//! ```
//!
//! outward from an anchor `ξ0`. The equation has two first integrals,
//!
//! ```text
//! A = 3ξWW' − (3/2)W² − ξW'''/4 + W''/4 + ξ³W'
//! B = W'²/8 − W³/2 − AW − Q²/2,   Q = (A + (3/2)W² − W''/4)/ξ
//! ```
//!
//! which fix the initial jet and certify the trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::grid::Grid1D;
use crate::numerics::rk::{integrate_rk_partial, OdeState, RkControls, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeForm {
    /// The full jet `W, W', W'', W'''` is given.
    FullFourthOrder,
    /// `W, W', W''` are given; `W'''` follows from the A-integral.
    FirstIntegralA,
    /// `W, W'` are given; `W''` follows from the B-integral on the chosen branch.
    FirstIntegralAB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOdeProblem {
    pub form: OdeForm,
    pub a: f64,
    /// Only read by [`OdeForm::FirstIntegralAB`].
    pub b: f64,
    pub xi0: f64,
    /// `[W, W', W'', W''']` at `xi0`; entries the form derives are ignored.
    pub jet: [f64; 4],
    pub branch: Branch,
    pub xi_range: (f64, f64),
    /// Continue through `ξ = 0` on the opposite sign of `Q`, i.e. with
    /// `ξQ = |ξ|·σ√R` instead of the analytic continuation.
    pub mirror_at_origin: bool,
}

impl ShiftOdeProblem {
    /// Named presets `type1`, `type2` and `type3`.
    pub fn preset(name: &str) -> Result<Self> {
        let zero = [0.0; 4];
        Ok(match name {
            "type1" => Self {
                form: OdeForm::FirstIntegralA,
                a: -0.4,
                b: 0.0,
                xi0: 1.0,
                jet: zero,
                branch: Branch::Plus,
                xi_range: (-6.0, 6.0),
                mirror_at_origin: false,
            },
            "type2" => Self {
                form: OdeForm::FirstIntegralA,
                a: -0.001,
                b: 0.0,
                xi0: 1.0,
                jet: zero,
                branch: Branch::Plus,
                xi_range: (-50.0, 6.0),
                mirror_at_origin: false,
            },
            "type3" => Self {
                form: OdeForm::FirstIntegralAB,
                a: 0.0,
                b: -1.0,
                xi0: 1.0,
                jet: zero,
                branch: Branch::Plus,
                xi_range: (-45.0, 45.0),
                mirror_at_origin: true,
            },
            other => return Err(invalid(format!("unknown preset '{other}' (expected type1, type2 or type3)"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.xi_range;
        if !(lo < hi) || !(lo..=hi).contains(&self.xi0) {
            return Err(invalid(format!("anchor {} must lie inside [{lo}, {hi}]", self.xi0)));
        }
        if self.form != OdeForm::FullFourthOrder && self.xi0 == 0.0 {
            return Err(invalid("anchor must be non-zero for first-integral forms"));
        }
        if self.jet.iter().chain([self.a, self.b].iter()).any(|v| !v.is_finite()) {
            return Err(invalid("problem parameters must be finite"));
        }
        Ok(())
    }
}

/// The value of the A-integral for a jet.
pub fn a_integral(xi: f64, w: &[f64; 4]) -> f64 {
    let [w0, w1, w2, w3] = *w;
    3.0 * xi * w0 * w1 - 1.5 * w0 * w0 - 0.25 * xi * w3 + 0.25 * w2 + xi.powi(3) * w1
}

/// `Q` from the jet, `Q = G/ξ` with `G = A + (3/2)W² − W''/4`; at `ξ = 0`
/// the limit `G'(0) = 3WW' − W'''/4` is used.
pub fn q_value(xi: f64, w: &[f64; 4], a: f64) -> f64 {
    let [w0, w1, w2, w3] = *w;
    if xi == 0.0 {
        3.0 * w0 * w1 - 0.25 * w3
    } else {
        (a + 1.5 * w0 * w0 - 0.25 * w2) / xi
    }
}

/// The value of the B-integral for a jet and a given `A`.
pub fn b_integral(xi: f64, w: &[f64; 4], a: f64) -> f64 {
    let q = q_value(xi, w, a);
    w[1] * w[1] / 8.0 - 0.5 * w[0].powi(3) - a * w[0] - 0.5 * q * q
}

/// Complete jet at the anchor together with the integral constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialJet {
    pub xi0: f64,
    pub w: [f64; 4],
    pub a: f64,
    pub b: f64,
}

pub fn derive_initial_jet(p: &ShiftOdeProblem) -> Result<InitialJet> {
    p.validate()?;
    let xi = p.xi0;
    let mut w = p.jet;
    let a;
    match p.form {
        OdeForm::FullFourthOrder => {
            a = a_integral(xi, &w);
        }
        OdeForm::FirstIntegralA => {
            a = p.a;
            w[3] = solve_w3(xi, &w, a);
        }
        OdeForm::FirstIntegralAB => {
            a = p.a;
            let radicand = 0.25 * w[1] * w[1] - w[0].powi(3) - 2.0 * a * w[0] - 2.0 * p.b;
            if radicand < 0.0 {
                return Err(Error::BranchInfeasible { radicand });
            }
            let q = p.branch.sign() * radicand.sqrt();
            w[2] = 4.0 * (a + 1.5 * w[0] * w[0] - xi * q);
            w[3] = solve_w3(xi, &w, a);
        }
    }
    let b = match p.form {
        OdeForm::FirstIntegralAB => p.b,
        _ => b_integral(xi, &w, a),
    };
    Ok(InitialJet { xi0: xi, w, a, b })
}

fn solve_w3(xi: f64, w: &[f64; 4], a: f64) -> f64 {
    let [w0, w1, w2, _] = *w;
    4.0 * (3.0 * xi * w0 * w1 - 1.5 * w0 * w0 + 0.25 * w2 + xi.powi(3) * w1 - a) / xi
}

fn rhs(xi: f64, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[1];
    dy[1] = y[2];
    dy[2] = y[3];
    dy[3] = 4.0 * (3.0 * (y[1] * y[1] + y[0] * y[2]) + xi * xi * y[2] + 3.0 * xi * y[1]);
}

/// Local relative residua of the two first integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProfile {
    pub a_integral: Vec<f64>,
    /// `None` where `|ξ|` is below the cut-off (the B-integral divides by ξ).
    pub b_integral: Option<Vec<Option<f64>>>,
}

fn relative(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / scale
    }
}

/// Residual of the A-integral at one node, normalised by its largest term.
pub fn residual_a(xi: f64, w: &[f64; 4], a: f64) -> f64 {
    let [w0, w1, w2, w3] = *w;
    relative(&[3.0 * xi * w0 * w1, -1.5 * w0 * w0, -0.25 * xi * w3, 0.25 * w2, xi.powi(3) * w1, -a])
}

/// Residual of the B-integral at one node, normalised by its largest term.
pub fn residual_b(xi: f64, w: &[f64; 4], a: f64, b: f64) -> f64 {
    let q = q_value(xi, w, a);
    relative(&[-0.5 * q * q, -0.5 * w[0].powi(3), w[1] * w[1] / 8.0, -a * w[0], -b])
}

/// Residual profile for sampled `W` and derivatives; `b` enables the
/// B-integral check away from `|ξ| < origin_cutoff`.
pub fn check_residual(xs: &[f64], jets: &[[f64; 4]], a: f64, b: Option<f64>, origin_cutoff: f64) -> ResidualProfile {
    let a_integral = xs.iter().zip(jets).map(|(x, w)| residual_a(*x, w, a)).collect();
    let b_integral = b.map(|b| {
        xs.iter()
            .zip(jets)
            .map(|(x, w)| (x.abs() >= origin_cutoff).then(|| residual_b(*x, w, a, b)))
            .collect()
    });
    ResidualProfile { a_integral, b_integral }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationControls {
    pub rk: RkControls,
    /// `|W|` beyond this marks a singularity and stops that direction.
    pub blowup_cap: f64,
    pub residual_tol: f64,
    /// Nodes closer than this to a singularity are not certified.
    pub singular_margin: f64,
    /// The B-integral is not evaluated for `|ξ|` below this.
    pub origin_cutoff: f64,
}

impl Default for GenerationControls {
    fn default() -> Self {
        Self { rk: RkControls::default(), blowup_cap: 1e6, residual_tol: 1e-4, singular_margin: 0.1, origin_cutoff: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityCause {
    BlowUp,
    NonFinite,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityMarker {
    pub x: f64,
    pub cause: SingularityCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPotential {
    pub grid: Grid1D,
    pub jet: InitialJet,
    /// `U = W + ξ²/2`; `+∞` at nodes the integration did not reach.
    pub u: Vec<f64>,
    /// `[W, W', W'', W''']` per node (NaN where unreached).
    pub w: Vec<[f64; 4]>,
    /// Larger of the two local relative residua (NaN where unreached).
    pub residual: Vec<f64>,
    pub singularities: Vec<SingularityMarker>,
    /// Inclusive node range reached in both directions.
    pub valid: (usize, usize),
    pub worst_residual: f64,
    pub worst_x: f64,
    pub certified: bool,
    /// Set when a direction stopped on step underflow.
    pub partial: bool,
    pub mirror_at_origin: bool,
}

impl GeneratedPotential {
    /// Nodes strictly inside the reached range, with walls at both ends.
    pub fn valid_grid(&self) -> Result<Grid1D> {
        self.grid.slice(self.valid.0, self.valid.1)
    }

    pub fn valid_potential(&self) -> &[f64] {
        &self.u[self.valid.0..=self.valid.1]
    }

    /// `[U, U', U'', U''']` over the valid range.
    pub fn u_jets(&self) -> Vec<[f64; 4]> {
        (self.valid.0..=self.valid.1)
            .map(|i| {
                let x = self.grid.x(i);
                let [w0, w1, w2, w3] = self.w[i];
                [w0 + 0.5 * x * x, w1 + x, w2 + 1.0, w3]
            })
            .collect()
    }
}

/// Integrates and certifies; fails when the residual exceeds the tolerance.
pub fn generate(p: &ShiftOdeProblem, grid: &Grid1D, controls: &GenerationControls) -> Result<GeneratedPotential> {
    let g = generate_unchecked(p, grid, controls)?;
    if !g.certified {
        return Err(Error::ResidualTooLarge { worst: g.worst_residual, x: g.worst_x, tol: controls.residual_tol });
    }
    Ok(g)
}

/// Integrates and records the residual profile without rejecting.
pub fn generate_unchecked(
    p: &ShiftOdeProblem,
    grid: &Grid1D,
    controls: &GenerationControls,
) -> Result<GeneratedPotential> {
    let jet = derive_initial_jet(p)?;
    let xs = grid.nodes();
    let n = xs.len();
    if !(grid.x_min() <= jet.xi0 && jet.xi0 <= grid.x_max()) {
        return Err(invalid("anchor lies outside the grid"));
    }
    let mut w = vec![[f64::NAN; 4]; n];
    let mut singularities = Vec::new();
    let mut partial = false;

    let right: Vec<usize> = (0..n).filter(|&i| xs[i] >= jet.xi0).collect();
    let left: Vec<usize> = (0..n).rev().filter(|&i| xs[i] < jet.xi0).collect();
    for nodes in [right, left] {
        if nodes.is_empty() {
            continue;
        }
        let targets: Vec<f64> = nodes.iter().map(|&i| xs[i]).collect();
        let stop = integrate_direction(&jet, &targets, p.mirror_at_origin, controls, |k, y| {
            w[nodes[k]] = [y[0], y[1], y[2], y[3]];
        })?;
        if let Some(marker) = stop {
            partial |= marker.cause == SingularityCause::StepUnderflow;
            singularities.push(marker);
        }
    }

    let reached = |i: usize| w[i][0].is_finite();
    let anchor = grid.nearest(jet.xi0);
    let mut lo = anchor;
    let mut hi = anchor;
    while lo > 0 && reached(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < n && reached(hi + 1) {
        hi += 1;
    }
    if hi < lo + 2 {
        return Err(invalid("integration reached fewer than three grid nodes"));
    }

    let u: Vec<f64> = (0..n)
        .map(|i| if i >= lo && i <= hi { w[i][0] + 0.5 * xs[i] * xs[i] } else { f64::INFINITY })
        .collect();
    let mut residual = vec![f64::NAN; n];
    let mut worst = (0.0f64, jet.xi0);
    for i in lo..=hi {
        let ra = residual_a(xs[i], &w[i], jet.a);
        let rb = if xs[i].abs() >= controls.origin_cutoff { residual_b(xs[i], &w[i], jet.a, jet.b) } else { 0.0 };
        let r = ra.max(rb);
        residual[i] = r;
        let excluded = singularities.iter().any(|s| (xs[i] - s.x).abs() < controls.singular_margin);
        if !excluded && r > worst.0 {
            worst = (r, xs[i]);
        }
    }
    Ok(GeneratedPotential {
        grid: *grid,
        jet,
        u,
        w,
        residual,
        singularities,
        valid: (lo, hi),
        worst_residual: worst.0,
        worst_x: worst.1,
        certified: worst.0 < controls.residual_tol,
        partial,
        mirror_at_origin: p.mirror_at_origin,
    })
}

/// Integrates from the anchor through `targets` (monotone), calling `store`
/// with each reached target index. Returns the singularity that stopped it.
fn integrate_direction(
    jet: &InitialJet,
    targets: &[f64],
    mirror: bool,
    controls: &GenerationControls,
    mut store: impl FnMut(usize, &[f64]),
) -> Result<Option<SingularityMarker>> {
    let dir = if targets[targets.len() - 1] >= jet.xi0 { 1.0 } else { -1.0 };
    let crosses = mirror && jet.xi0 * dir < 0.0 && targets.iter().any(|x| x * jet.xi0 < 0.0);
    let cap = controls.blowup_cap;
    let halt = |s: &OdeState| s.y[0].abs() > cap;

    let mut state = OdeState::new(jet.xi0, jet.w.to_vec());
    let mut done = 0;
    let segments: Vec<(usize, bool)> = if crosses {
        let split = targets.iter().position(|x| x * jet.xi0 <= 0.0).unwrap_or(targets.len());
        vec![(split, true), (targets.len(), false)]
    } else {
        vec![(targets.len(), false)]
    };
    for (end, flip_after) in segments {
        let mut outs: Vec<f64> = targets[done..end].to_vec();
        if flip_after {
            outs.push(0.0);
        }
        let traj = integrate_rk_partial(rhs, &state, &outs, &controls.rk, halt)?;
        let reached = traj.states.len().min(end - done);
        for (k, s) in traj.states.iter().take(reached).enumerate() {
            store(done + k, &s.y);
        }
        let marker = match traj.termination {
            Termination::Completed => None,
            Termination::Halted { x } => Some(SingularityMarker { x, cause: SingularityCause::BlowUp }),
            Termination::NonFinite { x } => Some(SingularityMarker { x, cause: SingularityCause::NonFinite }),
            Termination::StepUnderflow { x } => Some(SingularityMarker { x, cause: SingularityCause::StepUnderflow }),
        };
        if marker.is_some() {
            return Ok(marker);
        }
        done = end;
        state = traj.last;
        if flip_after {
            // Q changes sign at the origin: 3WW' − W'''/4 → −(3WW' − W'''/4).
            let y = &mut state.y;
            y[3] = 24.0 * y[0] * y[1] - y[3];
            if targets.get(done) == Some(&0.0) {
                store(done, &state.y);
                done += 1;
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_examples() {
        let j = derive_initial_jet(&ShiftOdeProblem::preset("type1").unwrap()).unwrap();
        assert!((j.w[3] - 1.6).abs() < 1e-15);
        let mut p = ShiftOdeProblem::preset("type3").unwrap();
        p.branch = Branch::Minus;
        let j = derive_initial_jet(&p).unwrap();
        assert!((j.w[2] - 4.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(residual_a(1.0, &j.w, 0.0) < 1e-15);
        assert!(residual_b(1.0, &j.w, 0.0, -1.0) < 1e-15);
        let trivial = ShiftOdeProblem { a: 0.0, b: 0.0, ..ShiftOdeProblem::preset("type3").unwrap() };
        let j = derive_initial_jet(&trivial).unwrap();
        assert_eq!(j.w, [0.0; 4]);
    }

    #[test]
    fn infeasible_branch() {
        let p = ShiftOdeProblem { b: 1.0, ..ShiftOdeProblem::preset("type3").unwrap() };
        assert!(matches!(derive_initial_jet(&p), Err(Error::BranchInfeasible { .. })));
    }

    #[test]
    fn residual_examples() {
        assert_eq!(residual_a(0.7, &[0.0; 4], 0.0), 0.0);
        assert_eq!(residual_a(0.7, &[0.0; 4], 0.3), 1.0);
        let prof = check_residual(&[0.0, 0.5], &[[0.0; 4]; 2], 0.0, Some(0.0), 1e-2);
        assert_eq!(prof.a_integral, vec![0.0, 0.0]);
        assert_eq!(prof.b_integral.unwrap(), vec![None, Some(0.0)]);
    }

    #[test]
    fn zero_jet_gives_harmonic_potential() {
        let p = ShiftOdeProblem { a: 0.0, b: 0.0, ..ShiftOdeProblem::preset("type3").unwrap() };
        let g = Grid1D::new(-3.0, 3.0, 601).unwrap();
        let gen = generate(&p, &g, &GenerationControls::default()).unwrap();
        for (x, u) in g.nodes().iter().zip(&gen.u) {
            assert!((u - 0.5 * x * x).abs() < 1e-10);
        }
        assert!(gen.singularities.is_empty());
    }

    #[test]
    fn type1_has_two_singularities() {
        let p = ShiftOdeProblem::preset("type1").unwrap();
        let g = Grid1D::with_spacing(-6.0, 6.0, 0.01).unwrap();
        let gen = generate(&p, &g, &GenerationControls::default()).unwrap();
        assert_eq!(gen.singularities.len(), 2);
        let (l, r) = (gen.singularities[1].x, gen.singularities[0].x);
        assert!(l < 0.0 && r > 1.0, "{l} {r}");
        // A minimum between the walls.
        let u = gen.valid_potential();
        let (imin, _) = u.iter().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if *v < b.1 { (i, *v) } else { b });
        assert!(imin > 0 && imin < u.len() - 1);
    }

    #[test]
    fn fourth_order_form_reproduces_first_integral_form() {
        let p = ShiftOdeProblem::preset("type1").unwrap();
        let j = derive_initial_jet(&p).unwrap();
        let q = ShiftOdeProblem { form: OdeForm::FullFourthOrder, jet: j.w, ..p.clone() };
        let jq = derive_initial_jet(&q).unwrap();
        assert!((jq.a - p.a).abs() < 1e-15);
        assert!((jq.b - j.b).abs() < 1e-15);
    }

    #[test]
    fn branches_differ() {
        let g = Grid1D::with_spacing(-4.0, 4.0, 0.01).unwrap();
        let plus = ShiftOdeProblem::preset("type3").unwrap();
        let minus = ShiftOdeProblem { branch: Branch::Minus, ..plus.clone() };
        let c = GenerationControls::default();
        let a = generate_unchecked(&plus, &g, &c).unwrap();
        let b = generate_unchecked(&minus, &g, &c).unwrap();
        assert_ne!(a.u, b.u);
    }
}
