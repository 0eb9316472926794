//! Command arguments. Every field is optional so that a flag, a key in the
//! config file or a built-in default can supply it, in that order.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

macro_rules! overlay {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl $t {
            /// Fields set here win over those in `base`.
            pub fn overlay(self, base: Self) -> Self {
                Self { $($f: self.$f.or(base.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Potential family: harmonic, truncated, isotonic or darboux.
    #[arg(long)]
    pub potential: Option<String>,
    /// Generated potential: type1, type2 or type3 (instead of --potential).
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of levels.
    #[arg(long)]
    pub k: Option<usize>,
    /// Grid spacing (ξ, or nm for the truncated well).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Isotonic strength A.
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    /// Darboux index m.
    #[arg(long)]
    pub m: Option<usize>,
    /// Half line for singular families: positive or negative.
    #[arg(long)]
    pub side: Option<String>,
    /// Truncated well V0/m* in eV/m_e.
    #[arg(long = "V0-over-m")]
    #[serde(rename = "V0_over_m")]
    pub v0_over_m: Option<f64>,
    /// Truncated well thickness in nm.
    #[arg(long)]
    pub d_nm: Option<f64>,
    /// Effective mass m*/m_e.
    #[arg(long)]
    pub mass_ratio: Option<f64>,
    /// Level window for the statistics, "lo..hi" (inclusive).
    #[arg(long)]
    pub window: Option<String>,
    /// Write states.csv with every eigenvector.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub states: Option<bool>,
    /// Report a dimensionless solve in meV and nm using ħω (with --mass-ratio).
    #[arg(long)]
    pub hbar_omega_mev: Option<f64>,
    /// Rescale energies so that the mean class-1 spacing equals this value.
    #[arg(long)]
    pub anchor_class1: Option<f64>,
}

overlay!(SolveArgs {
    potential, preset, k, h, x_min, x_max, a, m, side, v0_over_m, d_nm, mass_ratio, window, states,
    hbar_omega_mev, anchor_class1,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    /// type1, type2 or type3.
    #[arg(long)]
    pub preset: Option<String>,
    /// full, a or ab (inferred from the given constants when absent).
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long = "A", allow_hyphen_values = true)]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// Anchor ξ0.
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w3: Option<f64>,
    /// Set W and all given derivatives at the anchor to zero.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub zero_jet: Option<bool>,
    /// plus or minus.
    #[arg(long)]
    pub branch: Option<String>,
    /// Flip the sign of Q when crossing ξ = 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mirror: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi_max: Option<f64>,
    /// Output grid spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Fixed Runge–Kutta step.
    #[arg(long)]
    pub rk_step: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
}

overlay!(GenerateArgs {
    preset, form, a, b, xi0, w, w1, w2, w3, zero_jet, branch, mirror, xi_min, xi_max, h, rk_step, residual_tol,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbArgs {
    /// Perturbation ξ^j.
    #[arg(long)]
    pub monomial: Option<usize>,
    /// Coefficients u_0,u_1,... of Σ u_i ξ^i (integers or fractions p/q).
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<String>,
    /// Highest order p.
    #[arg(long)]
    pub orders: Option<usize>,
    /// Levels "lo..hi" (inclusive).
    #[arg(long)]
    pub k: Option<String>,
    /// Largest accepted power of ξ.
    #[arg(long)]
    pub j_cap: Option<usize>,
}

overlay!(PerturbArgs { monomial, poly, orders, k, j_cap });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArgs {
    /// CSV with columns source,d_value,d_unit,dE_meV[,sigma_meV].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// fixed-inverse or power-law.
    #[arg(long)]
    pub model: Option<String>,
    /// Bilayer thickness in nm.
    #[arg(long)]
    pub bilayer_nm: Option<f64>,
    /// Weight rows by 1/σ² when sigma_meV is present.
    #[arg(long)]
    pub use_sigma: Option<bool>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points in fitline.csv.
    #[arg(long)]
    pub samples: Option<usize>,
}

overlay!(FitArgs { data, model, bilayer_nm, use_sigma, bootstrap, seed, samples });

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub out_dir: Option<PathBuf>,
    pub svg: Option<bool>,
    pub solve: Option<SolveArgs>,
    pub generate: Option<GenerateArgs>,
    pub perturb: Option<PerturbArgs>,
    pub fit: Option<FitArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Parses "lo..hi" (inclusive) into a pair.
pub fn parse_range(field: &str, s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("{field}: expected 'lo..hi', got '{s}'"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let flags = SolveArgs { k: Some(5), ..Default::default() };
        let file = SolveArgs { k: Some(9), h: Some(0.1), ..Default::default() };
        let merged = flags.overlay(file);
        assert_eq!(merged.k, Some(5));
        assert_eq!(merged.h, Some(0.1));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("k", "0..10").unwrap(), (0, 10));
        assert_eq!(parse_range("k", "2..=4").unwrap(), (2, 4));
        assert!(parse_range("k", "4..2").is_err());
        assert!(parse_range("k", "x").is_err());
    }

    #[test]
    fn config_keys_match_flags() {
        let cfg: ConfigFile = toml::from_str("svg = true\n[solve]\npotential = 'isotonic'\nA = 1.0\nside = 'positive'\n")
            .unwrap();
        let solve = cfg.solve.unwrap();
        assert_eq!(solve.a, Some(1.0));
        assert!(toml::from_str::<ConfigFile>("[solve]\nbogus = 1\n").is_err());
    }
}
