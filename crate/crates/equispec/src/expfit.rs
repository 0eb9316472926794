//! Thin-film level spacings against thickness: CSV ingestion, `1/d` and
//! power-law regressions, and a numerical check of the truncated well.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{invalid, Error, Result};
use crate::numerics::tridiag::EigenOptions;
use crate::potentials::PotentialModel;
use crate::spectral::{solve_model, suggested_grid};
use crate::{stats, units};

/// Thickness of one Bi(111) bilayer in nm.
pub const DEFAULT_BILAYER_NM: f64 = 0.4;

const HEADER: [&str; 4] = ["source", "d_value", "d_unit", "dE_meV"];
const SIGMA: &str = "sigma_meV";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThicknessUnit {
    #[serde(rename = "nm")]
    Nm,
    #[serde(rename = "BL")]
    Bilayer,
}

impl ThicknessUnit {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "nm" => Some(Self::Nm),
            "BL" => Some(Self::Bilayer),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Nm => "nm",
            Self::Bilayer => "BL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmRecord {
    pub source: String,
    pub d_value: f64,
    pub d_unit: ThicknessUnit,
    /// Thickness converted to nm.
    pub d_nm: f64,
    pub de_mev: f64,
    pub sigma_mev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmDataset {
    pub records: Vec<FilmRecord>,
    pub bilayer_nm: f64,
}

impl FilmDataset {
    pub fn new(records: Vec<FilmRecord>, bilayer_nm: f64) -> Result<Self> {
        if !(bilayer_nm > 0.0 && bilayer_nm.is_finite()) {
            return Err(invalid(format!("bilayer thickness must be positive, got {bilayer_nm}")));
        }
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        Ok(Self { records, bilayer_nm })
    }

    /// Writes the dataset in the format read by [`load_dataset`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let with_sigma = self.records.iter().any(|r| r.sigma_mev.is_some());
        let mut header = HEADER.to_vec();
        if with_sigma {
            header.push(SIGMA);
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.source.clone(), r.d_value.to_string(), r.d_unit.as_str().into(), r.de_mev.to_string()];
            if with_sigma {
                row.push(r.sigma_mev.map(|s| s.to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_dataset(path: &Path, bilayer_nm: f64) -> Result<FilmDataset> {
    read_dataset(std::fs::File::open(path)?, bilayer_nm)
}

/// Parses `source,d_value,d_unit,dE_meV[,sigma_meV]` rows; lines starting
/// with `#` are comments.
pub fn read_dataset<R: Read>(input: R, bilayer_nm: f64) -> Result<FilmDataset> {
    if !(bilayer_nm > 0.0 && bilayer_nm.is_finite()) {
        return Err(invalid(format!("bilayer thickness must be positive, got {bilayer_nm}")));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(input);
    let header = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) if e.is_io_error() => return Err(e.into()),
        Err(_) => return Err(Error::Dataset { line: 1, message: "unreadable header".into() }),
    };
    let names: Vec<&str> = header.iter().collect();
    let with_sigma = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == HEADER => false,
        [a, b, c, d, e] if [*a, *b, *c, *d] == HEADER && *e == SIGMA => true,
        _ if names.iter().all(|n| n.is_empty()) => return Err(Error::NoRecords),
        _ => {
            let line = header.position().map_or(1, |p| p.line() as usize);
            return Err(Error::Dataset {
                line,
                message: format!("expected header '{},{SIGMA}' (last column optional)", HEADER.join(",")),
            });
        }
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| Error::Dataset { line, message };
        let expected = if with_sigma { 4..=5 } else { 4..=4 };
        if !expected.contains(&row.len()) {
            return Err(fail(format!("expected {} fields, found {}", names.len(), row.len())));
        }
        let number = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = row[i].parse().map_err(|_| fail(format!("{name} '{}' is not a number", &row[i])))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(fail(format!("{name} must be positive, got {v}")))
            }
        };
        let d_value = number(1, "d_value")?;
        let d_unit = ThicknessUnit::parse(&row[2]).ok_or_else(|| fail(format!("d_unit '{}' is not nm or BL", &row[2])))?;
        let de_mev = number(3, "dE_meV")?;
        let sigma_mev = match row.get(4) {
            Some(s) if !s.is_empty() => Some(number(4, SIGMA)?),
            _ => None,
        };
        let d_nm = match d_unit {
            ThicknessUnit::Nm => d_value,
            ThicknessUnit::Bilayer => d_value * bilayer_nm,
        };
        records.push(FilmRecord { source: row[0].to_string(), d_value, d_unit, d_nm, de_mev, sigma_mev });
    }
    FilmDataset::new(records, bilayer_nm)
}

/// Exact `ΔE = C/d` data at the given bilayer counts.
pub fn synthetic_inverse(c_ev_nm: f64, bilayers: &[f64], bilayer_nm: f64, source: &str) -> Result<FilmDataset> {
    let records = bilayers
        .iter()
        .map(|&n| FilmRecord {
            source: source.into(),
            d_value: n,
            d_unit: ThicknessUnit::Bilayer,
            d_nm: n * bilayer_nm,
            de_mev: 1e3 * c_ev_nm / (n * bilayer_nm),
            sigma_mev: None,
        })
        .collect();
    FilmDataset::new(records, bilayer_nm)
}

/// `E_2 − E_1 = 3π²ħ²/(2m*d²)` of an infinite square well of width `d`.
pub fn synthetic_square_well(d_nm: &[f64], mass_ratio: f64, source: &str) -> Result<FilmDataset> {
    let c = units::hbar2_over_2m_mev_nm2(mass_ratio);
    let records = d_nm
        .iter()
        .map(|&d| FilmRecord {
            source: source.into(),
            d_value: d,
            d_unit: ThicknessUnit::Nm,
            d_nm: d,
            de_mev: 3.0 * std::f64::consts::PI.powi(2) * c / (d * d),
            sigma_mev: None,
        })
        .collect();
    FilmDataset::new(records, DEFAULT_BILAYER_NM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ΔE = C/d`.
    FixedInverse,
    /// `ΔE = C·d^(−α)`.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Weight rows by `1/σ²` when every row carries an uncertainty.
    pub use_sigma: bool,
    pub bootstrap_samples: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { use_sigma: true, bootstrap_samples: 1000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// `C` in eV·nm^α (α = 1 for the fixed model).
    #[serde(rename = "C_eV_nm")]
    pub c_ev_nm: f64,
    pub alpha: Option<f64>,
    /// 95% residual-bootstrap interval for α.
    pub alpha_ci: Option<(f64, f64)>,
    /// `C²/(8ħ²)`; only defined for the fixed model.
    #[serde(rename = "V0_over_mstar_eV")]
    pub v0_over_mstar_ev: Option<f64>,
    /// `C` expressed per bilayer, `C/d_BL` in eV.
    pub c_per_bilayer_ev: f64,
    pub r_squared: f64,
    pub rms_residual_mev: f64,
    pub n_records: usize,
    pub weighted: bool,
}

impl FitResult {
    pub fn predict_mev(&self, d_nm: f64) -> f64 {
        1e3 * self.c_ev_nm * d_nm.powf(-self.alpha.unwrap_or(1.0))
    }
}

pub fn fit_inverse_law(data: &FilmDataset, model: FitModel, opts: &FitOptions) -> Result<FitResult> {
    let n = data.records.len();
    let needed = match model {
        FitModel::FixedInverse => 3,
        FitModel::PowerLaw => 4,
    };
    if n < needed {
        return Err(invalid(format!("{model:?} needs at least {needed} records, got {n}")));
    }
    let d: Vec<f64> = data.records.iter().map(|r| r.d_nm).collect();
    let e: Vec<f64> = data.records.iter().map(|r| r.de_mev).collect();
    let weighted = opts.use_sigma && data.records.iter().all(|r| r.sigma_mev.is_some());
    let sigma: Vec<f64> = data.records.iter().map(|r| r.sigma_mev.unwrap_or(1.0)).collect();
    if d.iter().all(|x| (x - d[0]).abs() <= 1e-12 * d[0]) {
        return Err(Error::SingularDesign("all thicknesses coincide".into()));
    }
    let (c_ev_nm, alpha, alpha_ci, r_squared) = match model {
        FitModel::FixedInverse => {
            let w: Vec<f64> = sigma.iter().map(|s| if weighted { 1.0 / (s * s) } else { 1.0 }).collect();
            let x: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
            let sxy: f64 = (0..n).map(|i| w[i] * x[i] * e[i]).sum();
            let sxx: f64 = (0..n).map(|i| w[i] * x[i] * x[i]).sum();
            let c = sxy / sxx;
            let r2 = weighted_r_squared(&e, &w, |i| c * x[i]);
            (c / 1e3, None, None, r2)
        }
        FitModel::PowerLaw => {
            // σ(ln ΔE) ≈ σ/ΔE.
            let w: Vec<f64> =
                (0..n).map(|i| if weighted { (e[i] / sigma[i]).powi(2) } else { 1.0 }).collect();
            let lx: Vec<f64> = d.iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
            let fit = stats::linear_fit(&lx, &ly, Some(&w))?;
            let fitted: Vec<f64> = lx.iter().map(|x| fit.intercept + fit.slope * x).collect();
            let resid: Vec<f64> = ly.iter().zip(&fitted).map(|(y, f)| y - f).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut alphas = Vec::with_capacity(opts.bootstrap_samples);
            for _ in 0..opts.bootstrap_samples {
                let y: Vec<f64> = fitted.iter().map(|f| f + resid[rng.gen_range(0..n)]).collect();
                alphas.push(-stats::linear_fit(&lx, &y, Some(&w))?.slope);
            }
            let ci = (!alphas.is_empty()).then(|| {
                let mut data = Data::new(alphas);
                (data.quantile(0.025), data.quantile(0.975))
            });
            let r2 = weighted_r_squared(&e, &vec![1.0; n], |i| fitted[i].exp());
            (fit.intercept.exp() / 1e3, Some(-fit.slope), ci, r2)
        }
    };
    let result = FitResult {
        model,
        c_ev_nm,
        alpha,
        alpha_ci,
        v0_over_mstar_ev: (model == FitModel::FixedInverse).then(|| units::v0_over_mstar_from_c(c_ev_nm)),
        c_per_bilayer_ev: c_ev_nm * data.bilayer_nm.powf(-alpha.unwrap_or(1.0)),
        r_squared,
        rms_residual_mev: 0.0,
        n_records: n,
        weighted,
    };
    let rms = ((0..n).map(|i| (e[i] - result.predict_mev(d[i])).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(FitResult { rms_residual_mev: rms, ..result })
}

fn weighted_r_squared(y: &[f64], w: &[f64], fitted: impl Fn(usize) -> f64) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ss_tot: f64 = y.iter().zip(w).map(|(v, wi)| wi * (v - ybar).powi(2)).sum();
    let ss_res: f64 = (0..y.len()).map(|i| w[i] * (y[i] - fitted(i)).powi(2)).sum();
    if ss_tot == 0.0 {
        f64::from(u8::from(ss_res == 0.0))
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedOptions {
    pub mass_ratio: f64,
    /// Grid spacing in nm.
    pub spacing_nm: f64,
    /// Levels are compared below this fraction of V0.
    pub agreement_fraction: f64,
}

impl Default for TruncatedOptions {
    fn default() -> Self {
        Self { mass_ratio: 1.0, spacing_nm: 0.005, agreement_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedComparison {
    pub v0_over_mstar_ev: f64,
    pub d_nm: f64,
    pub v0_mev: f64,
    pub predicted_spacing_mev: f64,
    /// Numerical levels below `agreement_fraction·V0`, in meV.
    pub levels_mev: Vec<f64>,
    pub spacings_mev: Vec<f64>,
    /// Largest `|ΔE_n/ΔE − 1|` over consecutive levels.
    pub max_spacing_deviation: f64,
    /// Largest `|E_n/(ΔE(n + 1/2)) − 1|`.
    pub max_level_deviation: f64,
    pub warning: Option<String>,
}

/// Solves the truncated harmonic well and compares it with `ΔE = (2ħ/d)√(2V0/m*)`.
pub fn cross_validate_truncated(
    v0_over_mstar_ev: f64,
    d_nm: f64,
    opts: &TruncatedOptions,
) -> Result<TruncatedComparison> {
    if !(v0_over_mstar_ev > 0.0 && d_nm > 0.0) {
        return Err(invalid("V0/m* and d must be positive"));
    }
    let model = PotentialModel::truncated(v0_over_mstar_ev, d_nm, opts.mass_ratio)?;
    let PotentialModel::TruncatedHarmonic { v0_mev, .. } = model else { unreachable!() };
    let de = units::truncated_well_spacing_mev(v0_over_mstar_ev, d_nm);
    let cap = opts.agreement_fraction * v0_mev;
    let expected = (cap / de).ceil() as usize + 2;
    let grid = suggested_grid(&model, opts.spacing_nm, expected)?;
    let k = expected.min(grid.n_points() - 2);
    let sol = solve_model(&model, &grid, k, &EigenOptions::default())?;
    let levels: Vec<f64> = sol.energies.into_iter().take_while(|e| *e < cap).collect();
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let max_spacing_deviation = spacings.iter().fold(0.0f64, |m, s| m.max((s / de - 1.0).abs()));
    let max_level_deviation =
        levels.iter().enumerate().fold(0.0f64, |m, (n, e)| m.max((e / (de * (n as f64 + 0.5)) - 1.0).abs()));
    let warning = (levels.len() < 2).then(|| format!("only {} level(s) below {cap:.1} meV", levels.len()));
    Ok(TruncatedComparison {
        v0_over_mstar_ev,
        d_nm,
        v0_mev,
        predicted_spacing_mev: de,
        levels_mev: levels,
        spacings_mev: spacings,
        max_spacing_deviation,
        max_level_deviation,
        warning,
    })
}
