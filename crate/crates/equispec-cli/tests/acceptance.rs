//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use equispec::exact::{int, rat, BigRational, RationalPolynomial};
use equispec::expfit::{
    cross_validate_truncated, fit_inverse_law, load_dataset, synthetic_inverse, synthetic_square_well, FitModel,
    FitOptions, TruncatedOptions, DEFAULT_BILAYER_NM,
};
use equispec::numerics::{EigenOptions, Grid1D};
use equispec::perturbation::{
    correction_degree, diagonal_polynomial, equidistance_verdict, matrix_element, offdiagonal_polynomial,
};
use equispec::potentials::{DomainSide, PotentialModel};
use equispec::shift_ode::{generate_unchecked, GenerationControls, ShiftOdeProblem};
use equispec::spectral::{
    apply_shift_operator, classify_states, quadratic_trend, solve_generated, solve_model, spacing_report,
    suggested_grid, ClassifyOptions, EigenSolution, ShiftOperator,
};

/// Outcome of one sub-check.
struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn max_dev(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn spacings(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| w[1] - w[0]).collect()
}

type Outcome = Result<Vec<Check>, equispec::Error>;
type Criterion = (&'static str, fn() -> Result<Vec<Check>, String>);

fn harmonic_baseline() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::with_spacing(-12.0, 12.0, 0.001)?;
    let sol = solve_model(&PotentialModel::Harmonic, &grid, 20, &EigenOptions::default())?;
    let dev = max_dev(sol.energies.iter().copied(), (0..20).map(|n| n as f64 + 0.5));
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        check(dev < 1e-4, format!("max |eps_n - (n+1/2)| = {dev:.2e} for n <= 19")),
        check(secs < 10.0, format!("{secs:.2} s")),
    ])
}

fn isotonic() -> Outcome {
    let mut out = Vec::new();
    for a in [0.5, 1.0, 4.0] {
        let model = PotentialModel::Isotonic { a, side: DomainSide::Positive };
        let grid = suggested_grid(&model, 0.002, 11)?;
        let sol = solve_model(&model, &grid, 11, &EigenOptions::default())?;
        let offset = 0.5 + 0.25 * (1.0 + 8.0 * a).sqrt();
        let dev = max_dev(sol.energies.iter().copied(), (0..11).map(|n| offset + n as f64));
        out.push(check(dev < 1e-3, format!("A={a}: max dev {dev:.2e}")));
    }
    Ok(out)
}

fn truncated_well() -> Outcome {
    let oracle = support::harmonic_film_spacing_mev(8.0, 16.0);
    let cmp = cross_validate_truncated(8.0, 16.0, &TruncatedOptions::default())?;
    let worst = cmp.spacings_mev.iter().map(|s| (s / 138.0 - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![
        check(within(oracle, 138.0, 0.01), format!("closed form {oracle:.3} meV")),
        check(
            cmp.spacings_mev.len() >= 10 && worst < 0.01,
            format!("{} levels below 0.9 V0, worst spacing off 138 meV by {:.3}%", cmp.levels_mev.len(), 100.0 * worst),
        ),
    ])
}

fn data_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bi_film_spacings.csv")
}

fn experimental_fit() -> Outcome {
    let c_true = 3.34 * DEFAULT_BILAYER_NM;
    let v0_true = support::v0_over_m_from_c(c_true);
    let opts = FitOptions::default();
    let bls: Vec<f64> = (7..=40).step_by(3).map(f64::from).collect();
    let synth = synthetic_inverse(c_true, &bls, DEFAULT_BILAYER_NM, "synthetic")?;
    let fixed = fit_inverse_law(&synth, FitModel::FixedInverse, &opts)?;
    let v0 = fixed.v0_over_mstar_ev.unwrap_or(f64::NAN);

    let real = load_dataset(&data_path(), DEFAULT_BILAYER_NM)?;
    let real_fit = fit_inverse_law(&real, FitModel::FixedInverse, &opts)?;
    let real_v0 = real_fit.v0_over_mstar_ev.unwrap_or(f64::NAN);

    let inverse_alpha = fit_inverse_law(&synth, FitModel::PowerLaw, &opts)?.alpha.unwrap_or(f64::NAN);
    let ds: Vec<f64> = (4..=16).map(f64::from).collect();
    let well = synthetic_square_well(&ds, 1.0, "square well")?;
    let well_alpha = fit_inverse_law(&well, FitModel::PowerLaw, &opts)?.alpha.unwrap_or(f64::NAN);

    Ok(vec![
        check(within(fixed.c_ev_nm, c_true, 0.005), format!("synthetic C {:.4} eV nm", fixed.c_ev_nm)),
        check(within(v0, 2.93, 0.005) && within(v0, v0_true, 0.005), format!("synthetic V0/m* {v0:.4}")),
        check(
            within(real_fit.c_ev_nm, c_true, 0.10) && within(real_v0, 2.93, 0.10),
            format!("shipped data C {:.4}, V0/m* {real_v0:.3}", real_fit.c_ev_nm),
        ),
        check((inverse_alpha - 1.0).abs() < 0.1, format!("alpha(1/d) {inverse_alpha:.4}")),
        check((well_alpha - 2.0).abs() < 0.1, format!("alpha(square well) {well_alpha:.4}")),
    ])
}

fn darboux() -> Outcome {
    let mut out = Vec::new();
    let k = 8;
    // Even members: ground state lowered below a unit ladder by a gap of 1 + 2m.
    for (m, index) in [(2, 4), (4, 8)] {
        let model = PotentialModel::Darboux { m: index, side: DomainSide::FullLine };
        let sol = solve_model(&model, &suggested_grid(&model, 0.002, k)?, k, &EigenOptions::default())?;
        let s = spacings(&sol.energies);
        let dev = max_dev(s[1..].iter().copied(), std::iter::repeat(1.0));
        let gap = s[0];
        let target = 1.0 + 2.0 * m as f64;
        out.push(check(
            dev < 1e-3 && (gap - target).abs() < 1e-2,
            format!("m={m}: spacing dev {dev:.1e}, gap {gap:.4}"),
        ));
    }
    for m in [1, 3] {
        let model = PotentialModel::Darboux { m, side: DomainSide::Positive };
        let sol = solve_model(&model, &suggested_grid(&model, 0.002, k)?, k, &EigenOptions::default())?;
        let dev = max_dev(spacings(&sol.energies), std::iter::repeat(2.0));
        out.push(check(dev < 1e-3, format!("m={m}: half-line spacing dev {dev:.1e}")));
    }
    Ok(out)
}

fn preset_solution(name: &str, k: usize, out: &mut Vec<Check>) -> Result<EigenSolution, equispec::Error> {
    let p = ShiftOdeProblem::preset(name)?;
    let grid = Grid1D::with_spacing(p.xi_range.0, p.xi_range.1, 0.002)?;
    let gen = generate_unchecked(&p, &grid, &GenerationControls::default())?;
    out.push(check(gen.worst_residual < 1e-4, format!("{name} residual {:.1e}", gen.worst_residual)));
    solve_generated(&gen, k, &EigenOptions::default())
}

const ANCHOR_MEV: f64 = 358.0;

fn shift_presets() -> Outcome {
    let mut out = Vec::new();

    let t1 = preset_solution("type1", 30, &mut out)?;
    let (_, low_cv) = support::mean_and_cv(&spacings(&t1.energies[..8]));
    out.push(check(low_cv < 0.05, format!("type1 low-8 CV {:.1}%", 100.0 * low_cv)));
    let q = quadratic_trend(&t1.energies, 8..=29)?;
    out.push(check(q.a > 0.0 && q.r_squared > 0.99, format!("type1 top a {:.3e}, R2 {:.5}", q.a, q.r_squared)));

    for (name, k, window, merged_target) in [("type2", 100, (1, 95), 180.0), ("type3", 90, (5, 82), 108.0)] {
        let sol = preset_solution(name, k, &mut out)?;
        let cls = classify_states(&sol, &ClassifyOptions { window: Some(window), ..Default::default() })?;
        let c1 = cls.class1.as_ref().map_or((f64::NAN, f64::NAN), |s| (s.mean, s.cv));
        let c2 = cls.class2.as_ref().map_or(f64::NAN, |s| s.mean);
        out.push(check(cls.split, format!("{name} two classes: {}", cls.split)));
        out.push(check(c1.1 < 0.05, format!("{name} class-1 CV {:.2}%", 100.0 * c1.1)));
        if name == "type3" {
            let ratio = c2 / c1.0;
            out.push(check(within(ratio, 267.0 / 358.0, 0.10), format!("type3 class2/class1 {ratio:.3}")));
        }
        let merged = spacing_report(&sol.energies, window.0..=window.1)?.mean_spacing * ANCHOR_MEV / c1.0;
        out.push(check(within(merged, merged_target, 0.15), format!("{name} merged mean {merged:.1} meV")));
    }
    Ok(out)
}

fn poly(scale: (i64, i64), factors: &[&[(i64, i64)]]) -> RationalPolynomial {
    factors
        .iter()
        .fold(RationalPolynomial::constant(rat(scale.0, scale.1)), |acc, f| acc.mul(&RationalPolynomial::from_ratios(f)))
}

fn perturbation_tables() -> Outcome {
    let start = Instant::now();
    let one: &[(i64, i64)] = &[(1, 1)];
    let diag = [
        (0, poly((1, 1), &[one])),
        (2, poly((1, 1), &[&[(1, 2), (1, 1)]])),
        (4, poly((1, 1), &[&[(3, 4), (3, 2), (3, 2)]])),
        (6, poly((1, 1), &[&[(15, 8), (5, 1), (15, 4), (5, 2)]])),
        (8, poly((1, 1), &[&[(105, 16), (35, 2), (175, 8), (35, 4), (35, 8)]])),
    ];
    let k: &[(i64, i64)] = &[(0, 1), (1, 1)];
    let offdiag = [
        (1, 1, poly((1, 1), &[one])),
        (3, 1, poly((3, 2), &[k])),
        (5, 1, poly((5, 4), &[&[(1, 1), (0, 1), (2, 1)]])),
        (7, 1, poly((35, 8), &[k, &[(2, 1), (0, 1), (1, 1)]])),
        (2, 2, poly((1, 1), &[one])),
        (4, 2, poly((1, 1), &[&[(-1, 1), (2, 1)]])),
        (6, 2, poly((15, 4), &[&[(1, 1), (-1, 1), (1, 1)]])),
        (8, 2, poly((7, 2), &[&[(-1, 1), (2, 1)], &[(3, 1), (-1, 1), (1, 1)]])),
        (3, 3, poly((1, 1), &[one])),
        (5, 3, poly((5, 2), &[&[(-1, 1), (1, 1)]])),
        (7, 3, poly((21, 4), &[&[(2, 1), (-2, 1), (1, 1)]])),
        (9, 3, poly((21, 4), &[&[(-1, 1), (1, 1)], &[(9, 1), (-4, 1), (2, 1)]])),
        (4, 4, poly((1, 1), &[one])),
        (6, 4, poly((3, 2), &[&[(-3, 1), (2, 1)]])),
        (8, 4, poly((7, 2), &[&[(7, 1), (-6, 1), (2, 1)]])),
        (10, 4, poly((15, 4), &[&[(-3, 1), (2, 1)], &[(13, 1), (-6, 1), (2, 1)]])),
    ];
    let mut mismatches = Vec::new();
    for (j, expected) in &diag {
        if diagonal_polynomial(*j)? != *expected {
            mismatches.push(format!("u_kk^({j})"));
        }
    }
    for (j, l, expected) in &offdiag {
        if offdiagonal_polynomial(*j, *l)? != *expected {
            mismatches.push(format!("p_k{l}^({j})"));
        }
    }

    let rule = support::gauss_hermite(24);
    let mut worst: f64 = 0.0;
    for j in 0..=8 {
        for m in 0..=10 {
            for n in 0..=10 {
                let q = support::quadrature_element(&rule, m, n, j);
                let e = matrix_element(m, n, j).to_f64();
                worst = worst.max((q - e).abs() / q.abs().max(1.0));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        check(mismatches.is_empty(), format!("{} of 21 tables match exactly {mismatches:?}", 21 - mismatches.len())),
        check(worst < 1e-10, format!("quadrature worst rel dev {worst:.1e}")),
        check(secs < 30.0, format!("{secs:.2} s")),
    ])
}

fn monomial(j: usize) -> Vec<BigRational> {
    let mut u = vec![int(0); j + 1];
    u[j] = int(1);
    u
}

fn scaling_theorems() -> Outcome {
    let mut wrong = Vec::new();
    let mut expect = |j: usize, p: usize, deg: usize| -> Result<(), equispec::Error> {
        let got = correction_degree(j, p)?;
        if got != Some(deg) {
            wrong.push(format!("j={j} p={p}: {got:?} != {deg}"));
        }
        Ok(())
    };
    for j in (0..=8).step_by(2) {
        expect(j, 1, j / 2)?;
    }
    for j in 2..=6 {
        expect(j, 2, j - 1)?;
    }
    for j in [2, 4, 6] {
        expect(j, 3, 3 * j / 2 - 2)?;
    }

    let equidistant = [
        ("1", vec![int(1)]),
        ("xi", monomial(1)),
        ("xi^2", monomial(2)),
        ("a xi^2 + b xi + c", vec![rat(7, 2), rat(-5, 1), rat(2, 3)]),
    ];
    let violating = [
        ("xi^3", monomial(3)),
        ("xi^4", monomial(4)),
        ("xi^2 + 0.1 xi^4", vec![int(0), int(0), int(1), int(0), rat(1, 10)]),
    ];
    let mut verdicts = Vec::new();
    for (name, u) in &equidistant {
        if !equidistance_verdict(u, 3, 0..=8)?.equidistant {
            verdicts.push(format!("{name} not equidistant"));
        }
    }
    for (name, u) in &violating {
        if equidistance_verdict(u, 3, 0..=8)?.first_violation.is_none() {
            verdicts.push(format!("{name} has no violation"));
        }
    }
    Ok(vec![
        check(wrong.is_empty(), format!("degrees {wrong:?}")),
        check(verdicts.is_empty(), format!("verdicts {verdicts:?}")),
    ])
}

fn shift_operators() -> Outcome {
    let opts = EigenOptions::default();
    let harmonic = solve_model(&PotentialModel::Harmonic, &Grid1D::with_spacing(-12.0, 12.0, 0.002)?, 12, &opts)?;
    let raise = apply_shift_operator(&harmonic, &ShiftOperator::HarmonicRaise)?;
    let h_min = raise.iter().take(11).map(|s| s.overlap).fold(1.0, f64::min);
    let lower = apply_shift_operator(&harmonic, &ShiftOperator::HarmonicLower)?;
    let ground = lower[0].norm_ratio;

    let model = PotentialModel::Isotonic { a: 1.0, side: DomainSide::Positive };
    let iso = solve_model(&model, &suggested_grid(&model, 0.002, 7)?, 7, &opts)?;
    let scores = apply_shift_operator(&iso, &ShiftOperator::Isotonic { a: 1.0 })?;
    let i_min = scores.iter().take(6).map(|s| s.overlap).fold(1.0, f64::min);
    Ok(vec![
        check(h_min >= 0.999, format!("harmonic min overlap {h_min:.6}")),
        check(i_min >= 0.999, format!("isotonic min overlap {i_min:.6}")),
        check(ground < 1e-3, format!("lowering on ground state {ground:.1e}")),
    ])
}

fn run_cli(config: &Path, out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_equispec"))
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {status}"))
    }
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let path = entry.path();
        if path.is_dir() {
            files.extend(tree(&path).into_iter().map(|(p, b)| (Path::new(&entry.file_name()).join(p), b)));
        } else {
            files.push((PathBuf::from(entry.file_name()), std::fs::read(&path).unwrap_or_default()));
        }
    }
    files.sort();
    files
}

fn determinism() -> Result<Vec<Check>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.toml");
    let text = format!(
        "svg = true\n\n[solve]\npotential = \"harmonic\"\nk = 12\nstates = true\n\n\
         [generate]\npreset = \"type1\"\n\n[perturb]\npoly = \"0,0,1/2,0,1/10\"\norders = 3\n\n\
         [fit]\ndata = {:?}\nmodel = \"power-law\"\nbootstrap = 200\n",
        data_path().display().to_string()
    );
    std::fs::write(&config, text).map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        for cmd in ["solve", "generate", "perturb", "fit"] {
            run_cli(&config, &dir.path().join(run).join(cmd), &[cmd])?;
        }
    }
    let (a, b) = (tree(&dir.path().join("a")), tree(&dir.path().join("b")));
    let differing: Vec<_> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.display().to_string()).collect();
    Ok(vec![check(
        a.len() == b.len() && a.len() >= 16 && differing.is_empty(),
        format!("{} files compared, differing {differing:?}", a.len()),
    )])
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("harmonic baseline", || harmonic_baseline().map_err(|e| e.to_string())),
        ("isotonic ladder", || isotonic().map_err(|e| e.to_string())),
        ("truncated well", || truncated_well().map_err(|e| e.to_string())),
        ("thickness fit", || experimental_fit().map_err(|e| e.to_string())),
        ("darboux ladders", || darboux().map_err(|e| e.to_string())),
        ("shift-ODE presets", || shift_presets().map_err(|e| e.to_string())),
        ("perturbation tables", || perturbation_tables().map_err(|e| e.to_string())),
        ("scaling theorems", || scaling_theorems().map_err(|e| e.to_string())),
        ("shift operators", || shift_operators().map_err(|e| e.to_string())),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(checks) => {
                let pass = checks.iter().all(|c| c.pass);
                let detail = checks
                    .iter()
                    .map(|c| if c.pass { c.detail.clone() } else { format!("[failed] {}", c.detail) })
                    .collect::<Vec<_>>()
                    .join("; ");
                (pass, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {:>2} {:<20} {}  {detail}", i + 1, name, if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
