use equispec::numerics::{EigenOptions, Grid1D};
use equispec::potentials::{reference_spectrum, DomainSide, PotentialModel};
use equispec::shift_ode::{generate, GenerationControls, ShiftOdeProblem, SingularityMarker};
use equispec::spectral::{
    classify_states, level_rows, solve_generated, solve_model, spacing_report, suggested_grid, ClassifyOptions,
    EigenSolution, SpectrumReport, StateClass,
};
use equispec::units::PhysicalScale;
use serde::Serialize;

use crate::args::{parse_range, SolveArgs};
use crate::output::{num, OutDir, Table, SCHEMA_VERSION};
use crate::svg::{chart, Series, Style};
use crate::{CliError, CliResult, Context};

#[derive(Serialize)]
struct ReferenceComparison {
    description: String,
    spacing: f64,
    offset: Option<f64>,
    ground_gap: Option<f64>,
    valid_below: Option<f64>,
    compared_levels: usize,
    max_abs_deviation: Option<f64>,
}

#[derive(Serialize)]
struct GenerationSummary {
    certified: bool,
    worst_residual: f64,
    worst_x: f64,
    singularities: Vec<SingularityMarker>,
    valid_range: (f64, f64),
}

#[derive(Serialize)]
struct Anchored {
    class1_target: f64,
    scale: f64,
    class1_mean: f64,
    class2_mean: Option<f64>,
    merged_mean: f64,
    class2_over_class1: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    schema_version: u32,
    command: &'static str,
    potential: String,
    metadata: equispec::spectral::SolveMetadata,
    spectrum: SpectrumReport,
    reference: Option<ReferenceComparison>,
    generation: Option<GenerationSummary>,
    anchored: Option<Anchored>,
}

fn missing(field: &str, family: &str) -> CliError {
    CliError::Usage(format!("--{field} is required for the {family} potential"))
}

fn side(args: &SolveArgs, default: DomainSide) -> CliResult<DomainSide> {
    match args.side.as_deref() {
        None => Ok(default),
        Some("positive") => Ok(DomainSide::Positive),
        Some("negative") => Ok(DomainSide::Negative),
        Some("full") | Some("full_line") => Ok(DomainSide::FullLine),
        Some(other) => Err(CliError::Usage(format!("--side: expected positive, negative or full, got '{other}'"))),
    }
}

fn model_from(args: &SolveArgs, family: &str) -> CliResult<PotentialModel> {
    let model = match family {
        "harmonic" => PotentialModel::Harmonic,
        "truncated" => {
            let v = args.v0_over_m.ok_or_else(|| missing("V0-over-m", family))?;
            let d = args.d_nm.ok_or_else(|| missing("d-nm", family))?;
            PotentialModel::truncated(v, d, args.mass_ratio.unwrap_or(1.0))?
        }
        "isotonic" => {
            let a = args.a.ok_or_else(|| missing("A", family))?;
            PotentialModel::Isotonic { a, side: side(args, DomainSide::Positive)? }
        }
        "darboux" => {
            let m = args.m.ok_or_else(|| missing("m", family))?;
            let default = if m % 2 == 1 { DomainSide::Positive } else { DomainSide::FullLine };
            PotentialModel::Darboux { m, side: side(args, default)? }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--potential: unknown family '{other}' (expected harmonic, truncated, isotonic or darboux)"
            )))
        }
    };
    model.validate()?;
    Ok(model)
}

pub fn run(mut args: SolveArgs, ctx: &Context) -> CliResult<()> {
    let opts = EigenOptions::default();
    let (mut sol, mut reference, generation, label) = match (args.potential.clone(), args.preset.clone()) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--potential and --preset are mutually exclusive".into())),
        (None, None) => return Err(CliError::Usage("one of --potential or --preset is required".into())),
        (None, Some(preset)) => {
            let mut problem = ShiftOdeProblem::preset(&preset)?;
            let x_min = *args.x_min.get_or_insert(problem.xi_range.0);
            let x_max = *args.x_max.get_or_insert(problem.xi_range.1);
            problem.xi_range = (x_min, x_max);
            let h = *args.h.get_or_insert(0.002);
            let k = *args.k.get_or_insert(20);
            let grid = Grid1D::with_spacing(x_min, x_max, h)?;
            let gen = generate(&problem, &grid, &GenerationControls::default())?;
            let sol = solve_generated(&gen, k, &opts)?;
            let summary = GenerationSummary {
                certified: gen.certified,
                worst_residual: gen.worst_residual,
                worst_x: gen.worst_x,
                singularities: gen.singularities.clone(),
                valid_range: (grid.x(gen.valid.0), grid.x(gen.valid.1)),
            };
            (sol, None, Some(summary), preset)
        }
        (Some(family), None) => {
            let model = model_from(&args, &family)?;
            let reference = reference_spectrum(&model, 0).ok();
            let is_truncated = matches!(model, PotentialModel::TruncatedHarmonic { .. });
            let h = *args.h.get_or_insert(0.005);
            if is_truncated {
                args.mass_ratio.get_or_insert(1.0);
            }
            let default_k = match (&reference, is_truncated) {
                (Some(r), true) => (r.valid_below.unwrap_or(0.0) / r.spacing - 0.5).ceil().max(0.0) as usize + 1,
                _ => 20,
            };
            let k = *args.k.get_or_insert(default_k);
            let grid = match (args.x_min, args.x_max) {
                (Some(a), Some(b)) => Grid1D::with_spacing(a, b, h)?,
                (None, None) => suggested_grid(&model, h, k)?,
                _ => return Err(CliError::Usage("--x-min and --x-max must be given together".into())),
            };
            args.x_min = Some(grid.x_min());
            args.x_max = Some(grid.x_max());
            let sol = solve_model(&model, &grid, k, &opts)?;
            (sol, reference_spectrum(&model, k.saturating_sub(1)).ok(), None, model.name())
        }
    };

    if let Some(hw) = args.hbar_omega_mev {
        if sol.metadata.kinetic != equispec::numerics::KineticScale::Dimensionless {
            return Err(CliError::Usage("--hbar-omega-mev applies to dimensionless potentials only".into()));
        }
        let scale = PhysicalScale::new(args.mass_ratio.unwrap_or(1.0), hw)?;
        sol = sol.to_physical(&scale)?;
        if let Some(r) = reference.as_mut() {
            r.spacing *= hw;
            r.offset = r.offset.map(|o| scale.to_energy_mev(o));
            r.ground_gap = r.ground_gap.map(|g| g * hw);
            r.levels.iter_mut().for_each(|l| *l = scale.to_energy_mev(*l));
        }
    }

    let k = sol.energies.len();
    let window = match &args.window {
        Some(w) => parse_range("window", w)?,
        None => {
            let below = reference.as_ref().and_then(|r| r.valid_below).map(|cap| sol.energies.iter().filter(|e| **e < cap).count());
            (0, below.unwrap_or(k).clamp(1, k) - 1)
        }
    };
    args.window = Some(format!("{}..{}", window.0, window.1));
    args.states.get_or_insert(false);

    let mut spectrum = spacing_report(&sol.energies, window.0..=window.1)?;
    let classes = classify_states(&sol, &ClassifyOptions { window: Some(window), ..Default::default() })?;
    let anchored = args.anchor_class1.and_then(|target| {
        let c1 = classes.class1.as_ref()?.mean;
        let scale = target / c1;
        let c2 = classes.class2.as_ref().map(|c| c.mean * scale);
        Some(Anchored {
            class1_target: target,
            scale,
            class1_mean: c1 * scale,
            class2_mean: c2,
            merged_mean: spectrum.mean_spacing * scale,
            class2_over_class1: c2.map(|c| c / target),
        })
    });
    spectrum.classes = Some(classes);
    let reference = reference.map(|r| compare(&sol, r));

    let out = OutDir::create(ctx)?;
    write_tables(&out, &sol, &spectrum, args.states == Some(true))?;
    if out.svg {
        let levels: Vec<(f64, f64)> = sol.energies.iter().enumerate().map(|(n, e)| (n as f64, *e)).collect();
        let class1: Vec<(f64, f64)> = spectrum
            .classes
            .iter()
            .flat_map(|c| c.states.iter())
            .filter(|s| s.class == StateClass::Class1)
            .map(|s| (s.n as f64, s.energy))
            .collect();
        out.write(
            "levels.svg",
            &chart(
                &format!("{label}: energy levels"),
                "n",
                "E",
                &[Series { name: "all", points: levels, style: Style::Markers }, Series { name: "class 1", points: class1, style: Style::Markers }],
            ),
        )?;
        out.write("potential.svg", &chart(&format!("{label}: potential"), "x", "V", &[potential_series(&sol)]))?;
    }
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        command: "solve",
        potential: label,
        metadata: sol.metadata.clone(),
        spectrum,
        reference,
        generation,
        anchored,
    };
    out.write_json("report.json", &report)?;
    out.write_config("solve", &args)?;
    log::info!("solved {k} levels");
    Ok(())
}

fn compare(sol: &EigenSolution, r: equispec::potentials::ClosedFormSpectrum) -> ReferenceComparison {
    let compared: Vec<f64> = r
        .levels
        .iter()
        .zip(&sol.energies)
        .filter(|(_, e)| r.valid_below.map_or(true, |cap| **e < cap))
        .map(|(l, e)| (l - e).abs())
        .collect();
    ReferenceComparison {
        description: r.description,
        spacing: r.spacing,
        offset: r.offset,
        ground_gap: r.ground_gap,
        valid_below: r.valid_below,
        compared_levels: compared.len(),
        max_abs_deviation: compared.iter().copied().reduce(f64::max),
    }
}

fn potential_series(sol: &EigenSolution) -> Series<'static> {
    let top = sol.energies.last().copied().unwrap_or(0.0);
    let span = top - sol.energies.first().copied().unwrap_or(0.0);
    let cap = top + span.max(1.0);
    let step = (sol.grid.n_points() / 2000).max(1);
    let points = (0..sol.grid.n_points())
        .step_by(step)
        .map(|i| (sol.grid.x(i), sol.potential[i].min(cap)))
        .collect();
    Series { name: "V", points, style: Style::Line }
}

fn write_tables(out: &OutDir, sol: &EigenSolution, spectrum: &SpectrumReport, states: bool) -> CliResult<()> {
    let mut energies = Table::new(&["n", "E"]);
    for (n, e) in sol.energies.iter().enumerate() {
        energies.row(&[n.to_string(), num(*e)]);
    }
    out.write("energies.csv", &energies.into_string())?;

    let mut levels = Table::new(&["n", "E", "dE", "class", "ipr", "mean_x"]);
    for r in level_rows(sol, spectrum.classes.as_ref()) {
        let class = match r.class {
            Some(StateClass::Class1) => "1",
            Some(StateClass::Class2) => "2",
            None => "",
        };
        levels.row(&[r.n.to_string(), num(r.e), r.de.map(num).unwrap_or_default(), class.into(), num(r.ipr), num(r.mean_x)]);
    }
    out.write("levels.csv", &levels.into_string())?;

    let mut pot = Table::new(&["x", "V"]);
    for (i, v) in sol.potential.iter().enumerate() {
        pot.row(&[num(sol.grid.x(i)), num(*v)]);
    }
    out.write("potential.csv", &pot.into_string())?;

    if states {
        let mut header = vec!["x".to_string()];
        header.extend((0..sol.states.len()).map(|n| format!("psi_{n}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Table::new(&header);
        for i in 0..sol.grid.n_points() {
            let mut row = vec![num(sol.grid.x(i))];
            row.extend(sol.states.iter().map(|s| num(s[i])));
            t.row(&row);
        }
        out.write("states.csv", &t.into_string())?;
    }
    Ok(())
}
