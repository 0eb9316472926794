use equispec::numerics::{Grid1D, RkControls};
use equispec::shift_ode::{
    generate_unchecked, Branch, GeneratedPotential, GenerationControls, OdeForm, ShiftOdeProblem, SingularityMarker,
};
use serde::Serialize;

use crate::args::GenerateArgs;
use crate::output::{num, OutDir, Table, SCHEMA_VERSION};
use crate::svg::{chart, Series, Style};
use crate::{CliError, CliResult, Context};

#[derive(Serialize)]
struct GenerateReport<'a> {
    schema_version: u32,
    command: &'static str,
    problem: &'a ShiftOdeProblem,
    initial_jet: [f64; 4],
    a_integral: f64,
    b_integral: f64,
    certified: bool,
    partial: bool,
    worst_residual: f64,
    worst_x: f64,
    residual_tol: f64,
    singularities: &'a [SingularityMarker],
    valid_range: (f64, f64),
}

fn parse_form(s: &str) -> CliResult<OdeForm> {
    match s {
        "full" => Ok(OdeForm::FullFourthOrder),
        "a" | "A" => Ok(OdeForm::FirstIntegralA),
        "ab" | "AB" => Ok(OdeForm::FirstIntegralAB),
        other => Err(CliError::Usage(format!("--form: expected full, a or ab, got '{other}'"))),
    }
}

fn parse_branch(s: &str) -> CliResult<Branch> {
    match s {
        "plus" | "+" => Ok(Branch::Plus),
        "minus" | "-" => Ok(Branch::Minus),
        other => Err(CliError::Usage(format!("--branch: expected plus or minus, got '{other}'"))),
    }
}

/// Builds the problem from a preset (if any) with every given flag applied on top.
fn problem_from(args: &mut GenerateArgs) -> CliResult<ShiftOdeProblem> {
    let mut p = match &args.preset {
        Some(name) => ShiftOdeProblem::preset(name)?,
        None => {
            let form = if args.b.is_some() {
                OdeForm::FirstIntegralAB
            } else if args.w3.is_some() {
                OdeForm::FullFourthOrder
            } else {
                OdeForm::FirstIntegralA
            };
            if form != OdeForm::FullFourthOrder && args.a.is_none() && args.form.as_deref() != Some("full") {
                return Err(CliError::Usage("--A is required unless the full jet (--w3) is given".into()));
            }
            ShiftOdeProblem {
                form,
                a: 0.0,
                b: 0.0,
                xi0: 1.0,
                jet: [0.0; 4],
                branch: Branch::Plus,
                xi_range: (-6.0, 6.0),
                mirror_at_origin: false,
            }
        }
    };
    if let Some(f) = &args.form {
        p.form = parse_form(f)?;
    }
    if let Some(b) = &args.branch {
        p.branch = parse_branch(b)?;
    }
    if args.zero_jet == Some(true) {
        p.jet = [0.0; 4];
    }
    for (slot, value) in p.jet.iter_mut().zip([args.w, args.w1, args.w2, args.w3]) {
        if let Some(v) = value {
            *slot = v;
        }
    }
    p.a = args.a.unwrap_or(p.a);
    p.b = args.b.unwrap_or(p.b);
    p.xi0 = args.xi0.unwrap_or(p.xi0);
    p.mirror_at_origin = args.mirror.unwrap_or(p.mirror_at_origin);
    p.xi_range = (args.xi_min.unwrap_or(p.xi_range.0), args.xi_max.unwrap_or(p.xi_range.1));
    p.validate()?;

    // Record what was used so config.toml reproduces the run without the preset.
    args.xi0 = Some(p.xi0);
    args.xi_min = Some(p.xi_range.0);
    args.xi_max = Some(p.xi_range.1);
    args.mirror = Some(p.mirror_at_origin);
    Ok(p)
}

pub fn run(mut args: GenerateArgs, ctx: &Context) -> CliResult<()> {
    let problem = problem_from(&mut args)?;
    let h = *args.h.get_or_insert(0.002);
    let controls = GenerationControls {
        rk: RkControls::fixed(*args.rk_step.get_or_insert(1e-4)),
        residual_tol: *args.residual_tol.get_or_insert(1e-4),
        ..Default::default()
    };
    let grid = Grid1D::with_spacing(problem.xi_range.0, problem.xi_range.1, h)?;
    let gen = generate_unchecked(&problem, &grid, &controls)?;

    let out = OutDir::create(ctx)?;
    write_tables(&out, &gen)?;
    if out.svg {
        let (lo, hi) = gen.valid;
        let points = (lo..=hi).map(|i| (grid.x(i), gen.u[i])).collect();
        out.write("potential.svg", &chart("generated potential", "ξ", "U", &[Series { name: "U", points, style: Style::Line }]))?;
    }
    let report = GenerateReport {
        schema_version: SCHEMA_VERSION,
        command: "generate",
        problem: &problem,
        initial_jet: gen.jet.w,
        a_integral: gen.jet.a,
        b_integral: gen.jet.b,
        certified: gen.certified,
        partial: gen.partial,
        worst_residual: gen.worst_residual,
        worst_x: gen.worst_x,
        residual_tol: controls.residual_tol,
        singularities: &gen.singularities,
        valid_range: (grid.x(gen.valid.0), grid.x(gen.valid.1)),
    };
    out.write_json("report.json", &report)?;
    out.write_config("generate", &args)?;
    if !gen.certified {
        return Err(CliError::Numerical(format!(
            "residual {:.3e} at ξ = {:.4} exceeds the tolerance {:.1e}",
            gen.worst_residual, gen.worst_x, controls.residual_tol
        )));
    }
    Ok(())
}

fn write_tables(out: &OutDir, gen: &GeneratedPotential) -> CliResult<()> {
    let (lo, hi) = gen.valid;
    let mut pot = Table::new(&["x", "U"]);
    let mut res = Table::new(&["x", "res"]);
    for i in lo..=hi {
        let x = gen.grid.x(i);
        pot.row(&[num(x), num(gen.u[i])]);
        res.row(&[num(x), num(gen.residual[i])]);
    }
    out.write("potential.csv", &pot.into_string())?;
    out.write("residual.csv", &res.into_string())
}
