use equispec::expfit::{fit_inverse_law, load_dataset, FitModel, FitOptions, FitResult, DEFAULT_BILAYER_NM};
use serde::Serialize;

use crate::args::FitArgs;
use crate::output::{num, OutDir, Table, SCHEMA_VERSION};
use crate::svg::{chart, Series, Style};
use crate::{CliError, CliResult, Context};

#[derive(Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    command: &'static str,
    data: String,
    bilayer_nm: f64,
    #[serde(flatten)]
    fit: &'a FitResult,
}

fn parse_model(s: &str) -> CliResult<FitModel> {
    match s {
        "fixed-inverse" | "fixed_inverse" => Ok(FitModel::FixedInverse),
        "power-law" | "power_law" => Ok(FitModel::PowerLaw),
        other => Err(CliError::Usage(format!("--model: expected fixed-inverse or power-law, got '{other}'"))),
    }
}

pub fn run(mut args: FitArgs, ctx: &Context) -> CliResult<()> {
    let path = args.data.clone().ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let model = parse_model(args.model.get_or_insert_with(|| "fixed-inverse".into()))?;
    let defaults = FitOptions::default();
    let opts = FitOptions {
        use_sigma: *args.use_sigma.get_or_insert(defaults.use_sigma),
        bootstrap_samples: *args.bootstrap.get_or_insert(defaults.bootstrap_samples),
        seed: *args.seed.get_or_insert(defaults.seed),
    };
    let bilayer_nm = *args.bilayer_nm.get_or_insert(DEFAULT_BILAYER_NM);
    let samples = *args.samples.get_or_insert(200);
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let data = load_dataset(&path, bilayer_nm)?;
    let fit = fit_inverse_law(&data, model, &opts)?;

    let (d_lo, d_hi) = data
        .records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.d_nm), hi.max(r.d_nm)));
    let ratio = (d_hi / d_lo).powf(1.0 / (samples - 1) as f64);
    let line: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let d = d_lo * ratio.powi(i as i32);
            (d, fit.predict_mev(d))
        })
        .collect();

    let out = OutDir::create(ctx)?;
    let mut table = Table::new(&["d_nm", "dE_meV"]);
    for (d, e) in &line {
        table.row(&[num(*d), num(*e)]);
    }
    out.write("fitline.csv", &table.into_string())?;
    if out.svg {
        let measured = data.records.iter().map(|r| (r.d_nm, r.de_mev)).collect();
        out.write(
            "fit.svg",
            &chart(
                "level spacing against thickness",
                "d (nm)",
                "ΔE (meV)",
                &[Series { name: "data", points: measured, style: Style::Markers }, Series { name: "fit", points: line, style: Style::Line }],
            ),
        )?;
    }
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        data: path.display().to_string(),
        bilayer_nm,
        fit: &fit,
    };
    out.write_json("fit.json", &report)?;
    out.write_config("fit", &args)
}
