use equispec::exact::{int, parse_rational, rat_to_f64, BigRational};
use equispec::perturbation::{
    correction_polynomial, diagonal_polynomial, equidistance_verdict, offdiagonal_polynomial, Violation, CONVENTION,
};
use serde::Serialize;

use crate::args::{parse_range, PerturbArgs};
use crate::output::{num, quoted, OutDir, Table, SCHEMA_VERSION};
use crate::{CliError, CliResult, Context};

#[derive(Serialize)]
struct OrderSummary {
    order: usize,
    degree_in_k: Option<usize>,
    polynomial: String,
}

#[derive(Serialize)]
struct VerdictReport {
    schema_version: u32,
    command: &'static str,
    convention: &'static str,
    perturbation: String,
    equidistant: bool,
    first_violation: Option<Violation>,
    orders: Vec<OrderSummary>,
    k_range: (usize, usize),
    note: Option<String>,
}

fn coefficients(args: &PerturbArgs, j_cap: usize) -> CliResult<Vec<BigRational>> {
    let u = match (args.monomial, &args.poly) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--monomial and --poly are mutually exclusive".into())),
        (None, None) => return Err(CliError::Usage("one of --monomial or --poly is required".into())),
        (Some(j), None) => {
            let mut u = vec![int(0); j + 1];
            u[j] = int(1);
            u
        }
        (None, Some(list)) => list
            .split(',')
            .map(|c| parse_rational(c.trim()).map_err(|e| CliError::Usage(format!("--poly: {e}"))))
            .collect::<CliResult<_>>()?,
    };
    let degree = u.iter().rposition(|c| *c != int(0)).unwrap_or(0);
    if degree > j_cap {
        return Err(CliError::Usage(format!("perturbation degree {degree} exceeds --j-cap {j_cap}")));
    }
    Ok(u)
}

fn render_perturbation(u: &[BigRational]) -> String {
    let terms: Vec<String> = u
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != int(0))
        .map(|(j, c)| match j {
            0 => format!("({c})"),
            1 => format!("({c})*xi"),
            _ => format!("({c})*xi^{j}"),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn run(mut args: PerturbArgs, ctx: &Context) -> CliResult<()> {
    let j_cap = *args.j_cap.get_or_insert(10);
    let u = coefficients(&args, j_cap)?;
    let orders = *args.orders.get_or_insert(2);
    if !(1..=4).contains(&orders) {
        return Err(CliError::Usage(format!("--orders must be between 1 and 4, got {orders}")));
    }
    let k_range = parse_range("k", args.k.get_or_insert_with(|| "0..10".into()))?;

    let verdict = equidistance_verdict(&u, orders, k_range.0..=k_range.1)?;
    let polys = (1..=orders).map(|p| correction_polynomial(&u, p)).collect::<Result<Vec<_>, _>>()?;

    let out = OutDir::create(ctx)?;
    let mut tables = Table::new(&["j", "l", "polynomial"]);
    for (j, c) in u.iter().enumerate() {
        if *c == int(0) {
            continue;
        }
        if j % 2 == 0 {
            tables.row(&[j.to_string(), "0".into(), quoted(&diagonal_polynomial(j)?.render("k"))]);
        }
        for l in (1..=j).filter(|l| (j - l) % 2 == 0) {
            tables.row(&[j.to_string(), l.to_string(), quoted(&offdiagonal_polynomial(j, l)?.render("k"))]);
        }
    }
    out.write("tables.csv", &tables.into_string())?;

    let mut corrections = Table::new(&["k", "p", "exact", "value"]);
    for (i, k) in verdict.k_values.iter().enumerate() {
        for (p, row) in verdict.corrections.iter().enumerate() {
            let e = &row[i];
            corrections.row(&[k.to_string(), (p + 1).to_string(), e.to_string(), num(rat_to_f64(e))]);
        }
    }
    out.write("corrections.csv", &corrections.into_string())?;

    let report = VerdictReport {
        schema_version: SCHEMA_VERSION,
        command: "perturb",
        convention: CONVENTION,
        perturbation: render_perturbation(&u),
        equidistant: verdict.equidistant,
        first_violation: verdict.first_violation,
        orders: polys
            .iter()
            .enumerate()
            .map(|(p, poly)| OrderSummary { order: p + 1, degree_in_k: poly.degree(), polynomial: poly.render("k") })
            .collect(),
        k_range,
        note: verdict.note,
    };
    out.write_json("verdict.json", &report)?;
    out.write_config("perturb", &args)
}
