//! File emission shared by the commands. Floats are written with 12
//! significant digits so reruns produce identical bytes.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::{CliError, CliResult, Context};

pub const SCHEMA_VERSION: u32 = 1;

/// `%.12g`-style rendering.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Row-oriented CSV text with a header line.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Wraps a string for CSV when it contains a separator or quote.
pub fn quoted(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct OutDir {
    root: PathBuf,
    pub svg: bool,
}

impl OutDir {
    pub fn create(ctx: &Context) -> CliResult<Self> {
        std::fs::create_dir_all(&ctx.out_dir).map_err(|source| CliError::Io { path: ctx.out_dir.clone(), source })?;
        Ok(Self { root: ctx.out_dir.clone(), svg: ctx.svg })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
        self.write(name, &(text + "\n"))
    }

    /// Writes the resolved configuration of a command as `config.toml`.
    pub fn write_config<T: Serialize>(&self, command: &str, resolved: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Resolved<'a, T: Serialize> {
            svg: bool,
            #[serde(flatten)]
            section: std::collections::BTreeMap<&'a str, &'a T>,
        }
        let section = std::iter::once((command, resolved)).collect();
        let text = toml::to_string(&Resolved { svg: self.svg, section })
            .map_err(|e| CliError::Usage(format!("cannot serialise configuration: {e}")))?;
        self.write("config.toml", &text)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(138.0211), "138.0211");
        assert_eq!(num(-2.5e-7), "-2.5e-07");
        assert_eq!(num(6.02214076e23), "6.02214076e+23");
        assert_eq!(num(100.0), "100");
        assert_eq!(num(123456789012.0), "123456789012");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(quoted("a,b"), "\"a,b\"");
        assert_eq!(quoted("plain"), "plain");
    }
}
