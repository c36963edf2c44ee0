//! `fit`: exponential decay fit of efficiencies read from a CSV file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use storedlight::protocols::{fit_exponential, EfficiencyPoint, FitResult};

use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, OutDir};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row; needs a time column and an efficiency column.
    pub input: PathBuf,
    /// Time column [default: first of t, t_s, t_ms, t_us, elapsed_ms, transport_time_ms].
    #[arg(long)]
    pub x: Option<String>,
    /// Efficiency column.
    #[arg(long, default_value = "eta")]
    pub y: String,
    /// Per-point standard deviation column [default: `sigma` if present].
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

const TIME_COLUMNS: [&str; 6] = ["t", "t_s", "t_ms", "t_us", "elapsed_ms", "transport_time_ms"];

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub input: String,
    pub x_column: String,
    pub y_column: String,
    pub sigma_column: Option<String>,
    pub points: usize,
    /// τ and its error are in the units of `x_column`.
    #[serde(flatten)]
    pub fit: FitResult,
}

/// Reads (x, y, σ) columns by header name.
pub fn read_points(
    text: &str,
    x: Option<&str>,
    y: &str,
    sigma: Option<&str>,
) -> CliResult<(Vec<EfficiencyPoint>, String, Option<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("malformed CSV header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let x_name = match x {
        Some(name) => name.to_string(),
        None => TIME_COLUMNS
            .into_iter()
            .find(|c| find(c).is_some())
            .ok_or_else(|| CliError::Input(format!("no time column among {TIME_COLUMNS:?}")))?
            .to_string(),
    };
    let missing = |name: &str| {
        CliError::Input(format!(
            "column `{name}` not found in header {:?}",
            headers.iter().collect::<Vec<_>>()
        ))
    };
    let xi = find(&x_name).ok_or_else(|| missing(&x_name))?;
    let yi = find(y).ok_or_else(|| missing(y))?;
    let sigma_name = match sigma {
        Some(name) => {
            find(name).ok_or_else(|| missing(name))?;
            Some(name.to_string())
        }
        None => find("sigma").map(|_| "sigma".to_string()),
    };
    let si = sigma_name.as_deref().and_then(find);

    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let field = |i: usize| -> CliResult<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| CliError::Input(format!("row {}: `{raw}` is not a number", line + 2)))
        };
        points.push(EfficiencyPoint {
            abscissa: field(xi)?,
            efficiency: field(yi)?,
            sigma: si.map(field).transpose()?.unwrap_or(0.0),
        });
    }
    Ok((points, x_name, sigma_name))
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let bytes = read_input(&args.input)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input("input is not UTF-8".into()))?;
    let (points, x_column, sigma_column) = read_points(&text, args.x.as_deref(), &args.y, args.sigma.as_deref())?;
    let fit = fit_exponential(&points)?;
    let report = FitReport {
        input: args.input.display().to_string(),
        x_column,
        y_column: args.y.clone(),
        sigma_column,
        points: points.len(),
        fit,
    };
    say!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?
    );
    let mut out = OutDir::create(OutDir::resolve(args.out_dir.as_deref()))?;
    out.write_json("fit.json", &report)?;
    out.finish(None, Some(sha256_hex(&bytes)), None)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_columns_by_name() {
        let text = "index,t_ms,eta,sigma\n0,0.0,0.1,0.01\n1, 1.0 ,0.05,0.01\n";
        let (pts, x, s) = read_points(text, None, "eta", None).unwrap();
        assert_eq!(x, "t_ms");
        assert_eq!(s.as_deref(), Some("sigma"));
        assert_eq!(
            pts[1],
            EfficiencyPoint {
                abscissa: 1.0,
                efficiency: 0.05,
                sigma: 0.01
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            read_points("a,b\n1,2\n", None, "eta", None),
            Err(CliError::Input(_))
        ));
        assert!(matches!(
            read_points("t,eta\n1,x\n", None, "eta", None),
            Err(CliError::Input(_))
        ));
        assert!(matches!(
            read_points("t,eta\n1,2,3\n", None, "eta", None),
            Err(CliError::Input(_))
        ));
        assert!(matches!(
            read_points("t,eta\n1,2\n", Some("t"), "eta", Some("err")),
            Err(CliError::Input(_))
        ));
    }
}
