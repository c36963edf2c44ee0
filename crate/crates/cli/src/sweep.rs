//! `sweep`: one protocol over a list of values of a config key, with an
//! optional exponential fit of the resulting efficiencies.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;
use storedlight::protocols::{add_noise, fit_exponential, sweep, sweep_to_csv, EfficiencyPoint, Protocol};

use crate::error::{CliError, CliResult};
use crate::output::{config_hash, OutDir};
use crate::report::write_run;
use crate::setup::{require_valid, ConfigArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Abscissa {
    /// Storage-to-retrieval time.
    Elapsed,
    /// Conveyor run time.
    Transport,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_parser = crate::parse_protocol)]
    pub protocol: Protocol,
    /// Dotted config key to sweep, in file units (e.g. protocol.storage_time_us).
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required_unless_present = "linspace"
    )]
    pub values: Vec<f64>,
    /// START,STOP,COUNT evenly spaced values (instead of --values).
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "values")]
    pub linspace: Vec<f64>,
    /// Fit A·exp(−t/τ) to the efficiencies.
    #[arg(long)]
    pub fit: bool,
    /// Time axis for the fit.
    #[arg(long, value_enum, default_value = "elapsed")]
    pub abscissa: Abscissa,
    /// Relative Gaussian noise added to the fitted points (fitter validation only).
    #[arg(long, requires = "seed")]
    pub noise: Option<f64>,
    /// Seed for --noise; nothing random happens without it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn values(args: &SweepArgs) -> CliResult<Vec<f64>> {
    if args.linspace.is_empty() {
        return Ok(args.values.clone());
    }
    let [a, b, n] = args.linspace[..] else {
        return Err(CliError::Usage("--linspace takes START,STOP,COUNT".into()));
    };
    if n < 1.0 || n.fract() != 0.0 {
        return Err(CliError::Usage(format!(
            "--linspace count must be a positive integer, got {n}"
        )));
    }
    let n = n as usize;
    Ok((0..n)
        .map(|i| {
            if n == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let cfg = args.config.load()?;
    let values = values(args)?;
    if values.is_empty() {
        return Err(CliError::Usage("no sweep values given".into()));
    }
    if let Some(noise) = args.noise {
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(CliError::Usage(format!("--noise must be ≥ 0, got {noise}")));
        }
    }
    let mut warnings = require_valid(&cfg)?;
    for &v in &values {
        let run_cfg = cfg.with_override(&args.param, json!(v))?;
        for w in require_valid(&run_cfg).map_err(|e| match e {
            CliError::Validation(v2) => {
                CliError::Validation(v2.into_iter().map(|m| format!("{} = {v}: {m}", args.param)).collect())
            }
            other => other,
        })? {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }
    let rows = sweep(&cfg, args.protocol, &args.param, &values)?;

    let mut points: Vec<EfficiencyPoint> = rows
        .iter()
        .map(|r| r.point(args.abscissa == Abscissa::Transport))
        .collect();
    if let (Some(noise), Some(seed)) = (args.noise, args.seed) {
        points = add_noise(&points, noise, seed);
    }
    let fit = if args.fit {
        Some(fit_exponential(&points)?)
    } else {
        None
    };

    let mut out = OutDir::create(OutDir::resolve(args.out_dir.as_deref()))?;
    out.write("config.toml", &cfg.to_toml_string())?;
    out.write("sweep.csv", &sweep_to_csv(&args.param, &rows))?;
    let mut pts_csv = String::from("t_s,eta,sigma\n");
    for p in &points {
        pts_csv.push_str(&format!("{},{},{}\n", p.abscissa, p.efficiency, p.sigma));
    }
    out.write("fit_points.csv", &pts_csv)?;
    for (k, row) in rows.iter().enumerate() {
        write_run(&mut out, &format!("run_{k:03}"), &row.result)?;
    }
    let abscissa = match args.abscissa {
        Abscissa::Elapsed => "elapsed",
        Abscissa::Transport => "transport",
    };
    let fit_json = fit.map(|f| json!({ "abscissa": abscissa, "time_unit": "s", "result": f }));
    if let Some(f) = &fit {
        say!(
            "fit: tau = {:.6} ms ± {:.6} ms, A = {:.6}",
            f.tau * 1e3,
            f.tau_err * 1e3,
            f.amplitude
        );
        out.write_json("fit.json", fit_json.as_ref().expect("fit present"))?;
    }
    out.write_json(
        "summary.json",
        &json!({
            "protocol": args.protocol.name(),
            "parameter": args.param,
            "values": values,
            "params": cfg.to_json_value(),
            "eta": rows.iter().map(|r| r.result.efficiency).collect::<Vec<_>>(),
            "fit": fit_json,
            "noise": args.noise.map(|n| json!({ "relative": n, "seed": args.seed })),
            "rows": rows,
            "warnings": warnings,
        }),
    )?;
    let dir = out.finish(Some(config_hash(&cfg)), None, args.seed)?;
    say!("{} runs, wrote {}", rows.len(), dir.display());
    Ok(())
}
