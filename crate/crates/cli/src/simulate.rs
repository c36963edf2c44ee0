//! `simulate`: one protocol run with its time series and summary.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use storedlight::protocols::{run_protocol, Protocol};

use crate::error::{CliError, CliResult};
use crate::output::{config_hash, OutDir};
use crate::report::{results_row, write_run, RESULTS_HEADER};
use crate::setup::{parse_duration, require_valid, ConfigArgs, Duration};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_parser = crate::parse_protocol, default_value = "store_retrieve")]
    pub protocol: Protocol,
    /// Storage or transport time with unit, e.g. `5us` or `3ms`.
    #[arg(long = "T", value_name = "DURATION", value_parser = parse_duration)]
    pub time: Option<Duration>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Config key (file units) that `--T` sets for each protocol.
fn time_key(protocol: Protocol, t: Duration) -> CliResult<(&'static str, f64)> {
    match protocol {
        Protocol::StoreRetrieve => Ok(("protocol.storage_time_us", t.in_unit(-6))),
        Protocol::TransportInside => Ok(("protocol.transport_time_ms", t.in_unit(-3))),
        Protocol::Comoving => Ok(("protocol.comoving_storage_ms", t.in_unit(-3))),
        p => Err(CliError::Usage(format!(
            "--T does not apply to {p}; set protocol.interface_distances_mm instead"
        ))),
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = args.config.load()?;
    if let Some(t) = args.time {
        let (key, value) = time_key(args.protocol, t)?;
        cfg = cfg.with_override(key, json!(value))?;
    }
    let warnings = require_valid(&cfg)?;
    let results = run_protocol(&cfg, args.protocol)?;

    let mut out = OutDir::create(OutDir::resolve(args.out_dir.as_deref()))?;
    out.write("config.toml", &cfg.to_toml_string())?;
    let mut table = String::from(RESULTS_HEADER);
    for (i, r) in results.iter().enumerate() {
        let label = if results.len() == 1 {
            r.protocol.clone()
        } else {
            format!("{}_{i}", r.protocol)
        };
        write_run(&mut out, &label, r)?;
        table.push_str(&results_row(i, r));
        say!(
            "{label}: eta = {:.6}, elapsed = {:.4} ms, displacement = {:.4} mm",
            r.efficiency,
            r.elapsed * 1e3,
            r.displacement * 1e3
        );
    }
    if let Some(first) = results.first() {
        out.write("reference_series.csv", &first.reference_series.to_csv())?;
    }
    out.write("results.csv", &table)?;
    out.write_json(
        "summary.json",
        &json!({
            "protocol": args.protocol.name(),
            "params": cfg.to_json_value(),
            "eta": results.iter().map(|r| r.efficiency).collect::<Vec<_>>(),
            "fit": null,
            "results": results,
            "warnings": warnings,
        }),
    )?;
    let dir = out.finish(Some(config_hash(&cfg)), None, None)?;
    say!("wrote {}", dir.display());
    Ok(())
}
