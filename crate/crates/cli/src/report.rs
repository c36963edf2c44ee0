//! Per-run artifacts shared by `simulate` and `sweep`.

use serde_json::json;
use storedlight::polariton::PolaritonView;
use storedlight::ProtocolResult;

use crate::error::CliResult;
use crate::output::OutDir;

pub const RESULTS_HEADER: &str =
    "protocol,index,eta,elapsed_ms,transport_time_ms,displacement_mm,storage_position_mm,retrieval_position_mm\n";

pub fn results_row(index: usize, r: &ProtocolResult) -> String {
    format!(
        "{},{index},{},{},{},{},{},{}\n",
        r.protocol,
        r.efficiency,
        r.elapsed * 1e3,
        r.transport_time * 1e3,
        r.displacement * 1e3,
        r.storage_position * 1e3,
        r.retrieval_position * 1e3,
    )
}

/// Output time series, event sidecar and one polariton table per snapshot.
pub fn write_run(out: &mut OutDir, label: &str, r: &ProtocolResult) -> CliResult<()> {
    out.write(&format!("{label}_series.csv"), &r.series.to_csv())?;
    out.write_json(
        &format!("{label}_events.json"),
        &json!({
            "time_unit": "us",
            "events": r.series.events,
            "retrieval_window": r.retrieval_window,
        }),
    )?;
    for snap in &r.series.snapshots {
        match PolaritonView::from_snapshot(snap) {
            Ok(view) => out.write(&format!("{label}_{}_polariton.csv", snap.name), &view.to_csv())?,
            Err(e) => eprintln!("warning: no polariton view for snapshot `{}`: {e}", snap.name),
        }
    }
    Ok(())
}
