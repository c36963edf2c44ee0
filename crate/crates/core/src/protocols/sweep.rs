//! Parallel parameter sweeps over config overrides.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_protocol, EfficiencyPoint, Protocol, ProtocolError, ProtocolResult};
use crate::config::{ConfigError, ExperimentConfig};

/// One protocol result at one swept value.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// Swept value in the units of the config key.
    pub value: f64,
    /// Position in the protocol's own result list (interface scans return several).
    pub index: usize,
    pub result: ProtocolResult,
}

impl SweepRow {
    /// Efficiency against elapsed storage time, or against conveyor run time.
    pub fn point(&self, use_transport_time: bool) -> EfficiencyPoint {
        let r = &self.result;
        EfficiencyPoint::new(
            if use_transport_time {
                r.transport_time
            } else {
                r.elapsed
            },
            r.efficiency,
        )
    }
}

fn lookup<'a>(doc: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    path.split('.').try_fold(doc, |node, key| node.as_object()?.get(key))
}

/// Runs `protocol` once per value of the dotted config key `path` (file
/// units). Runs are independent and execute in parallel; rows come back in
/// input order.
pub fn sweep(
    cfg: &ExperimentConfig,
    protocol: Protocol,
    path: &str,
    values: &[f64],
) -> Result<Vec<SweepRow>, ProtocolError> {
    if lookup(&cfg.to_json_value(), path).is_none() {
        return Err(ConfigError::Schema(format!("unknown config key `{path}`")).into());
    }
    let runs: Vec<Vec<SweepRow>> = values
        .par_iter()
        .map(|&value| {
            let run_cfg = cfg.with_override(path, serde_json::json!(value))?;
            let results = run_protocol(&run_cfg, protocol)?;
            Ok(results
                .into_iter()
                .enumerate()
                .map(|(index, result)| SweepRow { value, index, result })
                .collect())
        })
        .collect::<Result<_, ProtocolError>>()?;
    Ok(runs.into_iter().flatten().collect())
}

/// Aggregate table with both the elapsed-time and transport-time abscissae.
pub fn sweep_to_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "parameter,value,index,protocol,eta,elapsed_ms,transport_time_ms,displacement_mm,storage_position_mm,retrieval_position_mm\n",
    );
    for row in rows {
        let r = &row.result;
        out.push_str(&format!(
            "{parameter},{},{},{},{},{},{},{},{},{}\n",
            row.value,
            row.index,
            r.protocol,
            r.efficiency,
            r.elapsed * 1e3,
            r.transport_time * 1e3,
            r.displacement * 1e3,
            r.storage_position * 1e3,
            r.retrieval_position * 1e3,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_values_give_empty_table() {
        let rows = sweep(
            &ExperimentConfig::default(),
            Protocol::StoreRetrieve,
            "protocol.storage_time_us",
            &[],
        )
        .unwrap();
        assert!(rows.is_empty());
        assert_eq!(sweep_to_csv("x", &rows).lines().count(), 1);
    }

    #[test]
    fn unknown_path_is_rejected() {
        let err = sweep(
            &ExperimentConfig::default(),
            Protocol::StoreRetrieve,
            "protocol.warp_factor",
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, ProtocolError::Config(ConfigError::Schema(_))));
    }

    #[test]
    fn storage_time_sweep_is_ordered_and_decaying() {
        let values = [5.0, 100.0, 400.0, 1000.0];
        let rows = sweep(
            &ExperimentConfig::default(),
            Protocol::StoreRetrieve,
            "protocol.storage_time_us",
            &values,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        for (row, v) in rows.iter().zip(values) {
            assert_eq!(row.value, v);
            assert!((row.result.elapsed - v * 1e-6).abs() < 1e-15);
        }
        assert!(rows.windows(2).all(|w| w[1].result.efficiency < w[0].result.efficiency));
    }
}
