//! Runs the one-time calibration on the default configuration and writes the
//! calibrated config as TOML.
//!
//! ```text
//! cargo run --release -p storedlight --example calibrate -- configs/calibrated.toml
//! ```

use storedlight::protocols::{calibrate, CalibrationTargets};
use storedlight::ExperimentConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1);
    let base = ExperimentConfig::default();
    let cal = calibrate(&base, &CalibrationTargets::default())?;
    eprintln!("{}", serde_json::to_string_pretty(&cal)?);
    let toml = format!(
        "# Experimental setup with the calibrated model constants.\n# Regenerate with:\n#   cargo run --release -p storedlight --example calibrate -- configs/calibrated.toml\n{}",
        cal.apply(&base).to_toml_string()
    );
    match out {
        Some(path) => std::fs::write(path, toml)?,
        None => print!("{toml}"),
    }
    Ok(())
}
