//! Scenario config files.
//!
//! TOML with exactly these keys (unknown keys are rejected):
//!
//! ```toml
//! T = 4                 # horizon, slots
//! N = 13                # packets user 1 must receive
//! delta = 0.1           # outage threshold
//! tau_s = 0.001         # slot length, s
//! W_hz = 1e6            # bandwidth, Hz
//! P_dbm = 30.0          # total transmit power, dBm
//! beta1 = 1e-6          # large-scale fading of user 1
//! beta2 = 1e-6
//! sigma1_sq_dbm = -70.0 # noise plus interference at user 1, dBm
//! sigma2_sq_dbm = -70.0
//! Y1 = 1500             # packet size, bits
//! Y2 = 1500
//! power_set = [[0.0, 0.0], [0.0, 1.0], [0.1, 0.9], [0.3, 0.7], [0.5, 0.5], [0.7, 0.3], [0.9, 0.1], [1.0, 0.0]]
//! rate_set_1 = [0, 1, 2, 3, 4]   # packets per slot, must start at 0
//! rate_set_2 = [0, 1, 2, 3, 4]
//! ```

use std::path::Path;

use noma_core::{ScenarioConfig, ScenarioParams};

use crate::error::CliError;

pub fn parse_params(text: &str, path: &Path) -> Result<ScenarioParams, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_params(&text, path)?.validate()?)
}

/// Serializes parameters in the config file format.
pub fn to_toml(params: &ScenarioParams) -> String {
    toml::to_string(params).expect("scenario params serialize")
}
