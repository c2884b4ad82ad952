use serde::{Deserialize, Serialize};

/// The absolute constants of the bounds. They default to one; calibrated
/// values are read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    /// Constant in front of the Esseen integral.
    pub esseen: f64,
    /// Set by the calibration run; bound checks on uncalibrated constants are
    /// reported but never fail a run.
    pub calibrated: bool,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
            c6: 1.0,
            c7: 1.0,
            c8: 1.0,
            esseen: 1.0,
            calibrated: false,
        }
    }
}
