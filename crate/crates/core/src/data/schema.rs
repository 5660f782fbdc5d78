//! Column names and the twelve input configurations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Dataset;
use crate::{Error, Result};

pub const SCADA_COLUMNS: [&str; 7] = ["μ[RPM]", "μ[Yaw]", "μ[Pitch]", "μ[Power]", "μ[WSpd]", "σ[WSpd]", "μ[WDir]"];
/// Significant wave height (cm), mean period (s), wave direction (deg).
pub const WAVE_COLUMNS: [&str; 3] = ["Hs", "Tp", "θw"];
/// Side-to-side and fore-aft damage-equivalent moments at the lowest level (MNm).
pub const LABEL_COLUMNS: [&str; 2] = ["DEM_tl", "DEM_tn"];
pub const TIMESTAMP_COLUMN: &str = "timestamp";

const ACCEL_STATS: [&str; 6] = [
    "max[acc_FA]",
    "min[acc_FA]",
    "rms[acc_FA]",
    "max[acc_SS]",
    "min[acc_SS]",
    "rms[acc_SS]",
];

/// Accelerometer level, in metres above lowest astronomical tide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AccelLevel {
    Lat017,
    Lat038,
    Lat077,
}

impl AccelLevel {
    pub const ALL: [AccelLevel; 3] = [AccelLevel::Lat017, AccelLevel::Lat038, AccelLevel::Lat077];

    pub fn code(self) -> &'static str {
        match self {
            AccelLevel::Lat017 => "017",
            AccelLevel::Lat038 => "038",
            AccelLevel::Lat077 => "077",
        }
    }

    pub fn height_m(self) -> f64 {
        match self {
            AccelLevel::Lat017 => 17.0,
            AccelLevel::Lat038 => 38.0,
            AccelLevel::Lat077 => 77.0,
        }
    }

    /// `max/min/rms[acc_FA|SS]@<code>` in table order.
    pub fn columns(self) -> Vec<String> {
        ACCEL_STATS.iter().map(|s| format!("{s}@{}", self.code())).collect()
    }
}

/// Every input column: SCADA, wave, then the three accelerometer levels.
pub fn all_input_columns() -> Vec<String> {
    let mut v: Vec<String> = SCADA_COLUMNS.iter().chain(&WAVE_COLUMNS).map(|s| s.to_string()).collect();
    for level in AccelLevel::ALL {
        v.extend(level.columns());
    }
    v
}

/// All input columns followed by the labels.
pub fn all_columns() -> Vec<String> {
    let mut v = all_input_columns();
    v.extend(LABEL_COLUMNS.iter().map(|s| s.to_string()));
    v
}

/// Input signal combination, numbered 1 to 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct InputConfig(u8);

impl TryFrom<u8> for InputConfig {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        Self::new(id)
    }
}

impl From<InputConfig> for u8 {
    fn from(c: InputConfig) -> u8 {
        c.0
    }
}

impl InputConfig {
    /// Deployment default: SCADA + accelerometer at LAT-077.
    pub const DEPLOYMENT: InputConfig = InputConfig(10);

    pub fn new(id: u8) -> Result<Self> {
        if (1..=12).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::invalid(format!("input configuration must be 1-12, got {id}")))
        }
    }

    pub fn all() -> impl Iterator<Item = InputConfig> {
        (1..=12).map(InputConfig)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn includes_wave(self) -> bool {
        self.0 <= 6
    }

    pub fn levels(self) -> &'static [AccelLevel] {
        use AccelLevel::*;
        match self.0 {
            1 | 7 => &[],
            2 | 8 => &[Lat017],
            3 | 9 => &[Lat038],
            4 | 10 => &[Lat077],
            5 | 11 => &[Lat017, Lat038],
            _ => &[Lat017, Lat038, Lat077],
        }
    }

    pub fn columns(self) -> Vec<String> {
        let mut v: Vec<String> = SCADA_COLUMNS.iter().map(|s| s.to_string()).collect();
        if self.includes_wave() {
            v.extend(WAVE_COLUMNS.iter().map(|s| s.to_string()));
        }
        for level in self.levels() {
            v.extend(level.columns());
        }
        v
    }

    pub fn width(self) -> usize {
        7 + if self.includes_wave() { 3 } else { 0 } + 6 * self.levels().len()
    }

    pub fn label(self) -> String {
        let mut s = String::from("SCADA");
        if self.includes_wave() {
            s.push_str(" + wave");
        }
        match self.levels() {
            [] => {}
            [one] => s.push_str(&format!(" + accelerometer (LAT-{})", one.code())),
            many => {
                let codes: Vec<&str> = many.iter().map(|l| l.code()).collect();
                s.push_str(&format!(" + accelerometers (LAT-{})", codes.join(", ")));
            }
        }
        s
    }

    /// Default variational-network learning rate for this configuration.
    pub fn bnn_learning_rate(self) -> f64 {
        match self.0 {
            6 => 0.00035,
            7..=10 => 0.0002,
            _ => 0.0003,
        }
    }

    /// Default variational-network hidden widths for this configuration.
    pub fn bnn_hidden(self) -> [usize; 3] {
        if self.0 <= 6 {
            [31, 64, 32]
        } else {
            [32, 64, 32]
        }
    }
}

/// Hidden widths of the deterministic network for every configuration.
pub const DNN_HIDDEN: [usize; 3] = [64, 128, 64];

/// Input columns of `cfg`, in canonical order, with timestamps kept.
pub fn select_inputs(ds: &Dataset, cfg: InputConfig) -> Result<Dataset> {
    let cols = cfg.columns();
    if let Some(missing) = cols.iter().find(|c| !ds.has_column(c)) {
        return Err(Error::MissingColumn(format!("{missing} (required by configuration {})", cfg.id())));
    }
    ds.select_columns(&cols)
}
