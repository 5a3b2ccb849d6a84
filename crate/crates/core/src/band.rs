use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Canonical EEG rhythm, or the unsplit signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
    Full,
}

impl Band {
    /// The five rhythms, lowest first.
    pub const RHYTHMS: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
            Band::Full => "full",
        }
    }

    /// Nominal frequency interval in Hz at the 128 Hz working rate.
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.0, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 16.0),
            Band::Beta => (16.0, 32.0),
            Band::Gamma => (32.0, 45.0),
            Band::Full => (0.5, 45.0),
        }
    }

    /// Index into a five-element rhythm array; `None` for `Full`.
    pub fn rhythm_index(self) -> Option<usize> {
        Band::RHYTHMS.iter().position(|&b| b == self)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "delta" | "δ" => Ok(Band::Delta),
            "theta" | "θ" => Ok(Band::Theta),
            "alpha" | "α" => Ok(Band::Alpha),
            "beta" | "β" => Ok(Band::Beta),
            "gamma" | "γ" => Ok(Band::Gamma),
            "full" | "fullband" => Ok(Band::Full),
            other => Err(format!("unknown band {other:?}")),
        }
    }
}
