use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memoryless binary channel family, parametrised by `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Binary erasure channel, `0 <= epsilon <= 1`.
    Bec,
    /// Binary symmetric channel, `0 <= epsilon <= 1/2`.
    Bsc,
}

impl Channel {
    pub fn max_epsilon(self) -> f64 {
        match self {
            Channel::Bec => 1.0,
            Channel::Bsc => 0.5,
        }
    }

    /// Accepts `epsilon` in the closed channel domain.
    pub fn check_epsilon(self, eps: f64) -> Result<()> {
        if eps.is_finite() && (0.0..=self.max_epsilon()).contains(&eps) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "epsilon={eps} outside [0, {}] for the {self}",
                self.max_epsilon()
            )))
        }
    }

    /// Accepts `epsilon` in the open interval `(0, max)`.
    pub fn check_open(self, eps: f64) -> Result<()> {
        if eps.is_finite() && eps > 0.0 && eps < self.max_epsilon() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "epsilon={eps} outside (0, {}) for the {self}",
                self.max_epsilon()
            )))
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Bec => "bec",
            Channel::Bsc => "bsc",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bec" => Ok(Channel::Bec),
            "bsc" => Ok(Channel::Bsc),
            other => Err(Error::Parameter(format!("unknown channel {other:?} (expected bec or bsc)"))),
        }
    }
}
