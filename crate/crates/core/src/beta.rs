use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension of the real division algebra the matrix entries live in:
/// 1 for the reals, 2 for the complex numbers, 4 for the quaternions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Beta {
    Real,
    Complex,
    Quaternion,
}

impl Beta {
    pub const ALL: [Beta; 3] = [Beta::Real, Beta::Complex, Beta::Quaternion];

    pub fn value(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Beta::Real => 1,
            Beta::Complex => 2,
            Beta::Quaternion => 4,
        }
    }

    /// Jack parameter `α = 2/β`.
    pub fn alpha(self) -> f64 {
        2.0 / self.value()
    }

    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            4 => Ok(Beta::Quaternion),
            other => Err(Error::InvalidArgument(format!(
                "beta must be 1, 2 or 4, got {other}"
            ))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        b.as_u8()
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;
    fn try_from(b: u8) -> Result<Self> {
        Beta::from_u8(b)
    }
}

impl FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let b: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("beta must be 1, 2 or 4, got {s:?}")))?;
        Beta::from_u8(b)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}
