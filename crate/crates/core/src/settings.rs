use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Global numerical configuration: one tolerance for every matrix-level
/// predicate and one cap on matrix dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tolerance: f64,
    pub dimension_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

impl Settings {
    pub fn new(tolerance: f64, dimension_cap: usize) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if dimension_cap == 0 {
            return Err(Error::InvalidParameter("dimension cap must be at least 1".into()));
        }
        Ok(Self {
            tolerance,
            dimension_cap,
        })
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        Self { tolerance, ..self }
    }

    pub fn with_cap(self, dimension_cap: usize) -> Self {
        Self {
            dimension_cap,
            ..self
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.dimension_cap {
            Err(Error::DimensionCap {
                requested: dim,
                cap: self.dimension_cap,
            })
        } else {
            Ok(())
        }
    }
}
