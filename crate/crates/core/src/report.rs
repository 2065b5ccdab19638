use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Generic pass/fail report: named residuals compared against one tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub tolerance: f64,
    pub residuals: BTreeMap<String, f64>,
    pub pass: bool,
}

impl Report {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            tolerance,
            residuals: BTreeMap::new(),
            pass: true,
        }
    }

    /// Records a residual that must stay below the tolerance.
    pub fn bound(mut self, name: &str, residual: f64) -> Self {
        self.pass &= residual < self.tolerance;
        self.residuals.insert(name.to_string(), residual);
        self
    }

    /// Records a residual for information only.
    pub fn info(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub fn worst(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}
