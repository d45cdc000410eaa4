//! Frequency-series container shared by the forward model, the noise
//! synthesizer, and the fitting pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a trace represents; decides the noise model applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Omit,
    Omia,
    SpontaneousPsd,
}

impl std::fmt::Display for TraceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceKind::Omit => write!(f, "omit"),
            TraceKind::Omia => write!(f, "omia"),
            TraceKind::SpontaneousPsd => write!(f, "spontaneous_psd"),
        }
    }
}

/// A frequency series in linear power units.
///
/// Detunings are in ordinary hertz, strictly increasing. Metadata holds
/// provenance strings (seed, parameter digest, averaging count, power).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub detunings: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: TraceKind,
    pub metadata: BTreeMap<String, String>,
}

impl SpectrumTrace {
    pub fn new(detunings: Vec<f64>, values: Vec<f64>, kind: TraceKind) -> Result<Self> {
        let trace = Self {
            detunings,
            values,
            kind,
            metadata: BTreeMap::new(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() != self.values.len() {
            return Err(Error::Invalid(format!(
                "trace length mismatch: {} detunings vs {} values",
                self.detunings.len(),
                self.values.len()
            )));
        }
        if self.detunings.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "trace detunings must be strictly increasing".into(),
            ));
        }
        if self.kind == TraceKind::SpontaneousPsd && self.values.iter().any(|v| *v < 0.0) {
            return Err(Error::Invalid("psd trace contains negative values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Metadata value parsed as f64, if present and parseable.
    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| v.parse().ok())
    }

    /// Writes the trace as CSV with a `detuning_Hz,value,kind` header.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "detuning_Hz,value,kind")?;
        for (d, v) in self.detunings.iter().zip(&self.values) {
            writeln!(w, "{d:.6},{v:.12e},{}", self.kind)?;
        }
        Ok(())
    }
}
