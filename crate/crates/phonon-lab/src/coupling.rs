//! Per-acoustic-mode coupling rates from longitudinal phase matching
//! (sinc envelope) and transverse mode overlap under misalignment.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonator::{AcousticMode, HbarGeometry};

/// Lateral displacement of the acoustic axis from the optical axis,
/// with the two transverse mode radii it is measured against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlignmentState {
    /// Lateral offset d, m (>= 0).
    pub transverse_offset: f64,
    /// Optical intensity 1/e radius, m.
    pub optical_intensity_radius: f64,
    /// Acoustic waist radius, m.
    pub acoustic_waist: f64,
}

impl AlignmentState {
    pub fn validate(&self) -> Result<()> {
        if self.transverse_offset < 0.0 {
            return Err(Error::Invalid("alignment offset must be >= 0".into()));
        }
        if !(self.optical_intensity_radius > 0.0 && self.acoustic_waist > 0.0) {
            return Err(Error::Invalid("alignment radii must be > 0".into()));
        }
        Ok(())
    }
}

/// Single-photon coupling rates per acoustic mode, sorted by frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingMap {
    pub entries: Vec<(AcousticMode, f64)>,
    /// Peak fundamental-mode rate the map is scaled to, Hz.
    pub reference_g0: f64,
    /// Center of the phase-matching envelope, Hz.
    pub brillouin_frequency: f64,
}

impl CouplingMap {
    /// Map with a single perfectly matched mode, handy for single-mode
    /// dynamics.
    pub fn single_mode(mode: AcousticMode, g0: f64) -> Self {
        let f = mode.frequency;
        Self {
            entries: vec![(mode, g0)],
            reference_g0: g0,
            brillouin_frequency: f,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "frequency_Hz,transverse_order,g0_Hz")?;
        for (mode, g0) in &self.entries {
            writeln!(w, "{:.3},{},{:.6e}", mode.frequency, mode.transverse_order, g0)?;
        }
        Ok(())
    }
}

/// Phase-matched acoustic frequency 2 n v / lambda, Hz.
///
/// An estimator only: the calibrated sound velocity and the measured
/// Brillouin frequency are not simultaneously consistent to better than
/// a few percent, so the operating frequency stays a config input.
pub fn brillouin_frequency(geom: &HbarGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(2.0 * geom.refractive_index * geom.sound_velocity / geom.optical_wavelength)
}

/// Longitudinal overlap of the standing-wave phonon with the optical
/// beat pattern: |sinc(dq L/2)|, dq = 2 pi (f - f_B)/v.
pub fn phase_match_envelope(
    mode_frequency: f64,
    brillouin_frequency: f64,
    geom: &HbarGeometry,
) -> Result<f64> {
    if !(mode_frequency > 0.0 && brillouin_frequency > 0.0) {
        return Err(Error::Invalid("frequencies must be > 0".into()));
    }
    let dq = 2.0 * std::f64::consts::PI * (mode_frequency - brillouin_frequency)
        / geom.sound_velocity;
    Ok(sinc(dq * geom.length / 2.0).abs())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Physicists' Hermite polynomial by recurrence, complex argument.
fn hermite(m: u32, z: Complex64) -> Complex64 {
    let mut h_prev = Complex64::new(1.0, 0.0);
    if m == 0 {
        return h_prev;
    }
    let mut h = 2.0 * z;
    for k in 1..m {
        let next = 2.0 * z * h - 2.0 * f64::from(k) * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// Normalized overlap of the displaced optical envelope with the
/// acoustic Hermite-Gaussian of the given transverse order, in [0,1].
///
/// For equal radii w this reduces to the Poisson weights
/// e^{-xi} xi^m / m!, xi = d^2/(2 w^2).
pub fn transverse_overlap(alignment: &AlignmentState, transverse_order: u32) -> Result<f64> {
    alignment.validate()?;
    let d = alignment.transverse_offset;
    let wi = alignment.optical_intensity_radius;
    let wa = alignment.acoustic_waist;
    let m = transverse_order;

    let p = 0.5 / (wi * wi) + 0.5 / (wa * wa);
    let q = d / (2.0 * wi * wi * p);
    let beta = 1.0 / wa;
    let z = 1.0 - beta * beta / p;

    let factor = if z.abs() < 1e-12 {
        // matched-radii limit of s^m H_m(beta q / s) as s -> 0
        (2.0 * beta * q).powi(m as i32)
    } else {
        let s = Complex64::new(z, 0.0).sqrt();
        (s.powu(m) * hermite(m, Complex64::new(beta * q, 0.0) / s)).re
    };

    let expo = -d * d / (4.0 * wa * wa * wi * wi * p);
    let j = expo.exp() * (std::f64::consts::PI / p).sqrt() * factor;

    let mut norm = wi * wa * std::f64::consts::PI;
    for k in 1..=m {
        norm *= 2.0 * f64::from(k);
    }
    Ok((j * j / norm).clamp(0.0, 1.0))
}

/// g0(mode) = reference_g0 * phase_match_envelope * sqrt(transverse_overlap),
/// sorted by frequency.
pub fn coupling_map(
    modes: &[AcousticMode],
    alignment: &AlignmentState,
    reference_g0: f64,
    brillouin_frequency: f64,
    geom: &HbarGeometry,
) -> Result<CouplingMap> {
    if modes.is_empty() {
        return Err(Error::EmptyInput("acoustic mode list"));
    }
    if !(reference_g0 > 0.0) {
        return Err(Error::Invalid("reference_g0 must be > 0".into()));
    }
    let mut entries = Vec::with_capacity(modes.len());
    for mode in modes {
        let env = phase_match_envelope(mode.frequency, brillouin_frequency, geom)?;
        let overlap = transverse_overlap(alignment, mode.transverse_order)?;
        entries.push((mode.clone(), reference_g0 * env * overlap.sqrt()));
    }
    entries.sort_by(|a, b| a.0.frequency.total_cmp(&b.0.frequency));
    Ok(CouplingMap {
        entries,
        reference_g0,
        brillouin_frequency,
    })
}
