//! Linearized triply-resonant optomechanics: cooperativity, power
//! calibration, OMIT/OMIA lineshapes, spontaneous anti-Stokes spectra,
//! cooling occupation, and a laser-noise heating estimate.
//!
//! All public frequencies are ordinary hertz; angular factors are
//! applied inside the formulas.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::coupling::CouplingMap;
use crate::error::{Error, Result};
use crate::trace::{SpectrumTrace, TraceKind};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Shot-noise floor of the heterodyne PSD in normalized linear units.
pub const SHOT_BACKGROUND: f64 = 1.0;

/// Reduced parameter set driving all dynamics formulas.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Single-photon coupling rate g0, Hz.
    pub g0: f64,
    /// Total optical linewidth kappa/2pi, Hz.
    pub kappa: f64,
    /// Intrinsic phonon linewidth Gamma0/2pi, Hz.
    pub gamma0: f64,
    /// Phonon frequency Omega/2pi, Hz.
    pub phonon_frequency: f64,
    /// Thermal phonon occupation.
    pub n_th: f64,
    /// External coupling fraction kappa_ext/kappa, in (0,1].
    pub eta_ext: f64,
    /// Detection efficiency; pure flux scale.
    pub eta_det: f64,
    /// Optical wavelength, m.
    pub wavelength: f64,
}

impl SystemParams {
    /// Fitted parameter set of the reference experiment.
    pub fn paper_default() -> Self {
        Self {
            g0: 6.08,
            kappa: 4.07e6,
            gamma0: 600.0,
            phonon_frequency: 12.607e9,
            n_th: 22.4,
            eta_ext: 0.5,
            eta_det: 1.0,
            wavelength: 1550e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.g0, self.kappa, self.gamma0, self.phonon_frequency];
        if rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Invalid("all rates must be > 0".into()));
        }
        if self.n_th < 0.0 {
            return Err(Error::Invalid("n_th must be >= 0".into()));
        }
        if !(self.eta_ext > 0.0 && self.eta_ext <= 1.0) {
            return Err(Error::Invalid("eta_ext must be in (0,1]".into()));
        }
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::Invalid("eta_det must be in (0,1]".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Invalid("wavelength must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpedMode {
    Red,
    Blue,
}

/// Pump configuration; intracavity photon number is derived from the
/// transmitted power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveConfig {
    pub pumped_mode: PumpedMode,
    /// Transmitted control power, W.
    pub transmitted_power: f64,
    pub intracavity_photons: f64,
}

impl DriveConfig {
    pub fn from_power(pumped_mode: PumpedMode, power: f64, params: &SystemParams) -> Result<Self> {
        Ok(Self {
            pumped_mode,
            transmitted_power: power,
            intracavity_photons: intracavity_photons(power, params)?,
        })
    }
}

/// n_c = P_transmitted / (h nu * kappa_out), kappa_out = eta_ext * kappa
/// (angular). Assumes the transmitted power exits through the output
/// coupling fraction eta_ext; this symmetric-coupling assumption shifts
/// the power-to-photon conversion by up to ~20%.
pub fn intracavity_photons(power: f64, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    if power < 0.0 {
        return Err(Error::Invalid("power must be >= 0".into()));
    }
    let photon_energy = PLANCK * SPEED_OF_LIGHT / params.wavelength;
    let kappa_out_angular = TWO_PI * params.eta_ext * params.kappa;
    Ok(power / (photon_energy * kappa_out_angular))
}

/// C = 4 g0^2 n_c / (gamma0 kappa); the 2pi factors cancel.
pub fn cooperativity(params: &SystemParams, n_c: f64) -> Result<f64> {
    params.validate()?;
    if n_c < 0.0 {
        return Err(Error::Invalid("n_c must be >= 0".into()));
    }
    Ok(4.0 * params.g0 * params.g0 * n_c / (params.gamma0 * params.kappa))
}

/// Gamma0 (1 + C) for a red pump, Gamma0 (1 - C) for a blue pump, Hz.
pub fn effective_linewidth(params: &SystemParams, c: f64, pumped: PumpedMode) -> Result<f64> {
    params.validate()?;
    if c < 0.0 {
        return Err(Error::Invalid("cooperativity must be >= 0".into()));
    }
    match pumped {
        PumpedMode::Red => Ok(params.gamma0 * (1.0 + c)),
        PumpedMode::Blue if c >= 1.0 => Err(Error::SelfOscillation { cooperativity: c }),
        PumpedMode::Blue => Ok(params.gamma0 * (1.0 - c)),
    }
}

/// Steady-state occupation under red-pump cooling: n_th / (1 + C).
pub fn steady_state_occupation(params: &SystemParams, c: f64) -> Result<f64> {
    params.validate()?;
    if c < 0.0 {
        return Err(Error::Invalid("cooperativity must be >= 0".into()));
    }
    Ok(params.n_th / (1.0 + c))
}

/// Optomechanical self-energy (angular units) at probe detuning
/// `delta_ang` from the probed cavity mode.
fn self_energy(map: &CouplingMap, params: &SystemParams, n_c: f64, delta_ang: f64) -> Complex64 {
    let mut sigma = Complex64::new(0.0, 0.0);
    for (mode, g0) in &map.entries {
        let g_tilde_sq = (TWO_PI * g0).powi(2) * n_c;
        if g_tilde_sq == 0.0 {
            continue;
        }
        let gamma_ang = TWO_PI * mode.intrinsic_linewidth;
        let mode_detuning_ang = TWO_PI * (mode.frequency - params.phonon_frequency);
        sigma += g_tilde_sq / Complex64::new(gamma_ang / 2.0, -(delta_ang - mode_detuning_ang));
    }
    sigma
}

/// Total cooperativity contributed by all map entries.
pub fn map_cooperativity(map: &CouplingMap, params: &SystemParams, n_c: f64) -> f64 {
    map.entries
        .iter()
        .map(|(mode, g0)| 4.0 * g0 * g0 * n_c / (mode.intrinsic_linewidth * params.kappa))
        .sum()
}

fn probe_response(
    map: &CouplingMap,
    params: &SystemParams,
    n_c: f64,
    probe_detunings: &[f64],
    kind: TraceKind,
) -> Result<SpectrumTrace> {
    params.validate()?;
    if probe_detunings.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let sign = match kind {
        TraceKind::Omit => 1.0,
        TraceKind::Omia => -1.0,
        TraceKind::SpontaneousPsd => unreachable!("not a probe scan"),
    };
    let kappa_ang = TWO_PI * params.kappa;
    let values = probe_detunings
        .iter()
        .map(|&delta| {
            let delta_ang = TWO_PI * delta;
            let sigma = self_energy(map, params, n_c, delta_ang);
            let denom = Complex64::new(kappa_ang / 2.0, -delta_ang) + sign * sigma;
            let amp = Complex64::new(kappa_ang / 2.0, 0.0) / denom;
            amp.norm_sqr()
        })
        .collect();
    SpectrumTrace::new(probe_detunings.to_vec(), values, kind)
}

/// Probe power transmission with a resonant red pump, relative to the
/// bare-cavity resonant peak. Exact linear-response solution of the
/// coupled cavity/phonon equations.
pub fn omit_transmission(
    map: &CouplingMap,
    params: &SystemParams,
    n_c: f64,
    probe_detunings: &[f64],
) -> Result<SpectrumTrace> {
    probe_response(map, params, n_c, probe_detunings, TraceKind::Omit)
}

/// Probe power transmission with a resonant blue pump; gain peak of
/// FWHM Gamma0 (1 - C). Errors with SelfOscillation at C >= 1.
pub fn omia_transmission(
    map: &CouplingMap,
    params: &SystemParams,
    n_c: f64,
    probe_detunings: &[f64],
) -> Result<SpectrumTrace> {
    let c = map_cooperativity(map, params, n_c);
    if c >= 1.0 {
        return Err(Error::SelfOscillation { cooperativity: c });
    }
    probe_response(map, params, n_c, probe_detunings, TraceKind::Omia)
}

/// Heterodyne PSD of the spontaneously scattered anti-Stokes light:
/// shot background plus a Lorentzian of FWHM Gamma0 (1 + C) whose
/// integrated area follows C/(1+C).
pub fn spontaneous_psd(
    params: &SystemParams,
    c: f64,
    rf_detunings: &[f64],
) -> Result<SpectrumTrace> {
    params.validate()?;
    if rf_detunings.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if c < 0.0 {
        return Err(Error::Invalid("cooperativity must be >= 0".into()));
    }
    let gamma_plus = params.gamma0 * (1.0 + c);
    let half = gamma_plus / 2.0;
    let peak = psd_peak_height(params, c);
    let values = rf_detunings
        .iter()
        .map(|&delta| SHOT_BACKGROUND + peak * half * half / (delta * delta + half * half))
        .collect();
    SpectrumTrace::new(rf_detunings.to_vec(), values, TraceKind::SpontaneousPsd)
}

/// Peak brightness above background: eta_ext eta_det n_th 4C/(1+C)^2.
/// The corresponding area is proportional to gamma0 n_th C/(1+C).
pub fn psd_peak_height(params: &SystemParams, c: f64) -> f64 {
    params.eta_ext * params.eta_det * params.n_th * 4.0 * c / ((1.0 + c) * (1.0 + c))
}

/// Added phonon occupation from residual laser noise treated as an
/// effective optical bath: n_bath * C / (1 + C).
pub fn noise_heating(params: &SystemParams, c: f64, n_bath_optical: f64) -> Result<f64> {
    params.validate()?;
    if c < 0.0 || n_bath_optical < 0.0 {
        return Err(Error::Invalid("inputs must be >= 0".into()));
    }
    Ok(n_bath_optical * c / (1.0 + c))
}

/// Effective optical bath occupation from a filtered phase-noise PSD
/// S_phi (rad^2/Hz) at the phonon offset frequency:
/// n_bath ~ n_c S_phi kappa_angular / 4. A standard phase-noise to
/// thermal-photon mapping, approximate by construction.
pub fn phase_noise_bath(n_c: f64, s_phi: f64, kappa: f64) -> f64 {
    n_c * s_phi * TWO_PI * kappa / 4.0
}
