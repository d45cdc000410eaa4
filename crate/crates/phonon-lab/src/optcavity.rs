//! Optical Fabry-Perot with an intracavity dielectric slab: resonance
//! finding from the round-trip phase of the three-region stack, cavity
//! linewidth, Gaussian waist, and operating mode-pair selection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalCavityGeometry {
    /// Mirror-to-mirror length, m.
    pub cavity_length: f64,
    /// Concave mirror radius of curvature, m.
    pub mirror_radius: f64,
    /// Intensity reflectivities of the two mirrors, each in (0,1).
    pub mirror_intensity_reflectivities: (f64, f64),
    /// Slab (crystal) thickness, m.
    pub slab_thickness: f64,
    pub slab_refractive_index: f64,
    /// Flat-face location measured from the input mirror, m.
    pub slab_position: f64,
    /// Field reflectivity of each slab surface, in [0,1).
    pub slab_surface_field_reflectivity: f64,
    pub wavelength: f64,
}

impl OpticalCavityGeometry {
    /// Paper geometry: 12 mm cavity, 15 mm mirror, 0.5 mm quartz slab
    /// centered in the cavity, surface field reflectivity 0.21 from the
    /// quartz-air index step.
    pub fn paper_default() -> Self {
        // R = 0.99895 per mirror gives finesse ~3000
        let r = 1.0 - std::f64::consts::PI / 3000.0;
        Self {
            cavity_length: 12e-3,
            mirror_radius: 15e-3,
            mirror_intensity_reflectivities: (r, r),
            slab_thickness: 500e-6,
            slab_refractive_index: 1.53,
            slab_position: 5.75e-3,
            slab_surface_field_reflectivity: 0.21,
            wavelength: 1550e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slab_thickness > 0.0 && self.slab_thickness < self.cavity_length) {
            return Err(Error::Invalid(
                "slab thickness must lie in (0, cavity_length)".into(),
            ));
        }
        if self.slab_position < 0.0
            || self.slab_position + self.slab_thickness > self.cavity_length
        {
            return Err(Error::Invalid("slab does not fit inside the cavity".into()));
        }
        let r = self.slab_surface_field_reflectivity;
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Invalid(
                "slab surface field reflectivity must be in [0,1)".into(),
            ));
        }
        let (r1, r2) = self.mirror_intensity_reflectivities;
        if !(r1 > 0.0 && r1 < 1.0 && r2 > 0.0 && r2 < 1.0) {
            return Err(Error::Invalid(
                "mirror intensity reflectivities must be in (0,1)".into(),
            ));
        }
        if !(self.cavity_length > 0.0 && self.cavity_length < self.mirror_radius) {
            return Err(Error::UnstableResonator {
                length_m: self.cavity_length,
                radius_m: self.mirror_radius,
            });
        }
        Ok(())
    }

    /// One-way optical path length (L - t) + n t, m.
    pub fn optical_path_length(&self) -> f64 {
        self.cavity_length - self.slab_thickness
            + self.slab_refractive_index * self.slab_thickness
    }

    /// Free spectral range of the cavity including the slab's optical
    /// path, ignoring the etalon phase ripple, Hz.
    pub fn nominal_fsr(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.optical_path_length())
    }

    /// Finesse from the mirror intensity reflectivities.
    pub fn finesse(&self) -> f64 {
        let (r1, r2) = self.mirror_intensity_reflectivities;
        let rho = (r1 * r2).sqrt();
        std::f64::consts::PI * rho.sqrt() / (1.0 - rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeRole {
    Red,
    Blue,
    Spectator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpticalMode {
    /// Longitudinal index (round-trip phase winding number).
    pub index: i64,
    /// Resonance frequency, Hz.
    pub frequency: f64,
    /// Linewidth kappa/2pi, Hz.
    pub linewidth: f64,
    pub role: ModeRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModePair {
    pub red: OpticalMode,
    pub blue: OpticalMode,
    /// (omega2 - omega1)/2pi, Hz.
    pub pair_spacing: f64,
    /// Power ratio of anti-Stokes to Stokes density of states, >= 1.
    pub stokes_suppression: f64,
}

/// Round-trip phase (radians) of the air/slab/air stack at frequency `f`.
///
/// The slab is a plane-parallel etalon with field reflectivity `r` at
/// each surface; its one-way transmission phase is n k t - arg(1 - r^2
/// e^{2 i n k t}), which stays in (-pi/2, pi/2) for r < 1 so no
/// unwrapping is needed.
pub fn round_trip_phase(geom: &OpticalCavityGeometry, f: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
    let phi_slab = geom.slab_refractive_index * k * geom.slab_thickness;
    let r2 = geom.slab_surface_field_reflectivity * geom.slab_surface_field_reflectivity;
    let denom = Complex64::new(1.0, 0.0) - r2 * Complex64::new(0.0, 2.0 * phi_slab).exp();
    let psi = -denom.arg();
    2.0 * (k * (geom.cavity_length - geom.slab_thickness) + phi_slab + psi)
}

/// All resonances inside [center - span/2, center + span/2], found by
/// bracketing integer crossings of the round-trip phase on a grid of
/// step kappa/10 and bisecting.
pub fn resonance_spectrum(
    geom: &OpticalCavityGeometry,
    span: f64,
    center: f64,
) -> Result<Vec<OpticalMode>> {
    geom.validate()?;
    if !(span > 0.0) {
        return Err(Error::Invalid("span must be > 0".into()));
    }
    let kappa = cavity_linewidth(geom.nominal_fsr(), geom.finesse())?;
    let lo = center - span / 2.0;
    let hi = center + span / 2.0;
    let step = kappa / 10.0;
    let tol = (1e-3 * kappa).min(500.0);
    let cycles = |f: f64| round_trip_phase(geom, f) / (2.0 * std::f64::consts::PI);

    let mut modes = Vec::new();
    let n_steps = ((hi - lo) / step).ceil() as usize;
    let mut f_prev = lo;
    let mut g_prev = cycles(f_prev);
    for i in 1..=n_steps {
        let f_next = (lo + i as f64 * step).min(hi);
        let g_next = cycles(f_next);
        let m_lo = g_prev.ceil() as i64;
        let m_hi = g_next.floor() as i64;
        for m in m_lo..=m_hi {
            // bisect g(f) = m on [f_prev, f_next]
            let (mut a, mut b) = (f_prev, f_next);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if cycles(mid) < m as f64 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            modes.push(OpticalMode {
                index: m,
                frequency: 0.5 * (a + b),
                linewidth: kappa,
                role: ModeRole::Spectator,
            });
        }
        f_prev = f_next;
        g_prev = g_next;
    }
    if modes.is_empty() {
        return Err(Error::NoResonanceInSpan);
    }
    Ok(modes)
}

/// kappa/2pi = FSR / finesse, Hz.
pub fn cavity_linewidth(fsr: f64, finesse: f64) -> Result<f64> {
    if !(finesse > 0.0) {
        return Err(Error::Invalid("finesse must be > 0".into()));
    }
    Ok(fsr / finesse)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OpticalWaist {
    /// Amplitude 1/e radius w0, m.
    pub amplitude_waist: f64,
    /// Intensity 1/e radius w0/sqrt(2), m.
    pub intensity_radius: f64,
}

/// Fundamental Gaussian waist at the flat mirror:
/// w0^2 = (lambda/pi) sqrt(L(R-L)).
pub fn optical_waist(geom: &OpticalCavityGeometry) -> Result<OpticalWaist> {
    geom.validate()?;
    let g = geom.cavity_length * (geom.mirror_radius - geom.cavity_length);
    let w0 = (geom.wavelength / std::f64::consts::PI * g.sqrt()).sqrt();
    Ok(OpticalWaist {
        amplitude_waist: w0,
        intensity_radius: w0 / std::f64::consts::SQRT_2,
    })
}

/// Lorentzian density-of-states ratio between the (resonant) anti-Stokes
/// sideband and the nearest cavity mode to the Stokes sideband at
/// red - phonon_frequency: 1 + (2 delta / kappa)^2.
pub fn stokes_suppression(
    pair: &ModePair,
    spectrum: &[OpticalMode],
    phonon_frequency: f64,
) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::EmptyInput("optical spectrum"));
    }
    let stokes = pair.red.frequency - phonon_frequency;
    let nearest = spectrum
        .iter()
        .min_by(|a, b| {
            (a.frequency - stokes)
                .abs()
                .total_cmp(&(b.frequency - stokes).abs())
        })
        .expect("nonempty");
    let delta = nearest.frequency - stokes;
    let x = 2.0 * delta / nearest.linewidth;
    Ok(1.0 + x * x)
}

/// Picks the adjacent-mode pair whose spacing is within `tolerance` of
/// `target` and whose Stokes suppression meets `min_suppression`; the
/// smallest |spacing - target| wins.
pub fn find_operating_pair(
    spectrum: &[OpticalMode],
    target: f64,
    tolerance: f64,
    min_suppression: f64,
) -> Result<ModePair> {
    if spectrum.len() < 2 {
        return Err(Error::EmptyInput("optical spectrum needs >= 2 modes"));
    }
    if !(target > 0.0) {
        return Err(Error::Invalid("target spacing must be > 0".into()));
    }
    let mut sorted: Vec<&OpticalMode> = spectrum.iter().collect();
    sorted.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));

    // Smallest |spacing - target| wins; near-exact ties (common in a
    // uniform comb) are broken toward the center of the spectrum, away
    // from edge artifacts of the finite scan window.
    let span_center =
        0.5 * (sorted.first().unwrap().frequency + sorted.last().unwrap().frequency);
    let tie_eps = 1e-9 * target;
    let mut best: Option<ModePair> = None;
    let mut best_err = f64::INFINITY;
    let mut best_dist = f64::INFINITY;
    for w in sorted.windows(2) {
        let spacing = w[1].frequency - w[0].frequency;
        let err = (spacing - target).abs();
        if err > tolerance {
            continue;
        }
        let dist = (0.5 * (w[0].frequency + w[1].frequency) - span_center).abs();
        let better = err < best_err - tie_eps
            || ((err - best_err).abs() <= tie_eps && dist < best_dist);
        if !better {
            continue;
        }
        let mut red = w[0].clone();
        let mut blue = w[1].clone();
        red.role = ModeRole::Red;
        blue.role = ModeRole::Blue;
        let mut pair = ModePair {
            red,
            blue,
            pair_spacing: spacing,
            stokes_suppression: 1.0,
        };
        pair.stokes_suppression = stokes_suppression(&pair, spectrum, target)?;
        best_err = err;
        best_dist = dist;
        best = Some(pair);
    }
    match best {
        None => Err(Error::NoPairFound {
            target_hz: target,
            tolerance_hz: tolerance,
        }),
        Some(pair) if pair.stokes_suppression < min_suppression => {
            Err(Error::SuppressionTooLow {
                suppression: pair.stokes_suppression,
                required: min_suppression,
            })
        }
        Some(pair) => Ok(pair),
    }
}

/// Spectrum export with an `index,frequency_Hz,linewidth_Hz` header.
pub fn write_spectrum_csv<W: std::io::Write>(modes: &[OpticalMode], mut w: W) -> Result<()> {
    writeln!(w, "index,frequency_Hz,linewidth_Hz")?;
    for m in modes {
        writeln!(w, "{},{:.3},{:.3}", m.index, m.frequency, m.linewidth)?;
    }
    Ok(())
}
