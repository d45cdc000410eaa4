//! Seeded, schedule-independent measurement noise and batch trace
//! generation for the OMIT/OMIA and spontaneous-PSD pipelines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dynamics::{
    self, effective_linewidth, map_cooperativity, DriveConfig, PumpedMode, SystemParams,
};
use crate::coupling::CouplingMap;
use crate::error::{Error, Result};
use crate::trace::{SpectrumTrace, TraceKind};

/// Stable short digest of the parameter set, for provenance metadata.
pub fn params_digest(params: &SystemParams) -> String {
    let json = serde_json::to_string(params).expect("params serialize");
    let hash = Sha256::digest(json.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Standard-normal draw keyed by (seed, trace, bin); independent of the
/// order bins are generated in.
fn keyed_normal(seed: u64, trace_index: u64, bin: u64) -> f64 {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ trace_index) ^ bin);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

/// Applies the shot-noise-limited radiometer model: multiplicative
/// relative fluctuation 1/sqrt(averages) per PSD bin, additive relative
/// amplitude noise of the same level for network-analyzer scans.
/// Identical (trace, seed, averages) inputs give bitwise-identical
/// output.
pub fn add_measurement_noise(
    trace: &SpectrumTrace,
    seed: u64,
    averages: u64,
) -> Result<SpectrumTrace> {
    if averages < 1 {
        return Err(Error::Invalid("averages must be >= 1".into()));
    }
    trace.validate()?;
    let trace_index = trace
        .meta_f64("trace_index")
        .map(|v| v as u64)
        .unwrap_or(0);
    let sigma = 1.0 / (averages as f64).sqrt();
    let values = trace
        .values
        .iter()
        .enumerate()
        .map(|(bin, &v)| {
            let z = keyed_normal(seed, trace_index, bin as u64);
            match trace.kind {
                TraceKind::SpontaneousPsd => (v * (1.0 + sigma * z)).max(0.0),
                TraceKind::Omit | TraceKind::Omia => v + sigma * z,
            }
        })
        .collect();
    let mut noisy = SpectrumTrace {
        detunings: trace.detunings.clone(),
        values,
        kind: trace.kind,
        metadata: trace.metadata.clone(),
    };
    noisy.metadata.insert("seed".into(), seed.to_string());
    noisy.metadata.insert("averages".into(), averages.to_string());
    Ok(noisy)
}

/// Symmetric detuning grid containing 0, with at least
/// `points_per_fwhm` samples per linewidth and the requested span.
fn feature_grid(fwhm: f64, span_linewidths: f64, points_per_fwhm: usize) -> Vec<f64> {
    let span = span_linewidths * fwhm;
    let half_points = (span_linewidths * points_per_fwhm as f64 / 2.0).ceil() as i64;
    let step = span / (2.0 * half_points as f64);
    (-half_points..=half_points).map(|i| i as f64 * step).collect()
}

/// One noisy trace per power. Grids are auto-sized to >= 20 points per
/// effective linewidth over >= 10 effective linewidths. `averages = 0`
/// skips the noise step (ideal traces).
pub fn scenario_traces(
    params: &SystemParams,
    powers: &[f64],
    kind: TraceKind,
    seed: u64,
    averages: u64,
) -> Result<Vec<SpectrumTrace>> {
    params.validate()?;
    if powers.is_empty() {
        return Err(Error::EmptyInput("power list"));
    }
    let digest = params_digest(params);
    let map = single_mode_map(params);
    let results: Vec<Result<SpectrumTrace>> = powers
        .par_iter()
        .enumerate()
        .map(|(index, &power)| {
            generate_one(params, &map, power, index, kind, seed, averages, &digest)
        })
        .collect();
    results.into_iter().collect()
}

/// The dual-resonant single-mode coupling map implied by the reduced
/// parameter set.
pub fn single_mode_map(params: &SystemParams) -> CouplingMap {
    CouplingMap::single_mode(
        crate::resonator::AcousticMode {
            family_index: 0,
            transverse_order: 0,
            frequency: params.phonon_frequency,
            intrinsic_linewidth: params.gamma0,
            waist_radius: 32.7e-6,
            q_factor: params.phonon_frequency / params.gamma0,
            motional_mass: 2e-9,
        },
        params.g0,
    )
}

#[allow(clippy::too_many_arguments)]
fn generate_one(
    params: &SystemParams,
    map: &CouplingMap,
    power: f64,
    index: usize,
    kind: TraceKind,
    seed: u64,
    averages: u64,
    digest: &str,
) -> Result<SpectrumTrace> {
    let pump = match kind {
        TraceKind::Omia => PumpedMode::Blue,
        _ => PumpedMode::Red,
    };
    let drive = DriveConfig::from_power(pump, power, params)?;
    let n_c = drive.intracavity_photons;
    let c = map_cooperativity(map, params, n_c);
    let fwhm = effective_linewidth(params, c, pump)?;
    let grid = feature_grid(fwhm, 16.0, 24);

    let ideal = match kind {
        TraceKind::Omit => dynamics::omit_transmission(map, params, n_c, &grid)?,
        TraceKind::Omia => dynamics::omia_transmission(map, params, n_c, &grid)?,
        TraceKind::SpontaneousPsd => dynamics::spontaneous_psd(params, c, &grid)?,
    };
    let tagged = ideal
        .with_metadata("power_W", format!("{power:.9e}"))
        .with_metadata("trace_index", index)
        .with_metadata("params_digest", digest)
        .with_metadata("cooperativity", format!("{c:.9e}"))
        .with_metadata("effective_linewidth_Hz", format!("{fwhm:.9e}"));
    if averages == 0 {
        Ok(tagged)
    } else {
        add_measurement_noise(&tagged, seed, averages)
    }
}
