//! Figure-reproduction and sweep pipelines behind the CLI: design
//! report aggregation, forward synthesis plus inverse fitting for the
//! transparency/amplification and cooling runs, and a deterministic
//! parallel parameter sweep.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, build_cooling_table, deconvolve_cavity_pulling, fit_linewidth_vs_power, fit_lorentzian,
    normalize_probe_trace, CoolingTable, FitOrientation, LinewidthFit, LinewidthPoint,
};
use crate::config::ScenarioConfig;
use crate::coupling::{self, CouplingMap};
use crate::dynamics::{self, PumpedMode};
use crate::error::{Error, Result};
use crate::optcavity::{self, ModePair, OpticalWaist};
use crate::resonator::{self, MassConvention};
use crate::specsynth::{self, params_digest};
use crate::trace::{SpectrumTrace, TraceKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcousticSummary {
    pub fsr_hz: f64,
    pub transverse_mode_spacing_hz: f64,
    pub brillouin_frequency_hz: f64,
    pub waist_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpticalSummary {
    pub nominal_fsr_hz: f64,
    pub finesse: f64,
    pub kappa_hz: f64,
    pub waist: OpticalWaist,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingEntrySummary {
    pub family_index: i64,
    pub transverse_order: u32,
    pub frequency_hz: f64,
    pub g0_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub acoustic: AcousticSummary,
    pub optical: OpticalSummary,
    pub operating_pair: ModePair,
    pub coupling_map: Vec<CouplingEntrySummary>,
}

/// Aggregates the geometry, cavity and coupling calculations into one
/// design report for the configured scenario.
pub fn run_design(config: &ScenarioConfig) -> Result<DesignReport> {
    config.validate()?;
    let hbar = &config.hbar;
    let optical = &config.optical;

    let fsr = resonator::acoustic_fsr(hbar)?;
    let spacing = resonator::transverse_mode_spacing(hbar)?;
    let omega_b = coupling::brillouin_frequency(hbar)?;
    let waist = resonator::acoustic_waist(hbar, omega_b)?;

    let nominal_fsr = optical.nominal_fsr();
    let finesse = optical.finesse();
    let kappa = optcavity::cavity_linewidth(nominal_fsr, finesse)?;
    let optical_waist = optcavity::optical_waist(optical)?;

    let laser_frequency = crate::constants::SPEED_OF_LIGHT / optical.wavelength;
    let spectrum = optcavity::resonance_spectrum(optical, config.design.scan_span, laser_frequency)?;
    let pair = optcavity::find_operating_pair(
        &spectrum,
        config.system.phonon_frequency,
        config.design.pair_tolerance,
        config.design.min_suppression,
    )?;

    let modes = resonator::mode_spectrum(
        hbar,
        omega_b,
        3.0 * fsr,
        config.system.gamma0,
        config.design.max_transverse_order,
        MassConvention::HalfCylinder,
    )?;
    let map = coupling::coupling_map(&modes, &config.alignment, config.system.g0, omega_b, hbar)?;

    Ok(DesignReport {
        acoustic: AcousticSummary {
            fsr_hz: fsr,
            transverse_mode_spacing_hz: spacing,
            brillouin_frequency_hz: omega_b,
            waist_m: waist,
        },
        optical: OpticalSummary {
            nominal_fsr_hz: nominal_fsr,
            finesse,
            kappa_hz: kappa,
            waist: optical_waist,
        },
        operating_pair: pair,
        coupling_map: map
            .entries
            .iter()
            .map(|(mode, g0)| CouplingEntrySummary {
                family_index: mode.family_index,
                transverse_order: mode.transverse_order,
                frequency_hz: mode.frequency,
                g0_hz: *g0,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeFitRecord {
    pub power_w: f64,
    pub kind: TraceKind,
    /// Fitted feature width after cavity-pulling deconvolution, Hz.
    pub linewidth_hz: f64,
    pub linewidth_sigma_hz: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig2Report {
    pub fits: Vec<ProbeFitRecord>,
    pub regression: LinewidthFit,
    /// Intracavity photon number at the C = 1 power.
    pub n_c_at_unity: f64,
    pub g0_hz: f64,
    pub params_digest: String,
}

/// Fits every probe trace of one kind and converts it to a regression
/// point. Fits run in parallel; output order follows the input order.
fn fit_probe_traces(
    traces: &[SpectrumTrace],
    kappa: f64,
    kind: TraceKind,
) -> Result<Vec<(ProbeFitRecord, LinewidthPoint)>> {
    let orientation = match kind {
        TraceKind::Omit => FitOrientation::Dip,
        _ => FitOrientation::Peak,
    };
    let fitted: Vec<Result<(ProbeFitRecord, LinewidthPoint)>> = traces
        .par_iter()
        .map(|trace| {
            let power = trace
                .meta_f64("power_W")
                .ok_or_else(|| Error::Invalid("trace missing power_W metadata".into()))?;
            let flat = normalize_probe_trace(trace, kappa)?;
            let fit = fit_lorentzian(&flat, orientation)?;
            let linewidth = deconvolve_cavity_pulling(fit.fwhm, kappa, kind);
            let sigma = deconvolve_cavity_pulling(fit.uncertainties.fwhm, kappa, kind);
            Ok((
                ProbeFitRecord {
                    power_w: power,
                    kind,
                    linewidth_hz: linewidth,
                    linewidth_sigma_hz: sigma,
                    contrast: fit.peak_height / fit.background.abs().max(f64::MIN_POSITIVE),
                },
                LinewidthPoint {
                    power,
                    linewidth,
                    sigma: (sigma > 0.0).then_some(sigma),
                },
            ))
        })
        .collect();
    fitted.into_iter().collect()
}

/// Transparency/amplification run: synthesize traces over the power
/// ladders, fit them, regress linewidth vs power, and extract the
/// intrinsic linewidth, unity-cooperativity power and single-photon
/// coupling rate.
pub fn run_fig2(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<Fig2Report> {
    config.validate()?;
    let params = &config.system;
    let seed = config.synth.seed;
    let averages = config.synth.averages;

    let omit = specsynth::scenario_traces(params, &config.drive.omit_powers, TraceKind::Omit, seed, averages)?;
    let omia = specsynth::scenario_traces(params, &config.drive.omia_powers, TraceKind::Omia, seed.wrapping_add(1), averages)?;
    if let Some(dir) = out_dir {
        write_traces(dir, "omit", &omit)?;
        write_traces(dir, "omia", &omia)?;
    }

    let stage = (|| -> Result<Fig2Report> {
        let omit_fits = fit_probe_traces(&omit, params.kappa, TraceKind::Omit)?;
        let omia_fits = fit_probe_traces(&omia, params.kappa, TraceKind::Omia)?;
        let omit_points: Vec<LinewidthPoint> = omit_fits.iter().map(|f| f.1).collect();
        let omia_points: Vec<LinewidthPoint> = omia_fits.iter().map(|f| f.1).collect();
        let regression = fit_linewidth_vs_power(&omit_points, &omia_points)?;
        let n_c_at_unity = dynamics::intracavity_photons(regression.power_at_unity_c, params)?;
        let g0 = analysis::extract_g0(regression.gamma0, params.kappa, n_c_at_unity)?;
        Ok(Fig2Report {
            fits: omit_fits
                .into_iter()
                .chain(omia_fits)
                .map(|(record, _)| record)
                .collect(),
            regression,
            n_c_at_unity,
            g0_hz: g0,
            params_digest: params_digest(params),
        })
    })();

    match stage {
        Ok(report) => {
            if let Some(dir) = out_dir {
                write_json(&dir.join("fig2_report.json"), &report)?;
                write_fig2_csv(&dir.join("fig2_fits.csv"), &report)?;
                fs::write(dir.join("fig2_plot.gp"), FIG2_GNUPLOT)?;
            }
            Ok(report)
        }
        Err(e) => {
            if let Some(dir) = out_dir {
                write_failure_manifest(dir, "fig2", &e)?;
            }
            Err(e)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3Report {
    pub regression: LinewidthFit,
    pub cooling: CoolingTable,
    /// Occupation at the highest power, from the linewidth estimator.
    pub final_occupation_linewidth: f64,
    /// Occupation at the highest power, from the area estimator.
    pub final_occupation_area: f64,
    pub params_digest: String,
}

/// Cooling run: OMIT/OMIA regression for the cooperativity model, then
/// spontaneous-scattering spectra across the cooling power ladder and
/// the per-power occupation table.
pub fn run_fig3(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<Fig3Report> {
    config.validate()?;
    let params = &config.system;
    let fig2 = run_fig2(config, None)?;

    let psd = specsynth::scenario_traces(
        params,
        &config.drive.psd_powers,
        TraceKind::SpontaneousPsd,
        config.synth.seed.wrapping_add(2),
        config.synth.averages,
    )?;
    if let Some(dir) = out_dir {
        write_traces(dir, "psd", &psd)?;
    }

    let stage = (|| -> Result<Fig3Report> {
        let cooling = build_cooling_table(&psd, params, &fig2.regression)?;
        let last = cooling
            .points
            .last()
            .ok_or_else(|| Error::InsufficientData("no usable cooling points".into()))?;
        Ok(Fig3Report {
            regression: fig2.regression.clone(),
            final_occupation_linewidth: last.occupation_from_linewidth,
            final_occupation_area: last.occupation_from_area,
            cooling,
            params_digest: fig2.params_digest.clone(),
        })
    })();

    match stage {
        Ok(report) => {
            if let Some(dir) = out_dir {
                write_json(&dir.join("fig3_report.json"), &report)?;
                let mut csv = Vec::new();
                report.cooling.write_csv(&mut csv)?;
                fs::write(dir.join("fig3_cooling.csv"), csv)?;
                fs::write(dir.join("fig3_plot.gp"), FIG3_GNUPLOT)?;
            }
            Ok(report)
        }
        Err(e) => {
            if let Some(dir) = out_dir {
                write_failure_manifest(dir, "fig3", &e)?;
            }
            Err(e)
        }
    }
}

/// One evaluated sweep cell: overridden axis values plus the scalar
/// observables, with any physics error recorded in-row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub kappa_hz: Option<f64>,
    pub cooperativity: Option<f64>,
    pub effective_linewidth_hz: Option<f64>,
    pub occupation: Option<f64>,
    pub fundamental_overlap: Option<f64>,
    pub l1_suppression_db: Option<f64>,
    pub error: Option<String>,
}

fn evaluate_cell(config: &ScenarioConfig) -> Result<SweepRow> {
    let params = &config.system;
    params.validate()?;
    config.alignment.validate()?;
    let kappa = optcavity::cavity_linewidth(config.optical.nominal_fsr(), config.optical.finesse())?;
    let power = *config
        .drive
        .psd_powers
        .first()
        .ok_or(Error::EmptyInput("drive.psd_powers"))?;
    let n_c = dynamics::intracavity_photons(power, params)?;
    let c = dynamics::cooperativity(params, n_c)?;
    let gamma_plus = dynamics::effective_linewidth(params, c, PumpedMode::Red)?;
    let occupation = dynamics::steady_state_occupation(params, c)?;
    let l0 = coupling::transverse_overlap(&config.alignment, 0)?;
    let l1 = coupling::transverse_overlap(&config.alignment, 1)?;
    let suppression_db = 10.0 * (l0 / l1.max(f64::MIN_POSITIVE)).log10();
    Ok(SweepRow {
        axis_values: Vec::new(),
        kappa_hz: Some(kappa),
        cooperativity: Some(c),
        effective_linewidth_hz: Some(gamma_plus),
        occupation: Some(occupation),
        fundamental_overlap: Some(l0),
        l1_suppression_db: Some(suppression_db),
        error: None,
    })
}

/// Cartesian product of the sweep axes in lexicographic order (last
/// axis fastest), evaluated in parallel on `jobs` threads. Row order
/// and bytes are independent of `jobs`.
pub fn run_sweep(config: &ScenarioConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Usage("sweep requires a [sweep] section with axes".into()))?;
    if sweep.axes.is_empty() {
        return Err(Error::Usage("sweep grid is empty".into()));
    }
    if jobs < 1 {
        return Err(Error::Usage("jobs must be >= 1".into()));
    }
    let dims: Vec<usize> = sweep.axes.iter().map(|a| a.values.len()).collect();
    let total: usize = dims.iter().product();

    let cells: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut values = vec![0.0; dims.len()];
            for (slot, (dim, axis)) in values
                .iter_mut()
                .zip(dims.iter().zip(&sweep.axes))
                .rev()
            {
                *slot = axis.values[idx % dim];
                idx /= dim;
            }
            values
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|values| {
                let mut cell_config = config.clone();
                let result = sweep
                    .axes
                    .iter()
                    .zip(values)
                    .try_for_each(|(axis, &v)| {
                        cell_config.apply_override(&axis.parameter, v)
                    })
                    .and_then(|()| evaluate_cell(&cell_config));
                let mut row = match result {
                    Ok(row) => row,
                    Err(e) => SweepRow {
                        axis_values: Vec::new(),
                        kappa_hz: None,
                        cooperativity: None,
                        effective_linewidth_hz: None,
                        occupation: None,
                        fundamental_overlap: None,
                        l1_suppression_db: None,
                        error: Some(e.to_string()),
                    },
                };
                row.axis_values = values.clone();
                row
            })
            .collect()
    });
    Ok(rows)
}

/// Serializes sweep rows as CSV with one column per axis parameter.
pub fn write_sweep_csv<W: std::io::Write>(
    config: &ScenarioConfig,
    rows: &[SweepRow],
    mut w: W,
) -> Result<()> {
    let axes = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Usage("sweep requires a [sweep] section".into()))?;
    let names: Vec<String> = axes.axes.iter().map(|a| a.parameter.clone()).collect();
    writeln!(
        w,
        "{},kappa_Hz,cooperativity,effective_linewidth_Hz,occupation,fundamental_overlap,l1_suppression_db,error",
        names.join(",")
    )?;
    let fmt = |v: &Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
    for row in rows {
        let axis_cols: Vec<String> = row.axis_values.iter().map(|v| format!("{v:.9e}")).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            axis_cols.join(","),
            fmt(&row.kappa_hz),
            fmt(&row.cooperativity),
            fmt(&row.effective_linewidth_hz),
            fmt(&row.occupation),
            fmt(&row.fundamental_overlap),
            fmt(&row.l1_suppression_db),
            row.error.clone().unwrap_or_default().replace(',', ";"),
        )?;
    }
    Ok(())
}

fn write_traces(dir: &Path, prefix: &str, traces: &[SpectrumTrace]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, trace) in traces.iter().enumerate() {
        let path = dir.join(format!("{prefix}_{i:02}.csv"));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        fs::write(path, buf)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invalid(format!("serialize: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

fn write_fig2_csv(path: &PathBuf, report: &Fig2Report) -> Result<()> {
    let mut w = Vec::new();
    {
        use std::io::Write;
        writeln!(w, "power_W,kind,linewidth_Hz,linewidth_sigma_Hz,contrast")?;
        for fit in &report.fits {
            writeln!(
                w,
                "{:.6e},{},{:.6e},{:.6e},{:.6e}",
                fit.power_w, fit.kind, fit.linewidth_hz, fit.linewidth_sigma_hz, fit.contrast
            )?;
        }
    }
    fs::write(path, w)?;
    Ok(())
}

fn write_failure_manifest(dir: &Path, stage: &str, error: &Error) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = serde_json::json!({
        "stage": stage,
        "status": "failed",
        "error": error.to_string(),
    });
    fs::write(
        dir.join(format!("{stage}_failure.json")),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    Ok(())
}

const FIG2_GNUPLOT: &str = "\
# Linewidth vs transmitted power (columns from fig2_fits.csv)
set datafile separator ','
set xlabel 'transmitted power (W)'
set ylabel 'fitted linewidth (Hz)'
plot 'fig2_fits.csv' using 1:3 skip 1 with points title 'fits'
";

const FIG3_GNUPLOT: &str = "\
# Phonon occupation vs cooperativity (columns from fig3_cooling.csv)
set datafile separator ','
set logscale x
set xlabel 'cooperativity'
set ylabel 'phonon occupation'
plot 'fig3_cooling.csv' using 2:4 skip 1 with linespoints title 'linewidth estimator', \
     'fig3_cooling.csv' using 2:5 skip 1 with linespoints title 'area estimator'
";

/// Reserved placeholder referenced by the map-aware pipelines; the
/// reduced single-mode map mirrors `specsynth`.
pub fn scenario_map(config: &ScenarioConfig) -> CouplingMap {
    specsynth::single_mode_map(&config.system)
}
