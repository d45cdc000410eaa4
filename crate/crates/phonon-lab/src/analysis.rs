//! Inverse pipeline: Lorentzian fitting, linewidth-vs-power regression
//! with the OMIA reflection trick, parameter extraction, and the two
//! occupation estimators.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{SpectrumTrace, TraceKind};

const MAX_LM_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitOrientation {
    Dip,
    Peak,
}

/// One-sigma uncertainties of the fitted Lorentzian parameters.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct FitUncertainties {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
    pub background: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub center: f64,
    pub fwhm: f64,
    /// Integrated area of the feature above background (signed positive).
    pub area: f64,
    /// Height above background, 2 area / (pi fwhm).
    pub peak_height: f64,
    pub background: f64,
    pub uncertainties: FitUncertainties,
    pub residual_norm: f64,
}

/// Per-power cooling summary (linewidths in Hz, powers in W).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoolingPoint {
    pub transmitted_power: f64,
    pub cooperativity: f64,
    pub linewidth: f64,
    pub occupation_from_linewidth: f64,
    pub occupation_from_area: f64,
    pub normalized_brightness: f64,
}

/// Lorentzian + constant background, parameterized by
/// (center, fwhm, area, background) to decorrelate width and height.
fn lorentzian_model(x: f64, p: &Vector4<f64>, sign: f64) -> f64 {
    let (c, fwhm, area, bg) = (p[0], p[1], p[2], p[3]);
    let u = x - c;
    let denom = u * u + fwhm * fwhm / 4.0;
    bg + sign * area * fwhm / (2.0 * std::f64::consts::PI * denom)
}

fn lorentzian_jacobian(x: f64, p: &Vector4<f64>, sign: f64) -> Vector4<f64> {
    let (c, fwhm, area, _) = (p[0], p[1], p[2], p[3]);
    let u = x - c;
    let denom = u * u + fwhm * fwhm / 4.0;
    let denom2 = denom * denom;
    let k = sign / (2.0 * std::f64::consts::PI);
    Vector4::new(
        k * area * fwhm * 2.0 * u / denom2,
        k * area * (u * u - fwhm * fwhm / 4.0) / denom2,
        k * fwhm / denom,
        1.0,
    )
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust noise estimate: 1.4826 * MAD of the detrended trace edges.
fn edge_noise_sigma(values: &[f64], edge: usize) -> f64 {
    let edges: Vec<f64> = values[..edge]
        .iter()
        .chain(values[values.len() - edge..].iter())
        .copied()
        .collect();
    let med = median(&mut edges.clone());
    let mut devs: Vec<f64> = edges.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&mut devs)
}

/// Levenberg-Marquardt minimization of the weighted squared residual of
/// the Lorentzian model. Returns the optimum and its cost.
fn lm_solve(
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    p0: Vector4<f64>,
    sign: f64,
) -> Result<(Vector4<f64>, f64)> {
    let cost = |p: &Vector4<f64>| -> f64 {
        xs.iter()
            .zip(ys)
            .zip(weights)
            .map(|((&x, &y), &w)| w * (lorentzian_model(x, p, sign) - y).powi(2))
            .sum()
    };
    let mut p = p0;
    let mut lambda = 1e-3;
    let mut current = cost(&p);
    for _ in 0..MAX_LM_ITERATIONS {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            let r = y - lorentzian_model(x, &p, sign);
            let j = lorentzian_jacobian(x, &p, sign);
            jtj += w * j * j.transpose();
            jtr += w * j * r;
        }
        let mut damped = jtj;
        for i in 0..4 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let mut candidate = p + step;
        candidate[1] = candidate[1].abs();
        let next = cost(&candidate);
        if next < current {
            let rel = (current - next) / current.max(1e-300);
            p = candidate;
            current = next;
            lambda = (lambda / 3.0).max(1e-12);
            if rel < 1e-13 {
                return Ok((p, current));
            }
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                // step rejection at huge damping: already at the optimum
                return Ok((p, current));
            }
        }
    }
    Err(Error::NoConvergence(MAX_LM_ITERATIONS))
}

/// Damped least-squares fit of a Lorentzian plus constant background.
///
/// Initial guess from the extremum location, half-prominence width and
/// edge-median background; 3-sigma prominence gate; uncertainties from
/// the local quadratic model at the optimum.
pub fn fit_lorentzian(trace: &SpectrumTrace, orientation: FitOrientation) -> Result<FitResult> {
    trace.validate()?;
    let n = trace.len();
    if n < 7 {
        return Err(Error::InsufficientData(format!(
            "lorentzian fit needs >= 7 points, got {n}"
        )));
    }
    let sign = match orientation {
        FitOrientation::Dip => -1.0,
        FitOrientation::Peak => 1.0,
    };
    let xs = &trace.detunings;
    let ys = &trace.values;

    // initial guess
    let edge = (n / 10).max(2);
    let mut edge_vals: Vec<f64> = ys[..edge]
        .iter()
        .chain(ys[n - edge..].iter())
        .copied()
        .collect();
    let background = median(&mut edge_vals);
    let sigma = edge_noise_sigma(ys, edge);
    let (i_ext, _) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| (sign * (a.1 - background)).total_cmp(&(sign * (b.1 - background))))
        .expect("nonempty");
    let prominence = sign * (ys[i_ext] - background);
    let span = xs[n - 1] - xs[0];
    let threshold = 3.0 * sigma.max(1e-12 * prominence.abs().max(background.abs()).max(1e-300));
    if !(prominence > threshold) {
        return Err(Error::NoPeakFound {
            prominence,
            threshold,
        });
    }

    // half-prominence width
    let half = background + sign * prominence / 2.0;
    let above = |v: f64| sign * (v - half) > 0.0;
    let mut left = i_ext;
    while left > 0 && above(ys[left]) {
        left -= 1;
    }
    let mut right = i_ext;
    while right < n - 1 && above(ys[right]) {
        right += 1;
    }
    let fwhm0 = (xs[right] - xs[left]).max(span / n as f64);
    let area0 = prominence * std::f64::consts::PI * fwhm0 / 2.0;
    let p0 = Vector4::new(xs[i_ext], fwhm0, area0, background);

    // Pass 1: uniform weights. PSD noise scales with the signal, so for
    // those traces refit with inverse-variance weights built from the
    // first-pass model (not the noisy data, which would bias low bins).
    let uniform = vec![1.0; n];
    let (mut p, mut current) = lm_solve(xs, ys, &uniform, p0, sign)?;
    let mut weights = uniform;
    if trace.kind == TraceKind::SpontaneousPsd {
        let floor = 1e-3 * (p[3].abs() + prominence);
        weights = xs
            .iter()
            .map(|&x| {
                let m = lorentzian_model(x, &p, sign).max(floor);
                1.0 / (m * m)
            })
            .collect();
        (p, current) = lm_solve(xs, ys, &weights, p, sign)?;
    }

    // covariance from the quadratic model at the optimum
    let mut jtj = Matrix4::<f64>::zeros();
    for (&x, &w) in xs.iter().zip(&weights) {
        let j = lorentzian_jacobian(x, &p, sign);
        jtj += w * j * j.transpose();
    }
    let dof = (n - 4).max(1) as f64;
    let s2 = current / dof;
    let uncertainties = jtj
        .try_inverse()
        .map(|cov| FitUncertainties {
            center: (s2 * cov[(0, 0)]).max(0.0).sqrt(),
            fwhm: (s2 * cov[(1, 1)]).max(0.0).sqrt(),
            area: (s2 * cov[(2, 2)]).max(0.0).sqrt(),
            background: (s2 * cov[(3, 3)]).max(0.0).sqrt(),
        })
        .unwrap_or_default();

    let fwhm = p[1].abs();
    Ok(FitResult {
        center: p[0],
        fwhm,
        area: p[2],
        peak_height: 2.0 * p[2] / (std::f64::consts::PI * fwhm),
        background: p[3],
        uncertainties,
        residual_norm: current.sqrt(),
    })
}

/// Divides a probe scan by the bare-cavity Lorentzian response so the
/// induced feature sits on a flat background.
pub fn normalize_probe_trace(trace: &SpectrumTrace, kappa: f64) -> Result<SpectrumTrace> {
    if trace.kind == TraceKind::SpontaneousPsd {
        return Err(Error::Invalid("psd traces have no cavity envelope".into()));
    }
    let values = trace
        .detunings
        .iter()
        .zip(&trace.values)
        .map(|(&d, &v)| {
            let x = 2.0 * d / kappa;
            v * (1.0 + x * x)
        })
        .collect();
    Ok(SpectrumTrace {
        detunings: trace.detunings.clone(),
        values,
        kind: trace.kind,
        metadata: trace.metadata.clone(),
    })
}

/// Removes the residual cavity pulling of an OMIT feature width: the
/// exact linear response narrows the detuning axis by a factor
/// sqrt(1 - 2 Gamma_opt / kappa), which matters at percent level once
/// C Gamma0 approaches kappa/100.
pub fn deconvolve_cavity_pulling(fitted_fwhm: f64, kappa: f64, kind: TraceKind) -> f64 {
    match kind {
        // Gamma_opt ~ fitted_fwhm to within Gamma0/kappa
        TraceKind::Omit => fitted_fwhm * (1.0 - 2.0 * fitted_fwhm / kappa).max(0.0).sqrt(),
        _ => fitted_fwhm,
    }
}

/// One linewidth measurement at a transmitted power.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinewidthPoint {
    pub power: f64,
    pub linewidth: f64,
    /// One-sigma uncertainty of the linewidth; None disables weighting.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinewidthFit {
    /// Intercept Gamma0/2pi, Hz.
    pub gamma0: f64,
    pub gamma0_sigma: f64,
    /// Power at which C = 1, W.
    pub power_at_unity_c: f64,
    pub power_sigma: f64,
    /// Slope Gamma0/P1, Hz/W.
    pub slope: f64,
}

impl LinewidthFit {
    /// The linear cooperativity model C(P) = P / P1.
    pub fn cooperativity_at(&self, power: f64) -> f64 {
        power / self.power_at_unity_c
    }
}

/// Single weighted linear regression Gamma(P) = gamma0 (1 + P/P1), with
/// the OMIA arm reflected to negative powers.
pub fn fit_linewidth_vs_power(
    omit_points: &[LinewidthPoint],
    omia_points: &[LinewidthPoint],
) -> Result<LinewidthFit> {
    let points: Vec<(f64, f64, Option<f64>)> = omit_points
        .iter()
        .map(|p| (p.power, p.linewidth, p.sigma))
        .chain(omia_points.iter().map(|p| (-p.power, p.linewidth, p.sigma)))
        .collect();
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup_by(|a, b| (*a - *b).abs() < f64::EPSILON * a.abs().max(1.0));
        xs.len()
    };
    if points.len() < 2 || distinct < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs >= 2 points at >= 2 distinct powers, got {} / {distinct}",
            points.len()
        )));
    }
    let weighted = points.iter().all(|p| matches!(p.2, Some(s) if s > 0.0));
    let weight = |p: &(f64, f64, Option<f64>)| {
        if weighted {
            let s = p.2.unwrap();
            1.0 / (s * s)
        } else {
            1.0
        }
    };
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &points {
        let w = weight(p);
        sw += w;
        sx += w * p.0;
        sy += w * p.1;
        sxx += w * p.0 * p.0;
        sxy += w * p.0 * p.1;
    }
    let delta = sw * sxx - sx * sx;
    let intercept = (sxx * sy - sx * sxy) / delta;
    let slope = (sw * sxy - sx * sy) / delta;
    if !(slope > 0.0) {
        return Err(Error::NegativeSlope);
    }
    // residual-scaled covariance
    let chi2: f64 = points
        .iter()
        .map(|p| weight(p) * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let dof = (points.len().saturating_sub(2)).max(1) as f64;
    let scale = chi2 / dof;
    let var_a = scale * sxx / delta;
    let var_b = scale * sw / delta;
    let cov_ab = -scale * sx / delta;

    let p1 = intercept / slope;
    let p1_var = p1 * p1
        * (var_a / (intercept * intercept) + var_b / (slope * slope)
            - 2.0 * cov_ab / (intercept * slope));
    Ok(LinewidthFit {
        gamma0: intercept,
        gamma0_sigma: var_a.max(0.0).sqrt(),
        power_at_unity_c: p1,
        power_sigma: p1_var.max(0.0).sqrt(),
        slope,
    })
}

/// g0 = sqrt(gamma0 kappa / (4 n_c)), Hz.
pub fn extract_g0(gamma0: f64, kappa: f64, n_c_at_unity: f64) -> Result<f64> {
    if !(gamma0 > 0.0 && kappa > 0.0 && n_c_at_unity > 0.0) {
        return Err(Error::Invalid("extract_g0 inputs must be > 0".into()));
    }
    Ok((gamma0 * kappa / (4.0 * n_c_at_unity)).sqrt())
}

/// n = n_th gamma0 / gamma_plus.
pub fn occupation_from_linewidth(gamma0: f64, gamma_plus: f64, n_th: f64) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(Error::Invalid("gamma0 must be > 0".into()));
    }
    if gamma_plus < gamma0 {
        return Err(Error::UnphysicalLinewidth {
            gamma_plus_hz: gamma_plus,
            gamma0_hz: gamma0,
        });
    }
    Ok(n_th * gamma0 / gamma_plus)
}

/// n = n_th V_norm gamma_plus / (4 C gamma0).
pub fn occupation_from_area(
    v_norm: f64,
    gamma_plus: f64,
    c_of_p: f64,
    gamma0: f64,
    n_th: f64,
) -> Result<f64> {
    if !(gamma_plus > 0.0 && gamma0 > 0.0 && c_of_p > 0.0) {
        return Err(Error::Invalid("occupation_from_area inputs must be > 0".into()));
    }
    if v_norm < 0.0 {
        return Err(Error::Invalid("normalized brightness must be >= 0".into()));
    }
    Ok(n_th * v_norm * gamma_plus / (4.0 * c_of_p * gamma0))
}

/// Interpolated value at `x0` from the up-to-three samples nearest it
/// (quadratic Lagrange; linear with two points).
fn interpolate_near(samples: &[(f64, f64)], x0: f64) -> f64 {
    let mut nearest: Vec<(f64, f64)> = samples.to_vec();
    nearest.sort_by(|a, b| (a.0 - x0).abs().total_cmp(&(b.0 - x0).abs()));
    nearest.truncate(3);
    nearest.sort_by(|a, b| a.0.total_cmp(&b.0));
    match nearest.len() {
        1 => nearest[0].1,
        2 => {
            let (x1, y1) = nearest[0];
            let (x2, y2) = nearest[1];
            y1 + (y2 - y1) * (x0 - x1) / (x2 - x1)
        }
        _ => {
            let mut acc = 0.0;
            for i in 0..3 {
                let (xi, yi) = nearest[i];
                let mut l = yi;
                for j in 0..3 {
                    if i != j {
                        l *= (x0 - nearest[j].0) / (xi - nearest[j].0);
                    }
                }
                acc += l;
            }
            acc
        }
    }
}

/// Rescales the fitted peak heights so the interpolated height at the
/// power where C(P) = 1 equals 1.
pub fn normalized_brightness(
    fits: &[(f64, FitResult)],
    c_model: &LinewidthFit,
) -> Result<Vec<(f64, f64)>> {
    if fits.is_empty() {
        return Err(Error::InsufficientData("no fits to normalize".into()));
    }
    let p_unity = c_model.power_at_unity_c;
    let heights: Vec<(f64, f64)> = fits.iter().map(|(p, f)| (*p, f.peak_height)).collect();
    let p_min = heights.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    let p_max = heights.iter().map(|h| h.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (p_max - p_min).max(0.0);
    if p_unity < p_min || p_unity > p_max {
        let distance = (p_unity - p_min).abs().min((p_unity - p_max).abs());
        if distance > 2.0 * span {
            return Err(Error::InsufficientData(format!(
                "C=1 power {p_unity:.3e} W too far outside the data span [{p_min:.3e}, {p_max:.3e}]"
            )));
        }
    }
    let reference = interpolate_near(&heights, p_unity);
    if !(reference > 0.0) {
        return Err(Error::InsufficientData(
            "non-positive interpolated height at C=1".into(),
        ));
    }
    Ok(heights.into_iter().map(|(p, h)| (p, h / reference)).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoolingTable {
    pub points: Vec<CoolingPoint>,
    /// (power, error message) for traces whose fit failed.
    pub failures: Vec<(f64, String)>,
}

impl CoolingTable {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "power_W,cooperativity,linewidth_Hz,occupation_from_linewidth,occupation_from_area,normalized_brightness"
        )?;
        for p in &self.points {
            writeln!(
                w,
                "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                p.transmitted_power,
                p.cooperativity,
                p.linewidth,
                p.occupation_from_linewidth,
                p.occupation_from_area,
                p.normalized_brightness
            )?;
        }
        Ok(())
    }
}

/// Full thermometry table from spontaneous PSD traces: Lorentzian fit,
/// C(P) from the OMIT regression, both occupation estimators and the
/// normalized brightness per power. Fit failures are recorded, not
/// fatal.
pub fn build_cooling_table(
    traces: &[SpectrumTrace],
    params: &crate::dynamics::SystemParams,
    regression: &LinewidthFit,
) -> Result<CoolingTable> {
    if traces.iter().any(|t| t.kind != TraceKind::SpontaneousPsd) {
        return Err(Error::Invalid(
            "cooling table needs spontaneous_psd traces".into(),
        ));
    }
    let mut fits: Vec<(f64, FitResult)> = Vec::new();
    let mut failures = Vec::new();
    for trace in traces {
        let Some(power) = trace.meta_f64("power_W") else {
            failures.push((f64::NAN, "trace missing power_W metadata".to_string()));
            continue;
        };
        match fit_lorentzian(trace, FitOrientation::Peak) {
            Ok(fit) => fits.push((power, fit)),
            Err(e) => failures.push((power, e.to_string())),
        }
    }
    if fits.is_empty() {
        return Ok(CoolingTable {
            points: Vec::new(),
            failures,
        });
    }
    let brightness = normalized_brightness(&fits, regression)?;
    let mut points = Vec::with_capacity(fits.len());
    for ((power, fit), (_, v_norm)) in fits.iter().zip(&brightness) {
        let c = regression.cooperativity_at(*power);
        let n_lw = occupation_from_linewidth(regression.gamma0, fit.fwhm, params.n_th)?;
        let n_area = occupation_from_area(*v_norm, fit.fwhm, c, regression.gamma0, params.n_th)?;
        points.push(CoolingPoint {
            transmitted_power: *power,
            cooperativity: c,
            linewidth: fit.fwhm,
            occupation_from_linewidth: n_lw,
            occupation_from_area: n_area,
            normalized_brightness: *v_norm,
        });
    }
    points.sort_by(|a, b| a.transmitted_power.total_cmp(&b.transmitted_power));
    Ok(CoolingTable { points, failures })
}

/// Solves a dense linear least-squares system; exposed for test oracles.
pub fn solve_normal_equations(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    (a.transpose() * a).lu().solve(&(a.transpose() * b))
}
