//! Property-based invariants over the physically meaningful parameter
//! ranges.

use proptest::prelude::*;

use phonon_lab::analysis::{fit_linewidth_vs_power, LinewidthPoint};
use phonon_lab::coupling::{phase_match_envelope, transverse_overlap, AlignmentState};
use phonon_lab::dynamics::{self, PumpedMode, SystemParams};
use phonon_lab::error::Error;
use phonon_lab::resonator::{
    acoustic_fsr, mode_spectrum, thermal_occupation, transverse_mode_spacing, HbarGeometry,
    MassConvention,
};

fn geometry(length: f64, radius: f64, velocity: f64) -> HbarGeometry {
    HbarGeometry {
        length,
        radius_of_curvature: radius,
        sound_velocity: velocity,
        ..HbarGeometry::paper_default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fsr_scales_homogeneously(
        length in 1e-4f64..5e-3,
        velocity in 1e3f64..1e4,
        scale in 0.5f64..2.0,
    ) {
        let geom = geometry(length, 0.5, velocity);
        let scaled = geometry(length * scale, 0.5, velocity * scale);
        let a = acoustic_fsr(&geom).unwrap();
        let b = acoustic_fsr(&scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn transverse_spacing_bounded_and_monotone(
        length in 1e-4f64..5e-3,
        ratio_a in 0.01f64..0.98,
        ratio_b in 0.01f64..0.98,
    ) {
        // ratio = L/R; spacing = (FSR/pi) arccos(sqrt(1 - L/R)) grows with it
        let fsr = acoustic_fsr(&geometry(length, length / ratio_a, 6040.0)).unwrap();
        let s_a = transverse_mode_spacing(&geometry(length, length / ratio_a, 6040.0)).unwrap();
        let s_b = transverse_mode_spacing(&geometry(length, length / ratio_b, 6040.0)).unwrap();
        prop_assert!(s_a > 0.0 && s_a < fsr / 2.0);
        if ratio_a > ratio_b {
            prop_assert!(s_a >= s_b);
        }
    }

    #[test]
    fn thermal_occupation_classical_bounds(
        frequency in 1e8f64..2e10,
        temperature in 0.1f64..400.0,
    ) {
        let n = thermal_occupation(frequency, temperature).unwrap();
        let classical = 1.380649e-23 * temperature / (6.62607015e-34 * frequency);
        prop_assert!(n >= (classical - 1.0).max(0.0) - 1e-9);
        prop_assert!(n <= classical + 1e-9);
    }

    #[test]
    fn mode_spectrum_sorted_and_distinct(
        center in 1e9f64..2e10,
        span in 1e7f64..1e9,
        max_t in 0u32..4,
    ) {
        let geom = HbarGeometry::paper_default();
        match mode_spectrum(&geom, center, span, 600.0, max_t, MassConvention::HalfCylinder) {
            Ok(modes) => {
                for pair in modes.windows(2) {
                    prop_assert!(pair[0].frequency < pair[1].frequency);
                }
            }
            Err(Error::EmptySpan) => {}
            Err(e) => prop_assert!(false, "unexpected error {e:?}"),
        }
    }

    #[test]
    fn poisson_overlap_normalization(
        offset in 0.0f64..60e-6,
        waist in 10e-6f64..60e-6,
    ) {
        let alignment = AlignmentState {
            transverse_offset: offset,
            optical_intensity_radius: waist,
            acoustic_waist: waist,
        };
        let total: f64 = (0..=60)
            .map(|m| transverse_overlap(&alignment, m).unwrap())
            .sum();
        // partial sums fall short only through the truncated tail
        let xi = offset * offset / (2.0 * waist * waist);
        if xi < 20.0 {
            prop_assert!((total - 1.0).abs() <= 1e-9, "sum {total} at xi {xi}");
        }
    }

    #[test]
    fn envelope_even_and_zero_at_even_fsr_multiples(
        k in 1i32..6,
        offset in 1e5f64..3e6,
    ) {
        let geom = HbarGeometry::paper_default();
        let fsr = acoustic_fsr(&geom).unwrap();
        let f_b = 12.0e9;
        let plus = phase_match_envelope(f_b + offset, f_b, &geom).unwrap();
        let minus = phase_match_envelope(f_b - offset, f_b, &geom).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-12);
        let node = phase_match_envelope(f_b + 2.0 * f64::from(k) * fsr, f_b, &geom).unwrap();
        prop_assert!(node.abs() <= 1e-9, "envelope {node} at 2k FSR");
    }

    #[test]
    fn occupation_algebra_is_exact(c in 0.0f64..100.0, n_th in 1e-6f64..1e4) {
        let params = SystemParams { n_th, ..SystemParams::paper_default() };
        let n = dynamics::steady_state_occupation(&params, c).unwrap();
        // exact up to the two roundings of the divide/multiply pair
        prop_assert!((n * (1.0 + c) - n_th).abs() <= 4.0 * f64::EPSILON * n_th);
    }

    #[test]
    fn self_oscillation_iff_blue_and_c_ge_one(c in 0.0f64..3.0) {
        let params = SystemParams::paper_default();
        let red = dynamics::effective_linewidth(&params, c, PumpedMode::Red);
        prop_assert!(red.is_ok());
        let blue = dynamics::effective_linewidth(&params, c, PumpedMode::Blue);
        if c >= 1.0 {
            let oscillates = matches!(blue, Err(Error::SelfOscillation { .. }));
            prop_assert!(oscillates, "expected SelfOscillation at C = {}", c);
        } else {
            prop_assert!((blue.unwrap() - params.gamma0 * (1.0 - c)).abs() <= 1e-9 * params.gamma0);
        }
    }

    #[test]
    fn regression_is_invariant_under_power_rescale(
        gamma0 in 100.0f64..2000.0,
        p1 in 5e-6f64..1e-4,
        scale in 0.1f64..10.0,
    ) {
        let powers = [0.3, 1.0, 3.0, 10.0, 40.0];
        let make = |s: f64| -> (Vec<LinewidthPoint>, Vec<LinewidthPoint>) {
            let omit = powers
                .iter()
                .map(|&f| LinewidthPoint {
                    power: f * p1 * s,
                    linewidth: gamma0 * (1.0 + f),
                    sigma: None,
                })
                .collect();
            let omia = [0.2, 0.5, 0.8]
                .iter()
                .map(|&f| LinewidthPoint {
                    power: f * p1 * s,
                    linewidth: gamma0 * (1.0 - f),
                    sigma: None,
                })
                .collect();
            (omit, omia)
        };
        let (omit_a, omia_a) = make(1.0);
        let (omit_b, omia_b) = make(scale);
        let fit_a = fit_linewidth_vs_power(&omit_a, &omia_a).unwrap();
        let fit_b = fit_linewidth_vs_power(&omit_b, &omia_b).unwrap();
        prop_assert!((fit_a.gamma0 - fit_b.gamma0).abs() <= 1e-6 * gamma0);
        prop_assert!(
            (fit_b.power_at_unity_c - scale * fit_a.power_at_unity_c).abs()
                <= 1e-6 * scale * fit_a.power_at_unity_c
        );
        prop_assert!((fit_a.gamma0 - gamma0).abs() <= 1e-6 * gamma0);
        prop_assert!((fit_a.power_at_unity_c - p1).abs() <= 1e-6 * p1);
    }

    #[test]
    fn effective_linewidth_linear_in_cooperativity(c in 0.01f64..60.0) {
        let params = SystemParams::paper_default();
        let gamma = dynamics::effective_linewidth(&params, c, PumpedMode::Red).unwrap();
        let expected = params.gamma0 * (1.0 + c);
        prop_assert!((gamma - expected).abs() <= 1e-3 * expected);
    }
}

#[test]
fn noise_synthesis_deterministic_across_thread_counts() {
    let params = SystemParams::paper_default();
    let powers: Vec<f64> = (1..=12).map(|i| i as f64 * 20e-6).collect();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            phonon_lab::specsynth::scenario_traces(
                &params,
                &powers,
                phonon_lab::trace::TraceKind::Omit,
                99,
                200,
            )
            .unwrap()
        })
    };
    let single = run(1);
    let multi = run(8);
    assert_eq!(single, multi);
    let replay = run(8);
    assert_eq!(multi, replay);
}
