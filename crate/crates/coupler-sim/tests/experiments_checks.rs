//! Experiment drivers on small grids: shapes, normalization, determinism,
//! and loose physics sanity. The dense published-figure tolerances live in
//! the acceptance tests.

use coupler_core::device::{self, DeviceParams, TWO_PI};
use coupler_sim::config::linspace;
use coupler_sim::experiments::{
    run_coupling_curve, run_crosstalk_scan, run_min_coupling_study, run_spectroscopy,
    run_swap_chevron, ExperimentError, SimOptions,
};

fn opts() -> SimOptions {
    SimOptions {
        dt: 0.05e-9,
        rwa: true,
        shots: None,
        seed: 1,
        fingerprint: "test".to_string(),
    }
}

fn bias_for_mhz(params: &DeviceParams, mhz: f64) -> f64 {
    device::bias_for_coupling(params, TWO_PI * mhz * 1e6).unwrap()
}

#[test]
fn spectroscopy_small_grid_has_peaks_in_every_row() {
    let params = DeviceParams::default();
    let i_cb = bias_for_mhz(&params, -40.0);
    let delta = linspace(-50e6, 50e6, 7);
    let probe = linspace(-80e6, 80e6, 41);
    let run = run_spectroscopy(i_cb, TWO_PI * 1.5e6, &delta, &probe, &params, &opts()).unwrap();
    assert_eq!(run.result.len(), 7 * 41);
    assert_eq!(run.result.axes[0].column(), "delta_MHz");
    for k in 0..run.result.len() {
        let sum = run.result.p00[k] + run.result.p01[k] + run.result.p10[k] + run.result.p11[k];
        assert!((sum - 1.0).abs() < 1e-9, "sum {sum} at {k}");
    }
    for (delta, peaks) in &run.peaks {
        assert!(!peaks.is_empty(), "no peak at delta {delta}");
    }
    let crossing = run.crossing.unwrap();
    assert!(
        (30e6..50e6).contains(&crossing.omega_c),
        "splitting {} Hz",
        crossing.omega_c
    );
}

#[test]
fn chevron_fits_track_the_eigen_splitting() {
    let params = DeviceParams::default();
    let i_cb = bias_for_mhz(&params, -27.0);
    let delta = [-50e6, 0.0, 50e6];
    let t = linspace(0.0, 300e-9, 81);
    let run = run_swap_chevron(i_cb, &delta, &t, &params, &opts()).unwrap();
    for row in &run.rows {
        let fit = row.fit.as_ref().unwrap();
        let rel = (fit.frequency - row.expected).abs() / row.expected;
        assert!(rel < 0.01, "delta {} rel err {rel}", row.delta);
    }
}

#[test]
fn coupling_curve_fit_tracks_theory() {
    let params = DeviceParams::default();
    let biases = [-0.5 * params.i_c0, 0.0, 0.5 * params.i_c0];
    let run = run_coupling_curve(&biases, 61, &params, &opts()).unwrap();
    for row in &run.rows {
        let fit = row.fit.as_ref().unwrap();
        let theory = row.omega_c_theory.abs() / TWO_PI;
        let rel = (fit.frequency - theory).abs() / theory;
        assert!(rel < 0.005, "bias {} rel err {rel}", row.i_cb);
        assert!(!row.decay_limited);
    }
}

#[test]
fn crosstalk_ratio_grows_with_coupling() {
    let params = DeviceParams::default();
    let biases = [bias_for_mhz(&params, -9.0), bias_for_mhz(&params, -17.0)];
    let t = linspace(0.0, 200e-9, 41);
    let run = run_crosstalk_scan(&biases, &t, TWO_PI * 20e6, &params, &opts()).unwrap();
    assert_eq!(run.points.len(), 4);
    for pair in run.points.chunks(2) {
        // Same bias, both driven choices agree on the scale.
        let r0 = pair[0].ratio.as_ref().unwrap().ratio;
        let r1 = pair[1].ratio.as_ref().unwrap().ratio;
        assert!(r0 > 0.0 && r1 > 0.0);
        assert!((r0 - r1).abs() / r0 < 0.3, "driven choices disagree: {r0} vs {r1}");
    }
    let weak = run.points[0].ratio.as_ref().unwrap().ratio;
    let strong = run.points[2].ratio.as_ref().unwrap().ratio;
    assert!(
        strong > 2.0 * weak,
        "ratio should grow with coupling: {weak} vs {strong}"
    );
}

#[test]
fn min_coupling_separates_half_megahertz_from_zero() {
    let params = DeviceParams::default();
    let t = linspace(0.0, 400e-9, 61);
    let list = [TWO_PI * 0.5e6, 0.0];
    let run = run_min_coupling_study(&list, 350e-9, &t, 500, 4.0, &params, &opts()).unwrap();
    assert!(run.verdicts[0].resolvable, "F = {}", run.verdicts[0].f_ratio);
    assert!(!run.verdicts[1].resolvable, "F = {}", run.verdicts[1].f_ratio);
}

#[test]
fn reruns_are_bitwise_identical_in_both_sampling_modes() {
    let params = DeviceParams::default();
    let i_cb = bias_for_mhz(&params, -20.0);
    let delta = linspace(-30e6, 30e6, 3);
    let probe = linspace(-40e6, 40e6, 11);
    for shots in [None, Some(200)] {
        let o = SimOptions {
            shots,
            ..opts()
        };
        let a = run_spectroscopy(i_cb, TWO_PI * 1.5e6, &delta, &probe, &params, &o).unwrap();
        let b = run_spectroscopy(i_cb, TWO_PI * 1.5e6, &delta, &probe, &params, &o).unwrap();
        assert_eq!(a.result.p00, b.result.p00);
        assert_eq!(a.result.p11, b.result.p11);
    }
    let with_seed = |seed: u64| {
        let o = SimOptions {
            shots: Some(200),
            seed,
            ..opts()
        };
        run_spectroscopy(i_cb, TWO_PI * 1.5e6, &delta, &probe, &params, &o)
            .unwrap()
            .result
            .p00
    };
    assert_ne!(with_seed(1), with_seed(2), "seed must matter in shot mode");
}

#[test]
fn empty_grids_are_rejected() {
    let params = DeviceParams::default();
    let err = run_swap_chevron(0.0, &[], &[0.0, 1e-9], &params, &opts()).unwrap_err();
    assert!(matches!(err, ExperimentError::Grid { .. }));
    let err = run_coupling_curve(&[], 61, &params, &opts()).unwrap_err();
    assert!(matches!(err, ExperimentError::Grid { .. }));
}
