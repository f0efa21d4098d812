//! Desk-scale counterparts of the published device results, one test per
//! claim, each finishing with a PASS line carrying the measured numbers.
//! Reference values marked "40-digit" were computed independently with an
//! arbitrary-precision evaluator and frozen here.

use coupler_core::device::{self, DeviceParams, ZeroCoupling, TWO_PI};
use coupler_core::dynamics::{ControlSnapshot, ControlSource, Propagator, TwoQubitState};
use coupler_core::hysteresis::{self, ResetConfig};
use coupler_core::sequences::{self, Channel, ChannelId, PulseSequence, Segment};
use coupler_sim::config::linspace;
use coupler_sim::experiments::{
    run_coupling_curve, run_crosstalk_scan, run_min_coupling_study, run_spectroscopy,
    run_swap_chevron, SimOptions,
};

fn opts() -> SimOptions {
    SimOptions {
        dt: 0.05e-9,
        rwa: true,
        shots: None,
        seed: 1,
        fingerprint: String::new(),
    }
}

fn bias_for_mhz(params: &DeviceParams, mhz: f64) -> f64 {
    device::bias_for_coupling(params, TWO_PI * mhz * 1e6).unwrap()
}

#[test]
fn coupling_strength_matches_forty_digit_references() {
    let p = DeviceParams::default();
    // (bias fraction of i_c0, coupling in rad/s, 40-digit).
    let cases = [
        (0.0, -52270247.886750055),
        (0.25, -71787456.093268459),
        (0.5, -144335231.99797642),
        (0.75, -356885792.15885807),
        (0.9, -822445814.65348896),
    ];
    let mut worst = 0.0f64;
    for (frac, want) in cases {
        let got = device::coupling_strength(&p, frac * p.i_c0).unwrap();
        let rel = ((got - want) / want).abs();
        assert!(rel <= 1e-12, "bias {frac} i_c0: got {got}, want {want}, rel {rel}");
        worst = worst.max(rel);
    }
    let mhz = device::coupling_strength(&p, 0.9 * p.i_c0).unwrap() / TWO_PI / 1e6;
    assert!(
        (mhz - (-130.9)).abs() <= 0.1,
        "coupling at 0.9 i_c0 is {mhz} MHz, want -130.9 +- 0.1"
    );
    println!(
        "PASS: coupling strength matches 5 reference biases (worst rel {worst:.2e}); \
         0.9 i_c0 gives {mhz:.4} MHz"
    );
}

#[test]
fn zz_weight_is_exactly_one_thirtieth_at_five_levels() {
    let p = DeviceParams::default();
    assert_eq!(p.n_a, 5.0);
    assert_eq!(p.n_b, 5.0);
    assert_eq!(p.zz_weight(), 1.0 / 30.0);
    println!("PASS: sigma-z sigma-z weight = 1/30 exactly with five levels per qubit");
}

#[test]
fn spectroscopy_splitting_tracks_configured_coupling() {
    let fitted = |params: &DeviceParams, i_cb: f64| -> f64 {
        let delta = linspace(-60e6, 60e6, 81);
        let probe = linspace(-80e6, 80e6, 81);
        let run =
            run_spectroscopy(i_cb, TWO_PI * 1.5e6, &delta, &probe, params, &opts()).unwrap();
        run.crossing.unwrap().omega_c / 1e6
    };
    let p = DeviceParams::default();
    let mut report = String::new();
    for target in [11.0, 17.0, 27.0, 40.0] {
        let got = fitted(&p, bias_for_mhz(&p, -target));
        let tol = (0.03 * target).max(0.5);
        assert!(
            (got - target).abs() <= tol,
            "configured {target} MHz fitted {got} MHz, tol {tol}"
        );
        report.push_str(&format!("{got:.2}/{target} "));
    }
    let cal = DeviceParams::calibrated();
    let off = match device::zero_coupling_bias(&cal).unwrap() {
        ZeroCoupling::Bias(b) => b,
        other => panic!("calibrated device must reach zero coupling, got {other:?}"),
    };
    let zero = fitted(&cal, off);
    assert!(zero <= 1.5, "zero-coupling splitting {zero} MHz exceeds 1.5");
    println!(
        "PASS: fitted splittings (MHz, fitted/configured) {report}within max(0.5 MHz, 3%); \
         {zero:.3} MHz at configured zero (<= 1.5)"
    );
}

#[test]
fn chevron_frequency_matches_eigen_splitting() {
    let p = DeviceParams::default();
    let delta = linspace(-100e6, 100e6, 21);
    let t = linspace(0.0, 300e-9, 121);
    let mut worst = 0.0f64;
    for target in [11.0, 27.0, 45.0] {
        let run =
            run_swap_chevron(bias_for_mhz(&p, -target), &delta, &t, &p, &opts()).unwrap();
        for row in &run.rows {
            let fit = row.fit.as_ref().unwrap();
            let rel = (fit.frequency - row.expected).abs() / row.expected;
            assert!(
                rel <= 0.02,
                "coupling {target} MHz, delta {} Hz: rel err {rel}",
                row.delta
            );
            worst = worst.max(rel);
        }
    }
    println!(
        "PASS: chevron frequencies match sqrt(delta^2 + omega_c^2) within 2% \
         (worst rel {worst:.2e}) for 11/27/45 MHz couplings"
    );
}

#[test]
fn on_off_ratio_spans_one_hundred_to_below_tenth_megahertz() {
    let cal = DeviceParams::calibrated();
    let off = match device::zero_coupling_bias(&cal).unwrap() {
        ZeroCoupling::Bias(b) => b,
        other => panic!("calibrated device must reach zero coupling, got {other:?}"),
    };
    let residual = device::coupling_strength(&cal, off).unwrap().abs();
    let t = linspace(0.0, 500e-9, 101);
    let run = run_min_coupling_study(
        &[residual, TWO_PI * 0.1e6],
        350e-9,
        &t,
        1000,
        4.0,
        &cal,
        &opts(),
    )
    .unwrap();
    let f_off = run.verdicts[0].f_ratio;
    let f_tenth = run.verdicts[1].f_ratio;
    assert!(
        !run.verdicts[0].resolvable,
        "off-state residual must not be resolvable, F = {f_off}"
    );
    assert!(
        f_off <= f_tenth,
        "off-state F {f_off} must not exceed the 0.1 MHz reference F {f_tenth}"
    );

    let on_bias = bias_for_mhz(&cal, -100.0);
    let curve = run_coupling_curve(&[on_bias], 121, &cal, &opts()).unwrap();
    let f_on = curve.rows[0].fit.as_ref().unwrap().frequency / 1e6;
    assert!(
        (f_on - 100.0).abs() <= 2.0,
        "on-state fitted {f_on} MHz, want 100 +- 2"
    );
    println!(
        "PASS: off state F {f_off:.2} indistinguishable from <= 0.1 MHz (F {f_tenth:.2}); \
         on state fits {f_on:.3} MHz (100 +- 2)"
    );
}

#[test]
fn faint_couplings_resolve_down_to_the_boundary() {
    let p = DeviceParams::default();
    let t = linspace(0.0, 500e-9, 101);
    let list = [TWO_PI * 0.5e6, TWO_PI * 0.1e6];
    let mut printed = Vec::new();
    // Same verdicts at the default step and at a 2x finer reference step.
    for dt in [0.05e-9, 0.025e-9] {
        let o = SimOptions { dt, ..opts() };
        let run = run_min_coupling_study(&list, 350e-9, &t, 1000, 4.0, &p, &o).unwrap();
        let f_half = run.verdicts[0].f_ratio;
        let f_tenth = run.verdicts[1].f_ratio;
        assert!(
            run.verdicts[0].resolvable && f_half >= 4.0,
            "0.5 MHz must be resolvable at dt {dt}, F = {f_half}"
        );
        assert!(
            (0.4..=40.0).contains(&f_tenth),
            "0.1 MHz must sit at the resolvability boundary at dt {dt}, F = {f_tenth}"
        );
        printed.push(format!("dt {:.3} ns: F(0.5) {f_half:.1}, F(0.1) {f_tenth:.2}", dt / 1e-9));
    }
    println!(
        "PASS: 0.5 MHz resolvable, 0.1 MHz at the boundary ({})",
        printed.join("; ")
    );
}

#[test]
fn crosstalk_suppressed_at_zero_coupling() {
    let cal = DeviceParams::calibrated();
    let off = match device::zero_coupling_bias(&cal).unwrap() {
        ZeroCoupling::Bias(b) => b,
        other => panic!("calibrated device must reach zero coupling, got {other:?}"),
    };
    let biases = [off, bias_for_mhz(&cal, -17.0)];
    let t = linspace(0.0, 200e-9, 81);
    let run = run_crosstalk_scan(&biases, &t, TWO_PI * 20e6, &cal, &opts()).unwrap();
    let ratio = |k: usize| run.points[k].ratio.as_ref().unwrap().ratio;
    for k in [0, 1] {
        assert!(ratio(k) < 0.01, "zero-coupling ratio {} too large", ratio(k));
    }
    for k in [2, 3] {
        assert!(ratio(k) > 0.0, "17 MHz ratio must be positive");
        assert!(
            ratio(k) >= 5.0 * ratio(k - 2),
            "17 MHz ratio {} not >= 5x zero-coupling {}",
            ratio(k),
            ratio(k - 2)
        );
    }
    println!(
        "PASS: crosstalk ratio at zero coupling {:.1e}/{:.1e} (< 0.01 both driven choices); \
         at 17 MHz {:.2e}/{:.2e} (>= 5x)",
        ratio(0),
        ratio(1),
        ratio(2),
        ratio(3)
    );
}

#[test]
fn flux_branch_structure_matches_beta_ten() {
    // Loop constants quoted alongside the reset recipe: i_c0 = 1.6 uA,
    // total loop inductance 4.2 nH.
    let supp = DeviceParams {
        i_c0: 1.6e-6,
        l_s: 4.2e-9 - 390e-12 - 750e-12,
        ..DeviceParams::default()
    };
    let beta = hysteresis::beta(&supp);
    assert!(
        ((beta - 10.0) / 10.0).abs() <= 0.05,
        "beta {beta} not within 5% of 10"
    );

    let zero = hysteresis::enumerate_branches(&supp, 0.0);
    let stable_at_zero = zero.iter().filter(|b| b.stable).count();
    assert_eq!(stable_at_zero, 3, "stable branches at zero bias");

    let mut ids = std::collections::BTreeSet::new();
    for bias in linspace(-2.1e-6, 2.1e-6, 85) {
        let mut points = hysteresis::enumerate_branches(&supp, bias);
        points.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        for pair in points.windows(2) {
            assert_ne!(
                pair[0].stable, pair[1].stable,
                "stable and unstable roots must alternate at bias {bias}"
            );
        }
        ids.extend(points.iter().filter(|p| p.stable).map(|p| p.branch_id));
    }
    assert_eq!(
        ids.len(),
        5,
        "distinct stable branch ids across the window: {ids:?}"
    );
    println!(
        "PASS: beta {beta:.3} within 5% of 10; {stable_at_zero} stable branches at zero bias; \
         {} distinct stable ids {ids:?}; roots alternate",
        ids.len()
    );
}

#[test]
fn reset_residual_matches_quoted_error() {
    let p = DeviceParams::default();
    let out = hysteresis::simulate_reset(&p, &ResetConfig::standard(&p), &[(1, 1.0)]).unwrap();
    let ratio = out.residual_error / 1.5e-4;
    assert!(
        (1.0 / 1.05..=1.05).contains(&ratio),
        "residual {} vs 1.5e-4, ratio {ratio}",
        out.residual_error
    );
    println!(
        "PASS: 30-cycle reset residual {:.4e} within factor 1.05 of 1.5e-4",
        out.residual_error
    );
}

#[test]
fn integrator_conserves_invariants_and_converges() {
    // Time-varying drive with exchange on, so all Hamiltonian terms move.
    let source = |t: f64| ControlSnapshot {
        rabi_a: TWO_PI * 10e6 * (TWO_PI * t / 1e-6).sin(),
        detune_b: TWO_PI * 5e6,
        omega_c: -TWO_PI * 20e6,
        ..ControlSnapshot::zero()
    };
    let start = TwoQubitState::basis(true, false);

    let no_decay = DeviceParams {
        t1_a: f64::INFINITY,
        t1_b: f64::INFINITY,
        ..DeviceParams::default()
    };
    let end = Propagator::new(&no_decay, 0.05e-9, true)
        .unwrap()
        .propagate(&start, &source, 0.0, 1e-6)
        .unwrap();
    let trace_drift = (end.trace() - 1.0).abs();
    let purity_drift = (end.purity() - start.purity()).abs();
    assert!(trace_drift <= 1e-9, "trace drift {trace_drift} over 1 us");
    assert!(purity_drift <= 1e-8, "purity drift {purity_drift} without dissipation");

    let p = DeviceParams::default();
    let end_decay = Propagator::new(&p, 0.05e-9, true)
        .unwrap()
        .propagate(&start, &source, 0.0, 1e-6)
        .unwrap();
    let trace_drift_decay = (end_decay.trace() - 1.0).abs();
    assert!(trace_drift_decay <= 1e-9, "trace drift {trace_drift_decay} with decay");

    let idle = |_t: f64| ControlSnapshot::zero();
    let end_t1 = Propagator::new(&p, 0.05e-9, true)
        .unwrap()
        .propagate(&start, &idle, 0.0, p.t1_a)
        .unwrap();
    let p_exc = end_t1.probabilities()[2];
    let decay_err = (p_exc - (-1.0f64).exp()).abs();
    assert!(decay_err <= 1e-6, "P(excited) at t = T1 is {p_exc}, err {decay_err}");

    let i_cb_on = bias_for_mhz(&p, -40.0);
    let seq = sequences::build_swap_sequence(0.0, i_cb_on, 50e-9, &p).unwrap();
    let probs_at = |dt: f64| {
        let sampler = sequences::sample(&seq, &p, dt).unwrap();
        Propagator::new(&p, dt, true)
            .unwrap()
            .propagate(&TwoQubitState::ground(), &sampler, 0.0, seq.measurement_time)
            .unwrap()
            .probabilities()
    };
    let coarse = probs_at(2.5e-12);
    let fine = probs_at(1.25e-12);
    let halving = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(halving <= 1e-6, "dt-halving probability change {halving}");

    println!(
        "PASS: trace drift {trace_drift:.1e}/us (no decay), {trace_drift_decay:.1e}/us (decay); \
         purity drift {purity_drift:.1e}; e^-1 decay error {decay_err:.1e}; \
         dt-halving change {halving:.1e}"
    );
}

#[test]
fn effective_inductance_drops_four_percent_at_six_gigahertz() {
    let p = DeviceParams::default();
    let l_dc = device::effective_inductance(&p, 0.0, 0.0).unwrap();
    let l_6ghz = device::effective_inductance(&p, 0.0, TWO_PI * 6e9).unwrap();
    let reduction = 1.0 - l_6ghz / l_dc;
    assert!(
        (reduction - 0.04).abs() <= 1e-12,
        "reduction {reduction}, want 0.04 exactly"
    );
    println!(
        "PASS: effective coupler inductance falls {:.4}% from dc to 6 GHz",
        reduction * 100.0
    );
}

#[test]
fn compensation_keeps_qubit_frequencies_flat() {
    let p = DeviceParams::default();
    // An arbitrary coupler waveform: ramp, flat window, gaussian dip, step.
    let coupler = Channel::new(
        ChannelId::Coupler,
        0.2e-6,
        vec![
            Segment::ramp(10e-9, 20e-9, 0.9e-6),
            Segment::flat(40e-9, 60e-9, 1.3e-6, 5e-9),
            Segment::gaussian(110e-9, 20e-9, -0.5e-6, 0.0),
            Segment::constant(140e-9, 30e-9, 0.6e-6),
        ],
    )
    .unwrap();
    let comp = sequences::compensation_offsets(&coupler, &p);
    let seq = PulseSequence::new(
        Channel::new(ChannelId::ZA, comp.initial_level, comp.z_a.clone()).unwrap(),
        Channel::new(ChannelId::ZB, comp.initial_level, comp.z_b.clone()).unwrap(),
        Channel::idle(ChannelId::UwA, 0.0),
        Channel::idle(ChannelId::UwB, 0.0),
        coupler,
        180e-9,
        180e-9,
        0.0,
    )
    .unwrap();
    let sampler = sequences::sample(&seq, &p, 0.05e-9).unwrap();
    let first = sampler.at(0.0);
    let mut worst = 0.0f64;
    for k in 0..=7200 {
        let t = k as f64 * 0.025e-9;
        let snap = sampler.at(t);
        worst = worst
            .max((snap.detune_a - first.detune_a).abs())
            .max((snap.detune_b - first.detune_b).abs());
    }
    let rel = worst / (TWO_PI * p.f10_a);
    assert!(rel <= 1e-9, "qubit frequency wanders {rel:.2e} relative");
    println!(
        "PASS: compensated qubit frequencies constant to {rel:.1e} relative \
         across an arbitrary coupler waveform"
    );
}
