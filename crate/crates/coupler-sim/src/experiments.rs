//! Gridded virtual experiments over the two-qubit + coupler model, plus the
//! fits that reduce raw probability grids to the published-figure quantities.
//!
//! Grid points are independent. Rows are evaluated in parallel and assembled
//! in axis order, so results are identical for a fixed (config, seed) no
//! matter how the thread pool schedules them. Shot sampling derives one
//! seed per grid point from the run seed and the point's linear index.

use coupler_core::device::{self, DeviceError, DeviceParams, TWO_PI};
use coupler_core::dynamics::{
    self, ControlSnapshot, ControlSource, DynamicsError, Propagator, TwoQubitState,
};
use coupler_core::fitting::{
    self, CrossingFit, CrosstalkRatio, DampedSineFit, DecayFit, FitError, Peak,
};
use coupler_core::hysteresis::{self, BranchPoint};
use coupler_core::sequences::{self, SequenceError};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug)]
pub enum ExperimentError {
    Grid { reason: &'static str },
    Device(DeviceError),
    Sequence(SequenceError),
    Dynamics(DynamicsError),
    Fit(FitError),
    Invariant { reason: String },
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::Grid { reason } => write!(f, "bad experiment grid: {reason}"),
            ExperimentError::Device(e) => write!(f, "device model: {e}"),
            ExperimentError::Sequence(e) => write!(f, "pulse sequence: {e}"),
            ExperimentError::Dynamics(e) => write!(f, "time evolution: {e}"),
            ExperimentError::Fit(e) => write!(f, "fit: {e}"),
            ExperimentError::Invariant { reason } => write!(f, "result invariant: {reason}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<DeviceError> for ExperimentError {
    fn from(e: DeviceError) -> Self {
        ExperimentError::Device(e)
    }
}
impl From<SequenceError> for ExperimentError {
    fn from(e: SequenceError) -> Self {
        ExperimentError::Sequence(e)
    }
}
impl From<DynamicsError> for ExperimentError {
    fn from(e: DynamicsError) -> Self {
        ExperimentError::Dynamics(e)
    }
}
impl From<FitError> for ExperimentError {
    fn from(e: FitError) -> Self {
        ExperimentError::Fit(e)
    }
}

/// Knobs shared by every experiment run.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Integrator step (s).
    pub dt: f64,
    pub rwa: bool,
    /// Shots per grid point; None reports exact ensemble probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Content hash of the resolved run config, echoed into results.
    pub fingerprint: String,
}

/// One swept variable. `values` are in the display unit named by `unit`;
/// CSV columns are "{name}_{unit}".
#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub name: &'static str,
    pub unit: &'static str,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn column(&self) -> String {
        format!("{}_{}", self.name, self.unit)
    }
}

/// Probability grids over the axes (row-major, first axis slowest), with the
/// derived single-qubit marginals.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub axes: Vec<Axis>,
    pub p00: Vec<f64>,
    pub p01: Vec<f64>,
    pub p10: Vec<f64>,
    pub p11: Vec<f64>,
    /// P(B excited) = p01 + p11.
    pub p_xi: Vec<f64>,
    /// P(A excited) = p10 + p11.
    pub p_ix: Vec<f64>,
    pub fingerprint: String,
    pub seed: u64,
}

impl ExperimentResult {
    fn from_points(
        axes: Vec<Axis>,
        points: Vec<[f64; 4]>,
        opts: &SimOptions,
    ) -> Result<Self, ExperimentError> {
        let expect: usize = axes.iter().map(|a| a.values.len()).product();
        if points.len() != expect {
            return Err(ExperimentError::Invariant {
                reason: format!("grid has {} points, axes imply {}", points.len(), expect),
            });
        }
        let mut out = ExperimentResult {
            axes,
            p00: Vec::with_capacity(points.len()),
            p01: Vec::with_capacity(points.len()),
            p10: Vec::with_capacity(points.len()),
            p11: Vec::with_capacity(points.len()),
            p_xi: Vec::with_capacity(points.len()),
            p_ix: Vec::with_capacity(points.len()),
            fingerprint: opts.fingerprint.clone(),
            seed: opts.seed,
        };
        for (k, p) in points.iter().enumerate() {
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(ExperimentError::Invariant {
                    reason: format!("probabilities at point {k} sum to {sum}"),
                });
            }
            if p.iter().any(|&v| !(-1e-7..=1.0 + 1e-7).contains(&v)) {
                return Err(ExperimentError::Invariant {
                    reason: format!("probability outside [0, 1] at point {k}: {p:?}"),
                });
            }
            let q: Vec<f64> = p.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            out.p00.push(q[0]);
            out.p01.push(q[1]);
            out.p10.push(q[2]);
            out.p11.push(q[3]);
            out.p_xi.push(q[1] + q[3]);
            out.p_ix.push(q[2] + q[3]);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.p00.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p00.is_empty()
    }

    /// Row `r` of the innermost axis from one probability grid.
    pub fn row<'a>(&self, grid: &'a [f64], r: usize) -> &'a [f64] {
        let w = self
            .axes
            .last()
            .map(|a| a.values.len())
            .unwrap_or(grid.len());
        &grid[r * w..(r + 1) * w]
    }
}

// ---------------------------------------------------------------------------
// Per-point seeding and shot sampling
// ---------------------------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One decorrelated stream per grid point, a function of run seed and the
/// point's linear index only (never of evaluation order).
fn point_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// Exact probabilities, or multinomial frequencies from `shots` draws.
fn observe(probs: [f64; 4], shots: Option<u64>, seed: u64, index: u64) -> [f64; 4] {
    match shots {
        None => probs,
        Some(n) => {
            let counts = dynamics::sample_shots(&probs, n, point_seed(seed, index));
            let inv = 1.0 / n as f64;
            [
                counts[0] as f64 * inv,
                counts[1] as f64 * inv,
                counts[2] as f64 * inv,
                counts[3] as f64 * inv,
            ]
        }
    }
}

/// Frequency observable for swap traces: the population difference
/// normalized by the remaining excitation number. Both single-excitation
/// populations share one T1 envelope, so dividing it out leaves exactly a
/// constant offset plus a cosine at the swap frequency, which is the model
/// the damped-sine fitter assumes. Fitting p01 directly would ride on a
/// decaying offset and bias the frequency low by O(1/(T1 omega)).
fn swap_difference(p01: &[f64], p10: &[f64], p11: &[f64]) -> Vec<f64> {
    p01.iter()
        .zip(p10)
        .zip(p11)
        .map(|((&a, &b), &c)| {
            let n = (a + b + 2.0 * c).max(1e-9);
            (b - a) / n
        })
        .collect()
}

/// Evaluate rows in parallel, then surface the first error in row order so
/// failures are as deterministic as successes.
fn parallel_rows<F>(n_rows: usize, f: F) -> Result<Vec<Vec<[f64; 4]>>, ExperimentError>
where
    F: Fn(usize) -> Result<Vec<[f64; 4]>, ExperimentError> + Sync,
{
    let rows: Vec<Result<Vec<[f64; 4]>, ExperimentError>> =
        (0..n_rows).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(n_rows);
    for row in rows {
        out.push(row?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Spectroscopy
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SpectroscopyRun {
    pub result: ExperimentResult,
    /// Peaks found on the probe axis (Hz) per detuning row.
    pub peaks: Vec<(f64, Vec<Peak>)>,
    /// Avoided-crossing fit over all rows; `omega_c` is the fitted minimum
    /// branch separation in Hz.
    pub crossing: Result<CrossingFit, FitError>,
}

/// Continuous two-tone spectroscopy on a (qubit detuning) x (probe offset)
/// grid at a fixed coupler bias. The total excited-state response per row is
/// peak-extracted and the branch positions are fitted to a two-branch
/// hyperbola whose minimum separation estimates |Omega_c|/2pi.
pub fn run_spectroscopy(
    i_cb: f64,
    probe_amp: f64,
    delta_grid: &[f64],
    probe_grid: &[f64],
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<SpectroscopyRun, ExperimentError> {
    if delta_grid.is_empty() || probe_grid.is_empty() {
        return Err(ExperimentError::Grid {
            reason: "spectroscopy grids must be non-empty",
        });
    }
    let n_probe = probe_grid.len();
    let rows = parallel_rows(delta_grid.len(), |r| {
        let delta = delta_grid[r];
        let mut prop = Propagator::new(params, opts.dt, opts.rwa)?;
        let mut row = Vec::with_capacity(n_probe);
        for (c, &f_probe) in probe_grid.iter().enumerate() {
            let seq =
                sequences::build_spectroscopy_sequence(delta, f_probe, probe_amp, i_cb, params)?;
            let sampler = sequences::sample(&seq, params, opts.dt)?;
            let state = prop.propagate(
                &TwoQubitState::ground(),
                &sampler,
                0.0,
                seq.measurement_time,
            )?;
            row.push(observe(
                state.probabilities(),
                opts.shots,
                opts.seed,
                (r * n_probe + c) as u64,
            ));
        }
        Ok(row)
    })?;

    let axes = vec![
        Axis {
            name: "delta",
            unit: "MHz",
            values: delta_grid.iter().map(|d| d / 1e6).collect(),
        },
        Axis {
            name: "probe",
            unit: "MHz",
            values: probe_grid.iter().map(|f| f / 1e6).collect(),
        },
    ];
    let result =
        ExperimentResult::from_points(axes, rows.into_iter().flatten().collect(), opts)?;

    let mut peaks = Vec::with_capacity(delta_grid.len());
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (r, &delta) in delta_grid.iter().enumerate() {
        let response: Vec<f64> = result
            .row(&result.p_ix, r)
            .iter()
            .zip(result.row(&result.p_xi, r))
            .map(|(a, b)| a + b)
            .collect();
        let found = match fitting::extract_peaks(probe_grid, &response) {
            Ok(p) => p,
            Err(FitError::NoPeak) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        for p in &found {
            // Both dressed branches ride on the mean line delta/2 (qubit A
            // fixed, qubit B at delta); subtracting it symmetrises the data
            // so the two-parameter hyperbola applies.
            points.push((delta, p.frequency - 0.5 * delta));
        }
        peaks.push((delta, found));
    }
    let crossing = fitting::fit_avoided_crossing(&points);
    Ok(SpectroscopyRun {
        result,
        peaks,
        crossing,
    })
}

// ---------------------------------------------------------------------------
// Measurement crosstalk
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct CrosstalkPoint {
    /// Coupler bias (A).
    pub i_cb: f64,
    /// Configured coupling at this bias (rad/s).
    pub omega_c: f64,
    pub drive_a: bool,
    pub ratio: Result<CrosstalkRatio, FitError>,
}

#[derive(Debug)]
pub struct CrosstalkRun {
    pub result: ExperimentResult,
    /// One amplitude ratio per (bias, driven qubit).
    pub points: Vec<CrosstalkPoint>,
}

/// Resonant Rabi drive on one qubit per trace; the undriven qubit's response
/// amplitude over the driven one's measures how much excitation leaks across
/// the coupler at each bias.
pub fn run_crosstalk_scan(
    i_cb_grid: &[f64],
    t_rabi_grid: &[f64],
    rabi_amp: f64,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CrosstalkRun, ExperimentError> {
    if i_cb_grid.is_empty() || t_rabi_grid.is_empty() {
        return Err(ExperimentError::Grid {
            reason: "crosstalk grids must be non-empty",
        });
    }
    let n_t = t_rabi_grid.len();
    let rows = parallel_rows(i_cb_grid.len() * 2, |row_idx| {
        let i_cb = i_cb_grid[row_idx / 2];
        let drive_a = row_idx % 2 == 0;
        let mut prop = Propagator::new(params, opts.dt, opts.rwa)?;
        let mut row = Vec::with_capacity(n_t);
        for (k, &t_rabi) in t_rabi_grid.iter().enumerate() {
            let seq = sequences::build_crosstalk_sequence(drive_a, t_rabi, i_cb, rabi_amp, params)?;
            let sampler = sequences::sample(&seq, params, opts.dt)?;
            let state = prop.propagate(
                &TwoQubitState::ground(),
                &sampler,
                0.0,
                seq.measurement_time,
            )?;
            row.push(observe(
                state.probabilities(),
                opts.shots,
                opts.seed,
                (row_idx * n_t + k) as u64,
            ));
        }
        Ok(row)
    })?;

    let axes = vec![
        Axis {
            name: "i_cb",
            unit: "uA",
            values: i_cb_grid.iter().map(|b| b / 1e-6).collect(),
        },
        Axis {
            name: "driven",
            unit: "qubit",
            values: vec![0.0, 1.0],
        },
        Axis {
            name: "t_rabi",
            unit: "ns",
            values: t_rabi_grid.iter().map(|t| t / 1e-9).collect(),
        },
    ];
    let result =
        ExperimentResult::from_points(axes, rows.into_iter().flatten().collect(), opts)?;

    let mut points = Vec::with_capacity(i_cb_grid.len() * 2);
    for (b, &i_cb) in i_cb_grid.iter().enumerate() {
        let omega_c = device::coupling_strength(params, i_cb)?;
        for drive_a in [true, false] {
            let r = b * 2 + usize::from(!drive_a);
            let (driven, undriven) = if drive_a {
                (result.row(&result.p_ix, r), result.row(&result.p_xi, r))
            } else {
                (result.row(&result.p_xi, r), result.row(&result.p_ix, r))
            };
            points.push(CrosstalkPoint {
                i_cb,
                omega_c,
                drive_a,
                ratio: fitting::crosstalk_ratio(t_rabi_grid, driven, undriven),
            });
        }
    }
    Ok(CrosstalkRun { result, points })
}

// ---------------------------------------------------------------------------
// Swap chevron
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ChevronRowFit {
    /// Qubit-qubit detuning (Hz).
    pub delta: f64,
    /// Eigen-splitting sqrt(delta^2 + (Omega_c/2pi)^2) (Hz).
    pub expected: f64,
    pub fit: Result<DampedSineFit, FitError>,
}

#[derive(Debug)]
pub struct ChevronRun {
    pub result: ExperimentResult,
    /// Coupling at the swap plateau bias (rad/s).
    pub omega_c_on: f64,
    pub rows: Vec<ChevronRowFit>,
}

/// Pi pulse on qubit A, then a (detuning, plateau length) grid of coupler
/// swap windows. The per-row oscillation frequency of P_01 is fitted and
/// compared against the eigen-splitting.
pub fn run_swap_chevron(
    i_cb_on: f64,
    delta_grid: &[f64],
    t_swap_grid: &[f64],
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<ChevronRun, ExperimentError> {
    if delta_grid.is_empty() || t_swap_grid.is_empty() {
        return Err(ExperimentError::Grid {
            reason: "chevron grids must be non-empty",
        });
    }
    let omega_c_on = device::coupling_strength(params, i_cb_on)?;
    let n_t = t_swap_grid.len();
    let rows = parallel_rows(delta_grid.len(), |r| {
        let mut prop = Propagator::new(params, opts.dt, opts.rwa)?;
        let mut row = Vec::with_capacity(n_t);
        for (k, &t_swap) in t_swap_grid.iter().enumerate() {
            let seq = sequences::build_swap_sequence(delta_grid[r], i_cb_on, t_swap, params)?;
            let sampler = sequences::sample(&seq, params, opts.dt)?;
            let state = prop.propagate(
                &TwoQubitState::ground(),
                &sampler,
                0.0,
                seq.measurement_time,
            )?;
            row.push(observe(
                state.probabilities(),
                opts.shots,
                opts.seed,
                (r * n_t + k) as u64,
            ));
        }
        Ok(row)
    })?;

    let axes = vec![
        Axis {
            name: "delta",
            unit: "MHz",
            values: delta_grid.iter().map(|d| d / 1e6).collect(),
        },
        Axis {
            name: "t_swap",
            unit: "ns",
            values: t_swap_grid.iter().map(|t| t / 1e-9).collect(),
        },
    ];
    let result =
        ExperimentResult::from_points(axes, rows.into_iter().flatten().collect(), opts)?;

    let f_c = omega_c_on / TWO_PI;
    let fits = delta_grid
        .iter()
        .enumerate()
        .map(|(r, &delta)| {
            let y = swap_difference(
                result.row(&result.p01, r),
                result.row(&result.p10, r),
                result.row(&result.p11, r),
            );
            ChevronRowFit {
                delta,
                expected: (delta * delta + f_c * f_c).sqrt(),
                fit: fitting::fit_damped_sine(t_swap_grid, &y, false),
            }
        })
        .collect();
    Ok(ChevronRun {
        result,
        omega_c_on,
        rows: fits,
    })
}

// ---------------------------------------------------------------------------
// Coupling curve
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct CurveRow {
    /// Coupler bias (A).
    pub i_cb: f64,
    /// Coupling from the junction-inductance formula (rad/s, signed).
    pub omega_c_theory: f64,
    /// Damped-sine fit of the on-resonance swap trace (frequency in Hz).
    pub fit: Result<DampedSineFit, FitError>,
    /// True when t1 * |Omega_c| < 2 pi: less than one swap per lifetime, so
    /// the fitted value is decay-limited rather than model-limited.
    pub decay_limited: bool,
    /// Trace time values (s); span adapts to the expected period.
    pub t_grid: Vec<f64>,
}

#[derive(Debug)]
pub struct CouplingCurveRun {
    pub rows: Vec<CurveRow>,
}

/// Theory vs simulation for the coupling magnitude across a bias list: each
/// bias gets an on-resonance swap trace whose fitted frequency estimates
/// |Omega_c|/2pi.
pub fn run_coupling_curve(
    i_cb_grid: &[f64],
    n_t: usize,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CouplingCurveRun, ExperimentError> {
    if i_cb_grid.is_empty() {
        return Err(ExperimentError::Grid {
            reason: "coupling-curve bias list must be non-empty",
        });
    }
    if n_t < 16 {
        return Err(ExperimentError::Grid {
            reason: "coupling-curve traces need at least 16 samples",
        });
    }
    let worklist: Vec<Result<CurveRow, ExperimentError>> = (0..i_cb_grid.len())
        .into_par_iter()
        .map(|r| {
            let i_cb = i_cb_grid[r];
            let theory = device::coupling_strength(params, i_cb)?;
            let f_th = theory.abs() / TWO_PI;
            // 2.5 expected periods, at least 300 ns for slow swaps, capped
            // at 900 ns where T1 has erased the signal anyway. Sample times
            // snap to whole integrator steps so the fit sees the exact times
            // the propagator realises.
            let span = (2.5 / f_th).clamp(300e-9, 900e-9);
            let steps = (span / ((n_t - 1) as f64 * opts.dt)).ceil().max(1.0);
            let spacing = steps * opts.dt;
            let t_grid: Vec<f64> = (0..n_t).map(|k| k as f64 * spacing).collect();
            let mut prop = Propagator::new(params, opts.dt, opts.rwa)?;
            let mut p01 = Vec::with_capacity(n_t);
            let mut p10 = Vec::with_capacity(n_t);
            let mut p11 = Vec::with_capacity(n_t);
            for (k, &t_swap) in t_grid.iter().enumerate() {
                let seq = sequences::build_swap_sequence(0.0, i_cb, t_swap, params)?;
                let sampler = sequences::sample(&seq, params, opts.dt)?;
                let state = prop.propagate(
                    &TwoQubitState::ground(),
                    &sampler,
                    0.0,
                    seq.measurement_time,
                )?;
                let obs = observe(
                    state.probabilities(),
                    opts.shots,
                    opts.seed,
                    (r * n_t + k) as u64,
                );
                p01.push(obs[1]);
                p10.push(obs[2]);
                p11.push(obs[3]);
            }
            let y = swap_difference(&p01, &p10, &p11);
            let t1 = params.t1_a.min(params.t1_b);
            Ok(CurveRow {
                i_cb,
                omega_c_theory: theory,
                fit: fitting::fit_damped_sine(&t_grid, &y, true),
                decay_limited: t1.is_finite() && t1 * theory.abs() < TWO_PI,
                t_grid,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(i_cb_grid.len());
    for row in worklist {
        rows.push(row?);
    }
    Ok(CouplingCurveRun { rows })
}

// ---------------------------------------------------------------------------
// Minimum resolvable coupling
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct MinCouplingVerdict {
    /// Injected coupling magnitude (rad/s).
    pub omega_c: f64,
    pub sine: Result<DampedSineFit, FitError>,
    pub decay: Result<DecayFit, FitError>,
    /// Nested-model F statistic of the damped sine against pure decay.
    pub f_ratio: f64,
    pub resolvable: bool,
}

#[derive(Debug)]
pub struct MinCouplingRun {
    pub result: ExperimentResult,
    pub verdicts: Vec<MinCouplingVerdict>,
    pub threshold: f64,
    pub shots: u64,
}

struct ConstantExchange {
    snap: ControlSnapshot,
}

impl ControlSource for ConstantExchange {
    fn at(&self, _t: f64) -> ControlSnapshot {
        self.snap
    }

    fn constant_until(&self, _t: f64) -> f64 {
        f64::INFINITY
    }
}

/// Can a given tiny coupling be told apart from bare T1 decay? The state
/// starts in |10>, the qubits sit on resonance, the exchange is switched on
/// at the injected strength, and each sampled P(B excited) trace is fitted
/// both as a damped sine and as pure decay. Preparation pulses are excluded
/// so the verdict reflects only the coupling's visibility against decay and
/// sampling noise; the F statistic uses the nested-model form
/// ((rss_decay - rss_sine)/2) / (rss_sine/(n - 5)).
pub fn run_min_coupling_study(
    omega_c_list: &[f64],
    t1: f64,
    t_grid: &[f64],
    shots: u64,
    threshold: f64,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<MinCouplingRun, ExperimentError> {
    if omega_c_list.is_empty() || t_grid.len() < 8 {
        return Err(ExperimentError::Grid {
            reason: "need couplings and at least 8 trace samples",
        });
    }
    if shots == 0 {
        return Err(ExperimentError::Grid {
            reason: "resolvability verdict needs at least 1 shot per point",
        });
    }
    let study_params = DeviceParams {
        t1_a: t1,
        t1_b: t1,
        ..*params
    };
    let n_t = t_grid.len();
    let rows = parallel_rows(omega_c_list.len(), |j| {
        let mut prop = Propagator::new(&study_params, opts.dt, opts.rwa)?;
        let source = ConstantExchange {
            snap: ControlSnapshot {
                // Sign convention of this circuit; the swap frequency only
                // sees the magnitude.
                omega_c: -omega_c_list[j].abs(),
                ..ControlSnapshot::zero()
            },
        };
        let mut raw = Vec::with_capacity(n_t);
        prop.propagate_recording(
            &TwoQubitState::basis(true, false),
            &source,
            0.0,
            t_grid,
            |_t, state| raw.push(state.probabilities()),
        )?;
        Ok(raw
            .into_iter()
            .enumerate()
            .map(|(k, p)| observe(p, Some(shots), opts.seed, (j * n_t + k) as u64))
            .collect())
    })?;

    let axes = vec![
        Axis {
            name: "omega_c",
            unit: "MHz",
            values: omega_c_list.iter().map(|o| o.abs() / TWO_PI / 1e6).collect(),
        },
        Axis {
            name: "t",
            unit: "ns",
            values: t_grid.iter().map(|t| t / 1e-9).collect(),
        },
    ];
    let result =
        ExperimentResult::from_points(axes, rows.into_iter().flatten().collect(), opts)?;

    let verdicts = omega_c_list
        .iter()
        .enumerate()
        .map(|(j, &oc)| {
            let trace = result.row(&result.p_xi, j);
            let sine = fitting::fit_damped_sine(t_grid, trace, true);
            let decay = fitting::fit_exponential_decay(t_grid, trace);
            let n = n_t as f64;
            let f_ratio = match (&sine, &decay) {
                (Ok(s), Ok(d)) => {
                    let rss_s = s.residual_rms * s.residual_rms * n;
                    let rss_d = d.residual_rms * d.residual_rms * n;
                    if rss_s > 0.0 {
                        ((rss_d - rss_s) / 2.0) / (rss_s / (n - 5.0))
                    } else if rss_d > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            };
            MinCouplingVerdict {
                omega_c: oc.abs(),
                sine,
                decay,
                f_ratio,
                resolvable: f_ratio >= threshold,
            }
        })
        .collect();
    Ok(MinCouplingRun {
        result,
        verdicts,
        threshold,
        shots,
    })
}

// ---------------------------------------------------------------------------
// Flux branch map
// ---------------------------------------------------------------------------

/// Branch structure per bias: every root of the flux equation with its
/// stability flag.
pub fn run_branch_map(params: &DeviceParams, bias_grid: &[f64]) -> Vec<(f64, Vec<BranchPoint>)> {
    bias_grid
        .iter()
        .map(|&b| (b, hysteresis::enumerate_branches(params, b)))
        .collect()
}
