//! Two-qubit Lindblad dynamics in a common rotating frame.
//!
//! The density matrix lives on the basis {|00>, |01>, |10>, |11>} with the
//! second label belonging to qubit B. Both qubits share one rotating frame,
//! so microwave drives appear as Rabi envelopes with a fixed phase instead of
//! GHz carriers and the exchange coupling is static; everything left in the
//! Hamiltonian is at the few-hundred-MHz scale. Controls are sampled at step
//! midpoints, each step applies the exact propagator of the frozen Lindblad
//! generator, and equal consecutive steps are batched through a cached matrix
//! exponential plus binary powering so constant stretches cost log(n) work.

use alloc::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::device::DeviceParams;
use crate::math::{
    adj4, eigvals_hermitian4, expm16, inf_norm4, kron22, matvec16, mul4, pow16, super_left,
    super_right, super_sandwich, unvec_rho, vec_rho, zeros16, zeros4, C64, M16, M2, M4, V16, ONE,
    ZERO,
};

/// Default integration step (s); keeps dt x |H| under the 0.25 rad bound up
/// to a 2 pi 400 MHz Hamiltonian scale with margin.
pub const DEFAULT_DT: f64 = 0.05e-9;

/// Instantaneous rotating-frame controls. All rates are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ControlSnapshot {
    /// Qubit detunings from the frame frequency (rad/s).
    pub detune_a: f64,
    pub detune_b: f64,
    /// Drive envelopes (rad/s) and phases (rad).
    pub rabi_a: f64,
    pub phase_a: f64,
    pub rabi_b: f64,
    pub phase_b: f64,
    /// Instantaneous coupling strength Omega_c (rad/s).
    pub omega_c: f64,
}

impl ControlSnapshot {
    pub fn zero() -> Self {
        ControlSnapshot {
            detune_a: 0.0,
            detune_b: 0.0,
            rabi_a: 0.0,
            phase_a: 0.0,
            rabi_b: 0.0,
            phase_b: 0.0,
            omega_c: 0.0,
        }
    }

    fn finite(&self) -> bool {
        self.detune_a.is_finite()
            && self.detune_b.is_finite()
            && self.rabi_a.is_finite()
            && self.phase_a.is_finite()
            && self.rabi_b.is_finite()
            && self.phase_b.is_finite()
            && self.omega_c.is_finite()
    }

    fn key(&self) -> [u64; 7] {
        [
            self.detune_a.to_bits(),
            self.detune_b.to_bits(),
            self.rabi_a.to_bits(),
            self.phase_a.to_bits(),
            self.rabi_b.to_bits(),
            self.phase_b.to_bits(),
            self.omega_c.to_bits(),
        ]
    }
}

/// Time-indexed control supplier for `propagate`.
pub trait ControlSource {
    fn at(&self, t: f64) -> ControlSnapshot;

    /// Earliest time after `t` at which the snapshot may differ from its
    /// value at `t`. Returning `t` promises nothing; samplers that know their
    /// piecewise structure return the end of the current constant span, which
    /// lets the propagator batch the whole span.
    fn constant_until(&self, t: f64) -> f64 {
        t
    }
}

impl<F: Fn(f64) -> ControlSnapshot> ControlSource for F {
    fn at(&self, t: f64) -> ControlSnapshot {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsError {
    BadDt { dt: f64 },
    BadTimeRange { t_start: f64, t_end: f64 },
    /// dt times the Hamiltonian scale (max absolute row sum, an upper bound
    /// on the spectral radius) exceeds 0.25 rad.
    StepTooCoarse { dt: f64, scale: f64 },
    NonFiniteControl { t: f64 },
    BadMeasurementModel { reason: &'static str },
    StateInvariantViolated { reason: &'static str },
}

impl core::fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DynamicsError::BadDt { dt } => write!(f, "step dt = {dt:e} s must be positive"),
            DynamicsError::BadTimeRange { t_start, t_end } => {
                write!(f, "time range [{t_start:e}, {t_end:e}] s is not forward")
            }
            DynamicsError::StepTooCoarse { dt, scale } => write!(
                f,
                "dt = {dt:e} s too coarse for Hamiltonian scale {scale:e} rad/s \
                 (dt x scale > 0.25 rad)"
            ),
            DynamicsError::NonFiniteControl { t } => {
                write!(f, "control snapshot at t = {t:e} s is not finite")
            }
            DynamicsError::BadMeasurementModel { reason } => {
                write!(f, "bad measurement model: {reason}")
            }
            DynamicsError::StateInvariantViolated { reason } => {
                write!(f, "state invariant violated: {reason}")
            }
        }
    }
}

impl core::error::Error for DynamicsError {}

fn eye2() -> M2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

fn sigma_x() -> M2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

fn sigma_y() -> M2 {
    [[ZERO, C64::new(0.0, 1.0)], [C64::new(0.0, -1.0), ZERO]]
}

/// sigma_z with |1> as the excited state: diag(-1, +1).
fn sigma_z() -> M2 {
    [[-ONE, ZERO], [ZERO, ONE]]
}

/// Lowering operator |0><1|.
fn sigma_minus() -> M2 {
    [[ZERO, ONE], [ZERO, ZERO]]
}

/// Raising operator |1><0|.
fn sigma_plus() -> M2 {
    [[ZERO, ZERO], [ONE, ZERO]]
}

fn embed_a(op: &M2) -> M4 {
    kron22(op, &eye2())
}

fn embed_b(op: &M2) -> M4 {
    kron22(&eye2(), op)
}

fn acc4(h: &mut M4, c: f64, op: &M4) {
    if c == 0.0 {
        return;
    }
    for r in 0..4 {
        for k in 0..4 {
            h[r][k] += op[r][k] * c;
        }
    }
}

/// Rotating-frame Hamiltonian (rad/s, hbar = 1):
/// H = (detune_a/2) sz(x)1 + (detune_b/2) 1(x)sz
///   + sum_q (rabi_q/2)(cos phi_q sx + sin phi_q sy)
///   + (omega_c/2) [coupling + zz_weight sz(x)sz]
/// where coupling is sx(x)sx, or its excitation-conserving part
/// s+(x)s- + s-(x)s+ with `rwa` set.
pub fn build_hamiltonian(snap: &ControlSnapshot, params: &DeviceParams, rwa: bool) -> M4 {
    build_hamiltonian_with_weight(snap, params.zz_weight(), rwa)
}

/// Same with the sigma_z sigma_z weight given directly (tests force it to 0).
pub fn build_hamiltonian_with_weight(snap: &ControlSnapshot, zz_weight: f64, rwa: bool) -> M4 {
    let mut h = zeros4();
    acc4(&mut h, 0.5 * snap.detune_a, &embed_a(&sigma_z()));
    acc4(&mut h, 0.5 * snap.detune_b, &embed_b(&sigma_z()));
    acc4(
        &mut h,
        0.5 * snap.rabi_a * libm::cos(snap.phase_a),
        &embed_a(&sigma_x()),
    );
    acc4(
        &mut h,
        0.5 * snap.rabi_a * libm::sin(snap.phase_a),
        &embed_a(&sigma_y()),
    );
    acc4(
        &mut h,
        0.5 * snap.rabi_b * libm::cos(snap.phase_b),
        &embed_b(&sigma_x()),
    );
    acc4(
        &mut h,
        0.5 * snap.rabi_b * libm::sin(snap.phase_b),
        &embed_b(&sigma_y()),
    );
    if snap.omega_c != 0.0 {
        let coupling = if rwa {
            let mut c = mul4(&embed_a(&sigma_plus()), &embed_b(&sigma_minus()));
            let c2 = mul4(&embed_a(&sigma_minus()), &embed_b(&sigma_plus()));
            for r in 0..4 {
                for k in 0..4 {
                    c[r][k] += c2[r][k];
                }
            }
            c
        } else {
            mul4(&embed_a(&sigma_x()), &embed_b(&sigma_x()))
        };
        acc4(&mut h, 0.5 * snap.omega_c, &coupling);
        acc4(
            &mut h,
            0.5 * snap.omega_c * zz_weight,
            &mul4(&embed_a(&sigma_z()), &embed_b(&sigma_z())),
        );
    }
    h
}

/// Density matrix on {|00>,|01>,|10>,|11>}, second label = qubit B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub rho: M4,
}

impl TwoQubitState {
    pub fn ground() -> Self {
        Self::basis(false, false)
    }

    /// Pure computational basis state |ab>.
    pub fn basis(a_excited: bool, b_excited: bool) -> Self {
        let idx = 2 * usize::from(a_excited) + usize::from(b_excited);
        let mut rho = zeros4();
        rho[idx][idx] = ONE;
        TwoQubitState { rho }
    }

    /// Pure state from amplitudes (normalised internally).
    pub fn from_ket(ket: &[C64; 4]) -> Self {
        let norm2: f64 = ket.iter().map(|a| a.norm_sqr()).sum();
        let inv = 1.0 / libm::sqrt(norm2);
        let mut rho = zeros4();
        for r in 0..4 {
            for c in 0..4 {
                rho[r][c] = ket[r] * ket[c].conj() * inv * inv;
            }
        }
        TwoQubitState { rho }
    }

    /// Diagonal populations (P00, P01, P10, P11).
    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.rho[0][0].re,
            self.rho[1][1].re,
            self.rho[2][2].re,
            self.rho[3][3].re,
        ]
    }

    pub fn trace(&self) -> f64 {
        self.rho[0][0].re + self.rho[1][1].re + self.rho[2][2].re + self.rho[3][3].re
    }

    /// Tr(rho^2), real part.
    pub fn purity(&self) -> f64 {
        let sq = mul4(&self.rho, &self.rho);
        sq[0][0].re + sq[1][1].re + sq[2][2].re + sq[3][3].re
    }

    /// max |rho - rho^dagger| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                let d = (self.rho[r][c] - self.rho[c][r].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigvals_hermitian4(&self.rho)[0]
    }

    /// Hermiticity within 1e-10, unit trace within 1e-9, eigenvalues
    /// above -1e-9.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.hermiticity_defect() > 1e-10 {
            return Err(DynamicsError::StateInvariantViolated {
                reason: "density matrix not Hermitian",
            });
        }
        if (self.trace() - 1.0).abs() > 1e-9 {
            return Err(DynamicsError::StateInvariantViolated {
                reason: "trace differs from 1",
            });
        }
        if self.min_eigenvalue() < -1e-9 {
            return Err(DynamicsError::StateInvariantViolated {
                reason: "negative eigenvalue",
            });
        }
        Ok(())
    }
}

/// Readout confusion map from true to reported outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    /// Row-stochastic: confusion[true][reported].
    pub confusion: [[f64; 4]; 4],
}

impl MeasurementModel {
    pub fn identity() -> Self {
        let mut confusion = [[0.0; 4]; 4];
        for k in 0..4 {
            confusion[k][k] = 1.0;
        }
        MeasurementModel { confusion }
    }

    /// Tensor product of independent symmetric single-qubit flip errors.
    pub fn single_qubit_errors(err_a: f64, err_b: f64) -> Self {
        let one_q = |e: f64| [[1.0 - e, e], [e, 1.0 - e]];
        let ma = one_q(err_a);
        let mb = one_q(err_b);
        let mut confusion = [[0.0; 4]; 4];
        for ai in 0..2 {
            for bi in 0..2 {
                for aj in 0..2 {
                    for bj in 0..2 {
                        confusion[2 * ai + bi][2 * aj + bj] = ma[ai][aj] * mb[bi][bj];
                    }
                }
            }
        }
        MeasurementModel { confusion }
    }

    pub fn new(confusion: [[f64; 4]; 4]) -> Result<Self, DynamicsError> {
        for row in &confusion {
            let mut sum = 0.0;
            for &e in row {
                if !(0.0..=1.0).contains(&e) {
                    return Err(DynamicsError::BadMeasurementModel {
                        reason: "entries must lie in [0, 1]",
                    });
                }
                sum += e;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(DynamicsError::BadMeasurementModel {
                    reason: "rows must sum to 1",
                });
            }
        }
        Ok(MeasurementModel { confusion })
    }
}

/// Diagonal of rho pushed through the confusion map: (P00, P01, P10, P11).
pub fn measure_probabilities(state: &TwoQubitState, model: &MeasurementModel) -> [f64; 4] {
    let p = state.probabilities();
    let mut out = [0.0; 4];
    for (i, &pi) in p.iter().enumerate() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += pi * model.confusion[i][j];
        }
    }
    out
}

/// Multinomial counts over the four outcomes, deterministic for a given seed.
pub fn sample_shots(probs: &[f64; 4], n: u64, seed: u64) -> [u64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = probs.iter().sum();
    let mut counts = [0u64; 4];
    for _ in 0..n {
        // 53-bit uniform in [0, 1).
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0) * total;
        let mut acc = 0.0;
        let mut bin = 3;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                bin = k;
                break;
            }
        }
        counts[bin] += 1;
    }
    counts
}

/// Lindblad generator in row-major vectorisation:
/// L[v] = -i(H v - v H) + sum_q gamma_q (Lq v Lq+ - (Lq+Lq v + v Lq+Lq)/2).
fn lindbladian(h: &M4, gamma_a: f64, gamma_b: f64) -> M16 {
    let mut gen = zeros16();
    let minus_i = C64::new(0.0, -1.0);
    axpy16(&mut gen, minus_i, &super_left(h));
    axpy16(&mut gen, -minus_i, &super_right(h));
    for (gamma, lop) in [
        (gamma_a, embed_a(&sigma_minus())),
        (gamma_b, embed_b(&sigma_minus())),
    ] {
        if gamma == 0.0 {
            continue;
        }
        let ldag = adj4(&lop);
        let num = mul4(&ldag, &lop);
        let g = C64::new(gamma, 0.0);
        axpy16(&mut gen, g, &super_sandwich(&lop, &ldag));
        axpy16(&mut gen, g * -0.5, &super_left(&num));
        axpy16(&mut gen, g * -0.5, &super_right(&num));
    }
    gen
}

fn axpy16(y: &mut M16, a: C64, x: &M16) {
    for r in 0..16 {
        for c in 0..16 {
            y[r][c] += a * x[r][c];
        }
    }
}

fn hermitize(m: &M4) -> M4 {
    let mut out = zeros4();
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (m[r][c] + m[c][r].conj()) * 0.5;
        }
    }
    out
}

/// Stepping engine with a propagator cache keyed by control snapshot.
///
/// One instance per independent work unit (grid row, trace); the cache makes
/// repeated pulses cost one matrix exponential per distinct sampled value.
pub struct Propagator {
    dt: f64,
    rwa: bool,
    zz_weight: f64,
    gamma_a: f64,
    gamma_b: f64,
    cache: BTreeMap<[u64; 7], M16>,
}

impl Propagator {
    /// Decay rates from t1 (infinite t1 disables dissipation) and the
    /// sigma_z sigma_z weight from the junction counts.
    pub fn new(params: &DeviceParams, dt: f64, rwa: bool) -> Result<Self, DynamicsError> {
        let gamma = |t1: f64| if t1.is_finite() { 1.0 / t1 } else { 0.0 };
        Self::with_rates(
            dt,
            gamma(params.t1_a),
            gamma(params.t1_b),
            params.zz_weight(),
            rwa,
        )
    }

    pub fn with_rates(
        dt: f64,
        gamma_a: f64,
        gamma_b: f64,
        zz_weight: f64,
        rwa: bool,
    ) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DynamicsError::BadDt { dt });
        }
        Ok(Propagator {
            dt,
            rwa,
            zz_weight,
            gamma_a,
            gamma_b,
            cache: BTreeMap::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Evolve from t_start to t_end (quantised to whole steps of dt).
    pub fn propagate(
        &mut self,
        state: &TwoQubitState,
        source: &impl ControlSource,
        t_start: f64,
        t_end: f64,
    ) -> Result<TwoQubitState, DynamicsError> {
        if !(t_end >= t_start) {
            return Err(DynamicsError::BadTimeRange { t_start, t_end });
        }
        let n = libm::round((t_end - t_start) / self.dt) as u64;
        let mut v = vec_rho(&state.rho);
        self.run(&mut v, source, t_start, n)?;
        Ok(TwoQubitState {
            rho: hermitize(&unvec_rho(&v)),
        })
    }

    /// Evolve through a sorted list of absolute sample times, handing each
    /// intermediate state to `sink`; returns the state at the last time.
    pub fn propagate_recording(
        &mut self,
        state: &TwoQubitState,
        source: &impl ControlSource,
        t_start: f64,
        times: &[f64],
        mut sink: impl FnMut(f64, &TwoQubitState),
    ) -> Result<TwoQubitState, DynamicsError> {
        let mut v = vec_rho(&state.rho);
        let mut step = 0u64;
        for &tau in times {
            if !(tau >= t_start) {
                return Err(DynamicsError::BadTimeRange {
                    t_start,
                    t_end: tau,
                });
            }
            let target = libm::round((tau - t_start) / self.dt) as u64;
            if target < step {
                return Err(DynamicsError::BadTimeRange {
                    t_start: t_start + step as f64 * self.dt,
                    t_end: tau,
                });
            }
            self.run(&mut v, source, t_start + step as f64 * self.dt, target - step)?;
            step = target;
            let snapshot_state = TwoQubitState {
                rho: hermitize(&unvec_rho(&v)),
            };
            sink(t_start + step as f64 * self.dt, &snapshot_state);
        }
        Ok(TwoQubitState {
            rho: hermitize(&unvec_rho(&v)),
        })
    }

    fn run(
        &mut self,
        v: &mut V16,
        source: &impl ControlSource,
        t_start: f64,
        n_steps: u64,
    ) -> Result<(), DynamicsError> {
        let mut k = 0u64;
        while k < n_steps {
            let t_mid = t_start + (k as f64 + 0.5) * self.dt;
            let snap = source.at(t_mid);
            if !snap.finite() {
                return Err(DynamicsError::NonFiniteControl { t: t_mid });
            }
            let mut run_len = 1u64;
            let until = source.constant_until(t_mid);
            if until > t_mid {
                // Last step whose midpoint still falls inside [t_mid, until);
                // an unbounded span (infinite until) covers every remaining
                // step.
                let j = libm::floor((until - t_start) / self.dt - 0.5 - 1e-9);
                if j > k as f64 {
                    let j = if j >= n_steps as f64 {
                        n_steps - 1
                    } else {
                        j as u64
                    };
                    run_len = (j - k + 1).min(n_steps - k);
                }
            }
            let p = self.cached(&snap)?;
            if run_len >= 256 {
                let pn = pow16(&p, run_len);
                *v = matvec16(&pn, v);
            } else {
                for _ in 0..run_len {
                    *v = matvec16(&p, v);
                }
            }
            k += run_len;
        }
        Ok(())
    }

    fn cached(&mut self, snap: &ControlSnapshot) -> Result<M16, DynamicsError> {
        let key = snap.key();
        if let Some(p) = self.cache.get(&key) {
            return Ok(*p);
        }
        let h = build_hamiltonian_with_weight(snap, self.zz_weight, self.rwa);
        let scale = inf_norm4(&h);
        if self.dt * scale > 0.25 {
            return Err(DynamicsError::StepTooCoarse { dt: self.dt, scale });
        }
        let mut gen = lindbladian(&h, self.gamma_a, self.gamma_b);
        for row in gen.iter_mut() {
            for e in row.iter_mut() {
                *e *= self.dt;
            }
        }
        let p = expm16(&gen);
        self.cache.insert(key, p);
        Ok(p)
    }
}

/// One-shot propagation with a fresh cache.
pub fn propagate(
    state: &TwoQubitState,
    source: &impl ControlSource,
    t_start: f64,
    t_end: f64,
    dt: f64,
    params: &DeviceParams,
    rwa: bool,
) -> Result<TwoQubitState, DynamicsError> {
    Propagator::new(params, dt, rwa)?.propagate(state, source, t_start, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::TWO_PI;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn no_decay_params() -> DeviceParams {
        DeviceParams {
            t1_a: f64::INFINITY,
            t1_b: f64::INFINITY,
            ..DeviceParams::default()
        }
    }

    fn constant(snap: ControlSnapshot) -> impl Fn(f64) -> ControlSnapshot {
        move |_t| snap
    }

    #[test]
    fn zero_controls_give_zero_hamiltonian() {
        let h = build_hamiltonian(
            &ControlSnapshot::zero(),
            &DeviceParams::default(),
            true,
        );
        for row in &h {
            for e in row {
                assert_eq!(e.norm(), 0.0);
            }
        }
    }

    #[test]
    fn coupling_terms_have_documented_weights() {
        let snap = ControlSnapshot {
            omega_c: TWO_PI * 17e6,
            ..ControlSnapshot::zero()
        };
        let h = build_hamiltonian(&snap, &DeviceParams::default(), true);
        // Flip-flop element and the sigma_z sigma_z diagonal at 1/30 of it.
        assert_relative_eq!(h[1][2].re, 0.5 * snap.omega_c, max_relative = 1e-15);
        assert_relative_eq!(
            h[0][0].re,
            0.5 * snap.omega_c / 30.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(h[1][1].re, -h[0][0].re, max_relative = 1e-14);
        // RWA form has no |00> <-> |11> element; the full form does.
        assert_eq!(h[0][3].norm(), 0.0);
        let h_full = build_hamiltonian(&snap, &DeviceParams::default(), false);
        assert_relative_eq!(h_full[0][3].re, 0.5 * snap.omega_c, max_relative = 1e-15);
    }

    #[test]
    fn eigen_splitting_at_forty_megahertz() {
        let omega = TWO_PI * 40e6;
        let snap = ControlSnapshot {
            omega_c: omega,
            ..ControlSnapshot::zero()
        };
        let h = build_hamiltonian(&snap, &DeviceParams::default(), true);
        let eigs = eigvals_hermitian4(&h);
        // Single-excitation pair split by exactly omega_c; the zz term only
        // shifts the levels.
        assert_relative_eq!(eigs[3] - eigs[0], omega, max_relative = 1e-12);
        assert_abs_diff_eq!(eigs[1], eigs[2], epsilon = 1e-3);
    }

    #[test]
    fn half_swap_moves_all_population() {
        let snap = ControlSnapshot {
            omega_c: TWO_PI * 40e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&no_decay_params(), DEFAULT_DT, true).unwrap();
        let out = prop
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                12.5e-9,
            )
            .unwrap();
        let p = out.probabilities();
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn resonant_swap_follows_closed_form_without_zz() {
        let omega = TWO_PI * 20e6;
        let snap = ControlSnapshot {
            omega_c: omega,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::with_rates(DEFAULT_DT, 0.0, 0.0, 0.0, true).unwrap();
        for &t in &[3.0e-9, 7.3e-9, 18.15e-9] {
            let out = prop
                .propagate(&TwoQubitState::basis(true, false), &constant(snap), 0.0, t)
                .unwrap();
            let expected = libm::sin(0.5 * omega * t).powi(2);
            assert_abs_diff_eq!(out.probabilities()[1], expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn detuned_swap_oscillates_at_generalized_frequency() {
        // Delta/2pi = 30 MHz, Omega_c/2pi = 40 MHz: amplitude 0.64, full
        // oscillation at 50 MHz.
        let snap = ControlSnapshot {
            detune_b: TWO_PI * 30e6,
            omega_c: TWO_PI * 40e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::with_rates(DEFAULT_DT, 0.0, 0.0, 0.0, true).unwrap();
        let at_peak = prop
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                10.0e-9,
            )
            .unwrap();
        assert_abs_diff_eq!(at_peak.probabilities()[1], 0.64, epsilon = 1e-9);
        let at_node = prop
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                20.0e-9,
            )
            .unwrap();
        assert_abs_diff_eq!(at_node.probabilities()[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn rabi_drive_excites_the_driven_qubit() {
        let omega = TWO_PI * 50e6;
        let snap = ControlSnapshot {
            rabi_a: omega,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&no_decay_params(), DEFAULT_DT, true).unwrap();
        let out = prop
            .propagate(&TwoQubitState::ground(), &constant(snap), 0.0, 5.0e-9)
            .unwrap();
        // Quarter period of a 50 MHz Rabi drive: P1 = sin^2(pi/4) = 1/2.
        assert_abs_diff_eq!(out.probabilities()[2], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(out.probabilities()[0], 0.5, epsilon = 1e-9);
        // Phase rotates the axis, not the excited population.
        let rotated = ControlSnapshot {
            phase_a: core::f64::consts::FRAC_PI_2,
            ..snap
        };
        let out2 = prop
            .propagate(&TwoQubitState::ground(), &constant(rotated), 0.0, 5.0e-9)
            .unwrap();
        assert_abs_diff_eq!(out2.probabilities()[2], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn pure_decay_reaches_e_inverse_at_t1() {
        let params = DeviceParams::default();
        let mut prop = Propagator::new(&params, DEFAULT_DT, true).unwrap();
        let out = prop
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(ControlSnapshot::zero()),
                0.0,
                params.t1_a,
            )
            .unwrap();
        let p = out.probabilities();
        assert_abs_diff_eq!(p[2], (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(p[0], 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_tenth_megahertz_coupling_stays_below_three_percent() {
        let snap = ControlSnapshot {
            omega_c: TWO_PI * 0.1e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&DeviceParams::default(), DEFAULT_DT, true).unwrap();
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 5.0e-9).collect();
        let mut max_p01 = 0.0f64;
        prop.propagate_recording(
            &TwoQubitState::basis(true, false),
            &constant(snap),
            0.0,
            &times,
            |_t, s| {
                let p = s.probabilities()[1];
                if p > max_p01 {
                    max_p01 = p;
                }
            },
        )
        .unwrap();
        assert!(max_p01 < 0.03, "max P01 = {max_p01}");
        assert!(max_p01 > 0.005, "signal unexpectedly small: {max_p01}");
    }

    #[test]
    fn trace_and_purity_survive_a_microsecond() {
        let snap = ControlSnapshot {
            detune_a: TWO_PI * 10e6,
            detune_b: -TWO_PI * 5e6,
            rabi_a: TWO_PI * 20e6,
            phase_a: 0.3,
            rabi_b: TWO_PI * 8e6,
            phase_b: -1.1,
            omega_c: TWO_PI * 15e6,
        };
        let start = TwoQubitState::from_ket(&[
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ]);
        let mut prop = Propagator::with_rates(DEFAULT_DT, 0.0, 0.0, 1.0 / 30.0, true).unwrap();
        let out = prop.propagate(&start, &constant(snap), 0.0, 1.0e-6).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-9);
        assert!((out.purity() - start.purity()).abs() < 1e-8);
        assert!(out.hermiticity_defect() < 1e-10);
        out.validate().unwrap();
    }

    #[test]
    fn dissipative_evolution_keeps_state_invariants() {
        let snap = ControlSnapshot {
            rabi_a: TWO_PI * 25e6,
            omega_c: TWO_PI * 17e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&DeviceParams::default(), DEFAULT_DT, true).unwrap();
        let out = prop
            .propagate(&TwoQubitState::ground(), &constant(snap), 0.0, 1.0e-6)
            .unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-9);
        out.validate().unwrap();
        // Decay reduces purity.
        assert!(out.purity() < 1.0);
    }

    #[test]
    fn qubit_exchange_symmetry() {
        let snap = ControlSnapshot {
            detune_a: TWO_PI * 12e6,
            detune_b: -TWO_PI * 31e6,
            rabi_a: TWO_PI * 18e6,
            phase_a: 0.7,
            rabi_b: TWO_PI * 9e6,
            phase_b: 2.1,
            omega_c: TWO_PI * 22e6,
        };
        let swapped = ControlSnapshot {
            detune_a: snap.detune_b,
            detune_b: snap.detune_a,
            rabi_a: snap.rabi_b,
            phase_a: snap.phase_b,
            rabi_b: snap.rabi_a,
            phase_b: snap.phase_a,
            omega_c: snap.omega_c,
        };
        let ket = [
            C64::new(0.2, 0.1),
            C64::new(0.6, -0.3),
            C64::new(0.4, 0.2),
            C64::new(0.5, 0.0),
        ];
        let ket_swapped = [ket[0], ket[2], ket[1], ket[3]];
        let ga = 1.0 / 300e-9;
        let gb = 1.0 / 500e-9;
        let mut prop = Propagator::with_rates(DEFAULT_DT, ga, gb, 1.0 / 30.0, true).unwrap();
        let mut prop_swapped =
            Propagator::with_rates(DEFAULT_DT, gb, ga, 1.0 / 30.0, true).unwrap();
        let out = prop
            .propagate(
                &TwoQubitState::from_ket(&ket),
                &constant(snap),
                0.0,
                100e-9,
            )
            .unwrap();
        let out_swapped = prop_swapped
            .propagate(
                &TwoQubitState::from_ket(&ket_swapped),
                &constant(swapped),
                0.0,
                100e-9,
            )
            .unwrap();
        let p = out.probabilities();
        let q = out_swapped.probabilities();
        assert_abs_diff_eq!(p[0], q[0], epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], q[2], epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], q[1], epsilon = 1e-12);
        assert_abs_diff_eq!(p[3], q[3], epsilon = 1e-12);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let snap = ControlSnapshot {
            detune_a: TWO_PI * 400e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&no_decay_params(), 1.0e-9, true).unwrap();
        let err = prop
            .propagate(&TwoQubitState::ground(), &constant(snap), 0.0, 10e-9)
            .unwrap_err();
        assert!(matches!(err, DynamicsError::StepTooCoarse { .. }));
    }

    #[test]
    fn halving_dt_leaves_pi_pulse_endpoint_unchanged() {
        // Truncated-gaussian pi pulse: the pi-area working point makes the
        // endpoint second-order insensitive to the quadrature error.
        let sigma = 2.5e-9;
        let amp = 678810163.8064728; // pi / (sigma * area factor), frozen
        let control = move |t: f64| {
            let x = t - 5.0e-9;
            let env = if x.abs() <= 2.0 * sigma {
                amp * (libm::exp(-x * x / (2.0 * sigma * sigma)) - libm::exp(-2.0))
            } else {
                0.0
            };
            ControlSnapshot {
                rabi_a: env,
                ..ControlSnapshot::zero()
            }
        };
        let params = no_decay_params();
        let fine = propagate(
            &TwoQubitState::ground(),
            &control,
            0.0,
            10e-9,
            DEFAULT_DT / 2.0,
            &params,
            true,
        )
        .unwrap();
        let coarse = propagate(
            &TwoQubitState::ground(),
            &control,
            0.0,
            10e-9,
            DEFAULT_DT,
            &params,
            true,
        )
        .unwrap();
        let pf = fine.probabilities();
        let pc = coarse.probabilities();
        for k in 0..4 {
            assert_abs_diff_eq!(pf[k], pc[k], epsilon = 1e-6);
        }
        assert!(pc[2] > 0.999, "pi pulse should invert qubit A: {}", pc[2]);
    }

    #[test]
    fn recording_matches_direct_propagation() {
        let snap = ControlSnapshot {
            omega_c: TWO_PI * 11e6,
            rabi_b: TWO_PI * 3e6,
            ..ControlSnapshot::zero()
        };
        let mut prop = Propagator::new(&DeviceParams::default(), DEFAULT_DT, true).unwrap();
        let times = [20e-9, 60e-9, 140e-9];
        let mut seen = Vec::new();
        let last = prop
            .propagate_recording(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                &times,
                |t, s| seen.push((t, s.probabilities())),
            )
            .unwrap();
        assert_eq!(seen.len(), 3);
        let mut prop2 = Propagator::new(&DeviceParams::default(), DEFAULT_DT, true).unwrap();
        let direct = prop2
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                140e-9,
            )
            .unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(
                seen[2].1[k],
                direct.probabilities()[k],
                epsilon = 1e-12
            );
        }
        assert_abs_diff_eq!(last.trace(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn measurement_confusion_and_identity() {
        let state = TwoQubitState::basis(true, false);
        let ident = measure_probabilities(&state, &MeasurementModel::identity());
        assert_eq!(ident, [0.0, 0.0, 1.0, 0.0]);
        let lossy = MeasurementModel::single_qubit_errors(0.05, 0.05);
        let p = measure_probabilities(&state, &lossy);
        assert_relative_eq!(p[2], 0.9025, max_relative = 1e-12);
        let sum: f64 = p.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(MeasurementModel::new([[0.5; 4]; 4]).is_err());
        assert!(MeasurementModel::new(MeasurementModel::identity().confusion).is_ok());
    }

    #[test]
    fn shot_sampling_is_deterministic_and_concentrated() {
        assert_eq!(sample_shots(&[1.0, 0.0, 0.0, 0.0], 100, 7), [100, 0, 0, 0]);
        assert_eq!(sample_shots(&[0.25; 4], 0, 7), [0; 4]);
        let a = sample_shots(&[0.25; 4], 1_000_000, 12345);
        let b = sample_shots(&[0.25; 4], 1_000_000, 12345);
        assert_eq!(a, b);
        let total: u64 = a.iter().sum();
        assert_eq!(total, 1_000_000);
        // 5 sigma of a binomial(1e6, 1/4) is ~2165.
        for &count in &a {
            assert!((count as i64 - 250_000).abs() < 2165, "count {count}");
        }
        let c = sample_shots(&[0.1, 0.2, 0.3, 0.4], 1000, 999);
        assert_eq!(c.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn batched_and_stepwise_paths_agree() {
        // A source that reports its constancy lets `run` take the pow path;
        // a plain closure steps one by one. Both must agree bit-for-bit
        // modulo matrix-power roundoff.
        struct ConstSource(ControlSnapshot);
        impl ControlSource for ConstSource {
            fn at(&self, _t: f64) -> ControlSnapshot {
                self.0
            }
            fn constant_until(&self, _t: f64) -> f64 {
                f64::INFINITY
            }
        }
        let snap = ControlSnapshot {
            omega_c: TWO_PI * 13e6,
            detune_b: TWO_PI * 21e6,
            ..ControlSnapshot::zero()
        };
        let params = DeviceParams::default();
        let mut prop = Propagator::new(&params, DEFAULT_DT, true).unwrap();
        let batched = prop
            .propagate(
                &TwoQubitState::basis(true, false),
                &ConstSource(snap),
                0.0,
                400e-9,
            )
            .unwrap();
        let mut prop2 = Propagator::new(&params, DEFAULT_DT, true).unwrap();
        let stepped = prop2
            .propagate(
                &TwoQubitState::basis(true, false),
                &constant(snap),
                0.0,
                400e-9,
            )
            .unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(
                batched.probabilities()[k],
                stepped.probabilities()[k],
                epsilon = 1e-10
            );
        }
    }
}
