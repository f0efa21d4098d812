//! Lumped-element model of the tuneable coupler circuit.
//!
//! Two phase qubits (loop inductance `l`, junction capacitance `c`) couple
//! through a mutual inductance `m` that is partially cancelled by the
//! bias-dependent inductance of a current-biased Josephson junction sitting
//! between them. Driving the coupler bias toward the junction critical
//! current raises its effective inductance and sweeps the net qubit-qubit
//! coupling from (near) zero through -100 MHz and beyond.

use crate::math::C64;

/// Magnetic flux quantum (Wb).
pub const PHI_0: f64 = 2.067833848e-15;

pub const TWO_PI: f64 = core::f64::consts::TAU;

/// Circuit constants and qubit operating parameters, all SI.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DeviceParams {
    /// Coupler junction critical current (A). Default: 1.58e-6.
    pub i_c0: f64,
    /// Qubit-qubit mutual inductance (H). Default: 190e-12.
    pub m: f64,
    /// Coupler-side mutual element (H). Default: 390e-12.
    pub l_m: f64,
    /// Coupler series inductance (H). Default: 2657e-12.
    pub l_s: f64,
    /// Qubit loop inductance (H). Default: 750e-12.
    pub l: f64,
    /// Coupler bias-line choke (H). Kept for completeness of the wiring
    /// description; no modelled quantity depends on it. Default: 9e-9.
    pub l_z: f64,
    /// Qubit junction capacitance (F). Default: 1e-12.
    pub c: f64,
    /// Qubit A idle |0>->|1> transition frequency (Hz). Default: 6.0e9.
    pub f10_a: f64,
    /// Qubit B idle transition frequency (Hz). Default: 5.8e9 (200 MHz
    /// below A, the idle detuning used throughout).
    pub f10_b: f64,
    /// Qubit A energy relaxation time (s). May be infinite. Default: 350e-9.
    pub t1_a: f64,
    /// Qubit B energy relaxation time (s). Default: 350e-9.
    pub t1_b: f64,
    /// Levels in qubit A's metastable well; sets the sigma_z sigma_z weight
    /// 1/(6 sqrt(n_a n_b)). Default: 5.
    pub n_a: f64,
    /// Levels in qubit B's well. Default: 5.
    pub n_b: f64,
    /// Coupler junction plasma frequency (rad/s). Default: 2 pi * 30e9.
    pub omega_c0: f64,
    /// Qubit frequency shift per unit coupler bias (Hz/A), identical for
    /// both qubits; cancelled by compensation pulses. Default: 1e12.
    pub bias_shift_coeff: f64,
    /// Additive correction to `m` in the coupling formula (H). The published
    /// constants leave the zero-coupling point just out of reach
    /// (L_c(0) = 208.3 pH > m = 190 pH); calibrated configurations set
    /// m + l_offset = 209 pH so the coupler sweeps through zero as the
    /// measured device does. Default: 0.
    pub l_offset: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            i_c0: 1.58e-6,
            m: 190e-12,
            l_m: 390e-12,
            l_s: 2657e-12,
            l: 750e-12,
            l_z: 9e-9,
            c: 1e-12,
            f10_a: 6.0e9,
            f10_b: 5.8e9,
            t1_a: 350e-9,
            t1_b: 350e-9,
            n_a: 5.0,
            n_b: 5.0,
            omega_c0: TWO_PI * 30e9,
            bias_shift_coeff: 1e12,
            l_offset: 0.0,
        }
    }
}

impl DeviceParams {
    /// Calibrated variant: l_offset chosen so m + l_offset = 209 pH and the
    /// coupling sweeps through zero at i_cb ~= 0.082 i_c0.
    pub fn calibrated() -> Self {
        DeviceParams {
            l_offset: 19e-12,
            ..DeviceParams::default()
        }
    }

    /// sigma_z sigma_z weight relative to the exchange term.
    pub fn zz_weight(&self) -> f64 {
        1.0 / (6.0 * libm::sqrt(self.n_a * self.n_b))
    }

    /// Inductance sum governing the coupler's RF-SQUID-like hysteresis.
    pub fn loop_inductance(&self) -> f64 {
        self.l_s + self.l_m + self.l
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let positive = [
            ("i_c0", self.i_c0),
            ("m", self.m),
            ("l_m", self.l_m),
            ("l_s", self.l_s),
            ("l", self.l),
            ("l_z", self.l_z),
            ("c", self.c),
            ("f10_a", self.f10_a),
            ("f10_b", self.f10_b),
            ("t1_a", self.t1_a),
            ("t1_b", self.t1_b),
            ("omega_c0", self.omega_c0),
        ];
        for (name, v) in positive {
            // t1 may be +inf (dissipation off); everything else must be a
            // plain positive number.
            let finite_ok = name.starts_with("t1");
            if !(v > 0.0) || (!finite_ok && !v.is_finite()) {
                return Err(DeviceError::InvalidParams { field: name });
            }
        }
        if !(self.n_a >= 2.0 && self.n_b >= 2.0) {
            return Err(DeviceError::InvalidParams { field: "n_a/n_b" });
        }
        if !self.bias_shift_coeff.is_finite() || !self.l_offset.is_finite() {
            return Err(DeviceError::InvalidParams {
                field: "bias_shift_coeff/l_offset",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceError {
    /// A parameter fails its positivity / range requirement.
    InvalidParams { field: &'static str },
    /// |i_cb| >= i_c0: the junction inductance diverges at the critical
    /// current and the model stops there.
    BiasAtOrBeyondCritical { i_cb: f64, i_c0: f64 },
    /// Requested coupling strength lies outside what any bias can reach.
    CouplingNotReachable { requested: f64, at_zero_bias: f64 },
}

impl core::fmt::Display for DeviceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DeviceError::InvalidParams { field } => {
                write!(f, "device parameter out of range: {field}")
            }
            DeviceError::BiasAtOrBeyondCritical { i_cb, i_c0 } => write!(
                f,
                "coupler bias {:.4e} A at or beyond the critical current {:.4e} A",
                i_cb, i_c0
            ),
            DeviceError::CouplingNotReachable {
                requested,
                at_zero_bias,
            } => write!(
                f,
                "coupling {:.4e} rad/s not reachable (zero-bias value {:.4e} rad/s)",
                requested, at_zero_bias
            ),
        }
    }
}

impl core::error::Error for DeviceError {}

/// Josephson inductance of the coupler junction at bias `i_cb` (A):
/// Phi_0 / (2 pi i_c0 sqrt(1 - (i_cb/i_c0)^2)). Even in the bias.
pub fn junction_inductance(params: &DeviceParams, i_cb: f64) -> Result<f64, DeviceError> {
    let x = i_cb / params.i_c0;
    if !(x.abs() < 1.0) {
        return Err(DeviceError::BiasAtOrBeyondCritical {
            i_cb,
            i_c0: params.i_c0,
        });
    }
    Ok(PHI_0 / (TWO_PI * params.i_c0 * libm::sqrt(1.0 - x * x)))
}

/// Junction inductance corrected for operation at drive frequency `omega`
/// (rad/s) below the junction plasma frequency: L_c * (1 - (omega/omega_c0)^2).
pub fn effective_inductance(
    params: &DeviceParams,
    i_cb: f64,
    omega: f64,
) -> Result<f64, DeviceError> {
    let l_c = junction_inductance(params, i_cb)?;
    let r = omega / params.omega_c0;
    Ok(l_c * (1.0 - r * r))
}

/// Qubit-qubit coupling strength Omega_c (rad/s, signed):
/// (m + l_offset - L_c(i_cb)) / ((l_m + l_s)^2 * omega_10 * c) with
/// omega_10 = 2 pi f10_a. Negative once L_c exceeds the net mutual.
pub fn coupling_strength(params: &DeviceParams, i_cb: f64) -> Result<f64, DeviceError> {
    let l_c = junction_inductance(params, i_cb)?;
    let lsum = params.l_m + params.l_s;
    let omega10 = TWO_PI * params.f10_a;
    Ok((params.m + params.l_offset - l_c) / (lsum * lsum * omega10 * params.c))
}

/// Outcome of the zero-coupling search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroCoupling {
    /// Bias (A) where Omega_c crosses zero.
    Bias(f64),
    /// No crossing exists for these constants; carries the bias of minimum
    /// |Omega_c| (always zero bias, where L_c is smallest) and the residual
    /// coupling there (rad/s).
    NotReachable { nearest_bias: f64, residual: f64 },
}

/// Locate the coupler-off bias by bisecting Omega_c over [0, i_c0).
/// Tolerance 1e-6 * i_c0 on the bias.
pub fn zero_coupling_bias(params: &DeviceParams) -> Result<ZeroCoupling, DeviceError> {
    params.validate()?;
    let at_zero = coupling_strength(params, 0.0)?;
    if at_zero == 0.0 {
        return Ok(ZeroCoupling::Bias(0.0));
    }
    // Omega_c decreases monotonically with |bias|; a zero exists iff the
    // zero-bias value is positive (m + l_offset > L_c(0)).
    if at_zero < 0.0 {
        return Ok(ZeroCoupling::NotReachable {
            nearest_bias: 0.0,
            residual: at_zero,
        });
    }
    let mut lo = 0.0f64;
    let mut hi = params.i_c0 * (1.0 - 1e-12);
    // Guaranteed sign change: Omega_c -> -inf as the bias approaches i_c0.
    let tol = 1e-6 * params.i_c0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = coupling_strength(params, mid)?;
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ZeroCoupling::Bias(0.5 * (lo + hi)))
}

/// Invert the coupling formula: the bias (A, non-negative root) at which
/// Omega_c equals `omega_c` (rad/s). Closed form via the junction inductance.
pub fn bias_for_coupling(params: &DeviceParams, omega_c: f64) -> Result<f64, DeviceError> {
    params.validate()?;
    let lsum = params.l_m + params.l_s;
    let denom = lsum * lsum * TWO_PI * params.f10_a * params.c;
    let l_c_target = params.m + params.l_offset - omega_c * denom;
    let l_c0 = junction_inductance(params, 0.0)?;
    if l_c_target < l_c0 {
        return Err(DeviceError::CouplingNotReachable {
            requested: omega_c,
            at_zero_bias: coupling_strength(params, 0.0)?,
        });
    }
    let ratio = l_c0 / l_c_target;
    Ok(params.i_c0 * libm::sqrt(1.0 - ratio * ratio))
}

/// Convenience: complex unit for modules that only need the alias.
pub fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
