//! Declarative five-channel pulse sequences and their control samplers.
//!
//! A sequence owns one channel per control line: Z bias of each qubit
//! (expressed directly as a frequency shift in Hz), microwave drive envelope
//! of each qubit (rad/s plus phase), and the coupler bias (A). Channels hold
//! ordered, non-overlapping segments; gaps hold the last value a segment
//! ended on. The sampler turns a sequence into rotating-frame control
//! snapshots: coupler bias maps to Omega_c through the junction formula, the
//! bias-to-frequency slope adds the parasitic qubit shift that compensation
//! segments cancel, and a per-sequence frame offset picks the rotating frame
//! so every builder emits drives with constant phase.

use alloc::vec;
use alloc::vec::Vec;

use crate::device::{self, DeviceError, DeviceParams, TWO_PI};
use crate::dynamics::{ControlSnapshot, ControlSource};

/// Default pi-pulse length (s).
pub const DEFAULT_PI_PULSE_DURATION: f64 = 10e-9;
/// Default raised-cosine rise/fall for coupler and Z steps (s).
pub const DEFAULT_RISE_FALL: f64 = 2e-9;
/// Default spectroscopy probe length (s).
pub const DEFAULT_PROBE_DURATION: f64 = 2e-6;
/// Default spectroscopy probe amplitude (rad/s); weak enough that the
/// simulated linewidth stays near 3 MHz, slightly power-broadened.
pub const DEFAULT_PROBE_AMP: f64 = TWO_PI * 1.5e6;
/// Default crosstalk-scan Rabi amplitude (rad/s).
pub const DEFAULT_RABI_AMP: f64 = TWO_PI * 20e6;

/// Integral of the baseline-subtracted gaussian envelope over its +-2 sigma
/// support, in units of amplitude x sigma: sqrt(2 pi) erf(sqrt 2) - 4 e^-2.
pub const GAUSSIAN_AREA_FACTOR: f64 = 1.8512348936987657;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ChannelId {
    ZA,
    ZB,
    UwA,
    UwB,
    Coupler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Shape {
    Constant,
    /// Linear ramp from the channel's previous value to `level`.
    LinearRamp,
    /// Raised-cosine rise to `level`, plateau, raised-cosine fall back to the
    /// channel's previous value.
    FlatWithRiseFall,
    /// Baseline-subtracted gaussian of peak-parameter `level` added to the
    /// channel's previous value, truncated at +-2 sigma (sigma = duration/4)
    /// so both edges are exactly zero.
    GaussianPulse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Segment {
    pub t_start: f64,
    pub duration: f64,
    pub shape: Shape,
    /// Target level or pulse amplitude in channel units: rad/s for drive
    /// envelopes, Hz for Z shifts, A for the coupler bias.
    pub level: f64,
    /// Rise/fall time (s); only FlatWithRiseFall reads it.
    pub rise_fall: f64,
    /// Drive phase (rad); only microwave channels read it.
    pub phase: f64,
}

impl Segment {
    pub fn constant(t_start: f64, duration: f64, level: f64) -> Self {
        Segment {
            t_start,
            duration,
            shape: Shape::Constant,
            level,
            rise_fall: 0.0,
            phase: 0.0,
        }
    }

    pub fn ramp(t_start: f64, duration: f64, level: f64) -> Self {
        Segment {
            t_start,
            duration,
            shape: Shape::LinearRamp,
            level,
            rise_fall: 0.0,
            phase: 0.0,
        }
    }

    pub fn flat(t_start: f64, duration: f64, level: f64, rise_fall: f64) -> Self {
        Segment {
            t_start,
            duration,
            shape: Shape::FlatWithRiseFall,
            level,
            rise_fall,
            phase: 0.0,
        }
    }

    pub fn gaussian(t_start: f64, duration: f64, amplitude: f64, phase: f64) -> Self {
        Segment {
            t_start,
            duration,
            shape: Shape::GaussianPulse,
            level: amplitude,
            rise_fall: 0.0,
            phase,
        }
    }

    fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    /// Value at `t` inside [t_start, t_end), given the channel value `base`
    /// the segment started from.
    fn eval(&self, base: f64, t: f64) -> f64 {
        let x = t - self.t_start;
        match self.shape {
            Shape::Constant => self.level,
            Shape::LinearRamp => base + (self.level - base) * (x / self.duration),
            Shape::FlatWithRiseFall => {
                let rf = self.rise_fall;
                let window = if rf <= 0.0 {
                    1.0
                } else if x < rf {
                    0.5 * (1.0 - libm::cos(core::f64::consts::PI * x / rf))
                } else if x > self.duration - rf {
                    0.5 * (1.0 - libm::cos(core::f64::consts::PI * (self.duration - x) / rf))
                } else {
                    1.0
                };
                base + (self.level - base) * window
            }
            Shape::GaussianPulse => {
                let sigma = self.duration / 4.0;
                let dx = t - (self.t_start + self.duration / 2.0);
                base + self.level * (libm::exp(-dx * dx / (2.0 * sigma * sigma)) - libm::exp(-2.0))
            }
        }
    }

    /// Value the channel holds after the segment ends.
    fn end_value(&self, base: f64) -> f64 {
        match self.shape {
            Shape::Constant | Shape::LinearRamp => self.level,
            Shape::FlatWithRiseFall | Shape::GaussianPulse => base,
        }
    }

    /// End of the constant stretch containing `t` within the segment, or `t`
    /// itself where the value is changing.
    fn constant_until(&self, t: f64) -> f64 {
        let x = t - self.t_start;
        match self.shape {
            Shape::Constant => self.t_end(),
            Shape::LinearRamp | Shape::GaussianPulse => t,
            Shape::FlatWithRiseFall => {
                let rf = self.rise_fall;
                if rf <= 0.0 {
                    self.t_end()
                } else if x < rf || x > self.duration - rf {
                    t
                } else {
                    self.t_start + self.duration - rf
                }
            }
        }
    }

    fn validate(&self) -> Result<(), &'static str> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err("segment duration must be positive");
        }
        if !(self.t_start >= 0.0) || !self.t_start.is_finite() {
            return Err("segment start must be non-negative");
        }
        if !(self.rise_fall >= 0.0) || self.rise_fall > self.duration / 2.0 {
            return Err("rise_fall must lie in [0, duration/2]");
        }
        if !self.level.is_finite() || !self.phase.is_finite() {
            return Err("segment level and phase must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceError {
    BadSegment {
        channel: ChannelId,
        reason: &'static str,
    },
    OverlappingSegments {
        channel: ChannelId,
    },
    SegmentOutOfRange {
        channel: ChannelId,
    },
    BadMeasurementTime {
        measurement_time: f64,
        total_duration: f64,
    },
    Device(DeviceError),
}

impl core::fmt::Display for SequenceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SequenceError::BadSegment { channel, reason } => {
                write!(f, "bad segment on {channel:?}: {reason}")
            }
            SequenceError::OverlappingSegments { channel } => {
                write!(f, "segments on {channel:?} overlap or are unsorted")
            }
            SequenceError::SegmentOutOfRange { channel } => {
                write!(f, "segment on {channel:?} extends past the sequence end")
            }
            SequenceError::BadMeasurementTime {
                measurement_time,
                total_duration,
            } => write!(
                f,
                "measurement time {measurement_time:e} s outside [0, {total_duration:e}] s"
            ),
            SequenceError::Device(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SequenceError {}

impl From<DeviceError> for SequenceError {
    fn from(e: DeviceError) -> Self {
        SequenceError::Device(e)
    }
}

/// One control line: ordered non-overlapping segments over a hold-last-value
/// baseline starting at `initial_level`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Channel {
    pub id: ChannelId,
    pub initial_level: f64,
    pub segments: Vec<Segment>,
    /// Hold value before segment k (and after segment k-1); bases[0] is
    /// initial_level, bases[n] is the value held after the last segment.
    #[cfg_attr(feature = "serde", serde(skip))]
    bases: Vec<f64>,
}

impl Channel {
    pub fn new(
        id: ChannelId,
        initial_level: f64,
        segments: Vec<Segment>,
    ) -> Result<Self, SequenceError> {
        if !initial_level.is_finite() {
            return Err(SequenceError::BadSegment {
                channel: id,
                reason: "initial level must be finite",
            });
        }
        for seg in &segments {
            seg.validate()
                .map_err(|reason| SequenceError::BadSegment { channel: id, reason })?;
        }
        for pair in segments.windows(2) {
            if pair[0].t_end() > pair[1].t_start {
                return Err(SequenceError::OverlappingSegments { channel: id });
            }
        }
        let mut bases = Vec::with_capacity(segments.len() + 1);
        bases.push(initial_level);
        for (k, seg) in segments.iter().enumerate() {
            bases.push(seg.end_value(bases[k]));
        }
        Ok(Channel {
            id,
            initial_level,
            segments,
            bases,
        })
    }

    pub fn idle(id: ChannelId, level: f64) -> Self {
        Channel::new(id, level, Vec::new()).expect("finite idle level")
    }

    /// Channel value at time `t` (any t; before the first segment and in
    /// gaps the held value applies).
    pub fn value(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        if idx == 0 {
            return self.initial_level;
        }
        let seg = &self.segments[idx - 1];
        if t < seg.t_end() {
            seg.eval(self.bases[idx - 1], t)
        } else {
            self.bases[idx]
        }
    }

    /// Drive phase at `t`: the covering segment's phase, else the previous
    /// segment's (the envelope is held there, so the phase rides along).
    pub fn phase(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        if idx == 0 {
            0.0
        } else {
            self.segments[idx - 1].phase
        }
    }

    /// End of the constant stretch containing `t`; `t` itself while the
    /// value is changing, +inf when nothing changes any more.
    pub fn constant_until(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        if idx == 0 {
            return self
                .segments
                .first()
                .map(|s| s.t_start)
                .unwrap_or(f64::INFINITY);
        }
        let seg = &self.segments[idx - 1];
        if t < seg.t_end() {
            seg.constant_until(t)
        } else {
            self.segments
                .get(idx)
                .map(|s| s.t_start)
                .unwrap_or(f64::INFINITY)
        }
    }

    fn last_end(&self) -> f64 {
        self.segments.last().map(|s| s.t_end()).unwrap_or(0.0)
    }
}

/// Gaussian pi pulse: sigma = duration/4, amplitude set so the envelope area
/// is exactly pi.
pub fn pi_pulse(t_start: f64, duration: f64, phase: f64) -> Segment {
    let sigma = duration / 4.0;
    let amp = core::f64::consts::PI / (sigma * GAUSSIAN_AREA_FACTOR);
    Segment {
        t_start,
        duration,
        shape: Shape::GaussianPulse,
        level: amp,
        rise_fall: 0.0,
        phase,
    }
}

/// Z-channel mirrors of a coupler channel that cancel the parasitic qubit
/// frequency shift bias_shift_coeff x I_cb(t). Both qubits see the same
/// shift model, so both lists are identical copies.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationOffsets {
    /// Initial Z level (Hz) cancelling the coupler's initial bias.
    pub initial_level: f64,
    pub z_a: Vec<Segment>,
    pub z_b: Vec<Segment>,
}

pub fn compensation_offsets(coupler: &Channel, params: &DeviceParams) -> CompensationOffsets {
    let c = params.bias_shift_coeff;
    let mirror: Vec<Segment> = coupler
        .segments
        .iter()
        .map(|seg| Segment {
            level: -c * seg.level,
            phase: 0.0,
            ..*seg
        })
        .collect();
    CompensationOffsets {
        initial_level: -c * coupler.initial_level,
        z_a: mirror.clone(),
        z_b: mirror,
    }
}

/// A full five-channel sequence with one rotating frame for both qubits.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PulseSequence {
    pub z_a: Channel,
    pub z_b: Channel,
    pub uw_a: Channel,
    pub uw_b: Channel,
    pub coupler: Channel,
    pub total_duration: f64,
    pub measurement_time: f64,
    /// Rotating-frame frequency minus qubit A's idle frequency (Hz). Builders
    /// pick it so their drives are resonant with constant phase.
    pub frame_offset: f64,
}

impl PulseSequence {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        z_a: Channel,
        z_b: Channel,
        uw_a: Channel,
        uw_b: Channel,
        coupler: Channel,
        total_duration: f64,
        measurement_time: f64,
        frame_offset: f64,
    ) -> Result<Self, SequenceError> {
        if !(measurement_time >= 0.0)
            || !(measurement_time <= total_duration)
            || !total_duration.is_finite()
        {
            return Err(SequenceError::BadMeasurementTime {
                measurement_time,
                total_duration,
            });
        }
        for ch in [&z_a, &z_b, &uw_a, &uw_b, &coupler] {
            // Allow a picosecond of float slack from builders that add up
            // pulse, ramp and plateau durations.
            if ch.last_end() > total_duration + 1e-12 {
                return Err(SequenceError::SegmentOutOfRange { channel: ch.id });
            }
        }
        Ok(PulseSequence {
            z_a,
            z_b,
            uw_a,
            uw_b,
            coupler,
            total_duration,
            measurement_time,
            frame_offset,
        })
    }

    /// All channels idle at zero for `total_duration`.
    pub fn empty(total_duration: f64) -> Self {
        PulseSequence {
            z_a: Channel::idle(ChannelId::ZA, 0.0),
            z_b: Channel::idle(ChannelId::ZB, 0.0),
            uw_a: Channel::idle(ChannelId::UwA, 0.0),
            uw_b: Channel::idle(ChannelId::UwB, 0.0),
            coupler: Channel::idle(ChannelId::Coupler, 0.0),
            total_duration,
            measurement_time: total_duration,
            frame_offset: 0.0,
        }
    }
}

/// Sequence sampler implementing `ControlSource`.
///
/// Coupler bias maps to Omega_c through the junction inductance formula; Z
/// values (Hz) plus the parasitic shift bias_shift_coeff x I_cb land in the
/// detunings; the frame offset shifts both. Samples are deterministic
/// functions of t, so re-sampling at any dt agrees at common times.
pub struct Sampler<'a> {
    seq: &'a PulseSequence,
    params: &'a DeviceParams,
}

impl<'a> Sampler<'a> {
    fn snapshot(&self, t: f64) -> ControlSnapshot {
        let bias = self.seq.coupler.value(t);
        let omega_c = device::coupling_strength(self.params, bias).unwrap_or(f64::NAN);
        let shift = self.params.bias_shift_coeff * bias;
        let frame = self.seq.frame_offset;
        let idle_split = self.params.f10_b - self.params.f10_a;
        ControlSnapshot {
            detune_a: TWO_PI * (self.seq.z_a.value(t) + shift - frame),
            detune_b: TWO_PI * (idle_split + self.seq.z_b.value(t) + shift - frame),
            rabi_a: self.seq.uw_a.value(t),
            phase_a: self.seq.uw_a.phase(t),
            rabi_b: self.seq.uw_b.value(t),
            phase_b: self.seq.uw_b.phase(t),
            omega_c,
        }
    }
}

impl<'a> ControlSource for Sampler<'a> {
    fn at(&self, t: f64) -> ControlSnapshot {
        self.snapshot(t)
    }

    fn constant_until(&self, t: f64) -> f64 {
        let mut until = f64::INFINITY;
        for ch in [
            &self.seq.z_a,
            &self.seq.z_b,
            &self.seq.uw_a,
            &self.seq.uw_b,
            &self.seq.coupler,
        ] {
            let u = ch.constant_until(t);
            if u <= t {
                return t;
            }
            if u < until {
                until = u;
            }
        }
        until
    }
}

/// Build a sampler, pre-checking every bias value the propagator will see at
/// step midpoints of `dt` against the critical current.
pub fn sample<'a>(
    seq: &'a PulseSequence,
    params: &'a DeviceParams,
    dt: f64,
) -> Result<Sampler<'a>, SequenceError> {
    let mut t = 0.5 * dt;
    while t < seq.total_duration {
        let bias = seq.coupler.value(t);
        if !bias.is_finite() || bias.abs() >= params.i_c0 {
            return Err(SequenceError::Device(DeviceError::BiasAtOrBeyondCritical {
                i_cb: bias,
                i_c0: params.i_c0,
            }));
        }
        let until = seq.coupler.constant_until(t);
        t = if until > t { until.max(t + dt) } else { t + dt };
    }
    Ok(Sampler { seq, params })
}

/// Coupler bias the swap sequence idles at: the zero-coupling bias when the
/// calibration makes one reachable, else the bias of minimum residual
/// coupling.
pub fn idle_coupler_bias(params: &DeviceParams) -> Result<f64, DeviceError> {
    Ok(match device::zero_coupling_bias(params)? {
        device::ZeroCoupling::Bias(b) => b,
        device::ZeroCoupling::NotReachable { nearest_bias, .. } => nearest_bias,
    })
}

/// Continuous weak probe tone on qubit A with qubit B sitting `delta` (Hz)
/// from qubit A and a static coupler bias. The frame follows the probe
/// frequency (offset from qubit A), so the probe drive is static in frame.
/// Only one qubit is probed: a coherent tone on both would leave the
/// antisymmetric dressed state dark right at the crossing, hiding one
/// branch where it matters most. Both branches respond through their
/// qubit-A weight.
pub fn build_spectroscopy_sequence(
    delta: f64,
    f_probe_offset: f64,
    probe_amp: f64,
    i_cb: f64,
    params: &DeviceParams,
) -> Result<PulseSequence, SequenceError> {
    let dur = DEFAULT_PROBE_DURATION;
    let comp = -params.bias_shift_coeff * i_cb;
    let z_a = Channel::new(ChannelId::ZA, comp, Vec::new())?;
    // Position B at delta from A, compensation folded in.
    let z_b_level = delta - (params.f10_b - params.f10_a) + comp;
    let z_b = Channel::new(ChannelId::ZB, z_b_level, Vec::new())?;
    let probe = Channel::new(
        ChannelId::UwA,
        0.0,
        vec![Segment::constant(0.0, dur, probe_amp)],
    )?;
    PulseSequence::new(
        z_a,
        z_b.clone(),
        probe,
        Channel::idle(ChannelId::UwB, 0.0),
        Channel::idle(ChannelId::Coupler, i_cb),
        dur,
        dur,
        f_probe_offset,
    )
}

/// Resonant Rabi drive on one qubit with the other idling 200 MHz away
/// (whatever the configured idle split is) and a static coupler bias.
pub fn build_crosstalk_sequence(
    drive_a: bool,
    t_rabi: f64,
    i_cb: f64,
    rabi_amp: f64,
    params: &DeviceParams,
) -> Result<PulseSequence, SequenceError> {
    if !(t_rabi >= 0.0) {
        return Err(SequenceError::BadSegment {
            channel: if drive_a { ChannelId::UwA } else { ChannelId::UwB },
            reason: "rabi duration must be non-negative",
        });
    }
    let comp = -params.bias_shift_coeff * i_cb;
    let drive_segments = if t_rabi > 0.0 {
        vec![Segment::constant(0.0, t_rabi, rabi_amp)]
    } else {
        Vec::new()
    };
    let (uw_a, uw_b) = if drive_a {
        (
            Channel::new(ChannelId::UwA, 0.0, drive_segments)?,
            Channel::idle(ChannelId::UwB, 0.0),
        )
    } else {
        (
            Channel::idle(ChannelId::UwA, 0.0),
            Channel::new(ChannelId::UwB, 0.0, drive_segments)?,
        )
    };
    // Frame on the driven qubit's (compensated) idle frequency.
    let frame = if drive_a {
        0.0
    } else {
        params.f10_b - params.f10_a
    };
    PulseSequence::new(
        Channel::idle(ChannelId::ZA, comp),
        Channel::idle(ChannelId::ZB, comp),
        uw_a,
        uw_b,
        Channel::idle(ChannelId::Coupler, i_cb),
        t_rabi,
        t_rabi,
        frame,
    )
}

/// Pi pulse on qubit A at idle coupling, then a simultaneous Z step of B to
/// `delta` from A and a coupler pulse to `i_cb_on` holding for `t_swap`, both
/// with raised-cosine edges, returning to idle before measurement. Parasitic
/// shifts are compensated throughout.
pub fn build_swap_sequence(
    delta: f64,
    i_cb_on: f64,
    t_swap: f64,
    params: &DeviceParams,
) -> Result<PulseSequence, SequenceError> {
    if !(t_swap >= 0.0) {
        return Err(SequenceError::BadSegment {
            channel: ChannelId::Coupler,
            reason: "swap time must be non-negative",
        });
    }
    let t_pi = DEFAULT_PI_PULSE_DURATION;
    let rf = DEFAULT_RISE_FALL;
    let i_cb_off = idle_coupler_bias(params)?;
    let window = t_swap + 2.0 * rf;
    let total = t_pi + window;
    let coeff = params.bias_shift_coeff;

    let coupler = Channel::new(
        ChannelId::Coupler,
        i_cb_off,
        vec![Segment::flat(t_pi, window, i_cb_on, rf)],
    )?;
    // z_a only compensates; z_b also steps B from its idle split to delta.
    let z_a = Channel::new(
        ChannelId::ZA,
        -coeff * i_cb_off,
        vec![Segment::flat(t_pi, window, -coeff * i_cb_on, rf)],
    )?;
    let z_b_on = delta - (params.f10_b - params.f10_a) - coeff * i_cb_on;
    let z_b = Channel::new(
        ChannelId::ZB,
        -coeff * i_cb_off,
        vec![Segment::flat(t_pi, window, z_b_on, rf)],
    )?;
    let uw_a = Channel::new(ChannelId::UwA, 0.0, vec![pi_pulse(0.0, t_pi, 0.0)])?;
    PulseSequence::new(
        z_a,
        z_b,
        uw_a,
        Channel::idle(ChannelId::UwB, 0.0),
        coupler,
        total,
        total,
        0.0,
    )
}
