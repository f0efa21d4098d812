//! Parameter extraction from simulated datasets: spectral peaks, avoided
//! crossing splittings, damped sinusoids, crosstalk amplitude ratios.
//!
//! Every fit is deterministic: seeds come from the data (medians, discrete
//! spectra), refinement is damped Gauss-Newton with step halving (at most
//! 200 iterations, convergence at relative parameter change < 1e-9), and
//! there is no stochastic restart. Frequencies are in Hz throughout.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    BadInput { reason: &'static str },
    /// Nothing rises meaningfully above the baseline.
    NoPeak,
    /// The detuning span cannot constrain the hyperbola.
    DegenerateFit { span: f64, seed: f64 },
    FitDiverged,
}

impl core::fmt::Display for FitError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FitError::BadInput { reason } => write!(f, "bad fit input: {reason}"),
            FitError::NoPeak => write!(f, "no peak above the noise floor"),
            FitError::DegenerateFit { span, seed } => write!(
                f,
                "detuning span {span:e} Hz below the splitting seed {seed:e} Hz"
            ),
            FitError::FitDiverged => write!(f, "refinement failed to improve on its seed"),
        }
    }
}

impl core::error::Error for FitError {}

/// Damped cosine model A exp(-t/decay_time) cos(2 pi f t + phase) + offset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DampedSineFit {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Seconds; +inf when the envelope shows no decay.
    pub decay_time: f64,
    /// Radians.
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

/// Two-branch hyperbola f(delta) = f_center +- sqrt(delta^2 + omega_c^2)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CrossingFit {
    /// Minimum branch separation (Hz).
    pub omega_c: f64,
    /// Hz.
    pub f_center: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Peak {
    /// Hz.
    pub frequency: f64,
    /// Full width at half maximum (Hz).
    pub width: f64,
    /// Height above the local baseline.
    pub height: f64,
}

/// Pure envelope model A exp(-t/decay_time) + offset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecayFit {
    pub amplitude: f64,
    /// Seconds; +inf when flat.
    pub decay_time: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CrosstalkRatio {
    /// Undriven oscillation amplitude over driven, at the driven qubit's
    /// fitted frequency.
    pub ratio: f64,
    /// True when the undriven amplitude sat below the fit noise and the
    /// ratio was clamped to zero.
    pub clamped: bool,
    pub driven: DampedSineFit,
    pub undriven_amplitude: f64,
}

// ---------------------------------------------------------------------------
// Gauss-Newton engine
// ---------------------------------------------------------------------------

const MAX_ITERS: usize = 200;
const REL_TOL: f64 = 1e-9;

fn solve_sym<const P: usize>(a: &mut [[f64; P]; P], b: &mut [f64; P]) -> bool {
    for k in 0..P {
        let mut piv = k;
        for r in k + 1..P {
            if a[r][k].abs() > a[piv][k].abs() {
                piv = r;
            }
        }
        if a[piv][k].abs() < 1e-300 {
            return false;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for r in k + 1..P {
            let f = a[r][k] / a[k][k];
            for c in k..P {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    for k in (0..P).rev() {
        let mut s = b[k];
        for c in k + 1..P {
            s -= a[k][c] * b[c];
        }
        b[k] = s / a[k][k];
        if !b[k].is_finite() {
            return false;
        }
    }
    true
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Damped Gauss-Newton over P parameters with a numeric (central difference)
/// Jacobian, step halving, and an optional projection onto the feasible set.
/// Returns the refined parameters and their residual sum of squares; the
/// result never has a larger RSS than the seed.
fn gauss_newton<const P: usize>(
    seed: [f64; P],
    scale: [f64; P],
    n: usize,
    mut fill_residuals: impl FnMut(&[f64; P], &mut [f64]),
    project: impl Fn(&mut [f64; P]),
) -> ([f64; P], f64) {
    let mut p = seed;
    project(&mut p);
    let mut r = vec![0.0; n];
    let mut r_try = vec![0.0; n];
    fill_residuals(&p, &mut r);
    let mut rss = sum_sq(&r);
    if !rss.is_finite() {
        return (p, rss);
    }
    let mut jac = vec![[0.0f64; P]; n];
    for _ in 0..MAX_ITERS {
        // Central-difference Jacobian of the residual vector.
        for j in 0..P {
            let h = 1e-7 * scale[j].abs().max(p[j].abs()).max(1e-30);
            let mut plus = p;
            plus[j] += h;
            fill_residuals(&plus, &mut r_try);
            for (row, v) in jac.iter_mut().zip(r_try.iter()) {
                row[j] = *v;
            }
            let mut minus = p;
            minus[j] -= h;
            fill_residuals(&minus, &mut r_try);
            for (row, v) in jac.iter_mut().zip(r_try.iter()) {
                row[j] = (row[j] - v) / (2.0 * h);
            }
        }
        let mut ata = [[0.0f64; P]; P];
        let mut atr = [0.0f64; P];
        for (row, res) in jac.iter().zip(r.iter()) {
            for i in 0..P {
                for j in 0..P {
                    ata[i][j] += row[i] * row[j];
                }
                atr[i] -= row[i] * res;
            }
        }
        if !solve_sym(&mut ata, &mut atr) {
            break;
        }
        // Step halving until the step actually reduces the RSS.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut cand = p;
            for j in 0..P {
                cand[j] += lambda * atr[j];
            }
            project(&mut cand);
            fill_residuals(&cand, &mut r_try);
            let rss_cand = sum_sq(&r_try);
            if rss_cand.is_finite() && rss_cand < rss {
                let rel = (0..P)
                    .map(|j| (cand[j] - p[j]).abs() / scale[j].abs().max(p[j].abs()).max(1e-30))
                    .fold(0.0f64, f64::max);
                p = cand;
                core::mem::swap(&mut r, &mut r_try);
                rss = rss_cand;
                accepted = true;
                if rel < REL_TOL {
                    return (p, rss);
                }
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (p, rss)
}

// ---------------------------------------------------------------------------
// Seeding helpers
// ---------------------------------------------------------------------------

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust spread: scaled median absolute deviation.
fn baseline_spread(values: &[f64], baseline: f64) -> f64 {
    let devs: Vec<f64> = values.iter().map(|y| (y - baseline).abs()).collect();
    1.4826 * median(&devs)
}

/// Discrete spectrum maximum of (y - mean) over [f_lo, f_hi], 4x oversampled
/// in frequency. Candidates within 5% of the top magnitude tie-break to the
/// lowest frequency. Returns (frequency, amplitude estimate, phase estimate).
fn spectral_seed(t: &[f64], y: &[f64], f_lo: f64, f_hi: f64) -> (f64, f64, f64) {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let mean = y.iter().sum::<f64>() / n as f64;
    let df = 0.25 / span;
    let k_lo = libm::ceil(f_lo / df).max(1.0) as u64;
    let k_hi = libm::floor(f_hi / df).max(k_lo as f64) as u64;
    let transform = |f: f64| -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        let w = crate::device::TWO_PI * f;
        for (&tj, &yj) in t.iter().zip(y.iter()) {
            let (s, c) = libm::sincos(w * (tj - t[0]));
            re += (yj - mean) * c;
            im -= (yj - mean) * s;
        }
        (re, im)
    };
    let mut best_mag = 0.0f64;
    let mut mags = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in k_lo..=k_hi {
        let (re, im) = transform(k as f64 * df);
        let mag = libm::sqrt(re * re + im * im);
        mags.push(mag);
        if mag > best_mag {
            best_mag = mag;
        }
    }
    let mut pick = k_lo;
    for (i, mag) in mags.iter().enumerate() {
        if *mag >= 0.95 * best_mag {
            pick = k_lo + i as u64;
            break;
        }
    }
    let f = pick as f64 * df;
    let (re, im) = transform(f);
    // y ~ A cos(2 pi f t + phi): the stationary term of sum y e^{-i 2 pi f t}
    // is (n A / 2) e^{i phi}.
    let amp = 2.0 * libm::sqrt(re * re + im * im) / n as f64;
    let phase = libm::atan2(im, re);
    (f, amp, phase)
}

fn check_trace(t: &[f64], y: &[f64], min_len: usize) -> Result<(), FitError> {
    if t.len() != y.len() {
        return Err(FitError::BadInput {
            reason: "time and value arrays differ in length",
        });
    }
    if t.len() < min_len {
        return Err(FitError::BadInput {
            reason: "too few points",
        });
    }
    for pair in t.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(FitError::BadInput {
                reason: "times must be strictly increasing",
            });
        }
    }
    if t.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(FitError::BadInput {
            reason: "non-finite sample",
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Peaks and avoided crossings
// ---------------------------------------------------------------------------

/// Width (FWHM) all peak refinements are seeded with; the weak continuous
/// probe produces roughly this linewidth.
pub const PEAK_WIDTH_SEED: f64 = 3e6;

fn lorentzian(f: f64, p: &[f64; 4]) -> f64 {
    // p = [center, fwhm, height, baseline]
    let half = 0.5 * p[1];
    p[3] + p[2] * half * half / ((f - p[0]) * (f - p[0]) + half * half)
}

/// Local maxima above the noise floor, each refined by a local Lorentzian
/// least-squares fit; at most the two highest are returned, sorted by
/// frequency. The floor is three robust spreads above the median response.
pub fn extract_peaks(freqs: &[f64], response: &[f64]) -> Result<Vec<Peak>, FitError> {
    check_trace(freqs, response, 5)?;
    let n = freqs.len();
    let baseline = median(response);
    let spread = baseline_spread(response, baseline);
    let floor = baseline + 3.0 * spread;
    let top = response.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > floor) {
        return Err(FitError::NoPeak);
    }
    // Strict rise on the left, non-strict on the right tolerates plateaus.
    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| {
            response[i] > response[i - 1] && response[i] >= response[i + 1] && response[i] > floor
        })
        .collect();
    if candidates.is_empty() {
        return Err(FitError::NoPeak);
    }
    candidates.sort_unstable_by(|&a, &b| {
        response[b]
            .partial_cmp(&response[a])
            .expect("finite response")
    });
    let mut picked: Vec<usize> = Vec::new();
    for &i in &candidates {
        if picked
            .iter()
            .all(|&j| (freqs[i] - freqs[j]).abs() > 2.0 * PEAK_WIDTH_SEED)
        {
            picked.push(i);
            if picked.len() == 2 {
                break;
            }
        }
    }

    let mut peaks: Vec<Peak> = picked
        .iter()
        .map(|&i| {
            // Window: +-3 seed widths around the candidate, at least 7 points.
            let mut lo = freqs.partition_point(|&f| f < freqs[i] - 3.0 * PEAK_WIDTH_SEED);
            let mut hi = freqs.partition_point(|&f| f <= freqs[i] + 3.0 * PEAK_WIDTH_SEED);
            while hi - lo < 7 && (lo > 0 || hi < n) {
                if lo > 0 {
                    lo -= 1;
                }
                if hi < n {
                    hi += 1;
                }
            }
            let fs = &freqs[lo..hi];
            let ys = &response[lo..hi];
            let seed = [freqs[i], PEAK_WIDTH_SEED, response[i] - baseline, baseline];
            let scale = [
                PEAK_WIDTH_SEED,
                PEAK_WIDTH_SEED,
                seed[2].abs().max(1e-6),
                seed[2].abs().max(1e-6),
            ];
            let (p, _) = gauss_newton(
                seed,
                scale,
                fs.len(),
                |p, out| {
                    for (k, (&f, &y)) in fs.iter().zip(ys.iter()).enumerate() {
                        out[k] = lorentzian(f, p) - y;
                    }
                },
                |p| {
                    p[1] = p[1].abs().max(1e-3 * PEAK_WIDTH_SEED);
                },
            );
            Peak {
                frequency: p[0],
                width: p[1],
                height: p[2],
            }
        })
        .collect();
    peaks.sort_unstable_by(|a, b| a.frequency.partial_cmp(&b.frequency).expect("finite"));
    Ok(peaks)
}

/// Fit the two-branch hyperbola f(delta) = f_center +- sqrt(delta^2 +
/// omega_c^2)/2 to (detuning, peak frequency) observations. Each observation
/// is assigned to the branch nearer its value; the reported omega_c is the
/// minimum separation of the fitted branches.
pub fn fit_avoided_crossing(points: &[(f64, f64)]) -> Result<CrossingFit, FitError> {
    if points.len() < 5 {
        return Err(FitError::BadInput {
            reason: "need at least 5 observations",
        });
    }
    if points.iter().any(|(d, f)| !d.is_finite() || !f.is_finite()) {
        return Err(FitError::BadInput {
            reason: "non-finite observation",
        });
    }
    let mut deltas: Vec<f64> = points.iter().map(|(d, _)| *d).collect();
    deltas.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    deltas.dedup_by(|a, b| a == b);
    if deltas.len() < 5 {
        return Err(FitError::BadInput {
            reason: "need at least 5 distinct detunings",
        });
    }
    let span = deltas[deltas.len() - 1] - deltas[0];

    // Seed the center from all frequencies, the splitting from the smallest
    // two-peak separation (falling back to twice the smallest distance to
    // the center when no detuning carries both branches).
    let c0 = points.iter().map(|(_, f)| *f).sum::<f64>() / points.len() as f64;
    let mut min_sep = f64::INFINITY;
    for &d in &deltas {
        let mut fs: Vec<f64> = points
            .iter()
            .filter(|(dd, _)| *dd == d)
            .map(|(_, f)| *f)
            .collect();
        fs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        if fs.len() >= 2 {
            min_sep = min_sep.min(fs[fs.len() - 1] - fs[0]);
        }
    }
    let w0 = if min_sep.is_finite() {
        min_sep
    } else {
        2.0 * points
            .iter()
            .map(|(_, f)| (f - c0).abs())
            .fold(f64::INFINITY, f64::min)
    };
    if span < w0 {
        return Err(FitError::DegenerateFit { span, seed: w0 });
    }

    let seed = [c0, w0.max(1e-6 * span.max(1.0))];
    let scale = [span.max(w0).max(1.0), span.max(w0).max(1.0)];
    let (p, rss) = gauss_newton(
        seed,
        scale,
        points.len(),
        |p, out| {
            for (k, &(d, f)) in points.iter().enumerate() {
                let half = 0.5 * libm::sqrt(d * d + p[1] * p[1]);
                let model = if f >= p[0] { p[0] + half } else { p[0] - half };
                out[k] = model - f;
            }
        },
        |p| {
            p[1] = p[1].abs();
        },
    );
    Ok(CrossingFit {
        omega_c: p[1].abs(),
        f_center: p[0],
        residual_rms: libm::sqrt(rss / points.len() as f64),
    })
}

// ---------------------------------------------------------------------------
// Damped sinusoids
// ---------------------------------------------------------------------------

fn damped_cos(t: f64, p: &[f64; 5]) -> f64 {
    // p = [amplitude, frequency, phase, decay rate, offset]
    p[0] * libm::exp(-p[3] * t) * libm::cos(crate::device::TWO_PI * p[1] * t + p[2]) + p[4]
}

fn decay_model(t: f64, p: &[f64; 3]) -> f64 {
    // p = [amplitude, decay rate, offset]
    p[0] * libm::exp(-p[1] * t) + p[2]
}

fn fit_decay_params(t: &[f64], y: &[f64]) -> ([f64; 3], f64) {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let tail = y[(3 * n / 4).min(n - 1)..].iter().sum::<f64>()
        / (n - (3 * n / 4).min(n - 1)) as f64;
    let a0 = y[0] - tail;
    let seed = [a0, 1.0 / span.max(1e-30), tail];
    let scale = [a0.abs().max(0.1), 1.0 / span.max(1e-30), tail.abs().max(0.1)];
    gauss_newton(
        seed,
        scale,
        n,
        |p, out| {
            for (k, (&tj, &yj)) in t.iter().zip(y.iter()).enumerate() {
                out[k] = decay_model(tj - t[0], p) - yj;
            }
        },
        |p| {
            p[1] = p[1].max(0.0);
        },
    )
}

/// Fit A exp(-t/tau) + B. Useful as the null model against which a damped
/// oscillation must win to count as resolved.
pub fn fit_exponential_decay(t: &[f64], y: &[f64]) -> Result<DecayFit, FitError> {
    check_trace(t, y, 4)?;
    let (p, rss) = fit_decay_params(t, y);
    Ok(DecayFit {
        amplitude: p[0],
        decay_time: if p[1] > 0.0 { 1.0 / p[1] } else { f64::INFINITY },
        offset: p[2],
        residual_rms: libm::sqrt(rss / t.len() as f64),
    })
}

/// Fit A exp(-t/tau) cos(2 pi f t + phi) + B with the frequency seeded at the
/// discrete spectrum maximum and everything refined together.
///
/// The window must span at least one period of the seed frequency unless
/// `allow_sub_period` explicitly opts into a sub-period fit (resolution-floor
/// studies do). When a pure decay describes the trace at least as well as
/// the oscillation, the amplitude-zero branch is returned: amplitude and
/// frequency zero with the envelope parameters from the decay fit.
pub fn fit_damped_sine(
    t: &[f64],
    y: &[f64],
    allow_sub_period: bool,
) -> Result<DampedSineFit, FitError> {
    check_trace(t, y, 8)?;
    let n = t.len();
    let span = t[n - 1] - t[0];
    let dt_typ = span / (n - 1) as f64;
    let (f0, a0, phi0) = spectral_seed(t, y, 0.0, 0.5 / dt_typ);
    if span * f0 < 1.0 && !allow_sub_period {
        return Err(FitError::BadInput {
            reason: "window spans less than one period of the seed frequency",
        });
    }
    let offset0 = y.iter().sum::<f64>() / n as f64;
    let seed = [a0, f0, phi0, 0.5 / span, offset0];
    let scale = [
        a0.abs().max(0.05),
        f0.max(1.0 / span),
        1.0,
        1.0 / span,
        offset0.abs().max(0.05),
    ];
    let mut r = vec![0.0; n];
    let fill = |p: &[f64; 5], out: &mut [f64]| {
        for (k, (&tj, &yj)) in t.iter().zip(y.iter()).enumerate() {
            out[k] = damped_cos(tj - t[0], p) - yj;
        }
    };
    fill(&seed, &mut r);
    let rss_seed = sum_sq(&r);
    let (p, rss) = gauss_newton(seed, scale, n, fill, |p| {
        p[1] = p[1].abs();
        p[3] = p[3].max(0.0);
    });
    if !(rss.is_finite() && rss <= rss_seed * (1.0 + 1e-12) + 1e-300) {
        return Err(FitError::FitDiverged);
    }

    // Degenerate-oscillation guard: when the pure envelope matches the data
    // at least as well, report the amplitude-zero branch instead of a
    // meaningless frequency.
    let (pd, rss_d) = fit_decay_params(t, y);
    if rss_d <= rss * (1.0 + 1e-9) {
        return Ok(DampedSineFit {
            amplitude: 0.0,
            frequency: 0.0,
            decay_time: if pd[1] > 0.0 { 1.0 / pd[1] } else { f64::INFINITY },
            phase: 0.0,
            offset: pd[2],
            residual_rms: libm::sqrt(rss_d / n as f64),
        });
    }

    // Normalize: amplitude >= 0 (phase absorbs the sign, kept in (-pi, pi]).
    let mut amp = p[0];
    let mut phase = p[2];
    if amp < 0.0 {
        amp = -amp;
        phase += core::f64::consts::PI;
    }
    phase = libm::atan2(libm::sin(phase), libm::cos(phase));
    Ok(DampedSineFit {
        amplitude: amp,
        frequency: p[1],
        decay_time: if p[3] > 0.0 { 1.0 / p[3] } else { f64::INFINITY },
        phase,
        offset: p[4],
        residual_rms: libm::sqrt(rss / n as f64),
    })
}

/// Damped cosine fit with the frequency pinned; seeds from the spectrum at
/// that frequency. Returns (params [amp, phase, rate, offset], rss).
fn fit_fixed_frequency(t: &[f64], y: &[f64], f: f64) -> ([f64; 4], f64) {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for (&tj, &yj) in t.iter().zip(y.iter()) {
        let (s, c) = libm::sincos(crate::device::TWO_PI * f * (tj - t[0]));
        re += (yj - mean) * c;
        im -= (yj - mean) * s;
    }
    let a0 = 2.0 * libm::sqrt(re * re + im * im) / n as f64;
    let phi0 = libm::atan2(im, re);
    let seed = [a0, phi0, 0.5 / span, mean];
    let scale = [a0.abs().max(0.05), 1.0, 1.0 / span, mean.abs().max(0.05)];
    gauss_newton(
        seed,
        scale,
        n,
        |p, out| {
            let q = [p[0], f, p[1], p[2], p[3]];
            for (k, (&tj, &yj)) in t.iter().zip(y.iter()).enumerate() {
                out[k] = damped_cos(tj - t[0], &q) - yj;
            }
        },
        |p| {
            p[2] = p[2].max(0.0);
        },
    )
}

/// Amplitude ratio of the undriven qubit's response to the driven qubit's
/// Rabi oscillation, both fitted at the driven qubit's frequency. The ratio
/// clamps to zero (flagged) when the undriven amplitude is statistically
/// indistinguishable from the fit residual.
pub fn crosstalk_ratio(
    t: &[f64],
    driven: &[f64],
    undriven: &[f64],
) -> Result<CrosstalkRatio, FitError> {
    check_trace(t, driven, 8)?;
    check_trace(t, undriven, 8)?;
    let fit_d = fit_damped_sine(t, driven, false)?;
    if fit_d.amplitude <= 0.0 || fit_d.frequency <= 0.0 {
        return Err(FitError::FitDiverged);
    }
    let (pu, rss_u) = fit_fixed_frequency(t, undriven, fit_d.frequency);
    let amp_u = pu[0].abs();
    let rms_u = libm::sqrt(rss_u / t.len() as f64);
    // Amplitude standard error for a sinusoid in white residuals is about
    // rms * sqrt(2/n); below two of those the amplitude is noise.
    let noise_floor = 2.0 * rms_u * libm::sqrt(2.0 / t.len() as f64);
    let clamped = !(amp_u > noise_floor);
    Ok(CrosstalkRatio {
        ratio: if clamped { 0.0 } else { amp_u / fit_d.amplitude },
        clamped,
        driven: fit_d,
        undriven_amplitude: amp_u,
    })
}
