//! Metastable flux branches of the coupler loop and the bias-rail reset.
//!
//! With the loop inductance sum L = l_s + l_m + l the coupler behaves like an
//! RF SQUID with hysteresis parameter beta = 2 pi i_c0 L / (2 Phi_0) ~ 9-10.
//! Current conservation in the loop reads, in units of i_c0,
//! `i = sin(delta) + delta / beta`
//! (the halved net inductance of the two parallel loop paths cancels a
//! factor of two against beta). For beta > 1 several junction phases delta
//! solve this at one bias; a solution is stable iff cos(delta) > -1/beta.
//! Sweeping the bias past a branch's turning point forces a jump to another
//! branch, which is both the origin of flux hysteresis and the lever used to
//! reset the coupler: cycling the bias between rails that destabilise every
//! branch but the central one pumps the occupation back to that branch.

use alloc::vec::Vec;

use crate::device::{DeviceParams, PHI_0, TWO_PI};

/// Hysteresis parameter beta = 2 pi i_c0 (l_s + l_m + l) / (2 Phi_0).
pub fn beta(params: &DeviceParams) -> f64 {
    TWO_PI * params.i_c0 * params.loop_inductance() / (2.0 * PHI_0)
}

/// Normalised loop bias supported by junction phase `delta`:
/// sin(delta) + delta/beta, in units of i_c0.
pub fn branch_equation(delta: f64, beta: f64) -> f64 {
    libm::sin(delta) + delta / beta
}

/// One root of the branch equation at a fixed bias.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchPoint {
    /// Junction phase (rad).
    pub delta: f64,
    /// Coupler bias (A).
    pub i_cb: f64,
    /// cos(delta) > -1/beta.
    pub stable: bool,
    /// 0 for the stable root nearest delta = 0, +-1, +-2 ... outward in
    /// delta. Unstable roots are numbered the same way on their own ladder
    /// (the id is only unique together with `stable`).
    pub branch_id: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HysteresisError {
    /// No stable root exists in the search window at this bias.
    NoStableBranch { i_cb: f64 },
    /// The starting point does not sit on a stable branch.
    NotOnBranch { delta: f64, i_cb: f64 },
    /// Reset would destabilise the target branch somewhere inside the rails.
    TargetNotStable { branch_id: i32 },
    /// Reset inputs are malformed (rails, q, masses).
    BadReset { reason: &'static str },
}

impl core::fmt::Display for HysteresisError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HysteresisError::NoStableBranch { i_cb } => {
                write!(f, "no stable flux branch at bias {:.4e} A", i_cb)
            }
            HysteresisError::NotOnBranch { delta, i_cb } => write!(
                f,
                "({:.6} rad, {:.4e} A) is not on a stable branch",
                delta, i_cb
            ),
            HysteresisError::TargetNotStable { branch_id } => write!(
                f,
                "target branch {branch_id} loses stability inside the reset rails"
            ),
            HysteresisError::BadReset { reason } => write!(f, "bad reset input: {reason}"),
        }
    }
}

impl core::error::Error for HysteresisError {}

/// All roots of the branch equation at bias `i_cb`, sorted by delta, with
/// stability flags and branch ids. The search window is |delta| <= beta + 2 pi,
/// which covers every branch that can carry the biases the model allows.
pub fn enumerate_branches(params: &DeviceParams, i_cb: f64) -> Vec<BranchPoint> {
    let b = beta(params);
    let i = i_cb / params.i_c0;
    let window = b + TWO_PI;
    let n_grid = 4096usize;
    let h = 2.0 * window / n_grid as f64;
    let f = |d: f64| branch_equation(d, b) - i;

    let mut roots: Vec<f64> = Vec::new();
    let mut d_prev = -window;
    let mut f_prev = f(d_prev);
    for k in 1..=n_grid {
        let d = -window + h * k as f64;
        let fv = f(d);
        if f_prev == 0.0 {
            roots.push(d_prev);
        } else if f_prev * fv < 0.0 {
            roots.push(bisect_root(&f, d_prev, d));
        }
        d_prev = d;
        f_prev = fv;
    }
    if f_prev == 0.0 {
        roots.push(d_prev);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let stable_flag = |d: f64| libm::cos(d) > -1.0 / b;
    let mut points: Vec<BranchPoint> = roots
        .iter()
        .map(|&delta| BranchPoint {
            delta,
            i_cb,
            stable: stable_flag(delta),
            branch_id: 0,
        })
        .collect();
    assign_ids(&mut points);
    points
}

/// Bisection refined by a couple of Newton steps; the residual of the
/// returned root is far below the 1e-10 bound the callers rely on.
fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Ids: stable roots numbered outward from the one nearest delta = 0;
/// unstable roots numbered outward from the central stable root's position.
fn assign_ids(points: &mut [BranchPoint]) {
    let stable_idx: Vec<usize> = (0..points.len()).filter(|&k| points[k].stable).collect();
    let unstable_idx: Vec<usize> = (0..points.len()).filter(|&k| !points[k].stable).collect();
    let center_delta = if let Some(&c) = stable_idx
        .iter()
        .min_by(|&&a, &&b| cmp_abs(points[a].delta, points[b].delta))
    {
        let central = c;
        for (rank, &k) in stable_idx.iter().enumerate() {
            let central_rank = stable_idx.iter().position(|&x| x == central).unwrap();
            points[k].branch_id = rank as i32 - central_rank as i32;
        }
        points[central].delta
    } else {
        0.0
    };
    // Unstable ladder: 1-based away from the central stable phase.
    let below = unstable_idx
        .iter()
        .filter(|&&k| points[k].delta < center_delta)
        .count();
    for (rank, &k) in unstable_idx.iter().enumerate() {
        let r = rank as i32 - below as i32;
        points[k].branch_id = if r >= 0 { r + 1 } else { r };
    }
}

fn cmp_abs(a: f64, b: f64) -> core::cmp::Ordering {
    a.abs().partial_cmp(&b.abs()).expect("finite deltas")
}

/// Result of dragging a branch occupation to a new bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowOutcome {
    pub point: BranchPoint,
    /// True when a turning point was crossed and the occupation jumped to
    /// the stable branch at the target bias nearest the vanished root.
    pub switched: bool,
}

/// Adiabatically sweep the bias from `start.i_cb` to `new_i_cb`, tracking the
/// root by continuation. Crossing the branch's turning point switches to the
/// stable branch at `new_i_cb` whose delta is nearest the vanished root.
pub fn follow_branch(
    params: &DeviceParams,
    start: &BranchPoint,
    new_i_cb: f64,
) -> Result<FollowOutcome, HysteresisError> {
    let b = beta(params);
    let i0 = start.i_cb / params.i_c0;
    let residual = branch_equation(start.delta, b) - i0;
    if residual.abs() > 1e-6 || !(libm::cos(start.delta) > -1.0 / b) {
        return Err(HysteresisError::NotOnBranch {
            delta: start.delta,
            i_cb: start.i_cb,
        });
    }
    let i1 = new_i_cb / params.i_c0;

    if b <= 1.0 {
        // Single-valued regime: one root, always stable, no switching.
        let point = solve_in_window(b, i1, -(b + TWO_PI), b + TWO_PI)
            .map(|delta| BranchPoint {
                delta,
                i_cb: new_i_cb,
                stable: true,
                branch_id: 0,
            })
            .ok_or(HysteresisError::NoStableBranch { i_cb: new_i_cb })?;
        return Ok(FollowOutcome {
            point,
            switched: false,
        });
    }

    // Stability windows are |delta - 2 pi k| < acos(-1/beta); the equation is
    // monotone inside a window, so each window holds at most one stable root.
    let half_width = libm::acos(-1.0 / b);
    let k = libm::round(start.delta / TWO_PI);
    let lo = TWO_PI * k - half_width;
    let hi = TWO_PI * k + half_width;

    let n_steps = libm::ceil((i1 - i0).abs() / 0.002).max(1.0) as usize;
    let mut delta = start.delta;
    for s in 1..=n_steps {
        let i = i0 + (i1 - i0) * s as f64 / n_steps as f64;
        match solve_in_window(b, i, lo, hi) {
            Some(d) => delta = d,
            None => {
                // Turning point crossed between sub-steps. The root left
                // through the window edge on the side the bias pushed it.
                let vanished = if i > branch_equation(hi, b) { hi } else { lo };
                let landing = enumerate_branches(params, new_i_cb)
                    .into_iter()
                    .filter(|p| p.stable)
                    .min_by(|p, q| {
                        cmp_abs(p.delta - vanished, q.delta - vanished)
                    })
                    .ok_or(HysteresisError::NoStableBranch { i_cb: new_i_cb })?;
                return Ok(FollowOutcome {
                    point: landing,
                    switched: true,
                });
            }
        }
    }
    let point = enumerate_branches(params, new_i_cb)
        .into_iter()
        .filter(|p| p.stable)
        .min_by(|p, q| cmp_abs(p.delta - delta, q.delta - delta))
        .ok_or(HysteresisError::NoStableBranch { i_cb: new_i_cb })?;
    Ok(FollowOutcome {
        point,
        switched: false,
    })
}

/// Root of branch_equation(delta) = i inside [lo, hi], where the equation is
/// monotone increasing. None when the level leaves the window's range.
fn solve_in_window(b: f64, i: f64, lo: f64, hi: f64) -> Option<f64> {
    let f_lo = branch_equation(lo, b) - i;
    let f_hi = branch_equation(hi, b) - i;
    if f_lo > 0.0 || f_hi < 0.0 {
        return None;
    }
    Some(bisect_root(&|d| branch_equation(d, b) - i, lo, hi))
}

/// Bias-rail reset schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResetConfig {
    /// Lower bias rail (A).
    pub i_cb_minus: f64,
    /// Upper bias rail (A).
    pub i_cb_plus: f64,
    pub n_cycles: u32,
    /// Probability mass fraction of an eliminated branch that survives one
    /// cycle (calibrated so q^30 ~ 1.5e-4).
    pub per_cycle_survival_q: f64,
    pub target_branch: i32,
}

impl ResetConfig {
    /// Rails at +-0.8 i_c0 destabilise every non-central branch for
    /// beta ~ 9-10 while the central branch stays comfortably stable.
    pub fn standard(params: &DeviceParams) -> Self {
        ResetConfig {
            i_cb_minus: -0.8 * params.i_c0,
            i_cb_plus: 0.8 * params.i_c0,
            n_cycles: 30,
            per_cycle_survival_q: 0.746,
            target_branch: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BranchFate {
    pub branch_id: i32,
    /// True when the branch loses stability somewhere inside the rails and
    /// is pumped toward the target each cycle.
    pub eliminated: bool,
    pub initial_mass: f64,
    pub final_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResetOutcome {
    pub fates: Vec<BranchFate>,
    /// Total non-target mass after each cycle.
    pub nontarget_mass_per_cycle: Vec<f64>,
    /// Non-target mass after the last cycle.
    pub residual_error: f64,
}

/// Propagate a probability distribution over branch ids through `n_cycles`
/// rail sweeps. A branch is eliminated iff dragging it across
/// [i_cb_minus, i_cb_plus] crosses its turning point; each cycle moves a
/// (1 - q) fraction of every eliminated branch's mass to the target branch.
pub fn simulate_reset(
    params: &DeviceParams,
    cfg: &ResetConfig,
    initial: &[(i32, f64)],
) -> Result<ResetOutcome, HysteresisError> {
    if !(cfg.i_cb_minus < cfg.i_cb_plus) {
        return Err(HysteresisError::BadReset {
            reason: "rails must satisfy i_cb_minus < i_cb_plus",
        });
    }
    if !(cfg.per_cycle_survival_q >= 0.0 && cfg.per_cycle_survival_q <= 1.0) {
        return Err(HysteresisError::BadReset {
            reason: "per-cycle survival q must lie in [0, 1]",
        });
    }
    let mass_sum: f64 = initial.iter().map(|&(_, m)| m).sum();
    if initial.iter().any(|&(_, m)| !(m >= 0.0)) || (mass_sum - 1.0).abs() > 1e-9 {
        return Err(HysteresisError::BadReset {
            reason: "masses must be non-negative and sum to 1",
        });
    }
    for (k, &(id, _)) in initial.iter().enumerate() {
        if initial[..k].iter().any(|&(other, _)| other == id) {
            return Err(HysteresisError::BadReset {
                reason: "branch ids must be unique",
            });
        }
    }

    if branch_survives_rails(params, cfg.target_branch, cfg)? {
        // good: the reset has somewhere to park the occupation
    } else {
        return Err(HysteresisError::TargetNotStable {
            branch_id: cfg.target_branch,
        });
    }

    let mut fates: Vec<BranchFate> = Vec::with_capacity(initial.len());
    for &(id, mass) in initial {
        let eliminated = if id == cfg.target_branch {
            false
        } else {
            !branch_survives_rails(params, id, cfg)?
        };
        fates.push(BranchFate {
            branch_id: id,
            eliminated,
            initial_mass: mass,
            final_mass: mass,
        });
    }

    let q = cfg.per_cycle_survival_q;
    let mut per_cycle = Vec::with_capacity(cfg.n_cycles as usize);
    for _ in 0..cfg.n_cycles {
        let mut reclaimed = 0.0;
        for fate in fates.iter_mut() {
            if fate.eliminated {
                reclaimed += fate.final_mass * (1.0 - q);
                fate.final_mass *= q;
            }
        }
        if let Some(target) = fates
            .iter_mut()
            .find(|f| f.branch_id == cfg.target_branch)
        {
            target.final_mass += reclaimed;
        }
        per_cycle.push(
            fates
                .iter()
                .filter(|f| f.branch_id != cfg.target_branch)
                .map(|f| f.final_mass)
                .sum(),
        );
    }
    let residual = per_cycle.last().copied().unwrap_or_else(|| {
        fates
            .iter()
            .filter(|f| f.branch_id != cfg.target_branch)
            .map(|f| f.final_mass)
            .sum()
    });
    Ok(ResetOutcome {
        fates,
        nontarget_mass_per_cycle: per_cycle,
        residual_error: residual,
    })
}

/// Does branch `id` stay stable while dragged across both rails? Seeded at
/// the bias where its phase is exactly 2 pi id (always a stable root).
fn branch_survives_rails(
    params: &DeviceParams,
    id: i32,
    cfg: &ResetConfig,
) -> Result<bool, HysteresisError> {
    let b = beta(params);
    let delta_seed = TWO_PI * id as f64;
    let seed = BranchPoint {
        delta: delta_seed,
        i_cb: params.i_c0 * delta_seed / b,
        stable: true,
        branch_id: id,
    };
    let down = follow_branch(params, &seed, cfg.i_cb_minus)?;
    if down.switched {
        return Ok(false);
    }
    let up = follow_branch(params, &seed, cfg.i_cb_plus)?;
    Ok(!up.switched)
}

/// Qubit frequency shift (Hz) produced by the circulating current of a
/// non-central branch: bias_shift_coeff * Phi_0 delta / (2 pi (l_s+l_m+l)).
pub fn branch_frequency_shift(params: &DeviceParams, point: &BranchPoint) -> f64 {
    params.bias_shift_coeff * PHI_0 * point.delta / (TWO_PI * params.loop_inductance())
}
