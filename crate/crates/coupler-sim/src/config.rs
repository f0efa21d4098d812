//! Run configuration: one JSON file, explicit units in every key name.
//!
//! Every key carries its unit as a suffix (i_c0_uA, l_s_pH, dt_ns) so a
//! config cannot silently mix picohenries with nanohenries. Missing keys
//! fall back to the published device constants; unknown keys are rejected so
//! a typo cannot revert a parameter to its default unnoticed.

use std::fmt;
use std::fs;
use std::path::Path;

use coupler_core::device::{DeviceParams, TWO_PI};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: String,
        detail: String,
    },
    /// Malformed JSON or an unknown key; `detail` carries serde's line,
    /// column and key context verbatim.
    Parse {
        detail: String,
    },
    Validation {
        key: &'static str,
        constraint: &'static str,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, detail } => write!(f, "cannot read config {path}: {detail}"),
            ConfigError::Parse { detail } => write!(f, "config parse error: {detail}"),
            ConfigError::Validation { key, constraint } => {
                write!(f, "config key {key}: {constraint}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Circuit and qubit constants. Defaults are the published device values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceBlock {
    #[serde(rename = "i_c0_uA")]
    pub i_c0_ua: f64,
    #[serde(rename = "m_pH")]
    pub m_ph: f64,
    #[serde(rename = "l_m_pH")]
    pub l_m_ph: f64,
    #[serde(rename = "l_s_pH")]
    pub l_s_ph: f64,
    #[serde(rename = "l_pH")]
    pub l_ph: f64,
    #[serde(rename = "l_z_nH")]
    pub l_z_nh: f64,
    #[serde(rename = "c_pF")]
    pub c_pf: f64,
    #[serde(rename = "f10a_GHz")]
    pub f10a_ghz: f64,
    #[serde(rename = "f10b_GHz")]
    pub f10b_ghz: f64,
    #[serde(rename = "t1a_ns")]
    pub t1a_ns: f64,
    #[serde(rename = "t1b_ns")]
    pub t1b_ns: f64,
    pub n_a: f64,
    pub n_b: f64,
    #[serde(rename = "omega_c0_GHz")]
    pub omega_c0_ghz: f64,
    #[serde(rename = "bias_shift_coeff_MHz_per_uA")]
    pub bias_shift_coeff_mhz_per_ua: f64,
    /// Additive correction to the mutual inductance in the coupling formula.
    /// 0 keeps the published constants (zero coupling just out of reach);
    /// 19 puts the off bias at ~0.082 i_c0 as on the calibrated device.
    #[serde(rename = "l_offset_pH")]
    pub l_offset_ph: f64,
}

impl Default for DeviceBlock {
    fn default() -> Self {
        DeviceBlock {
            i_c0_ua: 1.58,
            m_ph: 190.0,
            l_m_ph: 390.0,
            l_s_ph: 2657.0,
            l_ph: 750.0,
            l_z_nh: 9.0,
            c_pf: 1.0,
            f10a_ghz: 6.0,
            f10b_ghz: 5.8,
            t1a_ns: 350.0,
            t1b_ns: 350.0,
            n_a: 5.0,
            n_b: 5.0,
            omega_c0_ghz: 30.0,
            bias_shift_coeff_mhz_per_ua: 1.0,
            l_offset_ph: 0.0,
        }
    }
}

/// Integrator and sampling controls shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub dt_ns: f64,
    /// Drop the counter-rotating drive and coupling terms (default true).
    pub rwa: bool,
    /// Exact-probability mode when true. Leave unset and give `shots` to
    /// sample instead; setting both is rejected.
    pub ensemble: Option<bool>,
    /// Shots per grid point; unset means ensemble mode.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        SimulationBlock {
            dt_ns: 0.05,
            rwa: true,
            ensemble: None,
            shots: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMass {
    pub branch: i32,
    pub mass: f64,
}

/// Coupler flux-reset schedule. Defaults follow the published recipe:
/// rails at +-0.8 i_c0, 30 cycles, per-cycle survival q = 0.746.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResetBlock {
    #[serde(rename = "i_cb_minus_uA")]
    pub i_cb_minus_ua: f64,
    #[serde(rename = "i_cb_plus_uA")]
    pub i_cb_plus_ua: f64,
    pub n_cycles: u32,
    pub q: f64,
    pub target_branch: i32,
    /// Starting distribution over flux branches. The default parks all the
    /// probability mass on branch 1, the worst single-branch case.
    pub initial: Vec<InitialMass>,
}

impl Default for ResetBlock {
    fn default() -> Self {
        ResetBlock {
            i_cb_minus_ua: -0.8 * 1.58,
            i_cb_plus_ua: 0.8 * 1.58,
            n_cycles: 30,
            q: 0.746,
            target_branch: 0,
            initial: vec![InitialMass {
                branch: 1,
                mass: 1.0,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplerCurveBlock {
    #[serde(rename = "bias_min_uA")]
    pub bias_min_ua: f64,
    #[serde(rename = "bias_max_uA")]
    pub bias_max_ua: f64,
    pub n_bias: usize,
    /// Samples per swap trace; the span per bias adapts to the expected
    /// frequency.
    pub n_t: usize,
}

impl Default for CouplerCurveBlock {
    fn default() -> Self {
        CouplerCurveBlock {
            bias_min_ua: -0.9 * 1.58,
            bias_max_ua: 0.9 * 1.58,
            n_bias: 41,
            n_t: 121,
        }
    }
}

/// Two-tone spectroscopy grid. The coupler operating point is given either
/// directly (`i_cb_uA`) or as a target coupling (`omega_c_MHz`, signed:
/// this circuit reaches negative values and, when calibrated, a small
/// positive range around zero bias). Unset means a -40 MHz target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectroscopyBlock {
    #[serde(rename = "i_cb_uA")]
    pub i_cb_ua: Option<f64>,
    #[serde(rename = "omega_c_MHz")]
    pub omega_c_mhz: Option<f64>,
    /// Full width of the qubit-qubit detuning sweep, centred on zero.
    #[serde(rename = "delta_span_MHz")]
    pub delta_span_mhz: f64,
    pub n_delta: usize,
    /// Full width of the probe sweep, centred on qubit A's idle frequency.
    #[serde(rename = "probe_span_MHz")]
    pub probe_span_mhz: f64,
    pub n_probe: usize,
    /// Probe Rabi amplitude; sets the power-broadened linewidth (~3 MHz at
    /// the default together with T1).
    #[serde(rename = "probe_rabi_MHz")]
    pub probe_rabi_mhz: f64,
}

impl Default for SpectroscopyBlock {
    fn default() -> Self {
        SpectroscopyBlock {
            i_cb_ua: None,
            omega_c_mhz: None,
            delta_span_mhz: 120.0,
            n_delta: 81,
            probe_span_mhz: 160.0,
            n_probe: 81,
            probe_rabi_mhz: 1.5,
        }
    }
}

/// Measurement-crosstalk scan. Coupler points come either as explicit
/// biases or as target couplings; unset means targets {-9, -17} MHz (both
/// reachable with the published constants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosstalkBlock {
    #[serde(rename = "i_cb_uA_list")]
    pub i_cb_ua_list: Option<Vec<f64>>,
    #[serde(rename = "omega_c_MHz_list")]
    pub omega_c_mhz_list: Option<Vec<f64>>,
    pub t_max_ns: f64,
    pub n_t: usize,
    #[serde(rename = "rabi_MHz")]
    pub rabi_mhz: f64,
}

impl Default for CrosstalkBlock {
    fn default() -> Self {
        CrosstalkBlock {
            i_cb_ua_list: None,
            omega_c_mhz_list: None,
            t_max_ns: 200.0,
            n_t: 81,
            rabi_mhz: 20.0,
        }
    }
}

/// Swap chevron grid: detuning sweep against swap plateau length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChevronBlock {
    #[serde(rename = "i_cb_uA")]
    pub i_cb_ua: Option<f64>,
    #[serde(rename = "omega_c_MHz")]
    pub omega_c_mhz: Option<f64>,
    #[serde(rename = "delta_span_MHz")]
    pub delta_span_mhz: f64,
    pub n_delta: usize,
    pub t_max_ns: f64,
    pub n_t: usize,
}

impl Default for ChevronBlock {
    fn default() -> Self {
        ChevronBlock {
            i_cb_ua: None,
            omega_c_mhz: None,
            delta_span_mhz: 200.0,
            n_delta: 61,
            t_max_ns: 300.0,
            n_t: 121,
        }
    }
}

/// Smallest-resolvable-coupling study. Couplings are injected directly
/// (magnitudes; the sign does not affect the swap frequency), the qubits sit
/// on resonance, and each trace is shot-sampled so the resolvability verdict
/// is a statistical statement rather than a numerical-precision one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinCouplingBlock {
    #[serde(rename = "omega_c_MHz_list")]
    pub omega_c_mhz_list: Vec<f64>,
    pub t1_ns: f64,
    pub t_max_ns: f64,
    pub n_t: usize,
    pub shots: u64,
    pub f_ratio_threshold: f64,
}

impl Default for MinCouplingBlock {
    fn default() -> Self {
        MinCouplingBlock {
            omega_c_mhz_list: vec![0.5, 0.3, 0.1, 0.0],
            t1_ns: 350.0,
            t_max_ns: 500.0,
            n_t: 101,
            shots: 1000,
            f_ratio_threshold: 4.0,
        }
    }
}

/// Flux-branch map window. The default spans +-1.33 i_c0, wide enough to
/// show five distinct stable branches at the published beta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchMapBlock {
    #[serde(rename = "bias_min_uA")]
    pub bias_min_ua: f64,
    #[serde(rename = "bias_max_uA")]
    pub bias_max_ua: f64,
    pub n_bias: usize,
}

impl Default for BranchMapBlock {
    fn default() -> Self {
        BranchMapBlock {
            bias_min_ua: -2.1,
            bias_max_ua: 2.1,
            n_bias: 85,
        }
    }
}

/// Control-waveform dump: samples the exact rotating-frame controls the
/// propagator sees for one of the built-in sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DumpBlock {
    /// One of "swap", "spectroscopy", "crosstalk".
    pub kind: String,
    pub sample_dt_ns: f64,
    #[serde(rename = "delta_MHz")]
    pub delta_mhz: f64,
    pub t_swap_ns: f64,
}

impl Default for DumpBlock {
    fn default() -> Self {
        DumpBlock {
            kind: "swap".to_string(),
            sample_dt_ns: 0.1,
            delta_mhz: 0.0,
            t_swap_ns: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceBlock,
    pub simulation: SimulationBlock,
    pub reset: ResetBlock,
    pub coupler_curve: CouplerCurveBlock,
    pub spectroscopy: SpectroscopyBlock,
    pub crosstalk: CrosstalkBlock,
    pub chevron: ChevronBlock,
    pub min_coupling: MinCouplingBlock,
    pub branch_map: BranchMapBlock,
    pub dump: DumpBlock,
}

/// Parse config text; an empty (or whitespace-only) document resolves to
/// all defaults. The result is validated but not yet resolved.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg = if text.trim().is_empty() {
        RunConfig::default()
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            detail: e.to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Read, parse, validate and resolve a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    Ok(parse_config(&text)?.resolve())
}

fn err(key: &'static str, constraint: &'static str) -> ConfigError {
    ConfigError::Validation { key, constraint }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.device;
        let positive: [(&'static str, f64); 14] = [
            ("device.i_c0_uA", d.i_c0_ua),
            ("device.m_pH", d.m_ph),
            ("device.l_m_pH", d.l_m_ph),
            ("device.l_s_pH", d.l_s_ph),
            ("device.l_pH", d.l_ph),
            ("device.l_z_nH", d.l_z_nh),
            ("device.c_pF", d.c_pf),
            ("device.f10a_GHz", d.f10a_ghz),
            ("device.f10b_GHz", d.f10b_ghz),
            ("device.t1a_ns", d.t1a_ns),
            ("device.t1b_ns", d.t1b_ns),
            ("device.omega_c0_GHz", d.omega_c0_ghz),
            ("simulation.dt_ns", self.simulation.dt_ns),
            ("dump.sample_dt_ns", self.dump.sample_dt_ns),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(err(key, "must be positive and finite"));
            }
        }
        if !(d.n_a >= 2.0) || !d.n_a.is_finite() {
            return Err(err("device.n_a", "must be at least 2"));
        }
        if !(d.n_b >= 2.0) || !d.n_b.is_finite() {
            return Err(err("device.n_b", "must be at least 2"));
        }
        if !d.bias_shift_coeff_mhz_per_ua.is_finite() {
            return Err(err("device.bias_shift_coeff_MHz_per_uA", "must be finite"));
        }
        if !d.l_offset_ph.is_finite() {
            return Err(err("device.l_offset_pH", "must be finite"));
        }

        let s = &self.simulation;
        match (s.ensemble, s.shots) {
            (Some(true), Some(_)) => {
                return Err(err(
                    "simulation.shots",
                    "conflicts with ensemble = true; pick one mode",
                ));
            }
            (Some(false), None) => {
                return Err(err(
                    "simulation.ensemble",
                    "false requires a shots count",
                ));
            }
            _ => {}
        }
        if s.shots == Some(0) {
            return Err(err("simulation.shots", "must be at least 1"));
        }

        let r = &self.reset;
        if !(r.i_cb_minus_ua < r.i_cb_plus_ua) {
            return Err(err(
                "reset.i_cb_minus_uA",
                "must be below reset.i_cb_plus_uA",
            ));
        }
        if !(0.0..=1.0).contains(&r.q) {
            return Err(err("reset.q", "must lie in [0, 1]"));
        }
        if r.initial.is_empty() {
            return Err(err("reset.initial", "needs at least one branch"));
        }
        let mut mass_sum = 0.0;
        for (k, im) in r.initial.iter().enumerate() {
            if !(im.mass >= 0.0) || !im.mass.is_finite() {
                return Err(err("reset.initial", "masses must be non-negative"));
            }
            if r.initial[..k].iter().any(|o| o.branch == im.branch) {
                return Err(err("reset.initial", "branch ids must be unique"));
            }
            mass_sum += im.mass;
        }
        if (mass_sum - 1.0).abs() > 1e-9 {
            return Err(err("reset.initial", "masses must sum to 1"));
        }

        let cc = &self.coupler_curve;
        if !(cc.bias_min_ua < cc.bias_max_ua) {
            return Err(err(
                "coupler_curve.bias_min_uA",
                "must be below coupler_curve.bias_max_uA",
            ));
        }
        if cc.n_bias < 2 {
            return Err(err("coupler_curve.n_bias", "must be at least 2"));
        }
        if cc.n_t < 16 {
            return Err(err("coupler_curve.n_t", "must be at least 16"));
        }

        let sp = &self.spectroscopy;
        if sp.i_cb_ua.is_some() && sp.omega_c_mhz.is_some() {
            return Err(err(
                "spectroscopy.i_cb_uA",
                "mutually exclusive with spectroscopy.omega_c_MHz",
            ));
        }
        if !(sp.delta_span_mhz > 0.0) || !sp.delta_span_mhz.is_finite() {
            return Err(err("spectroscopy.delta_span_MHz", "must be positive"));
        }
        if !(sp.probe_span_mhz > 0.0) || !sp.probe_span_mhz.is_finite() {
            return Err(err("spectroscopy.probe_span_MHz", "must be positive"));
        }
        if sp.n_delta < 5 {
            return Err(err("spectroscopy.n_delta", "must be at least 5"));
        }
        if sp.n_probe < 5 {
            return Err(err("spectroscopy.n_probe", "must be at least 5"));
        }
        if !(sp.probe_rabi_mhz > 0.0) || !sp.probe_rabi_mhz.is_finite() {
            return Err(err("spectroscopy.probe_rabi_MHz", "must be positive"));
        }

        let ct = &self.crosstalk;
        if ct.i_cb_ua_list.is_some() && ct.omega_c_mhz_list.is_some() {
            return Err(err(
                "crosstalk.i_cb_uA_list",
                "mutually exclusive with crosstalk.omega_c_MHz_list",
            ));
        }
        if matches!(&ct.i_cb_ua_list, Some(v) if v.is_empty())
            || matches!(&ct.omega_c_mhz_list, Some(v) if v.is_empty())
        {
            return Err(err("crosstalk.i_cb_uA_list", "list must be non-empty"));
        }
        if !(ct.t_max_ns > 0.0) || !ct.t_max_ns.is_finite() {
            return Err(err("crosstalk.t_max_ns", "must be positive"));
        }
        if ct.n_t < 8 {
            return Err(err("crosstalk.n_t", "must be at least 8"));
        }
        if !(ct.rabi_mhz > 0.0) || !ct.rabi_mhz.is_finite() {
            return Err(err("crosstalk.rabi_MHz", "must be positive"));
        }

        let ch = &self.chevron;
        if ch.i_cb_ua.is_some() && ch.omega_c_mhz.is_some() {
            return Err(err(
                "chevron.i_cb_uA",
                "mutually exclusive with chevron.omega_c_MHz",
            ));
        }
        if !(ch.delta_span_mhz >= 0.0) || !ch.delta_span_mhz.is_finite() {
            return Err(err("chevron.delta_span_MHz", "must be non-negative"));
        }
        if ch.n_delta < 1 {
            return Err(err("chevron.n_delta", "must be at least 1"));
        }
        if !(ch.t_max_ns > 0.0) || !ch.t_max_ns.is_finite() {
            return Err(err("chevron.t_max_ns", "must be positive"));
        }
        if ch.n_t < 8 {
            return Err(err("chevron.n_t", "must be at least 8"));
        }

        let mc = &self.min_coupling;
        if mc.omega_c_mhz_list.is_empty() {
            return Err(err("min_coupling.omega_c_MHz_list", "must be non-empty"));
        }
        if mc.omega_c_mhz_list.iter().any(|v| !v.is_finite()) {
            return Err(err("min_coupling.omega_c_MHz_list", "must be finite"));
        }
        if !(mc.t1_ns > 0.0) || !mc.t1_ns.is_finite() {
            return Err(err("min_coupling.t1_ns", "must be positive"));
        }
        if !(mc.t_max_ns > 0.0) || !mc.t_max_ns.is_finite() {
            return Err(err("min_coupling.t_max_ns", "must be positive"));
        }
        if mc.n_t < 8 {
            return Err(err("min_coupling.n_t", "must be at least 8"));
        }
        if mc.shots < 1 {
            return Err(err("min_coupling.shots", "must be at least 1"));
        }
        if !(mc.f_ratio_threshold > 0.0) || !mc.f_ratio_threshold.is_finite() {
            return Err(err("min_coupling.f_ratio_threshold", "must be positive"));
        }

        let bm = &self.branch_map;
        if !(bm.bias_min_ua < bm.bias_max_ua) {
            return Err(err(
                "branch_map.bias_min_uA",
                "must be below branch_map.bias_max_uA",
            ));
        }
        if bm.n_bias < 2 {
            return Err(err("branch_map.n_bias", "must be at least 2"));
        }

        match self.dump.kind.as_str() {
            "swap" | "spectroscopy" | "crosstalk" => {}
            _ => {
                return Err(err(
                    "dump.kind",
                    "must be one of swap, spectroscopy, crosstalk",
                ));
            }
        }
        if !self.dump.delta_mhz.is_finite() {
            return Err(err("dump.delta_MHz", "must be finite"));
        }
        if !(self.dump.t_swap_ns >= 0.0) || !self.dump.t_swap_ns.is_finite() {
            return Err(err("dump.t_swap_ns", "must be non-negative"));
        }

        Ok(())
    }

    /// Fill the documented fallbacks for keys whose default depends on a
    /// sibling key (coupler operating points). Idempotent.
    pub fn resolve(&self) -> RunConfig {
        let mut out = self.clone();
        if out.spectroscopy.i_cb_ua.is_none() && out.spectroscopy.omega_c_mhz.is_none() {
            out.spectroscopy.omega_c_mhz = Some(-40.0);
        }
        if out.chevron.i_cb_ua.is_none() && out.chevron.omega_c_mhz.is_none() {
            out.chevron.omega_c_mhz = Some(-40.0);
        }
        if out.crosstalk.i_cb_ua_list.is_none() && out.crosstalk.omega_c_mhz_list.is_none() {
            out.crosstalk.omega_c_mhz_list = Some(vec![-9.0, -17.0]);
        }
        if let Some(true) = out.simulation.ensemble {
            out.simulation.shots = None;
        }
        out
    }

    /// SI device parameters. Call after `validate`.
    pub fn device_params(&self) -> DeviceParams {
        let d = &self.device;
        DeviceParams {
            i_c0: d.i_c0_ua * 1e-6,
            m: d.m_ph * 1e-12,
            l_m: d.l_m_ph * 1e-12,
            l_s: d.l_s_ph * 1e-12,
            l: d.l_ph * 1e-12,
            l_z: d.l_z_nh * 1e-9,
            c: d.c_pf * 1e-12,
            f10_a: d.f10a_ghz * 1e9,
            f10_b: d.f10b_ghz * 1e9,
            t1_a: d.t1a_ns * 1e-9,
            t1_b: d.t1b_ns * 1e-9,
            n_a: d.n_a,
            n_b: d.n_b,
            omega_c0: TWO_PI * d.omega_c0_ghz * 1e9,
            bias_shift_coeff: d.bias_shift_coeff_mhz_per_ua * 1e12,
            l_offset: d.l_offset_ph * 1e-12,
        }
    }

    /// Effective sampling mode: None is ensemble.
    pub fn effective_shots(&self) -> Option<u64> {
        match self.simulation.ensemble {
            Some(true) => None,
            _ => self.simulation.shots,
        }
    }

    /// CLI flags override the simulation block; --shots also applies to the
    /// min-coupling study's per-point count.
    pub fn apply_overrides(&mut self, seed: Option<u64>, shots: Option<u64>, dt_ns: Option<f64>) {
        if let Some(s) = seed {
            self.simulation.seed = s;
        }
        if let Some(n) = shots {
            self.simulation.shots = Some(n);
            self.simulation.ensemble = Some(false);
            self.min_coupling.shots = n;
        }
        if let Some(dt) = dt_ns {
            self.simulation.dt_ns = dt;
        }
    }

    /// Canonical single-line JSON of the resolved config; hashing input.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 hex digest of the canonical form.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive (just `a` for n = 1).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}
