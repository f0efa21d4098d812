//! Command-line front end: one subcommand per experiment, one CSV plus one
//! JSON sidecar per run. Exit code 0 on success, 1 for config or file
//! problems, 2 when the model or integrator rejects the run.

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use coupler_core::device::{self, DeviceParams, TWO_PI};
use coupler_core::dynamics::ControlSource;
use coupler_core::hysteresis::{self, ResetConfig};
use coupler_core::sequences::{self, PulseSequence};
use coupler_sim::config::{self, linspace, RunConfig};
use coupler_sim::experiments::{self, SimOptions};
use coupler_sim::report;

#[derive(Parser)]
#[command(
    name = "coupler-sim",
    version,
    about = "Simulated experiments on two phase qubits with a tunable rf-SQUID coupler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run config; omitted or empty means the published device defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the CSV and JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override simulation.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override shots per grid point (switches shot sampling on).
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Override the integrator step, in ns.
    #[arg(long, global = true)]
    dt_ns: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling strength vs bias: circuit formula against fitted swap rates.
    CouplerCurve,
    /// Two-tone spectroscopy across the avoided crossing.
    Spectroscopy,
    /// Rabi-drive crosstalk between the qubits at several coupler biases.
    Crosstalk,
    /// Swap chevron over (detuning, plateau length).
    Chevron,
    /// Smallest coupling distinguishable from bare T1 decay.
    MinCoupling,
    /// Probabilistic flux reset of the coupler loop.
    ResetSim,
    /// Flux-equation roots and their stability across a bias window.
    BranchMap,
    /// Sample the rotating-frame controls of one built-in sequence.
    DumpSequence,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CouplerCurve => "coupler-curve",
            Command::Spectroscopy => "spectroscopy",
            Command::Crosstalk => "crosstalk",
            Command::Chevron => "chevron",
            Command::MinCoupling => "min-coupling",
            Command::ResetSim => "reset-sim",
            Command::BranchMap => "branch-map",
            Command::DumpSequence => "dump-sequence",
        }
    }
}

enum CliError {
    /// Config, file or argument problems: exit 1.
    Validation(String),
    /// Model or integrator failures on a valid config: exit 2.
    Numerics(String),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<experiments::ExperimentError> for CliError {
    fn from(e: experiments::ExperimentError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

impl From<hysteresis::HysteresisError> for CliError {
    fn from(e: hysteresis::HysteresisError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("cannot {what} {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerics(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load_config(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.shots, cli.dt_ns);
    cfg.validate()?;
    let cfg = cfg.resolve();

    let params = cfg.device_params();
    params
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let opts = SimOptions {
        dt: cfg.simulation.dt_ns * 1e-9,
        rwa: cfg.simulation.rwa,
        shots: cfg.effective_shots(),
        seed: cfg.simulation.seed,
        fingerprint: cfg.fingerprint(),
    };

    std::fs::create_dir_all(&cli.out).map_err(|e| io_err("create", &cli.out, e))?;
    let csv_path = cli.out.join(format!("{}.csv", cli.command.name()));
    let json_path = cli.out.join(format!("{}.json", cli.command.name()));

    let (columns, results) = match &cli.command {
        Command::CouplerCurve => coupler_curve(&cfg, &params, &opts)?,
        Command::Spectroscopy => spectroscopy(&cfg, &params, &opts)?,
        Command::Crosstalk => crosstalk(&cfg, &params, &opts)?,
        Command::Chevron => chevron(&cfg, &params, &opts)?,
        Command::MinCoupling => min_coupling(&cfg, &params, &opts)?,
        Command::ResetSim => reset_sim(&cfg, &params)?,
        Command::BranchMap => branch_map(&cfg, &params)?,
        Command::DumpSequence => dump_sequence(&cfg, &params, &opts)?,
    };

    report::write_csv(&csv_path, &columns).map_err(|e| io_err("write", &csv_path, e))?;
    let sidecar = report::sidecar(cli.command.name(), &cfg, opts.seed, results);
    report::write_sidecar(&json_path, &sidecar).map_err(|e| io_err("write", &json_path, e))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

type CommandOutput = (Vec<(String, Vec<f64>)>, serde_json::Value);

/// Resolve a coupler operating point: an explicit bias wins, otherwise the
/// target coupling is inverted through the circuit formula.
fn operating_bias(
    params: &DeviceParams,
    i_cb_ua: Option<f64>,
    omega_c_mhz: Option<f64>,
) -> Result<f64, CliError> {
    match (i_cb_ua, omega_c_mhz) {
        (Some(ua), _) => Ok(ua * 1e-6),
        (None, Some(mhz)) => device::bias_for_coupling(params, TWO_PI * mhz * 1e6)
            .map_err(|e| CliError::Numerics(e.to_string())),
        (None, None) => Err(CliError::Validation(
            "coupler operating point unresolved; set i_cb_uA or omega_c_MHz".into(),
        )),
    }
}

fn coupler_curve(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.coupler_curve;
    let bias_ua = linspace(block.bias_min_ua, block.bias_max_ua, block.n_bias);
    let bias_si: Vec<f64> = bias_ua.iter().map(|b| b * 1e-6).collect();
    let run = experiments::run_coupling_curve(&bias_si, block.n_t, params, opts)?;

    let theory_mhz: Vec<f64> = run
        .rows
        .iter()
        .map(|r| r.omega_c_theory.abs() / TWO_PI / 1e6)
        .collect();
    let fitted_mhz: Vec<f64> = run
        .rows
        .iter()
        .map(|r| {
            r.fit
                .as_ref()
                .map(|f| f.frequency / 1e6)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let columns = vec![
        ("bias_uA".to_string(), bias_ua.clone()),
        ("omega_c_theory_MHz".to_string(), theory_mhz),
        ("omega_c_fitted_MHz".to_string(), fitted_mhz),
    ];

    let rows: Vec<serde_json::Value> = run
        .rows
        .iter()
        .map(|r| {
            json!({
                "bias_uA": r.i_cb / 1e-6,
                "omega_c_theory_signed_MHz": r.omega_c_theory / TWO_PI / 1e6,
                "decay_limited": r.decay_limited,
                "trace_span_ns": r.t_grid.last().copied().unwrap_or(0.0) / 1e-9,
                "fit": report::fit_json(&r.fit),
            })
        })
        .collect();
    Ok((columns, json!({ "rows": rows })))
}

fn spectroscopy(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.spectroscopy;
    let i_cb = operating_bias(params, block.i_cb_ua, block.omega_c_mhz)?;
    let omega_c = device::coupling_strength(params, i_cb)
        .map_err(|e| CliError::Numerics(e.to_string()))?;
    let half_d = 0.5 * block.delta_span_mhz * 1e6;
    let half_p = 0.5 * block.probe_span_mhz * 1e6;
    let delta_grid = linspace(-half_d, half_d, block.n_delta);
    let probe_grid = linspace(-half_p, half_p, block.n_probe);
    let probe_amp = TWO_PI * block.probe_rabi_mhz * 1e6;
    let run =
        experiments::run_spectroscopy(i_cb, probe_amp, &delta_grid, &probe_grid, params, opts)?;

    let peaks: Vec<serde_json::Value> = run
        .peaks
        .iter()
        .map(|(delta, found)| {
            json!({
                "delta_MHz": delta / 1e6,
                "peak_frequencies_MHz":
                    found.iter().map(|p| p.frequency / 1e6).collect::<Vec<f64>>(),
            })
        })
        .collect();
    let results = json!({
        "i_cb_uA": i_cb / 1e-6,
        "omega_c_theory_MHz": omega_c / TWO_PI / 1e6,
        "crossing": report::fit_json(&run.crossing),
        "fitted_splitting_MHz": run
            .crossing
            .as_ref()
            .map(|c| c.omega_c / 1e6)
            .ok(),
        "peaks": peaks,
    });
    Ok((report::experiment_table(&run.result), results))
}

fn crosstalk(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.crosstalk;
    let bias_si: Vec<f64> = match (&block.i_cb_ua_list, &block.omega_c_mhz_list) {
        (Some(list), _) => list.iter().map(|ua| ua * 1e-6).collect(),
        (None, Some(list)) => {
            let mut out = Vec::with_capacity(list.len());
            for mhz in list {
                out.push(
                    device::bias_for_coupling(params, TWO_PI * mhz * 1e6)
                        .map_err(|e| CliError::Numerics(e.to_string()))?,
                );
            }
            out
        }
        (None, None) => {
            return Err(CliError::Validation(
                "crosstalk operating points unresolved".into(),
            ));
        }
    };
    let t_grid = linspace(0.0, block.t_max_ns * 1e-9, block.n_t);
    let rabi_amp = TWO_PI * block.rabi_mhz * 1e6;
    let run = experiments::run_crosstalk_scan(&bias_si, &t_grid, rabi_amp, params, opts)?;

    let points: Vec<serde_json::Value> = run
        .points
        .iter()
        .map(|p| {
            json!({
                "i_cb_uA": p.i_cb / 1e-6,
                "omega_c_theory_MHz": p.omega_c / TWO_PI / 1e6,
                "driven": if p.drive_a { "a" } else { "b" },
                "ratio": report::fit_json(&p.ratio),
            })
        })
        .collect();
    Ok((
        report::experiment_table(&run.result),
        json!({ "points": points }),
    ))
}

fn chevron(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.chevron;
    let i_cb_on = operating_bias(params, block.i_cb_ua, block.omega_c_mhz)?;
    let half = 0.5 * block.delta_span_mhz * 1e6;
    let delta_grid = linspace(-half, half, block.n_delta);
    let t_grid = linspace(0.0, block.t_max_ns * 1e-9, block.n_t);
    let run = experiments::run_swap_chevron(i_cb_on, &delta_grid, &t_grid, params, opts)?;

    let rows: Vec<serde_json::Value> = run
        .rows
        .iter()
        .map(|r| {
            json!({
                "delta_MHz": r.delta / 1e6,
                "expected_MHz": r.expected / 1e6,
                "fitted_MHz": r.fit.as_ref().map(|f| f.frequency / 1e6).ok(),
                "fit": report::fit_json(&r.fit),
            })
        })
        .collect();
    let results = json!({
        "i_cb_on_uA": i_cb_on / 1e-6,
        "omega_c_on_MHz": run.omega_c_on / TWO_PI / 1e6,
        "rows": rows,
    });
    Ok((report::experiment_table(&run.result), results))
}

fn min_coupling(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.min_coupling;
    let list: Vec<f64> = block
        .omega_c_mhz_list
        .iter()
        .map(|mhz| TWO_PI * mhz * 1e6)
        .collect();
    let t_grid = linspace(0.0, block.t_max_ns * 1e-9, block.n_t);
    let run = experiments::run_min_coupling_study(
        &list,
        block.t1_ns * 1e-9,
        &t_grid,
        block.shots,
        block.f_ratio_threshold,
        params,
        opts,
    )?;

    let verdicts: Vec<serde_json::Value> = run
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "omega_c_MHz": v.omega_c / TWO_PI / 1e6,
                "f_ratio": v.f_ratio,
                "resolvable": v.resolvable,
                "sine": report::fit_json(&v.sine),
                "decay": report::fit_json(&v.decay),
            })
        })
        .collect();
    let results = json!({
        "t1_ns": block.t1_ns,
        "shots": run.shots,
        "f_ratio_threshold": run.threshold,
        "verdicts": verdicts,
    });
    Ok((report::experiment_table(&run.result), results))
}

fn reset_sim(cfg: &RunConfig, params: &DeviceParams) -> Result<CommandOutput, CliError> {
    let block = &cfg.reset;
    let reset_cfg = ResetConfig {
        i_cb_minus: block.i_cb_minus_ua * 1e-6,
        i_cb_plus: block.i_cb_plus_ua * 1e-6,
        n_cycles: block.n_cycles,
        per_cycle_survival_q: block.q,
        target_branch: block.target_branch,
    };
    let initial: Vec<(i32, f64)> = block.initial.iter().map(|m| (m.branch, m.mass)).collect();
    let outcome = hysteresis::simulate_reset(params, &reset_cfg, &initial)?;

    let cycles: Vec<f64> = (1..=outcome.nontarget_mass_per_cycle.len())
        .map(|k| k as f64)
        .collect();
    let columns = vec![
        ("cycle".to_string(), cycles),
        (
            "nontarget_mass".to_string(),
            outcome.nontarget_mass_per_cycle.clone(),
        ),
    ];
    let survival_power = block.q.powi(block.n_cycles as i32);
    let results = json!({
        "outcome": serde_json::to_value(&outcome).unwrap_or(serde_json::Value::Null),
        "survival_power_residual": survival_power,
    });
    Ok((columns, results))
}

fn branch_map(cfg: &RunConfig, params: &DeviceParams) -> Result<CommandOutput, CliError> {
    let block = &cfg.branch_map;
    let bias_ua = linspace(block.bias_min_ua, block.bias_max_ua, block.n_bias);
    let bias_si: Vec<f64> = bias_ua.iter().map(|b| b * 1e-6).collect();
    let map = experiments::run_branch_map(params, &bias_si);

    let mut col_bias = Vec::new();
    let mut col_id = Vec::new();
    let mut col_delta = Vec::new();
    let mut col_stable = Vec::new();
    let mut col_shift = Vec::new();
    let mut stable_at_zero = 0usize;
    for (bias, points) in &map {
        for p in points {
            col_bias.push(bias / 1e-6);
            col_id.push(p.branch_id as f64);
            col_delta.push(p.delta);
            col_stable.push(if p.stable { 1.0 } else { 0.0 });
            col_shift.push(hysteresis::branch_frequency_shift(params, p) / 1e6);
        }
    }
    let zero_points = hysteresis::enumerate_branches(params, 0.0);
    for p in &zero_points {
        if p.stable {
            stable_at_zero += 1;
        }
    }
    let mut stable_ids: Vec<i32> = map
        .iter()
        .flat_map(|(_, pts)| pts.iter().filter(|p| p.stable).map(|p| p.branch_id))
        .collect();
    stable_ids.sort_unstable();
    stable_ids.dedup();

    let columns = vec![
        ("bias_uA".to_string(), col_bias),
        ("branch_id".to_string(), col_id),
        ("delta_rad".to_string(), col_delta),
        ("stable".to_string(), col_stable),
        ("shift_MHz".to_string(), col_shift),
    ];
    let results = json!({
        "beta": hysteresis::beta(params),
        "stable_branches_at_zero_bias": stable_at_zero,
        "distinct_stable_ids": stable_ids,
    });
    Ok((columns, results))
}

fn dump_sequence(
    cfg: &RunConfig,
    params: &DeviceParams,
    opts: &SimOptions,
) -> Result<CommandOutput, CliError> {
    let block = &cfg.dump;
    let delta = block.delta_mhz * 1e6;
    let seq: PulseSequence = match block.kind.as_str() {
        "swap" => {
            let i_cb_on = operating_bias(params, cfg.chevron.i_cb_ua, cfg.chevron.omega_c_mhz)?;
            sequences::build_swap_sequence(delta, i_cb_on, block.t_swap_ns * 1e-9, params)
                .map_err(|e| CliError::Numerics(e.to_string()))?
        }
        "spectroscopy" => {
            let sp = &cfg.spectroscopy;
            let i_cb = operating_bias(params, sp.i_cb_ua, sp.omega_c_mhz)?;
            let probe_amp = TWO_PI * sp.probe_rabi_mhz * 1e6;
            sequences::build_spectroscopy_sequence(delta, 0.0, probe_amp, i_cb, params)
                .map_err(|e| CliError::Numerics(e.to_string()))?
        }
        "crosstalk" => {
            let ct = &cfg.crosstalk;
            let i_cb = match (&ct.i_cb_ua_list, &ct.omega_c_mhz_list) {
                (Some(list), _) => list[0] * 1e-6,
                (None, Some(list)) => device::bias_for_coupling(params, TWO_PI * list[0] * 1e6)
                    .map_err(|e| CliError::Numerics(e.to_string()))?,
                (None, None) => {
                    return Err(CliError::Validation(
                        "crosstalk operating points unresolved".into(),
                    ));
                }
            };
            let rabi_amp = TWO_PI * ct.rabi_mhz * 1e6;
            sequences::build_crosstalk_sequence(true, block.t_swap_ns * 1e-9, i_cb, rabi_amp, params)
                .map_err(|e| CliError::Numerics(e.to_string()))?
        }
        other => {
            return Err(CliError::Validation(format!(
                "dump.kind {other} is not one of swap, spectroscopy, crosstalk"
            )));
        }
    };
    let sampler = sequences::sample(&seq, params, opts.dt)
        .map_err(|e| CliError::Numerics(e.to_string()))?;

    let sample_dt = block.sample_dt_ns * 1e-9;
    let n = (seq.total_duration / sample_dt).floor() as usize + 1;
    let mut col_t = Vec::with_capacity(n);
    let mut col_bias = Vec::with_capacity(n);
    let mut col_da = Vec::with_capacity(n);
    let mut col_db = Vec::with_capacity(n);
    let mut col_ra = Vec::with_capacity(n);
    let mut col_pa = Vec::with_capacity(n);
    let mut col_rb = Vec::with_capacity(n);
    let mut col_pb = Vec::with_capacity(n);
    let mut col_oc = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * sample_dt;
        let snap = sampler.at(t);
        col_t.push(t / 1e-9);
        col_bias.push(seq.coupler.value(t) / 1e-6);
        col_da.push(snap.detune_a / TWO_PI / 1e6);
        col_db.push(snap.detune_b / TWO_PI / 1e6);
        col_ra.push(snap.rabi_a / TWO_PI / 1e6);
        col_pa.push(snap.phase_a);
        col_rb.push(snap.rabi_b / TWO_PI / 1e6);
        col_pb.push(snap.phase_b);
        col_oc.push(snap.omega_c / TWO_PI / 1e6);
    }
    let columns = vec![
        ("t_ns".to_string(), col_t),
        ("coupler_bias_uA".to_string(), col_bias),
        ("detune_a_MHz".to_string(), col_da),
        ("detune_b_MHz".to_string(), col_db),
        ("rabi_a_MHz".to_string(), col_ra),
        ("phase_a_rad".to_string(), col_pa),
        ("rabi_b_MHz".to_string(), col_rb),
        ("phase_b_rad".to_string(), col_pb),
        ("omega_c_MHz".to_string(), col_oc),
    ];
    let results = json!({
        "kind": block.kind,
        "total_duration_ns": seq.total_duration / 1e-9,
        "measurement_time_ns": seq.measurement_time / 1e-9,
        "frame_offset_MHz": seq.frame_offset / 1e6,
        "n_samples": n,
    });
    Ok((columns, results))
}
