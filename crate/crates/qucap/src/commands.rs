//! The four run modes. Each returns the rendered output in memory so nothing
//! is written unless the whole run succeeds.

use std::time::{SystemTime, UNIX_EPOCH};

use qucap_core::analytic::{self, ConstantDriveParams};
use qucap_core::dynamics::{evolve, evolve_at, EvolutionProblem, SolverOptions};
use qucap_core::model::{DriveSchedule, PureState, SystemParams};
use qucap_core::verify::{locate_first_peak, ErrorMetric, VerificationReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, Mode, OutputPath, RunConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const ANALYTIC_COLUMNS: [&str; 8] =
    ["t", "p_e", "energy", "power", "capacitance", "damped_energy", "damped_capacitance", "damped_power"];
pub const EVOLVE_COLUMNS: [&str; 7] = ["t", "p_e", "energy", "power", "re_coherence", "im_coherence", "coherence_mag"];
pub const SWEEP_COLUMNS: [&str; 10] = [
    "omega0",
    "omega",
    "gamma",
    "kappa",
    "max_energy",
    "max_power",
    "charging_time",
    "first_peak_energy_numeric",
    "peak_deviation",
    "error",
];
pub const VERIFY_COLUMNS: [&str; 13] = [
    "omega0",
    "omega",
    "gamma",
    "kappa",
    "quantity",
    "metric",
    "max_abs_error",
    "max_rel_error",
    "location_error",
    "window",
    "tolerance",
    "passed",
    "note",
];

/// Refinement grid used around a coarse energy maximum.
const PEAK_REFINE_POINTS: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    SweepPartialFailure,
    VerificationFailure,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::SweepPartialFailure => 4,
            Outcome::VerificationFailure => 5,
        }
    }
}

/// Everything a run produces, ready to be written.
#[derive(Debug)]
pub struct Rendered {
    pub data: Vec<u8>,
    /// Metadata sidecar for file-backed JSON trajectories.
    pub sidecar: Option<Vec<u8>>,
    pub outcome: Outcome,
    /// One-line summary for the error stream.
    pub summary: Option<String>,
}

impl Rendered {
    fn data(data: Vec<u8>) -> Self {
        Rendered { data, sidecar: None, outcome: Outcome::Success, summary: None }
    }
}

/// Runs `config` with one worker per available core.
pub fn run(config: &RunConfig) -> Result<Rendered, CliError> {
    run_with_threads(config, std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Sweep and verify cases are spread over `threads` workers; output does not
/// depend on the count. The pool is sized explicitly so no environment
/// variable is consulted.
pub fn run_with_threads(config: &RunConfig, threads: usize) -> Result<Rendered, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    match config.mode {
        Mode::Analytic => run_analytic(config),
        Mode::Evolve => run_evolve(config),
        Mode::Sweep => pool.install(|| run_sweep(config)),
        Mode::Verify => pool.install(|| run_verify(config)),
    }
}

#[derive(Serialize)]
struct DriveMeta {
    t_start: f64,
    amplitude: f64,
}

#[derive(Serialize)]
struct ParamsMeta {
    omega0: f64,
    drive: Vec<DriveMeta>,
    gamma: f64,
    kappa: f64,
}

impl ParamsMeta {
    fn of(p: &SystemParams) -> Self {
        let drive = match p.drive() {
            DriveSchedule::Constant(a) => vec![DriveMeta { t_start: 0.0, amplitude: *a }],
            DriveSchedule::Piecewise(segs) => {
                segs.iter().map(|s| DriveMeta { t_start: s.t_start, amplitude: s.amplitude }).collect()
            }
        };
        ParamsMeta { omega0: p.omega0(), drive, gamma: p.gamma(), kappa: p.kappa() }
    }
}

#[derive(Serialize)]
struct SolverMeta {
    method: &'static str,
    abs_tol: f64,
    rel_tol: f64,
    max_step: f64,
    sample_dt: f64,
}

impl SolverMeta {
    fn of(opts: &SolverOptions, params: &SystemParams, t_final: f64) -> Self {
        SolverMeta {
            method: "dormand-prince 5(4)",
            abs_tol: opts.abs_tol,
            rel_tol: opts.rel_tol,
            max_step: opts.resolved_max_step(params, t_final),
            sample_dt: opts.resolved_sample_dt(params, t_final),
        }
    }
}

#[derive(Serialize)]
struct AnalyticMeta {
    mode: &'static str,
    params: ParamsMeta,
    t_final: f64,
    points: usize,
}

#[derive(Serialize)]
struct EvolveMeta<'a> {
    mode: &'static str,
    params: ParamsMeta,
    initial: &'a str,
    t_final: f64,
    solver: SolverMeta,
    accepted_steps: usize,
    rejected_steps: usize,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    generated_unix_seconds: u64,
    run: &'a EvolveMeta<'a>,
}

#[derive(Serialize)]
struct ListMeta {
    mode: &'static str,
    cases: usize,
}

fn finish(config: &RunConfig, table: Table, meta: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let table = match &config.columns {
        Some(cols) => table.select(cols)?,
        None => table,
    };
    match config.format {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => table.to_json(meta),
    }
}

/// Closed-form observables on `t_k = k·t_final/points`, `k = 0 … points−1`.
pub fn run_analytic(config: &RunConfig) -> Result<Rendered, CliError> {
    if config.drive.is_some() {
        return Err(CliError::usage("analytic mode requires a constant drive"));
    }
    if config.kappa[0] != 0.0 {
        return Err(CliError::usage("analytic mode has no closed form with kappa > 0"));
    }
    let t_final = config.t_final.expect("validated");
    let (omega0, omega, gamma) = (config.omega0[0], config.omega[0], config.gamma[0]);
    let p = ConstantDriveParams::new(omega0, omega)?;
    let mut table = Table::new(&ANALYTIC_COLUMNS);
    for k in 0..config.points {
        let t = t_final * k as f64 / config.points as f64;
        table.push(vec![
            t.into(),
            analytic::excited_population(p, t)?.into(),
            analytic::stored_energy(p, t)?.into(),
            analytic::instantaneous_power(p, t)?.into(),
            analytic::quantum_capacitance(p, t)?.into(),
            analytic::damped_energy(p, gamma, t)?.into(),
            analytic::damped_capacitance(p, gamma, t)?.into(),
            analytic::damped_power(p, gamma, t)?.into(),
        ]);
    }
    let params = SystemParams::new(omega0, DriveSchedule::constant(omega)?, gamma, 0.0)?;
    let meta = AnalyticMeta { mode: "analytic", params: ParamsMeta::of(&params), t_final, points: config.points };
    Ok(Rendered::data(finish(config, table, &meta)?))
}

/// Integrated trajectory; Schrödinger for closed pure runs, Lindblad otherwise.
pub fn run_evolve(config: &RunConfig) -> Result<Rendered, CliError> {
    let t_final = config.t_final.expect("validated");
    let params = config.system_params()?;
    let problem = EvolutionProblem::new(params.clone(), config.initial, t_final, config.solver)?;
    let trajectory = evolve(&problem)?;
    let m = trajectory.meta();
    log::info!(
        "integrated {} samples ({} accepted, {} rejected steps)",
        trajectory.samples().len(),
        m.accepted_steps,
        m.rejected_steps
    );

    let mut table = Table::new(&EVOLVE_COLUMNS);
    for s in trajectory.samples() {
        let o = s.observables;
        table.push(vec![
            s.t.into(),
            o.p_e.into(),
            o.energy.into(),
            o.power.into(),
            o.coherence.re.into(),
            o.coherence.im.into(),
            o.coherence_mag.into(),
        ]);
    }
    let meta = EvolveMeta {
        mode: "evolve",
        params: ParamsMeta::of(&params),
        initial: &config.initial_label,
        t_final,
        solver: SolverMeta::of(&config.solver, &params, t_final),
        accepted_steps: m.accepted_steps,
        rejected_steps: m.rejected_steps,
    };
    let data = finish(config, table, &meta)?;
    let sidecar = match (&config.format, &config.output) {
        (Format::Json, OutputPath::File(_)) => {
            let generated_unix_seconds = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let sidecar =
                Sidecar { tool: "qucap", version: env!("CARGO_PKG_VERSION"), generated_unix_seconds, run: &meta };
            Some(serde_json::to_vec_pretty(&sidecar)?)
        }
        (Format::Json, OutputPath::Stdout) => {
            log::info!("metadata sidecar skipped for standard output");
            None
        }
        _ => None,
    };
    Ok(Rendered { data, sidecar, outcome: Outcome::Success, summary: None })
}

/// Summary of one sweep tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub tuple: [f64; 4],
    pub max_energy: f64,
    pub max_power: f64,
    pub charging_time: f64,
    pub first_peak_energy_numeric: f64,
    pub peak_deviation: f64,
    pub error: Option<String>,
}

/// First maximum of the integrated energy from `|g⟩`, located on the sampled
/// trajectory and refined on a fine grid around the coarse maximum.
pub fn numeric_first_peak(
    params: &SystemParams,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<Option<(f64, f64)>, CliError> {
    let problem = EvolutionProblem::new(params.clone(), PureState::ground().into(), horizon, *opts)?;
    let coarse = evolve(&problem)?;
    let times: Vec<f64> = coarse.times().collect();
    let energies: Vec<f64> = coarse.samples().iter().map(|s| s.observables.energy).collect();
    let Some((t_coarse, _)) = locate_first_peak(&times, &energies) else {
        return Ok(None);
    };
    let dt = times[1] - times[0];
    let (lo, hi) = ((t_coarse - dt).max(0.0), (t_coarse + dt).min(horizon));
    let fine: Vec<f64> =
        (0..PEAK_REFINE_POINTS).map(|k| lo + (hi - lo) * k as f64 / (PEAK_REFINE_POINTS - 1) as f64).collect();
    let refined = evolve_at(&problem, &fine)?;
    let t: Vec<f64> = refined.times().collect();
    let e: Vec<f64> = refined.samples().iter().map(|s| s.observables.energy).collect();
    Ok(locate_first_peak(&t, &e))
}

pub fn sweep_case(tuple: [f64; 4], opts: &SolverOptions) -> SweepRow {
    let [omega0, omega, gamma, kappa] = tuple;
    let mut row = SweepRow {
        tuple,
        max_energy: f64::NAN,
        max_power: f64::NAN,
        charging_time: f64::NAN,
        first_peak_energy_numeric: f64::NAN,
        peak_deviation: f64::NAN,
        error: None,
    };
    let result = (|| -> Result<(), CliError> {
        let p = ConstantDriveParams::new(omega0, omega)?;
        row.max_energy = analytic::max_energy(p);
        row.max_power = analytic::max_power(p);
        if analytic::rabi_frequency(p) == 0.0 {
            // Nothing moves: no charging time, and the energy stays at zero.
            row.first_peak_energy_numeric = 0.0;
            row.peak_deviation = 0.0;
            return Ok(());
        }
        let tau = analytic::charging_time(p)?;
        row.charging_time = tau;
        if row.max_energy == 0.0 {
            row.first_peak_energy_numeric = 0.0;
            row.peak_deviation = 0.0;
            return Ok(());
        }
        let params = SystemParams::new(omega0, DriveSchedule::constant(omega)?, gamma, kappa)?;
        let (_, peak) = numeric_first_peak(&params, 2.0 * tau, opts)?
            .ok_or_else(|| CliError::usage("no energy maximum within one Rabi period"))?;
        let expected = analytic::damped_energy(p, gamma, tau)?;
        row.first_peak_energy_numeric = peak;
        row.peak_deviation = (peak - expected).abs() / expected;
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(match e {
            CliError::Usage(msg) | CliError::Config(msg) => msg,
            other => other.to_string(),
        });
    }
    row
}

/// One summary row per parameter tuple, in lexicographic tuple order.
pub fn run_sweep(config: &RunConfig) -> Result<Rendered, CliError> {
    let tuples = config.sweep_tuples();
    let opts = config.solver;
    let rows: Vec<SweepRow> = tuples.par_iter().map(|&t| sweep_case(t, &opts)).collect();
    let failures = rows.iter().filter(|r| r.error.is_some()).count();

    let mut table = Table::new(&SWEEP_COLUMNS);
    for r in &rows {
        let [w0, w, g, k] = r.tuple;
        table.push(vec![
            w0.into(),
            w.into(),
            g.into(),
            k.into(),
            r.max_energy.into(),
            r.max_power.into(),
            r.charging_time.into(),
            r.first_peak_energy_numeric.into(),
            r.peak_deviation.into(),
            r.error.clone().unwrap_or_default().into(),
        ]);
    }
    let data = finish(config, table, &ListMeta { mode: "sweep", cases: rows.len() })?;
    let outcome = if failures == 0 { Outcome::Success } else { Outcome::SweepPartialFailure };
    Ok(Rendered {
        data,
        sidecar: None,
        outcome,
        summary: Some(format!("sweep: {} cases, {} failed", rows.len(), failures)),
    })
}

fn report_row(r: &VerificationReport) -> Vec<Cell> {
    let (location_error, window) = match r.metric {
        ErrorMetric::PeakRelative { location_error, window } => (location_error, window),
        _ => (f64::NAN, f64::NAN),
    };
    vec![
        r.case_id.omega0.into(),
        r.case_id.omega.into(),
        r.case_id.gamma.into(),
        r.case_id.kappa.into(),
        r.quantity.as_str().into(),
        r.metric.name().into(),
        r.max_abs_error.into(),
        r.max_rel_error.into(),
        location_error.into(),
        window.into(),
        r.tolerance.into(),
        r.passed.into(),
        r.note.as_str().into(),
    ]
}

/// Runs every case of the grid. Cases that fail to integrate become failed
/// reports; the run itself only errors on an invalid grid.
pub fn run_verify(config: &RunConfig) -> Result<Rendered, CliError> {
    let grid = config.grid()?;
    let opts = config.solver;
    let reports: Vec<VerificationReport> = grid
        .cases()
        .par_iter()
        .map(|case| case.run(&opts).unwrap_or_else(|failure| VerificationReport::from_failure(&failure)))
        .collect();

    let mut table = Table::new(&VERIFY_COLUMNS);
    for r in &reports {
        table.push(report_row(r));
    }
    let data = match config.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json_lines(),
    };
    let passed = reports.iter().filter(|r| r.passed).count();
    let worst = reports
        .iter()
        .filter(|r| r.tolerance.is_finite())
        .max_by(|a, b| (a.metric_error() / a.tolerance).total_cmp(&(b.metric_error() / b.tolerance)));
    let mut summary = format!("verify: {} cases, {} passed, {} failed", reports.len(), passed, reports.len() - passed);
    if let Some(w) = worst {
        summary.push_str(&format!(
            "; worst {} = {:e} (tolerance {:e}) at {}",
            w.quantity,
            w.metric_error(),
            w.tolerance,
            w.case_id
        ));
    }
    let outcome = if passed == reports.len() { Outcome::Success } else { Outcome::VerificationFailure };
    Ok(Rendered { data, sidecar: None, outcome, summary: Some(summary) })
}

/// Writes data (and the sidecar, if any) to the configured destination.
pub fn write_rendered(config: &RunConfig, rendered: &Rendered) -> Result<(), CliError> {
    crate::table::emit(&config.output, &rendered.data)?;
    if let (Some(bytes), OutputPath::File(path)) = (&rendered.sidecar, &config.output) {
        crate::table::write_atomic(&sidecar_path(path), bytes)?;
    }
    Ok(())
}

/// `traj.json` → `traj.meta.json`.
pub fn sidecar_path(path: &std::path::Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}
