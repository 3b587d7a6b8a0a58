//! JSON run configuration.
//!
//! A config is a single flat JSON object. Physical parameters accept either a
//! number or a list of numbers; lists are only meaningful in `sweep` and
//! `verify` modes. Unknown keys, and keys that do not apply to the selected
//! mode, are rejected.

use std::fmt;
use std::path::PathBuf;

use qucap_core::dynamics::{QuantumState, SolverOptions};
use qucap_core::model::{DriveSchedule, DriveSegment, PureState, SystemParams};
use qucap_core::verify::ComparisonGrid;
use qucap_core::Complex64;
use serde::Deserialize;

use crate::error::CliError;

/// Upper bound on the number of parameter tuples in one sweep.
pub const MAX_SWEEP_CASES: usize = 1_000_000;
/// Upper bound on analytic grid points.
pub const MAX_POINTS: usize = 10_000_000;
pub const DEFAULT_POINTS: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Evolve,
    Sweep,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Evolve => "evolve",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Where data goes: a file (written atomically) or standard output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputPath {
    Stdout,
    File(PathBuf),
}

impl OutputPath {
    pub fn parse(s: &str) -> Self {
        if s == "-" {
            OutputPath::Stdout
        } else {
            OutputPath::File(PathBuf::from(s))
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Values::One(x) => vec![x],
            Values::Many(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSpec {
    t_start: f64,
    amplitude: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NamedState {
    Ground,
    Excited,
    Plus,
}

/// Amplitudes as `[re, im]` pairs.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Amplitudes {
    c_e: [f64; 2],
    c_g: [f64; 2],
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
enum InitialSpec {
    Named(NamedState),
    Amplitudes(Amplitudes),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    omega0: Option<Values>,
    omega: Option<Values>,
    gamma: Option<Values>,
    kappa: Option<Values>,
    drive: Option<Vec<SegmentSpec>>,
    t_final: Option<f64>,
    points: Option<usize>,
    initial: Option<InitialSpec>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_step: Option<f64>,
    sample_dt: Option<f64>,
    format: Option<Format>,
    output: Option<String>,
    columns: Option<Vec<String>>,
    t_final_periods: Option<f64>,
    samples_per_period: Option<usize>,
}

impl RawConfig {
    /// Names of keys present in the document, paired with whether `mode` accepts them.
    fn present_keys(&self, mode: Mode) -> Vec<(&'static str, bool)> {
        use Mode::*;
        let single_run = matches!(mode, Analytic | Evolve);
        let solver = matches!(mode, Evolve | Sweep | Verify);
        [
            ("drive", self.drive.is_some(), matches!(mode, Analytic | Evolve)),
            ("t_final", self.t_final.is_some(), single_run),
            ("points", self.points.is_some(), mode == Analytic),
            ("initial", self.initial.is_some(), mode == Evolve),
            ("abs_tol", self.abs_tol.is_some(), solver),
            ("rel_tol", self.rel_tol.is_some(), solver),
            ("max_step", self.max_step.is_some(), solver),
            ("sample_dt", self.sample_dt.is_some(), solver),
            ("columns", self.columns.is_some(), mode != Verify),
            ("t_final_periods", self.t_final_periods.is_some(), mode == Verify),
            ("samples_per_period", self.samples_per_period.is_some(), mode == Verify),
        ]
        .into_iter()
        .filter(|(_, present, _)| *present)
        .map(|(name, _, allowed)| (name, allowed))
        .collect()
    }
}

/// A validated run configuration for one mode.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub omega0: Vec<f64>,
    /// Empty when a piecewise `drive` is given instead.
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub drive: Option<Vec<DriveSegment>>,
    pub t_final: Option<f64>,
    pub points: usize,
    pub initial: QuantumState,
    pub initial_label: String,
    pub solver: SolverOptions,
    pub format: Format,
    pub output: OutputPath,
    pub columns: Option<Vec<String>>,
    pub t_final_periods: Option<f64>,
    pub samples_per_period: Option<usize>,
}

impl RunConfig {
    /// Parses and validates a JSON document for `mode`. `output_override`
    /// (the `--output` flag) takes precedence over the `output` key.
    pub fn from_json(text: &str, mode: Mode, output_override: Option<&str>) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        if let Some(declared) = raw.mode {
            if declared != mode {
                return Err(CliError::usage(format!("config declares mode {declared} but {mode} was requested")));
            }
        }
        for (key, allowed) in raw.present_keys(mode) {
            if !allowed {
                return Err(CliError::config(format!("key `{key}` does not apply to {mode} mode")));
            }
        }

        let list = |v: Option<Values>, name: &str, default: Option<f64>| -> Result<Vec<f64>, CliError> {
            let values = match (v, default) {
                (Some(v), _) => v.into_vec(),
                (None, Some(d)) => vec![d],
                (None, None) => Vec::new(),
            };
            if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(CliError::config(format!("`{name}` values must be finite and non-negative")));
            }
            Ok(values)
        };
        let verify = mode == Mode::Verify;
        let grid = ComparisonGrid::default();
        let pick = |v: Option<Values>, name: &str, fallback: &[f64]| -> Result<Vec<f64>, CliError> {
            if v.is_none() && verify {
                return Ok(fallback.to_vec());
            }
            list(v, name, None)
        };
        let omega0 = pick(raw.omega0, "omega0", &grid.omega0_values)?;
        let has_drive = raw.drive.is_some();
        let omega = pick(raw.omega, "omega", &grid.omega_values)?;
        let gamma =
            if verify { pick(raw.gamma, "gamma", &grid.gamma_values)? } else { list(raw.gamma, "gamma", Some(0.0))? };
        let kappa =
            if verify { pick(raw.kappa, "kappa", &grid.kappa_values)? } else { list(raw.kappa, "kappa", Some(0.0))? };

        if omega0.is_empty() {
            return Err(CliError::config("`omega0` is required"));
        }
        match (omega.is_empty(), has_drive) {
            (true, false) => return Err(CliError::config("one of `omega` or `drive` is required")),
            (false, true) => return Err(CliError::config("`omega` and `drive` are mutually exclusive")),
            _ => {}
        }
        if matches!(mode, Mode::Analytic | Mode::Evolve) {
            for (name, values) in [("omega0", &omega0), ("omega", &omega), ("gamma", &gamma), ("kappa", &kappa)] {
                if values.len() > 1 {
                    return Err(CliError::config(format!("`{name}` must be a single value in {mode} mode")));
                }
            }
        }
        if mode == Mode::Sweep {
            let total = [&omega0, &omega, &gamma, &kappa].iter().try_fold(1usize, |acc, v| acc.checked_mul(v.len()));
            if [&omega0, &omega, &gamma, &kappa].iter().all(|v| v.len() <= 1) {
                return Err(CliError::config("sweep mode needs at least one parameter with more than one value"));
            }
            match total {
                Some(n) if n <= MAX_SWEEP_CASES => {}
                _ => return Err(CliError::config(format!("sweep exceeds {MAX_SWEEP_CASES} cases"))),
            }
        }

        let drive = raw.drive.map(|segs| {
            segs.into_iter().map(|s| DriveSegment { t_start: s.t_start, amplitude: s.amplitude }).collect()
        });

        let t_final = match (raw.t_final, mode) {
            (Some(t), _) if !(t.is_finite() && t > 0.0) => {
                return Err(CliError::config("`t_final` must be finite and positive"));
            }
            (None, Mode::Analytic | Mode::Evolve) => return Err(CliError::config("`t_final` is required")),
            (t, _) => t,
        };
        let points = raw.points.unwrap_or(DEFAULT_POINTS);
        if points == 0 || points > MAX_POINTS {
            return Err(CliError::config(format!("`points` must be in 1..={MAX_POINTS}")));
        }

        let (initial, initial_label) = match raw.initial {
            None | Some(InitialSpec::Named(NamedState::Ground)) => (PureState::ground().into(), "ground".to_string()),
            Some(InitialSpec::Named(NamedState::Excited)) => (PureState::excited().into(), "excited".to_string()),
            Some(InitialSpec::Named(NamedState::Plus)) => (PureState::plus().into(), "plus".to_string()),
            Some(InitialSpec::Amplitudes(a)) => {
                let psi = PureState::new(Complex64::new(a.c_g[0], a.c_g[1]), Complex64::new(a.c_e[0], a.c_e[1]))
                    .map_err(|e| CliError::config(format!("`initial`: {e}")))?;
                let label = format!("c_e=({}, {}), c_g=({}, {})", a.c_e[0], a.c_e[1], a.c_g[0], a.c_g[1]);
                (QuantumState::Pure(psi), label)
            }
        };

        let mut solver = SolverOptions::default();
        if raw.abs_tol.is_some() || raw.rel_tol.is_some() {
            solver = SolverOptions::with_tolerances(
                raw.abs_tol.unwrap_or(solver.abs_tol),
                raw.rel_tol.unwrap_or(solver.rel_tol),
            );
        }
        solver.max_step = raw.max_step;
        solver.sample_dt = raw.sample_dt;
        solver.validate().map_err(|e| CliError::config(format!("solver options: {e}")))?;

        if let Some(columns) = &raw.columns {
            if columns.is_empty() {
                return Err(CliError::config("`columns` must not be empty"));
            }
        }

        let output = output_override.or(raw.output.as_deref()).map(OutputPath::parse).unwrap_or(OutputPath::Stdout);

        Ok(RunConfig {
            mode,
            omega0,
            omega,
            gamma,
            kappa,
            drive,
            t_final,
            points,
            initial,
            initial_label,
            solver,
            format: raw.format.unwrap_or_default(),
            output,
            columns: raw.columns,
            t_final_periods: raw.t_final_periods,
            samples_per_period: raw.samples_per_period,
        })
    }

    /// The drive schedule of a single-run config.
    pub fn drive_schedule(&self) -> Result<DriveSchedule, CliError> {
        match &self.drive {
            Some(segments) => Ok(DriveSchedule::piecewise(segments.clone())?),
            None => Ok(DriveSchedule::constant(self.omega[0])?),
        }
    }

    /// System parameters of a single-run config.
    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.omega0[0], self.drive_schedule()?, self.gamma[0], self.kappa[0])?)
    }

    /// Sweep tuples `(ω0, Ω, γ, κ)` in lexicographic order, duplicates removed.
    pub fn sweep_tuples(&self) -> Vec<[f64; 4]> {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (a, b, c, d) = (sorted(&self.omega0), sorted(&self.omega), sorted(&self.gamma), sorted(&self.kappa));
        let mut out = Vec::with_capacity(a.len() * b.len() * c.len() * d.len());
        for &w0 in &a {
            for &w in &b {
                for &g in &c {
                    for &k in &d {
                        out.push([w0, w, g, k]);
                    }
                }
            }
        }
        out
    }

    /// Verification grid; unspecified fields take the default grid.
    pub fn grid(&self) -> Result<ComparisonGrid, CliError> {
        let defaults = ComparisonGrid::default();
        let grid = ComparisonGrid {
            omega0_values: self.omega0.clone(),
            omega_values: self.omega.clone(),
            gamma_values: self.gamma.clone(),
            kappa_values: self.kappa.clone(),
            t_final_periods: self.t_final_periods.unwrap_or(defaults.t_final_periods),
            samples_per_period: self.samples_per_period.unwrap_or(defaults.samples_per_period),
        };
        grid.validate().map_err(|e| CliError::config(format!("verification grid: {e}")))?;
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, mode: Mode) -> Result<RunConfig, CliError> {
        RunConfig::from_json(text, mode, None)
    }

    #[test]
    fn scalar_and_list_values() {
        let c = parse(r#"{"omega0": 8, "omega": [1, 2, 3]}"#, Mode::Sweep).unwrap();
        assert_eq!(c.omega0, vec![8.0]);
        assert_eq!(c.omega, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.gamma, vec![0.0]);
        assert_eq!(c.output, OutputPath::Stdout);
    }

    #[test]
    fn unknown_and_misplaced_keys_are_rejected() {
        assert!(matches!(
            parse(r#"{"omega0": 8, "omgea": 3, "t_final": 1}"#, Mode::Analytic),
            Err(CliError::Config(_))
        ));
        let err = parse(r#"{"omega0": 8, "omega": 3, "t_final": 1, "abs_tol": 1e-9}"#, Mode::Analytic).unwrap_err();
        assert!(err.to_string().contains("abs_tol"), "{err}");
        assert!(parse(r#"{"omega0": 8, "omega": [1, 2], "t_final": 1}"#, Mode::Sweep).is_err());
    }

    #[test]
    fn sweep_invariants() {
        assert!(parse(r#"{"omega0": 8, "omega": 3}"#, Mode::Sweep).is_err());
        let big: Vec<String> = (0..1001).map(|k| k.to_string()).collect();
        let text = format!(r#"{{"omega0": [{0}], "omega": [{0}]}}"#, big.join(","));
        let err = parse(&text, Mode::Sweep).unwrap_err();
        assert!(err.to_string().contains("exceeds"));
    }

    #[test]
    fn sweep_tuples_are_lexicographic_and_unique() {
        let c = parse(r#"{"omega0": [8, 1], "omega": [3, 1, 3], "gamma": [0.1, 0]}"#, Mode::Sweep).unwrap();
        let tuples = c.sweep_tuples();
        assert_eq!(tuples.len(), 8);
        assert_eq!(tuples[0], [1.0, 1.0, 0.0, 0.0]);
        assert_eq!(tuples[7], [8.0, 3.0, 0.1, 0.0]);
        assert!(tuples.windows(2).all(|w| w[0].partial_cmp(&w[1]) == Some(std::cmp::Ordering::Less)));
    }

    #[test]
    fn drive_and_omega_are_exclusive() {
        let both = r#"{"omega0": 1, "omega": 1, "drive": [{"t_start": 0, "amplitude": 1}], "t_final": 1}"#;
        assert!(parse(both, Mode::Evolve).is_err());
        let drive = r#"{"omega0": 1, "drive": [{"t_start": 0, "amplitude": 1}, {"t_start": 0.5, "amplitude": 0}], "t_final": 1}"#;
        let c = parse(drive, Mode::Evolve).unwrap();
        assert!(!c.system_params().unwrap().drive().is_constant());
    }

    #[test]
    fn initial_states() {
        let c = parse(r#"{"omega0": 1, "omega": 0, "t_final": 1, "initial": "excited"}"#, Mode::Evolve).unwrap();
        assert_eq!(c.initial.to_density().rho_ee(), 1.0);
        let c = parse(
            r#"{"omega0": 1, "omega": 0, "t_final": 1, "initial": {"c_e": [0.6, 0], "c_g": [0, 0.8]}}"#,
            Mode::Evolve,
        )
        .unwrap();
        assert!((c.initial.to_density().rho_ee() - 0.36).abs() < 1e-15);
        assert!(parse(
            r#"{"omega0": 1, "omega": 0, "t_final": 1, "initial": {"c_e": [1, 0], "c_g": [1, 0]}}"#,
            Mode::Evolve
        )
        .is_err());
    }

    #[test]
    fn solver_options_are_validated() {
        let base = r#"{"omega0": 1, "omega": 1, "t_final": 1, "#;
        assert!(parse(&format!(r#"{base}"abs_tol": 1e-2}}"#), Mode::Evolve).is_err());
        assert!(parse(&format!(r#"{base}"max_step": -1}}"#), Mode::Evolve).is_err());
        let c = parse(&format!(r#"{base}"rel_tol": 1e-6}}"#), Mode::Evolve).unwrap();
        assert_eq!(c.solver.rel_tol, 1e-6);
        assert_eq!(c.solver.abs_tol, SolverOptions::default().abs_tol);
    }

    #[test]
    fn verify_defaults_to_the_standard_grid() {
        let c = parse("{}", Mode::Verify).unwrap();
        assert_eq!(c.grid().unwrap(), ComparisonGrid::default());
        let c = parse(r#"{"omega0": 0, "omega": 0, "gamma": 0, "kappa": 0}"#, Mode::Verify).unwrap();
        assert_eq!(c.grid().unwrap().cases().len(), 2);
    }

    #[test]
    fn mode_mismatch_and_output_override() {
        assert!(parse(r#"{"mode": "sweep", "omega0": 1, "omega": 1, "t_final": 1}"#, Mode::Analytic).is_err());
        let c = RunConfig::from_json(
            r#"{"omega0": 1, "omega": 1, "t_final": 1, "output": "a.csv"}"#,
            Mode::Analytic,
            Some("-"),
        )
        .unwrap();
        assert_eq!(c.output, OutputPath::Stdout);
    }
}
