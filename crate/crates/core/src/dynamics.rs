//! Numerical time evolution.
//!
//! Closed systems are propagated as two complex amplitudes under
//! `i d|ψ⟩/dt = H(t)|ψ⟩`. Open systems propagate the full density matrix under
//!
//! ```text
//! dρ/dt = −i[H, ρ] + γ(σ_z ρ σ_z − ρ) + κ(σ_− ρ σ_+ − ½{σ_+σ_−, ρ})
//! ```
//!
//! Both use the adaptive Dormand-Prince 5(4) integrator. Steps land exactly
//! on every sample time and on every drive-segment boundary, and the step
//! controller restarts at each boundary so no step straddles a jump in Ω(t).
//! After each accepted step the state is repaired (renormalized, and for
//! density matrices symmetrized); drift beyond [`REPAIR_LIMIT`] aborts.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{observe, DensityMatrix, Operator2, PureState, Sample, SystemParams, Trajectory, TrajectoryMeta};
use crate::ode::{Dopri5, StepControl};
use crate::{Error, Result};

/// Largest per-step norm, trace or Hermiticity drift that is silently repaired.
pub const REPAIR_LIMIT: f64 = 1e-9;

/// Tolerances and sampling for the adaptive integrator.
///
/// `max_step` and `sample_dt` default to `0.05/f` and `π/(40 f)`, where `f`
/// is the fastest rate of the problem (largest Rabi frequency, γ, κ, or
/// `1/t_final` when everything vanishes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: Option<f64>,
    pub sample_dt: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { abs_tol: 1e-10, rel_tol: 1e-8, max_step: None, sample_dt: None }
    }
}

impl SolverOptions {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        SolverOptions { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        if self.abs_tol > 1e-4 {
            return Err(Error::invalid(format!("abs_tol must be <= 1e-4, got {}", self.abs_tol)));
        }
        if let Some(h) = self.max_step {
            positive("max_step", h)?;
        }
        if let Some(dt) = self.sample_dt {
            positive("sample_dt", dt)?;
        }
        Ok(())
    }

    fn rate_scale(params: &SystemParams, t_final: f64) -> f64 {
        params.max_rabi_frequency().max(params.gamma()).max(params.kappa()).max(1.0 / t_final)
    }

    /// Step bound in effect for `params` over `[0, t_final]`.
    pub fn resolved_max_step(&self, params: &SystemParams, t_final: f64) -> f64 {
        self.max_step.unwrap_or_else(|| 0.05 / Self::rate_scale(params, t_final))
    }

    /// Sampling interval in effect for `params` over `[0, t_final]`.
    pub fn resolved_sample_dt(&self, params: &SystemParams, t_final: f64) -> f64 {
        self.sample_dt.unwrap_or_else(|| {
            let rabi = params.max_rabi_frequency();
            let f = if rabi > 0.0 { rabi } else { Self::rate_scale(params, t_final) };
            PI / (40.0 * f)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(psi) => psi.to_density(),
            QuantumState::Mixed(rho) => *rho,
        }
    }
}

impl From<PureState> for QuantumState {
    fn from(psi: PureState) -> Self {
        QuantumState::Pure(psi)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(rho: DensityMatrix) -> Self {
        QuantumState::Mixed(rho)
    }
}

/// Initial-value problem over `[0, t_final]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionProblem {
    pub params: SystemParams,
    pub initial: QuantumState,
    pub t_final: f64,
    pub options: SolverOptions,
}

impl EvolutionProblem {
    pub fn new(params: SystemParams, initial: QuantumState, t_final: f64, options: SolverOptions) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid(format!("t_final must be finite and > 0, got {t_final}")));
        }
        options.validate()?;
        Ok(EvolutionProblem { params, initial, t_final, options })
    }

    /// Starts from the ground state `|g⟩` with default options.
    pub fn from_ground(params: SystemParams, t_final: f64) -> Result<Self> {
        Self::new(params, PureState::ground().into(), t_final, SolverOptions::default())
    }

    pub fn with_options(mut self, options: SolverOptions) -> Result<Self> {
        options.validate()?;
        self.options = options;
        Ok(self)
    }

    /// Sample times `0, dt, 2dt, …` followed by `t_final`.
    pub fn sample_times(&self) -> Vec<f64> {
        let dt = self.options.resolved_sample_dt(&self.params, self.t_final);
        let mut times = Vec::new();
        let mut k = 0u64;
        loop {
            let t = k as f64 * dt;
            if t >= self.t_final * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_final);
        times
    }
}

/// `d|ψ⟩/dt = −i H(t) |ψ⟩`, returned as `[dc_e/dt, dc_g/dt]`.
pub fn schrodinger_rhs(state: &PureState, t: f64, params: &SystemParams) -> Result<[Complex64; 2]> {
    if !params.is_closed() {
        return Err(Error::misuse("Schrödinger evolution requires gamma = kappa = 0"));
    }
    let h = crate::model::build_hamiltonian(params, t)?;
    let minus_i = Complex64::new(0.0, -1.0);
    let (e, g) = (state.c_e(), state.c_g());
    Ok([minus_i * (h.get(0, 0) * e + h.get(0, 1) * g), minus_i * (h.get(1, 0) * e + h.get(1, 1) * g)])
}

/// Right-hand side of the master equation, assembled from the operator algebra.
pub fn lindblad_rhs(rho: &DensityMatrix, t: f64, params: &SystemParams) -> Result<Operator2> {
    let h = crate::model::build_hamiltonian(params, t)?;
    let r = *rho.as_operator();
    let coherent = h.commutator(&r).scale(Complex64::new(0.0, -1.0));
    let sz = Operator2::sigma_z();
    let dephasing = (sz * r * sz - r).scale(Complex64::new(params.gamma(), 0.0));
    let (sm, sp) = (Operator2::sigma_minus(), Operator2::sigma_plus());
    let number = sp * sm;
    let relaxation = (sm * r * sp - number.anticommutator(&r).scale(Complex64::new(0.5, 0.0)))
        .scale(Complex64::new(params.kappa(), 0.0));
    Ok(coherent + dephasing + relaxation)
}

/// Integrates with the Schrödinger equation when the system is closed and
/// the initial state pure; otherwise with the master equation (pure initial
/// states are promoted to density matrices).
pub fn evolve(problem: &EvolutionProblem) -> Result<Trajectory> {
    match problem.initial {
        QuantumState::Pure(_) if problem.params.is_closed() => evolve_pure(problem),
        _ => evolve_density(problem),
    }
}

/// State-vector integration; requires a closed system and a pure initial state.
pub fn evolve_pure(problem: &EvolutionProblem) -> Result<Trajectory> {
    evolve_pure_at(problem, &problem.sample_times())
}

/// Master-equation integration for any parameters and initial state.
pub fn evolve_density(problem: &EvolutionProblem) -> Result<Trajectory> {
    evolve_density_at(problem, &problem.sample_times())
}

/// Like [`evolve`], sampling at the given increasing times in `[0, t_final]`.
/// `t = 0` is always included.
pub fn evolve_at(problem: &EvolutionProblem, times: &[f64]) -> Result<Trajectory> {
    match problem.initial {
        QuantumState::Pure(_) if problem.params.is_closed() => evolve_pure_at(problem, times),
        _ => evolve_density_at(problem, times),
    }
}

pub fn evolve_pure_at(problem: &EvolutionProblem, times: &[f64]) -> Result<Trajectory> {
    if !problem.params.is_closed() {
        return Err(Error::misuse("state-vector evolution requires gamma = kappa = 0"));
    }
    let QuantumState::Pure(psi) = problem.initial else {
        return Err(Error::misuse("state-vector evolution requires a pure initial state"));
    };
    let y0 = [psi.c_e().re, psi.c_e().im, psi.c_g().re, psi.c_g().im];
    propagate(problem, times, &PureModel { omega0: problem.params.omega0() }, y0)
}

pub fn evolve_density_at(problem: &EvolutionProblem, times: &[f64]) -> Result<Trajectory> {
    let m = problem.initial.to_density().as_operator().0;
    let y0 = [m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re, m[1][1].im];
    let model =
        LindbladModel { omega0: problem.params.omega0(), gamma: problem.params.gamma(), kappa: problem.params.kappa() };
    propagate(problem, times, &model, y0)
}

trait Propagated<const N: usize> {
    fn rhs(&self, omega: f64, y: &[f64; N], dy: &mut [f64; N]);
    fn repair(&self, t: f64, y: &mut [f64; N]) -> Result<()>;
    fn density(&self, t: f64, y: &[f64; N]) -> Result<DensityMatrix>;
}

struct PureModel {
    omega0: f64,
}

impl Propagated<4> for PureModel {
    fn rhs(&self, omega: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let a = 0.5 * self.omega0;
        // −i (H ψ) with H = [[a, Ω], [Ω, −a]]
        let he_re = a * y[0] + omega * y[2];
        let he_im = a * y[1] + omega * y[3];
        let hg_re = omega * y[0] - a * y[2];
        let hg_im = omega * y[1] - a * y[3];
        *dy = [he_im, -he_re, hg_im, -hg_re];
    }

    fn repair(&self, t: f64, y: &mut [f64; 4]) -> Result<()> {
        let norm = libm::sqrt(y.iter().map(|v| v * v).sum::<f64>());
        let drift = libm::fabs(norm - 1.0);
        if !(drift <= REPAIR_LIMIT) {
            return Err(Error::Integrity { t, detail: format!("state norm drifted by {drift:e}") });
        }
        y.iter_mut().for_each(|v| *v /= norm);
        Ok(())
    }

    fn density(&self, t: f64, y: &[f64; 4]) -> Result<DensityMatrix> {
        PureState::new(Complex64::new(y[2], y[3]), Complex64::new(y[0], y[1]))
            .map(|psi| psi.to_density())
            .map_err(|e| Error::Integrity { t, detail: format!("{e}") })
    }
}

struct LindbladModel {
    omega0: f64,
    gamma: f64,
    kappa: f64,
}

fn unpack(y: &[f64; 8]) -> Operator2 {
    let c = |i: usize| Complex64::new(y[2 * i], y[2 * i + 1]);
    Operator2::new([[c(0), c(1)], [c(2), c(3)]])
}

fn pack(m: &Operator2, y: &mut [f64; 8]) {
    for (i, z) in m.0.iter().flatten().enumerate() {
        y[2 * i] = z.re;
        y[2 * i + 1] = z.im;
    }
}

impl Propagated<8> for LindbladModel {
    fn rhs(&self, omega: f64, y: &[f64; 8], dy: &mut [f64; 8]) {
        let r = unpack(y).0;
        let (m00, m01, m10, m11) = (r[0][0], r[0][1], r[1][0], r[1][1]);
        let a = 0.5 * self.omega0;
        // [H, ρ] for H = [[a, Ω], [Ω, −a]]
        let c00 = (m10 - m01) * omega;
        let c01 = m01 * (2.0 * a) + (m11 - m00) * omega;
        let c10 = (m00 - m11) * omega - m10 * (2.0 * a);
        let c11 = (m01 - m10) * omega;
        let minus_i = Complex64::new(0.0, -1.0);
        let offdiag_decay = 2.0 * self.gamma + 0.5 * self.kappa;
        let d = Operator2::new([
            [minus_i * c00 - m00 * self.kappa, minus_i * c01 - m01 * offdiag_decay],
            [minus_i * c10 - m10 * offdiag_decay, minus_i * c11 + m00 * self.kappa],
        ]);
        pack(&d, dy);
    }

    fn repair(&self, t: f64, y: &mut [f64; 8]) -> Result<()> {
        let m = unpack(y);
        let herm = m.hermiticity_deviation();
        if !(herm <= REPAIR_LIMIT) {
            return Err(Error::Integrity { t, detail: format!("Hermiticity drifted by {herm:e}") });
        }
        let sym = (m + m.dagger()).scale(Complex64::new(0.5, 0.0));
        let tr = sym.trace().re;
        let drift = libm::fabs(tr - 1.0);
        if !(drift <= REPAIR_LIMIT) {
            return Err(Error::Integrity { t, detail: format!("trace drifted by {drift:e}") });
        }
        if herm > 0.0 || drift > 0.0 {
            log::trace!("t = {t}: repaired Hermiticity {herm:e}, trace {drift:e}");
        }
        pack(&sym.scale(Complex64::new(1.0 / tr, 0.0)), y);
        Ok(())
    }

    fn density(&self, t: f64, y: &[f64; 8]) -> Result<DensityMatrix> {
        DensityMatrix::new(unpack(y)).map_err(|e| Error::Integrity { t, detail: format!("{e}") })
    }
}

fn propagate<const N: usize, M: Propagated<N>>(
    problem: &EvolutionProblem,
    times: &[f64],
    model: &M,
    y0: [f64; N],
) -> Result<Trajectory> {
    let t_final = problem.t_final;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("sample times must be strictly increasing"));
    }
    if times.iter().any(|&t| !(0.0..=t_final).contains(&t)) {
        return Err(Error::domain("sample times must lie in [0, t_final]"));
    }
    let params = &problem.params;
    let max_step = problem.options.resolved_max_step(params, t_final);
    let mut solver =
        Dopri5::<N>::new(StepControl { abs_tol: problem.options.abs_tol, rel_tol: problem.options.rel_tol, max_step });

    let mut wanted: Vec<f64> = Vec::with_capacity(times.len() + 1);
    if times.first() != Some(&0.0) {
        wanted.push(0.0);
    }
    wanted.extend_from_slice(times);

    let mut y = y0;
    let mut samples = Vec::with_capacity(wanted.len());
    let mut record = |t: f64, y: &[f64; N]| -> Result<()> {
        let rho = model.density(t, y)?;
        samples.push(Sample { t, state: rho, observables: observe(&rho, params.omega0()) });
        Ok(())
    };
    let mut repair = |t: f64, y: &mut [f64; N]| model.repair(t, y);

    let mut next = 0;
    for (i, &(start, end, omega)) in params.drive().intervals(t_final).iter().enumerate() {
        if i > 0 {
            solver.restart();
        }
        let rhs = |_t: f64, y: &[f64; N], dy: &mut [f64; N]| model.rhs(omega, y, dy);
        let mut t = start;
        while next < wanted.len() && wanted[next] <= end {
            let ts = wanted[next];
            if ts > t {
                solver.advance(&rhs, t, &mut y, ts, &mut repair)?;
                t = ts;
            }
            record(ts, &y)?;
            next += 1;
        }
        if t < end {
            solver.advance(&rhs, t, &mut y, end, &mut repair)?;
        }
    }

    let meta = TrajectoryMeta {
        params: params.clone(),
        options: problem.options,
        max_step,
        accepted_steps: solver.accepted,
        rejected_steps: solver.rejected,
    };
    Trajectory::from_samples(samples, meta)
}
