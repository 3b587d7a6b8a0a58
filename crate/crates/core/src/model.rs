//! Domain types, operators and state-level observables.
//!
//! All matrices are written in the ordered basis `(|e⟩, |g⟩)`, so
//! `σ_z = diag(+1, −1)` and the excited population is the `[0][0]` entry.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::dynamics::SolverOptions;
use crate::{Error, Result};

/// Normalization slack accepted (and repaired) when building a [`PureState`].
pub const PURE_NORM_TOLERANCE: f64 = 1e-9;
/// Hermiticity and trace slack accepted (and repaired) when building a [`DensityMatrix`].
pub const DENSITY_REPAIR_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted for a [`DensityMatrix`].
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(format!("{name} must be finite and >= 0, got {value}")));
    }
    Ok(())
}

/// One piece of a piecewise-constant drive: amplitude `amplitude` from `t_start` on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSegment {
    pub t_start: f64,
    pub amplitude: f64,
}

/// Drive amplitude Ω(t).
#[derive(Clone, Debug, PartialEq)]
pub enum DriveSchedule {
    Constant(f64),
    Piecewise(Vec<DriveSegment>),
}

impl DriveSchedule {
    pub fn constant(omega: f64) -> Result<Self> {
        check_rate("drive amplitude", omega)?;
        Ok(DriveSchedule::Constant(omega))
    }

    /// Segments must start at `t = 0` and have strictly increasing start times.
    pub fn piecewise(segments: Vec<DriveSegment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::invalid("piecewise drive needs at least one segment"));
        };
        if first.t_start != 0.0 {
            return Err(Error::invalid("first drive segment must start at t = 0"));
        }
        for seg in &segments {
            check_rate("drive amplitude", seg.amplitude)?;
            if !seg.t_start.is_finite() {
                return Err(Error::invalid("segment start times must be finite"));
            }
        }
        if segments.windows(2).any(|w| w[1].t_start <= w[0].t_start) {
            return Err(Error::invalid("segment start times must be strictly increasing"));
        }
        Ok(DriveSchedule::Piecewise(segments))
    }

    /// Amplitude at `t`; piecewise schedules are right-continuous.
    pub fn amplitude_at(&self, t: f64) -> f64 {
        match self {
            DriveSchedule::Constant(omega) => *omega,
            DriveSchedule::Piecewise(segments) => segments
                .iter()
                .take_while(|seg| seg.t_start <= t)
                .last()
                .map_or(segments[0].amplitude, |seg| seg.amplitude),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DriveSchedule::Constant(_))
    }

    pub fn max_amplitude(&self) -> f64 {
        match self {
            DriveSchedule::Constant(omega) => *omega,
            DriveSchedule::Piecewise(segments) => segments.iter().map(|s| s.amplitude).fold(0.0, f64::max),
        }
    }

    /// Constant-amplitude intervals `(start, end, amplitude)` covering `[0, t_final]`.
    pub fn intervals(&self, t_final: f64) -> Vec<(f64, f64, f64)> {
        match self {
            DriveSchedule::Constant(omega) => alloc::vec![(0.0, t_final, *omega)],
            DriveSchedule::Piecewise(segments) => {
                let mut out = Vec::with_capacity(segments.len());
                for (i, seg) in segments.iter().enumerate() {
                    if seg.t_start >= t_final {
                        break;
                    }
                    let end = segments.get(i + 1).map_or(t_final, |next| next.t_start.min(t_final));
                    out.push((seg.t_start, end, seg.amplitude));
                }
                out
            }
        }
    }
}

/// Physical parameters `(ω0, Ω(t), γ, κ)` of the driven two-level system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    omega0: f64,
    drive: DriveSchedule,
    gamma: f64,
    kappa: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, drive: DriveSchedule, gamma: f64, kappa: f64) -> Result<Self> {
        check_rate("omega0", omega0)?;
        check_rate("gamma", gamma)?;
        check_rate("kappa", kappa)?;
        // Re-validate: the enum variants are public and may bypass the constructors.
        let drive = match drive {
            DriveSchedule::Constant(omega) => DriveSchedule::constant(omega)?,
            DriveSchedule::Piecewise(segments) => DriveSchedule::piecewise(segments)?,
        };
        Ok(SystemParams { omega0, drive, gamma, kappa })
    }

    /// Closed system with constant drive.
    pub fn closed(omega0: f64, omega: f64) -> Result<Self> {
        Self::new(omega0, DriveSchedule::constant(omega)?, 0.0, 0.0)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn drive(&self) -> &DriveSchedule {
        &self.drive
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_closed(&self) -> bool {
        self.gamma == 0.0 && self.kappa == 0.0
    }

    /// Largest generalized Rabi frequency reached by the drive schedule.
    pub fn max_rabi_frequency(&self) -> f64 {
        libm::hypot(self.drive.max_amplitude(), 0.5 * self.omega0)
    }
}

/// A 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2(pub [[Complex64; 2]; 2]);

impl Operator2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Operator2(m)
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Operator2(m.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub const fn zero() -> Self {
        Operator2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Operator2([[ONE, ZERO], [ZERO, ONE]])
    }

    /// `σ_z = |e⟩⟨e| − |g⟩⟨g|`
    pub fn sigma_z() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// `σ_x = |e⟩⟨g| + |g⟩⟨e|`
    pub fn sigma_x() -> Self {
        Self::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    /// `σ_+ = |e⟩⟨g|`
    pub fn sigma_plus() -> Self {
        Self::from_real([[0.0, 1.0], [0.0, 0.0]])
    }

    /// `σ_− = |g⟩⟨e|`
    pub fn sigma_minus() -> Self {
        Self::from_real([[0.0, 0.0], [1.0, 0.0]])
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Operator2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Operator2(self.0.map(|row| row.map(|x| x * s)))
    }

    /// `A B − B A`
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `A B + B A`
    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Largest elementwise modulus of `A − A†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = *self - self.dagger();
        d.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        Operator2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        Operator2([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }
}

impl Mul for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        Operator2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

/// Pure state `c_g|g⟩ + c_e|e⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    c_e: Complex64,
    c_g: Complex64,
}

impl PureState {
    /// Renormalizes when the norm is within [`PURE_NORM_TOLERANCE`] of one,
    /// rejects otherwise.
    pub fn new(c_g: Complex64, c_e: Complex64) -> Result<Self> {
        let norm = libm::sqrt(c_g.norm_sqr() + c_e.norm_sqr());
        if !norm.is_finite() || libm::fabs(norm - 1.0) > PURE_NORM_TOLERANCE {
            return Err(Error::invalid(format!("pure state norm {norm} is not 1")));
        }
        Ok(PureState { c_e: c_e / norm, c_g: c_g / norm })
    }

    pub fn ground() -> Self {
        PureState { c_e: ZERO, c_g: ONE }
    }

    pub fn excited() -> Self {
        PureState { c_e: ONE, c_g: ZERO }
    }

    /// `(|g⟩ + |e⟩)/√2`
    pub fn plus() -> Self {
        let a = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState { c_e: a, c_g: a }
    }

    pub fn c_e(&self) -> Complex64 {
        self.c_e
    }

    pub fn c_g(&self) -> Complex64 {
        self.c_g
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.c_e.norm_sqr() + self.c_g.norm_sqr())
    }

    /// `|ψ⟩⟨ψ|`
    pub fn to_density(&self) -> DensityMatrix {
        let (e, g) = (self.c_e, self.c_g);
        let ee = Complex64::new(e.norm_sqr(), 0.0);
        let gg = Complex64::new(g.norm_sqr(), 0.0);
        let eg = e * g.conj();
        DensityMatrix(Operator2([[ee, eg], [eg.conj(), gg]]))
    }
}

/// Hermitian, unit-trace, positive semidefinite 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Operator2);

impl DensityMatrix {
    /// Symmetrizes Hermiticity deviations and renormalizes trace deviations
    /// up to [`DENSITY_REPAIR_TOLERANCE`]; anything larger is rejected, as is a
    /// smallest eigenvalue below `−POSITIVITY_TOLERANCE`.
    pub fn new(m: Operator2) -> Result<Self> {
        Self::with_repair_tolerance(m, DENSITY_REPAIR_TOLERANCE)
    }

    pub(crate) fn with_repair_tolerance(m: Operator2, tol: f64) -> Result<Self> {
        if m.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        let herm = m.hermiticity_deviation();
        if herm > tol {
            return Err(Error::invalid(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let sym = (m + m.dagger()).scale(Complex64::new(0.5, 0.0));
        let tr = sym.trace().re;
        if libm::fabs(tr - 1.0) > tol {
            return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
        }
        let rho = DensityMatrix(sym.scale(Complex64::new(1.0 / tr, 0.0)));
        let min_eig = rho.eigenvalues()[0];
        if min_eig < -POSITIVITY_TOLERANCE {
            return Err(Error::invalid(format!("density matrix not positive (eigenvalue {min_eig:e})")));
        }
        Ok(rho)
    }

    pub fn ground() -> Self {
        PureState::ground().to_density()
    }

    pub fn excited() -> Self {
        PureState::excited().to_density()
    }

    pub fn maximally_mixed() -> Self {
        let half = Complex64::new(0.5, 0.0);
        DensityMatrix(Operator2([[half, ZERO], [ZERO, half]]))
    }

    pub fn as_operator(&self) -> &Operator2 {
        &self.0
    }

    pub fn rho_ee(&self) -> f64 {
        self.0 .0[0][0].re
    }

    pub fn rho_gg(&self) -> f64 {
        self.0 .0[1][1].re
    }

    /// `⟨e|ρ|g⟩`
    pub fn rho_eg(&self) -> Complex64 {
        self.0 .0[0][1]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let (a, d) = (self.rho_ee(), self.rho_gg());
        let mean = 0.5 * (a + d);
        let radius = libm::hypot(0.5 * (a - d), self.rho_eg().norm());
        [mean - radius, mean + radius]
    }

    /// Convex combination `α ρ1 + (1 − α) ρ2`.
    pub fn mix(alpha: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("mixing weight {alpha} outside [0, 1]")));
        }
        Self::new(a.0.scale(Complex64::new(alpha, 0.0)) + b.0.scale(Complex64::new(1.0 - alpha, 0.0)))
    }
}

/// Observables recorded with every trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableRecord {
    pub p_e: f64,
    pub energy: f64,
    /// dE/dt, from centered differences of the sampled energy.
    pub power: f64,
    pub coherence: Complex64,
    pub coherence_mag: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: DensityMatrix,
    pub observables: ObservableRecord,
}

/// Settings a trajectory was produced with.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMeta {
    pub params: SystemParams,
    pub options: SolverOptions,
    /// Step-size bound actually used.
    pub max_step: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Time-ordered samples starting at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    /// Fills in `power` from the sampled energies: centered differences in the
    /// interior, one-sided at both ends.
    pub(crate) fn from_samples(mut samples: Vec<Sample>, meta: TrajectoryMeta) -> Result<Self> {
        if samples.first().map(|s| s.t) != Some(0.0) {
            return Err(Error::invalid("trajectory must start at t = 0"));
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        let n = samples.len();
        if n > 1 {
            let slope = |s: &[Sample], i: usize, j: usize| {
                (s[j].observables.energy - s[i].observables.energy) / (s[j].t - s[i].t)
            };
            let powers: Vec<f64> = (0..n)
                .map(|i| match i {
                    0 => slope(&samples, 0, 1),
                    i if i == n - 1 => slope(&samples, n - 2, n - 1),
                    i => slope(&samples, i - 1, i + 1),
                })
                .collect();
            for (s, p) in samples.iter_mut().zip(powers) {
                s.observables.power = p;
            }
        }
        Ok(Trajectory { samples, meta })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// `H(t) = (ω0/2) σ_z + Ω(t) σ_x` in the `(|e⟩, |g⟩)` basis.
pub fn build_hamiltonian(params: &SystemParams, t: f64) -> Result<Operator2> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    Ok(hamiltonian(params.omega0, params.drive.amplitude_at(t)))
}

pub(crate) fn hamiltonian(omega0: f64, omega: f64) -> Operator2 {
    let half = 0.5 * omega0;
    Operator2::from_real([[half, omega], [omega, -half]])
}

/// `Tr[ρ H0] − E(0)` with the ground-state baseline `E(0) = −ω0/2`.
pub fn stored_energy_of_state(rho: &DensityMatrix, omega0: f64) -> Result<f64> {
    check_rate("omega0", omega0)?;
    let h0 = Operator2::sigma_z().scale(Complex64::new(0.5 * omega0, 0.0));
    Ok((*rho.as_operator() * h0).trace().re + 0.5 * omega0)
}

/// `ρ_eg = ⟨e|ρ|g⟩`
pub fn coherence_of_state(rho: &DensityMatrix) -> Complex64 {
    rho.rho_eg()
}

pub(crate) fn observe(rho: &DensityMatrix, omega0: f64) -> ObservableRecord {
    let coherence = rho.rho_eg();
    ObservableRecord {
        p_e: rho.rho_ee(),
        energy: omega0 * rho.rho_ee(),
        power: 0.0,
        coherence,
        coherence_mag: coherence.norm(),
    }
}
