//! Closed-form results for a constant drive amplitude.
//!
//! With `Ω_R = sqrt(Ω² + ω0²/4)` the excited population is
//! `(Ω²/Ω_R²) sin²(Ω_R t)`; everything else here is built from that
//! expression. When `ω0 = Ω = 0` the oscillatory formulas return zero
//! (there is no dynamics) and [`charging_time`] reports a domain error.

use alloc::format;

use crate::{Error, Result};

/// Constant-drive parameters `(ω0, Ω)`, both non-negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantDriveParams {
    omega0: f64,
    omega: f64,
}

impl ConstantDriveParams {
    pub fn new(omega0: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("omega0", omega0), ("omega", omega)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(ConstantDriveParams { omega0, omega })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same transition frequency, different drive amplitude.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.omega0, omega)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("dephasing rate must be finite and >= 0, got {gamma}")));
    }
    Ok(())
}

fn sin2(x: f64) -> f64 {
    let s = libm::sin(x);
    s * s
}

/// `Ω_R = sqrt(Ω² + ω0²/4)`
pub fn rabi_frequency(p: ConstantDriveParams) -> f64 {
    libm::hypot(p.omega, 0.5 * p.omega0)
}

/// `(Ω²/Ω_R²) sin²(Ω_R t)`
pub fn excited_population(p: ConstantDriveParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return Ok(0.0);
    }
    let ratio = p.omega / rabi;
    Ok(ratio * ratio * sin2(rabi * t))
}

/// `ω0 (Ω²/Ω_R²) sin²(Ω_R t)`
pub fn stored_energy(p: ConstantDriveParams, t: f64) -> Result<f64> {
    Ok(p.omega0 * excited_population(p, t)?)
}

/// `∂E/∂Ω = ω0 [2Ω(Ω_R² − Ω²)/Ω_R⁴] sin²(Ω_R t) + ω0 [Ω³ t/Ω_R³] sin(2Ω_R t)`
pub fn quantum_capacitance(p: ConstantDriveParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return Ok(0.0);
    }
    let (w0, w) = (p.omega0, p.omega);
    let r2 = rabi * rabi;
    let amplitude_term = w0 * 2.0 * w * (r2 - w * w) / (r2 * r2) * sin2(rabi * t);
    let phase_term = w0 * w * w * w * t / (r2 * rabi) * libm::sin(2.0 * rabi * t);
    Ok(amplitude_term + phase_term)
}

fn check_weak_params(p: ConstantDriveParams, t: f64) -> Result<()> {
    check_time(t)?;
    if p.omega0 == 0.0 {
        return Err(Error::domain("weak-drive limit is singular at omega0 = 0"));
    }
    Ok(())
}

/// Weak-drive (`Ω ≪ ω0`) energy `(4Ω²/ω0) sin²(ω0 t/2)`. No regime check.
pub fn weak_drive_energy(p: ConstantDriveParams, t: f64) -> Result<f64> {
    check_weak_params(p, t)?;
    Ok(4.0 * p.omega * p.omega / p.omega0 * sin2(0.5 * p.omega0 * t))
}

/// Weak-drive capacitance `(8Ω/ω0) sin²(ω0 t/2)`. No regime check.
pub fn weak_drive_capacitance(p: ConstantDriveParams, t: f64) -> Result<f64> {
    check_weak_params(p, t)?;
    Ok(8.0 * p.omega / p.omega0 * sin2(0.5 * p.omega0 * t))
}

/// `dE/dt = ω0 (Ω²/Ω_R) sin(2Ω_R t)`; positive while charging.
pub fn instantaneous_power(p: ConstantDriveParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return Ok(0.0);
    }
    Ok(p.omega0 * p.omega * p.omega / rabi * libm::sin(2.0 * rabi * t))
}

/// `ω0 Ω²/Ω_R`
pub fn max_power(p: ConstantDriveParams) -> f64 {
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return 0.0;
    }
    p.omega0 * p.omega * p.omega / rabi
}

/// `ω0 Ω²/Ω_R²`, reached at `Ω_R t = π/2, 3π/2, …`
pub fn max_energy(p: ConstantDriveParams) -> f64 {
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return 0.0;
    }
    let ratio = p.omega / rabi;
    p.omega0 * ratio * ratio
}

/// Time of the first energy maximum, `π/(2Ω_R)`.
pub fn charging_time(p: ConstantDriveParams) -> Result<f64> {
    let rabi = rabi_frequency(p);
    if rabi == 0.0 {
        return Err(Error::domain("no charging occurs when omega0 = omega = 0"));
    }
    Ok(core::f64::consts::FRAC_PI_2 / rabi)
}

/// Period `π/Ω_R` of the population and energy oscillation, if any.
pub fn rabi_period(p: ConstantDriveParams) -> Option<f64> {
    let rabi = rabi_frequency(p);
    (rabi > 0.0).then(|| core::f64::consts::PI / rabi)
}

fn envelope(gamma: f64, t: f64) -> f64 {
    libm::exp(-2.0 * gamma * t)
}

/// Dephasing approximation `E(t) e^(−2γt)`.
pub fn damped_energy(p: ConstantDriveParams, gamma: f64, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(stored_energy(p, t)? * envelope(gamma, t))
}

/// `C_Q(t) e^(−2γt)`
pub fn damped_capacitance(p: ConstantDriveParams, gamma: f64, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(quantum_capacitance(p, t)? * envelope(gamma, t))
}

/// `e^(−2γt) dE/dt − 2γ E(t) e^(−2γt)`, the time derivative of [`damped_energy`].
pub fn damped_power(p: ConstantDriveParams, gamma: f64, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let decay = envelope(gamma, t);
    Ok(decay * instantaneous_power(p, t)? - 2.0 * gamma * stored_energy(p, t)? * decay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn p(omega0: f64, omega: f64) -> ConstantDriveParams {
        ConstantDriveParams::new(omega0, omega).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rabi_frequency_examples() {
        assert_eq!(rabi_frequency(p(8.0, 3.0)), 5.0);
        assert_eq!(rabi_frequency(p(2.0, 0.0)), 1.0);
        assert_eq!(rabi_frequency(p(0.0, 7.0)), 7.0);
    }

    #[test]
    fn population_and_energy_examples() {
        assert_eq!(excited_population(p(8.0, 3.0), 0.0).unwrap(), 0.0);
        assert!(close(excited_population(p(8.0, 3.0), PI / 10.0).unwrap(), 0.36, 1e-15));
        assert_eq!(excited_population(p(8.0, 0.0), 1.7).unwrap(), 0.0);
        assert!(excited_population(p(8.0, 3.0), -1.0).is_err());

        assert_eq!(stored_energy(p(8.0, 3.0), 0.0).unwrap(), 0.0);
        assert!(close(stored_energy(p(8.0, 3.0), PI / 10.0).unwrap(), 2.88, 1e-14));
        assert_eq!(stored_energy(p(0.0, 5.0), 0.9).unwrap(), 0.0);
        assert!(stored_energy(p(8.0, 3.0), -0.1).is_err());
    }

    #[test]
    fn capacitance_examples() {
        assert_eq!(quantum_capacitance(p(8.0, 3.0), 0.0).unwrap(), 0.0);
        assert_eq!(quantum_capacitance(p(8.0, 0.0), 2.3).unwrap(), 0.0);
        assert!(close(quantum_capacitance(p(8.0, 3.0), PI / 10.0).unwrap(), 1.2288, 1e-14));
        assert!(quantum_capacitance(p(8.0, 3.0), -2.0).is_err());
    }

    #[test]
    fn weak_drive_examples() {
        let q = p(1.0, 0.01);
        assert_eq!(weak_drive_energy(q, 0.0).unwrap(), 0.0);
        assert!(close(weak_drive_energy(q, PI).unwrap(), 4e-4, 1e-18));
        assert!(close(weak_drive_energy(q, 2.0 * PI).unwrap(), 0.0, 1e-18));
        assert!(close(weak_drive_capacitance(q, PI).unwrap(), 0.08, 1e-16));
        assert_eq!(weak_drive_capacitance(q, 0.0).unwrap(), 0.0);
        assert_eq!(weak_drive_capacitance(p(1.0, 0.0), 1.3).unwrap(), 0.0);
        assert!(weak_drive_energy(p(0.0, 0.01), 1.0).is_err());
        assert!(weak_drive_capacitance(p(0.0, 0.01), 1.0).is_err());
    }

    #[test]
    fn power_examples() {
        assert_eq!(instantaneous_power(p(8.0, 3.0), 0.0).unwrap(), 0.0);
        assert!(close(instantaneous_power(p(8.0, 3.0), PI / 20.0).unwrap(), 14.4, 1e-13));
        assert!(close(instantaneous_power(p(8.0, 3.0), PI / 10.0).unwrap(), 0.0, 1e-13));
        assert!(close(max_power(p(8.0, 3.0)), 14.4, 1e-14));
        assert_eq!(max_power(p(8.0, 0.0)), 0.0);
        assert_eq!(max_power(p(0.0, 5.0)), 0.0);
    }

    #[test]
    fn max_energy_examples() {
        assert!(close(max_energy(p(8.0, 3.0)), 2.88, 1e-15));
        assert_eq!(max_energy(p(2.0, 0.0)), 0.0);
        assert!(close(max_energy(p(1.0, 1000.0)), 1e6 / (1e6 + 0.25), 1e-15));
        assert_eq!(max_energy(p(0.0, 0.0)), 0.0);
    }

    #[test]
    fn charging_time_examples() {
        assert!(close(charging_time(p(8.0, 3.0)).unwrap(), PI / 10.0, 1e-16));
        let weak = charging_time(p(8.0, 0.01)).unwrap();
        assert!(((weak - PI / 8.0) / (PI / 8.0)).abs() < 1e-4);
        assert!(close(charging_time(p(0.0, 5.0)).unwrap(), PI / 10.0, 1e-16));
        assert!(matches!(charging_time(p(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn damped_examples() {
        let q = p(8.0, 3.0);
        assert!(close(damped_energy(q, 0.0, PI / 10.0).unwrap(), 2.88, 1e-14));
        assert_eq!(damped_energy(q, 0.7, 0.0).unwrap(), 0.0);
        assert!(close(damped_energy(q, 0.1, PI / 10.0).unwrap(), 2.7046, 1e-4));

        assert!(close(damped_capacitance(q, 0.0, PI / 10.0).unwrap(), 1.2288, 1e-14));
        assert_eq!(damped_capacitance(q, 0.3, 0.0).unwrap(), 0.0);
        assert!(close(damped_capacitance(q, 0.1, PI / 10.0).unwrap(), 1.2288 * libm::exp(-0.2 * PI / 10.0), 1e-14));
        assert!(close(damped_capacitance(q, 0.1, PI / 10.0).unwrap(), 1.1539678, 1e-7));

        assert!(close(damped_power(q, 0.0, PI / 20.0).unwrap(), 14.4, 1e-13));
        let expected = -2.0 * 0.1 * 2.88 * libm::exp(-0.2 * PI / 10.0);
        assert!(close(damped_power(q, 0.1, PI / 10.0).unwrap(), expected, 1e-12));
        assert!(close(expected, -0.54092, 1e-5));
        assert_eq!(damped_power(q, 0.4, 0.0).unwrap(), 0.0);

        assert!(damped_energy(q, -0.1, 1.0).is_err());
        assert!(damped_capacitance(q, -0.1, 1.0).is_err());
        assert!(damped_power(q, -0.1, 1.0).is_err());
    }

    #[test]
    fn degenerate_parameters_are_silent() {
        let z = p(0.0, 0.0);
        assert_eq!(excited_population(z, 3.0).unwrap(), 0.0);
        assert_eq!(quantum_capacitance(z, 3.0).unwrap(), 0.0);
        assert_eq!(instantaneous_power(z, 3.0).unwrap(), 0.0);
        assert_eq!(rabi_period(z), None);
    }
}
