use std::f64::consts::PI;

use proptest::prelude::*;
use qucap_core::analytic::*;

fn params(omega0: f64, omega: f64) -> ConstantDriveParams {
    ConstantDriveParams::new(omega0, omega).unwrap()
}

/// Max |value − reference| over a grid, relative to the running maximum of |reference|.
fn running_rel_error(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for (value, reference) in pairs {
        scale = scale.max(reference.abs());
        let err = (value - reference).abs();
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    worst
}

fn linspace(end: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| end * k as f64 / n as f64)
}

proptest! {
    #[test]
    fn energy_equals_omega0_times_population(omega0 in 0.0..20.0f64, omega in 0.0..20.0f64, t in 0.0..50.0f64) {
        let p = params(omega0, omega);
        prop_assert_eq!(stored_energy(p, t).unwrap(), omega0 * excited_population(p, t).unwrap());
    }

    #[test]
    fn energy_is_bounded_by_max_energy(omega0 in 0.0..20.0f64, omega in 0.0..20.0f64, t in 0.0..50.0f64) {
        let p = params(omega0, omega);
        let e = stored_energy(p, t).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!(e <= max_energy(p) * (1.0 + 1e-15));
        prop_assert!(max_energy(p) <= omega0);
        prop_assert!(rabi_frequency(p) >= omega.max(omega0 / 2.0));
    }

    #[test]
    fn energy_is_periodic(omega0 in 0.0..20.0f64, omega in 0.01..20.0f64, t in 0.0..10.0f64) {
        let p = params(omega0, omega);
        let period = rabi_period(p).unwrap();
        let shifted = stored_energy(p, t + period).unwrap();
        prop_assert!((shifted - stored_energy(p, t).unwrap()).abs() <= 1e-12 * omega0.max(1.0));
    }

    #[test]
    fn first_maximum_sits_at_charging_time(omega0 in 0.0..20.0f64, omega in 0.01..20.0f64) {
        let p = params(omega0, omega);
        let tau = charging_time(p).unwrap();
        prop_assert!((stored_energy(p, tau).unwrap() - max_energy(p)).abs() <= 1e-13 * omega0.max(1.0));
        prop_assert!(instantaneous_power(p, tau).unwrap().abs() <= 1e-12 * max_power(p).max(1.0));
    }

    #[test]
    fn damped_capacitance_is_scaled_capacitance(omega0 in 0.0..20.0f64, omega in 0.0..20.0f64, gamma in 0.0..2.0f64, t in 0.0..10.0f64) {
        let p = params(omega0, omega);
        let scaled = quantum_capacitance(p, t).unwrap() * (-2.0 * gamma * t).exp();
        prop_assert!((damped_capacitance(p, gamma, t).unwrap() - scaled).abs() <= 1e-14 * scaled.abs().max(1.0));
    }
}

#[test]
fn capacitance_matches_drive_derivative_of_energy() {
    for omega0 in [0.5, 1.0, 8.0] {
        for omega in [0.1, 1.0, 3.0] {
            let p = params(omega0, omega);
            let h = 1e-6 * omega.max(1.0);
            let horizon = 4.0 * PI / rabi_frequency(p);
            let err = running_rel_error(linspace(horizon, 400).map(|t| {
                let fd = (stored_energy(params(omega0, omega + h), t).unwrap()
                    - stored_energy(params(omega0, omega - h), t).unwrap())
                    / (2.0 * h);
                (fd, quantum_capacitance(p, t).unwrap())
            }));
            assert!(err <= 1e-5, "omega0={omega0} omega={omega}: {err:e}");
        }
    }
}

#[test]
fn power_matches_time_derivative_of_energy() {
    for omega0 in [0.5, 1.0, 8.0] {
        for omega in [0.1, 1.0, 3.0] {
            let p = params(omega0, omega);
            let dt = 1e-7 / rabi_frequency(p);
            let horizon = 4.0 * PI / rabi_frequency(p);
            let err = running_rel_error(linspace(horizon, 400).skip(1).map(|t| {
                let fd = (stored_energy(p, t + dt).unwrap() - stored_energy(p, t - dt).unwrap()) / (2.0 * dt);
                (fd, instantaneous_power(p, t).unwrap())
            }));
            assert!(err <= 1e-5, "omega0={omega0} omega={omega}: {err:e}");
        }
    }
}

#[test]
fn damped_power_matches_time_derivative_of_damped_energy() {
    for gamma in [0.0, 0.1, 1.0] {
        let p = params(8.0, 3.0);
        let dt = 1e-7 / rabi_frequency(p);
        let err = running_rel_error(linspace(2.0 * PI / 5.0, 400).skip(1).map(|t| {
            let fd = (damped_energy(p, gamma, t + dt).unwrap() - damped_energy(p, gamma, t - dt).unwrap()) / (2.0 * dt);
            (fd, damped_power(p, gamma, t).unwrap())
        }));
        assert!(err <= 1e-5, "gamma={gamma}: {err:e}");
    }
}

#[test]
fn weak_drive_limit_converges() {
    for omega0 in [1.0, 8.0] {
        let p = params(omega0, 0.01 * omega0);
        let scale = max_energy(p);
        let worst = linspace(2.0 * PI / omega0, 2000)
            .map(|t| (stored_energy(p, t).unwrap() - weak_drive_energy(p, t).unwrap()).abs() / scale)
            .fold(0.0, f64::max);
        assert!(worst <= 2e-3, "omega0={omega0}: {worst:e}");
    }
}

#[test]
fn weak_and_strong_charging_time_limits() {
    let weak = params(8.0, 0.01);
    assert!((charging_time(weak).unwrap() / (PI / 8.0) - 1.0).abs() < 1e-4);
    let strong = params(0.01, 100.0);
    assert!((charging_time(strong).unwrap() / (PI / 200.0) - 1.0).abs() < 1e-8);
}
