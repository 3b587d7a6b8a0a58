//! Dormand-Prince 5(4) with PI step-size control on fixed-size real states.

use alloc::string::String;

use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 10_000_000;

#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

/// Integrator state carried across consecutive intervals.
pub(crate) struct Dopri5<const N: usize> {
    control: StepControl,
    h: f64,
    err_old: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(control: StepControl) -> Self {
        Dopri5 { control, h: control.max_step, err_old: 1e-4, accepted: 0, rejected: 0 }
    }

    /// Drops step-size history, e.g. after a discontinuity in the right-hand side.
    pub fn restart(&mut self) {
        self.h = self.control.max_step;
        self.err_old = 1e-4;
    }

    /// Advances `y` from `t0` to exactly `t1`. `after_step` runs on every
    /// accepted step and may repair the state in place.
    pub fn advance<F, A>(&mut self, rhs: &F, t0: f64, y: &mut [f64; N], t1: f64, after_step: &mut A) -> Result<()>
    where
        F: Fn(f64, &[f64; N], &mut [f64; N]),
        A: FnMut(f64, &mut [f64; N]) -> Result<()>,
    {
        let mut t = t0;
        let mut k = [[0.0; N]; 7];
        let mut stage = [0.0; N];
        let mut y_new = [0.0; N];
        let expo = 0.2 - BETA * 0.75;

        while t < t1 {
            if self.accepted + self.rejected >= MAX_STEPS {
                return Err(failure(t, "step budget exhausted"));
            }
            let remaining = t1 - t;
            let mut h = self.h.min(self.control.max_step);
            let clamped = h >= remaining * (1.0 - 1e-12);
            if clamped {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(failure(t, "step size underflow"));
            }

            rhs(t, y, &mut k[0]);
            combine(y, h, &[(A21, &k[0])], &mut stage);
            rhs(t + C2 * h, &stage, &mut k[1]);
            combine(y, h, &[(A31, &k[0]), (A32, &k[1])], &mut stage);
            rhs(t + C3 * h, &stage, &mut k[2]);
            combine(y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])], &mut stage);
            rhs(t + C4 * h, &stage, &mut k[3]);
            combine(y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])], &mut stage);
            rhs(t + C5 * h, &stage, &mut k[4]);
            combine(y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])], &mut stage);
            rhs(t + h, &stage, &mut k[5]);
            combine(y, h, &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])], &mut y_new);
            let t_next = if clamped { t1 } else { t + h };
            rhs(t_next, &y_new, &mut k[6]);

            let mut sum = 0.0;
            for i in 0..N {
                let delta =
                    h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let scale = self.control.abs_tol + self.control.rel_tol * y[i].abs().max(y_new[i].abs());
                sum += (delta / scale) * (delta / scale);
            }
            let err = libm::sqrt(sum / N as f64);
            if !err.is_finite() {
                return Err(failure(t, "non-finite error estimate"));
            }

            let fac11 = libm::pow(err, expo);
            if err <= 1.0 {
                let fac = (fac11 / libm::pow(self.err_old, BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let proposal = h / fac;
                self.h = if clamped { proposal.max(self.h) } else { proposal };
                self.err_old = err.max(1e-4);
                self.accepted += 1;
                t = t_next;
                *y = y_new;
                after_step(t, y)?;
            } else {
                self.rejected += 1;
                self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            }
        }
        Ok(())
    }
}

fn failure(t: f64, reason: &str) -> Error {
    Error::IntegrationFailure { reached_t: t, reason: String::from(reason) }
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])], out: &mut [f64; N]) {
    for i in 0..N {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn control(tol: f64, max_step: f64) -> StepControl {
        StepControl { abs_tol: tol, rel_tol: tol, max_step }
    }

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let rhs = |_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let mut solver = Dopri5::<2>::new(control(1e-12, 1.0));
        let mut y = [1.0, 0.0];
        solver.advance(&rhs, 0.0, &mut y, 10.0, &mut |_, _| Ok(())).unwrap();
        assert!((y[0] - libm::cos(10.0)).abs() < 1e-9);
        assert!((y[1] + libm::sin(10.0)).abs() < 1e-9);
        assert!(solver.accepted > 10);
    }

    #[test]
    fn lands_exactly_on_interval_end() {
        let rhs = |_t: f64, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = -y[0];
        let mut solver = Dopri5::<1>::new(control(1e-10, 0.3));
        let mut y = [1.0];
        let mut last_t = 0.0;
        solver
            .advance(&rhs, 0.0, &mut y, 1.0, &mut |t, _| {
                last_t = t;
                Ok(())
            })
            .unwrap();
        assert_eq!(last_t, 1.0);
        assert!((y[0] - libm::exp(-1.0)).abs() < 1e-9);
    }

    #[test]
    fn respects_max_step() {
        let rhs = |_t: f64, _y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = 1.0;
        let mut solver = Dopri5::<1>::new(control(1e-6, 0.01));
        let mut y = [0.0];
        let mut prev = 0.0;
        solver
            .advance(&rhs, 0.0, &mut y, 1.0, &mut |t, _| {
                assert!(t - prev <= 0.01 + 1e-15);
                prev = t;
                Ok(())
            })
            .unwrap();
        assert!(solver.accepted >= 100);
    }

    #[test]
    fn blow_up_reports_reached_time() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let rhs = |_t: f64, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0] * y[0];
        let mut solver = Dopri5::<1>::new(control(1e-10, 0.1));
        let mut y = [1.0];
        let err = solver.advance(&rhs, 0.0, &mut y, 2.0, &mut |_, _| Ok(())).unwrap_err();
        let reached = err.reached_time().unwrap();
        assert!(reached > 0.9 && reached < 1.0, "reached {reached}");
    }

    #[test]
    fn after_step_error_aborts() {
        let rhs = |_t: f64, _y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = 1.0;
        let mut solver = Dopri5::<1>::new(control(1e-8, 0.1));
        let mut y = [0.0];
        let err = solver
            .advance(&rhs, 0.0, &mut y, 1.0, &mut |t, _| {
                if t > 0.5 {
                    Err(Error::Integrity { t, detail: String::from("test") })
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::Integrity { .. }));
    }
}
