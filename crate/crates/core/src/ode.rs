//! Adaptive Dormand–Prince 5(4) integrator shared by the quantum and
//! classical engines.
//!
//! The local error estimate is the 2-norm (Frobenius norm for matrices) of
//! the difference between the embedded 5th and 4th order solutions, and a
//! step is accepted when it does not exceed the tolerance, taken either as
//! absolute or relative to the norm of the state.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Vector-space operations needed by the stepper.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn add_scaled(&mut self, a: f64, x: &Self);
    /// `a * self`
    fn scaled(&self, a: f64) -> Self;
    fn norm(&self) -> f64;
}

macro_rules! impl_ode_state {
    ($ty:ty) => {
        impl OdeState for $ty {
            fn add_scaled(&mut self, a: f64, x: &Self) {
                self.zip_apply(x, |s, xv| *s += xv * a);
            }
            fn scaled(&self, a: f64) -> Self {
                self.map(|v| v * a)
            }
            fn norm(&self) -> f64 {
                nalgebra::Matrix::norm(self)
            }
        }
    };
}

impl_ode_state!(DVector<C64>);
impl_ode_state!(DVector<f64>);
impl_ode_state!(DMatrix<C64>);

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th order weights minus embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveStepper {
    /// Bound on the local error estimate of an accepted step.
    pub tol: f64,
    /// Scale `tol` by the norm of the current state.
    pub relative: bool,
    pub max_steps: usize,
}

impl AdaptiveStepper {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            relative: false,
            max_steps: 50_000_000,
        }
    }

    /// Relative error control, for linear equations whose solutions decay
    /// by many orders of magnitude.
    pub fn relative(tol: f64) -> Self {
        Self {
            relative: true,
            ..Self::new(tol)
        }
    }

    /// Integrates `y' = rhs(t, y)` and returns the solution at every grid
    /// time (the first entry is `y0`). `post_step` runs after each accepted
    /// step and may modify the state in place (e.g. a manifold projection).
    pub fn integrate<S, F, P>(
        &self,
        mut rhs: F,
        y0: S,
        grid: &[f64],
        mut post_step: P,
    ) -> Result<Vec<S>>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> Result<S>,
        P: FnMut(f64, &mut S),
    {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: self.tol,
                reason: "must be positive",
            });
        }
        check_grid(grid)?;
        let mut out = Vec::with_capacity(grid.len());
        out.push(y0.clone());
        if grid.len() == 1 {
            return Ok(out);
        }

        let mut t = grid[0];
        let mut y = y0;
        let mut h = self.initial_step(&mut rhs, t, &y, grid[grid.len() - 1] - t)?;
        let mut steps = 0usize;

        for &t_next in &grid[1..] {
            while t < t_next {
                let remaining = t_next - t;
                let last = h >= remaining;
                let h_try = if last { remaining } else { h };
                let (y_new, err) = self.step(&mut rhs, t, &y, h_try)?;
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Stiffness { t, h: h_try });
                }
                let tol = if self.relative {
                    self.tol * y.norm()
                } else {
                    self.tol
                };
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                if err <= tol {
                    t = if last { t_next } else { t + h_try };
                    y = y_new;
                    post_step(t, &mut y);
                    // A clipped final step says nothing about the natural size.
                    if !last || factor < 1.0 {
                        h = h_try * factor;
                    }
                } else {
                    h = h_try * factor.min(1.0);
                    if h < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::Stiffness { t, h });
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    fn initial_step<S, F>(&self, rhs: &mut F, t: f64, y: &S, span: f64) -> Result<f64>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> Result<S>,
    {
        let f0 = rhs(t, y)?;
        let d0 = y.norm();
        let d1 = f0.norm();
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        Ok(h.min(span.abs()).max(1e-12))
    }

    fn step<S, F>(&self, rhs: &mut F, t: f64, y: &S, h: f64) -> Result<(S, f64)>
    where
        S: OdeState,
        F: FnMut(f64, &S) -> Result<S>,
    {
        let mut k: Vec<S> = Vec::with_capacity(7);
        k.push(rhs(t, y)?);
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    ys.add_scaled(h * a, kj);
                }
            }
            if stage == 6 {
                // Row 7 of the tableau is the 5th order solution itself.
                k.push(rhs(t + h, &ys)?);
                let mut err = k[0].scaled(h * E[0]);
                for (j, kj) in k.iter().enumerate().skip(1) {
                    if E[j] != 0.0 {
                        err.add_scaled(h * E[j], kj);
                    }
                }
                return Ok((ys, err.norm()));
            }
            k.push(rhs(t + C[stage] * h, &ys)?);
        }
        unreachable!("tableau has seven stages")
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty time grid"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("times must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `t0, t0 + dt, ..., t0 + n dt`.
pub fn uniform_grid(t0: f64, t_end: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps.max(1);
    let dt = (t_end - t0) / n as f64;
    (0..=n).map(|i| t0 + dt * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let stepper = AdaptiveStepper::new(1e-12);
        let grid = uniform_grid(0.0, 5.0, 10);
        let ys = stepper
            .integrate(
                |_, y: &DVector<f64>| Ok(-y),
                DVector::from_element(1, 1.0),
                &grid,
                |_, _| {},
            )
            .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_rotation_keeps_modulus() {
        let stepper = AdaptiveStepper::new(1e-12);
        let grid = uniform_grid(0.0, 20.0, 4);
        let y0 = DVector::from_element(1, C64::new(1.0, 0.0));
        let ys = stepper
            .integrate(
                |_, y: &DVector<C64>| Ok(y * C64::new(0.0, -1.0)),
                y0,
                &grid,
                |_, _| {},
            )
            .unwrap();
        let last = ys.last().unwrap()[0];
        assert!((last - C64::new(0.0, -20.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn relative_control_tracks_decaying_rotation() {
        // y' = (−2 − 3i) y decays to e^{−80} while rotating.
        let rate = C64::new(-2.0, -3.0);
        let grid = uniform_grid(0.0, 40.0, 8);
        let y0 = DVector::from_element(1, C64::new(1.0, 0.0));
        let solve = |stepper: AdaptiveStepper| {
            stepper
                .integrate(
                    |_, y: &DVector<C64>| Ok(y * rate),
                    y0.clone(),
                    &grid,
                    |_, _| {},
                )
                .unwrap()
        };
        let relative = solve(AdaptiveStepper::relative(1e-12));
        let absolute = solve(AdaptiveStepper::new(1e-12));
        let rel_err = |ys: &[DVector<C64>]| {
            let exact = (rate * 40.0).exp();
            (ys.last().unwrap()[0] - exact).norm() / exact.norm()
        };
        assert!(rel_err(&relative) < 1e-9);
        assert!(rel_err(&absolute) > 1e-3);
    }

    #[test]
    fn rejects_non_monotone_grid() {
        let stepper = AdaptiveStepper::new(1e-8);
        let err = stepper
            .integrate(
                |_, y: &DVector<f64>| Ok(y.clone()),
                DVector::from_element(1, 1.0),
                &[0.0, 1.0, 1.0],
                |_, _| {},
            )
            .unwrap_err();
        assert!(matches!(err, Error::InvalidGrid(_)));
    }

    #[test]
    fn blow_up_reports_stiffness() {
        let mut stepper = AdaptiveStepper::new(1e-10);
        stepper.max_steps = 10_000;
        let err = stepper
            .integrate(
                |_, y: &DVector<f64>| Ok(y.map(|v| v * v)),
                DVector::from_element(1, 1.0),
                &[0.0, 2.0],
                |_, _| {},
            )
            .unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }));
    }
}
