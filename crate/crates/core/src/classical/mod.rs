//! Classical limit: the flow `ẋ = Ω⁻¹∇H − G⁻¹∇Γ` on the plane and the
//! Bloch sphere, its integration, and the accompanying norm model.

mod bloch;
mod oscillator;

pub use bloch::{
    bloch_jacobian, bloch_rhs, fixed_points, BlochFlow, BlochFunction, BlochParams, FixedPoint,
    FixedPointKind,
};
pub use oscillator::{
    drive_coupling, gamma_offset, oscillator_rhs, OscillatorFlow, OscillatorFunction,
    OscillatorVariant,
};

pub use crate::geometry::{Chart, PhasePoint};

use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{chart_transform, PhaseGeometry};
use crate::ode::AdaptiveStepper;

const LOCAL_TOL_FACTOR: f64 = 1e-2;

/// Real Hamiltonian `H` and damping function `Γ` on a two-dimensional chart.
pub trait ClassicalHamiltonian: Sync {
    fn h(&self, x: &[f64], t: f64) -> f64;
    fn gamma(&self, x: &[f64]) -> f64;
    fn grad_h(&self, x: &[f64], t: f64) -> Vector2<f64>;
    fn grad_gamma(&self, x: &[f64]) -> Vector2<f64>;
}

/// `Ω⁻¹∇H − G⁻¹∇Γ` at `(x, t)`.
pub fn flow_rhs(
    geom: &PhaseGeometry,
    ham: &dyn ClassicalHamiltonian,
    x: &PhasePoint,
    t: f64,
) -> Result<Vector2<f64>> {
    if x.chart != geom.chart() {
        return Err(Error::UnsupportedChart(format!(
            "point in {:?} but geometry on {:?}",
            x.chart,
            geom.chart()
        )));
    }
    flow_at(geom, ham, x.coords.as_slice(), t)
}

fn flow_at(
    geom: &PhaseGeometry,
    ham: &dyn ClassicalHamiltonian,
    x: &[f64],
    t: f64,
) -> Result<Vector2<f64>> {
    let omega_inv = geom
        .symplectic(x)
        .try_inverse()
        .ok_or(Error::SingularStructure(
            "symplectic form is not invertible",
        ))?;
    let g_inv = geom
        .metric(x)?
        .try_inverse()
        .ok_or(Error::SingularStructure("metric is not invertible"))?;
    Ok(omega_inv * ham.grad_h(x, t) - g_inv * ham.grad_gamma(x))
}

/// A vector field on one chart together with the `H` and `Γ` it derives from.
pub trait PhaseFlow: Sync {
    fn chart(&self) -> Chart;
    fn velocity(&self, x: &[f64], t: f64) -> Result<DVector<f64>>;
    fn energy(&self, x: &[f64], t: f64) -> f64;
    fn decay(&self, x: &[f64]) -> f64;
}

/// [`flow_rhs`] packaged as a [`PhaseFlow`].
#[derive(Debug, Clone)]
pub struct GeneralizedFlow<H> {
    pub geometry: PhaseGeometry,
    pub hamiltonian: H,
}

impl<H: ClassicalHamiltonian> PhaseFlow for GeneralizedFlow<H> {
    fn chart(&self) -> Chart {
        self.geometry.chart()
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<DVector<f64>> {
        let v = flow_at(&self.geometry, &self.hamiltonian, x, t)?;
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    fn energy(&self, x: &[f64], t: f64) -> f64 {
        self.hamiltonian.h(x, t)
    }

    fn decay(&self, x: &[f64]) -> f64 {
        self.hamiltonian.gamma(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub chart: Chart,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    /// `H(x(t), t)`
    pub energy: Vec<f64>,
    /// `Γ(x(t))`
    pub decay: Vec<f64>,
    /// Filled in by [`ClassicalTrajectory::attach_norm`].
    pub norm_factor: Option<Vec<f64>>,
    /// Largest `|s·s − ¼|` seen before re-projection (Bloch Cartesian only).
    pub max_radius_drift: f64,
}

impl ClassicalTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> PhasePoint {
        PhasePoint {
            chart: self.chart,
            coords: self.points[i].clone(),
        }
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.points.iter().map(|x| x[k]).collect()
    }

    /// Bloch vectors along a trajectory on either Bloch chart.
    pub fn bloch_vectors(&self) -> Result<Vec<[f64; 3]>> {
        (0..self.len())
            .map(|i| {
                let s = chart_transform(&self.point(i), Chart::BlochCartesian)?;
                Ok([s.coords[0], s.coords[1], s.coords[2]])
            })
            .collect()
    }

    pub fn attach_norm<F: Fn(&[f64]) -> f64>(
        &mut self,
        gamma_fn: F,
        gamma0: f64,
        hbar: f64,
    ) -> Result<()> {
        self.norm_factor = Some(classical_norm(self, gamma_fn, gamma0, hbar)?);
        Ok(())
    }
}

/// Integrates `flow` from `x0` on `grid`. On the Bloch Cartesian chart the
/// state is projected back to `|s| = ½` after every accepted step.
///
/// Steps are accepted at a local error of `tol/100`, so that the drift
/// accumulated over long runs stays of order `tol`.
pub fn integrate(
    flow: &dyn PhaseFlow,
    x0: &PhasePoint,
    grid: &[f64],
    tol: f64,
) -> Result<ClassicalTrajectory> {
    if x0.chart != flow.chart() {
        return Err(Error::UnsupportedChart(format!(
            "initial point in {:?} but flow on {:?}",
            x0.chart,
            flow.chart()
        )));
    }
    let mut drift = 0.0f64;
    let sphere = flow.chart() == Chart::BlochCartesian;
    let points = AdaptiveStepper::new(tol * LOCAL_TOL_FACTOR).integrate(
        |t, x: &DVector<f64>| flow.velocity(x.as_slice(), t),
        x0.coords.clone(),
        grid,
        |_, x| {
            if sphere {
                let r2 = x.norm_squared();
                drift = drift.max((r2 - 0.25).abs());
                *x *= 0.5 / r2.sqrt();
            }
        },
    )?;
    let energy = points
        .iter()
        .zip(grid)
        .map(|(x, &t)| flow.energy(x.as_slice(), t))
        .collect();
    let decay = points.iter().map(|x| flow.decay(x.as_slice())).collect();
    Ok(ClassicalTrajectory {
        chart: flow.chart(),
        times: grid.to_vec(),
        points,
        energy,
        decay,
        norm_factor: None,
        max_radius_drift: drift,
    })
}

/// `n(t) = exp(−(2/ħ)∫₀ᵗ (Γ(x(τ)) + Γ₀) dτ)` with `Γ` evaluated by
/// `gamma_fn` on the trajectory samples and integrated by piecewise cubic
/// interpolation.
pub fn classical_norm<F: Fn(&[f64]) -> f64>(
    traj: &ClassicalTrajectory,
    gamma_fn: F,
    gamma0: f64,
    hbar: f64,
) -> Result<Vec<f64>> {
    crate::error::require_positive("hbar", hbar)?;
    if traj.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let values: Vec<f64> = traj
        .points
        .iter()
        .map(|x| gamma_fn(x.as_slice()) + gamma0)
        .collect();
    let integral = cumulative_integral(&traj.times, &values);
    Ok(integral.iter().map(|i| (-2.0 / hbar * i).exp()).collect())
}

/// Cumulative `∫ f dt` from `t[0]`, exact for cubics on any grid.
pub(crate) fn cumulative_integral(t: &[f64], f: &[f64]) -> Vec<f64> {
    const GAUSS: [(f64, f64); 3] = [
        (-0.774_596_669_241_483_4, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774_596_669_241_483_4, 5.0 / 9.0),
    ];
    let n = t.len();
    let m = n.min(4);
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for i in 0..n.saturating_sub(1) {
        let j0 = i.saturating_sub(1).min(n - m);
        let nodes = &t[j0..j0 + m];
        let vals = &f[j0..j0 + m];
        let lagrange = |x: f64| -> f64 {
            (0..m)
                .map(|a| {
                    let w: f64 = (0..m)
                        .filter(|&b| b != a)
                        .map(|b| (x - nodes[b]) / (nodes[a] - nodes[b]))
                        .product();
                    w * vals[a]
                })
                .sum()
        };
        let (a, b) = (t[i], t[i + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let piece: f64 = GAUSS
            .iter()
            .map(|(x, w)| w * lagrange(mid + half * x))
            .sum::<f64>()
            * half;
        out.push(out[i] + piece);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::uniform_grid;

    struct Quadratic;

    impl ClassicalHamiltonian for Quadratic {
        fn h(&self, _: &[f64], _: f64) -> f64 {
            0.0
        }
        fn gamma(&self, x: &[f64]) -> f64 {
            0.5 * (x[0] * x[0] + x[1] * x[1])
        }
        fn grad_h(&self, _: &[f64], _: f64) -> Vector2<f64> {
            Vector2::zeros()
        }
        fn grad_gamma(&self, x: &[f64]) -> Vector2<f64> {
            Vector2::new(x[0], x[1])
        }
    }

    struct Constant;

    impl PhaseFlow for Constant {
        fn chart(&self) -> Chart {
            Chart::FlatQp
        }
        fn velocity(&self, _: &[f64], _: f64) -> Result<DVector<f64>> {
            Ok(DVector::from_column_slice(&[1.0, -2.0]))
        }
        fn energy(&self, _: &[f64], _: f64) -> f64 {
            0.0
        }
        fn decay(&self, _: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn pure_gradient_descent() {
        let geom = PhaseGeometry::Flat { scale: 1.0 };
        let x = PhasePoint::flat(0.7, -1.3);
        let v = flow_rhs(&geom, &Quadratic, &x, 0.0).unwrap();
        assert_eq!(v, Vector2::new(-0.7, 1.3));
    }

    #[test]
    fn gamma_never_increases_under_gradient_flow() {
        let flow = GeneralizedFlow {
            geometry: PhaseGeometry::Flat { scale: 1.0 },
            hamiltonian: Quadratic,
        };
        let tr = integrate(
            &flow,
            &PhasePoint::flat(1.0, 2.0),
            &uniform_grid(0.0, 5.0, 100),
            1e-10,
        )
        .unwrap();
        assert!(tr.decay.windows(2).all(|w| w[1] <= w[0]));
        assert!((tr.points[100][0] - (-5.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let geom = PhaseGeometry::BlochCanonical;
        assert!(flow_rhs(&geom, &Quadratic, &PhasePoint::flat(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn constant_field_moves_linearly() {
        let tr = integrate(
            &Constant,
            &PhasePoint::flat(0.0, 0.0),
            &[0.0, 1.0, 3.0],
            1e-10,
        )
        .unwrap();
        assert!((tr.points[2][0] - 3.0).abs() < 1e-12);
        assert!((tr.points[2][1] + 6.0).abs() < 1e-12);
        assert_eq!(tr.max_radius_drift, 0.0);
    }

    #[test]
    fn norm_is_one_without_damping() {
        let tr = integrate(
            &Constant,
            &PhasePoint::flat(0.0, 0.0),
            &uniform_grid(0.0, 2.0, 10),
            1e-10,
        )
        .unwrap();
        let n = classical_norm(&tr, |_| 0.0, 0.0, 1.0).unwrap();
        assert!(n.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn quadrature_is_exact_for_cubics() {
        let t = [0.0, 0.3, 0.5, 1.1, 1.2, 2.0];
        let f: Vec<f64> = t.iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
        let got = cumulative_integral(&t, &f);
        for (x, g) in t.iter().zip(&got) {
            let want = x.powi(4) / 4.0 - x * x + x;
            assert!((g - want).abs() < 1e-13);
        }
        assert_eq!(
            cumulative_integral(&[0.0, 2.0], &[1.0, 3.0]),
            vec![0.0, 4.0]
        );
    }
}
