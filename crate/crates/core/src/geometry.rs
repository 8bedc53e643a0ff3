//! Symplectic and metric structures on the plane and the Bloch sphere,
//! Kähler compatibility and chart changes.
//!
//! Two-dimensional charts order coordinates as `(q, p)` unless a function
//! says otherwise.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

/// Largest `|p|` accepted on the canonical Bloch chart.
pub const CHART_EDGE: f64 = 1.0 - 1e-8;

/// Residual below which two structures count as compatible.
pub const KAHLER_TOL: f64 = 1e-10;

/// `[[0, −1], [1, 0]]`
pub fn standard_symplectic() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// `(q, p)` on the plane.
    FlatQp,
    /// `(s_x, s_y, s_z)` with `|s| = ½`.
    BlochCartesian,
    /// `(q, p)` with `s_z = p/2` and azimuth `2q`.
    BlochCanonical,
}

impl Chart {
    pub fn dim(self) -> usize {
        match self {
            Chart::BlochCartesian => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub chart: Chart,
    pub coords: DVector<f64>,
}

impl PhasePoint {
    /// Validates the coordinate count and the chart invariant.
    pub fn new(chart: Chart, coords: &[f64]) -> Result<Self> {
        if coords.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Spec("phase point has non-finite coordinates".into()));
        }
        match chart {
            Chart::BlochCartesian => {
                let r2: f64 = coords.iter().map(|c| c * c).sum();
                if (r2 - 0.25).abs() > 1e-10 {
                    return Err(Error::Spec(format!(
                        "Bloch vector has |s|² = {r2}, expected 1/4"
                    )));
                }
            }
            Chart::BlochCanonical if coords[1].abs() > 1.0 => {
                return Err(Error::ChartSingularity(format!(
                    "p = {} outside [−1, 1]",
                    coords[1]
                )));
            }
            _ => {}
        }
        Ok(Self {
            chart,
            coords: DVector::from_column_slice(coords),
        })
    }

    pub fn flat(q: f64, p: f64) -> Self {
        Self {
            chart: Chart::FlatQp,
            coords: DVector::from_column_slice(&[q, p]),
        }
    }

    /// Bloch vector with polar angle `theta` and azimuth `phi`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let s = [
            0.5 * theta.sin() * phi.cos(),
            0.5 * theta.sin() * phi.sin(),
            0.5 * theta.cos(),
        ];
        Self {
            chart: Chart::BlochCartesian,
            coords: DVector::from_column_slice(&s),
        }
    }
}

/// Phase-space structure `(Ω, G)` used by the generalized flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseGeometry {
    /// Plane with `Ω` standard and `G = diag(s, 1/s)`; `s = mω` for a
    /// physical oscillator frame, `s = 1` in scaled coordinates.
    Flat { scale: f64 },
    /// Canonical Bloch chart with `G = diag(2(1−p²), 1/(2(1−p²)))`.
    BlochCanonical,
}

impl PhaseGeometry {
    pub fn chart(&self) -> Chart {
        match self {
            Self::Flat { .. } => Chart::FlatQp,
            Self::BlochCanonical => Chart::BlochCanonical,
        }
    }

    pub fn symplectic(&self, _x: &[f64]) -> Matrix2<f64> {
        standard_symplectic()
    }

    pub fn metric(&self, x: &[f64]) -> Result<Matrix2<f64>> {
        match *self {
            Self::Flat { scale } => Ok(Matrix2::new(scale, 0.0, 0.0, 1.0 / scale)),
            Self::BlochCanonical => {
                let p = x[1];
                if p.abs() > CHART_EDGE {
                    return Err(Error::ChartSingularity(format!(
                        "metric degenerates at p = {p}"
                    )));
                }
                let c = 1.0 - p * p;
                Ok(Matrix2::new(2.0 * c, 0.0, 0.0, 0.5 / c))
            }
        }
    }

    /// Factor relating the raw symplectic form of the chart to `Ω`.
    pub fn kappa(&self) -> f64 {
        match self {
            Self::Flat { .. } => 1.0,
            Self::BlochCanonical => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerReport {
    pub compatible: bool,
    /// `‖ω⁻¹ − (g⁻¹ωg⁻¹)ᵀ‖_max`
    pub residual: f64,
}

/// Tests the compatibility condition `ω⁻¹ = (g⁻¹ωg⁻¹)ᵀ`.
pub fn kahler_check(omega: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<KahlerReport> {
    if omega.shape() != g.shape() || !omega.is_square() {
        return Err(Error::DimensionMismatch {
            expected: omega.nrows(),
            found: g.nrows(),
        });
    }
    let omega_inv = omega
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularStructure(
            "symplectic form is not invertible",
        ))?;
    if (g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) || g.clone().cholesky().is_none() {
        return Err(Error::SingularStructure(
            "metric is not symmetric positive definite",
        ));
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::SingularStructure("metric is not invertible"))?;
    let rhs = (&g_inv * omega * &g_inv).transpose();
    let residual = (omega_inv - rhs).amax();
    Ok(KahlerReport {
        compatible: residual < KAHLER_TOL,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereChart {
    /// `(θ, φ)`
    ThetaPhi,
    /// `(p, q)` with `p = cos θ`, `q = φ/2`; the matrix is in `(p, q)` order.
    PQ,
}

/// Round-sphere metric of radius `r` in the given chart.
pub fn sphere_metric(r: f64, chart: SphereChart, point: [f64; 2]) -> Result<Matrix2<f64>> {
    crate::error::require_positive("R", r)?;
    let r2 = r * r;
    match chart {
        SphereChart::ThetaPhi => {
            let s = point[0].sin();
            if s.abs() < 1e-12 {
                return Err(Error::ChartSingularity(format!(
                    "θ = {} is a pole",
                    point[0]
                )));
            }
            Ok(Matrix2::new(r2, 0.0, 0.0, r2 * s * s))
        }
        SphereChart::PQ => {
            let p = point[0];
            if p.abs() > CHART_EDGE {
                return Err(Error::ChartSingularity(format!("p = {p} is a pole")));
            }
            let c = 1.0 - p * p;
            Ok(Matrix2::new(r2 / c, 0.0, 0.0, 4.0 * r2 * c))
        }
    }
}

/// Conjugates a 2×2 matrix by the coordinate swap, converting between
/// `(p, q)` and `(q, p)` orderings.
pub fn swap_order(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], m[(1, 0)], m[(0, 1)], m[(0, 0)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalPair {
    pub omega: Matrix2<f64>,
    pub g: Matrix2<f64>,
    pub kappa: f64,
}

/// Rescales a raw pair so that `κω` is the standard form and `G` is the
/// multiple of `g` compatible with it (`G = g/√det g`). Both matrices are
/// taken in the same coordinate order as the input.
pub fn canonical_pair_from_raw(omega: &Matrix2<f64>, g: &Matrix2<f64>) -> Result<CanonicalPair> {
    let scale = omega.amax();
    if scale == 0.0 {
        return Err(Error::SingularStructure("symplectic form vanishes"));
    }
    let w = omega[(1, 0)];
    let antisym = omega[(0, 0)].abs() + omega[(1, 1)].abs() + (omega[(0, 1)] + w).abs();
    if antisym > 1e-12 * scale {
        return Err(Error::UnsupportedChart(format!(
            "ω = {omega} is not a multiple of the standard form"
        )));
    }
    let kappa = 1.0 / w;
    let det = g.determinant();
    if (g[(0, 1)] - g[(1, 0)]).abs() > 1e-12 * g.amax() || g[(0, 0)] <= 0.0 || det <= 0.0 {
        return Err(Error::SingularStructure(
            "metric is not symmetric positive definite",
        ));
    }
    Ok(CanonicalPair {
        omega: omega * kappa,
        g: g / det.sqrt(),
        kappa,
    })
}

/// Moves a point between Bloch charts. Flat points cannot change chart.
pub fn chart_transform(x: &PhasePoint, target: Chart) -> Result<PhasePoint> {
    if x.chart == target {
        return Ok(x.clone());
    }
    let c = &x.coords;
    match (x.chart, target) {
        (Chart::BlochCanonical, Chart::BlochCartesian) => {
            let (q, p) = (c[0], c[1]);
            if p.abs() > 1.0 {
                return Err(Error::ChartSingularity(format!("p = {p} outside [−1, 1]")));
            }
            let rho = 0.5 * (1.0 - p * p).sqrt();
            Ok(PhasePoint {
                chart: target,
                coords: DVector::from_column_slice(&[
                    rho * (2.0 * q).cos(),
                    rho * (2.0 * q).sin(),
                    0.5 * p,
                ]),
            })
        }
        (Chart::BlochCartesian, Chart::BlochCanonical) => {
            let rho = c[0].hypot(c[1]);
            if rho <= 1e-12 {
                return Err(Error::ChartSingularity(
                    "azimuth undefined at a pole".into(),
                ));
            }
            let r = (rho * rho + c[2] * c[2]).sqrt();
            let p = (c[2] / r).clamp(-1.0, 1.0);
            Ok(PhasePoint {
                chart: target,
                coords: DVector::from_column_slice(&[0.5 * c[1].atan2(c[0]), p]),
            })
        }
        (from, to) => Err(Error::UnsupportedChart(format!(
            "no transform from {from:?} to {to:?}"
        ))),
    }
}
