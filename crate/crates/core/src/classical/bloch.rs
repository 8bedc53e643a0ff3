use nalgebra::{DVector, Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::Chart;

use super::{ClassicalHamiltonian, PhaseFlow};

/// Parameters of `H = εp + v√(1−p²)cos 2q + gp²/2`, `Γ = γp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParams {
    pub eps: f64,
    pub v: f64,
    pub g: f64,
    pub gamma: f64,
}

impl BlochParams {
    pub fn new(eps: f64, v: f64, g: f64, gamma: f64) -> Self {
        Self { eps, v, g, gamma }
    }
}

/// Nonlinear non-Hermitian Bloch equations; tangent to `|s| = ½`.
pub fn bloch_rhs(eps: f64, v: f64, g: f64, gamma: f64, s: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = *s;
    [
        -2.0 * eps * y - 4.0 * g * z * y + 4.0 * gamma * z * x,
        2.0 * eps * x + 4.0 * g * z * x - 2.0 * v * z + 4.0 * gamma * z * y,
        2.0 * v * y - gamma * (1.0 - 4.0 * z * z),
    ]
}

pub fn bloch_jacobian(eps: f64, v: f64, g: f64, gamma: f64, s: &[f64; 3]) -> Matrix3<f64> {
    let [x, y, z] = *s;
    Matrix3::new(
        4.0 * gamma * z,
        -2.0 * eps - 4.0 * g * z,
        -4.0 * g * y + 4.0 * gamma * x,
        2.0 * eps + 4.0 * g * z,
        4.0 * gamma * z,
        4.0 * g * x - 2.0 * v + 4.0 * gamma * y,
        0.0,
        2.0 * v,
        8.0 * gamma * z,
    )
}

/// Bloch flow on the Cartesian chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochFlow(pub BlochParams);

impl PhaseFlow for BlochFlow {
    fn chart(&self) -> Chart {
        Chart::BlochCartesian
    }

    fn velocity(&self, x: &[f64], _t: f64) -> Result<DVector<f64>> {
        let BlochParams { eps, v, g, gamma } = self.0;
        Ok(DVector::from_column_slice(&bloch_rhs(
            eps,
            v,
            g,
            gamma,
            &[x[0], x[1], x[2]],
        )))
    }

    fn energy(&self, x: &[f64], _t: f64) -> f64 {
        let p = &self.0;
        2.0 * p.eps * x[2] + 2.0 * p.v * x[0] + 2.0 * p.g * x[2] * x[2]
    }

    fn decay(&self, x: &[f64]) -> f64 {
        2.0 * self.0.gamma * x[2]
    }
}

/// `H` and `Γ` on the canonical `(q, p)` Bloch chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochFunction(pub BlochParams);

impl ClassicalHamiltonian for BlochFunction {
    fn h(&self, x: &[f64], _t: f64) -> f64 {
        let (q, p) = (x[0], x[1]);
        let b = &self.0;
        b.eps * p + b.v * (1.0 - p * p).sqrt() * (2.0 * q).cos() + 0.5 * b.g * p * p
    }

    fn gamma(&self, x: &[f64]) -> f64 {
        self.0.gamma * x[1]
    }

    fn grad_h(&self, x: &[f64], _t: f64) -> Vector2<f64> {
        let (q, p) = (x[0], x[1]);
        let b = &self.0;
        let r = (1.0 - p * p).sqrt();
        Vector2::new(
            -2.0 * b.v * r * (2.0 * q).sin(),
            b.eps - b.v * p * (2.0 * q).cos() / r + b.g * p,
        )
    }

    fn grad_gamma(&self, _x: &[f64]) -> Vector2<f64> {
        Vector2::new(0.0, self.0.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixedPointKind {
    Sink,
    Source,
    Saddle,
    /// Both tangent eigenvalues have vanishing real part.
    Center,
    /// Exactly one tangent eigenvalue has vanishing real part.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub s: [f64; 3],
    pub kind: FixedPointKind,
    /// Eigenvalues of the Jacobian restricted to the tangent plane.
    pub eigenvalues: [C64; 2],
}

const SEEDS: usize = 64;
const RESIDUAL_TOL: f64 = 1e-12;
const DEDUP_RADIUS: f64 = 1e-6;
const CENTER_TOL: f64 = 1e-9;

fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z) * 0.5
        })
        .collect()
}

fn residual(p: &BlochParams, s: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let f = Vector3::from(bloch_rhs(p.eps, p.v, p.g, p.gamma, &[s[0], s[1], s[2]]));
    let c = s.norm_squared() - 0.25;
    (f, (f.norm_squared() + c * c).sqrt())
}

/// Damped Gauss–Newton on `[ṡ(s); |s|² − ¼] = 0`.
fn newton(p: &BlochParams, mut s: Vector3<f64>) -> Option<Vector3<f64>> {
    let (mut f, mut res) = residual(p, &s);
    for _ in 0..200 {
        if res < RESIDUAL_TOL {
            return Some(s);
        }
        let j = bloch_jacobian(p.eps, p.v, p.g, p.gamma, &[s[0], s[1], s[2]]);
        let c = s.norm_squared() - 0.25;
        let jt_j = j.transpose() * j + 4.0 * s * s.transpose();
        let jt_f = j.transpose() * f + 2.0 * s * c;
        let step = jt_j.lu().solve(&(-jt_f))?;
        let mut lambda = 1.0;
        loop {
            let trial = s + step * lambda;
            let (ft, rt) = residual(p, &trial);
            if rt < res || lambda < 1e-6 {
                s = trial;
                f = ft;
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            return None;
        }
    }
    (res < RESIDUAL_TOL).then_some(s)
}

fn classify(p: &BlochParams, s: &Vector3<f64>) -> ([C64; 2], FixedPointKind) {
    let n = s.normalize();
    let helper = if n[0].abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    let j = bloch_jacobian(p.eps, p.v, p.g, p.gamma, &[s[0], s[1], s[2]]);
    let m = Matrix2::new(
        e1.dot(&(j * e1)),
        e1.dot(&(j * e2)),
        e2.dot(&(j * e1)),
        e2.dot(&(j * e2)),
    );
    let tr = m.trace();
    let det = m.determinant();
    let disc = C64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    let ev = [
        (C64::new(tr, 0.0) + disc) * 0.5,
        (C64::new(tr, 0.0) - disc) * 0.5,
    ];
    let re = [ev[0].re, ev[1].re];
    let zero = re.map(|r| r.abs() < CENTER_TOL);
    let kind = match zero {
        [true, true] => FixedPointKind::Center,
        [true, false] | [false, true] => FixedPointKind::Degenerate,
        _ if re[0] < 0.0 && re[1] < 0.0 => FixedPointKind::Sink,
        _ if re[0] > 0.0 && re[1] > 0.0 => FixedPointKind::Source,
        _ => FixedPointKind::Saddle,
    };
    (ev, kind)
}

/// Fixed points of the Bloch flow, found by multi-start Newton from a
/// Fibonacci set of seeds and sorted by increasing `s_z`. An empty list
/// means no seed converged.
pub fn fixed_points(eps: f64, v: f64, g: f64, gamma: f64) -> Vec<FixedPoint> {
    let params = BlochParams::new(eps, v, g, gamma);
    if ![eps, v, g, gamma].iter().all(|x| x.is_finite()) {
        return vec![];
    }
    let roots: Vec<Vector3<f64>> = fibonacci_sphere(SEEDS)
        .into_par_iter()
        .filter_map(|seed| newton(&params, seed))
        .collect();
    let mut unique: Vec<Vector3<f64>> = Vec::new();
    for r in roots {
        if unique.iter().all(|u| (u - r).norm() > DEDUP_RADIUS) {
            unique.push(r);
        }
    }
    unique.sort_by(|a, b| {
        a[2].total_cmp(&b[2])
            .then(a[0].total_cmp(&b[0]))
            .then(a[1].total_cmp(&b[1]))
    });
    unique
        .into_iter()
        .map(|s| {
            let (eigenvalues, kind) = classify(&params, &s);
            FixedPoint {
                s: [s[0], s[1], s[2]],
                kind,
                eigenvalues,
            }
        })
        .collect()
}
