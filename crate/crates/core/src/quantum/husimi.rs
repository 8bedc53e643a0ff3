use nalgebra::DMatrix;
use rayon::prelude::*;

use std::f64::consts::PI;

use crate::coherent::{coherent_overlap, glauber_state, Frame};
use crate::error::{Error, Result};
use crate::ode::uniform_grid;
use crate::operator::{HamiltonianSpec, OscillatorSpec};
use crate::oracle::oscillator_limit_cycle;

use super::{propagate_normalized, QuantumTrajectory};

/// Rectangular phase-space grid and the time window to average over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiGridSpec {
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
    pub n_q: usize,
    pub n_p: usize,
    pub window: (f64, f64),
}

impl HusimiGridSpec {
    fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(self.q_range) || !ok(self.p_range) {
            return Err(Error::InvalidGrid(
                "phase-space ranges must be finite and increasing",
            ));
        }
        if self.n_q < 2 || self.n_p < 2 {
            return Err(Error::InvalidGrid("need at least two points per axis"));
        }
        if !ok(self.window) && self.window.0 != self.window.1 {
            return Err(Error::InvalidWindow(format!("{:?}", self.window)));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let h = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|i| range.0 + h * i as f64).collect()
    }

    pub fn cell_diagonal(&self) -> f64 {
        let dq = (self.q_range.1 - self.q_range.0) / (self.n_q - 1) as f64;
        let dp = (self.p_range.1 - self.p_range.0) / (self.n_p - 1) as f64;
        dq.hypot(dp)
    }
}

/// Time-averaged Husimi density `|⟨α(q,p)|ψ⟩|²/⟨ψ|ψ⟩` and its ridge.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiField {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[(i, j)]` is the density at `(q[i], p[j])`.
    pub values: DMatrix<f64>,
    /// Maximum of the density along each radial ray from the centroid.
    pub ridge: Vec<(f64, f64)>,
    pub samples: usize,
}

pub const RIDGE_RAYS: usize = 360;

impl HusimiField {
    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, q: f64, p: f64) -> Option<f64> {
        let (q0, q1) = (self.q[0], *self.q.last()?);
        let (p0, p1) = (self.p[0], *self.p.last()?);
        if !(q0..=q1).contains(&q) || !(p0..=p1).contains(&p) {
            return None;
        }
        let fq = (q - q0) / (q1 - q0) * (self.q.len() - 1) as f64;
        let fp = (p - p0) / (p1 - p0) * (self.p.len() - 1) as f64;
        let i = (fq.floor() as usize).min(self.q.len() - 2);
        let j = (fp.floor() as usize).min(self.p.len() - 2);
        let (u, v) = (fq - i as f64, fp - j as f64);
        let f = &self.values;
        Some(
            f[(i, j)] * (1.0 - u) * (1.0 - v)
                + f[(i + 1, j)] * u * (1.0 - v)
                + f[(i, j + 1)] * (1.0 - u) * v
                + f[(i + 1, j + 1)] * u * v,
        )
    }

    pub fn centroid(&self) -> (f64, f64) {
        let mut w = 0.0;
        let (mut cq, mut cp) = (0.0, 0.0);
        for (i, q) in self.q.iter().enumerate() {
            for (j, p) in self.p.iter().enumerate() {
                let v = self.values[(i, j)];
                w += v;
                cq += v * q;
                cp += v * p;
            }
        }
        if w > 0.0 {
            (cq / w, cp / w)
        } else {
            (0.0, 0.0)
        }
    }

    fn compute_ridge(&mut self, rays: usize) {
        let (cq, cp) = self.centroid();
        let dq = self.q[1] - self.q[0];
        let dp = self.p[1] - self.p[0];
        let ds = 0.25 * dq.min(dp);
        self.ridge = (0..rays)
            .filter_map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / rays as f64;
                let (c, s) = (th.cos(), th.sin());
                let mut best: Option<(f64, f64, f64)> = None;
                let mut r = 0.0;
                while let Some(v) = self.interpolate(cq + r * c, cp + r * s) {
                    if best.is_none_or(|b| v > b.0) {
                        best = Some((v, cq + r * c, cp + r * s));
                    }
                    r += ds;
                }
                best.map(|b| (b.1, b.2))
            })
            .collect();
    }
}

/// Averages the Husimi density over all states of `traj` whose time lies in
/// the closed window, then extracts the ridge.
pub fn husimi_grid(
    traj: &QuantumTrajectory,
    frame: &Frame,
    grid: &HusimiGridSpec,
) -> Result<HusimiField> {
    grid.validate()?;
    let selected: Vec<_> = traj
        .states
        .iter()
        .zip(&traj.times)
        .filter(|(_, t)| **t >= grid.window.0 && **t <= grid.window.1)
        .map(|(s, _)| s)
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidWindow(format!(
            "no samples in [{}, {}]",
            grid.window.0, grid.window.1
        )));
    }
    let q = HusimiGridSpec::axis(grid.q_range, grid.n_q);
    let p = HusimiGridSpec::axis(grid.p_range, grid.n_p);
    let weight = 1.0 / selected.len() as f64;
    let rows: Vec<Vec<f64>> = q
        .par_iter()
        .map(|&qv| {
            p.iter()
                .map(|&pv| {
                    let alpha = frame.alpha(qv, pv);
                    selected
                        .iter()
                        .map(|s| coherent_overlap(alpha, s.amplitudes()).norm_sqr() / s.norm_sq())
                        .sum::<f64>()
                        * weight
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(grid.n_q, grid.n_p, |i, j| rows[i][j]);
    let mut field = HusimiField {
        q,
        p,
        values,
        ridge: vec![],
        samples: selected.len(),
    };
    field.compute_ridge(RIDGE_RAYS);
    Ok(field)
}

/// Quantum limit cycle of a driven oscillator and its period-averaged
/// Husimi density.
#[derive(Debug, Clone)]
pub struct LimitCycleHusimi {
    pub field: HusimiField,
    /// `1 − |⟨ψ(2T)|ψ(T)⟩|²` for normalized states: zero for a Floquet state.
    pub floquet_residual: f64,
}

/// Period-averaged Husimi density of the quantum limit cycle of `spec`.
///
/// Reaching the limit cycle by long propagation is numerically unstable for
/// strong drives: the non-Hermitian flow amplifies stray components near the
/// origin by a factor that grows like `exp(γ∫(|α_lc|² − |α|²)dt)`. The state is
/// therefore seeded as the coherent state on the classical cycle, propagated
/// over two periods with `samples` steps each, and checked for Floquet
/// periodicity. The window of `grid` is replaced by the second period.
pub fn limit_cycle_husimi(
    spec: &OscillatorSpec,
    dim: usize,
    grid: &HusimiGridSpec,
    samples: usize,
    tol: f64,
) -> Result<LimitCycleHusimi> {
    if samples == 0 {
        return Err(Error::Spec("samples must be at least 1".into()));
    }
    let cycle = oscillator_limit_cycle(spec)?;
    let frame = Frame::new(spec.m, spec.omega, spec.hbar)?;
    let (q0, p0) = cycle.point(0.0);
    let seed = glauber_state(frame.alpha(q0, p0), dim)?.normalized();
    let period = 2.0 * PI / cycle.big_omega;
    let times = uniform_grid(0.0, 2.0 * period, 2 * samples);
    let traj = propagate_normalized(&HamiltonianSpec::Oscillator(*spec), dim, &seed, &times, tol)?;
    let floquet_residual = 1.0 - traj.states[2 * samples].fidelity(&traj.states[samples])?;
    let dt = period / samples as f64;
    let grid = HusimiGridSpec {
        window: (period - 0.5 * dt, 2.0 * period - 0.5 * dt),
        ..*grid
    };
    Ok(LimitCycleHusimi {
        field: husimi_grid(&traj, &frame, &grid)?,
        floquet_residual,
    })
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64 as C64;

    use super::*;
    use crate::coherent::glauber_state;
    use crate::ode::uniform_grid;
    use crate::operator::{HamiltonianSpec, OscillatorSpec};
    use crate::quantum::propagate;

    fn spec(window: (f64, f64)) -> HusimiGridSpec {
        HusimiGridSpec {
            q_range: (-6.0, 6.0),
            p_range: (-6.0, 6.0),
            n_q: 121,
            n_p: 121,
            window,
        }
    }

    #[test]
    fn coherent_state_peaks_at_its_label() {
        let psi = glauber_state(C64::new(1.0, 0.5), 48).unwrap();
        let tr = propagate(
            &HamiltonianSpec::Oscillator(OscillatorSpec::unit()),
            48,
            &psi,
            &[0.0, 0.1],
            1e-10,
        )
        .unwrap();
        let f = husimi_grid(&tr, &Frame::unit(), &spec((0.0, 0.0))).unwrap();
        assert_eq!(f.samples, 1);
        let (q, p) = Frame::unit().phase_point(C64::new(1.0, 0.5));
        assert!((f.interpolate(q, p).unwrap() - 1.0).abs() < 2e-3);
        let (cq, cp) = f.centroid();
        assert!((cq - q).abs() < 1e-3 && (cp - p).abs() < 1e-3);
    }

    #[test]
    fn orbit_average_forms_a_ring() {
        let psi = glauber_state(C64::new(2.0, 0.0), 64).unwrap();
        let grid = uniform_grid(0.0, 2.0 * std::f64::consts::PI, 128);
        let tr = propagate(
            &HamiltonianSpec::Oscillator(OscillatorSpec::unit()),
            64,
            &psi,
            &grid,
            1e-10,
        )
        .unwrap();
        let f = husimi_grid(
            &tr,
            &Frame::unit(),
            &spec((0.0, 2.0 * std::f64::consts::PI - 1e-9)),
        )
        .unwrap();
        assert_eq!(f.ridge.len(), RIDGE_RAYS);
        // Averaging Gaussians of unit width over a circle of radius R puts
        // the radial maximum near R − 1/(2R).
        let r0 = 2.0 * 2f64.sqrt();
        let radius = r0 - 0.5 / r0;
        let (cq, cp) = f.centroid();
        assert!(cq.hypot(cp) < 0.05);
        for (q, p) in &f.ridge {
            assert!((q.hypot(*p) - radius).abs() < 0.1, "{q} {p}");
        }
    }

    #[test]
    fn empty_window_is_rejected() {
        let psi = glauber_state(C64::new(0.0, 0.0), 8).unwrap();
        let tr = propagate(
            &HamiltonianSpec::Oscillator(OscillatorSpec::unit()),
            8,
            &psi,
            &[0.0, 1.0],
            1e-8,
        )
        .unwrap();
        assert!(matches!(
            husimi_grid(&tr, &Frame::unit(), &spec((5.0, 6.0))),
            Err(Error::InvalidWindow(_))
        ));
        let mut bad = spec((0.0, 1.0));
        bad.n_q = 1;
        assert!(husimi_grid(&tr, &Frame::unit(), &bad).is_err());
    }
}
