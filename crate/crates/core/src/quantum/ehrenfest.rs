use crate::error::{Error, Result};
use crate::operator::{HamiltonianSpec, Operator};

use super::{covariance, expectation, expectation_real, QuantumTrajectory};

/// Pointwise residuals at the interior grid points of a trajectory, using
/// centered differences for the time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EhrenfestResiduals {
    pub times: Vec<f64>,
    /// `|d⟨A⟩/dt − (⟨[A, H]⟩/(iħ) − 2Δ²_AΓ/ħ)|`
    pub observable: Vec<f64>,
    /// `|ħṅ + 2⟨ψ|Γ|ψ⟩|`
    pub norm: Vec<f64>,
    /// `|ħ d⟨H⟩/dt + 2kΔ²_HH|`, only when `A = H` and `Γ = kH`.
    pub energy: Option<Vec<f64>>,
}

impl EhrenfestResiduals {
    pub fn max_observable(&self) -> f64 {
        self.observable.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.norm.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_energy(&self) -> Option<f64> {
        self.energy
            .as_ref()
            .map(|e| e.iter().copied().fold(0.0, f64::max))
    }
}

fn centered(values: &[f64], times: &[f64], k: usize) -> f64 {
    (values[k + 1] - values[k - 1]) / (times[k + 1] - times[k - 1])
}

/// `k` such that `Γ = kH` to 1e−12 (Frobenius, relative), if any.
fn proportionality(h: &Operator, gamma: &Operator) -> Option<f64> {
    let hh: f64 = h.matrix().iter().map(|x| x.norm_sqr()).sum();
    if hh == 0.0 {
        return None;
    }
    let k = h
        .matrix()
        .iter()
        .zip(gamma.matrix().iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum::<f64>()
        / hh;
    let rest = (gamma.matrix() - h.matrix() * num_complex::Complex64::new(k, 0.0)).norm();
    (rest <= 1e-12 * hh.sqrt()).then_some(k)
}

/// Checks the generalized Ehrenfest relation for a Hermitian observable `a`
/// along `traj` and the norm balance. Requires at least three samples.
pub fn verify_generalized_ehrenfest(
    traj: &QuantumTrajectory,
    a: &Operator,
    spec: &HamiltonianSpec,
) -> Result<EhrenfestResiduals> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let dim = traj.states[0].dim();
    let asm = spec.assemble(dim)?;
    let hbar = asm.hbar;
    let means = traj.expectations(a)?;
    let is_energy =
        !spec.is_time_dependent() && (a - &asm.h_static).max_abs() <= 1e-12 * a.max_abs().max(1.0);
    let k = if is_energy {
        proportionality(&asm.h_static, &asm.gamma)
    } else {
        None
    };

    let mut out = EhrenfestResiduals {
        times: Vec::with_capacity(n - 2),
        observable: Vec::with_capacity(n - 2),
        norm: Vec::with_capacity(n - 2),
        energy: k.map(|_| Vec::with_capacity(n - 2)),
    };
    let comm_static = a.commutator(&asm.h_static)?;
    let comm_drive = match &asm.drive {
        Some((d, op)) => Some((*d, a.commutator(op)?)),
        None => None,
    };
    let gamma = &asm.gamma;
    for i in 1..n - 1 {
        let t = traj.times[i];
        let state = &traj.states[i];
        let mut comm = expectation(state, &comm_static)?;
        if let Some((d, c)) = &comm_drive {
            comm += expectation(state, c)? * d.amplitude(t);
        }
        let predicted = (comm / num_complex::Complex64::new(0.0, hbar)).re
            - 2.0 * covariance(state, a, gamma)? / hbar;
        out.observable
            .push((centered(&means, &traj.times, i) - predicted).abs());

        let decay = state.matrix_element(gamma)?.re;
        out.norm
            .push((hbar * centered(&traj.norms, &traj.times, i) + 2.0 * decay).abs());

        if let (Some(k), Some(e)) = (k, out.energy.as_mut()) {
            let var = covariance(state, &asm.h_static, &asm.h_static)?;
            e.push((hbar * centered(&means, &traj.times, i) + 2.0 * k * var).abs());
        }
        out.times.push(t);
    }
    Ok(out)
}

/// `|ħ d⟨H⟩/dt + 2Δ²_HΓ|` at interior points, for static Hamiltonians.
pub fn dissipation_residuals(traj: &QuantumTrajectory, spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    if spec.is_time_dependent() {
        return Err(Error::Spec(
            "dissipation identity needs a static Hamiltonian".into(),
        ));
    }
    let n = traj.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let asm = spec.assemble(traj.states[0].dim())?;
    let energy = traj
        .states
        .iter()
        .map(|s| expectation_real(s, &asm.h_static))
        .collect::<Result<Vec<_>>>()?;
    (1..n - 1)
        .map(|i| {
            let cov = covariance(&traj.states[i], &asm.h_static, &asm.gamma)?;
            Ok((asm.hbar * centered(&energy, &traj.times, i) + 2.0 * cov).abs())
        })
        .collect()
}
