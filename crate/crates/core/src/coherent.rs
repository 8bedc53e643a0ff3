//! Glauber and SU(2) coherent states, Bloch-vector expectations and the
//! Husimi kernel `|⟨α|ψ⟩|²`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{require_positive, Error, Result};
use crate::operator::{angular_momentum_matrices, SpinQuantumNumber};
use crate::state::QuantumState;

/// Oscillator frame `(m, ω, ħ)` mapping phase-space points to coherent
/// labels via `α = (mωq + ip)/√(2mħω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl Frame {
    pub fn new(m: f64, omega: f64, hbar: f64) -> Result<Self> {
        require_positive("m", m)?;
        require_positive("omega", omega)?;
        require_positive("hbar", hbar)?;
        Ok(Self { m, omega, hbar })
    }

    pub fn unit() -> Self {
        Self {
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
        }
    }

    fn scale(&self) -> f64 {
        (2.0 * self.m * self.hbar * self.omega).sqrt()
    }

    pub fn alpha(&self, q: f64, p: f64) -> C64 {
        C64::new(self.m * self.omega * q, p) / self.scale()
    }

    pub fn phase_point(&self, alpha: C64) -> (f64, f64) {
        let s = self.scale();
        (alpha.re * s / (self.m * self.omega), alpha.im * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherentLabel {
    Glauber {
        alpha: C64,
    },
    Spin {
        theta: f64,
        phi: f64,
        l: SpinQuantumNumber,
    },
}

impl CoherentLabel {
    pub fn state(&self, dim: usize) -> Result<QuantumState> {
        match *self {
            Self::Glauber { alpha } => glauber_state(alpha, dim),
            Self::Spin { theta, phi, l } => {
                if dim != l.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: l.dim(),
                        found: dim,
                    });
                }
                su2_state(theta, phi, l)
            }
        }
    }
}

/// Amplitudes `e^{−|α|²/2} αⁿ/√(n!)`, `n < dim`.
pub fn glauber_amplitudes(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

/// Glauber coherent state truncated to `dim` levels. Its squared norm falls
/// short of one by [`glauber_leakage`].
pub fn glauber_state(alpha: C64, dim: usize) -> Result<QuantumState> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "need at least one level",
        });
    }
    QuantumState::new(glauber_amplitudes(alpha, dim), 0.0)
}

/// Poisson tail `e^{−|α|²} Σ_{n ≥ dim} |α|^{2n}/n!` lost to truncation.
pub fn glauber_leakage(alpha: C64, dim: usize) -> f64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    // log of the n = dim term, then sum the tail forward.
    let mut log_term = -x + dim as f64 * x.ln() - ln_factorial(dim);
    let mut total = 0.0;
    let mut n = dim;
    loop {
        let term = log_term.exp();
        total += term;
        n += 1;
        log_term += x.ln() - (n as f64).ln();
        if (n as f64) > x && term < 1e-300_f64.max(total * 1e-17) {
            break;
        }
        if n > dim + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `⟨α|ψ⟩` evaluated on the Fock amplitudes of `psi`.
pub fn coherent_overlap(alpha: C64, amplitudes: &DVector<C64>) -> C64 {
    let conj = alpha.conj();
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (n, a) in amplitudes.iter().enumerate() {
        if n > 0 {
            c = c * conj / (n as f64).sqrt();
        }
        acc += c * a;
    }
    acc
}

/// `exp(iθ(L̂x sinφ − L̂y cosφ))|L, L⟩`
pub fn su2_state(theta: f64, phi: f64, l: SpinQuantumNumber) -> Result<QuantumState> {
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&theta) || !phi.is_finite() {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "polar angle must lie in [0, π]",
        });
    }
    let (lx, ly, _) = angular_momentum_matrices(l);
    let k = lx.matrix() * C64::new(phi.sin(), 0.0) - ly.matrix() * C64::new(phi.cos(), 0.0);
    let u = (k * C64::new(0.0, theta)).exp();
    QuantumState::new(u.column(0).into_owned(), 0.0)
}

/// Bloch vector `s_j = ⟨L̂_j⟩/2L` (normalized expectations).
pub fn bloch_expectations(state: &QuantumState, l: SpinQuantumNumber) -> Result<[f64; 3]> {
    state.check_dim(l.dim())?;
    let (lx, ly, lz) = angular_momentum_matrices(l);
    let norm = state.norm_sq();
    let two_l = l.twice() as f64;
    let s = |op: &crate::operator::Operator| -> Result<f64> {
        Ok(state.matrix_element(op)?.re / norm / two_l)
    };
    Ok([s(&lx)?, s(&ly)?, s(&lz)?])
}

/// Raw projection `|⟨label|ψ⟩|²`, not divided by `⟨ψ|ψ⟩`.
pub fn husimi_overlap(state: &QuantumState, label: &CoherentLabel) -> Result<f64> {
    match label {
        CoherentLabel::Glauber { alpha } => {
            Ok(coherent_overlap(*alpha, state.amplitudes()).norm_sqr())
        }
        CoherentLabel::Spin { .. } => {
            let cs = label.state(state.dim())?;
            Ok(cs.inner(state)?.norm_sqr())
        }
    }
}
