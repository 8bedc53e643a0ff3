use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::Operator;

/// Pure state with its (generally decaying) squared norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: DVector<C64>,
    t: f64,
    norm_sq: f64,
}

impl QuantumState {
    pub fn new(amplitudes: DVector<C64>, t: f64) -> Result<Self> {
        let norm_sq = amplitudes.norm_squared();
        if !(norm_sq > 0.0 && norm_sq.is_finite()) {
            return Err(Error::DegenerateState(norm_sq));
        }
        Ok(Self {
            amplitudes,
            t,
            norm_sq,
        })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes), 0.0)
    }

    /// Basis vector `|n⟩`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidDimension {
                dim,
                reason: "basis index out of range",
            });
        }
        let mut v = DVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        Self::new(v, 0.0)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.norm_sq.sqrt();
        Self {
            amplitudes: self.amplitudes.map(|v| v * s),
            t: self.t,
            norm_sq: 1.0,
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_dim(other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr() / (self.norm_sq * other.norm_sq))
    }

    /// Normalized superposition `Σ cᵢ |ψᵢ⟩`.
    pub fn superpose(parts: &[(C64, &QuantumState)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::DegenerateState(0.0))?.1;
        let mut v = DVector::zeros(first.dim());
        for (c, s) in parts {
            first.check_dim(s.dim())?;
            v += s.amplitudes.map(|a| a * c);
        }
        Ok(Self::new(v, first.t)?.normalized())
    }

    /// Population of the top `levels` basis states relative to the norm.
    pub fn top_population(&self, levels: usize) -> f64 {
        let n = self.dim();
        let top: f64 = self
            .amplitudes
            .iter()
            .skip(n.saturating_sub(levels))
            .map(|a| a.norm_sqr())
            .sum();
        top / self.norm_sq
    }

    /// `⟨ψ|A|ψ⟩` without normalization.
    pub fn matrix_element(&self, op: &Operator) -> Result<C64> {
        self.check_dim(op.dim())?;
        Ok(self.amplitudes.dotc(&(op.matrix() * &self.amplitudes)))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_is_rejected() {
        let err = QuantumState::new(DVector::zeros(3), 0.0).unwrap_err();
        assert_eq!(err, Error::DegenerateState(0.0));
    }

    #[test]
    fn norm_cache_matches_amplitudes() {
        let s = QuantumState::from_slice(&[C64::new(1.0, 1.0), C64::new(0.0, 2.0)]).unwrap();
        assert!((s.norm_sq() - s.amplitudes().norm_squared()).abs() < 1e-15);
        assert!((s.normalized().amplitudes().norm() - 1.0).abs() < 1e-15);
    }
}
