use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::state::QuantumState;

/// Eigen-decomposition of a non-Hermitian `H − iΓ` with biorthogonal left
/// eigenvectors. Pairs are ordered by increasing decay rate `Γₙ = −Im ℰₙ`,
/// then by increasing `Eₙ = Re ℰₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub right: DMatrix<C64>,
    /// Left eigenvectors as columns, scaled so that `leftₘ† rightₙ = δₘₙ`.
    pub left: DMatrix<C64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `cₙ = leftₙ† ψ`
    pub fn coefficients(&self, psi: &QuantumState) -> Result<Vec<C64>> {
        psi.check_dim(self.len())?;
        Ok((self.left.adjoint() * psi.amplitudes())
            .iter()
            .copied()
            .collect())
    }

    /// Least-decaying component present in `psi`; this is the state the
    /// normalized dynamics relaxes to.
    pub fn dominant_index(&self, psi: &QuantumState) -> Result<Option<usize>> {
        let scale = psi.norm_sq().sqrt();
        Ok(self
            .coefficients(psi)?
            .iter()
            .position(|c| c.norm() > 1e-10 * scale))
    }

    pub fn eigenstate(&self, n: usize) -> Result<QuantumState> {
        QuantumState::new(self.right.column(n).into_owned(), 0.0)
    }

    /// `Σ cₙ e^{−iℰₙt/ħ} φₙ`
    pub fn evolve(&self, psi: &QuantumState, t: f64, hbar: f64) -> Result<QuantumState> {
        let c = self.coefficients(psi)?;
        let weights = DVector::from_iterator(
            c.len(),
            c.iter()
                .zip(&self.eigenvalues)
                .map(|(c, e)| c * (C64::new(0.0, -t / hbar) * e).exp()),
        );
        QuantumState::new(&self.right * weights, psi.t() + t)
    }
}

/// Diagonalizes `op` via a complex Schur form. Fails with
/// [`Error::NearExceptionalPoint`] when an eigenvector residual exceeds 1e−6
/// (relative to the operator scale) or the left/right overlap of some
/// eigenpair drops below 1e−8, in which case that overlap is reported.
pub fn spectral_decomposition(op: &Operator) -> Result<SpectralData> {
    let n = op.dim();
    let scale = op.max_abs().max(1.0);
    let (q, t) = op.matrix().clone().schur().unpack();
    let small = f64::EPSILON * scale;

    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[(j, k)] = -s / d;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        col /= C64::new(norm, 0.0);
    }

    let eigen: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let mut worst = 0.0f64;
    for (k, e) in eigen.iter().enumerate() {
        let col = v.column(k);
        let r = (op.matrix() * col - col * *e).norm();
        worst = worst.max(r);
    }
    if worst > 1e-6 * scale {
        return Err(Error::NearExceptionalPoint { residual: worst });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let decay_scale = 1e-9 * eigen.iter().map(|e| e.im.abs()).fold(1.0, f64::max);
    let bucket = |e: &C64| (-e.im / decay_scale).round() as i64;
    order.sort_by(|&a, &b| {
        bucket(&eigen[a])
            .cmp(&bucket(&eigen[b]))
            .then(eigen[a].re.total_cmp(&eigen[b].re))
    });

    let right = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let inv = right
        .clone()
        .try_inverse()
        .ok_or(Error::NearExceptionalPoint {
            residual: f64::INFINITY,
        })?;
    let left = inv.adjoint();
    let bi = (left.adjoint() * &right - DMatrix::identity(n, n)).norm();
    if !bi.is_finite() || bi > 1e-6 * (n as f64) {
        return Err(Error::NearExceptionalPoint { residual: bi });
    }
    // |⟨L|R⟩| for unit left and right vectors vanishes at an exceptional point.
    let overlap = left
        .column_iter()
        .map(|c| 1.0 / c.norm())
        .fold(1.0, f64::min);
    if overlap < 1e-8 {
        return Err(Error::NearExceptionalPoint { residual: overlap });
    }
    Ok(SpectralData {
        eigenvalues: order.iter().map(|&k| eigen[k]).collect(),
        right,
        left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::glauber_state;
    use crate::operator::{HamiltonianSpec, OscillatorSpec};
    use crate::quantum::propagate;
    use proptest::prelude::*;

    fn damped_total(dim: usize, gamma: f64) -> Operator {
        HamiltonianSpec::Oscillator(OscillatorSpec::damped(1.0, 1.0, 1.0, gamma))
            .assemble(dim)
            .unwrap()
            .total(0.0)
    }

    #[test]
    fn damped_ladder_is_sorted() {
        let s = spectral_decomposition(&damped_total(16, 0.1)).unwrap();
        for (n, e) in s.eigenvalues.iter().take(7).enumerate() {
            let want = C64::new(1.0, -0.1) * (n as f64 + 0.5);
            assert!((e - want).norm() < 1e-10);
        }
    }

    #[test]
    fn two_level_example() {
        let op = Operator::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(2.0, -0.5),
            ],
        ))
        .unwrap();
        let s = spectral_decomposition(&op).unwrap();
        assert!((s.eigenvalues[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - C64::new(2.0, -0.5)).norm() < 1e-14);
        let psi = QuantumState::from_slice(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert_eq!(s.dominant_index(&psi).unwrap(), Some(1));
    }

    #[test]
    fn jordan_block_is_exceptional() {
        let op = Operator::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        ))
        .unwrap();
        assert!(matches!(
            spectral_decomposition(&op),
            Err(Error::NearExceptionalPoint { .. })
        ));
    }

    #[test]
    fn spectral_evolution_matches_propagation() {
        let spec =
            HamiltonianSpec::Oscillator(OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_beta(0.2));
        let dim = 40;
        let asm = spec.assemble(dim).unwrap();
        let s = spectral_decomposition(&asm.total(0.0)).unwrap();
        let psi0 = glauber_state(C64::new(1.0, 0.3), dim).unwrap();
        let tr = propagate(&spec, dim, &psi0, &[0.0, 3.0], 1e-12).unwrap();
        let via = s.evolve(&psi0, 3.0, 1.0).unwrap();
        assert!((via.amplitudes() - tr.states[1].amplitudes()).norm() < 1e-8);
    }

    #[test]
    fn coefficients_reconstruct_state() {
        let s = spectral_decomposition(&damped_total(24, 0.3)).unwrap();
        let psi = glauber_state(C64::new(-0.7, 0.9), 24).unwrap();
        let c = DVector::from_vec(s.coefficients(&psi).unwrap());
        assert!((&s.right * c - psi.amplitudes()).norm() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn biorthogonal_for_random_matrices(seed in proptest::collection::vec(-1.0f64..1.0, 72)) {
            let m = DMatrix::from_fn(6, 6, |i, j| C64::new(seed[i * 6 + j], seed[36 + i * 6 + j]));
            let op = Operator::new(m).unwrap();
            if let Ok(s) = spectral_decomposition(&op) {
                let g = s.left.adjoint() * &s.right;
                prop_assert!((g - DMatrix::<C64>::identity(6, 6)).norm() < 1e-8);
                for w in s.eigenvalues.windows(2) {
                    prop_assert!(-w[0].im <= -w[1].im + 1e-8);
                }
            }
        }
    }
}
