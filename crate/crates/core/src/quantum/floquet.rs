use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::AdaptiveStepper;
use crate::operator::{AssembledHamiltonian, HamiltonianSpec};

use super::spectral_decomposition;

/// Quasienergies of a periodically driven system, labelled by the rank `n`
/// of the state they connect to in the undriven spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpectrum {
    pub period: f64,
    /// `εₙ = iħ ln λₙ / T`, unfolded continuously from the undriven ladder.
    pub quasienergies: Vec<C64>,
    /// Eigenvalues `λₙ` of the one-period propagator.
    pub multipliers: Vec<C64>,
    pub warnings: Vec<String>,
}

/// `U(T)` built column by column with the adaptive integrator.
pub fn one_period_propagator(
    asm: &AssembledHamiltonian,
    period: f64,
    tol: f64,
) -> Result<DMatrix<C64>> {
    let dim = asm.dim();
    let columns = (0..dim)
        .into_par_iter()
        .map(|k| {
            let mut e = DVector::<C64>::zeros(dim);
            e[k] = C64::new(1.0, 0.0);
            let out = AdaptiveStepper::new(tol).integrate(
                |t, psi: &DVector<C64>| Ok(asm.apply_generator(t, psi)),
                e,
                &[0.0, period],
                |_, _| {},
            )?;
            Ok(out.into_iter().next_back().expect("two grid points"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&columns))
}

fn multipliers(u: &DMatrix<C64>) -> Vec<C64> {
    let t = u.clone().schur().unpack().1;
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// Greedy nearest matching of `new` onto `reference`; returns, for each
/// reference slot, the index into `new`.
fn match_nearest(reference: &[C64], new: &[C64]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = reference
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            new.iter()
                .enumerate()
                .map(move |(j, x)| ((r - x).norm(), i, j))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slot = vec![usize::MAX; reference.len()];
    let mut used = vec![false; new.len()];
    for (_, i, j) in pairs {
        if slot[i] == usize::MAX && !used[j] {
            slot[i] = j;
            used[j] = true;
        }
    }
    slot
}

/// Principal `iħ ln λ / T` shifted by a multiple of `ħΩ` to lie closest to
/// `target`.
fn unfold(lambda: C64, target: C64, hbar: f64, period: f64) -> C64 {
    let eps = C64::new(0.0, hbar) * lambda.ln() / period;
    let quantum = 2.0 * std::f64::consts::PI * hbar / period;
    let shift = ((target.re - eps.re) / quantum).round();
    eps + C64::new(shift * quantum, 0.0)
}

/// Monodromy quasienergies of a driven spec, tracked by continuation in the
/// drive amplitude from the undriven spectrum (`f0 → 0, f0/2, f0`).
pub fn monodromy_quasienergies(
    spec: &HamiltonianSpec,
    dim: usize,
    tol: f64,
) -> Result<FloquetSpectrum> {
    let drive = spec
        .drive()
        .ok_or_else(|| Error::Spec("quasienergies need a periodic drive".into()))?;
    let period = drive.period();
    let asm = spec.assemble(dim)?;
    let hbar = asm.hbar;
    let undriven = spectral_decomposition(&asm.total(0.0))?;
    let mut targets: Vec<C64> = undriven.eigenvalues.clone();
    let mut previous: Vec<C64> = targets
        .iter()
        .map(|e| (C64::new(0.0, -period / hbar) * e).exp())
        .collect();

    let decays = asm
        .gamma
        .hermitian_eigenvalues()
        .first()
        .is_some_and(|g| *g >= -1e-12)
        && asm.gamma.max_abs() > 0.0;
    let mut warnings = Vec::new();
    for s in [0.0, 0.5, 1.0] {
        let mut stage = asm.clone();
        if let Some((d, _)) = stage.drive.as_mut() {
            d.f0 = drive.f0 * s;
        }
        let lambdas = multipliers(&one_period_propagator(&stage, period, tol)?);
        if decays {
            if let Some(l) = lambdas.iter().find(|l| l.norm() > 1.0 + 1e-10) {
                return Err(Error::Consistency(format!(
                    "Floquet multiplier |λ| = {} exceeds 1 for a decaying system",
                    l.norm()
                )));
            }
        }
        let slot = match_nearest(&previous, &lambdas);
        let tracked: Vec<C64> = slot.iter().map(|&j| lambdas[j]).collect();
        targets = tracked
            .iter()
            .zip(&targets)
            .map(|(l, t)| unfold(*l, *t, hbar, period))
            .collect();
        previous = tracked;
    }
    for (i, a) in previous.iter().enumerate() {
        if previous[i + 1..].iter().any(|b| (a - b).norm() < 1e-10) {
            warnings.push(format!("degenerate Floquet multiplier near {a}"));
            break;
        }
    }
    Ok(FloquetSpectrum {
        period,
        quasienergies: targets,
        multipliers: previous,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OscillatorSpec;
    use crate::oracle::{quasienergy, DrivenHoParams};

    #[test]
    fn undriven_multipliers_are_the_decaying_ladder() {
        let spec = HamiltonianSpec::Oscillator(
            OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_drive(0.0, 1.3),
        );
        let f = monodromy_quasienergies(&spec, 16, 1e-12).unwrap();
        for n in 0..5 {
            let want = C64::new(1.0, -0.1) * (n as f64 + 0.5);
            assert!(
                (f.quasienergies[n] - want).norm() < 1e-8,
                "{n}: {}",
                f.quasienergies[n]
            );
        }
    }

    #[test]
    fn driven_quasienergies_match_closed_form() {
        let spec = HamiltonianSpec::Oscillator(
            OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_drive(0.2, 1.4),
        );
        let f = monodromy_quasienergies(&spec, 32, 1e-12).unwrap();
        let params = DrivenHoParams::new(1.0, 0.1, 1.4, 0.2, 1.0).unwrap();
        for n in 0..3 {
            let want = quasienergy(n, &params).unwrap();
            assert!((f.quasienergies[n] - want).norm() < 1e-6, "{n}");
        }
        assert!(f.multipliers.iter().all(|l| l.norm() <= 1.0));
    }

    #[test]
    fn undriven_spec_is_rejected() {
        let spec = HamiltonianSpec::Oscillator(OscillatorSpec::unit());
        assert!(monodromy_quasienergies(&spec, 8, 1e-10).is_err());
    }

    #[test]
    fn unfold_picks_nearest_branch() {
        let t = 2.0 * std::f64::consts::PI;
        let target = C64::new(2.5, -0.25);
        let lambda = (C64::new(0.0, -t) * target).exp();
        assert!((unfold(lambda, C64::new(2.4, 0.0), 1.0, t) - target).norm() < 1e-12);
    }

    #[test]
    fn matching_is_a_permutation() {
        let r = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let n = [C64::new(2.1, 0.0), C64::new(0.1, 0.0), C64::new(0.9, 0.0)];
        assert_eq!(match_nearest(&r, &n), vec![1, 2, 0]);
    }
}
