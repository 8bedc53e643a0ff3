//! Propagation of `iħψ̇ = (H − iΓ)ψ` and its norm-preserving nonlinear
//! counterpart, plus observables and the analysis built on top of them.

mod ehrenfest;
mod floquet;
mod husimi;
mod spectral;

pub use ehrenfest::{dissipation_residuals, verify_generalized_ehrenfest, EhrenfestResiduals};
pub use floquet::{monodromy_quasienergies, one_period_propagator, FloquetSpectrum};
pub use husimi::{husimi_grid, limit_cycle_husimi, HusimiField, HusimiGridSpec, LimitCycleHusimi};
pub use spectral::{spectral_decomposition, SpectralData};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::coherent::bloch_expectations;
use crate::error::{Error, Result};
use crate::ode::{check_grid, AdaptiveStepper};
use crate::operator::{position_momentum, AssembledHamiltonian, HamiltonianSpec, Operator};
use crate::state::QuantumState;

/// Relative population of the top two Fock levels above which a trajectory
/// is flagged as suffering from truncation leakage.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dense exponential for static Hamiltonians, Runge–Kutta otherwise.
    #[default]
    Auto,
    /// `exp(−i(H − iΓ)Δt/ħ)`; static Hamiltonians only.
    Exact,
    RungeKutta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    /// `n(t) = ⟨ψ|ψ⟩`
    pub norms: Vec<f64>,
    /// Normalized expectation values keyed by name (`q`, `p`, `H` for
    /// oscillators; `sx`, `sy`, `sz`, `H` for spins).
    pub observables: BTreeMap<String, Vec<f64>>,
    pub warnings: Vec<String>,
}

impl QuantumTrajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(Vec::as_slice)
    }

    /// Normalized expectation of a Hermitian operator along the trajectory.
    pub fn expectations(&self, op: &Operator) -> Result<Vec<f64>> {
        self.states
            .iter()
            .map(|s| expectation_real(s, op))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `⟨ψ|A|ψ⟩/⟨ψ|ψ⟩`
pub fn expectation(state: &QuantumState, op: &Operator) -> Result<C64> {
    Ok(state.matrix_element(op)? / state.norm_sq())
}

/// Real expectation of a Hermitian operator; errors if the imaginary part
/// exceeds 1e−10 (relative to the magnitude of the result).
pub fn expectation_real(state: &QuantumState, op: &Operator) -> Result<f64> {
    let e = expectation(state, op)?;
    if e.im.abs() > 1e-10 * e.re.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "expectation has imaginary part {:e}; operator not Hermitian?",
            e.im
        )));
    }
    Ok(e.re)
}

/// `Δ²_AB = ⟨½[A, B]₊⟩ − ⟨A⟩⟨B⟩` for Hermitian `A`, `B`.
pub fn covariance(state: &QuantumState, a: &Operator, b: &Operator) -> Result<f64> {
    state.check_dim(a.dim())?;
    state.check_dim(b.dim())?;
    let psi = state.amplitudes();
    let a_psi = a.matrix() * psi;
    let b_psi = b.matrix() * psi;
    let n = state.norm_sq();
    let sym = a_psi.dotc(&b_psi).re / n;
    let ea = psi.dotc(&a_psi).re / n;
    let eb = psi.dotc(&b_psi).re / n;
    Ok(sym - ea * eb)
}

struct ObservableSet {
    named: Vec<(&'static str, Operator)>,
    spin: Option<crate::operator::SpinQuantumNumber>,
}

impl ObservableSet {
    fn for_spec(spec: &HamiltonianSpec, dim: usize) -> Result<Self> {
        match spec {
            HamiltonianSpec::Oscillator(o) => {
                let (q, p) = position_momentum(dim, o.m, o.omega, o.hbar)?;
                Ok(Self {
                    named: vec![("q", q), ("p", p)],
                    spin: None,
                })
            }
            HamiltonianSpec::Spin(s) => Ok(Self {
                named: vec![],
                spin: Some(s.l),
            }),
        }
    }

    fn record(
        &self,
        asm: &AssembledHamiltonian,
        states: &[QuantumState],
        times: &[f64],
    ) -> Result<BTreeMap<String, Vec<f64>>> {
        let mut out = BTreeMap::new();
        for (name, op) in &self.named {
            let v = states
                .iter()
                .map(|s| expectation_real(s, op))
                .collect::<Result<Vec<_>>>()?;
            out.insert((*name).to_string(), v);
        }
        if let Some(l) = self.spin {
            let mut sx = Vec::with_capacity(states.len());
            let mut sy = Vec::with_capacity(states.len());
            let mut sz = Vec::with_capacity(states.len());
            for s in states {
                let b = bloch_expectations(s, l)?;
                sx.push(b[0]);
                sy.push(b[1]);
                sz.push(b[2]);
            }
            out.insert("sx".into(), sx);
            out.insert("sy".into(), sy);
            out.insert("sz".into(), sz);
        }
        let energy = states
            .iter()
            .zip(times)
            .map(|(s, &t)| {
                let psi = s.amplitudes();
                psi.dotc(&asm.apply_hamiltonian(t, psi)).re / s.norm_sq()
            })
            .collect();
        out.insert("H".into(), energy);
        Ok(out)
    }
}

/// Squared norm below which normalized expectations lose precision.
pub const NORM_UNDERFLOW: f64 = 1e-280;

fn norm_warnings(states: &[QuantumState], times: &[f64]) -> Vec<String> {
    states
        .iter()
        .zip(times)
        .find(|(s, _)| s.norm_sq() < NORM_UNDERFLOW)
        .map(|(s, t)| {
            vec![format!(
                "norm underflow: n = {:.3e} at t = {t}; use the normalized propagation for long runs",
                s.norm_sq()
            )]
        })
        .unwrap_or_default()
}

fn leakage_warnings(spec: &HamiltonianSpec, states: &[QuantumState], times: &[f64]) -> Vec<String> {
    if matches!(spec, HamiltonianSpec::Spin(_)) {
        return vec![];
    }
    let worst = states
        .iter()
        .zip(times)
        .map(|(s, &t)| (s.top_population(2), t))
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    if worst.0 > LEAKAGE_THRESHOLD {
        vec![format!(
            "truncation leakage: top two levels hold {:.3e} of the norm at t = {}",
            worst.0, worst.1
        )]
    } else {
        vec![]
    }
}

/// Solves `iħψ̇ = (H − iΓ)ψ` on `t_grid` starting from `psi0` at
/// `t_grid[0]`, without renormalization. The Runge–Kutta backend bounds the
/// local error relative to `‖ψ‖`, so `tol` keeps its meaning as the norm
/// decays.
pub fn propagate(
    spec: &HamiltonianSpec,
    dim: usize,
    psi0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
) -> Result<QuantumTrajectory> {
    propagate_with(spec, dim, psi0, t_grid, tol, Backend::Auto)
}

pub fn propagate_with(
    spec: &HamiltonianSpec,
    dim: usize,
    psi0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
    backend: Backend,
) -> Result<QuantumTrajectory> {
    let asm = spec.assemble(dim)?;
    psi0.check_dim(dim)?;
    check_grid(t_grid)?;
    let time_dependent = spec.is_time_dependent();
    let use_exact = match backend {
        Backend::Auto => !time_dependent,
        Backend::Exact => {
            if time_dependent {
                return Err(Error::Spec(
                    "exact exponential backend requires a time-independent Hamiltonian".into(),
                ));
            }
            true
        }
        Backend::RungeKutta => false,
    };
    let amps = if use_exact {
        exact_steps(&asm, psi0.amplitudes(), t_grid)
    } else {
        AdaptiveStepper::relative(tol).integrate(
            |t, psi: &DVector<C64>| Ok(asm.apply_generator(t, psi)),
            psi0.amplitudes().clone(),
            t_grid,
            |_, _| {},
        )?
    };
    finish(spec, &asm, dim, amps, t_grid)
}

fn finish(
    spec: &HamiltonianSpec,
    asm: &AssembledHamiltonian,
    dim: usize,
    amps: Vec<DVector<C64>>,
    t_grid: &[f64],
) -> Result<QuantumTrajectory> {
    let states = amps
        .into_iter()
        .zip(t_grid)
        .map(|(a, &t)| QuantumState::new(a, t))
        .collect::<Result<Vec<_>>>()?;
    let norms = states.iter().map(QuantumState::norm_sq).collect();
    let observables = ObservableSet::for_spec(spec, dim)?.record(asm, &states, t_grid)?;
    let mut warnings = leakage_warnings(spec, &states, t_grid);
    warnings.extend(norm_warnings(&states, t_grid));
    Ok(QuantumTrajectory {
        times: t_grid.to_vec(),
        states,
        norms,
        observables,
        warnings,
    })
}

/// Relative step-size difference below which a cached exponential is reused;
/// uniform grids built by accumulation differ by rounding only.
const DT_REUSE: f64 = 1e-10;

fn exact_steps(
    asm: &AssembledHamiltonian,
    psi0: &DVector<C64>,
    t_grid: &[f64],
) -> Vec<DVector<C64>> {
    let gen = asm.generator(0.0);
    let mut cache: Option<(f64, DMatrix<C64>)> = None;
    let mut out = Vec::with_capacity(t_grid.len());
    let mut psi = psi0.clone();
    out.push(psi.clone());
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let reuse = matches!(&cache, Some((d, _)) if (d - dt).abs() <= DT_REUSE * dt.abs());
        if !reuse {
            cache = Some((dt, (&gen * C64::new(dt, 0.0)).exp()));
        }
        let u = &cache.as_ref().expect("propagator cached above").1;
        psi = u * psi;
        out.push(psi.clone());
    }
    out
}

/// Solves the normalized nonlinear equation
/// `iħφ̇ = Hφ − i(Γ − ⟨Γ⟩)φ`, which keeps `⟨φ|φ⟩ = 1`.
pub fn propagate_normalized(
    spec: &HamiltonianSpec,
    dim: usize,
    phi0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
) -> Result<QuantumTrajectory> {
    let asm = spec.assemble(dim)?;
    phi0.check_dim(dim)?;
    if (phi0.norm_sq() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter {
            name: "phi0 norm",
            value: phi0.norm_sq(),
            reason: "initial state must be normalized",
        });
    }
    let hbar = asm.hbar;
    let gamma = asm.gamma.matrix().clone();
    let amps = AdaptiveStepper::new(tol).integrate(
        |t, phi: &DVector<C64>| {
            let g_phi = &gamma * phi;
            let mean = phi.dotc(&g_phi).re / phi.norm_squared();
            let h_phi = asm.apply_hamiltonian(t, phi);
            Ok(
                (h_phi * C64::new(0.0, -1.0) - g_phi + phi * C64::new(mean, 0.0))
                    * C64::new(1.0 / hbar, 0.0),
            )
        },
        phi0.amplitudes().clone(),
        t_grid,
        |_, _| {},
    )?;
    finish(spec, &asm, dim, amps, t_grid)
}
