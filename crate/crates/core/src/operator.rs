//! Finite matrix representations of ladder, position/momentum and angular
//! momentum operators, and assembly of non-Hermitian Hamiltonians
//! `Ĥ = H − iΓ` from declarative specifications.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Dense complex operator on a finite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "operator must be non-empty",
            });
        }
        Ok(Self(matrix))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }

    /// `(A + A†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Largest entry of `(A − A†)/2`; zero for a Hermitian operator.
    pub fn antihermitian_defect(&self) -> f64 {
        let d = (&self.0 - self.0.adjoint()) * C64::new(0.5, 0.0);
        max_abs(&d)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.antihermitian_defect() <= tol
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 * &other.0))
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 * &other.0 - &other.0 * &self.0))
    }

    /// `[A, B]₊ = AB + BA`
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(&self.0 * &other.0 + &other.0 * &self.0))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..n {
            out = &out * &self.0;
        }
        Self(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let mut ev: Vec<f64> = h.0.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

/// Truncated annihilation and creation operators on the Fock basis
/// `|0⟩ … |dim−1⟩`.
pub fn ladder_matrices(dim: usize) -> Result<(Operator, Operator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "Fock truncation needs at least two levels",
        });
    }
    let mut a = DMatrix::<C64>::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    Ok((Operator(a), Operator(a_dag)))
}

/// `q̂ = √(ħ/2mω)(â + â†)`, `p̂ = i√(mħω/2)(â† − â)`.
pub fn position_momentum(
    dim: usize,
    m: f64,
    omega: f64,
    hbar: f64,
) -> Result<(Operator, Operator)> {
    require_positive("m", m)?;
    require_positive("omega", omega)?;
    require_positive("hbar", hbar)?;
    let (a, a_dag) = ladder_matrices(dim)?;
    let q = (&a + &a_dag).scale_real((hbar / (2.0 * m * omega)).sqrt());
    let p = (&a_dag - &a).scale(C64::new(0.0, (m * hbar * omega / 2.0).sqrt()));
    Ok((q, p))
}

/// Spin quantum number stored as `2L` so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinQuantumNumber(u32);

impl SpinQuantumNumber {
    pub fn from_twice(two_l: u32) -> Result<Self> {
        if two_l == 0 {
            return Err(Error::InvalidParameter {
                name: "L",
                value: 0.0,
                reason: "need L >= 1/2",
            });
        }
        Ok(Self(two_l))
    }

    pub fn new(l: f64) -> Result<Self> {
        let twice = 2.0 * l;
        if !(twice.is_finite() && twice >= 1.0 && (twice - twice.round()).abs() < 1e-12) {
            return Err(Error::InvalidParameter {
                name: "L",
                value: l,
                reason: "2L must be a positive integer",
            });
        }
        Self::from_twice(twice.round() as u32)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Magnetic quantum number of basis index `i` (`i = 0` is `m = L`).
    pub fn m_of(self, i: usize) -> f64 {
        self.value() - i as f64
    }
}

/// `(L̂x, L̂y, L̂z)` in the basis `|L, L⟩, |L, L−1⟩, …, |L, −L⟩` with ħ = 1.
pub fn angular_momentum_matrices(l: SpinQuantumNumber) -> (Operator, Operator, Operator) {
    let dim = l.dim();
    let lv = l.value();
    let mut raise = DMatrix::<C64>::zeros(dim, dim);
    // L+ |m⟩ = √(L(L+1) − m(m+1)) |m+1⟩; index i holds m = L − i.
    for i in 1..dim {
        let m = l.m_of(i);
        raise[(i - 1, i)] = C64::new((lv * (lv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let lx = (&raise + &lower) * C64::new(0.5, 0.0);
    let ly = (&raise - &lower) * C64::new(0.0, -0.5);
    let lz = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(l.m_of(i), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    (Operator(lx), Operator(ly), Operator(lz))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingKind {
    /// `Γ̂ = k Ĥ₀`, the harmonic part of the Hamiltonian.
    ProportionalToH0,
    /// `Γ̂ = k p̂²/2m`.
    KineticOnly,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingSpec {
    pub kind: DampingKind,
    /// Damping ratio; the decay rate is `γ = kω`.
    pub k: f64,
    /// Frequency of the coherent states used for classicalization.
    /// `None` means the oscillator frequency.
    pub omega_prime: Option<f64>,
}

impl DampingSpec {
    pub fn none() -> Self {
        Self {
            kind: DampingKind::None,
            k: 0.0,
            omega_prime: None,
        }
    }

    pub fn proportional(k: f64) -> Self {
        Self {
            kind: DampingKind::ProportionalToH0,
            k,
            omega_prime: None,
        }
    }

    pub fn kinetic(k: f64) -> Self {
        Self {
            kind: DampingKind::KineticOnly,
            k,
            omega_prime: None,
        }
    }

    pub fn with_omega_prime(mut self, omega_prime: f64) -> Self {
        self.omega_prime = Some(omega_prime);
        self
    }
}

/// Harmonic drive `f_t = f0 cos(Ωt)` coupling through `ħ f_t (â + â†)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub f0: f64,
    pub big_omega: f64,
}

impl Drive {
    pub fn amplitude(&self, t: f64) -> f64 {
        self.f0 * (self.big_omega * t).cos()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.big_omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Harmonic,
    DrivenHarmonic,
    Anharmonic,
    Spin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSpec {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub damping: DampingSpec,
    /// Quartic coefficient of `(β/4) q̂⁴`.
    pub beta: f64,
    pub drive: Option<Drive>,
}

impl OscillatorSpec {
    /// `m = ω = ħ = 1`, no damping, no drive, harmonic.
    pub fn unit() -> Self {
        Self {
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
            damping: DampingSpec::none(),
            beta: 0.0,
            drive: None,
        }
    }

    /// Damped oscillator with `Γ̂ = (γ/ω) Ĥ₀`.
    pub fn damped(m: f64, omega: f64, hbar: f64, gamma: f64) -> Self {
        Self {
            m,
            omega,
            hbar,
            damping: DampingSpec::proportional(gamma / omega),
            beta: 0.0,
            drive: None,
        }
    }

    pub fn with_drive(mut self, f0: f64, big_omega: f64) -> Self {
        self.drive = Some(Drive { f0, big_omega });
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn gamma(&self) -> f64 {
        match self.damping.kind {
            DampingKind::None => 0.0,
            _ => self.damping.k * self.omega,
        }
    }

    pub fn frame_omega(&self) -> f64 {
        self.damping.omega_prime.unwrap_or(self.omega)
    }

    pub fn family(&self) -> Family {
        if self.beta != 0.0 {
            Family::Anharmonic
        } else if self.drive.is_some() {
            Family::DrivenHarmonic
        } else {
            Family::Harmonic
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("m", self.m)?;
        require_positive("omega", self.omega)?;
        require_positive("hbar", self.hbar)?;
        require_non_negative("k", self.damping.k)?;
        if let Some(w) = self.damping.omega_prime {
            require_positive("omega_prime", w)?;
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "must be finite",
            });
        }
        if let Some(d) = self.drive {
            if !d.f0.is_finite() || !d.big_omega.is_finite() {
                return Err(Error::Spec("drive parameters must be finite".into()));
            }
        }
        Ok(())
    }
}

/// `Ĥ = 2εL̂z + 2vL̂x + 2cL̂z² − 2iγ(L̂z + L)` with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSpec {
    pub epsilon: f64,
    pub v: f64,
    pub c: f64,
    pub gamma: f64,
    pub l: SpinQuantumNumber,
}

impl SpinSpec {
    /// Classical nonlinearity `g = 2Lc`.
    pub fn g(&self) -> f64 {
        2.0 * self.l.value() * self.c
    }

    /// Spin spec whose classical limit has nonlinearity `g`.
    pub fn from_classical(epsilon: f64, v: f64, g: f64, gamma: f64, l: SpinQuantumNumber) -> Self {
        Self {
            epsilon,
            v,
            c: g / (2.0 * l.value()),
            gamma,
            l,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("gamma", self.gamma)?;
        for (name, v) in [("epsilon", self.epsilon), ("v", self.v), ("c", self.c)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianSpec {
    Oscillator(OscillatorSpec),
    Spin(SpinSpec),
}

impl HamiltonianSpec {
    pub fn family(&self) -> Family {
        match self {
            Self::Oscillator(o) => o.family(),
            Self::Spin(_) => Family::Spin,
        }
    }

    pub fn hbar(&self) -> f64 {
        match self {
            Self::Oscillator(o) => o.hbar,
            Self::Spin(_) => 1.0,
        }
    }

    pub fn drive(&self) -> Option<Drive> {
        match self {
            Self::Oscillator(o) => o.drive,
            Self::Spin(_) => None,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.drive().is_some_and(|d| d.f0 != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Oscillator(o) => o.validate(),
            Self::Spin(s) => s.validate(),
        }
    }

    /// Builds the static parts once; see [`AssembledHamiltonian::at`].
    pub fn assemble(&self, dim: usize) -> Result<AssembledHamiltonian> {
        self.validate()?;
        match self {
            Self::Oscillator(o) => assemble_oscillator(o, dim),
            Self::Spin(s) => {
                if dim != s.l.dim() {
                    return Err(Error::Spec(format!(
                        "spin L = {} needs dim {}, got {dim}",
                        s.l.value(),
                        s.l.dim()
                    )));
                }
                let (lx, _, lz) = angular_momentum_matrices(s.l);
                let h = &(&lz.scale_real(2.0 * s.epsilon) + &lx.scale_real(2.0 * s.v))
                    + &(&lz * &lz).scale_real(2.0 * s.c);
                let gamma = (&lz + &Operator::identity(dim).scale_real(s.l.value()))
                    .scale_real(2.0 * s.gamma);
                Ok(AssembledHamiltonian {
                    h_static: h,
                    gamma,
                    drive: None,
                    hbar: 1.0,
                })
            }
        }
    }
}

fn assemble_oscillator(o: &OscillatorSpec, dim: usize) -> Result<AssembledHamiltonian> {
    let (q, p) = position_momentum(dim, o.m, o.omega, o.hbar)?;
    let q2 = &q * &q;
    let kinetic = (&p * &p).scale_real(0.5 / o.m);
    let h0 = &kinetic + &q2.scale_real(0.5 * o.m * o.omega * o.omega);
    let h = if o.beta != 0.0 {
        &h0 + &(&q2 * &q2).scale_real(o.beta / 4.0)
    } else {
        h0.clone()
    };
    let gamma = match o.damping.kind {
        DampingKind::ProportionalToH0 => h0.scale_real(o.damping.k),
        DampingKind::KineticOnly => kinetic.scale_real(o.damping.k),
        DampingKind::None => Operator::zeros(dim),
    };
    let drive = match o.drive {
        Some(d) => {
            let (a, a_dag) = ladder_matrices(dim)?;
            Some((d, (&a + &a_dag).scale_real(o.hbar)))
        }
        None => None,
    };
    Ok(AssembledHamiltonian {
        h_static: h,
        gamma,
        drive,
        hbar: o.hbar,
    })
}

/// Hamiltonian split into static Hermitian part, damping operator and an
/// optional drive term `f_t · ħ(â + â†)`.
#[derive(Debug, Clone)]
pub struct AssembledHamiltonian {
    pub h_static: Operator,
    pub gamma: Operator,
    pub drive: Option<(Drive, Operator)>,
    pub hbar: f64,
}

impl AssembledHamiltonian {
    pub fn dim(&self) -> usize {
        self.h_static.dim()
    }

    /// `(H(t), Γ)`
    pub fn at(&self, t: f64) -> (Operator, Operator) {
        let h = match &self.drive {
            Some((d, op)) => &self.h_static + &op.scale_real(d.amplitude(t)),
            None => self.h_static.clone(),
        };
        (h, self.gamma.clone())
    }

    /// `H(t) − iΓ`
    pub fn total(&self, t: f64) -> Operator {
        let (h, g) = self.at(t);
        &h - &g.scale(C64::new(0.0, 1.0))
    }

    /// `(H(t) − iΓ)/(iħ)`, the generator of `ψ̇`.
    pub fn generator(&self, t: f64) -> DMatrix<C64> {
        self.total(t).into_matrix() * C64::new(0.0, -1.0 / self.hbar)
    }

    /// `H(t)ψ` without forming `H(t)`.
    pub fn apply_hamiltonian(&self, t: f64, psi: &DVector<C64>) -> DVector<C64> {
        let mut h_psi = self.h_static.matrix() * psi;
        if let Some((d, op)) = &self.drive {
            h_psi += op.matrix() * psi * C64::new(d.amplitude(t), 0.0);
        }
        h_psi
    }

    /// `generator(t) · ψ` without forming the matrix.
    pub fn apply_generator(&self, t: f64, psi: &DVector<C64>) -> DVector<C64> {
        let h_psi = self.apply_hamiltonian(t, psi);
        let g_psi = self.gamma.matrix() * psi;
        (h_psi * C64::new(0.0, -1.0) - g_psi) * C64::new(1.0 / self.hbar, 0.0)
    }
}

/// `(H, Γ)` for the spec at time `t`.
pub fn build_hamiltonian(
    spec: &HamiltonianSpec,
    dim: usize,
    t: f64,
) -> Result<(Operator, Operator)> {
    Ok(spec.assemble(dim)?.at(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn ladder_dim_two() {
        let (a, a_dag) = ladder_matrices(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0));
        assert_eq!(a.matrix()[(0, 0)], c(0.0));
        assert_eq!(a.matrix()[(1, 0)], c(0.0));
        assert_eq!(a_dag, a.adjoint());
    }

    #[test]
    fn number_operator_diagonal() {
        let (a, a_dag) = ladder_matrices(4).unwrap();
        let n = &a_dag * &a;
        for i in 0..4 {
            assert!((n.matrix()[(i, i)] - c(i as f64)).norm() < 1e-15);
        }
    }

    #[test]
    fn ladder_commutator_truncation_defect() {
        let (a, a_dag) = ladder_matrices(6).unwrap();
        let comm = a.commutator(&a_dag).unwrap();
        let mut expected = DMatrix::<C64>::identity(6, 6);
        expected[(5, 5)] = c(-5.0);
        assert!(max_abs(&(comm.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn ladder_rejects_small_dim() {
        assert!(matches!(
            ladder_matrices(1),
            Err(Error::InvalidDimension { dim: 1, .. })
        ));
    }

    #[test]
    fn position_small_case() {
        let (q, p) = position_momentum(2, 1.0, 1.0, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((q.matrix()[(0, 1)] - c(s)).norm() < 1e-15);
        assert!((q.matrix()[(1, 0)] - c(s)).norm() < 1e-15);
        assert!(q.is_hermitian(1e-12) && p.is_hermitian(1e-12));
    }

    #[test]
    fn canonical_commutator_up_to_truncation() {
        for &(m, w, hb) in &[(1.0, 1.0, 1.0), (2.0, 0.5, 0.3), (0.7, 3.0, 1.5)] {
            let dim = 9;
            let (q, p) = position_momentum(dim, m, w, hb).unwrap();
            let comm = q.commutator(&p).unwrap();
            for i in 0..dim - 1 {
                for j in 0..dim {
                    let want = if i == j { C64::new(0.0, hb) } else { c(0.0) };
                    assert!((comm.matrix()[(i, j)] - want).norm() < 1e-12);
                }
            }
            // Truncation defect: iħ(1 − dim) on the last diagonal entry.
            let last = comm.matrix()[(dim - 1, dim - 1)];
            assert!((last - C64::new(0.0, hb * (1.0 - dim as f64))).norm() < 1e-12);
        }
    }

    #[test]
    fn position_rejects_bad_parameters() {
        assert!(matches!(
            position_momentum(4, 0.0, 1.0, 1.0),
            Err(Error::InvalidParameter { name: "m", .. })
        ));
        assert!(position_momentum(4, 1.0, -1.0, 1.0).is_err());
        assert!(position_momentum(4, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn spin_half_lz() {
        let (_, _, lz) = angular_momentum_matrices(SpinQuantumNumber::new(0.5).unwrap());
        assert_eq!(lz.matrix()[(0, 0)], c(0.5));
        assert_eq!(lz.matrix()[(1, 1)], c(-0.5));
    }

    #[test]
    fn spin_one_lx_spectrum() {
        let (lx, _, _) = angular_momentum_matrices(SpinQuantumNumber::new(1.0).unwrap());
        let ev = lx.hermitian_eigenvalues();
        for (e, want) in ev.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_commutation_relations() {
        for two_l in [1, 2, 7, 10] {
            let (lx, ly, lz) =
                angular_momentum_matrices(SpinQuantumNumber::from_twice(two_l).unwrap());
            let r = &lx.commutator(&ly).unwrap() - &lz.scale(C64::new(0.0, 1.0));
            assert!(r.max_abs() < 1e-12, "2L = {two_l}");
            let r = &ly.commutator(&lz).unwrap() - &lx.scale(C64::new(0.0, 1.0));
            assert!(r.max_abs() < 1e-12);
            // Casimir L² = L(L+1)
            let l = two_l as f64 / 2.0;
            let casimir = &(&(&lx * &lx) + &(&ly * &ly)) + &(&lz * &lz);
            let r = &casimir - &Operator::identity(two_l as usize + 1).scale_real(l * (l + 1.0));
            assert!(r.max_abs() < 1e-11);
        }
    }

    #[test]
    fn spin_rejects_invalid_l() {
        assert!(SpinQuantumNumber::new(0.0).is_err());
        assert!(SpinQuantumNumber::new(0.75).is_err());
        assert!(SpinQuantumNumber::new(-1.0).is_err());
        assert_eq!(SpinQuantumNumber::new(2.5).unwrap().dim(), 6);
    }

    #[test]
    fn harmonic_undamped_has_zero_gamma() {
        let spec = HamiltonianSpec::Oscillator(OscillatorSpec::unit());
        let (h, g) = build_hamiltonian(&spec, 10, 0.0).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn spin_half_gamma_is_diagonal() {
        let spec = HamiltonianSpec::Spin(SpinSpec {
            epsilon: 0.0,
            v: 0.0,
            c: 0.0,
            gamma: 1.0,
            l: SpinQuantumNumber::new(0.5).unwrap(),
        });
        let (h, g) = build_hamiltonian(&spec, 2, 0.0).unwrap();
        assert_eq!(h.max_abs(), 0.0);
        assert!((g.matrix()[(0, 0)] - c(2.0)).norm() < 1e-15);
        assert!(g.matrix()[(1, 1)].norm() < 1e-15);
        assert!(g.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn anharmonic_assembled_from_position_momentum() {
        let o = OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_beta(0.4);
        let (h, _) = build_hamiltonian(&HamiltonianSpec::Oscillator(o), 8, 0.0).unwrap();
        let (q, p) = position_momentum(8, 1.0, 1.0, 1.0).unwrap();
        let want =
            &(&(&p * &p).scale_real(0.5) + &(&q * &q).scale_real(0.5)) + &q.powi(4).scale_real(0.1);
        assert!((&h - &want).max_abs() < 1e-12);
    }

    #[test]
    fn harmonic_is_complex_frequency_number_operator() {
        let (w, gamma, hbar, dim) = (1.3, 0.2, 0.7, 12);
        let spec = HamiltonianSpec::Oscillator(OscillatorSpec::damped(0.9, w, hbar, gamma));
        let asm = spec.assemble(dim).unwrap();
        let total = asm.total(0.0);
        let (a, a_dag) = ladder_matrices(dim).unwrap();
        let want = (&(&a_dag * &a) + &Operator::identity(dim).scale_real(0.5))
            .scale(C64::new(w, -gamma) * hbar);
        let diff = (&total - &want).into_matrix();
        let interior = diff.view((0, 0), (dim - 1, dim - 1));
        assert!(interior.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn spin_gamma_matches_shifted_lz() {
        let l = SpinQuantumNumber::new(3.5).unwrap();
        let spec = HamiltonianSpec::Spin(SpinSpec {
            epsilon: 0.3,
            v: 1.0,
            c: 0.2,
            gamma: 0.15,
            l,
        });
        let (h, g) = build_hamiltonian(&spec, l.dim(), 0.0).unwrap();
        let (_, _, lz) = angular_momentum_matrices(l);
        let want = (&lz + &Operator::identity(l.dim()).scale_real(3.5)).scale_real(0.3);
        assert!((&g - &want).max_abs() < 1e-12);
        assert!(h.antihermitian_defect() < 1e-12);
        assert!(g.hermitian_eigenvalues()[0] >= -1e-12);
    }

    #[test]
    fn spin_dimension_mismatch_is_spec_error() {
        let spec = HamiltonianSpec::Spin(SpinSpec {
            epsilon: 0.0,
            v: 1.0,
            c: 0.0,
            gamma: 0.1,
            l: SpinQuantumNumber::new(1.0).unwrap(),
        });
        assert!(matches!(spec.assemble(5), Err(Error::Spec(_))));
    }

    #[test]
    fn drive_enters_as_cosine_times_position_like_term() {
        let o = OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_drive(0.3, 2.0);
        let spec = HamiltonianSpec::Oscillator(o);
        let (h0, _) = build_hamiltonian(&spec, 6, std::f64::consts::FRAC_PI_4).unwrap();
        let (h1, _) = build_hamiltonian(&spec, 6, 0.0).unwrap();
        // cos(2·π/4) = 0, so H(π/4) is the undriven part.
        let (a, a_dag) = ladder_matrices(6).unwrap();
        let diff = &h1 - &h0;
        assert!((&diff - &(&a + &a_dag).scale_real(0.3)).max_abs() < 1e-12);
    }

    #[test]
    fn negative_damping_rejected() {
        let mut o = OscillatorSpec::unit();
        o.damping = DampingSpec::proportional(-0.1);
        assert!(HamiltonianSpec::Oscillator(o).assemble(4).is_err());
    }
}
