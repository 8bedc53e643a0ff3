use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{Chart, PhaseGeometry, PhasePoint};
use crate::operator::{DampingKind, DampingSpec, Drive, HamiltonianSpec, OscillatorSpec};

use super::{flow_rhs, ClassicalHamiltonian, PhaseFlow};

/// How the damping operator is classicalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OscillatorVariant {
    /// `Γ = kH₀` in the natural frame.
    Proportional,
    /// `Γ = kp²/2m`.
    KineticOnly,
    /// `Γ = kH₀` read through coherent states of frequency `ω′`.
    Mismatched(f64),
}

impl OscillatorVariant {
    pub fn from_damping(d: &DampingSpec) -> Self {
        match (d.kind, d.omega_prime) {
            (DampingKind::KineticOnly, _) => Self::KineticOnly,
            (_, Some(w)) => Self::Mismatched(w),
            _ => Self::Proportional,
        }
    }
}

/// Constant `Γ₀` left over when `Γ̂` is read in coherent states: the
/// classical norm uses `Γ + Γ₀`.
pub fn gamma_offset(spec: &OscillatorSpec) -> f64 {
    let gamma = spec.gamma();
    match OscillatorVariant::from_damping(&spec.damping) {
        OscillatorVariant::Proportional => spec.hbar * gamma / 2.0,
        OscillatorVariant::KineticOnly => spec.hbar * gamma / 4.0,
        OscillatorVariant::Mismatched(w) => {
            spec.hbar * gamma / 4.0 * (w / spec.omega + spec.omega / w)
        }
    }
}

/// `√(2mħω)`: the classical drive term is `√(2mħω) f_t q`.
pub fn drive_coupling(m: f64, omega: f64, hbar: f64) -> f64 {
    (2.0 * m * hbar * omega).sqrt()
}

/// Coherent-state symbols of the oscillator `H` and `Γ` in physical `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorFunction {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub beta: f64,
    pub k: f64,
    pub kinetic_only: bool,
    pub drive: Option<Drive>,
}

impl OscillatorFunction {
    pub fn from_spec(spec: &OscillatorSpec, variant: OscillatorVariant) -> Self {
        let k = match spec.damping.kind {
            DampingKind::None => 0.0,
            _ => spec.damping.k,
        };
        Self {
            m: spec.m,
            omega: spec.omega,
            hbar: spec.hbar,
            beta: spec.beta,
            k,
            kinetic_only: variant == OscillatorVariant::KineticOnly,
            drive: spec.drive,
        }
    }

    fn force(&self, t: f64) -> f64 {
        self.drive.map_or(0.0, |d| {
            d.amplitude(t) * drive_coupling(self.m, self.omega, self.hbar)
        })
    }
}

impl ClassicalHamiltonian for OscillatorFunction {
    fn h(&self, x: &[f64], t: f64) -> f64 {
        let (q, p) = (x[0], x[1]);
        p * p / (2.0 * self.m)
            + 0.5 * self.m * self.omega.powi(2) * q * q
            + 0.25 * self.beta * q.powi(4)
            + self.force(t) * q
    }

    fn gamma(&self, x: &[f64]) -> f64 {
        let (q, p) = (x[0], x[1]);
        let kinetic = p * p / (2.0 * self.m);
        if self.kinetic_only {
            self.k * kinetic
        } else {
            self.k * (kinetic + 0.5 * self.m * self.omega.powi(2) * q * q)
        }
    }

    fn grad_h(&self, x: &[f64], t: f64) -> Vector2<f64> {
        let (q, p) = (x[0], x[1]);
        Vector2::new(
            self.m * self.omega.powi(2) * q + self.beta * q.powi(3) + self.force(t),
            p / self.m,
        )
    }

    fn grad_gamma(&self, x: &[f64]) -> Vector2<f64> {
        let (q, p) = (x[0], x[1]);
        let dq = if self.kinetic_only {
            0.0
        } else {
            self.k * self.m * self.omega.powi(2) * q
        };
        Vector2::new(dq, self.k * p / self.m)
    }
}

/// Oscillator flow on the physical `(q, p)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorFlow {
    pub geometry: PhaseGeometry,
    pub function: OscillatorFunction,
}

impl OscillatorFlow {
    pub fn new(spec: &HamiltonianSpec, variant: OscillatorVariant) -> Result<Self> {
        let HamiltonianSpec::Oscillator(osc) = spec else {
            return Err(Error::Spec(
                "oscillator flow requested for a spin Hamiltonian".into(),
            ));
        };
        osc.validate()?;
        let frame_omega = match variant {
            OscillatorVariant::Mismatched(w) => {
                crate::error::require_positive("omega_prime", w)?;
                w
            }
            _ => osc.omega,
        };
        Ok(Self {
            geometry: PhaseGeometry::Flat {
                scale: osc.m * frame_omega,
            },
            function: OscillatorFunction::from_spec(osc, variant),
        })
    }
}

impl PhaseFlow for OscillatorFlow {
    fn chart(&self) -> Chart {
        Chart::FlatQp
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<DVector<f64>> {
        let v = super::flow_at(&self.geometry, &self.function, x, t)?;
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    fn energy(&self, x: &[f64], t: f64) -> f64 {
        self.function.h(x, t)
    }

    fn decay(&self, x: &[f64]) -> f64 {
        self.function.gamma(x)
    }
}

/// `(q̇, ṗ)` of the classicalized oscillator.
pub fn oscillator_rhs(
    spec: &HamiltonianSpec,
    variant: OscillatorVariant,
    x: &PhasePoint,
    t: f64,
) -> Result<Vector2<f64>> {
    let flow = OscillatorFlow::new(spec, variant)?;
    flow_rhs(&flow.geometry, &flow.function, x, t)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64 as C64;

    use super::*;
    use crate::classical::integrate;
    use crate::ode::uniform_grid;
    use crate::oracle::{damped_ho_solution, force_amplitude};

    #[test]
    fn gamma_offset_is_vacuum_expectation_of_decay_operator() {
        let base = OscillatorSpec::damped(1.3, 0.8, 0.6, 0.25);
        let mut kinetic = base;
        kinetic.damping = DampingSpec::kinetic(base.damping.k);
        for spec in [base, kinetic] {
            let asm = HamiltonianSpec::Oscillator(spec).assemble(8).unwrap();
            let vacuum = asm.gamma.matrix()[(0, 0)].re;
            assert!((gamma_offset(&spec) - vacuum).abs() < 1e-14);
        }
        let matched = OscillatorSpec {
            damping: base.damping.with_omega_prime(base.omega),
            ..base
        };
        assert!((gamma_offset(&matched) - gamma_offset(&base)).abs() < 1e-15);
        let shifted = OscillatorSpec {
            damping: base.damping.with_omega_prime(2.0 * base.omega),
            ..base
        };
        assert!(gamma_offset(&shifted) > gamma_offset(&base));
    }

    fn damped(gamma: f64) -> HamiltonianSpec {
        HamiltonianSpec::Oscillator(OscillatorSpec::damped(1.0, 1.0, 1.0, gamma))
    }

    #[test]
    fn proportional_velocity_example() {
        let v = oscillator_rhs(
            &damped(0.1),
            OscillatorVariant::Proportional,
            &PhasePoint::flat(2.0, 0.0),
            0.0,
        )
        .unwrap();
        assert!((v[0] + 0.2).abs() < 1e-15);
        assert!((v[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn proportional_trajectory_matches_closed_form() {
        let tr = integrate(
            &OscillatorFlow::new(&damped(0.1), OscillatorVariant::Proportional).unwrap(),
            &PhasePoint::flat(2.0, 0.0),
            &uniform_grid(0.0, 2.0 * std::f64::consts::PI, 50),
            1e-12,
        )
        .unwrap();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            let (q, p) = damped_ho_solution(1.0, 0.1, 1.0, 2.0, 0.0, *t);
            assert!((x[0] - q).abs() < 1e-9 && (x[1] - p).abs() < 1e-9);
        }
        assert!((tr.points[50][0] - 2.0 * (-0.2 * std::f64::consts::PI).exp()).abs() < 1e-9);
        assert!((tr.points[50][0] - 1.0670).abs() < 1e-4);
    }

    #[test]
    fn physical_frame_example() {
        let spec = HamiltonianSpec::Oscillator(OscillatorSpec::damped(2.0, 3.0, 0.5, 0.2));
        let (q, p) = (0.4, -1.1);
        let v = oscillator_rhs(
            &spec,
            OscillatorVariant::Proportional,
            &PhasePoint::flat(q, p),
            0.0,
        )
        .unwrap();
        assert!((v[0] - (p / 2.0 - 0.2 * q)).abs() < 1e-14);
        assert!((v[1] - (-2.0 * 9.0 * q - 0.2 * p)).abs() < 1e-14);
    }

    #[test]
    fn anharmonic_adds_cubic_force() {
        let spec =
            HamiltonianSpec::Oscillator(OscillatorSpec::damped(1.0, 1.0, 1.0, 0.01).with_beta(0.4));
        let v = oscillator_rhs(
            &spec,
            OscillatorVariant::Proportional,
            &PhasePoint::flat(1.5, 0.3),
            0.0,
        )
        .unwrap();
        assert!((v[1] - (-1.5 - 0.4 * 1.5f64.powi(3) - 0.01 * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn kinetic_only_is_linear_friction() {
        let v = oscillator_rhs(
            &damped(0.1),
            OscillatorVariant::KineticOnly,
            &PhasePoint::flat(2.0, 0.5),
            0.0,
        )
        .unwrap();
        assert_eq!(v[0], 0.5);
        assert!((v[1] - (-2.0 - 0.1 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_coefficients() {
        // q̇ = p/m − γ(ω/ω′)q, ṗ = −mω²q − γ(ω′/ω)p
        let (w, wp, g) = (1.0, 2.0, 0.1);
        let v = oscillator_rhs(
            &damped(g),
            OscillatorVariant::Mismatched(wp),
            &PhasePoint::flat(1.0, 1.0),
            0.0,
        )
        .unwrap();
        assert!((v[0] - (1.0 - g * w / wp)).abs() < 1e-15);
        assert!((v[1] - (-1.0 - g * wp / w)).abs() < 1e-15);
        let eliminated = g * (wp / w + w / wp);
        assert!((eliminated - 0.25).abs() < 1e-15);
    }

    #[test]
    fn driven_force_matches_second_order_form() {
        let spec = HamiltonianSpec::Oscillator(
            OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_drive(0.3, 1.2),
        );
        let flow = OscillatorFlow::new(&spec, OscillatorVariant::Proportional).unwrap();
        let f0 = force_amplitude(1.0, 1.0, 1.0, 0.3);
        let (q, p, t) = (0.3, -0.4, 0.7);
        let v = flow.velocity(&[q, p], t).unwrap();
        // q̈ from the chain rule vs. the damped driven oscillator.
        let h = 1e-6;
        let vp = flow.velocity(&[q + h * v[0], p + h * v[1]], t + h).unwrap();
        let vm = flow.velocity(&[q - h * v[0], p - h * v[1]], t - h).unwrap();
        let qdd = (vp[0] - vm[0]) / (2.0 * h);
        let want = -2.0 * 0.1 * v[0] - (1.0 + 0.01) * q + f0 * (1.2 * t).cos();
        assert!((qdd - want).abs() < 1e-8);
    }

    #[test]
    fn driven_trajectory_follows_coherent_label() {
        let (f0, big) = (0.3, 1.2);
        let spec = HamiltonianSpec::Oscillator(
            OscillatorSpec::damped(1.0, 1.0, 1.0, 0.1).with_drive(f0, big),
        );
        let alpha0 = C64::new(0.5, -0.2);
        let frame = crate::coherent::Frame::unit();
        let (q0, p0) = frame.phase_point(alpha0);
        let tr = integrate(
            &OscillatorFlow::new(&spec, OscillatorVariant::Proportional).unwrap(),
            &PhasePoint::flat(q0, p0),
            &uniform_grid(0.0, 10.0, 20),
            1e-12,
        )
        .unwrap();
        let params = crate::oracle::DrivenHoParams::new(1.0, 0.1, big, f0, 1.0).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.points) {
            let a = crate::oracle::coherent_label(&params, alpha0, *t).unwrap();
            assert!((frame.alpha(x[0], x[1]) - a).norm() < 1e-8);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let spec = OscillatorSpec::damped(1.3, 0.8, 0.7, 0.2)
            .with_beta(0.4)
            .with_drive(0.5, 1.1);
        for variant in [
            OscillatorVariant::Proportional,
            OscillatorVariant::KineticOnly,
        ] {
            let f = OscillatorFunction::from_spec(&spec, variant);
            for &(q, p, t) in &[(0.3, -0.2, 0.0), (1.7, 0.9, 2.5), (-2.2, 1.4, 7.1)] {
                let h = 1e-6;
                let gh = f.grad_h(&[q, p], t);
                let gg = f.grad_gamma(&[q, p]);
                let fd_h = [
                    (f.h(&[q + h, p], t) - f.h(&[q - h, p], t)) / (2.0 * h),
                    (f.h(&[q, p + h], t) - f.h(&[q, p - h], t)) / (2.0 * h),
                ];
                let fd_g = [
                    (f.gamma(&[q + h, p]) - f.gamma(&[q - h, p])) / (2.0 * h),
                    (f.gamma(&[q, p + h]) - f.gamma(&[q, p - h])) / (2.0 * h),
                ];
                for i in 0..2 {
                    assert!((gh[i] - fd_h[i]).abs() <= 1e-6 * gh[i].abs().max(1.0));
                    assert!((gg[i] - fd_g[i]).abs() <= 1e-6 * gg[i].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn hamiltonian_limit_conserves_energy() {
        let spec = HamiltonianSpec::Oscillator(OscillatorSpec::unit());
        let tol = 1e-10;
        let tr = integrate(
            &OscillatorFlow::new(&spec, OscillatorVariant::Proportional).unwrap(),
            &PhasePoint::flat(1.0, 0.5),
            &uniform_grid(0.0, 100.0, 200),
            tol,
        )
        .unwrap();
        let worst = tr
            .energy
            .iter()
            .map(|e| (e - tr.energy[0]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 10.0 * tol, "{worst}");
    }

    #[test]
    fn spin_spec_is_rejected() {
        let l = crate::operator::SpinQuantumNumber::from_twice(2).unwrap();
        let spec = HamiltonianSpec::Spin(crate::operator::SpinSpec::from_classical(
            0.0, 1.0, 0.0, 0.0, l,
        ));
        assert!(oscillator_rhs(
            &spec,
            OscillatorVariant::Proportional,
            &PhasePoint::flat(0.0, 0.0),
            0.0
        )
        .is_err());
    }
}
