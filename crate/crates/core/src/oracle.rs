//! Closed-form solutions of the damped and driven harmonic oscillator with
//! complex frequency `ω̃ = ω − iγ`, used as references for both engines.

use num_complex::Complex64 as C64;

use crate::coherent::glauber_amplitudes;
use crate::error::{require_non_negative, Error, Result};
use crate::operator::{DampingKind, OscillatorSpec};
use crate::state::QuantumState;

const RESONANCE_GUARD: f64 = 1e-12;

/// Driven oscillator `ħω̃(â†â + ½) + ħf_t(â + â†)`, `f_t = f0 cos Ωt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenHoParams {
    pub omega_tilde: C64,
    pub big_omega: f64,
    pub f0: f64,
    pub hbar: f64,
}

impl DrivenHoParams {
    pub fn new(omega: f64, gamma: f64, big_omega: f64, f0: f64, hbar: f64) -> Result<Self> {
        require_non_negative("gamma", gamma)?;
        let p = Self {
            omega_tilde: C64::new(omega, -gamma),
            big_omega,
            f0,
            hbar,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if self.omega_tilde.im > 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: -self.omega_tilde.im,
                reason: "Im ω̃ must be non-positive",
            });
        }
        if self.f0 != 0.0 {
            let d = self.detuning().norm();
            if d <= RESONANCE_GUARD {
                return Err(Error::NearResonance(d));
            }
        }
        Ok(())
    }

    /// `ω̃² − Ω²`
    pub fn detuning(&self) -> C64 {
        self.omega_tilde * self.omega_tilde - self.big_omega * self.big_omega
    }

    pub fn gamma(&self) -> f64 {
        -self.omega_tilde.im
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.big_omega
    }

    pub fn drive(&self, t: f64) -> f64 {
        self.f0 * (self.big_omega * t).cos()
    }
}

fn cexp(z: C64) -> C64 {
    z.exp()
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Solution of `q̈ + 2γq̇ + (ω²+γ²)q = 0` with `q(0) = q0`,
/// `p(0) = p0`, `p = m(q̇ + γq)`. Returns `(q, p)`.
pub fn damped_ho_solution(omega: f64, gamma: f64, m: f64, q0: f64, p0: f64, t: f64) -> (f64, f64) {
    let env = (-gamma * t).exp();
    let (s, c) = (omega * t).sin_cos();
    let q = env * (q0 * c + p0 / (m * omega) * s);
    let p = env * (p0 * c - m * omega * q0 * s);
    (q, p)
}

/// Coefficients of the exact propagated coherent state,
/// `|ψ(t)⟩ = exp(−iω̃t/2 + A + Bα₀ + (C + Dα₀)â†)|α₀⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

pub fn driven_coefficients(params: &DrivenHoParams, t: f64) -> Result<DrivenCoefficients> {
    params.check()?;
    let w = params.omega_tilde;
    let big = params.big_omega;
    let f0 = params.f0;
    let d = cexp(-I * w * t) - 1.0;
    if f0 == 0.0 {
        let zero = C64::new(0.0, 0.0);
        return Ok(DrivenCoefficients {
            a: zero,
            b: zero,
            c: zero,
            d,
        });
    }
    let det = params.detuning();
    let e_minus = cexp(-I * (w - big) * t);
    let e_plus = cexp(-I * (w + big) * t);
    let b = f0 / (2.0 * det) * ((w + big) * e_minus + (w - big) * e_plus - 2.0 * w);
    let c = -f0 / (2.0 * det)
        * ((w - big) * cexp(I * big * t) + (w + big) * cexp(-I * big * t)
            - 2.0 * w * cexp(-I * w * t));
    let a = f0 * f0 / (4.0 * det)
        * (2.0 * I * w * t
            + 1.0 / (2.0 * big)
                * ((w - big) * cexp(2.0 * I * big * t) - (w + big) * cexp(-2.0 * I * big * t)
                    + 2.0 * big)
            + 2.0 * w / det * ((w + big) * e_minus + (w - big) * e_plus - 2.0 * w));
    Ok(DrivenCoefficients { a, b, c, d })
}

/// `α_t = C_t + (1 + D_t)α₀`, solving `iα̇ = ω̃α + f_t`.
pub fn coherent_label(params: &DrivenHoParams, alpha0: C64, t: f64) -> Result<C64> {
    let k = driven_coefficients(params, t)?;
    Ok(k.c + (1.0 + k.d) * alpha0)
}

/// Long-time limit `α_t^{(0)}`, the limit-cycle label (T-periodic).
pub fn limit_cycle_label(params: &DrivenHoParams, t: f64) -> Result<C64> {
    params.check()?;
    if params.f0 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let w = params.omega_tilde;
    let big = params.big_omega;
    Ok(-params.f0 / (2.0 * params.detuning())
        * ((w - big) * cexp(I * big * t) + (w + big) * cexp(-I * big * t)))
}

/// Secular part `A_t^∞ = i f0² ω̃ t / (2(ω̃² − Ω²))` of `A_t`.
pub fn a_secular(params: &DrivenHoParams, t: f64) -> Result<C64> {
    params.check()?;
    if params.f0 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(I * params.f0 * params.f0 * params.omega_tilde * t / (2.0 * params.detuning()))
}

/// Oscillating part `A_t^{(0)}` of the long-time limit of `A_t` (T-periodic).
pub fn a_periodic(params: &DrivenHoParams, t: f64) -> Result<C64> {
    params.check()?;
    if params.f0 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let w = params.omega_tilde;
    let big = params.big_omega;
    Ok(params.f0 * params.f0 / (4.0 * params.detuning())
        * (1.0 / (2.0 * big)
            * ((w - big) * cexp(2.0 * I * big * t) - (w + big) * cexp(-2.0 * I * big * t))))
}

/// `n_t = exp(−γt − |α₀|²(1 − e^{−2γt}))` for the undriven damped oscillator.
pub fn norm_formula(alpha0_abs_sq: f64, gamma: f64, t: f64) -> f64 {
    (-gamma * t - alpha0_abs_sq * (1.0 - (-2.0 * gamma * t).exp())).exp()
}

/// Classical force amplitude `F0` of `q̈ + 2γq̇ + ω₀²q = F0 cos Ωt` that
/// corresponds to the quantum drive `ħ f0 cos(Ωt)(â + â†)`.
pub fn force_amplitude(m: f64, omega: f64, hbar: f64, f0: f64) -> f64 {
    -(2.0 * hbar * omega / m).sqrt() * f0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycle {
    /// Signed amplitude; `q(t) = amplitude · cos(Ωt − δ)`.
    pub amplitude: f64,
    pub delta: f64,
    /// False when `F0 = 0` (phase undefined, reported as 0).
    pub phase_defined: bool,
}

impl LimitCycle {
    pub fn q(&self, big_omega: f64, t: f64) -> f64 {
        self.amplitude * (big_omega * t - self.delta).cos()
    }

    pub fn q_dot(&self, big_omega: f64, t: f64) -> f64 {
        -self.amplitude * big_omega * (big_omega * t - self.delta).sin()
    }
}

/// Steady state of `q̈ + 2γq̇ + ω₀²q = F0 cos Ωt`:
/// `Q² = F0²/((ω₀² − Ω²)² + 4γ²Ω²)`, `δ = atan2(2γΩ, ω₀² − Ω²)`.
pub fn limit_cycle(omega0_sq: f64, gamma: f64, big_omega: f64, force: f64) -> Result<LimitCycle> {
    let detune = omega0_sq - big_omega * big_omega;
    let denom = (detune * detune + 4.0 * gamma * gamma * big_omega * big_omega).sqrt();
    if force == 0.0 {
        return Ok(LimitCycle {
            amplitude: 0.0,
            delta: 0.0,
            phase_defined: false,
        });
    }
    if denom == 0.0 {
        return Err(Error::NearResonance(0.0));
    }
    Ok(LimitCycle {
        amplitude: force / denom,
        delta: (2.0 * gamma * big_omega).atan2(detune),
        phase_defined: true,
    })
}

/// Classical limit cycle of a driven oscillator spec in physical `(q, p)`,
/// with `p = m(q̇ + γq)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorLimitCycle {
    pub cycle: LimitCycle,
    pub big_omega: f64,
    pub m: f64,
    pub gamma: f64,
}

impl OscillatorLimitCycle {
    pub fn point(&self, t: f64) -> (f64, f64) {
        let q = self.cycle.q(self.big_omega, t);
        (
            q,
            self.m * (self.cycle.q_dot(self.big_omega, t) + self.gamma * q),
        )
    }
}

/// Limit cycle of a harmonic spec with drive and `Γ̂ = (γ/ω)Ĥ₀`.
pub fn oscillator_limit_cycle(spec: &OscillatorSpec) -> Result<OscillatorLimitCycle> {
    spec.validate()?;
    let Some(drive) = spec.drive else {
        return Err(Error::Spec("limit cycle requires a drive".into()));
    };
    if spec.beta != 0.0
        || spec.damping.kind == DampingKind::KineticOnly
        || spec.damping.omega_prime.is_some_and(|w| w != spec.omega)
    {
        return Err(Error::Spec(
            "closed-form limit cycle needs a harmonic spec with proportional damping".into(),
        ));
    }
    let gamma = spec.gamma();
    let force = force_amplitude(spec.m, spec.omega, spec.hbar, drive.f0);
    Ok(OscillatorLimitCycle {
        cycle: limit_cycle(
            spec.omega.powi(2) + gamma * gamma,
            gamma,
            drive.big_omega,
            force,
        )?,
        big_omega: drive.big_omega,
        m: spec.m,
        gamma,
    })
}

/// `ε_n = ħω̃(n + ½ − f0²/(2(ω̃² − Ω²)))`
pub fn quasienergy(n: usize, params: &DrivenHoParams) -> Result<C64> {
    params.check()?;
    let shift = if params.f0 == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        params.f0 * params.f0 / (2.0 * params.detuning())
    };
    Ok(params.hbar * params.omega_tilde * (n as f64 + 0.5 - shift))
}

/// Unnormalized exact state
/// `exp(−iω̃t/2 + A_t + B_tα₀ − |α₀|²/2 + |α_t|²/2)|α_t⟩` in the Fock basis.
pub fn exact_driven_state(
    params: &DrivenHoParams,
    alpha0: C64,
    t: f64,
    dim: usize,
) -> Result<QuantumState> {
    let k = driven_coefficients(params, t)?;
    let alpha_t = k.c + (1.0 + k.d) * alpha0;
    let log_pref = -I * params.omega_tilde * t / 2.0 + k.a + k.b * alpha0 - alpha0.norm_sqr() / 2.0
        + alpha_t.norm_sqr() / 2.0;
    let amps = glauber_amplitudes(alpha_t, dim) * log_pref.exp();
    Ok(QuantumState::new(amps, 0.0)?.with_time(t))
}
