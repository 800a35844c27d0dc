//! Physical parameters, phase-space points and Gaussian coherent states.

use std::f64::consts::PI;
use std::ops::Neg;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sign function with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Heaviside step with `theta(0) = 0`.
#[inline]
pub fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Selects one of the two families `R₊/R₋`, `φ⁺/φ⁻`, `Ω⁺/Ω⁻`, `W⁺/W⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[inline]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// ħ, m, the quantum coupling β and the initial width σ₀.
///
/// `beta` may be `±∞`, which only enters through the limits `R± = ±sgn(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hbar: f64,
    pub mass: f64,
    pub beta: f64,
    pub sigma0: f64,
}

impl ModelParams {
    pub fn new(hbar: f64, mass: f64, beta: f64, sigma0: f64) -> Result<Self> {
        let p = ModelParams {
            hbar,
            mass,
            beta,
            sigma0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        positive("sigma0", self.sigma0)?;
        if self.beta.is_nan() {
            return Err(Error::param("beta", "must not be NaN"));
        }
        Ok(())
    }

    /// Same model with a different ħ.
    pub fn with_hbar(&self, hbar: f64) -> Self {
        ModelParams { hbar, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ModelParams { beta, ..*self }
    }

    pub fn is_free(&self) -> bool {
        self.beta == 0.0
    }

    /// Classical coupling `b = −2β/ħ³` (infinite when β is).
    pub fn classical_b(&self) -> f64 {
        -2.0 * self.beta / self.hbar.powi(3)
    }

    /// The momentum scale `ε = ħ²/(mβ)` of the reflection coefficients.
    /// Zero for `β = ±∞`, infinite for `β = 0`.
    pub fn epsilon(&self) -> f64 {
        self.hbar * self.hbar / (self.mass * self.beta)
    }
}

/// A classical state `ξ = (q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }
}

impl Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint {
            q: -self.q,
            p: -self.p,
        }
    }
}

/// `ψ(σ, σ̆, q, p; x) · e^{i·phase}`.
///
/// Requires `Re σ > 0`, `Re σ̆ > 0` and `Re(σ̄ σ̆) = 1`, which makes the state
/// normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub sigma: Complex64,
    pub sigma_breve: Complex64,
    pub center: PhasePoint,
    pub phase: f64,
}

impl CoherentState {
    pub fn new(
        sigma: Complex64,
        sigma_breve: Complex64,
        center: PhasePoint,
        phase: f64,
    ) -> Result<Self> {
        let s = CoherentState {
            sigma,
            sigma_breve,
            center,
            phase,
        };
        s.validate()?;
        Ok(s)
    }

    /// `ψ^ħ_{σ₀,ξ}`: σ = σ₀, σ̆ = 1/σ₀, zero phase.
    pub fn initial(params: &ModelParams, xi: PhasePoint) -> Self {
        CoherentState {
            sigma: Complex64::new(params.sigma0, 0.0),
            sigma_breve: Complex64::new(1.0 / params.sigma0, 0.0),
            center: xi,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.re > 0.0) {
            return Err(Error::param("sigma", "Re sigma must be > 0"));
        }
        if !(self.sigma_breve.re > 0.0) {
            return Err(Error::param("sigma_breve", "Re sigma_breve must be > 0"));
        }
        let r = (self.sigma.conj() * self.sigma_breve).re;
        if (r - 1.0).abs() > 1e-10 {
            return Err(Error::param(
                "sigma",
                format!("Re[conj(sigma) sigma_breve] = {r}, expected 1"),
            ));
        }
        if !self.center.q.is_finite() || !self.center.p.is_finite() || !self.phase.is_finite() {
            return Err(Error::param("center", "q, p and phase must be finite"));
        }
        Ok(())
    }

    /// The same packet centred at `−ξ`; its value at `x` is this one's at `−x`.
    pub fn mirrored(&self) -> Self {
        CoherentState {
            center: -self.center,
            ..*self
        }
    }

    /// Coefficients `(A, B, D)` with `ψ(x) = exp(−A x² + B x + D)`.
    pub(crate) fn log_quadratic(&self, hbar: f64) -> (Complex64, Complex64, Complex64) {
        let (q, p) = (self.center.q, self.center.p);
        let a = self.sigma_breve / (4.0 * hbar * self.sigma);
        let b = 2.0 * a * q + I * (p / hbar);
        let d = -a * q * q - I * (p * q / hbar) + self.log_norm(hbar);
        (a, b, d)
    }

    /// `ln[(2πħ)^{-1/4} σ^{-1/2}] + i·phase`, principal branch.
    pub(crate) fn log_norm(&self, hbar: f64) -> Complex64 {
        Complex64::new(-0.25 * (2.0 * PI * hbar).ln(), 0.0) - 0.5 * self.sigma.ln() + I * self.phase
    }

    /// `ψ̂(k) e^{ikq}`: the Fourier transform without its plane-wave factor.
    #[inline]
    pub(crate) fn ft_envelope(&self, hbar: f64, k: f64) -> Complex64 {
        let dk = k - self.center.p / hbar;
        let expo = -(hbar * dk * dk) * self.sigma / self.sigma_breve + I * self.phase;
        ft_prefactor(hbar, self.sigma_breve) * expo.exp()
    }

    /// Coefficients `(α, β, δ)` with `ψ̂(k) e^{ikq} = exp(−α k² + β k + δ)`.
    pub(crate) fn ft_log_quadratic(&self, hbar: f64) -> (Complex64, Complex64, Complex64) {
        let k0 = self.center.p / hbar;
        let alpha = hbar * self.sigma / self.sigma_breve;
        let lnc = Complex64::new(0.25 * (2.0 * hbar / PI).ln(), 0.0) - 0.5 * self.sigma_breve.ln()
            + I * self.phase;
        (alpha, 2.0 * alpha * k0, -alpha * k0 * k0 + lnc)
    }
}

#[inline]
fn ft_prefactor(hbar: f64, sigma_breve: Complex64) -> Complex64 {
    (2.0 * hbar / PI).powf(0.25) / sigma_breve.sqrt()
}

#[inline]
fn eval_with(hbar: f64, state: &CoherentState, x: f64) -> Complex64 {
    let dx = x - state.center.q;
    let expo = -state.sigma_breve * (dx * dx) / (4.0 * hbar * state.sigma)
        + I * (state.center.p * dx / hbar + state.phase);
    (2.0 * PI * hbar).powf(-0.25) / state.sigma.sqrt() * expo.exp()
}

/// `ψ(σ, σ̆, q, p; x) e^{i·phase}`.
pub fn coherent_eval(params: &ModelParams, state: &CoherentState, x: f64) -> Complex64 {
    eval_with(params.hbar, state, x)
}

/// `ψ̂(k) = σ̆^{-1/2} (2ħ/π)^{1/4} exp(−ħσ(k − p/ħ)²/σ̆ − ikq) e^{i·phase}`.
pub fn coherent_ft(params: &ModelParams, state: &CoherentState, k: f64) -> Complex64 {
    let h = params.hbar;
    let dk = k - state.center.p / h;
    let expo =
        -(h * dk * dk) * state.sigma / state.sigma_breve + I * (state.phase - k * state.center.q);
    ft_prefactor(h, state.sigma_breve) * expo.exp()
}

/// Free evolution `e^{−itH₀/ħ}` of a coherent state: `σ ↦ σ + iσ̆t/(2m)`,
/// `q ↦ q + pt/m`, phase advanced by `p²t/(2mħ)`.
///
/// For the initial family this is `σ_t = σ₀ + it/(2mσ₀)` and `A_t = p²t/(2m)`.
pub fn free_evolve_state(params: &ModelParams, state: &CoherentState, t: f64) -> CoherentState {
    let (q, p) = (state.center.q, state.center.p);
    CoherentState {
        sigma: state.sigma + I * state.sigma_breve * (t / (2.0 * params.mass)),
        sigma_breve: state.sigma_breve,
        center: PhasePoint::new(q + p * t / params.mass, p),
        phase: state.phase + free_phase(params, p, t),
    }
}

/// `A_t/ħ = p²t/(2mħ)`.
#[inline]
pub(crate) fn free_phase(params: &ModelParams, p: f64, t: f64) -> f64 {
    p * p * t / (2.0 * params.mass * params.hbar)
}

/// `σ_t = σ₀ + it/(2mσ₀)`.
pub fn sigma_t(params: &ModelParams, t: f64) -> Complex64 {
    Complex64::new(params.sigma0, t / (2.0 * params.mass * params.sigma0))
}

/// The phase-space function `φ^ħ_{σ,x}(ξ) = ψ^ħ_{σ,ξ}(x)`, with `σ̆ = 1/σ₀`.
pub fn phi_phase_space_eval(
    params: &ModelParams,
    sigma: Complex64,
    x: f64,
    xi: PhasePoint,
) -> Complex64 {
    let state = CoherentState {
        sigma,
        sigma_breve: Complex64::new(1.0 / params.sigma0, 0.0),
        center: xi,
        phase: 0.0,
    };
    coherent_eval(params, &state, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn eval_at_center() {
        let p = unit();
        let s = CoherentState::initial(&p, PhasePoint::new(0.0, 0.0));
        let v = coherent_eval(&p, &s, 0.0);
        assert!((v.re - (2.0 * PI).powf(-0.25)).abs() < 1e-15);
        assert!((v.re - 0.631619).abs() < 1e-6);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn ft_values() {
        let p = unit();
        let s = CoherentState::initial(&p, PhasePoint::new(0.0, 0.0));
        let v = coherent_ft(&p, &s, 0.0);
        assert!((v.re - (2.0 / PI).powf(0.25)).abs() < 1e-15);
        assert!((v.re - 0.893244).abs() < 1e-6);

        let params = ModelParams::new(0.3, 1.0, 1.0, 1.7).unwrap();
        let s = CoherentState::initial(&params, PhasePoint::new(0.0, 1.1));
        let peak = coherent_ft(&params, &s, 1.1 / 0.3);
        let expect = (2.0 * 0.3 / PI).powf(0.25) * 1.7f64.sqrt();
        assert!((peak.re - expect).abs() < 1e-14 && peak.im.abs() < 1e-14);
    }

    #[test]
    fn free_evolution_examples() {
        let p = unit();
        let s0 = CoherentState::initial(&p, PhasePoint::new(0.5, 2.0));
        assert_eq!(free_evolve_state(&p, &s0, 0.0), s0);
        let s2 = free_evolve_state(&p, &s0, 2.0);
        assert_eq!(s2.sigma, Complex64::new(1.0, 1.0));
        assert_eq!(s2.sigma, sigma_t(&p, 2.0));
        let s1 = free_evolve_state(&p, &s0, 1.0);
        // A_t = p²t/2m = 2 with ħ = 1
        assert!((s1.phase - 2.0).abs() < 1e-15);
        assert_eq!(s1.center.q, 2.5);
    }

    #[test]
    fn log_quadratic_matches_eval() {
        let params = ModelParams::new(0.2, 1.3, 1.0, 0.8).unwrap();
        let s0 = CoherentState::initial(&params, PhasePoint::new(-1.0, 0.7));
        let s = free_evolve_state(&params, &s0, 1.7);
        let (a, b, d) = s.log_quadratic(params.hbar);
        for &x in &[-2.0, -1.0, 0.0, 0.4, 1.3] {
            let v = (-a * x * x + b * x + d).exp();
            let w = coherent_eval(&params, &s, x);
            assert!((v - w).norm() < 1e-12 * (1.0 + w.norm()), "{v} {w}");
        }
        let (al, be, de) = s.ft_log_quadratic(params.hbar);
        for &k in &[-1.0, 0.0, 2.0, 3.5, 5.0] {
            let v = (-al * k * k + be * k + de).exp();
            let w = s.ft_envelope(params.hbar, k);
            assert!((v - w).norm() < 1e-12 * (1.0 + w.norm()), "{v} {w}");
            let full = coherent_ft(&params, &s, k);
            assert!((w * Complex64::new(0.0, -k * s.center.q).exp() - full).norm() < 1e-13);
        }
    }

    #[test]
    fn phi_is_coherent_eval() {
        let params = ModelParams::new(0.7, 1.0, 1.0, 1.3).unwrap();
        let sig = sigma_t(&params, 0.9);
        let xi = PhasePoint::new(0.4, -1.2);
        let state = CoherentState {
            sigma: sig,
            sigma_breve: Complex64::new(1.0 / 1.3, 0.0),
            center: xi,
            phase: 0.0,
        };
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            assert_eq!(
                phi_phase_space_eval(&params, sig, x, xi),
                coherent_eval(&params, &state, x)
            );
            assert_eq!(
                phi_phase_space_eval(&params, sig, x, -xi),
                phi_phase_space_eval(&params, sig, -x, xi)
            );
        }
        let one = phi_phase_space_eval(
            &unit(),
            Complex64::new(1.0, 0.0),
            0.0,
            PhasePoint::default(),
        );
        assert!((one.re - (2.0 * PI).powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::INFINITY, 1.0).is_ok());
        let bad = CoherentState::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            PhasePoint::default(),
            0.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn derived_coupling() {
        let p = ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.classical_b(), -16.0);
        assert_eq!(p.epsilon(), 0.25);
        assert!(p.with_beta(0.0).is_free());
    }

    proptest! {
        #[test]
        fn evolution_preserves_constraint(t in -10.0f64..10.0, s0 in 0.2f64..3.0, m in 0.3f64..3.0) {
            let params = ModelParams::new(0.1, m, 1.0, s0).unwrap();
            let s = free_evolve_state(&params, &CoherentState::initial(&params, PhasePoint::new(1.0, -2.0)), t);
            prop_assert!(((s.sigma.conj() * s.sigma_breve).re - 1.0).abs() < 1e-14);
            prop_assert!(s.validate().is_ok());
        }

        #[test]
        fn group_law(t in -10.0f64..10.0, u in -10.0f64..10.0) {
            let params = ModelParams::new(0.05, 1.3, 1.0, 0.9).unwrap();
            let s0 = CoherentState::initial(&params, PhasePoint::new(-4.0, 2.0));
            let a = free_evolve_state(&params, &free_evolve_state(&params, &s0, u), t);
            let b = free_evolve_state(&params, &s0, t + u);
            prop_assert!((a.sigma - b.sigma).norm() < 1e-12);
            prop_assert!((a.center.q - b.center.q).abs() < 1e-12);
            prop_assert!((a.phase - b.phase).abs() < 1e-12 * (1.0 + b.phase.abs()));
        }

        #[test]
        fn parity(x in -5.0f64..5.0, q in -3.0f64..3.0, p in -3.0f64..3.0, t in -2.0f64..2.0) {
            let params = ModelParams::new(0.3, 1.0, 1.0, 1.0).unwrap();
            let s = free_evolve_state(&params, &CoherentState::initial(&params, PhasePoint::new(q, p)), t);
            let a = coherent_eval(&params, &s.mirrored(), -x);
            let b = coherent_eval(&params, &s, x);
            prop_assert!((a - b).norm() <= 1e-15 * (1.0 + b.norm()));
        }
    }
}
