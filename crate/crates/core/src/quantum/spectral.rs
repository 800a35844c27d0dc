//! Spectral data of `H_β`: reflection coefficients, generalized
//! eigenfunctions, the bound state and the generalized Fourier transform.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coherent_ft, sgn, CoherentState, ModelParams, Sign};
use crate::specfun::{gaussian_halfline_scaled, signed_kernel_overlap, OverlapMode};

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// The point spectrum of `H_β`, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub params: ModelParams,
    /// `λ_β = −ħ⁶/(2m³β²)`, present iff `β < 0` is finite.
    pub bound_energy: Option<f64>,
}

impl SpectralData {
    pub fn new(params: &ModelParams) -> Self {
        SpectralData {
            params: *params,
            bound_energy: bound_eigenvalue(params).ok(),
        }
    }
}

/// `R±(k)` without argument checks; `0` at `k = 0` and in the free model.
#[inline]
pub(crate) fn refl(params: &ModelParams, sign: Sign, k: f64) -> Complex64 {
    if params.is_free() || k == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = sign.value();
    Complex64::new(s * k, 0.0) / Complex64::new(k.abs(), -s * params.epsilon())
}

/// `|R₊(k)|² = k²/(k² + ε²)`.
#[inline]
pub(crate) fn refl_abs2(params: &ModelParams, k: f64) -> f64 {
    if params.is_free() || k == 0.0 {
        return 0.0;
    }
    let e = params.epsilon();
    k * k / (k * k + e * e)
}

/// `R±(k) = ±k/(|k| ∓ iħ²/(mβ))`. For `β = 0` this is `0`, for `|β| = ∞`
/// it is `±sgn(k)`.
pub fn reflection_coeff(params: &ModelParams, sign: Sign, k: f64) -> Result<Complex64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::domain(
            "reflection_coeff",
            format!("k must be finite and nonzero, got {k}"),
        ));
    }
    Ok(refl(params, sign, k))
}

/// `φ_k^±(x) = (2π)^{−1/2}[e^{ikx} + R±(k) sgn(x) e^{∓i|k||x|}]`.
pub fn eigenfunction_eval(params: &ModelParams, sign: Sign, k: f64, x: f64) -> Result<Complex64> {
    let r = reflection_coeff(params, sign, k)?;
    let plane = Complex64::from_polar(1.0, k * x);
    let out = Complex64::from_polar(1.0, -sign.value() * k.abs() * x.abs());
    Ok(INV_SQRT_2PI * (plane + r * sgn(x) * out))
}

fn require_bound_state(params: &ModelParams, op: &'static str) -> Result<f64> {
    if !(params.beta < 0.0 && params.beta.is_finite()) {
        return Err(Error::domain(
            op,
            format!(
                "a bound state exists only for finite beta < 0, got {}",
                params.beta
            ),
        ));
    }
    Ok(params.beta.abs())
}

/// `λ_β = −ħ⁶/(2m³β²)`.
pub fn bound_eigenvalue(params: &ModelParams) -> Result<f64> {
    let b = require_bound_state(params, "bound_eigenvalue")?;
    let (h, m) = (params.hbar, params.mass);
    Ok(-h.powi(6) / (2.0 * m.powi(3) * b * b))
}

/// `φ_β(x) = (ħ/√(m|β|)) sgn(x) e^{−ħ²|x|/(m|β|)}`.
pub fn bound_state(params: &ModelParams, x: f64) -> Result<f64> {
    let b = require_bound_state(params, "bound_state")?;
    let (h, m) = (params.hbar, params.mass);
    Ok(h / (m * b).sqrt() * sgn(x) * (-h * h * x.abs() / (m * b)).exp())
}

/// `⟨φ_β, ψ⟩` in closed form. With `ψ = exp(−Ay² + By + D)` and
/// `γ = ħ²/(m|β|)` it is `(ħ/√(m|β|))[H(A, B − γ) − H(A, −B − γ)]`.
pub fn bound_overlap(params: &ModelParams, state: &CoherentState) -> Result<Complex64> {
    let b = require_bound_state(params, "bound_overlap")?;
    let (h, m) = (params.hbar, params.mass);
    let gamma = h * h / (m * b);
    let (qa, qb, qd) = state.log_quadratic(h);
    let right = gaussian_halfline_scaled(qa, qb - gamma, qd);
    let left = gaussian_halfline_scaled(qa, -qb - gamma, qd);
    Ok(h / (m * b).sqrt() * (right - left))
}

/// `|⟨φ_β, ψ⟩|`, or `0` when there is no bound state.
pub fn bound_weight(params: &ModelParams, state: &CoherentState) -> f64 {
    bound_overlap(params, state)
        .map(|c| c.norm())
        .unwrap_or(0.0)
}

/// `(F₊ψ)(k) = ψ̂(k) + conj(R₊(k)) (2π)^{−1/2} ∫ sgn(y) e^{i|k||y|} ψ(y) dy`.
pub fn gen_transform_plus(
    params: &ModelParams,
    state: &CoherentState,
    k: f64,
) -> Result<Complex64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::domain(
            "gen_transform_plus",
            format!("k must be finite and nonzero, got {k}"),
        ));
    }
    Ok(gen_transform_plus_unchecked(params, state, k))
}

pub(crate) fn gen_transform_plus_unchecked(
    params: &ModelParams,
    state: &CoherentState,
    k: f64,
) -> Complex64 {
    let direct = coherent_ft(params, state, k);
    if params.is_free() {
        return direct;
    }
    let r = refl(params, Sign::Plus, k).conj();
    direct + r * INV_SQRT_2PI * signed_kernel_overlap(params, state, k, OverlapMode::PlusAbs)
}

/// `(2π)^{−1/2}`-normalized plane wave helper used by the transforms.
#[cfg(test)]
fn plane(k: f64, x: f64) -> Complex64 {
    Complex64::from_polar(INV_SQRT_2PI, k * x)
}
