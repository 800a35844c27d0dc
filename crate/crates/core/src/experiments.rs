//! Error functionals, error bounds, ħ-sweeps and slope fits.
//!
//! Errors are computed as the distance between the quantum and semiclassical
//! corrections to the free part, which the two sides share exactly; this keeps
//! errors of order ħ^{7/2} well above round-off of the O(1) pieces.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{semiclassical_dynamics_weight, semiclassical_waveop_weight};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, WaveSample};
use crate::model::{
    coherent_eval, coherent_ft, free_evolve_state, sigma_t, CoherentState, ModelParams, PhasePoint,
    Sign,
};
use crate::quadrature::{KRule, PanelRule, QuadOptions};
use crate::quantum::{decompose, wave_op_correction};

/// Smallest `c₀` allowed: the collision-window argument needs `c₀ > √5`.
pub const C0_MIN: f64 = 2.236_067_977_499_79;

/// How η is chosen in the error brackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    Fixed(f64),
    /// `η = h^{1/2−λ}`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeParams {
    pub lambda: f64,
    pub c0: f64,
    pub eta_rule: EtaRule,
}

impl Default for RegimeParams {
    fn default() -> Self {
        RegimeParams {
            lambda: 0.1,
            c0: 3.0,
            eta_rule: EtaRule::Power,
        }
    }
}

impl RegimeParams {
    pub fn new(lambda: f64, c0: f64, eta_rule: EtaRule) -> Result<Self> {
        let r = RegimeParams {
            lambda,
            c0,
            eta_rule,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::param(
                "lambda",
                format!("must lie in (0, 1/2), got {}", self.lambda),
            ));
        }
        if !(self.c0 > C0_MIN && self.c0.is_finite()) {
            return Err(Error::param(
                "c0",
                format!("must be finite and > sqrt(5), got {}", self.c0),
            ));
        }
        if let EtaRule::Fixed(eta) = self.eta_rule {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::param(
                    "eta",
                    format!("must lie in (0, 1), got {eta}"),
                ));
            }
        }
        Ok(())
    }

    pub fn eta(&self, underline_h: f64) -> f64 {
        match self.eta_rule {
            EtaRule::Fixed(eta) => eta,
            EtaRule::Power => underline_h.powf(0.5 - self.lambda),
        }
    }
}

/// Which quantum/semiclassical pair an error compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    #[serde(rename = "dynamics")]
    Dynamics,
    #[serde(rename = "waveop+")]
    WaveopPlus,
    #[serde(rename = "waveop-")]
    WaveopMinus,
    #[serde(rename = "scatter")]
    Scatter,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [
        ErrorKind::Dynamics,
        ErrorKind::WaveopPlus,
        ErrorKind::WaveopMinus,
        ErrorKind::Scatter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Dynamics => "dynamics",
            ErrorKind::WaveopPlus => "waveop+",
            ErrorKind::WaveopMinus => "waveop-",
            ErrorKind::Scatter => "scatter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ErrorKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the error depends on the time `t`.
    pub fn is_timed(self) -> bool {
        self == ErrorKind::Dynamics
    }
}

/// One (ħ, t) point of a sweep. `t` is 0 for the time-independent kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub hbar: f64,
    pub underline_h: f64,
    pub error_l2: f64,
    pub bound_rhs: f64,
    pub t: f64,
    pub kind: ErrorKind,
    pub wall_time: f64,
}

fn require_qp(xi: PhasePoint, op: &'static str) -> Result<()> {
    if xi.q * xi.p == 0.0 || !(xi.q.is_finite() && xi.p.is_finite()) {
        return Err(Error::domain(
            op,
            format!("requires finite q p != 0, got q = {}, p = {}", xi.q, xi.p),
        ));
    }
    Ok(())
}

/// `max{ħσ₀²/q², ħ/(σ₀²p²), ħ/(m|βp|)^{1/3}}`.
pub fn underline_h(params: &ModelParams, xi: PhasePoint) -> Result<f64> {
    params.validate()?;
    require_qp(xi, "underline_h")?;
    if params.beta == 0.0 {
        return Err(Error::domain("underline_h", "requires beta != 0"));
    }
    let (h, s2) = (params.hbar, params.sigma0 * params.sigma0);
    let position = h * s2 / (xi.q * xi.q);
    let momentum = h / (s2 * xi.p * xi.p);
    let coupling = h / (params.mass * (params.beta * xi.p).abs()).cbrt();
    Ok(position.max(momentum).max(coupling))
}

/// `t_coll = −mq/p`.
pub fn collision_time(xi: PhasePoint, mass: f64) -> Result<f64> {
    if xi.p == 0.0 || !xi.p.is_finite() {
        return Err(Error::domain(
            "collision_time",
            format!("requires finite p != 0, got {}", xi.p),
        ));
    }
    Ok(-mass * xi.q / xi.p)
}

/// `(|t − t_coll|, c₀|t_coll|√((7/2 − λ) h |ln h|))`.
fn collision_gap(
    t: f64,
    xi: PhasePoint,
    mass: f64,
    regime: &RegimeParams,
    underline_h: f64,
) -> Result<(f64, f64)> {
    let tc = collision_time(xi, mass)?;
    let required = regime.c0
        * tc.abs()
        * ((3.5 - regime.lambda) * underline_h * underline_h.ln().abs()).sqrt();
    Ok(((t - tc).abs(), required))
}

/// `|t − t_coll| ≥ c₀|t_coll|√((7/2 − λ) h |ln h|)`.
pub fn admissible_time(
    t: f64,
    xi: PhasePoint,
    mass: f64,
    regime: &RegimeParams,
    underline_h: f64,
) -> Result<bool> {
    let (gap, required) = collision_gap(t, xi, mass, regime, underline_h)?;
    Ok(gap >= required)
}

/// Like [`admissible_time`], but reports the violated inequality as an error.
pub fn check_admissible(
    t: f64,
    xi: PhasePoint,
    mass: f64,
    regime: &RegimeParams,
    underline_h: f64,
) -> Result<()> {
    let (gap, required) = collision_gap(t, xi, mass, regime, underline_h)?;
    if gap >= required {
        Ok(())
    } else {
        Err(Error::Inadmissible { t, gap, required })
    }
}

/// The terms of the dynamics bound, without the unknown constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `η/(1−η)·ħ³/(m|βp|)`.
    pub coupling: f64,
    /// `e^{−η²σ₀²p²/(2ħ)}`.
    pub eta_gauss: f64,
    /// `e^{−q²/(4ħσ₀²)}`.
    pub origin: f64,
    /// `e^{−σ₀²p²/ħ}`.
    pub zero_momentum: f64,
    /// `(ħ⁵σ₀²/(m²β²))^{1/4} e^{ħ⁵σ₀²/(m²β²)}(e^{−σ₀²p²/ħ} + e^{−q²/(4ħσ₀²)})`.
    pub bound_state: f64,
    /// `e^{−q_t²/(4ħ|σ_t|²)}`.
    pub collision: f64,
}

impl BoundTerms {
    pub const NAMES: [&'static str; 6] = [
        "coupling",
        "eta_gauss",
        "origin",
        "zero_momentum",
        "bound_state",
        "collision",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.coupling,
            self.eta_gauss,
            self.origin,
            self.zero_momentum,
            self.bound_state,
            self.collision,
        ]
    }

    /// Dynamics bracket: all six terms.
    pub fn dynamics(&self) -> f64 {
        self.values().iter().sum()
    }

    /// Wave-operator bracket: the first four terms.
    pub fn waveop(&self) -> f64 {
        self.coupling + self.eta_gauss + self.origin + self.zero_momentum
    }

    /// Scattering bracket: the first four terms and the bound-state term.
    pub fn scatter(&self) -> f64 {
        self.waveop() + self.bound_state
    }

    pub fn for_kind(&self, kind: ErrorKind) -> f64 {
        match kind {
            ErrorKind::Dynamics => self.dynamics(),
            ErrorKind::WaveopPlus | ErrorKind::WaveopMinus => self.waveop(),
            ErrorKind::Scatter => self.scatter(),
        }
    }
}

/// Every term of the bracket at `(ξ, t)` for a given η.
pub fn bound_terms(params: &ModelParams, xi: PhasePoint, t: f64, eta: f64) -> Result<BoundTerms> {
    params.validate()?;
    require_qp(xi, "dynamics_bound")?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(
            "dynamics_bound",
            format!("eta must lie in (0, 1), got {eta}"),
        ));
    }
    if !t.is_finite() {
        return Err(Error::domain(
            "dynamics_bound",
            format!("t must be finite, got {t}"),
        ));
    }
    let ModelParams {
        hbar: h,
        mass: m,
        beta,
        sigma0,
    } = *params;
    let (q, p) = (xi.q, xi.p);
    let s2 = sigma0 * sigma0;
    let origin = (-q * q / (4.0 * h * s2)).exp();
    let zero_momentum = (-s2 * p * p / h).exp();
    let z = h.powi(5) * s2 / (m * m * beta * beta);
    let qt = q + p * t / m;
    let st2 = sigma_t(params, t).norm_sqr();
    Ok(BoundTerms {
        coupling: eta / (1.0 - eta) * h.powi(3) / (m * (beta * p).abs()),
        eta_gauss: (-eta * eta * s2 * p * p / (2.0 * h)).exp(),
        origin,
        zero_momentum,
        bound_state: if z == 0.0 {
            0.0
        } else {
            z.powf(0.25) * z.exp() * (zero_momentum + origin)
        },
        collision: (-qt * qt / (4.0 * h * st2)).exp(),
    })
}

/// The six-term dynamics bracket, without its constant.
pub fn dynamics_bound(params: &ModelParams, xi: PhasePoint, t: f64, eta: f64) -> Result<f64> {
    Ok(bound_terms(params, xi, t, eta)?.dynamics())
}

/// The wave-operator bracket, without its constant.
pub fn waveop_bound(params: &ModelParams, xi: PhasePoint, eta: f64) -> Result<f64> {
    Ok(bound_terms(params, xi, 0.0, eta)?.waveop())
}

/// The scattering bracket, without its constant.
pub fn scatter_bound(params: &ModelParams, xi: PhasePoint, eta: f64) -> Result<f64> {
    Ok(bound_terms(params, xi, 0.0, eta)?.scatter())
}

/// `e^{−q²/(4ħ|σ|²)}`, the shape of the `E1` bound.
pub fn e1_bound(params: &ModelParams, state: &CoherentState) -> f64 {
    let q = state.center.q;
    (-q * q / (4.0 * params.hbar * state.sigma.norm_sqr())).exp()
}

/// `e^{−p²/(ħ|σ̆|²)}`, the shape of the `E2` and `E3` bounds.
pub fn e2_bound(params: &ModelParams, state: &CoherentState) -> f64 {
    let p = state.center.p;
    (-p * p / (params.hbar * state.sigma_breve.norm_sqr())).exp()
}

pub fn e3_bound(params: &ModelParams, state: &CoherentState) -> f64 {
    e2_bound(params, state)
}

/// `(ħ⁵σ₀²/(m²β²))^{1/4} e^{ħ⁵σ₀²/(m²β²)}(e^{−σ₀²p²/ħ} + e^{−q²/(4ħσ₀²)})`,
/// the shape of the `‖P_βψ‖` bound for an initial coherent state.
pub fn pbeta_bound(params: &ModelParams, xi: PhasePoint) -> f64 {
    let ModelParams {
        hbar: h,
        mass: m,
        beta,
        sigma0,
    } = *params;
    let s2 = sigma0 * sigma0;
    let z = h.powi(5) * s2 / (m * m * beta * beta);
    if z == 0.0 {
        return 0.0;
    }
    z.powf(0.25) * z.exp() * ((-s2 * xi.p * xi.p / h).exp() + (-xi.q * xi.q / (4.0 * h * s2)).exp())
}

/// A grid for error evaluation at time `t`: it covers the packet and its
/// mirror image with 8 nodes per wavelength `2πħ/|p|`, or 64 while the packet
/// overlaps the origin and incident and reflected waves interfere.
pub fn error_grid(params: &ModelParams, xi: PhasePoint, t: f64) -> GridSpec {
    let coarse = GridSpec::for_evolution(params, xi, t, 2);
    let qt = xi.q + xi.p * t / params.mass;
    let overlap = (-qt * qt / (4.0 * params.hbar * sigma_t(params, t).norm_sqr())).exp();
    let per_wavelength = if overlap > 1e-16 { 64.0 } else { 8.0 };
    let wavelength = std::f64::consts::TAU * params.hbar / xi.p.abs();
    let width = params.hbar.sqrt() * params.sigma0;
    let dx = (wavelength / per_wavelength).min(width / 8.0);
    // even n keeps x = 0 off the grid, where the wave function jumps
    let n = ((2.0 * coarse.x_max / dx).ceil() as usize)
        .max(1024)
        .next_multiple_of(2);
    GridSpec::for_evolution(params, xi, t, n)
}

/// `c(ψ(x) − ψ(−x))` on `grid`.
fn odd_reflection(
    params: &ModelParams,
    state: &CoherentState,
    c: Complex64,
    grid: &GridSpec,
) -> WaveSample {
    WaveSample::from_fn(*grid, |x| {
        c * (coherent_eval(params, state, x) - coherent_eval(params, state, -x))
    })
}

fn norm_of_difference(a: &WaveSample, b: &WaveSample) -> Result<f64> {
    crate::grid::l2_distance(a, b)
}

/// `‖e^{−itH_β/ħ}ψ − e^{iA_t/ħ}(e^{itL_B}φ)(ξ)‖` on `grid`.
pub fn dynamics_error(
    params: &ModelParams,
    xi: PhasePoint,
    t: f64,
    grid: &GridSpec,
) -> Result<f64> {
    dynamics_error_with(params, xi, t, grid, &QuadOptions::default())
}

pub fn dynamics_error_with(
    params: &ModelParams,
    xi: PhasePoint,
    t: f64,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<f64> {
    require_qp(xi, "dynamics_error")?;
    let state = CoherentState::initial(params, xi);
    let quantum = decompose(params, &state, t, grid, opts)?.correction();
    let c = semiclassical_dynamics_weight(params, xi, t);
    let classical = odd_reflection(params, &free_evolve_state(params, &state, t), c, grid);
    norm_of_difference(&quantum, &classical)
}

/// `‖Ω±ψ − (W^±φ)(ξ)‖` on `grid`.
pub fn waveop_error(
    params: &ModelParams,
    sign: Sign,
    xi: PhasePoint,
    grid: &GridSpec,
) -> Result<f64> {
    waveop_error_with(params, sign, xi, grid, &QuadOptions::default())
}

pub fn waveop_error_with(
    params: &ModelParams,
    sign: Sign,
    xi: PhasePoint,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<f64> {
    require_qp(xi, "waveop_error")?;
    let state = CoherentState::initial(params, xi);
    let quantum = wave_op_correction(params, sign, &state, grid, opts)?;
    let c = semiclassical_waveop_weight(params, sign, xi);
    let classical = odd_reflection(params, &state, c, grid);
    norm_of_difference(&quantum, &classical)
}

/// `‖Sψ − (S^clφ)(ξ)‖`, evaluated in momentum space.
///
/// With `g(k) = sgn(k)R₋(k)`, `Sψ − ψ` has Fourier transform
/// `g(k)(ψ̂(k) − ψ̂(−k))` and the semiclassical side freezes `g` at `p/ħ`, so
/// the squared error is `∫|g(k) − g(p/ħ)|²|ψ̂(k) − ψ̂(−k)|² dk`.
pub fn scatter_error(params: &ModelParams, xi: PhasePoint) -> Result<f64> {
    scatter_error_with(params, xi, &QuadOptions::default())
}

pub fn scatter_error_with(params: &ModelParams, xi: PhasePoint, opts: &QuadOptions) -> Result<f64> {
    params.validate()?;
    require_qp(xi, "scatter_error")?;
    if params.is_free() {
        return Ok(0.0);
    }
    let state = CoherentState::initial(params, xi);
    let h = params.hbar;
    let k0 = (xi.p / h).abs();
    let unit = state.sigma_breve.norm() / h.sqrt();
    let k_max = k0 + opts.window_sigmas * unit;
    let eps = params.epsilon();
    let gap = |k: f64| -> Complex64 {
        if eps == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        // g(k) − g(k0) for k, k0 ≥ 0, written without cancellation
        let i_eps = Complex64::new(0.0, eps);
        -i_eps * (k - k0) / ((k + i_eps) * (k0 + i_eps))
    };
    let panel = PanelRule {
        u_extent: 0.0,
        chirp: 0.0,
        k_ref: 0.0,
        max_width: unit,
    };
    let grade = (eps.is_finite() && eps != 0.0).then(|| eps.abs());
    let rule = KRule::panels_over(&[(0.0, k_max)], 0.0, panel, grade)
        .check("scatter_error", opts.nk_cap)?;
    let err2 = rule.integrate(|k| {
        let d = coherent_ft(params, &state, k) - coherent_ft(params, &state, -k);
        Complex64::new(2.0 * gap(k).norm_sqr() * d.norm_sqr(), 0.0)
    });
    Ok(err2.re.max(0.0).sqrt())
}

/// The error of `kind` at `(ħ, ξ, t)` on its default grid.
pub fn error_for(kind: ErrorKind, params: &ModelParams, xi: PhasePoint, t: f64) -> Result<f64> {
    error_for_with(kind, params, xi, t, &QuadOptions::default())
}

pub fn error_for_with(
    kind: ErrorKind,
    params: &ModelParams,
    xi: PhasePoint,
    t: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let at_zero = || error_grid(params, xi, 0.0);
    match kind {
        ErrorKind::Dynamics => dynamics_error_with(params, xi, t, &error_grid(params, xi, t), opts),
        ErrorKind::WaveopPlus => waveop_error_with(params, Sign::Plus, xi, &at_zero(), opts),
        ErrorKind::WaveopMinus => waveop_error_with(params, Sign::Minus, xi, &at_zero(), opts),
        ErrorKind::Scatter => scatter_error_with(params, xi, opts),
    }
}

/// `n` points `start·factor^i`.
pub fn geometric_grid(start: f64, factor: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start * factor.powi(i as i32)).collect()
}

/// 9 values of ħ from 0.1 down to ≈ 4e-3.
pub fn default_hbar_grid() -> Vec<f64> {
    geometric_grid(0.1, 0.67, 9)
}

/// `{0.5, 2, 4}·t_coll`: before the collision, after it, and far field.
pub fn default_times(xi: PhasePoint, mass: f64) -> Result<Vec<f64>> {
    let tc = collision_time(xi, mass)?;
    Ok(vec![0.5 * tc, 2.0 * tc, 4.0 * tc])
}

/// The subset of `times` admissible at every ħ in `hbar_grid`.
pub fn admissible_times(
    template: &ModelParams,
    xi: PhasePoint,
    regime: &RegimeParams,
    hbar_grid: &[f64],
    times: &[f64],
) -> Result<Vec<f64>> {
    let hs = hbar_grid
        .iter()
        .map(|&h| underline_h(&template.with_hbar(h), xi))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &t in times {
        let mut ok = true;
        for &h in &hs {
            ok &= admissible_time(t, xi, template.mass, regime, h)?;
        }
        if ok {
            out.push(t);
        }
    }
    Ok(out)
}

/// At least 5 positive values in a non-constant geometric progression.
pub fn check_hbar_grid(hbar_grid: &[f64]) -> Result<()> {
    if hbar_grid.len() < 5 {
        return Err(Error::domain(
            "run_sweep",
            format!("needs at least 5 values of hbar, got {}", hbar_grid.len()),
        ));
    }
    if hbar_grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::domain(
            "run_sweep",
            "hbar values must be finite and > 0",
        ));
    }
    let ratio = hbar_grid[1] / hbar_grid[0];
    for w in hbar_grid.windows(2) {
        if ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-6 || ratio == 1.0 {
            return Err(Error::domain(
                "run_sweep",
                "hbar values must form a non-constant geometric sequence",
            ));
        }
    }
    Ok(())
}

/// One record per (ħ, t) pair, or per ħ for the time-independent kinds.
/// Records are computed in parallel and returned in input order.
pub fn run_sweep(
    template: &ModelParams,
    xi: PhasePoint,
    regime: &RegimeParams,
    hbar_grid: &[f64],
    times: &[f64],
    kind: ErrorKind,
) -> Result<Vec<SweepRecord>> {
    run_sweep_with(
        template,
        xi,
        regime,
        hbar_grid,
        times,
        kind,
        &QuadOptions::default(),
    )
}

pub fn run_sweep_with(
    template: &ModelParams,
    xi: PhasePoint,
    regime: &RegimeParams,
    hbar_grid: &[f64],
    times: &[f64],
    kind: ErrorKind,
    opts: &QuadOptions,
) -> Result<Vec<SweepRecord>> {
    template.validate()?;
    regime.validate()?;
    require_qp(xi, "run_sweep")?;
    check_hbar_grid(hbar_grid)?;
    let times: Vec<f64> = if kind.is_timed() {
        times.to_vec()
    } else {
        vec![0.0]
    };
    if times.is_empty() {
        return Err(Error::domain("run_sweep", "no times given"));
    }
    let mut jobs = Vec::new();
    for &hbar in hbar_grid {
        let params = template.with_hbar(hbar);
        let h = underline_h(&params, xi)?;
        for &t in &times {
            if kind.is_timed() {
                check_admissible(t, xi, params.mass, regime, h)?;
            }
            jobs.push((params, h, t));
        }
    }
    jobs.into_par_iter()
        .map(|(params, h, t)| {
            let start = Instant::now();
            let error_l2 = error_for_with(kind, &params, xi, t, opts)?;
            let bound_rhs = bound_terms(&params, xi, t, regime.eta(h))?.for_kind(kind);
            Ok(SweepRecord {
                hbar: params.hbar,
                underline_h: h,
                error_l2,
                bound_rhs,
                t,
                kind,
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Least-squares line through `(ln h, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_slope(records: &[SweepRecord]) -> Result<SlopeFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.underline_h, r.error_l2))
        .collect();
    fit_power_law(&points)
}

/// Fits `y = e^b x^a` to positive `(x, y)` pairs.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::domain(
            "fit_slope",
            format!("needs at least 2 points, got {}", points.len()),
        ));
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::domain(
            "fit_slope",
            "needs finite positive abscissae and errors",
        ));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit_slope", "all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
    })
}

/// `C = max error/bound` over the records at the largest ħ.
pub fn fit_constant(records: &[SweepRecord]) -> Option<f64> {
    let hmax = records
        .iter()
        .map(|r| r.hbar)
        .fold(f64::NEG_INFINITY, f64::max);
    records
        .iter()
        .filter(|r| r.hbar == hmax && r.bound_rhs > 0.0)
        .map(|r| r.error_l2 / r.bound_rhs)
        .reduce(f64::max)
}

/// Records with `error_l2 > C·bound_rhs`.
pub fn bound_violations(records: &[SweepRecord], c: f64) -> Vec<&SweepRecord> {
    records
        .iter()
        .filter(|r| r.error_l2 > c * r.bound_rhs)
        .collect()
}
