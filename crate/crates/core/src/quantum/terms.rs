//! The pieces of the reflected-packet decomposition: `F±,t`, `E1`, `E2`, `E3`.
//!
//! Every term is planned once (nodes and coefficients) and then evaluated at
//! arbitrary points, so grid assembly is a parallel map.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::{coherent_eval, free_evolve_state, sgn, CoherentState, ModelParams, Sign};
use crate::quadrature::{KRule, KSegment, PanelRule, QuadOptions, QuadratureError, QuadratureSpec};
use crate::specfun::gaussian_halfline_scaled;

use super::spectral::{refl, refl_abs2, INV_SQRT_2PI};

const I: Complex64 = Complex64::new(0.0, 1.0);
const FRAC_1_2PI: f64 = 0.159_154_943_091_895_35;

/// Quantities of a coherent state shared by all planners.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Packet {
    pub params: ModelParams,
    pub state: CoherentState,
    /// `p/ħ`.
    pub k0: f64,
    /// Gaussian unit of the Fourier transform, `|σ̆|/√ħ`.
    pub unit: f64,
}

impl Packet {
    pub fn new(params: &ModelParams, state: &CoherentState) -> Self {
        Packet {
            params: *params,
            state: *state,
            k0: state.center.p / params.hbar,
            unit: state.sigma_breve.norm() / params.hbar.sqrt(),
        }
    }

    pub fn q(&self) -> f64 {
        self.state.center.q
    }

    pub fn p(&self) -> f64 {
        self.state.center.p
    }

    /// `ψ̂(k) e^{ikq}`.
    #[inline]
    pub fn envelope(&self, k: f64) -> Complex64 {
        self.state.ft_envelope(self.params.hbar, k)
    }

    /// Position width `√ħ|σ|`.
    pub fn x_width(&self) -> f64 {
        self.params.hbar.sqrt() * self.state.sigma.norm()
    }

    /// `|ψ̂(0)/ψ̂(p/ħ)| = e^{−p²/(ħ|σ̆|²)}`.
    pub fn zero_weight(&self) -> f64 {
        let p = self.p();
        (-p * p / (self.params.hbar * self.state.sigma_breve.norm_sqr())).exp()
    }

    /// `|ψ(0)|/max|ψ| = e^{−q²/(4ħ|σ|²)}`.
    pub fn origin_weight(&self) -> f64 {
        let q = self.q();
        (-q * q / (4.0 * self.params.hbar * self.state.sigma.norm_sqr())).exp()
    }

    /// Half-width of the Gaussian window around `p/ħ`.
    pub fn window(&self, opts: &QuadOptions) -> f64 {
        opts.window_sigmas * self.unit
    }

    /// End of the half-line window starting at `k = 0` away from `p/ħ`:
    /// `|ψ̂|` drops by `e^{−window_sigmas²}` relative to its value at 0.
    pub fn half_line_end(&self, opts: &QuadOptions) -> f64 {
        let h = self.params.hbar;
        let p = self.p().abs();
        let drop = opts.window_sigmas * opts.window_sigmas;
        (-p + (p * p + drop * h * self.state.sigma_breve.norm_sqr()).sqrt()) / h
    }

    pub fn chirp(&self, t: f64) -> f64 {
        self.params.hbar * t.abs() / self.params.mass
    }

    /// `ε = ħ²/(mβ)` as a grading scale, when it is finite and nonzero.
    pub fn grading(&self) -> Option<f64> {
        let e = self.params.epsilon().abs();
        (e.is_finite() && e > 0.0).then_some(e)
    }

    pub fn free_chirp(&self, k: f64, t: f64) -> Complex64 {
        let (h, m) = (self.params.hbar, self.params.mass);
        Complex64::from_polar(1.0, -h * t * k * k / (2.0 * m))
    }
}

/// Weighted coefficients `w_j f(k_j)` attached to a [`KRule`].
#[derive(Debug, Clone, Default)]
pub(crate) struct Spectrum {
    segs: Vec<(KSegment, Vec<Complex64>)>,
}

impl Spectrum {
    pub fn build<F>(rule: KRule, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let segs = rule
            .segments
            .into_iter()
            .map(|s| {
                let c = s
                    .nodes
                    .par_iter()
                    .zip(&s.weights)
                    .map(|(&k, &w)| w * f(k))
                    .collect();
                (s, c)
            })
            .collect();
        Spectrum { segs }
    }

    pub fn nodes(&self) -> usize {
        self.segs.iter().map(|(s, _)| s.len()).sum()
    }

    /// `Σ c_j e^{i(k_j − k_ref)u}`.
    pub fn sum(&self, u: f64) -> Complex64 {
        self.segs.iter().map(|(s, c)| s.phase_sum(c, u)).sum()
    }

    /// `Σ c_j e^{−i|k_j|v}`; segments never straddle 0 and use `k_ref = 0`.
    pub fn sum_abs(&self, v: f64) -> Complex64 {
        self.segs
            .iter()
            .map(|(s, c)| {
                let side = s.nodes.first().map_or(0.0, |k| sgn(*k));
                s.phase_sum(c, -side * v)
            })
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.segs
            .iter()
            .all(|(_, c)| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

fn finite_or(spec: Spectrum, what: &str) -> Result<Spectrum, QuadratureError> {
    if spec.is_finite() {
        Ok(spec)
    } else {
        Err(QuadratureError::NonFinite {
            what: what.to_string(),
        })
    }
}

/// `F±,t(y) = (2π)^{−1/2} ∫ e^{−iħtk²/2m} e^{iky} R±(k) ψ̂(k) dk`, split as
/// `R±(p/ħ)·(e^{−itH₀/ħ}ψ)(y)` plus a quadrature of `R±(k) − R±(p/ħ)`.
#[derive(Debug, Clone)]
pub struct FTerm {
    params: ModelParams,
    r0: Complex64,
    evolved: CoherentState,
    k0: f64,
    q: f64,
    qt: f64,
    phase0: f64,
    diff: Spectrum,
}

impl FTerm {
    /// Plans for evaluation points `|y| ≤ y_extent`.
    pub(crate) fn plan(
        pk: &Packet,
        sign: Sign,
        t: f64,
        y_extent: f64,
        opts: &QuadOptions,
    ) -> Result<Self, QuadratureError> {
        let params = pk.params;
        let evolved = free_evolve_state(&params, &pk.state, t);
        let q = pk.q();
        let qt = evolved.center.q;
        let k0 = pk.k0;
        let r0 = refl(&params, sign, k0);
        let phase0 = -params.hbar * t * k0 * k0 / (2.0 * params.mass);
        let mut term = FTerm {
            params,
            r0,
            evolved,
            k0,
            q,
            qt,
            phase0,
            diff: Spectrum::default(),
        };
        if params.is_free() {
            return Ok(term);
        }
        let u_extent = y_extent + qt.abs();
        let half = pk.window(opts);
        let (a, b) = (k0 - half, k0 + half);
        let rule = if a < 0.0 && b > 0.0 && pk.zero_weight() > opts.negligible {
            let panel = PanelRule {
                u_extent,
                chirp: pk.chirp(t),
                k_ref: k0,
                max_width: pk.unit,
            };
            KRule::panels_over(&[(a, b)], k0, panel, pk.grading())
        } else {
            let spec = QuadratureSpec::plan(&params, &pk.state, t, u_extent, opts)?;
            KRule {
                segments: vec![spec.segment()],
            }
        }
        .check("F-term k-window", opts.nk_cap)?;
        let diff = Spectrum::build(rule, |k| {
            let kappa = k - k0;
            (refl(&params, sign, k) - r0) * pk.envelope(k) * pk.free_chirp(kappa, t)
        });
        term.diff = finite_or(diff, "F-term coefficients")?;
        Ok(term)
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        if self.params.is_free() {
            return Complex64::new(0.0, 0.0);
        }
        let main = self.r0 * coherent_eval(&self.params, &self.evolved, y);
        let carrier = Complex64::from_polar(INV_SQRT_2PI, self.k0 * (y - self.q) + self.phase0);
        main + carrier * self.diff.sum(y - self.qt)
    }

    pub fn nodes(&self) -> usize {
        self.diff.nodes()
    }
}

/// Nodes on the half-line from `k = 0` in direction `dir`, out to the point where
/// `|ψ̂|` has dropped by `e^{−window_sigmas²}`.
fn half_line_rule(pk: &Packet, dir: f64, u_extent: f64, t: f64, opts: &QuadOptions) -> KRule {
    let end = pk.half_line_end(opts);
    let interval = if dir > 0.0 { (0.0, end) } else { (-end, 0.0) };
    let panel = PanelRule {
        u_extent,
        chirp: pk.chirp(t),
        k_ref: 0.0,
        max_width: pk.unit,
    };
    KRule::panels_over(&[interval], 0.0, panel, pk.grading())
}

/// `E2,t(x) = sgn(qpx)(2π)^{−1/2} ∫ e^{−iħtk²/2m} e^{−i sgn(q) k|x|} θ(−sgn(p)k) [R₋ − R₊] ψ̂ dk`.
#[derive(Debug, Clone)]
pub struct E2Term {
    sq: f64,
    sp: f64,
    q_abs: f64,
    spec: Spectrum,
}

impl E2Term {
    pub(crate) fn plan(
        pk: &Packet,
        t: f64,
        x_extent: f64,
        opts: &QuadOptions,
    ) -> Result<Self, QuadratureError> {
        let params = pk.params;
        let (sq, sp) = (sgn(pk.q()), sgn(pk.p()));
        let rule = half_line_rule(pk, -sp, x_extent + pk.q().abs(), t, opts)
            .check("E2 k-window", opts.nk_cap)?;
        // R₋ − R₊ = −2 sgn(k)|R₊|²
        let spec = Spectrum::build(rule, |k| {
            -2.0 * sgn(k) * refl_abs2(&params, k) * pk.envelope(k) * pk.free_chirp(k, t)
        });
        Ok(E2Term {
            sq,
            sp,
            q_abs: pk.q().abs(),
            spec: finite_or(spec, "E2 coefficients")?,
        })
    }

    /// The value at `|x|`, without the factor `sgn(x)`.
    pub fn eval_abs(&self, ax: f64) -> Complex64 {
        self.sq * self.sp * INV_SQRT_2PI * self.spec.sum(-self.sq * (ax + self.q_abs))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        sgn(x) * self.eval_abs(x.abs())
    }

    pub fn nodes(&self) -> usize {
        self.spec.nodes()
    }
}

/// `E1,t` with its inner integral in closed form:
/// `∫ (sgn(y)e^{i|k||y|} − sgn(q)e^{i sgn(q)|k|y}) ψ(y) dy = −2 sgn(q) ∫₀^∞ cos(|k|u) ψ(−sgn(q)u) du`.
#[derive(Debug, Clone)]
pub struct E1Term {
    reflected: Spectrum,
    plane: Spectrum,
    /// Pointwise bound on the part dropped beyond `|k| = K_max`.
    pub tail_estimate: f64,
}

impl E1Term {
    pub(crate) fn plan(
        pk: &Packet,
        t: f64,
        x_extent: f64,
        opts: &QuadOptions,
    ) -> Result<Self, QuadratureError> {
        let params = pk.params;
        let h = params.hbar;
        let s = sgn(pk.q());
        let (qa, qb, qd) = pk.state.log_quadratic(h);
        let k_max = pk.k0.abs() + opts.tail_sigmas * pk.unit;
        let spread = 12.0 * pk.x_width();
        let panel = PanelRule {
            u_extent: x_extent + spread,
            chirp: pk.chirp(t),
            k_ref: 0.0,
            max_width: pk.unit,
        };
        let rule = KRule::panels_over(&[(-k_max, k_max)], 0.0, panel, pk.grading())
            .check("E1 k-window", opts.nk_cap)?;
        let inner = |k: f64| {
            let ik = I * k.abs();
            -s * (gaussian_halfline_scaled(qa, -s * qb + ik, qd)
                + gaussian_halfline_scaled(qa, -s * qb - ik, qd))
        };
        let reflected = Spectrum::build(rule.clone(), |k| {
            FRAC_1_2PI * pk.free_chirp(k, t) * inner(k) * refl_abs2(&params, k)
        });
        let plane = Spectrum::build(rule, |k| {
            FRAC_1_2PI * pk.free_chirp(k, t) * inner(k) * refl(&params, Sign::Minus, k)
        });
        // the inner integral decays like 2|ψ′(0)|/k², so the dropped part is
        // pointwise below 4|ψ′(0)|/(πK_max)
        let tail_estimate = 4.0 * qb.norm() * qd.exp().norm() / (std::f64::consts::PI * k_max);
        Ok(E1Term {
            reflected: finite_or(reflected, "E1 coefficients")?,
            plane: finite_or(plane, "E1 coefficients")?,
            tail_estimate,
        })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        sgn(x) * self.reflected.sum_abs(x.abs()) - self.plane.sum(x)
    }

    pub fn nodes(&self) -> usize {
        self.reflected.nodes()
    }
}

/// `E3,±(x) = ±sgn(qx)(2π)^{−1/2} ∫₀^∞ (e^{i sgn(qp)k|x|} − e^{−i sgn(qp)k|x|}) R±(k) ψ̂(−sgn(p)k) dk`.
#[derive(Debug, Clone)]
pub struct E3Term {
    sign: Sign,
    sq: f64,
    s: f64,
    q_abs: f64,
    spec: Spectrum,
}

impl E3Term {
    pub(crate) fn plan(
        pk: &Packet,
        sign: Sign,
        x_extent: f64,
        opts: &QuadOptions,
    ) -> Result<Self, QuadratureError> {
        let params = pk.params;
        let (sq, sp) = (sgn(pk.q()), sgn(pk.p()));
        let rule = half_line_rule(pk, 1.0, x_extent + pk.q().abs(), 0.0, opts)
            .check("E3 k-window", opts.nk_cap)?;
        // ψ̂(−sgn(p)k) = a(−sgn(p)k) e^{i sgn(p) k q}; the plane factor is carried by the phase sums
        let spec = Spectrum::build(rule, |k| refl(&params, sign, k) * pk.envelope(-sp * k));
        Ok(E3Term {
            sign,
            sq,
            s: sq * sp,
            q_abs: pk.q().abs(),
            spec: finite_or(spec, "E3 coefficients")?,
        })
    }

    pub fn eval_abs(&self, ax: f64) -> Complex64 {
        let up = self.spec.sum(self.s * (ax + self.q_abs));
        let down = self.spec.sum(self.s * (self.q_abs - ax));
        self.sign.value() * self.sq * INV_SQRT_2PI * (up - down)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        sgn(x) * self.eval_abs(x.abs())
    }

    pub fn nodes(&self) -> usize {
        self.spec.nodes()
    }
}

/// Rigorous L² bounds used to decide whether a term can be dropped.
pub(crate) mod bounds {
    use super::Packet;

    pub fn e1(pk: &Packet) -> f64 {
        (16.0f64 / 3.0).sqrt() * pk.origin_weight()
    }

    pub fn e2(pk: &Packet) -> f64 {
        8f64.sqrt() * pk.zero_weight()
    }

    pub fn e3(pk: &Packet) -> f64 {
        2f64.sqrt() * pk.zero_weight()
    }
}
