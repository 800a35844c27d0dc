//! Node planning for the k-integrals.
//!
//! Two kinds of segments are used. Uniform trapezoid segments serve
//! integrands that are Gaussian-negligible at both ends (the rule is then
//! spectrally accurate, and the sums can use a phase recurrence). Composite
//! 16-point Gauss–Legendre panels serve everything with an endpoint or a kink,
//! with panels graded geometrically towards `k = 0` where `R±` varies on the
//! scale `ε = ħ²/(m|β|)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoherentState, ModelParams};

const GL_ORDER: usize = 16;
/// Largest total phase (radians) a single Gauss–Legendre panel may sweep.
const PANEL_PHASE: f64 = 2.0 * PI;
/// Uniform spacing must also keep the quadratic chirp below this per node.
pub const MAX_PHASE_STEP: f64 = PI / 4.0;
/// Uniform spacing resolves a Gaussian unit `|σ̆|/√ħ` with this many nodes.
const GAUSS_MESH: f64 = 16.0;
const RECURRENCE_BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("{what}: {needed} k-nodes required, cap is {cap}")]
    NodeBudget {
        what: String,
        needed: usize,
        cap: usize,
    },
    #[error("{what}: non-finite value produced")]
    NonFinite { what: String },
    #[error("{what}: {reason}")]
    Window { what: String, reason: String },
}

/// User-tunable quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadOptions {
    /// Half-width of Gaussian windows, in units of `|σ̆|/√ħ`.
    pub window_sigmas: f64,
    /// Extra reach of slowly decaying windows: `|k| ≤ |p|/ħ + tail_sigmas·|σ̆|/√ħ`.
    pub tail_sigmas: f64,
    /// Upper bound on k-nodes per integral.
    pub nk_cap: usize,
    /// Error terms whose rigorous L² bound is below this are set to zero.
    pub negligible: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            window_sigmas: 12.0,
            tail_sigmas: 40.0,
            nk_cap: 1 << 22,
            negligible: 1e-17,
        }
    }
}

impl QuadOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.window_sigmas >= 4.0 && self.window_sigmas.is_finite()) {
            return Err(format!(
                "window_sigmas must be >= 4, got {}",
                self.window_sigmas
            ));
        }
        if !(self.tail_sigmas >= self.window_sigmas && self.tail_sigmas.is_finite()) {
            return Err(format!(
                "tail_sigmas must be >= window_sigmas, got {}",
                self.tail_sigmas
            ));
        }
        if self.nk_cap < 64 {
            return Err(format!("nk_cap must be >= 64, got {}", self.nk_cap));
        }
        if !(self.negligible >= 0.0 && self.negligible < 1e-8) {
            return Err(format!(
                "negligible must lie in [0, 1e-8), got {}",
                self.negligible
            ));
        }
        Ok(())
    }
}

fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            let wi = 2.0 / ((1.0 - z * z) * dp * dp);
            w[i] = wi;
            w[n - 1 - i] = wi;
        }
        (x, w)
    })
}

/// How wide a Gauss–Legendre panel starting at `|k|` may be.
#[derive(Debug, Clone, Copy)]
pub struct PanelRule {
    /// Largest `|y|` paired with `k` in phases `e^{iky}`.
    pub u_extent: f64,
    /// `ħ|t|/m`: the chirp `ħt(k − k_ref)²/2m` has slope `chirp·|k − k_ref|`.
    pub chirp: f64,
    /// Wavenumber about which the chirp is centred.
    pub k_ref: f64,
    /// Hard cap from the smoothness of the amplitude.
    pub max_width: f64,
}

impl PanelRule {
    /// Largest `w` with `w·(u_extent + chirp·(|k − k_ref| + w)) ≤ PANEL_PHASE`.
    fn width_at(&self, k: f64) -> f64 {
        let b = self.u_extent + self.chirp * (k - self.k_ref).abs();
        let w = if self.chirp > 0.0 {
            (-b + (b * b + 4.0 * self.chirp * PANEL_PHASE).sqrt()) / (2.0 * self.chirp)
        } else if b > 0.0 {
            PANEL_PHASE / b
        } else {
            f64::INFINITY
        };
        w.min(self.max_width)
    }
}

/// A set of k-nodes with weights, plus the reference wavenumber `k0`
/// that is factored out of oscillatory sums.
#[derive(Debug, Clone)]
pub struct KSegment {
    pub k0: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    spacing: Option<f64>,
}

impl KSegment {
    /// Trapezoid rule on `[a, b]` with `2^j` intervals of width `≤ dk_max`.
    pub(crate) fn uniform(a: f64, b: f64, dk_max: f64, k0: f64) -> Self {
        let intervals = (((b - a) / dk_max).ceil() as usize)
            .max(1)
            .next_power_of_two();
        let dk = (b - a) / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals).map(|j| a + dk * j as f64).collect();
        let mut weights = vec![dk; intervals + 1];
        weights[0] = dk / 2.0;
        weights[intervals] = dk / 2.0;
        KSegment {
            k0,
            nodes,
            weights,
            spacing: Some(dk),
        }
    }

    /// Gauss–Legendre panels on `[a, b]`. When `grade` is `Some(ε)` and one
    /// end is `0`, panel widths start at `ε/4` there and double outward.
    pub(crate) fn panels(a: f64, b: f64, k0: f64, rule: PanelRule, grade: Option<f64>) -> Self {
        let (gx, gw) = gauss_legendre();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if b <= a {
            return KSegment {
                k0,
                nodes,
                weights,
                spacing: None,
            };
        }
        let (start, end) = if a == 0.0 || b != 0.0 && a.abs() < b.abs() {
            (a, b)
        } else {
            (b, a)
        };
        let dir = (end - start).signum();
        let graded = start == 0.0;
        let mut grade_w = match grade {
            Some(e) if graded && e.is_finite() && e > 0.0 => e / 4.0,
            _ => f64::INFINITY,
        };
        let span = (end - start).abs();
        let mut pos = 0.0;
        while span - pos > 1e-14 * span {
            let mut w = rule
                .width_at(start + dir * pos)
                .min(grade_w)
                .min(span - pos);
            // avoid a sliver as the very last panel
            if span - pos - w < 0.05 * w {
                w = span - pos;
            }
            let lo = start + dir * pos;
            let hi = start + dir * (pos + w);
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo).abs());
            for i in 0..GL_ORDER {
                nodes.push(c + h * gx[i]);
                weights.push(h * gw[i]);
            }
            pos += w;
            grade_w *= 2.0;
        }
        KSegment {
            k0,
            nodes,
            weights,
            spacing: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.spacing.is_some()
    }

    /// `Σ_j c_j exp(i (k_j − k0) u)`.
    pub(crate) fn phase_sum(&self, coeffs: &[Complex64], u: f64) -> Complex64 {
        debug_assert_eq!(coeffs.len(), self.nodes.len());
        match self.spacing {
            Some(dk) => {
                let step = Complex64::from_polar(1.0, dk * u);
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, chunk) in coeffs.chunks(RECURRENCE_BLOCK).enumerate() {
                    let kappa = self.nodes[b * RECURRENCE_BLOCK] - self.k0;
                    let mut e = Complex64::from_polar(1.0, kappa * u);
                    for c in chunk {
                        acc += c * e;
                        e *= step;
                    }
                }
                acc
            }
            None => self
                .nodes
                .iter()
                .zip(coeffs)
                .map(|(k, c)| c * Complex64::from_polar(1.0, (k - self.k0) * u))
                .sum(),
        }
    }
}

/// A union of segments.
#[derive(Debug, Clone, Default)]
pub struct KRule {
    pub segments: Vec<KSegment>,
}

impl KRule {
    pub fn total_nodes(&self) -> usize {
        self.segments.iter().map(KSegment::len).sum()
    }

    pub(crate) fn check(self, what: &str, cap: usize) -> Result<Self, QuadratureError> {
        let needed = self.total_nodes();
        if needed > cap {
            return Err(QuadratureError::NodeBudget {
                what: what.to_string(),
                needed,
                cap,
            });
        }
        Ok(self)
    }

    /// `∫ f(k) dk`.
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        self.segments
            .iter()
            .flat_map(|s| s.nodes.iter().zip(&s.weights))
            .map(|(&k, &w)| w * f(k))
            .sum()
    }

    /// Gauss–Legendre panels covering `intervals`, each split at 0 and graded there.
    pub(crate) fn panels_over(
        intervals: &[(f64, f64)],
        k0: f64,
        rule: PanelRule,
        grade: Option<f64>,
    ) -> Self {
        let mut segments = Vec::new();
        for &(a, b) in &merge(intervals) {
            if a < 0.0 && b > 0.0 {
                segments.push(KSegment::panels(a, 0.0, k0, rule, grade));
                segments.push(KSegment::panels(0.0, b, k0, rule, grade));
            } else {
                segments.push(KSegment::panels(a, b, k0, rule, grade));
            }
        }
        segments.retain(|s| !s.is_empty());
        KRule { segments }
    }
}

fn merge(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// The uniform k-window used for integrands carrying the Gaussian `ψ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// `p/ħ`.
    pub k_center: f64,
    pub k_halfwidth: f64,
    /// Number of trapezoid intervals (a power of two).
    pub n_k: usize,
    /// Whether the mirrored window around `−p/ħ` is covered as well.
    pub includes_mirror: bool,
    /// `ħ|t|/m`.
    pub chirp: f64,
}

impl QuadratureSpec {
    /// Plans the window `|k − p/ħ| ≤ window_sigmas·|σ̆|/√ħ` for an evolution
    /// time `t`, with `u_extent` the largest `|y − q_t|` that will be requested.
    pub fn plan(
        params: &ModelParams,
        state: &CoherentState,
        t: f64,
        u_extent: f64,
        opts: &QuadOptions,
    ) -> Result<Self, QuadratureError> {
        let h = params.hbar;
        let unit = state.sigma_breve.norm() / h.sqrt();
        let k_center = state.center.p / h;
        let k_halfwidth = opts.window_sigmas * unit;
        let chirp = h * t.abs() / params.mass;
        let k_max = k_center.abs() + k_halfwidth;
        let mut dk = (unit / GAUSS_MESH).min(PI / u_extent.max(1e-300));
        if chirp > 0.0 {
            // largest dk with chirp·(k_max·dk + dk²/2) ≤ MAX_PHASE_STEP
            let r = 2.0 * MAX_PHASE_STEP / chirp;
            dk = dk.min(r / (k_max + (k_max * k_max + r).sqrt()));
        }
        let raw = (2.0 * k_halfwidth / dk).ceil();
        if !raw.is_finite() || raw > opts.nk_cap as f64 {
            return Err(QuadratureError::NodeBudget {
                what: "gaussian k-window".into(),
                needed: if raw.is_finite() {
                    raw as usize
                } else {
                    usize::MAX
                },
                cap: opts.nk_cap,
            });
        }
        let n_k = (raw as usize).max(1).next_power_of_two();
        if n_k > opts.nk_cap {
            return Err(QuadratureError::NodeBudget {
                what: "gaussian k-window".into(),
                needed: n_k,
                cap: opts.nk_cap,
            });
        }
        Ok(QuadratureSpec {
            k_center,
            k_halfwidth,
            n_k,
            includes_mirror: false,
            chirp,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.k_halfwidth / self.n_k as f64
    }

    /// Largest change of `ħtk²/(2m)` between neighbouring nodes.
    pub fn max_phase_step(&self) -> f64 {
        let dk = self.spacing();
        let k_max = self.k_center.abs() + self.k_halfwidth;
        // |Δ(c k²/2)| ≤ c·k_max·dk + c·dk²/2
        self.chirp * (k_max * dk + 0.5 * dk * dk)
    }

    pub fn segment(&self) -> KSegment {
        let a = self.k_center - self.k_halfwidth;
        let b = self.k_center + self.k_halfwidth;
        let mut s = KSegment::uniform(a, b, self.spacing() * (1.0 + 1e-12), self.k_center);
        debug_assert_eq!(s.len(), self.n_k + 1);
        s.k0 = self.k_center;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhasePoint;
    use proptest::prelude::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre();
        for deg in 0..32 {
            let s: f64 = x.iter().zip(w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((s - exact).abs() < 1e-14, "degree {deg}: {s}");
        }
    }

    #[test]
    fn panels_integrate_oscillatory_gaussian() {
        // ∫_0^∞ e^{-k²} e^{i 30 k} dk against the closed form
        let rule = PanelRule {
            u_extent: 30.0,
            chirp: 0.0,
            k_ref: 0.0,
            max_width: 0.5,
        };
        let seg = KSegment::panels(0.0, 9.0, 0.0, rule, Some(1e-3));
        let coeffs: Vec<Complex64> = seg
            .nodes
            .iter()
            .zip(&seg.weights)
            .map(|(k, w)| Complex64::new(w * (-k * k).exp(), 0.0))
            .collect();
        let got = seg.phase_sum(&coeffs, 30.0);
        let want =
            crate::specfun::gaussian_halfline(Complex64::new(1.0, 0.0), Complex64::new(0.0, 30.0))
                .unwrap();
        assert!((got - want).norm() < 1e-14, "{got} vs {want}");
        // graded start: the first panel is ε/4 wide
        assert!(seg.nodes[GL_ORDER - 1] < 2.5e-4);
    }

    #[test]
    fn uniform_recurrence_matches_direct() {
        let seg = KSegment::uniform(-3.0, 5.0, 0.01, 1.0);
        let coeffs: Vec<Complex64> = seg
            .nodes
            .iter()
            .map(|k| Complex64::new((-k * k).exp(), k.sin()))
            .collect();
        for &u in &[-40.0, -3.3, 0.0, 1.7, 55.0] {
            let fast = seg.phase_sum(&coeffs, u);
            let slow: Complex64 = seg
                .nodes
                .iter()
                .zip(&coeffs)
                .map(|(k, c)| c * Complex64::from_polar(1.0, (k - 1.0) * u))
                .sum();
            assert!((fast - slow).norm() < 1e-12 * (1.0 + slow.norm()), "u={u}");
        }
    }

    #[test]
    fn merge_intervals() {
        let m = merge(&[(3.0, 4.0), (-1.0, 1.0), (0.5, 2.0), (5.0, 5.0)]);
        assert_eq!(m, vec![(-1.0, 2.0), (3.0, 4.0)]);
    }

    proptest! {
        #[test]
        fn planned_phase_step_is_resolved(h in 0.003f64..0.2, t in -20.0f64..20.0, p in -3.0f64..3.0, s0 in 0.5f64..2.0) {
            let params = ModelParams::new(h, 1.0, 1.0, s0).unwrap();
            let st = crate::model::free_evolve_state(&params, &CoherentState::initial(&params, PhasePoint::new(-4.0, p)), t);
            let spec = QuadratureSpec::plan(&params, &st, t, 30.0, &QuadOptions::default()).unwrap();
            prop_assert!(spec.max_phase_step() < MAX_PHASE_STEP);
            prop_assert!(spec.n_k.is_power_of_two());
            prop_assert_eq!(spec.segment().len(), spec.n_k + 1);
        }
    }

    #[test]
    fn node_budget_is_reported() {
        let params = ModelParams::new(1e-6, 1.0, 1.0, 1.0).unwrap();
        let st = CoherentState::initial(&params, PhasePoint::new(-4.0, 2.0));
        let opts = QuadOptions {
            nk_cap: 1024,
            ..QuadOptions::default()
        };
        let err = QuadratureSpec::plan(&params, &st, 100.0, 30.0, &opts).unwrap_err();
        assert!(matches!(err, QuadratureError::NodeBudget { .. }));
    }
}
