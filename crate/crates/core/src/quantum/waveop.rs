//! Wave operators `Ω±` and the scattering operator `S_β = (Ω₊)*Ω₋`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{GridSpec, WaveSample};
use crate::model::{coherent_eval, sgn, CoherentState, ModelParams, Sign};
use crate::quadrature::{KRule, PanelRule, QuadOptions};
use crate::specfun::gaussian_halfline_scaled;

use super::propagator::{check_inputs, Diagnostics};
use super::spectral::{refl, INV_SQRT_2PI};
use super::terms::{bounds, E3Term, FTerm, Packet, Spectrum};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pointwise evaluator of `(Ω±ψ)(x) − ψ(x) = sgn(x)(2π)^{−1/2} ∫ e^{∓i|k||x|} R±(k) ψ̂(k) dk`.
///
/// On the half-line carrying `p/ħ` the integrand is split into
/// `R±(p/ħ)ψ̂(k)`, integrated in closed form, and `(R±(k) − R±(p/ħ))ψ̂(k)`;
/// this keeps exponentially small results accurate to full relative precision.
#[derive(Debug, Clone)]
pub struct WaveOperator {
    sign: f64,
    q: f64,
    sp: f64,
    k0: f64,
    r0: Complex64,
    ft: (Complex64, Complex64, Complex64),
    main: Spectrum,
    other: Option<Spectrum>,
    free: bool,
}

impl WaveOperator {
    pub(crate) fn plan(pk: &Packet, sign: Sign, x_extent: f64, opts: &QuadOptions) -> Result<Self> {
        let params = pk.params;
        let sp = sgn(pk.p());
        let k0 = pk.k0;
        let r0 = refl(&params, sign, k0);
        let ft = pk.state.ft_log_quadratic(params.hbar);
        let mut op = WaveOperator {
            sign: sign.value(),
            q: pk.q(),
            sp,
            k0,
            r0,
            ft,
            main: Spectrum::default(),
            other: None,
            free: params.is_free(),
        };
        if op.free {
            return Ok(op);
        }
        let u_extent = x_extent + pk.q().abs();
        let w = pk.window(opts);
        let (lo, hi) = if sp > 0.0 {
            ((k0 - w).max(0.0), k0 + w)
        } else {
            (k0 - w, (k0 + w).min(0.0))
        };
        let panel = PanelRule {
            u_extent,
            chirp: 0.0,
            k_ref: k0,
            max_width: pk.unit,
        };
        let rule = KRule::panels_over(&[(lo, hi)], k0, panel, pk.grading())
            .check("wave operator k-window", opts.nk_cap)?;
        op.main = Spectrum::build(rule, |k| (refl(&params, sign, k) - r0) * pk.envelope(k));
        if bounds::e3(pk) > opts.negligible {
            let end = pk.half_line_end(opts);
            let interval = if sp > 0.0 { (-end, 0.0) } else { (0.0, end) };
            let panel = PanelRule {
                u_extent,
                chirp: 0.0,
                k_ref: 0.0,
                max_width: pk.unit,
            };
            let rule = KRule::panels_over(&[interval], 0.0, panel, pk.grading())
                .check("wave operator k-window", opts.nk_cap)?;
            op.other = Some(Spectrum::build(rule, |k| {
                refl(&params, sign, k) * pk.envelope(k)
            }));
        }
        Ok(op)
    }

    /// `(Ω±ψ − ψ)` at `|x|`, without the factor `sgn(x)`.
    pub fn eval_abs(&self, ax: f64) -> Complex64 {
        if self.free {
            return Complex64::new(0.0, 0.0);
        }
        // phase of ψ̂(k)e^{∓i|k||x|} is e^{ikY} with Y = ∓|x| − q for k > 0, ±|x| − q for k < 0
        let y_pos = -self.sign * ax - self.q;
        let y_neg = self.sign * ax - self.q;
        let (y_main, y_other) = if self.sp > 0.0 {
            (y_pos, y_neg)
        } else {
            (y_neg, y_pos)
        };
        let (a, b, d) = self.ft;
        let closed = if self.sp > 0.0 {
            gaussian_halfline_scaled(a, b + I * y_main, d)
        } else {
            gaussian_halfline_scaled(a, -b - I * y_main, d)
        };
        let mut v =
            self.r0 * closed + Complex64::from_polar(1.0, self.k0 * y_main) * self.main.sum(y_main);
        if let Some(other) = &self.other {
            v += other.sum(y_other);
        }
        INV_SQRT_2PI * v
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        sgn(x) * self.eval_abs(x.abs())
    }

    pub fn nodes(&self) -> usize {
        self.main.nodes() + self.other.as_ref().map_or(0, Spectrum::nodes)
    }
}

/// `Ω±ψ − ψ` on `grid`.
pub fn wave_op_correction(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<WaveSample> {
    check_inputs(params, state, "wave_op_apply")?;
    let pk = Packet::new(params, state);
    let op = WaveOperator::plan(&pk, sign, grid.extent(), opts)?;
    Ok(WaveSample::from_odd_fn(*grid, |ax| op.eval_abs(ax)))
}

/// `Ω±ψ` on `grid`.
pub fn wave_op_apply(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    grid: &GridSpec,
) -> Result<WaveSample> {
    wave_op_apply_with(params, sign, state, grid, &QuadOptions::default())
}

pub fn wave_op_apply_with(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<WaveSample> {
    let mut out = wave_op_correction(params, sign, state, grid, opts)?;
    for (i, v) in out.values.iter_mut().enumerate() {
        *v += coherent_eval(params, state, grid.node(i));
    }
    Ok(out)
}

/// `Ω±ψ = ψ + sgn(x)[θ(qp)F±,0(∓sgn(q)|x|) + θ(−qp)F±,0(±sgn(q)|x|)] + E3,±`.
#[derive(Debug, Clone)]
pub struct WaveOpSplit {
    pub psi: WaveSample,
    pub f_terms: WaveSample,
    pub e3: WaveSample,
}

impl WaveOpSplit {
    pub fn total(&self) -> WaveSample {
        let values = (0..self.psi.grid.n)
            .map(|i| self.psi.values[i] + self.f_terms.values[i] + self.e3.values[i])
            .collect();
        WaveSample {
            grid: self.psi.grid,
            values,
        }
    }
}

pub fn wave_op_split(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<WaveOpSplit> {
    check_inputs(params, state, "wave_op_split")?;
    let grid = *grid;
    let psi = WaveSample::from_fn(grid, |x| coherent_eval(params, state, x));
    if params.is_free() {
        return Ok(WaveOpSplit {
            psi,
            f_terms: WaveSample::zeros(grid),
            e3: WaveSample::zeros(grid),
        });
    }
    let pk = Packet::new(params, state);
    let (q, p) = (state.center.q, state.center.p);
    let s = sign.value();
    let f = FTerm::plan(&pk, sign, 0.0, grid.extent(), opts)?;
    let dir = if q * p > 0.0 { -s * sgn(q) } else { s * sgn(q) };
    let f_terms = WaveSample::from_odd_fn(grid, |ax| f.eval(dir * ax));
    let e3 = E3Term::plan(&pk, sign, grid.extent(), opts)?;
    let e3 = WaveSample::from_odd_fn(grid, |ax| e3.eval_abs(ax));
    Ok(WaveOpSplit { psi, f_terms, e3 })
}

/// `E3,±(x)` at one point.
pub fn error_term_e3(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    x: f64,
) -> Result<Complex64> {
    check_inputs(params, state, "error_term_E3")?;
    if params.is_free() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let pk = Packet::new(params, state);
    Ok(E3Term::plan(&pk, sign, x.abs(), &QuadOptions::default())?.eval(x))
}

/// `E3,±` on a grid.
pub fn error_term_e3_on_grid(
    params: &ModelParams,
    sign: Sign,
    state: &CoherentState,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<WaveSample> {
    check_inputs(params, state, "error_term_E3")?;
    if params.is_free() {
        return Ok(WaveSample::zeros(*grid));
    }
    let pk = Packet::new(params, state);
    let e3 = E3Term::plan(&pk, sign, grid.extent(), opts)?;
    Ok(WaveSample::from_odd_fn(*grid, |ax| e3.eval_abs(ax)))
}

/// The three stages of [`scattering_apply_with`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScatterDiagnostics {
    /// k-nodes of the `Ω₋` evaluator.
    pub wave_op: Diagnostics,
    /// x-nodes of the `F₊` transform.
    pub transform: Diagnostics,
    /// k-nodes of the inverse Fourier transform.
    pub synthesis: Diagnostics,
}

/// `S_βψ = F* F₊ Ω₋ψ` on `grid`.
pub fn scattering_apply(
    params: &ModelParams,
    state: &CoherentState,
    grid: &GridSpec,
) -> Result<WaveSample> {
    Ok(scattering_apply_with(params, state, grid, &QuadOptions::default())?.0)
}

/// `S_βψ` by composition. `Ω₋ψ` is sampled on Gauss–Legendre x-panels around
/// `±q` (the output grid is too coarse for the `e^{ikx}` oscillations), then
/// `F₊` is applied at k-nodes around `±p/ħ` and the result synthesized on `grid`.
pub fn scattering_apply_with(
    params: &ModelParams,
    state: &CoherentState,
    grid: &GridSpec,
    opts: &QuadOptions,
) -> Result<(WaveSample, ScatterDiagnostics)> {
    check_inputs(params, state, "scattering_apply")?;
    let mut diag = ScatterDiagnostics::default();
    if params.is_free() {
        return Ok((
            WaveSample::from_fn(*grid, |x| coherent_eval(params, state, x)),
            diag,
        ));
    }
    let pk = Packet::new(params, state);
    let q = state.center.q;
    let k0 = pk.k0;
    let kw = pk.window(opts);
    let lx = opts.window_sigmas * std::f64::consts::SQRT_2 * pk.x_width();

    let spread = bounds::e3(&pk) > opts.negligible;
    let x_windows: Vec<(f64, f64)> = if spread {
        let ext = grid.extent().max(q.abs() + lx);
        vec![(-ext, ext)]
    } else {
        vec![(q - lx, q + lx), (-q - lx, -q + lx)]
    };
    let x_reach = x_windows
        .iter()
        .fold(0.0f64, |m, &(a, b)| m.max(a.abs()).max(b.abs()));

    let mut k_windows = vec![(k0 - kw, k0 + kw), (-k0 - kw, -k0 + kw)];
    if spread {
        let k_max = k0.abs() + opts.tail_sigmas * pk.unit;
        k_windows.push((-k_max, k_max));
    }
    let k_reach = k_windows
        .iter()
        .fold(0.0f64, |m, &(a, b)| m.max(a.abs()).max(b.abs()));

    let omega = WaveOperator::plan(&pk, Sign::Minus, x_reach, opts)?;
    diag.wave_op.k_nodes = omega.nodes();

    let x_panel = PanelRule {
        u_extent: k_reach,
        chirp: 0.0,
        k_ref: 0.0,
        max_width: pk.x_width(),
    };
    let x_rule = KRule::panels_over(&x_windows, 0.0, x_panel, None)
        .check("scattering x-panels", opts.nk_cap)?;
    let (xs, wx): (Vec<f64>, Vec<f64>) = x_rule
        .segments
        .iter()
        .flat_map(|s| s.nodes.iter().copied().zip(s.weights.iter().copied()))
        .unzip();
    diag.transform.x_nodes = xs.len();
    let omega_vals: Vec<Complex64> = xs
        .par_iter()
        .zip(&wx)
        .map(|(&x, &w)| w * (coherent_eval(params, state, x) + omega.eval(x)))
        .collect();

    let k_panel = PanelRule {
        u_extent: grid.extent() + x_reach,
        chirp: 0.0,
        k_ref: 0.0,
        max_width: pk.unit,
    };
    let k_rule = KRule::panels_over(&k_windows, 0.0, k_panel, pk.grading())
        .check("scattering k-window", opts.nk_cap)?;
    diag.transform.k_nodes = k_rule.total_nodes();
    diag.synthesis.k_nodes = k_rule.total_nodes();

    // (F₊f)(k) = (2π)^{−1/2} Σ w f(x) [e^{−ikx} + conj(R₊(k)) sgn(x) e^{i|k||x|}]
    let transform = |k: f64| {
        let rc = refl(params, Sign::Plus, k).conj();
        let sk = sgn(k);
        let mut direct = Complex64::new(0.0, 0.0);
        let mut reflected = Complex64::new(0.0, 0.0);
        for (&x, f) in xs.iter().zip(&omega_vals) {
            let e = Complex64::from_polar(1.0, -k * x);
            direct += e * f;
            // e^{i|k||x|} is e^{−ikx} when k and x have opposite signs, else its conjugate
            let sx = sgn(x);
            let r = if sk * sx < 0.0 { e } else { e.conj() };
            reflected += sx * r * f;
        }
        INV_SQRT_2PI * (direct + rc * reflected)
    };
    let synth = Spectrum::build(k_rule, |k| INV_SQRT_2PI * transform(k));
    let out = WaveSample::from_fn(*grid, |x| synth.sum(x));
    if out
        .values
        .iter()
        .any(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(crate::quadrature::QuadratureError::NonFinite {
            what: "scattering operator".into(),
        }
        .into());
    }
    Ok((out, diag))
}
