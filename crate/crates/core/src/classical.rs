//! The singular phase-space flow `e^{∓itL_B}`, the classical wave and
//! scattering operators, and the closed-form semiclassical approximants.
//!
//! Phase-space functions are callables, so every operator is an exact
//! pointwise pullback. The library stores one flow, [`flow_apply`], which is
//! `e^{−itL_B}`; the forward group `e^{+itL_B}` is `flow_apply` at `−t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, WaveSample};
use crate::model::{
    coherent_eval, free_evolve_state, sgn, theta, CoherentState, ModelParams, PhasePoint, Sign,
};
use crate::quantum::refl;

/// The classical coupling `B(p) = b p²`, with `b = ∞` for total reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClassicalCoupling {
    Finite(f64),
    Infinite,
}

impl ClassicalCoupling {
    /// `b = −2β/ħ³`.
    pub fn from_params(params: &ModelParams) -> Self {
        let b = params.classical_b();
        if b.is_finite() {
            ClassicalCoupling::Finite(b)
        } else {
            ClassicalCoupling::Infinite
        }
    }

    /// `B(p)`, infinite for the total-reflection coupling.
    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            ClassicalCoupling::Finite(b) => b * p * p,
            ClassicalCoupling::Infinite => f64::INFINITY,
        }
    }

    /// `1/(1 + s·2i|p|/(mB(p)))`, which vanishes where `B(p) = 0`.
    pub fn gate_factor(&self, m: f64, p: f64, s: f64) -> Complex64 {
        let c = match *self {
            ClassicalCoupling::Infinite => 0.0,
            ClassicalCoupling::Finite(b) => 2.0 / (m * b * p.abs()),
        };
        if !c.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(1.0, -s * c) / (1.0 + c * c)
    }
}

/// `f_odd(ξ) = f(ξ) − f(−ξ)`.
#[inline]
pub fn odd_part<F: Fn(PhasePoint) -> Complex64>(f: &F, xi: PhasePoint) -> Complex64 {
    f(xi) - f(-xi)
}

/// `(e^{−itL_B}f)(ξ) = f(q − pt/m, p) − θ(tqp)θ(|pt|/m − |q|)/(1 + sgn(t)2i|p|/(mB(p))) · f_odd(q − pt/m, p)`.
pub fn flow_apply<F: Fn(PhasePoint) -> Complex64>(
    coupling: &ClassicalCoupling,
    m: f64,
    f: &F,
    t: f64,
    xi: PhasePoint,
) -> Complex64 {
    let (q, p) = (xi.q, xi.p);
    let moved = PhasePoint::new(q - p * t / m, p);
    let free = f(moved);
    let gate = theta(t * q * p) * theta((p * t).abs() / m - q.abs());
    if gate == 0.0 {
        return free;
    }
    reflect(free, f(-moved), coupling.gate_factor(m, p, sgn(t)))
}

/// `v − g(v − w)`, written so that `g = 0` and `g = 1` are exact.
#[inline]
fn reflect(v: Complex64, w: Complex64, g: Complex64) -> Complex64 {
    (1.0 - g) * v + g * w
}

/// `(W_B^± f)(ξ) = f(ξ) − θ(∓qp)/(1 ± 2i|p|/(mB(p))) · f_odd(ξ)`.
pub fn classical_wave<F: Fn(PhasePoint) -> Complex64>(
    coupling: &ClassicalCoupling,
    m: f64,
    sign: Sign,
    f: &F,
    xi: PhasePoint,
) -> Complex64 {
    let s = sign.value();
    let g = theta(-s * xi.q * xi.p) * coupling.gate_factor(m, xi.p, s);
    if g == Complex64::new(0.0, 0.0) {
        return f(xi);
    }
    reflect(f(xi), f(-xi), g)
}

/// `(W̆_B^± f)(ξ) = f(ξ) − θ(∓qp)/(1 ∓ 2i|p|/(mB(p))) · f_odd(ξ)`; this is also `(W_B^±)*`.
pub fn classical_wave_reverse<F: Fn(PhasePoint) -> Complex64>(
    coupling: &ClassicalCoupling,
    m: f64,
    sign: Sign,
    f: &F,
    xi: PhasePoint,
) -> Complex64 {
    let s = sign.value();
    let g = theta(-s * xi.q * xi.p) * coupling.gate_factor(m, xi.p, -s);
    if g == Complex64::new(0.0, 0.0) {
        return f(xi);
    }
    reflect(f(xi), f(-xi), g)
}

/// `(S^cl_B f)(ξ) = f(ξ) − f_odd(ξ)/(1 − 2i|p|/(mB(p)))`.
pub fn classical_scatter<F: Fn(PhasePoint) -> Complex64>(
    coupling: &ClassicalCoupling,
    m: f64,
    f: &F,
    xi: PhasePoint,
) -> Complex64 {
    let g = coupling.gate_factor(m, xi.p, -1.0);
    if g == Complex64::new(0.0, 0.0) {
        return f(xi);
    }
    reflect(f(xi), f(-xi), g)
}

fn require_qp(state: &CoherentState, op: &'static str) -> Result<()> {
    let (q, p) = (state.center.q, state.center.p);
    if q * p == 0.0 || !(q * p).is_finite() {
        return Err(Error::domain(
            op,
            format!("requires qp != 0, got q = {q}, p = {p}"),
        ));
    }
    Ok(())
}

/// `ψ(x) + c·(ψ(x) − ψ(−x))` for the coherent state `state`.
fn with_odd_reflection(
    params: &ModelParams,
    state: &CoherentState,
    c: Complex64,
    grid: &GridSpec,
) -> WaveSample {
    WaveSample::from_fn(*grid, |x| {
        let v = coherent_eval(params, state, x);
        if c == Complex64::new(0.0, 0.0) {
            v
        } else {
            v + c * (v - coherent_eval(params, state, -x))
        }
    })
}

/// Weight `c` in `ψ_t + c(ψ_t(x) − ψ_t(−x))` approximating `e^{−itH_β/ħ}ψ`:
/// `−sgn(q)[θ(−qp)θ(t + mq/p)R₋(p/ħ) + θ(qp)θ(−t − mq/p)R₊(p/ħ)]`.
pub fn semiclassical_dynamics_weight(params: &ModelParams, xi: PhasePoint, t: f64) -> Complex64 {
    let (q, p) = (xi.q, xi.p);
    let k = p / params.hbar;
    let shift = t + params.mass * q / p;
    let minus = theta(-q * p) * theta(shift) * refl(params, Sign::Minus, k);
    let plus = theta(q * p) * theta(-shift) * refl(params, Sign::Plus, k);
    -sgn(q) * (minus + plus)
}

/// `e^{iA_t/ħ}(e^{itL_B}φ^ħ_{σ_t,x})(ξ)` in closed form on `grid`.
pub fn semiclassical_dynamics(
    params: &ModelParams,
    state0: &CoherentState,
    t: f64,
    grid: &GridSpec,
) -> Result<WaveSample> {
    require_qp(state0, "semiclassical_dynamics")?;
    let evolved = free_evolve_state(params, state0, t);
    let c = semiclassical_dynamics_weight(params, state0.center, t);
    Ok(with_odd_reflection(params, &evolved, c, grid))
}

/// `sgn(q)θ(∓qp)R±(p/ħ)`.
pub fn semiclassical_waveop_weight(params: &ModelParams, sign: Sign, xi: PhasePoint) -> Complex64 {
    let (q, p) = (xi.q, xi.p);
    sgn(q) * theta(-sign.value() * q * p) * refl(params, sign, p / params.hbar)
}

/// `(W_B^± φ^ħ_{σ₀,·})(ξ) = ψ + sgn(q)θ(∓qp)R±(p/ħ)(ψ_ξ − ψ_{−ξ})` on `grid`.
pub fn semiclassical_waveop(
    params: &ModelParams,
    sign: Sign,
    state0: &CoherentState,
    grid: &GridSpec,
) -> Result<WaveSample> {
    require_qp(state0, "semiclassical_waveop")?;
    let c = semiclassical_waveop_weight(params, sign, state0.center);
    Ok(with_odd_reflection(params, state0, c, grid))
}

/// `sgn(p)R₋(p/ħ)`.
pub fn semiclassical_scatter_weight(params: &ModelParams, xi: PhasePoint) -> Complex64 {
    sgn(xi.p) * refl(params, Sign::Minus, xi.p / params.hbar)
}

/// `(S^cl_B φ^ħ_{σ₀,·})(ξ) = ψ + sgn(p)R₋(p/ħ)(ψ_ξ − ψ_{−ξ})` on `grid`.
pub fn semiclassical_scatter(
    params: &ModelParams,
    state0: &CoherentState,
    grid: &GridSpec,
) -> Result<WaveSample> {
    require_qp(state0, "semiclassical_scatter")?;
    let c = semiclassical_scatter_weight(params, state0.center);
    Ok(with_odd_reflection(params, state0, c, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{phi_phase_space_eval, sigma_t};
    use crate::quadrature::{KRule, PanelRule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// A smooth test function with no symmetry.
    fn probe(xi: PhasePoint) -> Complex64 {
        let (q, p) = (xi.q, xi.p);
        c(-(q - 0.7).powi(2) - 0.5 * (p + 0.3).powi(2), 0.0).exp()
            * c(0.0, 1.3 * q - 0.4 * p * q).exp()
            + c(0.2 * q, p).exp() * 0.01
    }

    fn random_point(rng: &mut ChaCha8Rng) -> PhasePoint {
        PhasePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
    }

    const COUPLINGS: [ClassicalCoupling; 4] = [
        ClassicalCoupling::Finite(0.7),
        ClassicalCoupling::Finite(-2.5),
        ClassicalCoupling::Finite(0.0),
        ClassicalCoupling::Infinite,
    ];

    #[test]
    fn flow_examples() {
        let xi = PhasePoint::new(0.4, -1.1);
        for b in COUPLINGS {
            assert_eq!(flow_apply(&b, 1.0, &probe, 0.0, xi), probe(xi));
        }
        let free = ClassicalCoupling::Finite(0.0);
        let got = flow_apply(&free, 2.0, &probe, 1.5, xi);
        assert_eq!(got, probe(PhasePoint::new(0.4 + 1.1 * 1.5 / 2.0, -1.1)));
        let inf = ClassicalCoupling::Infinite;
        let got = flow_apply(&inf, 1.0, &probe, 2.0, PhasePoint::new(1.0, 1.0));
        assert_eq!(got, probe(PhasePoint::new(1.0, -1.0)));
    }

    #[test]
    fn full_reflection_two_branch_formula() {
        let inf = ClassicalCoupling::Infinite;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let xi = random_point(&mut rng);
            let t = rng.gen_range(-5.0..5.0);
            let (q, p) = (xi.q, xi.p);
            let g = theta(t * q * p) * theta((p * t).abs() - q.abs());
            let want = (1.0 - g) * probe(PhasePoint::new(q - p * t, p))
                + g * probe(PhasePoint::new(-q + p * t, -p));
            assert!((flow_apply(&inf, 1.0, &probe, t, xi) - want).norm() < 1e-15);
        }
    }

    fn off_gate(xi: PhasePoint, t: f64, m: f64) -> bool {
        (xi.q.abs() - (xi.p * t).abs() / m).abs() > 1e-9 && (xi.q * xi.p).abs() > 1e-9
    }

    #[test]
    fn flow_group_law() {
        let m = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in COUPLINGS {
            let mut checked = 0;
            while checked < 1000 {
                let xi = random_point(&mut rng);
                let (t, s) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                // the inner flow is evaluated at the free images of ξ, which must also be off the gates
                let moved = PhasePoint::new(xi.q - xi.p * t / m, xi.p);
                if !(off_gate(xi, t, m)
                    && off_gate(xi, t + s, m)
                    && off_gate(moved, s, m)
                    && off_gate(-moved, s, m))
                {
                    continue;
                }
                let inner = |z: PhasePoint| flow_apply(&b, m, &probe, s, z);
                let lhs = flow_apply(&b, m, &inner, t, xi);
                let rhs = flow_apply(&b, m, &probe, t + s, xi);
                assert!(
                    (lhs - rhs).norm() < 1e-13 * (1.0 + rhs.norm()),
                    "{b:?} {xi:?} t={t} s={s}: {lhs} vs {rhs}"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn gate_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let xi = random_point(&mut rng);
            let t = rng.gen_range(-5.0..5.0);
            let m = rng.gen_range(0.5..2.0);
            if !off_gate(xi, t, m) {
                continue;
            }
            let (q, p) = (xi.q, xi.p);
            let lhs = theta(-t * q * p) * theta((p * t).abs() / m - q.abs());
            let rhs = theta(-q * p) * theta(t + m * q / p) + theta(q * p) * theta(-t - m * q / p);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn flow_is_unitary_in_l2() {
        // q-integrals split at the gate lines 0 and ±|pt|/m, p-integral split at 0
        let m = 1.0;
        let f = |xi: PhasePoint| c(-(xi.q + 1.0).powi(2) - (xi.p - 0.5).powi(2), 0.8 * xi.q).exp();
        let rule = |a: f64, b: f64, pts: &[f64]| {
            let mut cuts: Vec<f64> = pts.iter().copied().filter(|x| *x > a && *x < b).collect();
            cuts.push(a);
            cuts.push(b);
            cuts.sort_by(f64::total_cmp);
            let iv: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
            let panel = PanelRule {
                u_extent: 0.0,
                chirp: 0.0,
                k_ref: 0.0,
                max_width: 0.25,
            };
            KRule::panels_over(&iv, 0.0, panel, None)
        };
        let norm = |g: &dyn Fn(PhasePoint) -> Complex64, t: f64| -> f64 {
            rule(-7.0, 7.0, &[0.0])
                .integrate(|p| {
                    let tp = (p * t).abs() / m;
                    let inner = rule(-12.0, 12.0, &[0.0, tp, -tp])
                        .integrate(|q| g(PhasePoint::new(q, p)).norm_sqr().into());
                    inner
                })
                .re
        };
        let n0 = norm(&f, 0.0);
        for b in COUPLINGS {
            for t in [-3.0, 0.7, 2.5] {
                let g = |xi: PhasePoint| flow_apply(&b, m, &f, t, xi);
                let n = norm(&g, t);
                assert!((n - n0).abs() < 1e-6 * n0, "{b:?} t={t}: {n} vs {n0}");
            }
        }
    }

    #[test]
    fn wave_operator_examples() {
        let even = |xi: PhasePoint| c(-(xi.q * xi.q) - xi.p * xi.p, 0.0).exp();
        let xi = PhasePoint::new(0.3, -0.8);
        for b in COUPLINGS {
            for s in [Sign::Plus, Sign::Minus] {
                assert_eq!(classical_wave(&b, 1.0, s, &even, xi), even(xi));
                assert_eq!(classical_wave_reverse(&b, 1.0, s, &even, xi), even(xi));
            }
        }
        let inf = ClassicalCoupling::Infinite;
        assert_eq!(
            classical_wave(&inf, 1.0, Sign::Plus, &probe, xi),
            probe(-xi)
        );
        assert_eq!(classical_scatter(&inf, 1.0, &probe, xi), probe(-xi));
        let free = ClassicalCoupling::Finite(0.0);
        assert_eq!(classical_scatter(&free, 1.0, &probe, xi), probe(xi));
        assert_eq!(
            classical_wave_reverse(&free, 1.0, Sign::Minus, &probe, xi),
            probe(xi)
        );
    }

    #[test]
    fn wave_operator_identities() {
        let m = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for b in COUPLINGS {
            for _ in 0..10_000 {
                let xi = random_point(&mut rng);
                for s in [Sign::Plus, Sign::Minus] {
                    // W̆± = (W±)* inverts W± from both sides
                    let w = |z: PhasePoint| classical_wave(&b, m, s, &probe, z);
                    let r = |z: PhasePoint| classical_wave_reverse(&b, m, s, &probe, z);
                    let a = classical_wave_reverse(&b, m, s, &w, xi);
                    let d = classical_wave(&b, m, s, &r, xi);
                    assert!(
                        (a - probe(xi)).norm() < 1e-14 && (d - probe(xi)).norm() < 1e-14,
                        "{b:?} {xi:?}"
                    );
                }
                // S W⁺ = W⁻, S = (W⁺)* W⁻, W⁺W⁻ = W⁻W⁺
                let wp = |z: PhasePoint| classical_wave(&b, m, Sign::Plus, &probe, z);
                let wm = |z: PhasePoint| classical_wave(&b, m, Sign::Minus, &probe, z);
                let swp = classical_scatter(&b, m, &wp, xi);
                assert!((swp - wm(xi)).norm() < 1e-14);
                let adj = classical_wave_reverse(&b, m, Sign::Plus, &wm, xi);
                assert!((adj - classical_scatter(&b, m, &probe, xi)).norm() < 1e-14);
                let pm = classical_wave(&b, m, Sign::Plus, &wm, xi);
                let mp = classical_wave(&b, m, Sign::Minus, &wp, xi);
                assert!((pm - mp).norm() < 1e-14);
            }
        }
    }

    fn setup(beta: f64, q: f64, p: f64) -> (ModelParams, CoherentState, GridSpec) {
        let params = ModelParams::new(0.1, 1.3, beta, 0.8).unwrap();
        let xi = PhasePoint::new(q, p);
        (
            params,
            CoherentState::initial(&params, xi),
            GridSpec::symmetric(8.0, 401).unwrap(),
        )
    }

    /// `e^{iA_t/ħ}(e^{itL_B}φ^ħ_{σ_t,x})(ξ)` by composing the flow with the phase-space function.
    fn dynamics_by_flow(
        params: &ModelParams,
        xi: PhasePoint,
        t: f64,
        grid: &GridSpec,
    ) -> WaveSample {
        let b = ClassicalCoupling::from_params(params);
        let st = sigma_t(params, t);
        let phase = Complex64::from_polar(1.0, xi.p * xi.p * t / (2.0 * params.mass * params.hbar));
        WaveSample::from_fn(*grid, |x| {
            let f = |z: PhasePoint| phi_phase_space_eval(params, st, x, z);
            phase * flow_apply(&b, params.mass, &f, -t, xi)
        })
    }

    fn max_diff(a: &WaveSample, b: &WaveSample) -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn semiclassical_dynamics_matches_flow() {
        for &(beta, q, p) in &[
            (0.6, -2.0, 1.0),
            (-0.4, 1.5, -0.7),
            (0.6, 2.0, 1.0),
            (f64::INFINITY, -2.0, 1.5),
        ] {
            let (params, st, grid) = setup(beta, q, p);
            for t in [-4.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
                let closed = semiclassical_dynamics(&params, &st, t, &grid).unwrap();
                let flow = dynamics_by_flow(&params, st.center, t, &grid);
                assert!(
                    max_diff(&closed, &flow) < 1e-12,
                    "beta={beta} q={q} p={p} t={t}"
                );
            }
        }
    }

    #[test]
    fn semiclassical_dynamics_limits() {
        let (params, st, grid) = setup(0.6, -2.0, 1.0);
        let init = WaveSample::from_fn(grid, |x| coherent_eval(&params, &st, x));
        assert_eq!(
            semiclassical_dynamics(&params, &st, 0.0, &grid).unwrap(),
            init
        );
        let free = params.with_beta(0.0);
        let ev = free_evolve_state(&free, &st, 5.0);
        let want = WaveSample::from_fn(grid, |x| coherent_eval(&free, &ev, x));
        assert_eq!(
            semiclassical_dynamics(&free, &st, 5.0, &grid).unwrap(),
            want
        );
        let bad = CoherentState::initial(&params, PhasePoint::new(0.0, 1.0));
        assert!(semiclassical_dynamics(&params, &bad, 1.0, &grid).is_err());
    }

    #[test]
    fn semiclassical_operators_match_classical_ones() {
        for &(beta, q, p) in &[
            (0.6, -2.0, 1.0),
            (-0.4, 1.5, -0.7),
            (0.6, 2.0, 1.0),
            (f64::INFINITY, 1.0, -1.5),
        ] {
            let (params, st, grid) = setup(beta, q, p);
            let b = ClassicalCoupling::from_params(&params);
            let s0 = Complex64::new(params.sigma0, 0.0);
            for sign in [Sign::Plus, Sign::Minus] {
                let closed = semiclassical_waveop(&params, sign, &st, &grid).unwrap();
                let by_w = WaveSample::from_fn(grid, |x| {
                    classical_wave(
                        &b,
                        params.mass,
                        sign,
                        &|z| phi_phase_space_eval(&params, s0, x, z),
                        st.center,
                    )
                });
                assert!(max_diff(&closed, &by_w) < 1e-12, "beta={beta} {sign:?}");
            }
            let closed = semiclassical_scatter(&params, &st, &grid).unwrap();
            let by_s = WaveSample::from_fn(grid, |x| {
                classical_scatter(
                    &b,
                    params.mass,
                    &|z| phi_phase_space_eval(&params, s0, x, z),
                    st.center,
                )
            });
            assert!(max_diff(&closed, &by_s) < 1e-12, "beta={beta}");
        }
    }

    #[test]
    fn semiclassical_operator_limits() {
        let (params, st, grid) = setup(0.6, 2.0, 1.0);
        let psi = WaveSample::from_fn(grid, |x| coherent_eval(&params, &st, x));
        assert_eq!(
            semiclassical_waveop(&params, Sign::Plus, &st, &grid).unwrap(),
            psi
        );
        let free = params.with_beta(0.0);
        assert_eq!(semiclassical_scatter(&free, &st, &grid).unwrap(), psi);
        // total reflection: sgn(p)R₋(p/ħ) = −1 leaves the mirrored packet
        let inf = params.with_beta(f64::INFINITY);
        let mirrored = WaveSample::from_fn(grid, |x| coherent_eval(&params, &st, -x));
        assert!(max_diff(&semiclassical_scatter(&inf, &st, &grid).unwrap(), &mirrored) < 1e-15);
        assert!((semiclassical_scatter_weight(&inf, st.center) + 1.0).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn gate_factor_is_bounded(b in -10.0f64..10.0, p in -5.0f64..5.0, m in 0.1f64..3.0) {
            for s in [1.0, -1.0] {
                let g = ClassicalCoupling::Finite(b).gate_factor(m, p, s);
                prop_assert!(g.norm() <= 1.0 + 1e-15);
                // 1/(1+ia) + 1/(1−ia) = 2/|1+ia|²
                let h = ClassicalCoupling::Finite(b).gate_factor(m, p, -s);
                prop_assert!((g + h - 2.0 * g.norm_sqr()).norm() < 1e-14);
            }
        }
    }
}
