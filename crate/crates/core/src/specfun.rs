//! The Faddeeva function and closed-form half-line Gaussian integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CoherentState, ModelParams};

const I: Complex64 = Complex64::new(0.0, 1.0);
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Below this modulus the rational series is used, above it the continued fraction.
pub const SPLIT_RADIUS: f64 = 8.0;
const WEIDEMAN_N: usize = 48;

struct Weideman {
    l: f64,
    coeffs: [f64; WEIDEMAN_N],
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        let f: Vec<f64> = (1..m)
            .map(|k| {
                let t = l * (k as f64 * PI / m as f64 / 2.0).tan();
                (-t * t).exp() * (l * l + t * t)
            })
            .collect();
        let f0 = l * l;
        let mut coeffs = [0.0; WEIDEMAN_N];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let order = (j + 1) as f64;
            // f is even in k, so the DFT reduces to a cosine sum
            let mut s = f0;
            for (i, fk) in f.iter().enumerate() {
                let k = (i + 1) as f64;
                s += 2.0 * fk * (PI * order * k / m as f64).cos();
            }
            *c = s / (2 * m) as f64;
        }
        Weideman { l, coeffs }
    })
}

/// Upper half-plane only.
fn w_series(z: Complex64) -> Complex64 {
    let tab = weideman();
    let lmiz = tab.l - I * z;
    let zz = (tab.l + I * z) / lmiz;
    let mut p = Complex64::new(0.0, 0.0);
    for c in tab.coeffs.iter().rev() {
        p = p * zz + c;
    }
    2.0 * p / (lmiz * lmiz) + FRAC_1_SQRT_PI / lmiz
}

/// Laplace continued fraction, upper half-plane, `|z| ≥ SPLIT_RADIUS`.
fn w_continued_fraction(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 1e7 {
        return I * FRAC_1_SQRT_PI / z;
    }
    let terms = (4.0 + 3200.0 / (r * r)).ceil() as usize;
    let mut tail = z;
    for n in (1..=terms).rev() {
        tail = z - (n as f64 * 0.5) / tail;
    }
    I * FRAC_1_SQRT_PI / tail
}

fn w_upper(z: Complex64) -> Complex64 {
    if z.norm() < SPLIT_RADIUS {
        w_series(z)
    } else {
        w_continued_fraction(z)
    }
}

/// Componentwise clamp of overflowing values to `±f64::MAX`.
fn saturate(v: Complex64) -> Complex64 {
    let clamp = |x: f64| {
        if x.is_nan() {
            f64::MAX
        } else {
            x.clamp(-f64::MAX, f64::MAX)
        }
    };
    Complex64::new(clamp(v.re), clamp(v.im))
}

/// `w(z) = e^{−z²} erfc(−iz)`.
///
/// Rational series inside `|z| < 8`, continued fraction outside; the lower
/// half-plane goes through `w(z) = 2e^{−z²} − w(−z)`, saturating instead of
/// returning infinities where `e^{−z²}` overflows. Results are computed for
/// `Re z ≥ 0` and mirrored with `w(−z̄) = conj(w(z))`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        let e = (-z * z).exp();
        return saturate(2.0 * e - faddeeva(-z));
    }
    if z.re < 0.0 {
        return w_upper(-z.conj()).conj();
    }
    w_upper(z)
}

/// `∫₀^∞ exp(−a y² + c y) dy` for `Re a > 0`.
pub fn gaussian_halfline(a: Complex64, c: Complex64) -> Result<Complex64> {
    if !(a.re > 0.0) {
        return Err(Error::domain(
            "gaussian_halfline",
            format!("Re a must be > 0, got a = {a}"),
        ));
    }
    Ok(gaussian_halfline_scaled(a, c, Complex64::new(0.0, 0.0)))
}

/// `e^{d} ∫₀^∞ exp(−a y² + c y) dy`, with `e^{d}` folded into the
/// exponentials so that huge and tiny factors are never multiplied apart.
///
/// Writing `u = −c/(2√a)` the integral is `½√(π/a)·w(iu)`; when `Re u < 0`
/// the argument leaves the upper half-plane and `w(iu) = 2e^{u²} − w(−iu)` is
/// used instead.
pub fn gaussian_halfline_scaled(a: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    debug_assert!(a.re > 0.0);
    let s = a.sqrt();
    let u = -c / (2.0 * s);
    let pre = SQRT_PI / (2.0 * s);
    if u.re >= 0.0 {
        pre * d.exp() * faddeeva(I * u)
    } else {
        pre * (2.0 * (u * u + d).exp() - d.exp() * faddeeva(-I * u))
    }
}

/// Kernel selector for [`signed_kernel_overlap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapMode {
    /// `∫ sgn(y) e^{iκ|y|} ψ(y) dy`
    PlusAbs,
    /// `∫ e^{isκy} ψ(y) dy` with `s = ±1`
    Plane(f64),
}

/// Closed-form overlaps of a coherent state with the kernels that appear in the
/// generalized Fourier transform, each assembled from two half-line integrals.
pub fn signed_kernel_overlap(
    params: &ModelParams,
    state: &CoherentState,
    kappa: f64,
    mode: OverlapMode,
) -> Complex64 {
    let (a, b, d) = state.log_quadratic(params.hbar);
    match mode {
        OverlapMode::PlusAbs => {
            let ik = I * kappa.abs();
            gaussian_halfline_scaled(a, b + ik, d) - gaussian_halfline_scaled(a, -b + ik, d)
        }
        OverlapMode::Plane(s) => {
            let c = b + I * (s * kappa);
            gaussian_halfline_scaled(a, c, d) + gaussian_halfline_scaled(a, -c, d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coherent_eval, coherent_ft, free_evolve_state, PhasePoint};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    // w(z) at 30 digits (mpmath: exp(-z^2) erfc(-iz))
    const W_REF: &[(f64, f64, f64, f64)] = &[
        (0.0, 1.0, 0.427583576155807, 0.0),
        (1.0, 0.0, 0.36787944117144233, 0.6071577058413937),
        (1.0, 1.0, 0.3047442052569126, 0.20821893820283163),
        (3.0, 0.5, 0.03712636605469234, 0.19298375530036208),
        (5.0, 5.0, 0.056965439888176976, 0.055838742775391026),
        (7.9, 0.1, 0.0009264980286410243, 0.07199086697264587),
        (8.1, 0.1, 0.0008802238426884042, 0.07018534092764286),
        (20.0, 1.0, 0.001412234766392966, 0.028173995667521982),
        (100.0, 0.001, 5.64274233093359e-08, 0.005642177972029779),
        (1000.0, 10.0, 5.641340162351872e-06, 0.0005641334521567329),
        (0.0, 10000.0, 5.641895807268084e-05, 0.0),
        (0.01, 0.01, 0.9887176929549546, 0.011085296057477264),
        (-2.0, 1.0, 0.14023958136627795, -0.2222134401798991),
        (2.0, -1.0, -0.2053255806465875, 0.1468554850301674),
        (1e-10, 0.0, 1.0, 1.1283791670955126e-10),
        (6.0, 0.01, 0.00016375289889683183, 0.09539592338660148),
        (0.5, 7.5, 0.07425739508352458, 0.004866493325866901),
        (9.0, 9.0, 0.031439696818733986, 0.031246243795783175),
        (-7.0, 3.0, 0.029795821949883398, -0.06830654560357044),
        (3.0, -2.0, -0.08133907992862736, 0.12108616246299844),
        (0.3, -5.0, -130297907973.4029, 18573516351.409626),
        (1000.0, 0.0, 0.0, 0.0005641898656429712),
        (50.0, 0.5, 0.00011289438198354341, 0.011284920162609327),
        (4000.0, 100.0, 3.5239827380604522e-06, 0.0001409593007179632),
    ];

    #[test]
    fn faddeeva_reference_values() {
        assert_eq!(faddeeva(c(0.0, 0.0)), c(1.0, 0.0));
        for &(x, y, re, im) in W_REF {
            let got = faddeeva(c(x, y));
            let want = c(re, im);
            assert!(
                rel(got, want) < 1e-13,
                "w({x}+{y}i) = {got}, want {want}, rel {}",
                rel(got, want)
            );
        }
    }

    #[test]
    fn faddeeva_real_axis_real_part() {
        // Re w(x) = exp(-x^2) exactly on the real axis
        for i in 0..200 {
            let x = 0.037 * i as f64;
            let got = faddeeva(c(x, 0.0));
            assert!(
                (got.re - (-x * x).exp()).abs() < 1e-14 * got.norm(),
                "x={x}"
            );
        }
    }

    #[test]
    fn faddeeva_asymptotic_ratio() {
        // |w(x) − i/(√π x)| x³ stays bounded: the next term is i/(2√π x³)
        for &x in &[20.0, 50.0, 200.0, 1e3, 1e4] {
            let lead = c(0.0, FRAC_1_SQRT_PI / x);
            let r = (faddeeva(c(x, 0.0)) - lead).norm() * x.powi(3);
            assert!((r - 0.5 * FRAC_1_SQRT_PI).abs() < 0.01, "x={x}: {r}");
        }
    }

    #[test]
    fn faddeeva_saturates() {
        let v = faddeeva(c(0.0, -40.0));
        assert!(v.re.is_finite() && v.im.is_finite());
        assert_eq!(v.re, f64::MAX);
    }

    #[test]
    fn faddeeva_split_is_continuous() {
        for i in 0..=32 {
            let z = Complex64::from_polar(SPLIT_RADIUS, 0.5 * PI * i as f64 / 32.0);
            let inner = w_series(z);
            let outer = w_continued_fraction(z);
            assert!(rel(inner, outer) < 1e-13, "z = {z}: {inner} vs {outer}");
        }
    }

    #[test]
    fn schwarz_reflection() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let z = c(rng.gen_range(-30.0..30.0), rng.gen_range(-3.0..30.0));
            let a = faddeeva(-z.conj());
            let b = faddeeva(z).conj();
            assert!(rel(a, b) < 1e-13, "z={z}");
        }
    }

    // ∫₀^∞ exp(-a y² + c y) dy by mpmath adaptive quadrature
    const HL_REF: &[(f64, f64, f64, f64, f64, f64)] = &[
        (1.0, 0.0, 0.0, 0.0, 0.886226925452758, 0.0),
        (1.0, 0.0, 1.0, 0.0, 1.7302344337037001, 0.0),
        (1.0, 0.0, 0.0, 2.0, 0.3260246660866461, 0.5380795069127684),
        (2.0, 1.0, 3.0, -0.5, 1.1276668294074004, -2.02417578399041),
        (0.5, 0.0, -4.0, 0.0, 0.23665238291356067, 0.0),
        (1.0, 0.0, 30.0, 0.0, 9.22217511561774e+97, 0.0),
        (1.0, 0.0, -30.0, 0.0, 0.03325974768313765, 0.0),
        (0.01, 0.2, 0.3, 5.0, 21.108577134607003, -28.093695565352586),
        (
            3.0,
            0.0,
            -1.0,
            40.0,
            0.0006317610554844526,
            0.025078848527355046,
        ),
    ];

    #[test]
    fn halfline_reference_values() {
        for &(ar, ai, cr, ci, re, im) in HL_REF {
            let got = gaussian_halfline(c(ar, ai), c(cr, ci)).unwrap();
            let want = c(re, im);
            assert!(
                rel(got, want) < 1e-12,
                "a={ar}+{ai}i c={cr}+{ci}i: {got} vs {want}"
            );
        }
        assert!(gaussian_halfline(c(0.0, 1.0), c(1.0, 0.0)).is_err());
        assert!(gaussian_halfline(c(-1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn halfline_scaled_keeps_extremes_apart() {
        // e^{-1000} · ∫ exp(-y² + 2√1000 y): the product is O(1)
        let a = c(1.0, 0.0);
        let cc = c(2.0 * 1000f64.sqrt(), 0.0);
        let v = gaussian_halfline_scaled(a, cc, c(-1000.0, 0.0));
        assert!((v.re - SQRT_PI).abs() < 1e-10, "{v}");
    }

    proptest! {
        #[test]
        fn full_line_split(ar in 0.05f64..5.0, ai in -5.0f64..5.0, cr in -6.0f64..6.0, ci in -20.0f64..20.0) {
            let a = c(ar, ai);
            let cc = c(cr, ci);
            let lhs = gaussian_halfline(a, cc).unwrap() + gaussian_halfline(a, -cc).unwrap();
            let rhs = (PI / a).sqrt() * (cc * cc / (4.0 * a)).exp();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn overlap_plane_matches_fourier_transform() {
        let params = ModelParams::new(0.3, 1.0, 1.0, 1.2).unwrap();
        let s0 = CoherentState::initial(&params, PhasePoint::new(1.4, -0.8));
        let s = free_evolve_state(&params, &s0, 0.7);
        for &k in &[-4.0, -1.0, 0.2, 2.5] {
            for &sg in &[1.0, -1.0] {
                let v = signed_kernel_overlap(&params, &s, k, OverlapMode::Plane(sg));
                let want = (2.0 * PI).sqrt() * coherent_ft(&params, &s, -sg * k);
                assert!((v - want).norm() < 1e-12, "k={k} s={sg}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn overlap_plus_abs_parity_and_oracle() {
        let params = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let even = CoherentState::initial(&params, PhasePoint::new(0.0, 0.0));
        for &k in &[0.3, 1.0, 7.0] {
            assert!(signed_kernel_overlap(&params, &even, k, OverlapMode::PlusAbs).norm() < 1e-14);
        }
        let s = CoherentState::initial(&params, PhasePoint::new(2.0, 1.0));
        let v = signed_kernel_overlap(&params, &s, 1.3, OverlapMode::PlusAbs);
        assert!(
            (v - c(0.12820927395631582, 0.17991432813839245)).norm() < 1e-10,
            "{v}"
        );
        let g =
            CoherentState::new(c(1.0, 0.7), c(1.0, 0.0), PhasePoint::new(-1.5, 0.4), 0.0).unwrap();
        let v = signed_kernel_overlap(&params, &g, 1.3, OverlapMode::PlusAbs);
        assert!(
            (v - c(0.22713396163823837, -0.6922441520688778)).norm() < 1e-10,
            "{v}"
        );
    }

    #[test]
    fn overlap_plus_abs_decay() {
        let params = ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
        for &(q, p) in &[(0.3, 1.0), (1.0, -2.0), (-0.5, 0.5)] {
            let s = CoherentState::initial(&params, PhasePoint::new(q, p));
            let psi0 = coherent_eval(&params, &s, 0.0).norm();
            let mut k = 10.0;
            while k <= 1e3 {
                let v = signed_kernel_overlap(&params, &s, k, OverlapMode::PlusAbs);
                assert!(k * v.norm() <= 4.0 * psi0 + 1e-8, "q={q} p={p} k={k}");
                k *= 1.3;
            }
        }
    }
}
