//! The singular classical flow and the classical wave and scattering operators
//! acting on a phase-space Gaussian.

use deltaprime::classical::{
    classical_scatter, classical_wave, classical_wave_reverse, flow_apply, ClassicalCoupling,
};
use deltaprime::{Complex64, PhasePoint, Sign};

fn main() {
    let m = 1.0;
    let coupling = ClassicalCoupling::Finite(-2.0);
    let center = PhasePoint::new(-2.0, 1.5);
    let f = |xi: PhasePoint| {
        Complex64::new(
            (-(xi.q - center.q).powi(2) - (xi.p - center.p).powi(2)).exp(),
            0.0,
        )
    };

    println!("(e^(-itL) f)(xi) with B(p) = -2 p^2");
    println!(
        "{:>6} {:>14} {:>14} {:>14}",
        "t", "at (q+pt, p)", "at (-q-pt, -p)", "sum of |.|^2"
    );
    for t in [0.0, 1.0, 2.0, 3.0] {
        let a = flow_apply(
            &coupling,
            m,
            &f,
            t,
            PhasePoint::new(center.q + center.p * t / m, center.p),
        );
        let b = flow_apply(
            &coupling,
            m,
            &f,
            t,
            PhasePoint::new(-center.q - center.p * t / m, -center.p),
        );
        println!(
            "{t:>6.2} {:>14.6e} {:>14.6e} {:>14.6e}",
            a.norm(),
            b.norm(),
            a.norm_sqr() + b.norm_sqr()
        );
    }

    let xi = PhasePoint::new(0.7, -1.2);
    for sign in [Sign::Plus, Sign::Minus] {
        let w = |z: PhasePoint| classical_wave(&coupling, m, sign, &f, z);
        let back = classical_wave_reverse(&coupling, m, sign, &w, xi);
        println!(
            "W{0}: (W{0} f)(xi) = {1:.6}, reverse after forward gives f back to {2:.1e}",
            sign.symbol(),
            w(xi),
            (back - f(xi)).norm()
        );
    }
    let wp = |z: PhasePoint| classical_wave(&coupling, m, Sign::Plus, &f, z);
    let lhs = classical_scatter(&coupling, m, &wp, xi);
    let rhs = classical_wave(&coupling, m, Sign::Minus, &f, xi);
    println!("S^cl W+ f - W- f at xi: {:.1e}", (lhs - rhs).norm());
    let total = ClassicalCoupling::Infinite;
    println!(
        "total reflection, (S^cl f)(q, p) = f(-q, -p): {:.1e}",
        (classical_scatter(&total, m, &f, xi) - f(-xi)).norm()
    );
}
