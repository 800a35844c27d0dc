//! The Faddeeva function and the half-line Gaussian integral it feeds.

use deltaprime::specfun::{faddeeva, gaussian_halfline};
use deltaprime::Complex64;

fn main() {
    println!("w(z) = exp(-z^2) erfc(-iz)");
    for (re, im) in [
        (0.0, 0.0),
        (1.0, 1.0),
        (-3.5, 0.2),
        (10.0, -0.5),
        (0.0, 30.0),
    ] {
        let z = Complex64::new(re, im);
        let w = faddeeva(z);
        println!("  w({z:>12}) = {:+.15e} {:+.15e}i", w.re, w.im);
    }

    let a = Complex64::new(0.5, 2.0);
    let c = Complex64::new(-1.0, 3.0);
    let closed = gaussian_halfline(a, c).unwrap();
    let (n, y_max) = (400_000, 20.0);
    let dy = y_max / n as f64;
    let trapezoid: Complex64 = (0..=n)
        .map(|i| {
            let y = i as f64 * dy;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * dy * (-a * y * y + c * y).exp()
        })
        .sum();
    println!("int_0^inf exp(-a y^2 + c y) dy, a = {a}, c = {c}");
    println!("  closed form {closed:.12}");
    println!("  trapezoid   {trapezoid:.12}");
}
