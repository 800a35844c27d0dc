//! The individual terms of the error bound across time, showing the blow-up
//! near the collision time.

use deltaprime::experiments::{bound_terms, collision_time, underline_h, BoundTerms, RegimeParams};
use deltaprime::{ModelParams, PhasePoint};

fn main() {
    let params = ModelParams::new(0.01, 1.0, 1.0, 1.0).unwrap();
    let xi = PhasePoint::new(-4.0, 2.0);
    let h = underline_h(&params, xi).unwrap();
    let eta = RegimeParams::default().eta(h);
    let tc = collision_time(xi, params.mass).unwrap();
    println!(
        "hbar {} underline_h {h:.4e} eta {eta:.4} t_coll {tc}",
        params.hbar
    );
    print!("{:>6}", "t");
    for name in BoundTerms::NAMES {
        print!(" {name:>13}");
    }
    println!(" {:>13}", "total");
    for i in 0..=16 {
        let t = i as f64 * tc / 4.0;
        let terms = bound_terms(&params, xi, t, eta).unwrap();
        print!("{t:>6.2}");
        for v in terms.values() {
            print!(" {v:>13.4e}");
        }
        println!(" {:>13.4e}", terms.dynamics());
    }
}
