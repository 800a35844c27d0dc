//! Wave and scattering operators on a coherent state, with the reflection
//! coefficients that drive them.

use deltaprime::classical::{semiclassical_scatter, semiclassical_waveop};
use deltaprime::grid::l2_distance;
use deltaprime::quantum::{reflection_coeff, scattering_apply, wave_op_apply};
use deltaprime::{CoherentState, GridSpec, ModelParams, PhasePoint, Sign};

fn main() {
    let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
    println!("eps = {:.4e}", params.epsilon());
    for k in [0.01, 0.1, 1.0, 10.0] {
        let r = reflection_coeff(&params, Sign::Plus, k).unwrap();
        println!(
            "  R+({k:>5}) = {:+.6} {:+.6}i  |R+| = {:.6}",
            r.re,
            r.im,
            r.norm()
        );
    }

    let grid = GridSpec::symmetric(20.0, 8192).unwrap();
    for xi in [PhasePoint::new(-4.0, 2.0), PhasePoint::new(4.0, 2.0)] {
        let state = CoherentState::initial(&params, xi);
        println!("xi = ({}, {})", xi.q, xi.p);
        for sign in [Sign::Plus, Sign::Minus] {
            let exact = wave_op_apply(&params, sign, &state, &grid).unwrap();
            let semi = semiclassical_waveop(&params, sign, &state, &grid).unwrap();
            println!(
                "  Omega{} psi: norm {:.10}, distance to semiclassical {:.3e}",
                sign.symbol(),
                exact.norm(),
                l2_distance(&exact, &semi).unwrap()
            );
        }
        let s = scattering_apply(&params, &state, &grid).unwrap();
        let semi = semiclassical_scatter(&params, &state, &grid).unwrap();
        println!(
            "  S psi: norm {:.10}, distance to semiclassical {:.3e}",
            s.norm(),
            l2_distance(&s, &semi).unwrap()
        );
    }
}
