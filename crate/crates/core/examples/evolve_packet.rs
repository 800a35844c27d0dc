//! Exact evolution of a coherent state against its semiclassical approximant.

use deltaprime::classical::semiclassical_dynamics;
use deltaprime::experiments::{collision_time, error_grid};
use deltaprime::grid::l2_distance;
use deltaprime::quantum::evolve_exact;
use deltaprime::{CoherentState, ModelParams, PhasePoint};

fn main() {
    let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
    let xi = PhasePoint::new(-4.0, 2.0);
    let state = CoherentState::initial(&params, xi);
    println!(
        "hbar = {}, beta = {}, xi = ({}, {}), t_coll = {}",
        params.hbar,
        params.beta,
        xi.q,
        xi.p,
        collision_time(xi, params.mass).unwrap()
    );
    println!(
        "{:>6} {:>8} {:>14} {:>14} {:>14}",
        "t", "nodes", "norm", "P(x > 0)", "L2 diff"
    );
    for t in [0.5, 1.0, 2.0, 3.0, 4.0, 8.0] {
        let grid = error_grid(&params, xi, t);
        let exact = evolve_exact(&params, &state, t, &grid).unwrap();
        let semi = semiclassical_dynamics(&params, &state, t, &grid).unwrap();
        let dx = grid.spacing();
        let right: f64 = exact
            .nodes()
            .iter()
            .zip(&exact.values)
            .filter(|(x, _)| **x > 0.0)
            .map(|(_, v)| v.norm_sqr() * dx)
            .sum();
        println!(
            "{t:>6.2} {:>8} {:>14.10} {:>14.6e} {:>14.6e}",
            grid.n,
            exact.norm(),
            right,
            l2_distance(&exact, &semi).unwrap()
        );
    }
}
