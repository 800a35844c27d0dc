//! Errors over a geometric hbar grid with a log-log slope fit, for every
//! error kind.

use deltaprime::experiments::{
    admissible_times, bound_violations, default_hbar_grid, default_times, fit_constant, fit_slope,
    run_sweep, ErrorKind, RegimeParams,
};
use deltaprime::{ModelParams, PhasePoint};

fn main() {
    let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
    let xi = PhasePoint::new(-4.0, 2.0);
    let regime = RegimeParams::default();
    let hbars = default_hbar_grid();
    let times = admissible_times(
        &params,
        xi,
        &regime,
        &hbars,
        &default_times(xi, params.mass).unwrap(),
    )
    .unwrap();
    println!("hbar grid {hbars:.4?}, admissible times {times:?}");
    for kind in ErrorKind::ALL {
        let records = run_sweep(&params, xi, &regime, &hbars, &times, kind).unwrap();
        let fit = fit_slope(&records).unwrap();
        let c = fit_constant(&records).unwrap();
        println!(
            "{:>9}: slope {:.3} r2 {:.6} C {:.3e} violations {}",
            kind.name(),
            fit.slope,
            fit.r2,
            c,
            bound_violations(&records, c).len()
        );
        for r in &records {
            println!(
                "    hbar {:.5} h {:.4e} t {:>4} error {:.4e} bound {:.4e}",
                r.hbar, r.underline_h, r.t, r.error_l2, r.bound_rhs
            );
        }
    }
}
