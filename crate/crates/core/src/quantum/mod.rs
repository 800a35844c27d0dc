//! Quantum dynamics of `H_β = −(ħ²/2m)Δ` with a δ′ interaction at the origin.

mod propagator;
mod spectral;
mod terms;
mod waveop;

pub use propagator::{
    decompose, error_term_e1, error_term_e2, error_term_ebeta, error_terms_on_grid, evolve_exact,
    evolve_exact_with, evolve_spectral, f_pm_t, transform_norm_sqr, Decomposition, Diagnostics,
};
pub use spectral::{
    bound_eigenvalue, bound_overlap, bound_state, bound_weight, eigenfunction_eval,
    gen_transform_plus, reflection_coeff, SpectralData,
};
pub use terms::{E1Term, E2Term, E3Term, FTerm};
pub use waveop::{
    error_term_e3, error_term_e3_on_grid, scattering_apply, scattering_apply_with, wave_op_apply,
    wave_op_apply_with, wave_op_correction, wave_op_split, ScatterDiagnostics, WaveOpSplit,
    WaveOperator,
};

pub(crate) use spectral::refl;
