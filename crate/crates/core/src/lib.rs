//! Wigner distributions and torus resonances for the free Schrodinger flow
//! on flat tori `T^d = R^d / 2 pi Z^d`, computed exactly at finite scale `h`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod numerics;
pub mod resonance_lattice;
pub mod resonant;
pub mod symbols;
pub mod torus_state;
pub mod wigner;

pub use error::{Error, Result};
pub use resonance_lattice::{
    bezout_witness, decompose, directions_of_modes, enumerate_directions, group_by_lines,
    primitive_direction, same_coset, LatticePoint, LineDecomposition, PrimitiveDirection,
};
pub use resonant::{
    build_resonant, domination_gap, evolve_resonant, hs_norm_sq_window, k_a_phi_window,
    lemma_main_residual, main_formula_pair, operator_window, remainder_term, resonant_term,
    rho_fourier_coefficient, trace_density_eval, trace_norm_bound_gap, trace_pair,
    vanishing_criterion, OperatorWindowMatrix, ResonantAtom, ResonantMeasure,
};
pub use symbols::{CoefficientFn, Symbol, TimeWindow};
pub use torus_state::{
    evolve, near_hyperplane_mass, norm_sq, position_density_pair, resonant_plane_wave, wave_packet,
    FourierState, ModeMap, StateFamily,
};
pub use wigner::{
    classical_limit_gap, liouville_invariance_gap, momentum_marginal_pair, time_averaged_pair,
    wigner_pair, PairingResult,
};
