//! One-particle operators and forms on `L²(X × (0, ∞), ϰ)` with
//! `ϰ(dx ds) = dx s⁻¹e⁻ˢds`.

mod function;
mod grid;
mod laguerre;
mod quadrature;

pub use function::{apply_generator_pointwise, MonomialFunction, OneParticleFunction};
pub use grid::{
    discretize_generator, heat_semigroup, refinement_csv, refinement_study, sample_on_grid, weighted_operator_norm, AssemblyInvariants,
    DiscreteOperator, LowerBoundary, RefinementRow, WeightedGrid, MARK_RANGE, SPECTRUM_TOLERANCE, SYMMETRY_TOLERANCE,
};
pub use laguerre::{laguerre_eigen_check, laguerre_minus_one};
pub use quadrature::{
    duality_check, form_quadrature, kappa_inner, kappa_integral, verify_linear_reduction, DUALITY_TOLERANCE, FORM_QUAD_DEGREE,
    FORM_QUAD_PANELS, FORM_QUAD_TOLERANCE,
};
