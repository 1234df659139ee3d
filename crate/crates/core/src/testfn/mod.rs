//! Test functions, cylinder functions and their calculus.

mod coefficient;
mod cylinder;
mod hat;
mod outer;
mod profile;
mod transform;

pub use coefficient::MassCoefficient;
pub use cylinder::{pairing_hat, pairing_plain, require_integrable, AtomDerivatives, Cylinder, FormKind, HatCylinder, PlainCylinder};
pub use hat::{HatJet, HatTerm, HatTestFunction};
pub use outer::{Jet1, Jet2, OuterFunction, MAX_ARITY};
pub use profile::{BumpFunction, Profile, SpatialJet, SpatialTest, VectorField};
pub use transform::{
    directional_derivative_ext, directional_derivative_int, flow_pushforward, mass_scaling, richardson_derivative, tangent_pairing_ext,
    tangent_pairing_int, FD_STEP, FLOW_SUBSTEPS,
};

#[cfg(test)]
mod tests;
