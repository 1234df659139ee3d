// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besq;
pub mod error;
pub mod fixtures;
pub mod fock;
pub mod forms;
pub mod mc;
pub mod measure;
pub mod one_particle;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod suites;
pub mod testfn;
pub mod verdict;

pub use error::{Error, Result};
pub use measure::{Atom, GammaSampler, SpatialBox, WeightedConfiguration, Window};
pub use rng::RandomStream;
pub use verdict::{EstimateReport, IdentityVerdict};
