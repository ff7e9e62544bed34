//! Certified brackets on ℓ^p convolution operator norms over finitely
//! generated discrete groups, and numerical checks of the inequalities built
//! on them.

pub mod error;
pub mod funcalg;
pub mod group;
pub(crate) mod numfmt;
pub mod opnorm;
pub mod par;
pub mod rdlab;
pub mod report;
pub mod seed;
pub mod sobolev;

pub use error::{LabError, Result};
pub use funcalg::{ExponentPair, GroupFunction, C64};
pub use group::{Element, Group, GroupSpec};
