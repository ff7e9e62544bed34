//! Numerical checks of the norm inequalities: duality, subgroup and tensor
//! behaviour, the involution gap and its amplification, (RD)_q scans and
//! transfer, the interpolation inequality, the Følner identity and the
//! growth alternative.
//!
//! Every inequality `A <= c B` is asserted only as `lower(A) <= c upper(B)`;
//! comparisons of best estimates are informational and can only warn.

mod duality;
mod gap;
mod interp;
mod rd;

pub use duality::{duality_check, subgroup_check, tensor_check};
pub use gap::{amplify_check, certified_gap, best_gap, gap_witness, oberlin_search, GapWitness, OberlinBudget};
pub use interp::{folner_identity_check, interpolation_check, InterpolationParams};
pub use rd::{
    growth_alternative_check, mazur_chain, rd_scan, rd_transfer_check, Family, MazurChain, RdFit, TransferOptions,
};

/// Default relative tolerance for best-estimate comparisons on infinite groups.
pub const INFINITE_TOL: f64 = 0.05;
/// Default relative tolerance for dense finite-group comparisons.
pub const DENSE_TOL: f64 = 1e-6;

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
