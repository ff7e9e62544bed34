//! Full `|G| x |G|` convolution matrices for small finite groups.

use nalgebra::DMatrix;

use crate::error::{usage, Result};
use crate::funcalg::{GroupFunction, C64};

/// Default group-order cap for dense paths.
pub const DEFAULT_DENSE_LIMIT: usize = 64;

/// `A[g][x] = f(g x^-1)`, rows and columns in BFS order of the whole group.
pub fn convolution_matrix(f: &GroupFunction, dense_limit: usize) -> Result<DMatrix<C64>> {
    let g = f.group();
    let n = match g.order() {
        Some(n) if n <= dense_limit => n,
        Some(n) => return usage(format!("group order {n} exceeds the dense limit {dense_limit}")),
        None => return usage(format!("{} is infinite; no dense matrix", g.descriptor())),
    };
    let elems = g.ball(n)?;
    let inv: Vec<_> = elems.iter().map(|x| g.inv(x)).collect();
    Ok(DMatrix::from_fn(n, n, |r, c| f.get(&g.mul(&elems[r], &inv[c]))))
}

/// Largest singular value of the convolution matrix, i.e. the exact
/// `B(l^2)` norm up to SVD rounding.
pub fn spectral_norm(f: &GroupFunction, dense_limit: usize) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    let a = convolution_matrix(f, dense_limit)?;
    Ok(a.singular_values().max())
}
