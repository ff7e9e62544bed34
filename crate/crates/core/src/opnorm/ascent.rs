//! p-norm power iteration `x <- dual_q(A^H dual_p(A x))`.
//!
//! For a nonnegative kernel started from a positive vector this is Boyd's
//! method and converges to the global maximum of `||Ax||_p / ||x||_p`; for
//! signed or complex kernels it is a monotone-in-practice local ascent, used
//! from many starts. Every iterate's value is an exact lower bound.

use super::operator::{Scalar, TruncatedOperator};
use crate::par;

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub window: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { max_iter: 10_000, tol: 1e-8, window: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult<T> {
    pub value: f64,
    /// Best iterate, normalized in l^p.
    pub x: Vec<T>,
    pub iterations: usize,
    /// Relative change of the objective over the last window.
    pub residual: f64,
    pub converged: bool,
}

/// Largest modulus. Deterministic under any chunking.
pub(crate) fn max_modulus<T: Scalar>(v: &[T]) -> f64 {
    par::reduce_chunks(v.len(), 0.0, |r| v[r].iter().fold(0.0, |m, x| f64::max(m, x.modulus())), f64::max)
}

/// `||v||_p` with overflow-safe scaling.
pub fn lp_norm<T: Scalar>(v: &[T], p: f64) -> f64 {
    let m = max_modulus(v);
    if m == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return m;
    }
    let inv = 1.0 / m;
    let pw = Pow::new(p / 2.0);
    let s = if p == 2.0 {
        par::reduce_chunks(v.len(), 0.0, |r| v[r].iter().map(|x| x.scale(inv).modulus_sq()).sum::<f64>(), |a, b| a + b)
    } else {
        par::reduce_chunks(
            v.len(),
            0.0,
            |r| v[r].iter().map(|x| pw.of(x.scale(inv).modulus_sq())).sum::<f64>(),
            |a, b| a + b,
        )
    };
    m * s.powf(1.0 / p)
}

/// `a^e` for `a > 0`, through square roots when `4e` is a small integer.
#[derive(Debug, Clone, Copy)]
struct Pow {
    e: f64,
    quarters: Option<i32>,
}

impl Pow {
    fn new(e: f64) -> Self {
        let k = 4.0 * e;
        let quarters = (k.fract() == 0.0 && k.abs() <= 16.0).then_some(k as i32);
        Pow { e, quarters }
    }

    #[inline]
    fn of(self, a: f64) -> f64 {
        match self.quarters {
            Some(k) if k % 4 == 0 => a.powi(k / 4),
            Some(k) if k % 2 == 0 => a.sqrt().powi(k / 2),
            Some(k) => a.sqrt().sqrt().powi(k),
            None => a.powf(self.e),
        }
    }
}

/// Replace `v` by `u |u|^{r-2}` with `u = v / max|v|` and return
/// `(max|v|, sum |u|^r)`; `None` for the zero vector.
fn dual_sum<T: Scalar>(v: &mut [T], r: f64) -> Option<(f64, f64)> {
    let m = max_modulus(v);
    if m == 0.0 {
        return None;
    }
    let inv = 1.0 / m;
    let pw = Pow::new((r - 2.0) / 2.0);
    let s = par::fill_reduce_chunks(
        v,
        0.0,
        |_, chunk| {
            let mut s = 0.0;
            for x in chunk.iter_mut() {
                let y = x.scale(inv);
                let a = y.modulus_sq();
                if a == 0.0 {
                    *x = T::default();
                    continue;
                }
                let d = pw.of(a);
                s += a * d;
                *x = y.scale(d);
            }
            s
        },
        |a, b| a + b,
    );
    Some((m, s))
}

fn normalize<T: Scalar>(v: &mut [T], p: f64) -> f64 {
    let n = lp_norm(v, p);
    if n > 0.0 {
        scale_all(v, 1.0 / n);
    }
    n
}

fn scale_all<T: Scalar>(v: &mut [T], s: f64) {
    par::fill_chunks(v, |_, chunk| chunk.iter_mut().for_each(|x| *x = x.scale(s)));
}

/// Run the iteration from `x0` (any nonzero vector on the columns).
pub fn ascend<T: Scalar>(op: &TruncatedOperator<T>, p: f64, x0: Vec<T>, opts: &AscentOptions) -> AscentResult<T> {
    assert!(p > 1.0 && p.is_finite(), "ascent needs 1 < p < inf");
    let q = p / (p - 1.0);
    let mut x = x0;
    let mut y = vec![T::default(); op.nrows()];
    let mut best = AscentResult { value: 0.0, x: x.clone(), iterations: 0, residual: f64::INFINITY, converged: false };
    if normalize(&mut x, p) == 0.0 {
        best.converged = true;
        best.residual = 0.0;
        return best;
    }
    let mut history: Vec<f64> = Vec::new();
    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        // y now holds the dual image of A x; the value is ||A x||_p.
        let value = dual_sum(&mut y, p).map_or(0.0, |(m, s)| m * s.powf(1.0 / p));
        history.push(value);
        if value > best.value {
            best.value = value;
            best.x.clone_from(&x);
        }
        best.iterations = it;
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            best.residual = (value - old).abs() / value.max(f64::MIN_POSITIVE);
            if best.residual < opts.tol {
                best.converged = true;
                break;
            }
        }
        if value == 0.0 {
            best.residual = 0.0;
            best.converged = true;
            break;
        }
        op.apply_adjoint(&y, &mut x);
        // |u|^{q-1} raised to p is |u|^q, so the sum is ||x||_p^p.
        match dual_sum(&mut x, q) {
            Some((_, s)) if s > 0.0 => scale_all(&mut x, s.powf(-1.0 / p)),
            _ => {
                best.converged = true;
                break;
            }
        }
    }
    best
}
