use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::funcalg::{GroupFunction, C64};
use crate::group::BallIndex;
use crate::par;

/// Field of operator entries: `f64` for real kernels, `C64` otherwise.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + Debug
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + 'static
{
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn from_c64(v: C64) -> Self;
    fn to_c64(self) -> C64;
    fn one() -> Self;
    /// `exp(i theta)`; only meaningful for complex scalars.
    fn phase(theta: f64) -> Self;
    fn random(rng: &mut ChaCha8Rng) -> Self;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_c64(v: C64) -> Self {
        v.re
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn one() -> Self {
        1.0
    }
    fn phase(_: f64) -> Self {
        panic!("complex phase requested for a real operator")
    }
    fn random(rng: &mut ChaCha8Rng) -> Self {
        rng.gen_range(-1.0..1.0)
    }
}

impl Scalar for C64 {
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm_sqr().sqrt()
    }
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_c64(v: C64) -> Self {
        v
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn phase(theta: f64) -> Self {
        C64::from_polar(1.0, theta)
    }
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let r: f64 = rng.gen();
        C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    }
}

/// Per-entry weight applied on top of `f(g h^-1)` at row `g`, column `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum WeightMode {
    Plain,
    /// `(l(g) - l(h))^k`
    Derivation { k: u32 },
    /// `exp(i t (l(g) - l(h)))`
    Flow { t: f64 },
}

/// Left convolution by `f` restricted to vectors supported in `B_R`, with
/// the exact image on `B_{R+m}` (m = support radius of f). Rows and columns
/// are ball indices, so both are BFS prefixes.
pub struct TruncatedOperator<T> {
    radius: usize,
    ball: Arc<BallIndex>,
    ncols: usize,
    nrows: usize,
    vals: Vec<T>,
    mode: WeightMode,
    /// Column j holds entries `j*s .. (j+1)*s` as (row, term).
    col_ent: Vec<(u32, u32)>,
    row_ptr: Vec<usize>,
    row_ent: Vec<(u32, u32)>,
}

impl<T: Scalar> TruncatedOperator<T> {
    pub fn new(f: &GroupFunction, radius: usize, mode: WeightMode) -> Result<Self> {
        let group = f.group();
        let m = f.support_radius() as usize;
        let ball = group.ball_index(radius + m)?;
        let ncols = ball.ball_len(radius);
        let nrows = ball.ball_len(radius + m);
        if nrows > u32::MAX as usize - 1 {
            return usage("truncated operator too large for 32-bit indices");
        }
        let mut vals = Vec::with_capacity(f.support_len());
        let mut words = Vec::with_capacity(f.support_len());
        for (h, v) in f.entries() {
            let i = ball.index_of(h).expect("support lies in the ball");
            vals.push(T::from_c64(*v));
            words.push(ball.word_of(i));
        }
        let s = vals.len();
        let mut col_ent = vec![(0u32, 0u32); ncols * s];
        par::fill_chunks(&mut col_ent, |off, chunk| {
            for (e, slot) in chunk.iter_mut().enumerate() {
                let (j, t) = ((off + e) / s, (off + e) % s);
                let k = ball.translate(&words[t], j).expect("image stays in B_{R+m}");
                *slot = (k as u32, t as u32);
            }
        });
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(k, _) in &col_ent {
            row_ptr[k as usize + 1] += 1;
        }
        for k in 0..nrows {
            row_ptr[k + 1] += row_ptr[k];
        }
        let mut fill = row_ptr.clone();
        let mut row_ent = vec![(0u32, 0u32); col_ent.len()];
        for (e, &(k, t)) in col_ent.iter().enumerate() {
            let j = (e / s.max(1)) as u32;
            row_ent[fill[k as usize]] = (j, t);
            fill[k as usize] += 1;
        }
        Ok(TruncatedOperator { radius, ball, ncols, nrows, vals, mode, col_ent, row_ptr, row_ent })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.col_ent.len()
    }

    pub fn ball(&self) -> &Arc<BallIndex> {
        &self.ball
    }

    #[inline]
    fn weight(&self, row: usize, col: usize) -> T {
        match self.mode {
            WeightMode::Plain => T::one(),
            WeightMode::Derivation { k } => {
                let d = self.ball.length(row) as f64 - self.ball.length(col) as f64;
                T::one().scale(d.powi(k as i32))
            }
            WeightMode::Flow { t } => {
                let d = self.ball.length(row) as f64 - self.ball.length(col) as f64;
                T::phase(t * d)
            }
        }
    }

    /// Matrix entry at (row, col) as stored, i.e. `f(g h^-1) * weight`.
    pub fn entries_of_column(&self, col: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let s = self.vals.len();
        self.col_ent[col * s..(col + 1) * s]
            .iter()
            .map(move |&(k, t)| (k as usize, self.vals[t as usize] * self.weight(k as usize, col)))
    }

    /// `y = A x`; `x` has `ncols` entries, `y` has `nrows`.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let plain = matches!(self.mode, WeightMode::Plain);
        par::fill_chunks(y, |off, chunk| {
            for (i, out) in chunk.iter_mut().enumerate() {
                let k = off + i;
                let mut acc = T::default();
                for &(j, t) in &self.row_ent[self.row_ptr[k]..self.row_ptr[k + 1]] {
                    let v = self.vals[t as usize];
                    let v = if plain { v } else { v * self.weight(k, j as usize) };
                    acc += v * x[j as usize];
                }
                *out = acc;
            }
        });
    }

    /// `z = A^H y`.
    pub fn apply_adjoint(&self, y: &[T], z: &mut [T]) {
        assert_eq!(y.len(), self.nrows);
        assert_eq!(z.len(), self.ncols);
        let s = self.vals.len();
        let plain = matches!(self.mode, WeightMode::Plain);
        par::fill_chunks(z, |off, chunk| {
            for (i, out) in chunk.iter_mut().enumerate() {
                let j = off + i;
                let mut acc = T::default();
                for &(k, t) in &self.col_ent[j * s..(j + 1) * s] {
                    let v = self.vals[t as usize];
                    let v = if plain { v } else { v * self.weight(k as usize, j) };
                    acc += v.conj() * y[k as usize];
                }
                *out = acc;
            }
        });
    }
}
