//! The convolution algebra of finitely supported functions on a group.
//!
//! Convention: `(f1 * f2)(g) = sum_h f1(h) f2(h^-1 g)`, so `delta_a * delta_b
//! = delta_ab` and the operator "convolution by f" is `x -> f * x`.

mod exponent;
mod random;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use exponent::{conjugate, parse_exponent, ExponentPair};
pub use random::{random_function, RandomMode};

use crate::error::{usage, LabError, Result};
use crate::group::{Element, Group, SubgroupEmbedding};
use crate::par;

pub type C64 = Complex64;

/// Stable sort by element, then sum runs of equal keys in input order.
fn merge_sorted(mut v: Vec<(Element, C64)>) -> Vec<(Element, C64)> {
    v.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out: Vec<(Element, C64)> = Vec::with_capacity(v.len());
    for (k, c) in v {
        match out.last_mut() {
            Some((last, acc)) if *last == k => *acc += c,
            _ => out.push((k, c)),
        }
    }
    out
}

/// Entries with modulus below this are dropped.
pub const PRUNE: f64 = 1e-30;

#[derive(Clone, PartialEq)]
pub struct GroupFunction {
    group: Group,
    entries: BTreeMap<Element, C64>,
    support_radius: u32,
}

impl fmt::Debug for GroupFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (g, v) in &self.entries {
            m.entry(&self.group.element_to_string(g), v);
        }
        m.finish()
    }
}

impl GroupFunction {
    pub fn zero(group: &Group) -> Self {
        GroupFunction { group: group.clone(), entries: BTreeMap::new(), support_radius: 0 }
    }

    /// Build from `(element, value)` pairs; repeated elements are summed.
    pub fn from_entries<I>(group: &Group, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Element, C64)>,
    {
        let mut map = BTreeMap::new();
        for (g, v) in entries {
            if !group.contains(&g) {
                return usage(format!("{g:?} is not an element of {}", group.descriptor()));
            }
            *map.entry(g).or_insert(C64::new(0.0, 0.0)) += v;
        }
        Ok(Self::from_map(group, map))
    }

    fn from_map(group: &Group, mut entries: BTreeMap<Element, C64>) -> Self {
        entries.retain(|_, v| v.norm() >= PRUNE);
        let support_radius = entries.keys().map(|g| group.length(g)).max().unwrap_or(0);
        GroupFunction { group: group.clone(), entries, support_radius }
    }

    pub fn delta(group: &Group, g: &Element) -> Result<Self> {
        Self::from_entries(group, [(g.clone(), C64::new(1.0, 0.0))])
    }

    pub fn identity(group: &Group) -> Self {
        Self::from_map(group, BTreeMap::from([(group.identity().clone(), C64::new(1.0, 0.0))]))
    }

    /// Characteristic function of a finite set (duplicates count once).
    pub fn indicator<'a, I>(group: &Group, set: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Element>,
    {
        let mut map = BTreeMap::new();
        for g in set {
            if !group.contains(g) {
                return usage(format!("{g:?} is not an element of {}", group.descriptor()));
            }
            map.insert(g.clone(), C64::new(1.0, 0.0));
        }
        Ok(Self::from_map(group, map))
    }

    pub fn ball_indicator(group: &Group, n: usize) -> Result<Self> {
        Self::indicator(group, &group.ball(n)?)
    }

    pub fn sphere_indicator(group: &Group, n: usize) -> Result<Self> {
        Self::indicator(group, &group.sphere(n)?)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Element, &C64)> {
        self.entries.iter()
    }

    pub fn get(&self, g: &Element) -> C64 {
        self.entries.get(g).copied().unwrap_or_default()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// `max l(g)` over the support, 0 for the zero function.
    pub fn support_radius(&self) -> u32 {
        self.support_radius
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_nonneg_real(&self) -> bool {
        self.entries.values().all(|v| v.im == 0.0 && v.re >= 0.0)
    }

    pub fn is_real(&self) -> bool {
        self.entries.values().all(|v| v.im == 0.0)
    }

    fn same_group(&self, other: &GroupFunction) -> Result<()> {
        if self.group != other.group {
            return usage(format!(
                "operands live on different groups ({} vs {})",
                self.group.descriptor(),
                other.group.descriptor()
            ));
        }
        Ok(())
    }

    pub fn convolve(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.same_group(other)?;
        Ok(self.convolve_unchecked(other))
    }

    pub(crate) fn convolve_unchecked(&self, other: &GroupFunction) -> GroupFunction {
        const BLOCK: usize = 256;
        let left: Vec<(&Element, &C64)> = self.entries.iter().collect();
        let right: Vec<(&Element, &C64)> = other.entries.iter().collect();
        let g = &self.group;
        let blocks = left.len().div_ceil(BLOCK);
        let partials = par::map_indexed(blocks, |b| {
            let rows = &left[b * BLOCK..((b + 1) * BLOCK).min(left.len())];
            let mut v: Vec<(Element, C64)> = Vec::with_capacity(rows.len() * right.len());
            for &(h, a) in rows {
                for &(k, c) in &right {
                    v.push((g.mul(h, k), a * c));
                }
            }
            merge_sorted(v)
        });
        let all: Vec<(Element, C64)> = partials.into_iter().flatten().collect();
        let map: BTreeMap<Element, C64> = merge_sorted(all).into_iter().collect();
        Self::from_map(g, map)
    }

    /// `f*(g) = conj(f(g^-1))`.
    pub fn involution(&self) -> GroupFunction {
        let map = self
            .entries
            .iter()
            .map(|(g, v)| (self.group.inv(g), v.conj()))
            .collect();
        GroupFunction { group: self.group.clone(), entries: map, support_radius: self.support_radius }
    }

    /// `f1 (x) f2` on `target = H1 x H2`.
    pub fn tensor(f1: &GroupFunction, f2: &GroupFunction, target: &Group) -> Result<GroupFunction> {
        let fs = target.factors().unwrap_or(&[]);
        if fs.len() != 2 || fs[0] != f1.group || fs[1] != f2.group {
            return usage(format!(
                "tensor target {} is not {} x {}",
                target.descriptor(),
                f1.group.descriptor(),
                f2.group.descriptor()
            ));
        }
        let mut map = BTreeMap::new();
        for (g, a) in &f1.entries {
            for (h, b) in &f2.entries {
                map.insert(crate::group::pack(&[g.clone(), h.clone()]), a * b);
            }
        }
        Ok(Self::from_map(target, map))
    }

    /// n-fold tensor power on `target = G0^n`; the exponent is read off the
    /// target's factor count (a non-product target means n = 1).
    pub fn tensor_power(&self, target: &Group) -> Result<GroupFunction> {
        let n = match target.factors() {
            Some(fs) if fs.iter().all(|f| f == &self.group) => fs.len(),
            None if target == &self.group => return Ok(self.clone()),
            _ => return usage(format!("{} is not a power of {}", target.descriptor(), self.group.descriptor())),
        };
        let mut acc: Vec<(Vec<Element>, C64)> = vec![(Vec::new(), C64::new(1.0, 0.0))];
        for _ in 0..n {
            let mut next = Vec::with_capacity(acc.len() * self.entries.len());
            for (parts, a) in &acc {
                for (g, b) in &self.entries {
                    let mut p = parts.clone();
                    p.push(g.clone());
                    next.push((p, a * b));
                }
            }
            acc = next;
        }
        let map = acc.into_iter().map(|(p, v)| (target.pack(&p).expect("factor elements"), v)).collect();
        Ok(Self::from_map(target, map))
    }

    /// Image under a subgroup embedding.
    pub fn pushforward(&self, emb: &SubgroupEmbedding) -> Result<GroupFunction> {
        if &self.group != emb.source() {
            return usage("function does not live on the embedding's source group");
        }
        let map = self.entries.iter().map(|(g, v)| (emb.embed_unchecked(g), *v)).collect();
        Ok(Self::from_map(emb.target(), map))
    }

    /// Moduli sorted ascending. Summing in this order makes norms of `f`
    /// and `f*` bitwise equal.
    fn sorted_moduli(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.entries.values().map(|v| v.norm()).collect();
        m.sort_by(f64::total_cmp);
        m
    }

    pub fn l1(&self) -> f64 {
        self.sorted_moduli().iter().sum()
    }

    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "lq_norm needs q >= 1, got {q}");
        let m = self.sorted_moduli();
        let Some(&max) = m.last() else { return 0.0 };
        if q.is_infinite() {
            max
        } else if q == 1.0 {
            m.iter().sum()
        } else {
            max * m.iter().map(|x| (x / max).powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }

    fn map_values(&self, f: impl Fn(&Element, C64) -> C64) -> GroupFunction {
        let map = self.entries.iter().map(|(g, v)| (g.clone(), f(g, *v))).collect();
        Self::from_map(&self.group, map)
    }

    /// Pointwise `(1 + l(g))^t f(g)`.
    pub fn weight_t(&self, t: f64) -> GroupFunction {
        self.map_values(|g, v| v * (1.0 + self.group.length(g) as f64).powf(t))
    }

    /// Pointwise `l(g)^k f(g)`; for k >= 1 entries at the identity vanish.
    pub fn weight_k(&self, k: u32) -> GroupFunction {
        self.map_values(|g, v| v * (self.group.length(g) as f64).powi(k as i32))
    }

    /// `|f(g)|^alpha`.
    pub fn mazur_power(&self, alpha: f64) -> GroupFunction {
        self.map_values(|_, v| C64::new(v.norm().powf(alpha), 0.0))
    }

    pub fn abs(&self) -> GroupFunction {
        self.map_values(|_, v| C64::new(v.norm(), 0.0))
    }

    pub fn scale(&self, c: C64) -> GroupFunction {
        self.map_values(|_, v| v * c)
    }

    pub fn add(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &GroupFunction, c: C64) -> Result<GroupFunction> {
        self.same_group(other)?;
        let mut map = self.entries.clone();
        for (g, v) in &other.entries {
            *map.entry(g.clone()).or_default() += c * v;
        }
        Ok(Self::from_map(&self.group, map))
    }

    /// `delta_g * f`, i.e. `x -> f(g^-1 x)`.
    pub fn translate_left(&self, g: &Element) -> Result<GroupFunction> {
        if !self.group.contains(g) {
            return usage(format!("{g:?} is not an element of {}", self.group.descriptor()));
        }
        let map = self.entries.iter().map(|(h, v)| (self.group.mul(g, h), *v)).collect();
        Ok(Self::from_map(&self.group, map))
    }

    /// `f^{*n}` for n >= 1.
    pub fn power(&self, n: u32) -> Result<GroupFunction> {
        if n == 0 {
            return Ok(Self::identity(&self.group));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.convolve_unchecked(self);
        }
        Ok(acc)
    }

    /// Pruned mass: entries with modulus below `threshold` are dropped and
    /// their total modulus returned.
    pub fn prune_below(&mut self, threshold: f64) -> f64 {
        let mut dropped = 0.0;
        self.entries.retain(|_, v| {
            let keep = v.norm() >= threshold;
            if !keep {
                dropped += v.norm();
            }
            keep
        });
        self.support_radius = self.entries.keys().map(|g| self.group.length(g)).max().unwrap_or(0);
        dropped
    }

    pub fn to_record(&self) -> FunctionRecord {
        FunctionRecord {
            group: self.group.descriptor().to_string(),
            entries: self
                .entries
                .iter()
                .map(|(g, v)| (self.group.element_to_string(g), v.re, v.im))
                .collect(),
        }
    }

    pub fn from_record(group: &Group, rec: &FunctionRecord) -> Result<GroupFunction> {
        if rec.group != group.descriptor() {
            return Err(LabError::Parse(format!(
                "record is for {} but the target group is {}",
                rec.group,
                group.descriptor()
            )));
        }
        let entries = rec
            .entries
            .iter()
            .map(|(s, re, im)| Ok((group.parse_element(s)?, C64::new(*re, *im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(group, entries)
    }
}

/// JSON form: the group descriptor and `(element, re, im)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub group: String,
    pub entries: Vec<(String, f64, f64)>,
}
