//! Finitely generated discrete groups with canonical element forms, word
//! length, and breadth-first ball enumeration.

mod ball;
mod embed;
mod finite;
mod spec;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

pub use ball::BallIndex;
pub use embed::{EmbeddingKind, SubgroupEmbedding};
pub use finite::FiniteGroup;
pub use spec::GroupSpec;

use crate::error::{usage, LabError, Result};

/// Lower floor for the fitted exponential growth rate.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Canonical form of a group element. The interpretation is fixed by the
/// owning group: a reduced word (letters `±1..=±k`) in a free group, a
/// coordinate vector in `Z^d` and the Heisenberg group, a table index in a
/// finite group, and length-prefixed factor forms in a direct product.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Element(Form);

/// Inline capacity covers words up to length 14 without allocating.
pub(crate) type Form = SmallVec<[i32; 14]>;

impl Element {
    pub fn from_form(form: &[i32]) -> Self {
        Element(SmallVec::from_slice(form))
    }

    pub fn form(&self) -> &[i32] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BallLimits {
    pub max_radius: Option<usize>,
    pub max_elements: usize,
}

impl Default for BallLimits {
    fn default() -> Self {
        BallLimits { max_radius: None, max_elements: 20_000_000 }
    }
}

#[derive(Debug)]
enum Kind {
    Free { rank: usize },
    FreeAbelian { dim: usize },
    Heisenberg,
    Finite(FiniteGroup),
    Product(Vec<Group>),
}

/// Word-length memo grown breadth-first on demand (Heisenberg group).
#[derive(Debug, Default)]
struct LengthMemo {
    dist: HashMap<Element, u32>,
    frontier: Vec<Element>,
    radius: u32,
}

struct Inner {
    spec: GroupSpec,
    descriptor: String,
    kind: Kind,
    generators: Vec<Element>,
    identity: Element,
    limits: BallLimits,
    balls: Mutex<Option<Arc<BallIndex>>>,
    memo: Mutex<LengthMemo>,
}

/// A finitely generated group with a fixed symmetric generating set.
/// Cheap to clone; clones share the ball cache.
#[derive(Clone)]
pub struct Group(Arc<Inner>);

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.0.descriptor)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.descriptor)
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.descriptor == other.0.descriptor
    }
}

impl Eq for Group {}

/// Growth data for `|B_m(e)| <= exp(lambda * m)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRate {
    pub lambda: f64,
    /// `|B_m|` for m = 0..=max_radius.
    pub measured_sizes: Vec<usize>,
}

impl Group {
    pub fn parse(descriptor: &str) -> Result<Group> {
        descriptor.parse::<GroupSpec>()?.build()
    }

    pub fn from_spec(spec: &GroupSpec, limits: BallLimits) -> Result<Group> {
        let kind = match spec {
            GroupSpec::Free(k) => {
                if *k == 0 || *k > 26 {
                    return usage(format!("free group rank {k} unsupported (1..=26)"));
                }
                Kind::Free { rank: *k }
            }
            GroupSpec::FreeAbelian(d) => {
                if *d == 0 {
                    return usage("free abelian rank must be positive");
                }
                Kind::FreeAbelian { dim: *d }
            }
            GroupSpec::Heisenberg => Kind::Heisenberg,
            GroupSpec::Cyclic(n) => Kind::Finite(FiniteGroup::cyclic(*n)?),
            GroupSpec::Symmetric(n) => Kind::Finite(FiniteGroup::symmetric(*n)?),
            GroupSpec::Alternating(n) => Kind::Finite(FiniteGroup::alternating(*n)?),
            GroupSpec::Dihedral(n) => Kind::Finite(FiniteGroup::dihedral(*n)?),
            GroupSpec::Quaternion8 => Kind::Finite(FiniteGroup::quaternion8()?),
            GroupSpec::CayleyTable { order, table } => {
                Kind::Finite(FiniteGroup::from_table(*order, table.clone(), None)?)
            }
            GroupSpec::Product(factors) => {
                if factors.is_empty() {
                    return usage("direct product needs at least one factor");
                }
                Kind::Product(
                    factors
                        .iter()
                        .map(|s| Group::from_spec(s, limits))
                        .collect::<Result<_>>()?,
                )
            }
        };
        let (identity, generators) = match &kind {
            Kind::Free { rank } => (
                Element::from_form(&[]),
                (1..=*rank as i32)
                    .flat_map(|a| [Element::from_form(&[a]), Element::from_form(&[-a])])
                    .collect(),
            ),
            Kind::FreeAbelian { dim } => {
                let unit = |i: usize, s: i32| {
                    let mut v = vec![0; *dim];
                    v[i] = s;
                    Element::from_form(&v)
                };
                (
                    Element::from_form(&vec![0; *dim]),
                    (0..*dim).flat_map(|i| [unit(i, 1), unit(i, -1)]).collect(),
                )
            }
            Kind::Heisenberg => (
                Element::from_form(&[0, 0, 0]),
                vec![
                    Element::from_form(&[1, 0, 0]),
                    Element::from_form(&[-1, 0, 0]),
                    Element::from_form(&[0, 1, 0]),
                    Element::from_form(&[0, -1, 0]),
                ],
            ),
            Kind::Finite(fg) => (
                Element::from_form(&[fg.identity() as i32]),
                fg.generators().iter().map(|&g| Element::from_form(&[g as i32])).collect(),
            ),
            Kind::Product(factors) => {
                let ids: Vec<Element> = factors.iter().map(|g| g.identity().clone()).collect();
                let mut gens = Vec::new();
                for (i, f) in factors.iter().enumerate() {
                    for s in f.generators() {
                        let mut parts = ids.clone();
                        parts[i] = s.clone();
                        gens.push(pack(&parts));
                    }
                }
                (pack(&ids), gens)
            }
        };
        let memo = LengthMemo {
            dist: HashMap::from([(identity.clone(), 0)]),
            frontier: vec![identity.clone()],
            radius: 0,
        };
        Ok(Group(Arc::new(Inner {
            descriptor: spec.to_string(),
            spec: spec.clone(),
            kind,
            generators,
            identity,
            limits,
            balls: Mutex::new(None),
            memo: Mutex::new(memo),
        })))
    }

    /// `G_0^n` as an n-fold direct product (n = 1 gives `G_0` itself).
    pub fn power(base: &GroupSpec, n: usize, limits: BallLimits) -> Result<Group> {
        match n {
            0 => usage("power exponent must be positive"),
            1 => Group::from_spec(base, limits),
            _ => Group::from_spec(&GroupSpec::Product(vec![base.clone(); n]), limits),
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.0.spec
    }

    pub fn descriptor(&self) -> &str {
        &self.0.descriptor
    }

    pub fn limits(&self) -> BallLimits {
        self.0.limits
    }

    pub fn identity(&self) -> &Element {
        &self.0.identity
    }

    /// Symmetric generating set in its fixed order.
    pub fn generators(&self) -> &[Element] {
        &self.0.generators
    }

    pub fn factors(&self) -> Option<&[Group]> {
        match &self.0.kind {
            Kind::Product(f) => Some(f),
            _ => None,
        }
    }

    pub fn free_rank(&self) -> Option<usize> {
        match self.0.kind {
            Kind::Free { rank } => Some(rank),
            _ => None,
        }
    }

    pub fn free_abelian_rank(&self) -> Option<usize> {
        match self.0.kind {
            Kind::FreeAbelian { dim } => Some(dim),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<usize> {
        match &self.0.kind {
            Kind::Finite(fg) => Some(fg.order()),
            Kind::Product(fs) => fs.iter().map(|g| g.order()).product(),
            _ => None,
        }
    }

    /// Largest word length in a finite group; every ball of at least this
    /// radius is the whole group.
    pub fn diameter(&self) -> Option<usize> {
        match &self.0.kind {
            Kind::Finite(fg) => Some(fg.diameter() as usize),
            Kind::Product(fs) => fs.iter().map(|g| g.diameter()).sum(),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.order().is_some()
    }

    pub fn is_abelian(&self) -> bool {
        match &self.0.kind {
            Kind::Free { rank } => *rank == 1,
            Kind::FreeAbelian { .. } => true,
            Kind::Heisenberg => false,
            Kind::Finite(fg) => fg.is_abelian(),
            Kind::Product(fs) => fs.iter().all(|g| g.is_abelian()),
        }
    }

    pub fn is_amenable(&self) -> bool {
        match &self.0.kind {
            Kind::Free { rank } => *rank == 1,
            Kind::Product(fs) => fs.iter().all(|g| g.is_amenable()),
            _ => true,
        }
    }

    /// Degree d of polynomial growth `|B_n| ~ n^d`, or `None` for
    /// exponential growth.
    pub fn growth_degree(&self) -> Option<u32> {
        match &self.0.kind {
            Kind::Free { rank } => (*rank == 1).then_some(1),
            Kind::FreeAbelian { dim } => Some(*dim as u32),
            Kind::Heisenberg => Some(4),
            Kind::Finite(_) => Some(0),
            Kind::Product(fs) => fs.iter().map(|g| g.growth_degree()).sum(),
        }
    }

    /// Whether `g` is a canonical form of an element of this group.
    pub fn contains(&self, g: &Element) -> bool {
        self.check_form(g.form())
    }

    fn check_form(&self, form: &[i32]) -> bool {
        match &self.0.kind {
            Kind::Free { rank } => {
                let r = *rank as i32;
                form.iter().all(|&a| a != 0 && a.abs() <= r)
                    && form.windows(2).all(|w| w[0] != -w[1])
            }
            Kind::FreeAbelian { dim } => form.len() == *dim,
            Kind::Heisenberg => form.len() == 3,
            Kind::Finite(fg) => form.len() == 1 && form[0] >= 0 && (form[0] as usize) < fg.order(),
            Kind::Product(fs) => match split_form(form, fs.len()) {
                Some(parts) => fs.iter().zip(parts).all(|(g, p)| g.check_form(p)),
                None => false,
            },
        }
    }

    fn ensure(&self, g: &Element) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            usage(format!("{g:?} is not an element of {}", self.descriptor()))
        }
    }

    pub fn multiply(&self, g: &Element, h: &Element) -> Result<Element> {
        self.ensure(g)?;
        self.ensure(h)?;
        Ok(self.mul(g, h))
    }

    pub fn invert(&self, g: &Element) -> Result<Element> {
        self.ensure(g)?;
        Ok(self.inv(g))
    }

    /// Group law on trusted canonical forms.
    pub(crate) fn mul(&self, g: &Element, h: &Element) -> Element {
        Element(self.mul_forms(g.form(), h.form()))
    }

    fn mul_forms(&self, g: &[i32], h: &[i32]) -> Form {
        match &self.0.kind {
            Kind::Free { .. } => {
                let mut out: Form = SmallVec::from_slice(g);
                for &a in h {
                    if out.last() == Some(&-a) {
                        out.pop();
                    } else {
                        out.push(a);
                    }
                }
                out
            }
            Kind::FreeAbelian { .. } => g.iter().zip(h).map(|(a, b)| a + b).collect(),
            Kind::Heisenberg => SmallVec::from_slice(&[g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]]),
            Kind::Finite(fg) => SmallVec::from_slice(&[fg.mul(g[0] as u32, h[0] as u32) as i32]),
            Kind::Product(fs) => {
                let gp = split_form(g, fs.len()).expect("product form");
                let hp = split_form(h, fs.len()).expect("product form");
                let mut out = SmallVec::new();
                for ((f, a), b) in fs.iter().zip(gp).zip(hp) {
                    let part = f.mul_forms(a, b);
                    out.push(part.len() as i32);
                    out.extend_from_slice(&part);
                }
                out
            }
        }
    }

    pub(crate) fn inv(&self, g: &Element) -> Element {
        Element(self.inv_form(g.form()))
    }

    fn inv_form(&self, g: &[i32]) -> Form {
        match &self.0.kind {
            Kind::Free { .. } => g.iter().rev().map(|a| -a).collect(),
            Kind::FreeAbelian { .. } => g.iter().map(|a| -a).collect(),
            Kind::Heisenberg => SmallVec::from_slice(&[-g[0], -g[1], g[0] * g[1] - g[2]]),
            Kind::Finite(fg) => SmallVec::from_slice(&[fg.inv(g[0] as u32) as i32]),
            Kind::Product(fs) => {
                let mut out = SmallVec::new();
                for (f, a) in fs.iter().zip(split_form(g, fs.len()).expect("product form")) {
                    let part = f.inv_form(a);
                    out.push(part.len() as i32);
                    out.extend_from_slice(&part);
                }
                out
            }
        }
    }

    /// Word length with respect to the generating set.
    pub fn length(&self, g: &Element) -> u32 {
        self.length_form(g.form())
    }

    fn length_form(&self, g: &[i32]) -> u32 {
        match &self.0.kind {
            Kind::Free { .. } => g.len() as u32,
            Kind::FreeAbelian { .. } => g.iter().map(|a| a.unsigned_abs()).sum(),
            Kind::Heisenberg => self.memo_length(g),
            Kind::Finite(fg) => fg.length(g[0] as u32),
            Kind::Product(fs) => fs
                .iter()
                .zip(split_form(g, fs.len()).expect("product form"))
                .map(|(f, a)| f.length_form(a))
                .sum(),
        }
    }

    fn memo_length(&self, g: &[i32]) -> u32 {
        let key = Element::from_form(g);
        let mut memo = self.0.memo.lock().expect("length memo poisoned");
        loop {
            if let Some(&d) = memo.dist.get(&key) {
                return d;
            }
            assert!(
                memo.radius < 4096,
                "word length of {key:?} beyond the memo horizon"
            );
            let next_radius = memo.radius + 1;
            let frontier = std::mem::take(&mut memo.frontier);
            let mut next = Vec::new();
            for x in &frontier {
                for s in &self.0.generators {
                    let y = self.mul(s, x);
                    if !memo.dist.contains_key(&y) {
                        memo.dist.insert(y.clone(), next_radius);
                        next.push(y);
                    }
                }
            }
            memo.frontier = next;
            memo.radius = next_radius;
        }
    }

    /// Shared breadth-first index of `B_radius(e)`. The group caches the
    /// largest index built so far; a cached index of larger radius is
    /// returned as is (BFS order makes every smaller ball a prefix).
    pub fn ball_index(&self, radius: usize) -> Result<Arc<BallIndex>> {
        if let Some(max) = self.0.limits.max_radius {
            if radius > max {
                return Err(LabError::Resource {
                    reason: format!("ball radius {radius} exceeds the configured maximum {max}"),
                    largest_radius: max,
                });
            }
        }
        let mut cache = self.0.balls.lock().expect("ball cache poisoned");
        if let Some(b) = cache.as_ref() {
            if b.radius() >= radius {
                return Ok(b.clone());
            }
        }
        let built = Arc::new(BallIndex::build(self, radius, self.0.limits.max_elements)?);
        *cache = Some(built.clone());
        Ok(built)
    }

    /// `{g : l(g) <= n}` in breadth-first discovery order.
    pub fn ball(&self, n: usize) -> Result<Vec<Element>> {
        let b = self.ball_index(n)?;
        Ok((0..b.ball_len(n)).map(|i| b.element(i)).collect())
    }

    /// `{g : l(g) = n}` in breadth-first discovery order.
    pub fn sphere(&self, n: usize) -> Result<Vec<Element>> {
        let b = self.ball_index(n)?;
        Ok(b.level_range(n).map(|i| b.element(i)).collect())
    }

    pub fn ball_sizes(&self, max_radius: usize) -> Result<Vec<usize>> {
        let b = self.ball_index(max_radius)?;
        Ok((0..=max_radius).map(|n| b.ball_len(n)).collect())
    }

    /// Sup-rule growth rate: `lambda = max_{1<=m<=M} ln|B_m| / m`, floored at
    /// [`LAMBDA_FLOOR`], so that `|B_m| <= exp(lambda m)` on the measured range.
    pub fn fit_growth_lambda(&self, max_radius: usize) -> Result<GrowthRate> {
        if max_radius == 0 {
            return usage("fit_growth_lambda needs max_radius >= 1");
        }
        let sizes = self.ball_sizes(max_radius)?;
        let lambda = (1..=max_radius)
            .map(|m| (sizes[m] as f64).ln() / m as f64)
            .fold(LAMBDA_FLOOR, f64::max);
        Ok(GrowthRate { lambda, measured_sizes: sizes })
    }

    pub fn element_to_string(&self, g: &Element) -> String {
        format_form(self, g.form())
    }

    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let form = spec::parse_element_form(self, s.trim())?;
        let g = Element(form);
        if !self.contains(&g) {
            return Err(LabError::Parse(format!("`{s}` is not a canonical element of {}", self.descriptor())));
        }
        if matches!(self.0.kind, Kind::Heisenberg) {
            let f = g.form();
            if f[0].abs() + f[1].abs() > 64 || f[2].abs() > 1024 {
                return Err(LabError::Parse(format!("Heisenberg element `{s}` beyond supported range")));
            }
        }
        Ok(g)
    }
}

fn format_form(group: &Group, form: &[i32]) -> String {
    match &group.0.kind {
        Kind::Free { .. } => {
            if form.is_empty() {
                "e".to_string()
            } else {
                form.iter()
                    .map(|&a| {
                        let c = (b'a' + (a.unsigned_abs() - 1) as u8) as char;
                        if a > 0 {
                            c
                        } else {
                            c.to_ascii_uppercase()
                        }
                    })
                    .collect()
            }
        }
        Kind::FreeAbelian { .. } | Kind::Heisenberg => {
            let parts: Vec<String> = form.iter().map(|a| a.to_string()).collect();
            format!("({})", parts.join(","))
        }
        Kind::Finite(_) => format!("#{}", form[0]),
        Kind::Product(fs) => {
            let parts: Vec<String> = fs
                .iter()
                .zip(split_form(form, fs.len()).expect("product form"))
                .map(|(f, p)| format_form(f, p))
                .collect();
            format!("[{}]", parts.join(";"))
        }
    }
}

pub(crate) fn pack(parts: &[Element]) -> Element {
    let mut out = SmallVec::new();
    for p in parts {
        out.push(p.form().len() as i32);
        out.extend_from_slice(p.form());
    }
    Element(out)
}

pub(crate) fn split_form(form: &[i32], n: usize) -> Option<Vec<&[i32]>> {
    let mut parts = Vec::with_capacity(n);
    let mut rest = form;
    for _ in 0..n {
        let (&len, tail) = rest.split_first()?;
        if len < 0 || len as usize > tail.len() {
            return None;
        }
        let (part, tail) = tail.split_at(len as usize);
        parts.push(part);
        rest = tail;
    }
    rest.is_empty().then_some(parts)
}

impl Group {
    /// Split a product element into factor elements.
    pub fn unpack(&self, g: &Element) -> Option<Vec<Element>> {
        let n = self.factors()?.len();
        split_form(g.form(), n).map(|ps| ps.into_iter().map(Element::from_form).collect())
    }

    /// Assemble a product element from factor elements.
    pub fn pack(&self, parts: &[Element]) -> Result<Element> {
        let fs = self
            .factors()
            .ok_or_else(|| LabError::Usage(format!("{} is not a direct product", self.descriptor())))?;
        if fs.len() != parts.len() || !fs.iter().zip(parts).all(|(f, p)| f.contains(p)) {
            return usage("factor elements do not match the product");
        }
        Ok(pack(parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Group {
        Group::parse(s).unwrap()
    }

    #[test]
    fn free_inverse_law() {
        let f2 = g("free:2");
        let a = f2.parse_element("a").unwrap();
        let a_inv = f2.invert(&a).unwrap();
        assert_eq!(f2.element_to_string(&a_inv), "A");
        assert_eq!(f2.multiply(&a, &a_inv).unwrap(), *f2.identity());
    }

    #[test]
    fn zd_addition() {
        let z2 = g("zd:2");
        let x = z2.parse_element("(1,0)").unwrap();
        let y = z2.parse_element("(0,2)").unwrap();
        assert_eq!(z2.element_to_string(&z2.multiply(&x, &y).unwrap()), "(1,2)");
    }

    #[test]
    fn mixed_group_operands_rejected() {
        let f2 = g("free:2");
        let z2 = g("zd:2");
        let x = z2.parse_element("(1,0)").unwrap();
        assert!(matches!(f2.multiply(&x, &x), Err(LabError::Usage(_))));
    }

    #[test]
    fn ball_sizes_match_closed_forms() {
        assert_eq!(g("free:2").ball(2).unwrap().len(), 17);
        assert_eq!(g("zd:2").ball(2).unwrap().len(), 13);
        assert_eq!(g("heisenberg").ball(0).unwrap().len(), 1);
    }

    #[test]
    fn growth_lambda_examples() {
        let f2 = g("free:2").fit_growth_lambda(1).unwrap();
        assert!((f2.lambda - 5f64.ln()).abs() < 1e-12);
        let z = g("zd:1").fit_growth_lambda(10).unwrap();
        assert!((z.lambda - 3f64.ln()).abs() < 1e-12);
        let triv = g("trivial").fit_growth_lambda(5).unwrap();
        assert_eq!(triv.lambda, LAMBDA_FLOOR);
    }

    #[test]
    fn heisenberg_commutator_is_central() {
        let h = g("heisenberg");
        let a = h.parse_element("(1,0,0)").unwrap();
        let b = h.parse_element("(0,1,0)").unwrap();
        let ab = h.mul(&a, &b);
        let ba = h.mul(&b, &a);
        let comm = h.mul(&ab, &h.inv(&ba));
        assert_eq!(h.element_to_string(&comm), "(0,0,1)");
        // [a, b] has word length 4
        assert_eq!(h.length(&comm), 4);
    }

    #[test]
    fn product_round_trip_strings() {
        let p = g("product:sym:3,free:1");
        for x in p.ball(3).unwrap() {
            let s = p.element_to_string(&x);
            assert_eq!(p.parse_element(&s).unwrap(), x, "{s}");
        }
    }

    #[test]
    fn resource_limit_reports_radius() {
        let spec: GroupSpec = "free:2".parse().unwrap();
        let limits = BallLimits { max_radius: None, max_elements: 100 };
        let f2 = Group::from_spec(&spec, limits).unwrap();
        match f2.ball(6) {
            Err(LabError::Resource { largest_radius, .. }) => assert_eq!(largest_radius, 3),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
