use serde::{Deserialize, Serialize};

use super::{Element, Group, Kind};
use crate::error::{usage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EmbeddingKind {
    /// `Z -> F_k`, `n -> x^n` for the free generator number `generator` (0-based).
    FreeFactor { generator: usize },
    /// `H -> H_1 x ... x H_m` into slot `index`, identity elsewhere.
    Factor { index: usize },
    /// `G_0^n -> G_0^(n+1)`, `(g_1..g_n) -> (g_1..g_n, e)`.
    Padding,
}

/// An injective homomorphism `source -> target` from one of the supported
/// families.
#[derive(Debug, Clone)]
pub struct SubgroupEmbedding {
    source: Group,
    target: Group,
    kind: EmbeddingKind,
}

impl SubgroupEmbedding {
    pub fn new(source: &Group, target: &Group, kind: EmbeddingKind) -> Result<Self> {
        let ok = match kind {
            EmbeddingKind::FreeFactor { generator } => {
                let cyclic_source = source.free_abelian_rank() == Some(1) || source.free_rank() == Some(1);
                cyclic_source && target.free_rank().is_some_and(|k| generator < k)
            }
            EmbeddingKind::Factor { index } => {
                target.factors().is_some_and(|fs| fs.get(index).is_some_and(|f| f == source))
            }
            EmbeddingKind::Padding => match target.factors() {
                Some(fs) if fs.len() >= 2 && fs.iter().all(|f| f == &fs[0]) => {
                    let n = fs.len() - 1;
                    if n == 1 {
                        source == &fs[0]
                    } else {
                        source.factors().is_some_and(|s| s.len() == n && s.iter().all(|f| f == &fs[0]))
                    }
                }
                _ => false,
            },
        };
        if !ok {
            return usage(format!(
                "unsupported embedding {kind:?} from {} into {}",
                source.descriptor(),
                target.descriptor()
            ));
        }
        Ok(SubgroupEmbedding { source: source.clone(), target: target.clone(), kind })
    }

    pub fn source(&self) -> &Group {
        &self.source
    }

    pub fn target(&self) -> &Group {
        &self.target
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn embed(&self, h: &Element) -> Result<Element> {
        if !self.source.contains(h) {
            return usage(format!("{h:?} is not an element of {}", self.source.descriptor()));
        }
        Ok(self.embed_unchecked(h))
    }

    pub(crate) fn embed_unchecked(&self, h: &Element) -> Element {
        match self.kind {
            EmbeddingKind::FreeFactor { generator } => {
                let n = match &self.source.0.kind {
                    Kind::FreeAbelian { .. } => h.form()[0],
                    // free:1 forms are runs of +1 or -1
                    _ => h.form().iter().sum(),
                };
                let letter = (generator as i32 + 1) * n.signum();
                Element::from_form(&vec![letter; n.unsigned_abs() as usize])
            }
            EmbeddingKind::Factor { index } => {
                let fs = self.target.factors().expect("product target");
                let mut parts: Vec<Element> = fs.iter().map(|f| f.identity().clone()).collect();
                parts[index] = h.clone();
                super::pack(&parts)
            }
            EmbeddingKind::Padding => {
                let fs = self.target.factors().expect("product target");
                let mut parts = match self.source.unpack(h) {
                    Some(ps) if fs.len() > 2 => ps,
                    _ => vec![h.clone()],
                };
                parts.push(fs[0].identity().clone());
                super::pack(&parts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_maps_to_a_cubed() {
        let z = Group::parse("z").unwrap();
        let f2 = Group::parse("free:2").unwrap();
        let e = SubgroupEmbedding::new(&z, &f2, EmbeddingKind::FreeFactor { generator: 0 }).unwrap();
        let img = e.embed(&z.parse_element("(3)").unwrap()).unwrap();
        assert_eq!(f2.element_to_string(&img), "aaa");
        let img = e.embed(&z.parse_element("(-2)").unwrap()).unwrap();
        assert_eq!(f2.element_to_string(&img), "AA");
    }

    #[test]
    fn padding_appends_identity() {
        let g1 = Group::parse("sym:3").unwrap();
        let g2 = Group::parse("product:sym:3,sym:3").unwrap();
        let g3 = Group::parse("product:sym:3,sym:3,sym:3").unwrap();
        let e12 = SubgroupEmbedding::new(&g1, &g2, EmbeddingKind::Padding).unwrap();
        let e23 = SubgroupEmbedding::new(&g2, &g3, EmbeddingKind::Padding).unwrap();
        let g = g1.parse_element("#4").unwrap();
        let x = e12.embed(&g).unwrap();
        assert_eq!(g2.element_to_string(&x), "[#4;#0]");
        assert_eq!(g3.element_to_string(&e23.embed(&x).unwrap()), "[#4;#0;#0]");
    }

    #[test]
    fn unsupported_pairs_rejected() {
        let z2 = Group::parse("zd:2").unwrap();
        let f2 = Group::parse("free:2").unwrap();
        assert!(SubgroupEmbedding::new(&z2, &f2, EmbeddingKind::FreeFactor { generator: 0 }).is_err());
        assert!(SubgroupEmbedding::new(&f2, &f2, EmbeddingKind::Padding).is_err());
    }
}
