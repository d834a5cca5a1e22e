//! The eight equivalence classes of tile-loop orders and an exhaustive check
//! that they are never beaten by any of the 5040 orders.

mod dominance;

pub use dominance::{verify_dominance, Counterexample, DominanceReport, PermGap, TileGrid};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{next_permutation, Dim, Permutation};

use Dim::{C, H, K, N, R, S, W};

/// One of the eight pruned classes.
///
/// A class is a sequence of bands listed outermost first; loops may be
/// reordered freely inside a band without changing the cost expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl ClassId {
    pub const ALL: [ClassId; 8] = [
        ClassId::C1,
        ClassId::C2,
        ClassId::C3,
        ClassId::C4,
        ClassId::C5,
        ClassId::C6,
        ClassId::C7,
        ClassId::C8,
    ];

    pub fn name(self) -> &'static str {
        ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"][self as usize]
    }

    /// Bands, outermost first.
    pub fn bands(self) -> &'static [&'static [Dim]] {
        match self {
            ClassId::C1 => &[&[K, C, R, S], &[N, H], &[W]],
            ClassId::C2 => &[&[K, C, R, S], &[N, W], &[H]],
            ClassId::C3 => &[&[N, K, H, W], &[C, R], &[S]],
            ClassId::C4 => &[&[N, K, H, W], &[C, S], &[R]],
            ClassId::C5 => &[&[N, C, H, R, S], &[W], &[K]],
            ClassId::C6 => &[&[N, C, W, R, S], &[H], &[K]],
            ClassId::C7 => &[&[N, C, H, W, R], &[S], &[K]],
            ClassId::C8 => &[&[N, C, H, W, S], &[R], &[K]],
        }
    }

    /// Band notation, e.g. `⟨{kt,ct,rt,st},{nt,ht},wt⟩`.
    pub fn notation(self) -> String {
        let bands: Vec<String> = self
            .bands()
            .iter()
            .map(|band| {
                let names: Vec<String> = band.iter().map(|d| format!("{d}t")).collect();
                if band.len() == 1 {
                    names[0].clone()
                } else {
                    format!("{{{}}}", names.join(","))
                }
            })
            .collect();
        format!("⟨{}⟩", bands.join(","))
    }

    /// The bands concatenated in listed order.
    pub fn representative(self) -> Permutation {
        let order: Vec<Dim> = self.bands().iter().flat_map(|b| b.iter().copied()).collect();
        Permutation::new(order.try_into().unwrap()).unwrap()
    }

    pub fn contains(self, perm: &Permutation) -> bool {
        let order = perm.outer_to_inner();
        let mut at = 0;
        for band in self.bands() {
            let chunk = &order[at..at + band.len()];
            if !band.iter().all(|d| chunk.contains(d)) {
                return false;
            }
            at += band.len();
        }
        true
    }

    /// Every order matching the band pattern.
    pub fn members(self) -> Vec<Permutation> {
        let mut out = vec![Vec::<Dim>::new()];
        for band in self.bands() {
            let mut arrangements = Vec::new();
            let mut cur = band.to_vec();
            cur.sort();
            loop {
                arrangements.push(cur.clone());
                if !next_permutation(&mut cur) {
                    break;
                }
            }
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    arrangements.iter().map(move |a| {
                        let mut p = prefix.clone();
                        p.extend_from_slice(a);
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|o| Permutation::new(o.try_into().unwrap()).unwrap())
            .collect()
    }

    pub fn member_count(self) -> usize {
        self.bands()
            .iter()
            .map(|b| (1..=b.len()).product::<usize>())
            .product()
    }

    /// The class a permutation belongs to, if any.
    pub fn of(perm: &Permutation) -> Option<ClassId> {
        ClassId::ALL.into_iter().find(|c| c.contains(perm))
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        ClassId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::invalid("class", format!("unknown class '{s}' (expected C1..C8)")))
    }
}

impl Serialize for ClassId {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for ClassId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Catalog entry for one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermClass {
    pub id: ClassId,
    pub pattern: String,
    pub representative: Permutation,
    pub members: usize,
}

/// The fixed catalog of the eight classes.
pub fn classes() -> Vec<PermClass> {
    ClassId::ALL
        .into_iter()
        .map(|id| PermClass {
            id,
            pattern: id.notation(),
            representative: id.representative(),
            members: id.member_count(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        let cat = classes();
        assert_eq!(cat.len(), 8);
        assert_eq!(
            cat[0].representative.to_string(),
            "kt,ct,rt,st,nt,ht,wt"
        );
        assert_eq!(cat[0].pattern, "⟨{kt,ct,rt,st},{nt,ht},wt⟩");
        let sizes: Vec<usize> = ClassId::ALL.iter().map(|c| c.members().len()).collect();
        assert_eq!(sizes, vec![48, 48, 48, 48, 120, 120, 120, 120]);
        for c in ClassId::ALL {
            assert_eq!(c.members().len(), c.member_count());
            assert!(c.contains(&c.representative()));
        }
    }

    #[test]
    fn members_disjoint_and_total() {
        let mut seen = HashSet::new();
        for c in ClassId::ALL {
            for m in c.members() {
                assert!(c.contains(&m));
                assert_eq!(ClassId::of(&m), Some(c));
                assert!(seen.insert(m), "{m} in two classes");
            }
        }
        assert_eq!(seen.len(), 672);
    }

    #[test]
    fn pattern_membership() {
        let p: Permutation = "st,rt,ct,kt,ht,nt,wt".parse().unwrap();
        assert!(ClassId::C1.contains(&p));
        assert!(!ClassId::C2.contains(&p));
        let q: Permutation = "kt,ct,rt,st,nt,wt,ht".parse().unwrap();
        assert_eq!(ClassId::of(&q), Some(ClassId::C2));
        let outside: Permutation = "kt,nt,ct,rt,st,ht,wt".parse().unwrap();
        assert_eq!(ClassId::of(&outside), None);
    }

    #[test]
    fn parse_class_names() {
        assert_eq!("c5".parse::<ClassId>().unwrap(), ClassId::C5);
        assert!("C9".parse::<ClassId>().is_err());
    }
}
