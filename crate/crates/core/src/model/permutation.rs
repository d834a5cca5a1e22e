use std::fmt;
use std::str::FromStr;

use super::dims::Dim;
use crate::error::{Error, Result};

/// Order of the seven tile loops, stored outermost first.
///
/// Text form is a comma-separated list such as `kt,ct,rt,st,nt,ht,wt`; the
/// compact form `kcrsnhw` is accepted as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    order: [Dim; 7],
}

impl Permutation {
    pub fn new(order: [Dim; 7]) -> Result<Self> {
        let mut seen = [false; 7];
        for d in order {
            if seen[d.index()] {
                return Err(Error::invalid(
                    "permutation",
                    format!("iterator {d}t appears twice"),
                ));
            }
            seen[d.index()] = true;
        }
        Ok(Permutation { order })
    }

    /// Iterators outermost to innermost.
    pub fn outer_to_inner(&self) -> &[Dim; 7] {
        &self.order
    }

    /// Iterators innermost first: element `j` sits at position `j + 1`.
    pub fn inner_to_outer(&self) -> [Dim; 7] {
        let mut out = self.order;
        out.reverse();
        out
    }

    pub fn innermost(&self) -> Dim {
        self.order[6]
    }

    /// 1-based position counted from the innermost loop.
    pub fn position(&self, d: Dim) -> usize {
        7 - self.order.iter().position(|&x| x == d).unwrap()
    }

    /// All 5040 orders, in lexicographic order of the canonical dim indices.
    pub fn all() -> Vec<Permutation> {
        let mut out = Vec::with_capacity(5040);
        let mut cur = Dim::ALL;
        loop {
            out.push(Permutation { order: cur });
            if !next_permutation(&mut cur) {
                break;
            }
        }
        out
    }
}

/// Advances to the next lexicographic arrangement; false after the last one.
pub(crate) fn next_permutation<T: Ord>(xs: &mut [T]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.order.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}t")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('⟨').trim_end_matches('⟩');
        let tokens: Vec<String> = if s.contains(',') {
            s.split(',').map(|t| t.trim().to_string()).collect()
        } else {
            // compact form: one letter per loop, optional `t` suffixes
            s.chars().filter(|&c| c != 't').map(String::from).collect()
        };
        let mut dims = Vec::with_capacity(7);
        for tok in &tokens {
            let tok = tok.strip_suffix('t').filter(|t| !t.is_empty()).unwrap_or(tok);
            let mut chars = tok.chars();
            let d = match (chars.next(), chars.next()) {
                (Some(c), None) => Dim::from_letter(c),
                _ => None,
            }
            .ok_or_else(|| {
                Error::invalid("permutation", format!("unknown iterator '{tok}'"))
            })?;
            dims.push(d);
        }
        let order: [Dim; 7] = dims.try_into().map_err(|v: Vec<Dim>| {
            Error::invalid(
                "permutation",
                format!("expected 7 iterators, got {}", v.len()),
            )
        })?;
        Permutation::new(order)
    }
}

impl serde::Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let a: Permutation = "kt,ct,rt,st,nt,ht,wt".parse().unwrap();
        let b: Permutation = "kcrsnhw".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.innermost(), Dim::W);
        assert_eq!(a.position(Dim::W), 1);
        assert_eq!(a.position(Dim::K), 7);
        assert_eq!(a.to_string(), "kt,ct,rt,st,nt,ht,wt");
    }

    #[test]
    fn rejects_bad_orders() {
        assert!("kt,ct,rt,st,nt,ht".parse::<Permutation>().is_err());
        assert!("kt,kt,rt,st,nt,ht,wt".parse::<Permutation>().is_err());
        assert!("kt,ct,rt,st,nt,ht,xt".parse::<Permutation>().is_err());
    }

    #[test]
    fn enumerates_all_distinct() {
        let all = Permutation::all();
        assert_eq!(all.len(), 5040);
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), 5040);
    }
}
