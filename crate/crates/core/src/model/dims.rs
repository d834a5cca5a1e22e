use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// One of the seven loop dimensions of a 2-D convolution
/// `Out[n,k,h,w] += In[n,c,h+r,w+s] * Ker[k,c,r,s]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    N,
    K,
    C,
    R,
    S,
    H,
    W,
}

impl Dim {
    /// Canonical order used for tile vectors: `(n, k, c, r, s, h, w)`.
    pub const ALL: [Dim; 7] = [Dim::N, Dim::K, Dim::C, Dim::R, Dim::S, Dim::H, Dim::W];

    /// Non-reduction dimensions, the only ones that may be split across cores.
    pub const PARALLEL: [Dim; 4] = [Dim::N, Dim::K, Dim::H, Dim::W];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Dim::N => 'n',
            Dim::K => 'k',
            Dim::C => 'c',
            Dim::R => 'r',
            Dim::S => 's',
            Dim::H => 'h',
            Dim::W => 'w',
        }
    }

    pub fn from_letter(c: char) -> Option<Dim> {
        Dim::ALL.into_iter().find(|d| d.letter() == c)
    }

    pub fn is_reduction(self) -> bool {
        matches!(self, Dim::C | Dim::R | Dim::S)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A value per loop dimension, indexed by [`Dim`].
///
/// Used both for tile sizes (continuous during optimization, integral in the
/// final schedule) and for loop extents.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DimVec(pub [f64; 7]);

impl DimVec {
    pub const ONES: DimVec = DimVec([1.0; 7]);

    pub fn splat(v: f64) -> Self {
        DimVec([v; 7])
    }

    pub fn from_fn(mut f: impl FnMut(Dim) -> f64) -> Self {
        let mut out = [0.0; 7];
        for d in Dim::ALL {
            out[d.index()] = f(d);
        }
        DimVec(out)
    }

    pub fn map(&self, mut f: impl FnMut(Dim, f64) -> f64) -> Self {
        DimVec::from_fn(|d| f(d, self[d]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Dim, f64)> + '_ {
        Dim::ALL.into_iter().map(move |d| (d, self[d]))
    }

    pub fn product(&self) -> f64 {
        self.0.iter().product()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &DimVec) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|v| v.fract() == 0.0)
    }

    pub fn min(&self, other: &DimVec) -> DimVec {
        DimVec::from_fn(|d| self[d].min(other[d]))
    }
}

impl Index<Dim> for DimVec {
    type Output = f64;
    fn index(&self, d: Dim) -> &f64 {
        &self.0[d.index()]
    }
}

impl IndexMut<Dim> for DimVec {
    fn index_mut(&mut self, d: Dim) -> &mut f64 {
        &mut self.0[d.index()]
    }
}

impl fmt::Display for DimVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (d, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}:{v}")?;
        }
        write!(f, ")")
    }
}

/// JSON shape `{"n":..,"k":..,"c":..,"r":..,"s":..,"h":..,"w":..}`.
impl Serialize for DimVec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(7))?;
        for (d, v) in self.iter() {
            let key = d.letter().to_string();
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                map.serialize_entry(&key, &(v as i64))?;
            } else {
                map.serialize_entry(&key, &v)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DimVec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = std::collections::BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut out = DimVec::ONES;
        for (key, v) in raw {
            let mut chars = key.chars();
            let d = match (chars.next(), chars.next()) {
                (Some(c), None) => Dim::from_letter(c),
                _ => None,
            }
            .ok_or_else(|| D::Error::custom(format!("unknown dimension '{key}'")))?;
            out[d] = v;
        }
        Ok(out)
    }
}
