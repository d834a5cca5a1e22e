use super::dims::{Dim, DimVec};
use super::problem::ProblemSpec;
use crate::error::{Error, Result};

/// Tile sizes for every tile level, innermost (register or L1) first.
#[derive(Debug, Clone, PartialEq)]
pub struct TileConfig {
    pub levels: Vec<DimVec>,
    /// Per-core chunk sizes between the last private tile level and the
    /// first shared one. Only `n, k, h, w` are free; `c, r, s` always equal
    /// the shared-level tile.
    pub parallel_chunks: Option<DimVec>,
}

impl TileConfig {
    pub fn new(levels: Vec<DimVec>) -> Self {
        TileConfig {
            levels,
            parallel_chunks: None,
        }
    }

    pub fn single(t: DimVec) -> Self {
        Self::new(vec![t])
    }

    /// Outer extent of level `l`: the next tile level, or the problem.
    pub fn outer(&self, l: usize, problem: &ProblemSpec) -> DimVec {
        match self.levels.get(l + 1) {
            Some(t) => *t,
            None => problem.extents(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.levels.iter().all(DimVec::is_integral)
            && self.parallel_chunks.as_ref().is_none_or(DimVec::is_integral)
    }

    /// Checks `1 <= T^0 <= T^1 <= ... <= N` and the chunk bounds when a
    /// shared level index is given.
    pub fn check_nesting(&self, problem: &ProblemSpec, shared: Option<usize>) -> Result<()> {
        for (l, t) in self.levels.iter().enumerate() {
            for d in Dim::ALL {
                if !(t[d] >= 1.0) {
                    return Err(Error::Nesting {
                        level: l,
                        dim: d.letter(),
                        inner: 1.0,
                        outer: t[d],
                    });
                }
                let outer = self.outer(l, problem)[d];
                if t[d] > outer * (1.0 + 1e-12) {
                    return Err(Error::Nesting {
                        level: l,
                        dim: d.letter(),
                        inner: t[d],
                        outer,
                    });
                }
            }
        }
        if self.levels.is_empty() {
            return Err(Error::invalid("tiles", "no tile levels"));
        }
        if let (Some(pt), Some(p)) = (&self.parallel_chunks, shared) {
            if p == 0 || p >= self.levels.len() {
                return Err(Error::invalid("tiles", "parallel chunks need a private and a shared level"));
            }
            let inner = &self.levels[p - 1];
            let outer = &self.levels[p];
            for d in Dim::ALL {
                let (lo, hi) = if d.is_reduction() {
                    (outer[d], outer[d])
                } else {
                    (inner[d], outer[d])
                };
                if pt[d] < lo * (1.0 - 1e-12) || pt[d] > hi * (1.0 + 1e-12) {
                    return Err(Error::invalid(
                        "tiles",
                        format!(
                            "parallel chunk {d} = {} outside [{lo}, {hi}]",
                            pt[d]
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Number of chunks one shared-level tile splits into.
pub fn chunk_count(shared_tile: &DimVec, pt: &DimVec, relaxed: bool) -> f64 {
    Dim::PARALLEL
        .iter()
        .map(|&d| {
            let q = shared_tile[d] / pt[d];
            if relaxed {
                q
            } else {
                crate::cost::ceil_div(shared_tile[d], pt[d])
            }
        })
        .product()
}
