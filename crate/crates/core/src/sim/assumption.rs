use serde::Serialize;

use crate::cost::{capacity_lhs, ceil_div, Tensor};
use crate::model::{DimVec, Permutation, ProblemSpec};

/// How far a reuse-breaking footprint must exceed capacity before the LRU
/// is trusted to have evicted the tile. Below this, part of the tile tends
/// to survive a sweep and the simulator sees less traffic than modeled.
pub const EVICTION_MARGIN: f64 = 1.5;

/// Whether a single-level configuration sits in the regime the analytical
/// model describes: one tile fits comfortably, two adjacent tiles do not,
/// and every sweep that should evict a tensor's tile touches enough data to
/// do so.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub ok: bool,
    pub tile_footprint: f64,
    pub two_tile_footprint: f64,
    /// `2 * tile_footprint <= C`.
    pub tile_fits_half: bool,
    /// Two adjacent tiles along the innermost non-trivial loop exceed `C / 2`.
    pub adjacent_exceeds: bool,
    /// Every sweep outside a tensor's reuse loop overflows the cache.
    pub sweeps_evict: bool,
}

pub fn check_assumption(
    problem: &ProblemSpec,
    perm: &Permutation,
    tiles: &DimVec,
    capacity: f64,
) -> AssumptionCheck {
    let strides = problem.strides;
    let n = problem.extents();
    let trips = DimVec::from_fn(|d| ceil_div(n[d], tiles[d]));
    let inner = perm.inner_to_outer();
    let tile_footprint = capacity_lhs(tiles, strides);

    let two_tile_footprint = match inner.iter().find(|&&d| trips[d] > 1.0) {
        Some(&d) => {
            let mut t2 = *tiles;
            t2[d] *= 2.0;
            capacity_lhs(&t2, strides)
        }
        // a single tile never has a neighbor to be evicted by
        None => 0.0,
    };
    let tile_fits_half = 2.0 * tile_footprint <= capacity;
    let adjacent_exceeds = two_tile_footprint > capacity / 2.0;

    let mut sweeps_evict = true;
    'tensors: for tensor in Tensor::ALL {
        let r = inner.iter().position(|&d| tensor.uses(d)).unwrap();
        for j in r + 1..inner.len() {
            if trips[inner[j]] <= 1.0 {
                continue;
            }
            let mut swept = *tiles;
            for &d in &inner[..j] {
                swept[d] = n[d];
            }
            if capacity_lhs(&swept, strides) <= EVICTION_MARGIN * capacity {
                sweeps_evict = false;
                break 'tensors;
            }
        }
    }
    AssumptionCheck {
        ok: tile_fits_half && adjacent_exceeds && sweeps_evict,
        tile_footprint,
        two_tile_footprint,
        tile_fits_half,
        adjacent_exceeds,
        sweeps_evict,
    }
}
