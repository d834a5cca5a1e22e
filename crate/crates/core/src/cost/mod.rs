//! Closed-form data-movement volumes for tiled convolution loop nests.
//!
//! Every evaluator takes a tile vector `T` and the extents `outer` of the
//! space being tiled (the problem for a single level, the next tile level in
//! a hierarchy) and returns words moved per tensor.

mod classes;
mod footprint;
mod general;
mod matmul;
mod multilevel;

pub use classes::dv_class;
pub use footprint::{capacity_lhs, capacity_lhs_lines, footprint, footprint_lines, line_words, Tensor};
pub use general::{dv_general, PreparedTile};
pub use matmul::{dv_matmul, matmul_capacity_lhs, MatmulLoop};
pub use multilevel::{dv_multilevel, level_volumes, register_tile, EvalOptions, LoopOrder, ParallelCtx};

use crate::model::{Dim, DimVec, Strides};

/// How the number of tiles along a dimension is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TripMode {
    /// `ceil(outer / T)`: partial tiles count as full ones.
    #[default]
    Ceil,
    /// `outer / T`: the smooth form used while tile sizes are continuous.
    Relaxed,
}

/// Everything besides tile sizes that an evaluator needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub strides: Strides,
    pub trips: TripMode,
    /// Cache line size in words; 1 gives element granularity.
    pub line: u64,
}

impl CostParams {
    pub fn new(strides: Strides) -> Self {
        CostParams {
            strides,
            trips: TripMode::Ceil,
            line: 1,
        }
    }

    pub fn relaxed(strides: Strides) -> Self {
        CostParams {
            trips: TripMode::Relaxed,
            ..Self::new(strides)
        }
    }

    pub fn with_line(mut self, line: u64) -> Self {
        self.line = line.max(1);
        self
    }

    pub fn with_trips(mut self, trips: TripMode) -> Self {
        self.trips = trips;
        self
    }
}

impl Default for CostParams {
    fn default() -> Self {
        Self::new(Strides::default())
    }
}

/// `ceil(outer / tile)`, treating quotients within 1e-9 of an integer as exact
/// so that rounding noise in continuous tiles does not add a phantom tile.
pub fn ceil_div(outer: f64, tile: f64) -> f64 {
    let q = outer / tile;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        q.ceil()
    }
}

/// Trip count of every tile loop.
pub fn trip_counts(t: &DimVec, outer: &DimVec, mode: TripMode) -> DimVec {
    DimVec::from_fn(|d| match mode {
        TripMode::Ceil => ceil_div(outer[d], t[d]),
        TripMode::Relaxed => outer[d] / t[d],
    })
}

/// Shapes derived from one tile that all evaluators share.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TileGeom {
    pub tn: f64,
    pub tk: f64,
    pub tc: f64,
    pub tr: f64,
    pub ts: f64,
    pub th: f64,
    pub tw: f64,
    /// Input rows touched by one tile: `σ_h (T_h - 1) + T_r`.
    pub span_h: f64,
    /// Input columns touched by one tile: `σ_w (T_w - 1) + T_s`.
    pub span_w: f64,
    /// New input columns when the `w` tile loop advances.
    pub step_w: f64,
    /// New input rows when the `h` tile loop advances.
    pub step_h: f64,
    /// New input columns when the `s` tile loop advances.
    pub step_s: f64,
    /// New input rows when the `r` tile loop advances.
    pub step_r: f64,
}

impl TileGeom {
    pub fn new(t: &DimVec, strides: Strides) -> Self {
        let (sh, sw) = (strides.h as f64, strides.w as f64);
        let span_h = sh * (t[Dim::H] - 1.0) + t[Dim::R];
        let span_w = sw * (t[Dim::W] - 1.0) + t[Dim::S];
        TileGeom {
            tn: t[Dim::N],
            tk: t[Dim::K],
            tc: t[Dim::C],
            tr: t[Dim::R],
            ts: t[Dim::S],
            th: t[Dim::H],
            tw: t[Dim::W],
            span_h,
            span_w,
            step_w: (sw * t[Dim::W]).min(span_w),
            step_h: (sh * t[Dim::H]).min(span_h),
            step_s: t[Dim::S].min(span_w),
            step_r: t[Dim::R].min(span_h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_div_ignores_rounding_noise() {
        assert_eq!(ceil_div(8.0, 4.0), 2.0);
        assert_eq!(ceil_div(8.0, 3.0), 3.0);
        assert_eq!(ceil_div(8.0, 4.000_000_000_01), 2.0);
        assert_eq!(ceil_div(7.0, 7.0), 1.0);
        assert_eq!(ceil_div(5.0, 1.0), 5.0);
    }
}
