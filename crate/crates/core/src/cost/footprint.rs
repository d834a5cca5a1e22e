use serde::{Deserialize, Serialize};

use super::{CostParams, TileGeom, TripMode};
use crate::model::{Dim, DimVec, Strides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tensor {
    In,
    Out,
    Ker,
}

impl Tensor {
    pub const ALL: [Tensor; 3] = [Tensor::In, Tensor::Out, Tensor::Ker];

    /// Loop iterators that appear in the tensor's subscripts.
    pub fn dims(self) -> &'static [Dim] {
        match self {
            Tensor::Out => &[Dim::N, Dim::K, Dim::H, Dim::W],
            Tensor::Ker => &[Dim::K, Dim::C, Dim::R, Dim::S],
            Tensor::In => &[Dim::N, Dim::C, Dim::H, Dim::W, Dim::R, Dim::S],
        }
    }

    pub fn uses(self, d: Dim) -> bool {
        match self {
            Tensor::Out => !matches!(d, Dim::C | Dim::R | Dim::S),
            Tensor::Ker => !matches!(d, Dim::N | Dim::H | Dim::W),
            Tensor::In => d != Dim::K,
        }
    }
}

/// Words occupied by an extent of `x` elements along the contiguous axis
/// when data moves in lines of `line` words.
///
/// With integer trips this is `ceil(x / L) * L`. In relaxed mode the smooth
/// upper bound `x + L - 1` stands in for it.
pub fn line_words(x: f64, line: u64, mode: TripMode) -> f64 {
    if line <= 1 {
        return x;
    }
    let l = line as f64;
    match mode {
        TripMode::Ceil => super::ceil_div(x, l) * l,
        TripMode::Relaxed => x + l - 1.0,
    }
}

/// Distinct elements of `tensor` touched by one tile.
pub fn footprint(tensor: Tensor, t: &DimVec, strides: Strides) -> f64 {
    footprint_lines(tensor, t, &CostParams::new(strides))
}

/// Footprint with the contiguous axis (`w` for In/Out, `s` for Ker in
/// NCHW/KCRS layouts) rounded to whole lines.
pub fn footprint_lines(tensor: Tensor, t: &DimVec, params: &CostParams) -> f64 {
    let g = TileGeom::new(t, params.strides);
    geom_footprint(tensor, &g, params)
}

pub(crate) fn geom_footprint(tensor: Tensor, g: &TileGeom, params: &CostParams) -> f64 {
    let line = |x: f64| line_words(x, params.line, params.trips);
    match tensor {
        Tensor::Out => g.tn * g.tk * g.th * line(g.tw),
        Tensor::Ker => g.tk * g.tc * g.tr * line(g.ts),
        Tensor::In => g.tn * g.tc * g.span_h * line(g.span_w),
    }
}

/// Left-hand side of the capacity constraint: the summed footprints.
pub fn capacity_lhs(t: &DimVec, strides: Strides) -> f64 {
    capacity_lhs_lines(t, &CostParams::new(strides))
}

pub fn capacity_lhs_lines(t: &DimVec, params: &CostParams) -> f64 {
    let g = TileGeom::new(t, params.strides);
    Tensor::ALL
        .iter()
        .map(|&a| geom_footprint(a, &g, params))
        .sum()
}
