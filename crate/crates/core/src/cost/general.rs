use super::footprint::{geom_footprint, line_words, Tensor};
use super::{trip_counts, CostParams, TileGeom};
use crate::model::{Dim, DimVec, DvBreakdown, Permutation};

/// Order-independent quantities of one `(T, outer)` pair, so that many
/// permutations can be evaluated on the same tile cheaply.
#[derive(Debug, Clone, Copy)]
pub struct PreparedTile {
    trips: DimVec,
    fp: [f64; 3],
    /// New input words per extra iteration of `w, h, s, r`, indexed by dim.
    partial: DimVec,
}

impl PreparedTile {
    pub fn new(t: &DimVec, outer: &DimVec, params: &CostParams) -> Self {
        let trips = trip_counts(t, outer, params.trips);
        let g = TileGeom::new(t, params.strides);
        let fp = Tensor::ALL.map(|a| geom_footprint(a, &g, params));
        let line = |x: f64| line_words(x, params.line, params.trips);
        let base = g.tn * g.tc;
        let mut partial = DimVec::default();
        partial[Dim::W] = base * g.span_h * line(g.step_w);
        partial[Dim::S] = base * g.span_h * line(g.step_s);
        partial[Dim::H] = base * g.step_h * line(g.span_w);
        partial[Dim::R] = base * g.step_r * line(g.span_w);
        PreparedTile { trips, fp, partial }
    }

    /// See [`dv_general`].
    pub fn dv(&self, perm: &Permutation) -> DvBreakdown {
        let inner = perm.inner_to_outer();
        let trips = &self.trips;
        let mut out = DvBreakdown::default();
        for (ti, tensor) in Tensor::ALL.into_iter().enumerate() {
            let r = inner.iter().position(|&d| tensor.uses(d)).unwrap();
            let fp = self.fp[ti];
            let reuse_dim = inner[r];
            let partial_case = tensor == Tensor::In
                && matches!(reuse_dim, Dim::W | Dim::H | Dim::S | Dim::R);
            let v = if partial_case {
                let above: f64 = inner[r + 1..].iter().map(|&d| trips[d]).product();
                // first tile of each sweep in full, then only the new slice
                above * (fp + self.partial[reuse_dim] * (trips[reuse_dim] - 1.0))
            } else {
                let from_r: f64 = inner[r..].iter().map(|&d| trips[d]).product();
                from_r * fp
            };
            match tensor {
                Tensor::In => out.input = v,
                Tensor::Ker => out.kernel = v,
                // written back as well as read
                Tensor::Out => out.output = 2.0 * v,
            }
        }
        out
    }
}

/// Data volume of an arbitrary tile-loop order.
///
/// For each tensor, `R` is the innermost loop whose iterator indexes it.
/// Loops inside `R` leave the tile resident, so the tensor is reloaded once
/// per iteration of `R` and everything outside it. The exception is `In`
/// when `R` is a spatial or kernel loop (`w, h, s, r`): consecutive tiles
/// along that loop overlap, so only the non-overlapping slice is fetched
/// after the first tile of each sweep.
pub fn dv_general(perm: &Permutation, t: &DimVec, outer: &DimVec, params: &CostParams) -> DvBreakdown {
    PreparedTile::new(t, outer, params).dv(perm)
}
