use super::footprint::{geom_footprint, line_words, Tensor};
use super::{trip_counts, CostParams, TileGeom};
use crate::model::{Dim, DimVec, DvBreakdown};
use crate::pruning::ClassId;

use Dim::{C, H, K, N, R, S, W};

/// Closed-form volume of one of the eight pruned classes.
///
/// Written out per class rather than derived from a permutation, so that it
/// can be checked against [`super::dv_general`] on the class representative.
/// The input term uses the collapsed "extended span" form: a full sweep of the
/// partially reused loop touches `span + step * (trips - 1)` rows or columns.
pub fn dv_class(class: ClassId, t: &DimVec, outer: &DimVec, params: &CostParams) -> DvBreakdown {
    let tr = trip_counts(t, outer, params.trips);
    let g = TileGeom::new(t, params.strides);
    let line = |x: f64| line_words(x, params.line, params.trips);
    let prod = |dims: &[Dim]| -> f64 { dims.iter().map(|&d| tr[d]).product() };

    let fp_out = geom_footprint(Tensor::Out, &g, params);
    let fp_ker = geom_footprint(Tensor::Ker, &g, params);
    let all = prod(&Dim::ALL);
    let base = g.tn * g.tc;

    // input words per sweep when the reused loop walks along w (via w or s)
    let sweep_cols = |step: f64, trips: f64| base * g.span_h * (line(g.span_w) + line(step) * (trips - 1.0));
    // ... or along h (via h or r)
    let sweep_rows = |step: f64, trips: f64| base * (g.span_h + step * (trips - 1.0)) * line(g.span_w);

    let (input, output, kernel) = match class {
        ClassId::C1 => (
            prod(&[K, C, R, S, N, H]) * sweep_cols(g.step_w, tr[W]),
            all * fp_out,
            prod(&[K, C, R, S]) * fp_ker,
        ),
        ClassId::C2 => (
            prod(&[K, C, R, S, N, W]) * sweep_rows(g.step_h, tr[H]),
            all * fp_out,
            prod(&[K, C, R, S]) * fp_ker,
        ),
        ClassId::C3 => (
            prod(&[N, K, H, W, C, R]) * sweep_cols(g.step_s, tr[S]),
            prod(&[N, K, H, W]) * fp_out,
            all * fp_ker,
        ),
        ClassId::C4 => (
            prod(&[N, K, H, W, C, S]) * sweep_rows(g.step_r, tr[R]),
            prod(&[N, K, H, W]) * fp_out,
            all * fp_ker,
        ),
        ClassId::C5 => (
            prod(&[N, C, H, R, S]) * sweep_cols(g.step_w, tr[W]),
            all * fp_out,
            all * fp_ker,
        ),
        ClassId::C6 => (
            prod(&[N, C, W, R, S]) * sweep_rows(g.step_h, tr[H]),
            all * fp_out,
            all * fp_ker,
        ),
        ClassId::C7 => (
            prod(&[N, C, H, W, R]) * sweep_cols(g.step_s, tr[S]),
            all * fp_out,
            all * fp_ker,
        ),
        ClassId::C8 => (
            prod(&[N, C, H, W, S]) * sweep_rows(g.step_r, tr[R]),
            all * fp_out,
            all * fp_ker,
        ),
    };
    DvBreakdown {
        input,
        output: 2.0 * output,
        kernel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Strides;

    #[test]
    fn small_worked_instance() {
        let n = DimVec([1.0, 4.0, 2.0, 1.0, 1.0, 4.0, 4.0]);
        let t = DimVec([1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
        let dv = dv_class(ClassId::C1, &t, &n, &CostParams::new(Strides::default()));
        assert_eq!(dv.output, 128.0);
        assert_eq!(dv.input, 64.0);
        assert_eq!(dv.kernel, 8.0);
        assert_eq!(dv.total(), 200.0);
    }
}
