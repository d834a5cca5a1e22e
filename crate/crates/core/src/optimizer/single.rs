use crate::cost::{capacity_lhs_lines, dv_class, CostParams, TripMode};
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec, DvBreakdown, ProblemSpec};
use crate::nlp::{minimize, NlpOptions, NlpProblem};
use crate::pruning::ClassId;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleLevel {
    /// Continuous optimum.
    pub tiles: DimVec,
    /// Volume at `tiles` with fractional trip counts.
    pub dv: DvBreakdown,
}

/// Minimizes one class's volume under a single capacity constraint.
pub fn optimize_single_level(
    class: ClassId,
    problem: &ProblemSpec,
    capacity: f64,
    line: u64,
    opts: &NlpOptions,
) -> Result<SingleLevel> {
    let params = CostParams::new(problem.strides)
        .with_line(line)
        .with_trips(TripMode::Relaxed);
    let n = problem.extents();
    if capacity_lhs_lines(&DimVec::ONES, &params) > capacity {
        return Err(Error::Infeasible(format!(
            "unit tile does not fit capacity {capacity}"
        )));
    }
    if capacity_lhs_lines(&n, &params) <= capacity {
        return Ok(SingleLevel {
            tiles: n,
            dv: dv_class(class, &n, &n, &params),
        });
    }
    let free: Vec<Dim> = Dim::ALL.into_iter().filter(|&d| n[d] > 1.0).collect();
    let expand = |x: &[f64]| {
        let mut t = DimVec::ONES;
        for (&d, &v) in free.iter().zip(x) {
            t[d] = v;
        }
        t
    };
    let eval = |x: &[f64], g: &mut [f64]| {
        let t = expand(x);
        g[0] = capacity_lhs_lines(&t, &params).ln() - capacity.ln();
        dv_class(class, &t, &n, &params).total().ln()
    };
    let bounds = free.iter().map(|&d| (1.0, n[d])).collect();
    let mut p = NlpProblem::new(bounds, 1, &eval);
    p.initial.push(vec![1.0; free.len()]);
    let r = minimize(&p, opts)?;
    if !r.feasible {
        return Err(Error::Infeasible(format!(
            "no tile satisfies capacity {capacity} (violation {:.3e})",
            r.max_violation
        )));
    }
    let tiles = expand(&r.x);
    Ok(SingleLevel {
        tiles,
        dv: dv_class(class, &tiles, &n, &params),
    })
}
